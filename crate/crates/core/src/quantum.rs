//! Dense statevector engine for the alternating cost / biased-mixer circuit.
//!
//! Basis index `z` encodes an assignment with bit `j` of `z` giving variable
//! `j`; bit value 0 is the `|0>` state (Z eigenvalue +1, variable false).
//!
//! The biased mixer on qubit `j` is `B_j = (X - h_j Z) / sqrt(1 + h_j^2)`,
//! which squares to the identity, so `exp(-i beta B_j) = cos(beta) I - i
//! sin(beta) B_j` and the whole mixer factorizes into single-qubit gates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sat::Formula;

pub type C64 = Complex64;

/// Largest register the statevector engine accepts.
pub const ENGINE_CAP: usize = 24;
/// Largest register for which explicit step unitaries are built.
pub const DENSE_CAP: usize = 12;
/// Allowed drift of the squared norm before evolution reports an engine fault.
pub const NORM_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Diagonal of the cost Hamiltonian in the computational basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostDiagonal {
    n: usize,
    energies: Vec<u32>,
    max_energy: u32,
}

impl CostDiagonal {
    pub fn from_energies(n: usize, energies: Vec<u32>) -> Result<Self> {
        if energies.len() != 1 << n {
            return Err(Error::Dimension { expected: 1 << n, got: energies.len() });
        }
        let max_energy = energies.iter().copied().max().unwrap_or(0);
        Ok(Self { n, energies, max_energy })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn energies(&self) -> &[u32] {
        &self.energies
    }

    pub fn min(&self) -> u32 {
        self.energies.iter().copied().min().unwrap_or(0)
    }

    pub fn max(&self) -> u32 {
        self.max_energy
    }

    /// Returns a copy with every energy multiplied by `k`.
    pub fn scaled(&self, k: u32) -> Self {
        Self::from_energies(self.n, self.energies.iter().map(|e| e * k).collect()).unwrap()
    }

    /// `exp(-i gamma e)` for every energy value `e` in `0..=max`.
    fn phase_table(&self, gamma: f64) -> Vec<C64> {
        (0..=self.max_energy)
            .map(|e| C64::cis(-gamma * f64::from(e)))
            .collect()
    }
}

/// Evaluates `1/4 sum_a (Z_a1 + Z_a2 + Z_a3 - 1)^2` on every basis state.
pub fn build_cost_diagonal(f: &Formula) -> Result<CostDiagonal> {
    let n = f.n();
    if n > ENGINE_CAP {
        return Err(Error::SizeCap { what: "statevector engine", n, cap: ENGINE_CAP });
    }
    let clauses = f.clauses();
    let energies = (0..1usize << n)
        .map(|z| {
            let four_e: i32 = clauses
                .iter()
                .map(|c| {
                    let s: i32 = c.iter().map(|&v| if (z >> v) & 1 == 0 { 1 } else { -1 }).sum();
                    (s - 1) * (s - 1)
                })
                .sum();
            debug_assert_eq!(four_e % 4, 0);
            (four_e / 4) as u32
        })
        .collect();
    CostDiagonal::from_energies(n, energies)
}

/// Longitudinal bias fields, one per qubit. All zeros gives the plain
/// transverse-field mixer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BiasFields(Vec<f64>);

impl BiasFields {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if let Some(x) = h.iter().find(|x| !x.is_finite()) {
            return Err(Error::Config(format!("non-finite bias field {x}")));
        }
        Ok(Self(h))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

/// Angle vectors of a depth-`p` circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Schedule {
    pub fn new(gamma: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if gamma.len() != beta.len() {
            return Err(Error::Dimension { expected: gamma.len(), got: beta.len() });
        }
        Ok(Self { gamma, beta })
    }

    pub fn empty() -> Self {
        Self { gamma: Vec::new(), beta: Vec::new() }
    }

    /// Linear annealing ramp: `gamma_k = (k-1)/p dt`, `beta_k = (1 - (k-1)/p) dt`.
    pub fn linear_ramp(p: usize, dt: f64) -> Self {
        let gamma = (0..p).map(|k| k as f64 / p as f64 * dt).collect();
        let beta = (0..p).map(|k| (1.0 - k as f64 / p as f64) * dt).collect();
        Self { gamma, beta }
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    /// Wraps gamma into [0, 2pi) and beta into [0, pi).
    pub fn canonicalize(&mut self) {
        for g in &mut self.gamma {
            *g = wrap(*g, 2.0 * PI);
        }
        for b in &mut self.beta {
            *b = wrap(*b, PI);
        }
    }

    /// Flattened parameter vector `(gamma_1..gamma_p, beta_1..beta_p)`.
    pub fn to_params(&self) -> Vec<f64> {
        self.gamma.iter().chain(&self.beta).copied().collect()
    }

    pub fn from_params(params: &[f64]) -> Self {
        let p = params.len() / 2;
        Self { gamma: params[..p].to_vec(), beta: params[p..].to_vec() }
    }
}

fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    // rem_euclid can return `period` itself for tiny negative inputs
    if r >= period {
        0.0
    } else {
        r
    }
}

/// `d_j = atan(h_j)`, so `cos d_j = 1/sqrt(1+h_j^2)` and `sin d_j = h_j/sqrt(1+h_j^2)`.
pub fn rotation_angles(h: &BiasFields) -> Vec<f64> {
    h.as_slice().iter().map(|x| x.atan()).collect()
}

/// Single-qubit gate stored row-major.
pub type Gate = [[C64; 2]; 2];

/// `exp(-i beta B)` with `B = cos(d) X - sin(d) Z`.
pub fn mixer_gate(beta: f64, d: f64) -> Gate {
    let (sb, cb) = beta.sin_cos();
    let (sd, cd) = d.sin_cos();
    [
        [C64::new(cb, sb * sd), C64::new(0.0, -sb * cd)],
        [C64::new(0.0, -sb * cd), C64::new(cb, -sb * sd)],
    ]
}

fn adjoint_gate(g: &Gate) -> Gate {
    [[g[0][0].conj(), g[1][0].conj()], [g[0][1].conj(), g[1][1].conj()]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(Error::Dimension { expected: 1 << n, got: amps.len() });
        }
        Ok(Self { n, amps })
    }

    pub fn basis(n: usize, z: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[z] = ONE;
        Self { n, amps }
    }

    pub fn uniform(n: usize) -> Self {
        let a = C64::new((1u64 << n) as f64, 0.0).sqrt().inv();
        Self { n, amps: vec![a; 1 << n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amps.iter().map(|a| a.norm_sqr())
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::Dimension { expected: 1 << self.n, got: 1 << n });
        }
        Ok(())
    }

    /// Multiplies amplitude `z` by `exp(-i gamma E_z)`.
    pub fn apply_cost_phase(&mut self, gamma: f64, c: &CostDiagonal) -> Result<()> {
        self.check_dim(c.n())?;
        let table = c.phase_table(gamma);
        for (a, &e) in self.amps.iter_mut().zip(c.energies()) {
            *a *= table[e as usize];
        }
        Ok(())
    }

    /// Multiplies amplitude `z` by `E_z`.
    pub fn apply_cost_diagonal(&mut self, c: &CostDiagonal) -> Result<()> {
        self.check_dim(c.n())?;
        for (a, &e) in self.amps.iter_mut().zip(c.energies()) {
            *a *= f64::from(e);
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, j: usize, g: &Gate) -> Result<()> {
        if j >= self.n {
            return Err(Error::QubitIndex { index: j, n: self.n });
        }
        let stride = 1usize << j;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = g[0][0] * x + g[0][1] * y;
                *a1 = g[1][0] * x + g[1][1] * y;
            }
        }
        Ok(())
    }

    /// Applies `exp(-i beta H_M(h))` as one gate per qubit.
    pub fn apply_mixer(&mut self, beta: f64, h: &BiasFields) -> Result<()> {
        self.apply_mixer_with_angles(beta, &rotation_angles(h))
    }

    fn apply_mixer_with_angles(&mut self, beta: f64, d: &[f64]) -> Result<()> {
        if d.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: d.len() });
        }
        for (j, &dj) in d.iter().enumerate() {
            self.apply_gate(j, &mixer_gate(beta, dj))?;
        }
        Ok(())
    }

    /// Returns `H_M(h) |self>` (the mixer Hamiltonian, not its exponential).
    pub fn mixer_hamiltonian_apply(&self, h: &BiasFields) -> Result<Self> {
        if h.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: h.len() });
        }
        let mut out = vec![ZERO; self.dim()];
        for (j, dj) in rotation_angles(h).into_iter().enumerate() {
            let (sd, cd) = dj.sin_cos();
            let bit = 1usize << j;
            for (z, o) in out.iter_mut().enumerate() {
                let sign = if z & bit == 0 { -sd } else { sd };
                *o += self.amps[z ^ bit] * cd + self.amps[z] * sign;
            }
        }
        Ok(Self { n: self.n, amps: out })
    }

    pub fn expectation_energy(&self, c: &CostDiagonal) -> f64 {
        self.amps
            .iter()
            .zip(c.energies())
            .map(|(a, &e)| a.norm_sqr() * f64::from(e))
            .sum()
    }

    pub fn expectation_z(&self, j: usize) -> Result<f64> {
        if j >= self.n {
            return Err(Error::QubitIndex { index: j, n: self.n });
        }
        let bit = 1usize << j;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(z, a)| if z & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// `<Z_j>` for every qubit in one pass.
    pub fn expectation_z_all(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n];
        for (z, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (j, s) in acc.iter_mut().enumerate() {
                if (z >> j) & 1 == 0 {
                    *s += p;
                } else {
                    *s -= p;
                }
            }
        }
        acc
    }
}

/// The ground state of `H_M(h)`: the product of `R_y(d_j) |->` over qubits.
pub fn prepare_initial_state(h: &BiasFields) -> StateVector {
    let n = h.len();
    let mut amps = Vec::with_capacity(1 << n);
    amps.push(ONE);
    for d in rotation_angles(h) {
        let (s, c) = (d / 2.0).sin_cos();
        let a0 = (c + s) * std::f64::consts::FRAC_1_SQRT_2;
        let a1 = -(c - s) * std::f64::consts::FRAC_1_SQRT_2;
        let len = amps.len();
        amps.extend_from_within(..);
        for a in &mut amps[..len] {
            *a *= a0;
        }
        for a in &mut amps[len..] {
            *a *= a1;
        }
    }
    StateVector { n, amps }
}

fn check_norm(psi: &StateVector, layer: usize) -> Result<()> {
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NormDrift { layer, norm });
    }
    Ok(())
}

/// Applies `exp(-i beta_k H_M) exp(-i gamma_k H_C)` for k = 1..p.
pub fn evolve(
    psi0: &StateVector,
    s: &Schedule,
    h: &BiasFields,
    c: &CostDiagonal,
) -> Result<StateVector> {
    let mut psi = psi0.clone();
    evolve_in_place(&mut psi, s, h, c, |_, _| {})?;
    Ok(psi)
}

/// Evolves `psi` in place, calling `visit(k, state)` on the initial state
/// (k = 0) and after each step.
pub fn evolve_in_place(
    psi: &mut StateVector,
    s: &Schedule,
    h: &BiasFields,
    c: &CostDiagonal,
    mut visit: impl FnMut(usize, &StateVector),
) -> Result<()> {
    psi.check_dim(c.n())?;
    let d = rotation_angles(h);
    visit(0, psi);
    for (k, (&g, &b)) in s.gamma.iter().zip(&s.beta).enumerate() {
        psi.apply_cost_phase(g, c)?;
        psi.apply_mixer_with_angles(b, &d)?;
        check_norm(psi, k + 1)?;
        visit(k + 1, psi);
    }
    Ok(())
}

/// Prepares the `h`-dependent initial state and evolves it.
pub fn output_state(s: &Schedule, h: &BiasFields, c: &CostDiagonal) -> Result<StateVector> {
    let mut psi = prepare_initial_state(h);
    evolve_in_place(&mut psi, s, h, c, |_, _| {})?;
    Ok(psi)
}

/// Exact gradient of `<H_C>` with respect to `(gamma, beta)` at fixed `h`,
/// by back-propagating the adjoint state through the circuit. Also returns
/// the circuit output state.
pub fn energy_gradient_adjoint(
    s: &Schedule,
    h: &BiasFields,
    c: &CostDiagonal,
) -> Result<(StateVector, Vec<f64>)> {
    let p = s.p();
    let d = rotation_angles(h);
    let out = output_state(s, h, c)?;
    let mut phi = out.clone();
    let mut lambda = phi.clone();
    lambda.apply_cost_diagonal(c)?;
    let mut grad = vec![0.0; 2 * p];
    for k in (0..p).rev() {
        let hm = phi.mixer_hamiltonian_apply(h)?;
        grad[p + k] = 2.0 * lambda.inner(&hm).im;
        for (j, &dj) in d.iter().enumerate() {
            let g = adjoint_gate(&mixer_gate(s.beta[k], dj));
            phi.apply_gate(j, &g)?;
            lambda.apply_gate(j, &g)?;
        }
        let mut hc = phi.clone();
        hc.apply_cost_diagonal(c)?;
        grad[k] = 2.0 * lambda.inner(&hc).im;
        phi.apply_cost_phase(-s.gamma[k], c)?;
        lambda.apply_cost_phase(-s.gamma[k], c)?;
    }
    Ok((out, grad))
}

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Self { dim, data }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Self { dim: n, data }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Explicit `U_k = exp(-i beta H_M(h)) exp(-i gamma H_C)`.
pub fn build_step_unitary(
    gamma: f64,
    beta: f64,
    h: &BiasFields,
    c: &CostDiagonal,
) -> Result<DenseMatrix> {
    let n = c.n();
    if n > DENSE_CAP {
        return Err(Error::SizeCap { what: "dense step unitary", n, cap: DENSE_CAP });
    }
    if h.len() != n {
        return Err(Error::Dimension { expected: n, got: h.len() });
    }
    let dim = 1usize << n;
    let d = rotation_angles(h);
    let mut data = vec![ZERO; dim * dim];
    // column z of U is U|z>
    for z in 0..dim {
        let mut col = StateVector::basis(n, z);
        col.apply_cost_phase(gamma, c)?;
        col.apply_mixer_with_angles(beta, &d)?;
        for (i, a) in col.amps.into_iter().enumerate() {
            data[i * dim + z] = a;
        }
    }
    Ok(DenseMatrix { dim, data })
}
