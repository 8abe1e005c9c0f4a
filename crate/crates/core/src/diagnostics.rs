//! Observables of output and intermediate states: residual energy,
//! infidelity, bipartition-averaged entanglement entropy, participation
//! ratio, annealing entropy, and ensemble success rates.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{self, CostDiagonal, DenseMatrix, StateVector, C64, DENSE_CAP};
use crate::sat::GroundSolution;
use crate::variational::{RunRecord, Verdict};

/// Largest register for the bipartition average.
pub const ENTANGLEMENT_CAP: usize = 14;
/// Eigenphases closer than this (radians) share an eigenspace.
pub const PHASE_TOL: f64 = 1e-8;
pub const DEFAULT_ETAS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

fn sequential_linalg() {
    // keeps eigen-solver results independent of the thread count
    faer::set_global_parallelism(faer::Par::Seq);
}

/// `<H_C> - E_g`.
pub fn residual_energy(energy: f64, ground: &GroundSolution) -> f64 {
    energy - f64::from(ground.energy)
}

/// One minus the total probability on the ground basis states.
pub fn infidelity(psi: &StateVector, ground_indices: &[u64]) -> f64 {
    1.0 - ground_weight(psi, ground_indices)
}

pub fn ground_weight(psi: &StateVector, ground_indices: &[u64]) -> f64 {
    let amps = psi.amplitudes();
    ground_indices.iter().map(|&z| amps[z as usize].norm_sqr()).sum()
}

/// `1 / sum_z |psi_z|^4`.
pub fn participation_ratio(psi: &StateVector) -> f64 {
    1.0 / psi.probabilities().map(|p| p * p).sum::<f64>()
}

fn shannon_bits(weights: impl IntoIterator<Item = f64>) -> f64 {
    weights
        .into_iter()
        .filter(|&w| w > 0.0)
        .map(|w| -w * w.log2())
        .sum::<f64>()
        .max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartitionAverage {
    /// Mean entropy over all unordered bipartitions.
    pub mean: f64,
    /// Mean entropy per smaller-side size `a = 1..=n/2` (index `a - 1`).
    pub by_size: Vec<f64>,
    pub bipartitions: usize,
}

/// Mean of `min(|A|, n - |A|)` over all unordered bipartitions: the largest
/// value the bipartition-averaged entropy can take.
pub fn max_average_entropy(n: usize) -> f64 {
    let (sum, count) = half_masks(n).fold((0usize, 0usize), |(s, c), m| (s + m.count_ones() as usize, c + 1));
    sum as f64 / count as f64
}

/// Subsets `A` with `|A| <= n/2`, one per complementary pair.
fn half_masks(n: usize) -> impl Iterator<Item = usize> {
    let top = if n == 0 { 0 } else { 1usize << (n - 1) };
    (1usize..(1usize << n)).filter(move |&m| {
        let a = m.count_ones() as usize;
        2 * a < n || (2 * a == n && m & top == 0)
    })
}

/// Von Neumann entropy (bits) of the reduced state on the qubits in `mask`.
pub fn subsystem_entropy(psi: &StateVector, mask: usize) -> f64 {
    let n = psi.n();
    let inside: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
    let outside: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 0).collect();
    let (small, large) = if inside.len() <= outside.len() { (inside, outside) } else { (outside, inside) };
    let rows = 1usize << small.len();
    let cols = 1usize << large.len();
    let gather = |z: usize, pos: &[usize]| pos.iter().enumerate().fold(0usize, |acc, (i, &q)| acc | ((z >> q & 1) << i));
    let mut m = vec![C64::new(0.0, 0.0); rows * cols];
    for (z, &a) in psi.amplitudes().iter().enumerate() {
        m[gather(z, &small) * cols + gather(z, &large)] = a;
    }
    let rho = Mat::<C64>::from_fn(rows, rows, |r1, r2| {
        let a = &m[r1 * cols..(r1 + 1) * cols];
        let b = &m[r2 * cols..(r2 + 1) * cols];
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    });
    let eig = rho.self_adjoint_eigenvalues(Side::Lower).expect("hermitian eigenvalues converge");
    shannon_bits(eig)
}

/// Entanglement entropy averaged over all `2^(n-1) - 1` bipartitions.
pub fn entanglement_entropy_avg(psi: &StateVector) -> Result<BipartitionAverage> {
    let n = psi.n();
    if n > ENTANGLEMENT_CAP {
        return Err(Error::SizeCap { what: "bipartition entropy", n, cap: ENTANGLEMENT_CAP });
    }
    if n < 2 {
        return Ok(BipartitionAverage { mean: 0.0, by_size: Vec::new(), bipartitions: 0 });
    }
    sequential_linalg();
    let mut sums = vec![0.0; n / 2];
    let mut counts = vec![0usize; n / 2];
    for mask in half_masks(n) {
        let a = mask.count_ones() as usize;
        sums[a - 1] += subsystem_entropy(psi, mask);
        counts[a - 1] += 1;
    }
    let total: usize = counts.iter().sum();
    let mean = sums.iter().sum::<f64>() / total as f64;
    let by_size = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    Ok(BipartitionAverage { mean, by_size, bipartitions: total })
}

/// Orthonormal eigenbasis of a unitary with its eigenphases, `U w = e^{-i theta} w`.
pub struct UnitaryEigenbasis {
    vectors: Mat<C64>,
    phases: Vec<f64>,
}

impl UnitaryEigenbasis {
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Squared projection of `psi` onto each eigenspace, grouping phases
    /// closer than `phase_tol` (circularly).
    pub fn eigenspace_weights(&self, psi: &StateVector, phase_tol: f64) -> Vec<f64> {
        let dim = psi.dim();
        let amps = psi.amplitudes();
        let coeff: Vec<f64> = (0..dim)
            .map(|i| {
                let col = self.vectors.col(i);
                (0..dim).map(|r| col[r].conj() * amps[r]).sum::<C64>().norm_sqr()
            })
            .collect();
        group_by_phase(&self.phases, phase_tol)
            .into_iter()
            .map(|g| g.iter().map(|&i| coeff[i]).sum())
            .collect()
    }
}

fn group_by_phase(phases: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut order: Vec<usize> = (0..phases.len()).collect();
    let wrapped: Vec<f64> = phases.iter().map(|t| t.rem_euclid(two_pi)).collect();
    order.sort_by(|&a, &b| wrapped[a].total_cmp(&wrapped[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if wrapped[i] - wrapped[*g.last().unwrap()] <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    // merge across the 0 / 2pi seam
    if groups.len() > 1 {
        let first = wrapped[groups[0][0]];
        let last = wrapped[*groups.last().unwrap().last().unwrap()];
        if first + two_pi - last <= tol {
            let tail = groups.pop().unwrap();
            groups[0].extend(tail);
        }
    }
    groups
}

fn to_faer(u: &DenseMatrix) -> Mat<C64> {
    Mat::from_fn(u.dim(), u.dim(), |i, j| u.get(i, j))
}

/// Diagonalizes a unitary through its Hermitian parts: `K = (U + U^dag)/2`
/// fixes `cos(theta)`, and within each near-degenerate `K` eigenspace
/// `S = (U - U^dag)/2i` separates `theta` from `-theta`.
pub fn unitary_eigenbasis(u: &DenseMatrix, phase_tol: f64) -> Result<UnitaryEigenbasis> {
    sequential_linalg();
    let dim = u.dim();
    let uf = to_faer(u);
    let k = Mat::<C64>::from_fn(dim, dim, |i, j| (uf[(i, j)] + uf[(j, i)].conj()) * 0.5);
    let s = Mat::<C64>::from_fn(dim, dim, |i, j| (uf[(i, j)] - uf[(j, i)].conj()) * C64::new(0.0, -0.5));
    let eig = k
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Config(format!("eigendecomposition failed: {e:?}")))?;
    let cosines: Vec<f64> = (0..dim).map(|i| eig.S().column_vector()[i].re).collect();
    let mut vectors = eig.U().to_owned();

    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && cosines[end] - cosines[end - 1] <= phase_tol {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.subcols(start, end - start).to_owned();
            let projected = block.adjoint() * &s * &block;
            let sub = projected
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Config(format!("eigendecomposition failed: {e:?}")))?;
            let refined = &block * sub.U();
            vectors.subcols_mut(start, end - start).copy_from(&refined);
        }
        start = end;
    }

    let uv = &uf * &vectors;
    let phases = (0..dim)
        .map(|i| {
            let lambda: C64 = (0..dim).map(|r| vectors[(r, i)].conj() * uv[(r, i)]).sum();
            -lambda.arg()
        })
        .collect();
    Ok(UnitaryEigenbasis { vectors, phases })
}

/// Shannon entropy (bits) of `psi`'s weights over the eigenspaces of `u`.
pub fn annealing_entropy(psi: &StateVector, u: &DenseMatrix, phase_tol: f64) -> Result<f64> {
    let n = psi.n();
    if n > DENSE_CAP {
        return Err(Error::SizeCap { what: "annealing entropy", n, cap: DENSE_CAP });
    }
    if u.dim() != psi.dim() {
        return Err(Error::Dimension { expected: psi.dim(), got: u.dim() });
    }
    let basis = unitary_eigenbasis(u, phase_tol)?;
    Ok(shannon_bits(basis.eigenspace_weights(psi, phase_tol)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    EntanglementEntropy,
    ParticipationRatio,
    AnnealingEntropy,
    Infidelity,
    ResidualEnergy,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::EntanglementEntropy,
        Metric::ParticipationRatio,
        Metric::AnnealingEntropy,
        Metric::Infidelity,
        Metric::ResidualEnergy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::EntanglementEntropy => "entanglement_entropy",
            Metric::ParticipationRatio => "participation_ratio",
            Metric::AnnealingEntropy => "annealing_entropy",
            Metric::Infidelity => "infidelity",
            Metric::ResidualEnergy => "residual_energy",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}

/// One metric along the circuit (`values[k]` after `k` steps) at one
/// optimization fraction `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    pub metric: Metric,
    pub eta: f64,
    pub iteration: usize,
    pub values: Vec<f64>,
}

/// Replays the circuit of the snapshot at each `eta` and evaluates each
/// metric on every intermediate state `k = 0..=p`.
///
/// The annealing entropy at `k` uses `U_k`; at `k = 0` it uses `U_1`, where
/// it coincides with the `k = 1` value since `psi_1 = U_1 psi_0`.
pub fn trajectory_diagnostics(
    c: &CostDiagonal,
    ground: &GroundSolution,
    record: &RunRecord,
    etas: &[f64],
    metrics: &[Metric],
) -> Result<Vec<DiagnosticSeries>> {
    let mut out = Vec::with_capacity(etas.len() * metrics.len());
    for &eta in etas {
        let iteration = crate::variational::eta_iteration(eta, record.n_con);
        let snap = record.snapshot_at_eta(eta)?;
        let (s, h) = (&snap.schedule, &snap.h);
        let mut states = Vec::with_capacity(s.p() + 1);
        let mut psi = quantum::prepare_initial_state(h);
        quantum::evolve_in_place(&mut psi, s, h, c, |_, st| states.push(st.clone()))?;

        for &metric in metrics {
            let values = match metric {
                Metric::EntanglementEntropy => {
                    states.iter().map(|st| entanglement_entropy_avg(st).map(|b| b.mean)).collect::<Result<Vec<_>>>()?
                }
                Metric::ParticipationRatio => states.iter().map(participation_ratio).collect(),
                Metric::Infidelity => states.iter().map(|st| infidelity(st, &ground.ground_indices)).collect(),
                Metric::ResidualEnergy => {
                    states.iter().map(|st| residual_energy(st.expectation_energy(c), ground)).collect()
                }
                Metric::AnnealingEntropy => {
                    let mut v = Vec::with_capacity(states.len());
                    for k in 1..=s.p() {
                        let u = quantum::build_step_unitary(s.gamma[k - 1], s.beta[k - 1], h, c)?;
                        v.push(annealing_entropy(&states[k], &u, PHASE_TOL)?);
                    }
                    let first = v.first().copied().unwrap_or(0.0);
                    std::iter::once(first).chain(v).collect()
                }
            };
            out.push(DiagnosticSeries { metric, eta, iteration, values });
        }
    }
    Ok(out)
}

/// Fraction of instances where the verdict matches the true answer.
pub fn success_probability(verdicts: &[Verdict], truths: &[bool]) -> Result<f64> {
    if verdicts.len() != truths.len() {
        return Err(Error::Dimension { expected: truths.len(), got: verdicts.len() });
    }
    if truths.is_empty() {
        return Err(Error::Config("success probability of an empty ensemble".into()));
    }
    let hits = verdicts.iter().zip(truths).filter(|(v, &t)| **v == Verdict::from_bool(t)).count();
    Ok(hits as f64 / truths.len() as f64)
}

/// Fraction of SAT instances; `None` for an empty ensemble.
pub fn sat_probability(truths: &[bool]) -> Option<f64> {
    if truths.is_empty() {
        None
    } else {
        Some(truths.iter().filter(|&&t| t).count() as f64 / truths.len() as f64)
    }
}
