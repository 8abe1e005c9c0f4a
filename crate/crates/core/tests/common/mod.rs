//! Dense-matrix reference implementations built from Pauli Kronecker
//! products. Slow and simple on purpose; only for n <= 10.

#![allow(dead_code)]

use abqaoa::sat::Formula;
use faer::{Mat, Side};
use num_complex::Complex64 as C;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub const X: [[C; 2]; 2] = [[C::new(0.0, 0.0), C::new(1.0, 0.0)], [C::new(1.0, 0.0), C::new(0.0, 0.0)]];
pub const Z: [[C; 2]; 2] = [[C::new(1.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(-1.0, 0.0)]];

/// Single-qubit operator on qubit `j` (bit `j` of the basis index).
pub fn on_qubit(n: usize, j: usize, op: [[C; 2]; 2]) -> Mat<C> {
    let dim = 1usize << n;
    Mat::from_fn(dim, dim, |r, col| {
        if (r ^ col) & !(1 << j) != 0 {
            c(0.0, 0.0)
        } else {
            op[r >> j & 1][col >> j & 1]
        }
    })
}

pub fn scaled(m: &Mat<C>, k: f64) -> Mat<C> {
    Mat::from_fn(m.nrows(), m.ncols(), |r, col| m[(r, col)] * k)
}

pub fn identity(n: usize) -> Mat<C> {
    let dim = 1usize << n;
    Mat::from_fn(dim, dim, |r, col| if r == col { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// `sum_j (X_j - h_j Z_j) / sqrt(1 + h_j^2)`.
pub fn mixer_hamiltonian(h: &[f64]) -> Mat<C> {
    let n = h.len();
    let mut m = Mat::<C>::zeros(1 << n, 1 << n);
    for (j, &hj) in h.iter().enumerate() {
        let s = 1.0 / (1.0 + hj * hj).sqrt();
        m += scaled(&on_qubit(n, j, X), s) - scaled(&on_qubit(n, j, Z), hj * s);
    }
    m
}

/// `1/4 sum_clauses (Z_a + Z_b + Z_c - 1)^2`.
pub fn cost_hamiltonian(f: &Formula) -> Mat<C> {
    let n = f.n();
    let mut m = Mat::<C>::zeros(1 << n, 1 << n);
    for cl in f.clauses() {
        let t = on_qubit(n, cl[0], Z) + on_qubit(n, cl[1], Z) + on_qubit(n, cl[2], Z) - identity(n);
        m += scaled(&(&t * &t), 0.25);
    }
    m
}

pub fn diagonal(e: &[f64]) -> Mat<C> {
    Mat::from_fn(e.len(), e.len(), |r, col| if r == col { c(e[r], 0.0) } else { c(0.0, 0.0) })
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn expm_i(hm: &Mat<C>, t: f64) -> Mat<C> {
    let eig = hm.self_adjoint_eigen(Side::Lower).unwrap();
    let u = eig.U();
    let s = eig.S().column_vector();
    let dim = hm.nrows();
    let phased = Mat::from_fn(dim, dim, |r, k| u[(r, k)] * C::cis(-t * s[k].re));
    &phased * u.adjoint()
}

/// Eigenvector of the lowest eigenvalue.
pub fn ground_state(hm: &Mat<C>) -> Vec<C> {
    let eig = hm.self_adjoint_eigen(Side::Lower).unwrap();
    let u = eig.U();
    (0..hm.nrows()).map(|r| u[(r, 0)]).collect()
}

pub fn mat_vec(m: &Mat<C>, v: &[C]) -> Vec<C> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| m[(r, k)] * v[k]).sum()).collect()
}

pub fn expectation(m: &Mat<C>, v: &[C]) -> f64 {
    let mv = mat_vec(m, v);
    v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum::<C>().re
}

/// Max amplitude difference after removing the relative global phase.
pub fn diff_up_to_phase(a: &[C], b: &[C]) -> f64 {
    let ov: C = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let ph = if ov.norm() > 0.0 { ov / ov.norm() } else { c(1.0, 0.0) };
    a.iter().zip(b).map(|(x, y)| (x * ph - y).norm()).fold(0.0, f64::max)
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
