//! Starting points for the R parallel optimizations of one level.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::quantum::{BiasFields, Schedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitPoint {
    pub schedule: Schedule,
    pub h: BiasFields,
}

impl InitPoint {
    pub fn p(&self) -> usize {
        self.schedule.p()
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    /// Same angles with all bias fields set to zero.
    pub fn unbiased(&self) -> Self {
        Self { schedule: self.schedule.clone(), h: BiasFields::zeros(self.h.len()) }
    }
}

/// `xi * Normal(0, u^2)`; exactly zero when `u == 0`.
pub fn perturbation<R: Rng + ?Sized>(u: f64, xi: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    xi * u.abs() * z
}

pub fn random_signs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BiasFields {
    BiasFields::new((0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect())
        .expect("signs are finite")
}

/// Linear-ramp start plus `samples - 1` Gaussian perturbations of it, each
/// with fresh +-1 bias fields. Points are drawn in sample order, so a
/// shorter request is a prefix of a longer one on the same stream.
pub fn tqa_init<R: Rng + ?Sized>(
    p: usize,
    samples: usize,
    dt: f64,
    xi: f64,
    n: usize,
    rng: &mut R,
) -> Vec<InitPoint> {
    let base = Schedule::linear_ramp(p, dt);
    (0..samples)
        .map(|r| {
            let h = random_signs(n, rng);
            let schedule = if r == 0 {
                base.clone()
            } else {
                perturb_prefix(&base, p, xi, rng)
            };
            InitPoint { schedule, h }
        })
        .collect()
}

fn perturb_prefix<R: Rng + ?Sized>(s: &Schedule, len: usize, xi: f64, rng: &mut R) -> Schedule {
    let mut out = s.clone();
    for g in &mut out.gamma[..len] {
        *g += perturbation(*g, xi, rng);
    }
    for b in &mut out.beta[..len] {
        *b += perturbation(*b, xi, rng);
    }
    out
}

/// Points for level `p` of the Fourier-style chain.
///
/// Without a previous best (first level) every point is uniform over the
/// angle periods. Otherwise sample 1 copies the previous best angles into
/// the leading slots and zero-pads, and the other samples also perturb the
/// copied slots. Bias fields are fresh +-1 draws at every level.
pub fn fourier_chain_init<R: Rng + ?Sized>(
    p: usize,
    samples: usize,
    xi: f64,
    previous_best: Option<&Schedule>,
    n: usize,
    rng: &mut R,
) -> Vec<InitPoint> {
    (0..samples)
        .map(|r| {
            let h = random_signs(n, rng);
            let schedule = match previous_best {
                None => Schedule {
                    gamma: (0..p).map(|_| rng.gen_range(0.0..2.0 * PI)).collect(),
                    beta: (0..p).map(|_| rng.gen_range(0.0..PI)).collect(),
                },
                Some(prev) => {
                    let q = prev.p().min(p);
                    let mut s = Schedule { gamma: vec![0.0; p], beta: vec![0.0; p] };
                    s.gamma[..q].copy_from_slice(&prev.gamma[..q]);
                    s.beta[..q].copy_from_slice(&prev.beta[..q]);
                    if r == 0 {
                        s
                    } else {
                        perturb_prefix(&s, q, xi, rng)
                    }
                }
            };
            InitPoint { schedule, h }
        })
        .collect()
}
