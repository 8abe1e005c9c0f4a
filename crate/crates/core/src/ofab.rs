//! Optimization-free adaptive-bias runs: the bias fields are trained by one
//! update per level on fixed linear-ramp circuits of growing depth, and the
//! answer is read off the signs of the trained fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{self, BiasFields, CostDiagonal, Schedule};
use crate::rng::Rng;
use crate::sat::{penalty_energy, Assignment, Formula};
use crate::variational::{random_signs, update_bias};

/// Bit chosen for a qubit whose field is exactly zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    #[default]
    Zero,
    One,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OfabConfig {
    pub p: usize,
    pub samples: usize,
    pub delta_t: f64,
    pub learning_rate: f64,
    pub tie: TiePolicy,
}

impl Default for OfabConfig {
    fn default() -> Self {
        Self { p: 16, samples: 10, delta_t: 0.6, learning_rate: 0.4, tie: TiePolicy::Zero }
    }
}

impl OfabConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.samples == 0 {
            return Err(Error::Config("ofab needs p >= 1 and samples >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::Config(format!("learning_rate {} outside [0, 1]", self.learning_rate)));
        }
        Ok(())
    }
}

/// Bit 0 for a positive field, bit 1 for a negative one.
pub fn bias_state(h: &BiasFields, tie: TiePolicy) -> Assignment {
    let bits = h
        .as_slice()
        .iter()
        .map(|&x| {
            if x > 0.0 {
                0
            } else if x < 0.0 {
                1
            } else {
                match tie {
                    TiePolicy::Zero => 0,
                    TiePolicy::One => 1,
                }
            }
        })
        .collect();
    Assignment { bits }
}

/// Fields of one sample after each level, plus the energy measured on the
/// evolved state at that level (logged only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldTrajectory {
    pub h: Vec<BiasFields>,
    pub measured_energy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfabResult {
    /// Lowest bias-state energy over the samples.
    pub energy: u32,
    pub assignment: Assignment,
    pub sample_index: usize,
    /// Bias-state energy of every sample at the final level.
    pub sample_energies: Vec<u32>,
    pub trajectories: Vec<FieldTrajectory>,
    /// Statevector preparations performed (p * R).
    pub state_preparations: usize,
    /// Circuit layers applied over all levels and samples (R * p(p+1)/2).
    pub layer_applications: usize,
}

impl OfabResult {
    /// Lowest bias-state energy over the samples after `level` updates
    /// (`1..=p`), with its sample index. Runs are level-chained, so this is
    /// what a run with target level `level` would report.
    pub fn best_at_level(&self, f: &Formula, level: usize, tie: TiePolicy) -> Option<(u32, Assignment, usize)> {
        self.trajectories
            .iter()
            .enumerate()
            .filter_map(|(i, t)| {
                let a = bias_state(t.h.get(level.checked_sub(1)?)?, tie);
                Some((penalty_energy(f, &a), a, i))
            })
            .min_by_key(|(e, _, i)| (*e, *i))
    }
}

/// Best bias state after `config.p` single-update levels.
pub fn opt_free_run(f: &Formula, config: &OfabConfig, rng: &mut Rng) -> Result<OfabResult> {
    config.validate()?;
    let c = quantum::build_cost_diagonal(f)?;
    let starts: Vec<BiasFields> = (0..config.samples).map(|_| random_signs(f.n(), rng)).collect();
    opt_free_from(f, &c, starts, config)
}

/// Same as [`opt_free_run`] from explicit initial fields.
pub fn opt_free_from(
    f: &Formula,
    c: &CostDiagonal,
    starts: Vec<BiasFields>,
    config: &OfabConfig,
) -> Result<OfabResult> {
    config.validate()?;
    let trajectories: Vec<FieldTrajectory> = starts
        .into_par_iter()
        .map(|h0| train_fields(c, h0, config))
        .collect::<Result<_>>()?;
    let assignments: Vec<Assignment> = trajectories
        .iter()
        .map(|t| bias_state(t.h.last().expect("p >= 1"), config.tie))
        .collect();
    let sample_energies: Vec<u32> = assignments.iter().map(|a| penalty_energy(f, a)).collect();
    let (sample_index, &energy) = sample_energies
        .iter()
        .enumerate()
        .min_by_key(|(i, e)| (**e, *i))
        .expect("samples >= 1");
    let p = config.p;
    Ok(OfabResult {
        energy,
        assignment: assignments[sample_index].clone(),
        sample_index,
        sample_energies,
        trajectories,
        state_preparations: p * config.samples,
        layer_applications: config.samples * p * (p + 1) / 2,
    })
}

fn train_fields(c: &CostDiagonal, mut h: BiasFields, config: &OfabConfig) -> Result<FieldTrajectory> {
    let mut traj = FieldTrajectory { h: Vec::with_capacity(config.p), measured_energy: Vec::new() };
    for level in 1..=config.p {
        let s = Schedule::linear_ramp(level, config.delta_t);
        let psi = quantum::output_state(&s, &h, c)?;
        traj.measured_energy.push(psi.expectation_energy(c));
        h = update_bias(&h, &psi.expectation_z_all(), config.learning_rate);
        traj.h.push(h.clone());
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sat::generate_instance;

    #[test]
    fn bias_state_examples() {
        let f = generate_instance(8, 1.0, &mut rng::stream(1, &[])).unwrap();
        let plus = BiasFields::new(vec![1.0; 8]).unwrap();
        let minus = BiasFields::new(vec![-1.0; 8]).unwrap();
        let a = bias_state(&plus, TiePolicy::Zero);
        assert!(a.bits.iter().all(|&b| b == 0));
        assert_eq!(penalty_energy(&f, &a), f.m() as u32);
        assert_eq!(penalty_energy(&f, &bias_state(&minus, TiePolicy::Zero)), 4 * f.m() as u32);
        let mixed = BiasFields::new(vec![0.3, -0.2, 0.0, 5.0]).unwrap();
        let flipped = BiasFields::new(vec![-0.3, 0.2, 0.0, -5.0]).unwrap();
        let x = bias_state(&mixed, TiePolicy::Zero);
        let y = bias_state(&flipped, TiePolicy::Zero);
        assert_eq!(x.bits, vec![0, 1, 0, 0]);
        // exact zeros follow the tie policy on both sides
        assert_eq!(y.bits, vec![1, 0, 0, 1]);
        assert_eq!(bias_state(&mixed, TiePolicy::One).bits[2], 1);
    }

    #[test]
    fn zero_rate_freezes_fields() {
        let f = generate_instance(6, 1.0, &mut rng::stream(2, &[])).unwrap();
        let cfg = OfabConfig { p: 1, samples: 5, learning_rate: 0.0, ..Default::default() };
        let mut r = rng::stream(3, &[]);
        let res = opt_free_run(&f, &cfg, &mut r).unwrap();
        let starts: Vec<BiasFields> = {
            let mut r = rng::stream(3, &[]);
            (0..5).map(|_| random_signs(6, &mut r)).collect()
        };
        for (t, h0) in res.trajectories.iter().zip(&starts) {
            assert_eq!(t.h[0], *h0);
        }
        let best = starts
            .iter()
            .map(|h| penalty_energy(&f, &bias_state(h, TiePolicy::Zero)))
            .min()
            .unwrap();
        assert_eq!(res.energy, best);
    }

    #[test]
    fn counters_and_exact_energy() {
        let f = generate_instance(6, 1.5, &mut rng::stream(4, &[])).unwrap();
        let cfg = OfabConfig { p: 5, samples: 3, ..Default::default() };
        let res = opt_free_run(&f, &cfg, &mut rng::stream(5, &[])).unwrap();
        assert_eq!(res.state_preparations, 15);
        assert_eq!(res.layer_applications, 3 * 15);
        assert_eq!(res.energy, penalty_energy(&f, &res.assignment));
        assert!(res.trajectories.iter().all(|t| t.h.len() == 5 && t.measured_energy.len() == 5));
    }

    #[test]
    fn level_readout_matches_shorter_run() {
        let f = generate_instance(7, 2.0, &mut rng::stream(8, &[])).unwrap();
        let long = opt_free_run(&f, &OfabConfig { p: 6, ..Default::default() }, &mut rng::stream(9, &[])).unwrap();
        let short = opt_free_run(&f, &OfabConfig { p: 3, ..Default::default() }, &mut rng::stream(9, &[])).unwrap();
        let (e, a, i) = long.best_at_level(&f, 3, TiePolicy::Zero).unwrap();
        assert_eq!((e, &a, i), (short.energy, &short.assignment, short.sample_index));
        assert_eq!(long.best_at_level(&f, 6, TiePolicy::Zero).unwrap().0, long.energy);
        assert!(long.best_at_level(&f, 7, TiePolicy::Zero).is_none());
        assert!(long.best_at_level(&f, 0, TiePolicy::Zero).is_none());
    }

    #[test]
    fn more_samples_never_worse() {
        let f = generate_instance(8, 2.0, &mut rng::stream(6, &[])).unwrap();
        let mut prev = u32::MAX;
        for r in [1, 4, 10] {
            let cfg = OfabConfig { p: 4, samples: r, ..Default::default() };
            let e = opt_free_run(&f, &cfg, &mut rng::stream(7, &[])).unwrap().energy;
            assert!(e <= prev);
            prev = e;
        }
    }
}
