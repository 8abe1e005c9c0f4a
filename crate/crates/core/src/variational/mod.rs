//! The classical outer loop: Adam on the angles, the adaptive bias-field
//! update, and best-of-R selection.

mod adam;
mod init;

pub use adam::{Adam, AdamConfig};
pub use init::{fourier_chain_init, perturbation, random_signs, tqa_init, InitPoint};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{self, BiasFields, CostDiagonal, Schedule, StateVector};
use crate::rng::Rng;
use crate::sat::SAT_THRESHOLD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Qaoa,
    AbQaoa,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Qaoa => "qaoa",
            Algorithm::AbQaoa => "ab_qaoa",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    #[default]
    Tqa,
    Fourier,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Central differences of the measured energy.
    #[default]
    FiniteDifference,
    /// Exact adjoint-state gradient from the simulator.
    Adjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Bias-field learning rate.
    pub learning_rate: f64,
    pub adam: AdamConfig,
    pub gradient: GradientMode,
    pub fd_step: f64,
    pub convergence_tol: f64,
    pub convergence_window: usize,
    pub max_iterations: usize,
    /// Number of parallel starting points.
    pub samples: usize,
    pub delta_t: f64,
    pub xi: f64,
    /// Keep per-iteration angle/field snapshots.
    pub keep_snapshots: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.4,
            adam: AdamConfig::default(),
            gradient: GradientMode::default(),
            fd_step: 1e-3,
            convergence_tol: 1e-5,
            convergence_window: 5,
            max_iterations: 500,
            samples: 10,
            delta_t: 0.6,
            xi: 0.6,
            keep_snapshots: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::Config(format!("learning_rate {} outside [0, 1]", self.learning_rate)));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be >= 1".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Config("fd_step must be positive".into()));
        }
        if self.max_iterations == 0 || self.convergence_window == 0 {
            return Err(Error::Config("max_iterations and convergence_window must be >= 1".into()));
        }
        Ok(())
    }
}

/// Angles and fields in effect at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schedule: Schedule,
    pub h: BiasFields,
}

/// Trajectory of one optimized sample. Iterations are 1-based: `energies[i-1]`
/// is the energy measured with `snapshots[i-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub energies: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub n_con: usize,
    pub best_energy: f64,
    pub best_iteration: usize,
    pub best: Snapshot,
    pub last: Snapshot,
}

impl RunRecord {
    /// Snapshot at iteration `ceil(eta * n_con)`, clamped to `[1, n_con]`.
    pub fn snapshot_at_eta(&self, eta: f64) -> Result<&Snapshot> {
        let i = eta_iteration(eta, self.n_con);
        self.snapshots.get(i - 1).ok_or(Error::MissingSnapshot(i))
    }

    /// Running minimum of the energy trace.
    pub fn running_best(&self) -> Vec<f64> {
        self.energies
            .iter()
            .scan(f64::INFINITY, |b, &e| {
                *b = b.min(e);
                Some(*b)
            })
            .collect()
    }
}

pub fn eta_iteration(eta: f64, n_con: usize) -> usize {
    ((eta * n_con as f64 - 1e-9).ceil() as usize).clamp(1, n_con.max(1))
}

/// `h_j - l (h_j - z_j)`.
pub fn update_bias(h: &BiasFields, z: &[f64], learning_rate: f64) -> BiasFields {
    let next = h
        .as_slice()
        .iter()
        .zip(z)
        .map(|(&hj, &zj)| hj - learning_rate * (hj - zj))
        .collect();
    BiasFields::new(next).expect("convex step of finite values")
}

fn energy_at(params: &[f64], h: &BiasFields, c: &CostDiagonal) -> Result<f64> {
    let s = Schedule::from_params(params);
    Ok(quantum::output_state(&s, h, c)?.expectation_energy(c))
}

/// Central finite difference of `<H_C>` with respect to `(gamma, beta)`.
/// Bias fields are held fixed.
pub fn gradient_fd(s: &Schedule, h: &BiasFields, c: &CostDiagonal, eps: f64) -> Result<Vec<f64>> {
    let mut params = s.to_params();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let x = params[i];
        params[i] = x + eps;
        let up = energy_at(&params, h, c)?;
        params[i] = x - eps;
        let down = energy_at(&params, h, c)?;
        params[i] = x;
        grad.push((up - down) / (2.0 * eps));
    }
    Ok(grad)
}

/// Gradient by the configured method.
pub fn gradient(point: &InitPoint, c: &CostDiagonal, config: &OptimizerConfig) -> Result<Vec<f64>> {
    match config.gradient {
        GradientMode::FiniteDifference => gradient_fd(&point.schedule, &point.h, c, config.fd_step),
        GradientMode::Adjoint => Ok(quantum::energy_gradient_adjoint(&point.schedule, &point.h, c)?.1),
    }
}

/// Optimizes one starting point until the running-best energy stalls.
///
/// Each iteration re-prepares the bias-dependent initial state, evolves,
/// measures `<H_C>` and every `<Z_j>`, takes an Adam step on the angles,
/// wraps them to their periods, then moves the fields toward `<Z_j>`.
pub fn optimize_sample(c: &CostDiagonal, point: &InitPoint, config: &OptimizerConfig) -> Result<RunRecord> {
    let p = point.p();
    let mut schedule = point.schedule.clone();
    schedule.canonicalize();
    let mut h = point.h.clone();
    let mut adam = Adam::new(config.adam, 2 * p);
    let mut energies = Vec::new();
    let mut snapshots = Vec::new();
    let mut running = Vec::new();
    let mut best = (f64::INFINITY, 0usize, Snapshot { schedule: schedule.clone(), h: h.clone() });

    for it in 1..=config.max_iterations {
        let (state, grad) = match config.gradient {
            GradientMode::Adjoint => quantum::energy_gradient_adjoint(&schedule, &h, c)?,
            GradientMode::FiniteDifference => (
                quantum::output_state(&schedule, &h, c)?,
                gradient_fd(&schedule, &h, c, config.fd_step)?,
            ),
        };
        let energy = state.expectation_energy(c);
        if !energy.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { iteration: it });
        }
        let snap = Snapshot { schedule: schedule.clone(), h: h.clone() };
        if energy < best.0 {
            best = (energy, it, snap.clone());
        }
        energies.push(energy);
        running.push(best.0);
        if config.keep_snapshots {
            snapshots.push(snap.clone());
        }

        let w = config.convergence_window;
        let converged = it > w && running[it - 1 - w] - running[it - 1] < config.convergence_tol;
        if converged || it == config.max_iterations {
            let n_con = energies.len();
            return Ok(RunRecord {
                energies,
                snapshots,
                n_con,
                best_energy: best.0,
                best_iteration: best.1,
                best: best.2,
                last: snap,
            });
        }

        let mut params = schedule.to_params();
        adam.step(&mut params, &grad);
        schedule = Schedule::from_params(&params);
        schedule.canonicalize();
        let z = state.expectation_z_all();
        h = update_bias(&h, &z, config.learning_rate);
    }
    unreachable!("loop returns at max_iterations")
}

/// Result of one level: the best of R optimized samples.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub sample_index: usize,
    pub state: StateVector,
    /// Per-sample records in sample order; `None` for failed samples.
    pub samples: Vec<Option<RunRecord>>,
}

impl RunOutcome {
    pub fn best_energy(&self) -> f64 {
        self.record.best_energy
    }

    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| s.is_none()).count()
    }
}

fn prepare_points(points: Vec<InitPoint>, algo: Algorithm) -> Vec<InitPoint> {
    match algo {
        Algorithm::AbQaoa => points,
        Algorithm::Qaoa => points.iter().map(InitPoint::unbiased).collect(),
    }
}

fn effective_config(algo: Algorithm, config: &OptimizerConfig) -> OptimizerConfig {
    let mut cfg = config.clone();
    if algo == Algorithm::Qaoa {
        cfg.learning_rate = 0.0;
    }
    cfg
}

/// Optimizes every point and keeps the lowest final energy (ties go to the
/// lower sample index).
pub fn optimize_points(
    c: &CostDiagonal,
    points: Vec<InitPoint>,
    algo: Algorithm,
    config: &OptimizerConfig,
) -> Result<RunOutcome> {
    config.validate()?;
    let cfg = effective_config(algo, config);
    let points = prepare_points(points, algo);
    let results: Vec<Result<RunRecord>> =
        points.par_iter().map(|pt| optimize_sample(c, pt, &cfg)).collect();
    let mut samples: Vec<Option<RunRecord>> = Vec::with_capacity(results.len());
    let mut best: Option<usize> = None;
    for (i, r) in results.into_iter().enumerate() {
        let rec = r.ok();
        if let Some(rec) = &rec {
            let better = match best.and_then(|b| samples[b].as_ref().map(|x: &RunRecord| x.best_energy)) {
                None => true,
                Some(e) => rec.best_energy < e,
            };
            if better {
                best = Some(i);
            }
        }
        samples.push(rec);
    }
    let idx = best.ok_or(Error::AllSamplesFailed(samples.len()))?;
    let record = samples[idx].clone().expect("best sample succeeded");
    let state = quantum::output_state(&record.best.schedule, &record.best.h, c)?;
    Ok(RunOutcome { record, sample_index: idx, state, samples })
}

/// One level-`p` run from linear-ramp starting points.
pub fn run(
    c: &CostDiagonal,
    p: usize,
    algo: Algorithm,
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<RunOutcome> {
    let points = tqa_init(p, config.samples, config.delta_t, config.xi, c.n(), rng);
    optimize_points(c, points, algo, config)
}

/// Runs the Fourier-style level chain; each level seeds the next from its
/// best angles. Adam state starts fresh at every level.
pub fn run_fourier_chain(
    c: &CostDiagonal,
    levels: &[usize],
    algo: Algorithm,
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<Vec<(usize, RunOutcome)>> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) || levels[0] == 0 {
        return Err(Error::Config("level list must be non-empty, positive, strictly increasing".into()));
    }
    let mut out: Vec<(usize, RunOutcome)> = Vec::with_capacity(levels.len());
    for &p in levels {
        let prev = out.last().map(|(_, o)| &o.record.best.schedule);
        let points = fourier_chain_init(p, config.samples, config.xi, prev, c.n(), rng);
        let outcome = optimize_points(c, points, algo, config)?;
        out.push((p, outcome));
    }
    Ok(out)
}

/// Level-`p` run with the chosen initialization. The Fourier chain uses
/// the default level list truncated at `p` (with `p` appended if absent).
pub fn run_with(
    c: &CostDiagonal,
    p: usize,
    algo: Algorithm,
    init: InitStrategy,
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<RunOutcome> {
    match init {
        InitStrategy::Tqa => run(c, p, algo, config, rng),
        InitStrategy::Fourier => {
            let mut levels: Vec<usize> =
                DEFAULT_FOURIER_LEVELS.iter().copied().filter(|&q| q < p).collect();
            levels.push(p);
            let mut chain = run_fourier_chain(c, &levels, algo, config, rng)?;
            Ok(chain.pop().expect("non-empty chain").1)
        }
    }
}

pub const DEFAULT_FOURIER_LEVELS: [usize; 6] = [1, 2, 4, 8, 16, 24];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Sat,
    Unsat,
}

impl Verdict {
    pub fn from_bool(sat: bool) -> Self {
        if sat {
            Verdict::Sat
        } else {
            Verdict::Unsat
        }
    }
}

/// SAT iff the best measured energy is below `threshold`.
pub fn decide_sat(best_energy: f64, threshold: f64) -> Verdict {
    Verdict::from_bool(best_energy < threshold)
}

pub fn decide_sat_default(best_energy: f64) -> Verdict {
    decide_sat(best_energy, SAT_THRESHOLD)
}
