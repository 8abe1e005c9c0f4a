//! Experiment orchestration: sweeps over (n, alpha, p), the
//! levels-to-solution protocol, the R-convergence study, trajectory
//! diagnostics, and table export.
//!
//! Ensembles are generated once per (n, alpha, seed) and shared by every
//! algorithm and level. Each (instance, level) run draws from its own
//! stream, and all parallel maps collect in index order, so outputs do not
//! depend on the thread count.

mod config;
pub mod export;

pub use config::{ExperimentConfig, Method, Problem};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, Metric};
use crate::error::{Error, Result};
use crate::ofab::{self, OfabConfig};
use crate::quantum::{self, CostDiagonal};
use crate::rng::{self, alpha_tag, Rng};
use crate::sat::{self, Ensemble, Formula, GroundSolution};
use crate::variational::{self, decide_sat_default, random_signs, RunOutcome, Verdict};
use export::{sig12, Table};

const RUN_STREAM: u64 = 0x7275;
const LEVELS_STREAM: u64 = 0x6c76;
const RSTUDY_STREAM: u64 = 0x7273;

/// Relative change below which a metric counts as converged in R.
pub const R_TOL: f64 = 1e-2;

/// Runs `f` on a dedicated pool of `threads` workers (default: rayon's).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        b = b.num_threads(t);
    }
    let pool = b.build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// Stream for run `instance` of the (n, alpha, p) cell. Shared by every
/// algorithm, so QAOA and ab-QAOA start from the same angles.
pub fn run_stream(seed: u64, n: usize, alpha: f64, p: usize, instance: usize) -> Rng {
    rng::stream(seed, &[RUN_STREAM, n as u64, alpha_tag(alpha), p as u64, instance as u64])
}

/// A formula with its cost diagonal and exhaustive ground states.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub formula: Formula,
    pub cost: CostDiagonal,
    pub ground: GroundSolution,
}

impl Prepared {
    pub fn new(formula: Formula) -> Result<Self> {
        let cost = quantum::build_cost_diagonal(&formula)?;
        let ground = sat::brute_force_ground(&formula)?;
        Ok(Self { formula, cost, ground })
    }

    pub fn ensemble(seed: u64, n: usize, alpha: f64, count: usize) -> Result<Vec<Self>> {
        let ens = Ensemble::generate(seed, n, alpha, count)?;
        ens.instances.into_par_iter().map(Prepared::new).collect()
    }
}

/// Outcome of one algorithm on one instance at one level.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Best `<H_C>` for the variational methods, bias-state energy for ofab.
    pub energy: f64,
    pub infidelity: f64,
    pub verdict: Verdict,
    pub n_con: Option<usize>,
    pub failed_samples: usize,
    pub outcome: Option<RunOutcome>,
}

pub fn evaluate(inst: &Prepared, method: Method, p: usize, cfg: &ExperimentConfig, rng: &mut Rng) -> Result<Evaluation> {
    match method.variational() {
        Some(algo) => {
            let out = variational::run_with(&inst.cost, p, algo, cfg.init, &cfg.optimizer, rng)?;
            let energy = out.best_energy();
            Ok(Evaluation {
                energy,
                infidelity: diagnostics::infidelity(&out.state, &inst.ground.ground_indices),
                verdict: decide_sat_default(energy),
                n_con: Some(out.record.n_con),
                failed_samples: out.failures(),
                outcome: Some(out),
            })
        }
        None => {
            let oc = OfabConfig { p, ..cfg.ofab.clone() };
            let starts = (0..oc.samples).map(|_| random_signs(inst.formula.n(), rng)).collect();
            let res = ofab::opt_free_from(&inst.formula, &inst.cost, starts, &oc)?;
            let hit = inst.ground.ground_indices.contains(&res.assignment.to_index());
            let energy = f64::from(res.energy);
            Ok(Evaluation {
                energy,
                infidelity: if hit { 0.0 } else { 1.0 },
                verdict: decide_sat_default(energy),
                n_con: None,
                failed_samples: 0,
                outcome: None,
            })
        }
    }
}

impl Evaluation {
    pub fn solved(&self, inst: &Prepared, problem: Problem, if_threshold: f64) -> bool {
        match problem {
            Problem::Max => self.infidelity <= if_threshold,
            Problem::Decision => self.verdict == Verdict::from_bool(inst.ground.is_sat()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub algo: Method,
    pub n: usize,
    pub alpha: f64,
    pub p: usize,
    pub instance_id: usize,
    pub sat: bool,
    pub ground_energy: u32,
    pub energy: Option<f64>,
    pub residual_energy: Option<f64>,
    pub infidelity: Option<f64>,
    pub verdict: Option<Verdict>,
    pub success: Option<bool>,
    pub n_con: Option<usize>,
    /// `N_con * p^2`.
    pub cost: Option<f64>,
    pub failed_samples: usize,
    pub error: Option<String>,
}

impl Table for InstanceRow {
    const HEADER: &'static [&'static str] = &[
        "algo",
        "n",
        "alpha",
        "p",
        "instance_id",
        "sat",
        "ground_energy",
        "energy",
        "residual_energy",
        "infidelity",
        "verdict",
        "success",
        "n_con",
        "cost",
        "failed_samples",
        "error",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub algo: Method,
    pub n: usize,
    pub alpha: f64,
    pub p: usize,
    pub instances: usize,
    pub failed: usize,
    pub residual_mean: Option<f64>,
    pub residual_stderr: Option<f64>,
    pub infidelity_mean: Option<f64>,
    pub infidelity_stderr: Option<f64>,
    pub p_succ: Option<f64>,
    pub p_sat: Option<f64>,
    pub n_con_mean: Option<f64>,
    pub n_con_stderr: Option<f64>,
    pub cost_mean: Option<f64>,
    pub cost_stderr: Option<f64>,
}

impl Table for CellRow {
    const HEADER: &'static [&'static str] = &[
        "algo",
        "n",
        "alpha",
        "p",
        "instances",
        "failed",
        "residual_mean",
        "residual_stderr",
        "infidelity_mean",
        "infidelity_stderr",
        "p_succ",
        "p_sat",
        "n_con_mean",
        "n_con_stderr",
        "cost_mean",
        "cost_stderr",
    ];
}

/// Mean and standard error; `None` for no data, stderr 0 for one value.
pub fn mean_stderr(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

fn split(ms: Option<(f64, f64)>) -> (Option<f64>, Option<f64>) {
    (ms.map(|m| sig12(m.0)), ms.map(|m| sig12(m.1)))
}

fn summarize_cell(rows: &[InstanceRow]) -> CellRow {
    let first = &rows[0];
    let ok: Vec<&InstanceRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let col = |f: fn(&InstanceRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let (residual_mean, residual_stderr) = split(mean_stderr(&col(|r| r.residual_energy)));
    let (infidelity_mean, infidelity_stderr) = split(mean_stderr(&col(|r| r.infidelity)));
    let (n_con_mean, n_con_stderr) = split(mean_stderr(&col(|r| r.n_con.map(|x| x as f64))));
    let (cost_mean, cost_stderr) = split(mean_stderr(&col(|r| r.cost)));
    let frac = |k: usize| if ok.is_empty() { None } else { Some(sig12(k as f64 / ok.len() as f64)) };
    CellRow {
        algo: first.algo,
        n: first.n,
        alpha: first.alpha,
        p: first.p,
        instances: rows.len(),
        failed: rows.len() - ok.len(),
        residual_mean,
        residual_stderr,
        infidelity_mean,
        infidelity_stderr,
        p_succ: frac(ok.iter().filter(|r| r.success == Some(true)).count()),
        p_sat: frac(ok.iter().filter(|r| r.sat).count()),
        n_con_mean,
        n_con_stderr,
        cost_mean,
        cost_stderr,
    }
}

/// Groups consecutive rows of the same (algo, n, alpha, p) cell.
pub fn summarize(rows: &[InstanceRow]) -> Vec<CellRow> {
    rows.chunk_by(|a, b| (a.algo, a.n, a.alpha.to_bits(), a.p) == (b.algo, b.n, b.alpha.to_bits(), b.p))
        .map(summarize_cell)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub instances: Vec<InstanceRow>,
    pub cells: Vec<CellRow>,
}

impl SweepResult {
    /// Cells with at least one failed instance.
    pub fn flagged(&self) -> usize {
        self.cells.iter().filter(|c| c.failed > 0).count()
    }

    pub fn cell(&self, algo: Method, n: usize, alpha: f64, p: usize) -> Option<&CellRow> {
        self.cells.iter().find(|c| c.algo == algo && c.n == n && c.alpha == alpha && c.p == p)
    }

    pub fn export(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        let files = vec![dir.join("sweep_instances.csv"), dir.join("sweep_cells.csv")];
        export::write_csv(&files[0], &self.instances)?;
        export::write_csv(&files[1], &self.cells)?;
        let manifest = export::Manifest::new("sweep", cfg, files.clone(), self.flagged());
        let path = dir.join("manifest.json");
        export::write_json(&path, &manifest)?;
        Ok(files.into_iter().chain([path]).collect())
    }
}

fn instance_row(
    inst: &Prepared,
    method: Method,
    alpha: f64,
    p: usize,
    instance_id: usize,
    eval: Result<Evaluation>,
) -> InstanceRow {
    let truth = inst.ground.is_sat();
    let mut row = InstanceRow {
        algo: method,
        n: inst.formula.n(),
        alpha,
        p,
        instance_id,
        sat: truth,
        ground_energy: inst.ground.energy,
        energy: None,
        residual_energy: None,
        infidelity: None,
        verdict: None,
        success: None,
        n_con: None,
        cost: None,
        failed_samples: 0,
        error: None,
    };
    match eval {
        Ok(e) => {
            row.energy = Some(sig12(e.energy));
            row.residual_energy = Some(sig12(diagnostics::residual_energy(e.energy, &inst.ground)));
            row.infidelity = Some(sig12(e.infidelity));
            row.verdict = Some(e.verdict);
            row.success = Some(e.verdict == Verdict::from_bool(truth));
            row.n_con = e.n_con;
            row.cost = e.n_con.map(|k| (k * p * p) as f64);
            row.failed_samples = e.failed_samples;
        }
        Err(err) => row.error = Some(err.to_string()),
    }
    row
}

/// Every (n, alpha, algorithm, level) cell over `cfg.instances` instances.
/// Failed instances are kept as rows with an error and flag their cell.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &alpha in &cfg.alpha {
            let ensemble = Prepared::ensemble(cfg.seed, n, alpha, cfg.instances)?;
            for &method in &cfg.algorithms {
                for &p in &cfg.levels {
                    let cell: Vec<InstanceRow> = ensemble
                        .par_iter()
                        .enumerate()
                        .map(|(i, inst)| {
                            let mut r = run_stream(cfg.seed, n, alpha, p, i);
                            instance_row(inst, method, alpha, p, i, evaluate(inst, method, p, cfg, &mut r))
                        })
                        .collect();
                    rows.extend(cell);
                }
            }
        }
    }
    let cells = summarize(&rows);
    Ok(SweepResult { instances: rows, cells })
}

/// Levels tried by the levels protocol: 1..=8, then steps of 8 up to `cap`
/// (up to 24 for ab-QAOA).
pub fn level_grid(method: Method, cap: usize) -> Vec<usize> {
    let end = match method {
        Method::AbQaoa => cap.min(24),
        _ => cap,
    };
    (1..=cap.min(8)).chain((16..=end).step_by(8)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelOutcome {
    /// First level that solved the instance, or the cap.
    pub level: usize,
    pub solved: bool,
}

/// Walks the level grid until the instance is solved. Level `p` draws from
/// `stream(seed, path ++ [p])`.
pub fn levels_to_solution(inst: &Prepared, method: Method, cfg: &ExperimentConfig, path: &[u64]) -> Result<LevelOutcome> {
    for p in level_grid(method, cfg.level_cap) {
        let mut full = path.to_vec();
        full.push(p as u64);
        let eval = evaluate(inst, method, p, cfg, &mut rng::stream(cfg.seed, &full))?;
        if eval.solved(inst, cfg.problem, cfg.if_threshold) {
            return Ok(LevelOutcome { level: p, solved: true });
        }
    }
    Ok(LevelOutcome { level: cfg.level_cap, solved: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub algo: Method,
    pub n: usize,
    pub alpha: f64,
    pub instance_id: usize,
    pub level: Option<usize>,
    pub solved: Option<bool>,
    pub error: Option<String>,
}

impl Table for LevelRow {
    const HEADER: &'static [&'static str] = &["algo", "n", "alpha", "instance_id", "level", "solved", "error"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCellRow {
    pub algo: Method,
    pub n: usize,
    pub alpha: f64,
    pub instances: usize,
    pub failed: usize,
    pub saturated: usize,
    pub level_mean: Option<f64>,
    pub level_stderr: Option<f64>,
}

impl Table for LevelCellRow {
    const HEADER: &'static [&'static str] =
        &["algo", "n", "alpha", "instances", "failed", "saturated", "level_mean", "level_stderr"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelsResult {
    pub instances: Vec<LevelRow>,
    pub cells: Vec<LevelCellRow>,
}

impl LevelsResult {
    pub fn flagged(&self) -> usize {
        self.cells.iter().filter(|c| c.failed > 0).count()
    }

    pub fn cell(&self, algo: Method, n: usize, alpha: f64) -> Option<&LevelCellRow> {
        self.cells.iter().find(|c| c.algo == algo && c.n == n && c.alpha == alpha)
    }

    pub fn export(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        let files = vec![dir.join("levels_instances.csv"), dir.join("levels_cells.csv")];
        export::write_csv(&files[0], &self.instances)?;
        export::write_csv(&files[1], &self.cells)?;
        let path = dir.join("manifest.json");
        export::write_json(&path, &export::Manifest::new("levels", cfg, files.clone(), self.flagged()))?;
        Ok(files.into_iter().chain([path]).collect())
    }
}

/// Levels-to-solution over every (n, alpha, algorithm) cell.
pub fn levels_protocol(cfg: &ExperimentConfig) -> Result<LevelsResult> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &n in &cfg.n {
        for &alpha in &cfg.alpha {
            let ensemble = Prepared::ensemble(cfg.seed, n, alpha, cfg.instances)?;
            for &method in &cfg.algorithms {
                let cell: Vec<LevelRow> = ensemble
                    .par_iter()
                    .enumerate()
                    .map(|(i, inst)| {
                        let path = [LEVELS_STREAM, n as u64, alpha_tag(alpha), i as u64];
                        let res = levels_to_solution(inst, method, cfg, &path);
                        LevelRow {
                            algo: method,
                            n,
                            alpha,
                            instance_id: i,
                            level: res.as_ref().ok().map(|o| o.level),
                            solved: res.as_ref().ok().map(|o| o.solved),
                            error: res.err().map(|e| e.to_string()),
                        }
                    })
                    .collect();
                let levels: Vec<f64> = cell.iter().filter_map(|r| r.level.map(|l| l as f64)).collect();
                let (level_mean, level_stderr) = split(mean_stderr(&levels));
                cells.push(LevelCellRow {
                    algo: method,
                    n,
                    alpha,
                    instances: cell.len(),
                    failed: cell.iter().filter(|r| r.error.is_some()).count(),
                    saturated: cell.iter().filter(|r| r.solved == Some(false)).count(),
                    level_mean,
                    level_stderr,
                });
                rows.extend(cell);
            }
        }
    }
    Ok(LevelsResult { instances: rows, cells })
}

/// Smallest grid value after which every relative change of `values` stays
/// below `tol`. `None` when even the last step is not below `tol`.
pub fn convergent_r(grid: &[usize], values: &[f64], tol: f64) -> Option<usize> {
    assert_eq!(grid.len(), values.len());
    let rel = |a: f64, b: f64| {
        if a == b {
            0.0
        } else if a == 0.0 {
            f64::INFINITY
        } else {
            ((b - a) / a).abs()
        }
    };
    let mut j = values.len().checked_sub(1)?;
    while j > 0 && rel(values[j - 1], values[j]) < tol {
        j -= 1;
    }
    if j + 1 == values.len() && values.len() > 1 {
        None
    } else {
        Some(grid[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RCurveRow {
    pub algo: Method,
    pub n: usize,
    pub alpha: f64,
    pub p: usize,
    pub r: usize,
    pub metric: Metric,
    pub value: f64,
}

impl Table for RCurveRow {
    const HEADER: &'static [&'static str] = &["algo", "n", "alpha", "p", "r", "metric", "value"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RConvergenceRow {
    pub algo: Method,
    pub n: usize,
    pub alpha: f64,
    pub p: usize,
    pub metric: Metric,
    pub convergent_r: Option<usize>,
}

impl Table for RConvergenceRow {
    const HEADER: &'static [&'static str] = &["algo", "n", "alpha", "p", "metric", "convergent_r"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RStudyResult {
    pub curves: Vec<RCurveRow>,
    pub convergence: Vec<RConvergenceRow>,
}

impl RStudyResult {
    pub fn export(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        let files = vec![dir.join("rstudy_curves.csv"), dir.join("rstudy_convergence.csv")];
        export::write_csv(&files[0], &self.curves)?;
        export::write_csv(&files[1], &self.convergence)?;
        let path = dir.join("manifest.json");
        export::write_json(&path, &export::Manifest::new("rstudy", cfg, files.clone(), 0))?;
        Ok(files.into_iter().chain([path]).collect())
    }
}

/// Lowest residual energy and lowest infidelity among the first `R`
/// samples, averaged over the ensemble, for every `R` in `cfg.r_grid`.
///
/// Each instance is optimized once with `max(r_grid)` samples; since the
/// starting points are drawn in sample order, the first `R` of them are
/// exactly the points an `R`-sample run would use.
pub fn r_convergence_study(cfg: &ExperimentConfig) -> Result<RStudyResult> {
    cfg.validate()?;
    let r_max = *cfg.r_grid.last().expect("validated non-empty");
    let opt = variational::OptimizerConfig { samples: r_max, keep_snapshots: false, ..cfg.optimizer.clone() };
    let mut curves = Vec::new();
    let mut convergence = Vec::new();
    for &n in &cfg.n {
        for &alpha in &cfg.alpha {
            let ensemble = Prepared::ensemble(cfg.seed, n, alpha, cfg.instances)?;
            for &method in &cfg.algorithms {
                let Some(algo) = method.variational() else { continue };
                for &p in &cfg.levels {
                    // per instance, per sample: (residual, infidelity); None if the sample failed
                    let per: Vec<Vec<Option<(f64, f64)>>> = ensemble
                        .par_iter()
                        .enumerate()
                        .map(|(i, inst)| {
                            let mut r = rng::stream(cfg.seed, &[RSTUDY_STREAM, n as u64, alpha_tag(alpha), p as u64, i as u64]);
                            let out = variational::run_with(&inst.cost, p, algo, cfg.init, &opt, &mut r)?;
                            out.samples
                                .iter()
                                .map(|s| {
                                    s.as_ref()
                                        .map(|rec| {
                                            let psi = quantum::output_state(&rec.best.schedule, &rec.best.h, &inst.cost)?;
                                            Ok((
                                                diagnostics::residual_energy(rec.best_energy, &inst.ground),
                                                diagnostics::infidelity(&psi, &inst.ground.ground_indices),
                                            ))
                                        })
                                        .transpose()
                                })
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<_>>()?;
                    for (metric, pick) in [
                        (Metric::ResidualEnergy, (|x: (f64, f64)| x.0) as fn((f64, f64)) -> f64),
                        (Metric::Infidelity, |x: (f64, f64)| x.1),
                    ] {
                        let values: Vec<f64> = cfg
                            .r_grid
                            .iter()
                            .map(|&r| {
                                let best: Vec<f64> = per
                                    .iter()
                                    .map(|s| s[..r].iter().flatten().map(|&x| pick(x)).fold(f64::INFINITY, f64::min))
                                    .collect();
                                sig12(best.iter().sum::<f64>() / best.len() as f64)
                            })
                            .collect();
                        for (&r, &value) in cfg.r_grid.iter().zip(&values) {
                            curves.push(RCurveRow { algo: method, n, alpha, p, r, metric, value });
                        }
                        convergence.push(RConvergenceRow {
                            algo: method,
                            n,
                            alpha,
                            p,
                            metric,
                            convergent_r: convergent_r(&cfg.r_grid, &values, R_TOL),
                        });
                    }
                }
            }
        }
    }
    Ok(RStudyResult { curves, convergence })
}

/// One long-format diagnostics value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub instance_id: usize,
    pub algo: Method,
    pub p: usize,
    pub alpha: f64,
    pub eta: f64,
    pub k: usize,
    pub metric: Metric,
    pub value: f64,
}

impl Table for DiagnosticRow {
    const HEADER: &'static [&'static str] = &["instance_id", "algo", "p", "alpha", "eta", "k", "metric", "value"];
}

/// Optimizes every instance of each variational cell and evaluates
/// `metrics` along the circuit at each of `cfg.etas`. Instances reuse the
/// sweep's run streams, so the runs match a sweep with the same seed.
pub fn diagnostics_study(cfg: &ExperimentConfig, metrics: &[Metric]) -> Result<Vec<DiagnosticRow>> {
    cfg.validate()?;
    let opt = variational::OptimizerConfig { keep_snapshots: true, ..cfg.optimizer.clone() };
    let cfg = ExperimentConfig { optimizer: opt, ..cfg.clone() };
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &alpha in &cfg.alpha {
            let ensemble = Prepared::ensemble(cfg.seed, n, alpha, cfg.instances)?;
            for &method in &cfg.algorithms {
                if method.variational().is_none() {
                    continue;
                }
                for &p in &cfg.levels {
                    let cell: Vec<Vec<DiagnosticRow>> = ensemble
                        .par_iter()
                        .enumerate()
                        .map(|(i, inst)| {
                            let mut r = run_stream(cfg.seed, n, alpha, p, i);
                            let eval = evaluate(inst, method, p, &cfg, &mut r)?;
                            let record = &eval.outcome.as_ref().expect("variational run").record;
                            let series = diagnostics::trajectory_diagnostics(&inst.cost, &inst.ground, record, &cfg.etas, metrics)?;
                            Ok(series
                                .iter()
                                .flat_map(|s| {
                                    s.values.iter().enumerate().map(move |(k, &v)| DiagnosticRow {
                                        instance_id: i,
                                        algo: method,
                                        p,
                                        alpha,
                                        eta: s.eta,
                                        k,
                                        metric: s.metric,
                                        value: sig12(v),
                                    })
                                })
                                .collect())
                        })
                        .collect::<Result<_>>()?;
                    rows.extend(cell.into_iter().flatten());
                }
            }
        }
    }
    Ok(rows)
}
