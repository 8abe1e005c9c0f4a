use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use abqaoa::diagnostics::Metric;
use abqaoa::harness::{self, export, ExperimentConfig, Method, Prepared};
use abqaoa::ofab::{self, OfabConfig};
use abqaoa::rng;
use abqaoa::sat::Ensemble;
use abqaoa::variational::GradientMode;
use abqaoa::Error;

#[derive(Parser)]
#[command(name = "abqaoa", version, about = "QAOA / ab-QAOA experiments on random 1-in-3 SAT")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance ensemble as JSON.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize one instance and write the full trace.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        instance: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sweep every (n, alpha, algorithm, p) cell.
    Sweep(Common),
    /// Levels-to-solution protocol.
    Levels(Common),
    /// Dependence of the best result on the sample count R.
    Rstudy(Common),
    /// Entropies, participation ratio and infidelity along the circuit.
    Diag {
        #[command(flatten)]
        common: Common,
        /// Comma-separated metric names (default: all).
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
    },
    /// Optimization-free bias-field training on one instance.
    Ofab {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        instance: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Gradient {
    Fd,
    Adjoint,
}

#[derive(Args)]
struct Common {
    /// Experiment seed (overrides the config file).
    #[arg(long)]
    seed: u64,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long = "p", value_delimiter = ',')]
    levels: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<String>,
    #[arg(long)]
    instances: Option<usize>,
    /// Samples per run (R).
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    gradient: Option<Gradient>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut o = Map::new();
        o.insert("seed".into(), json!(self.seed));
        if !self.n.is_empty() {
            o.insert("n".into(), json!(self.n));
        }
        if !self.alpha.is_empty() {
            o.insert("alpha".into(), json!(self.alpha));
        }
        if !self.levels.is_empty() {
            o.insert("levels".into(), json!(self.levels));
        }
        if !self.algorithms.is_empty() {
            let algos = self.algorithms.iter().map(|a| a.parse::<Method>()).collect::<Result<Vec<_>, _>>()?;
            o.insert("algorithms".into(), json!(algos));
        }
        if let Some(i) = self.instances {
            o.insert("instances".into(), json!(i));
        }
        if let Some(out) = &self.out {
            o.insert("output".into(), json!(out));
        }
        let mut opt = Map::new();
        if let Some(r) = self.samples {
            opt.insert("samples".into(), json!(r));
            o.insert("ofab".into(), json!({ "samples": r }));
        }
        if let Some(g) = self.gradient {
            let mode = match g {
                Gradient::Fd => GradientMode::FiniteDifference,
                Gradient::Adjoint => GradientMode::Adjoint,
            };
            opt.insert("gradient".into(), json!(mode));
        }
        if !opt.is_empty() {
            o.insert("optimizer".into(), Value::Object(opt));
        }
        ExperimentConfig::load(self.config.as_deref(), Value::Object(o))
    }
}

fn first_cell(cfg: &ExperimentConfig, instance: usize) -> Result<Prepared, Error> {
    let (n, alpha) = (cfg.n[0], cfg.alpha[0]);
    let ens = Ensemble::generate(cfg.seed, n, alpha, instance + 1)?;
    Prepared::new(ens.instances[instance].clone())
}

fn report(files: &[PathBuf]) {
    for f in files {
        eprintln!("wrote {}", f.display());
    }
}

fn execute(cmd: Cmd) -> Result<usize, Error> {
    match cmd {
        Cmd::Gen { seed, n, alpha, count, out } => {
            let ens = Ensemble::generate(seed, n, alpha, count)?;
            match out {
                Some(path) => export::write_json(&path, &ens)?,
                None => println!("{}", serde_json::to_string_pretty(&ens)?),
            }
            Ok(0)
        }
        Cmd::Run { common, instance, trace } => {
            let cfg = common.config()?;
            let inst = first_cell(&cfg, instance)?;
            let p = cfg.levels[0];
            let mut traces = Vec::new();
            for &method in &cfg.algorithms {
                let mut r = harness::run_stream(cfg.seed, cfg.n[0], cfg.alpha[0], p, instance);
                let eval = harness::with_threads(common.threads, || harness::evaluate(&inst, method, p, &cfg, &mut r))??;
                println!(
                    "{:<8} p={p} energy={:.6} ground={} infidelity={:.6} verdict={:?} sat={} n_con={}",
                    method.name(),
                    eval.energy,
                    inst.ground.energy,
                    eval.infidelity,
                    eval.verdict,
                    inst.ground.is_sat(),
                    eval.n_con.map_or("-".into(), |k| k.to_string()),
                );
                traces.push(json!({
                    "algo": method,
                    "p": p,
                    "energy": eval.energy,
                    "infidelity": eval.infidelity,
                    "verdict": eval.verdict,
                    "record": eval.outcome.as_ref().map(|o| &o.record),
                    "sample_index": eval.outcome.as_ref().map(|o| o.sample_index),
                }));
            }
            if let Some(path) = trace {
                let doc = json!({ "formula": inst.formula, "ground": inst.ground, "config": cfg, "runs": traces });
                export::write_json(&path, &doc)?;
                report(&[path]);
            }
            Ok(0)
        }
        Cmd::Sweep(common) => {
            let cfg = common.config()?;
            let res = harness::with_threads(common.threads, || harness::sweep(&cfg))??;
            for c in &res.cells {
                println!(
                    "{:<8} n={:<2} alpha={:<4} p={:<2} P_succ={} IF={} dE={} N_con={}",
                    c.algo.name(),
                    c.n,
                    c.alpha,
                    c.p,
                    fmt(c.p_succ),
                    fmt(c.infidelity_mean),
                    fmt(c.residual_mean),
                    fmt(c.n_con_mean),
                );
            }
            report(&res.export(&cfg.output, &cfg)?);
            Ok(res.flagged())
        }
        Cmd::Levels(common) => {
            let cfg = common.config()?;
            let res = harness::with_threads(common.threads, || harness::levels_protocol(&cfg))??;
            for c in &res.cells {
                println!(
                    "{:<8} n={:<2} alpha={:<4} levels={} saturated={}/{}",
                    c.algo.name(),
                    c.n,
                    c.alpha,
                    fmt(c.level_mean),
                    c.saturated,
                    c.instances
                );
            }
            report(&res.export(&cfg.output, &cfg)?);
            Ok(res.flagged())
        }
        Cmd::Rstudy(common) => {
            let cfg = common.config()?;
            let res = harness::with_threads(common.threads, || harness::r_convergence_study(&cfg))??;
            for c in &res.convergence {
                println!(
                    "{:<8} n={:<2} alpha={:<4} p={:<2} {:<16} R*={}",
                    c.algo.name(),
                    c.n,
                    c.alpha,
                    c.p,
                    c.metric.name(),
                    c.convergent_r.map_or("not converged".into(), |r| r.to_string())
                );
            }
            report(&res.export(&cfg.output, &cfg)?);
            Ok(0)
        }
        Cmd::Diag { common, metrics } => {
            let cfg = common.config()?;
            let metrics: Vec<Metric> = if metrics.is_empty() {
                Metric::ALL.to_vec()
            } else {
                metrics.iter().map(|m| m.parse()).collect::<Result<_, _>>()?
            };
            let rows = harness::with_threads(common.threads, || harness::diagnostics_study(&cfg, &metrics))??;
            let path = cfg.output.join("diagnostics.csv");
            export::write_csv(&path, &rows)?;
            let manifest = cfg.output.join("manifest.json");
            export::write_json(&manifest, &export::Manifest::new("diag", &cfg, vec![path.clone()], 0))?;
            report(&[path, manifest]);
            Ok(0)
        }
        Cmd::Ofab { common, instance } => {
            let cfg = common.config()?;
            let inst = first_cell(&cfg, instance)?;
            let oc = OfabConfig { p: cfg.levels[0], ..cfg.ofab.clone() };
            let mut r = rng::stream(cfg.seed, &[0x6f66, instance as u64]);
            let res = harness::with_threads(common.threads, || ofab::opt_free_run(&inst.formula, &oc, &mut r))??;
            println!(
                "ofab p={} energy={} ground={} assignment={} preparations={} layers={}",
                oc.p,
                res.energy,
                inst.ground.energy,
                res.assignment,
                res.state_preparations,
                res.layer_applications
            );
            let path = cfg.output.join("ofab.json");
            export::write_json(&path, &json!({ "formula": inst.formula, "ground": inst.ground, "config": oc, "result": res }))?;
            report(&[path]);
            Ok(0)
        }
    }
}

fn fmt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.4}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(flagged) => {
            eprintln!("warning: {flagged} cell(s) had failed instances");
            ExitCode::from(3)
        }
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
