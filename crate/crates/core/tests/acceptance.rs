//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. Pass criterion numbers as arguments to run a subset:
//!
//!     cargo test --release --test acceptance -- 1 2 3

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use abqaoa::diagnostics::{self, Metric};
use abqaoa::harness::{self, ExperimentConfig, Method, Prepared, SweepResult};
use abqaoa::ofab::{self, OfabConfig, TiePolicy};
use abqaoa::quantum::{self, BiasFields, CostDiagonal, Schedule, StateVector};
use abqaoa::rng;
use abqaoa::sat::{self, Ensemble, Formula};
use abqaoa::variational::{self, Algorithm, InitPoint, OptimizerConfig};
use num_complex::Complex64 as C;
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;

const SEED: u64 = 20_240_601;
/// Upper end of the bipartition-averaged entropy for n = 10.
const SE_BOUND: f64 = 3.7769;

#[derive(PartialEq)]
enum Status {
    Pass,
    Fail,
    Warn,
}

struct Verdict {
    status: Status,
    detail: String,
}

impl Verdict {
    fn check(ok: bool, detail: String) -> Self {
        Self { status: if ok { Status::Pass } else { Status::Fail }, detail }
    }

    fn soft(ok: bool, detail: String) -> Self {
        Self { status: if ok { Status::Pass } else { Status::Warn }, detail }
    }
}

fn config(v: serde_json::Value) -> ExperimentConfig {
    let mut base = json!({ "seed": SEED });
    base.as_object_mut().unwrap().extend(v.as_object().unwrap().clone());
    ExperimentConfig::load(None, base).expect("valid acceptance config")
}

// 1 ----------------------------------------------------------------------

fn oracle_equivalence() -> Verdict {
    let mut r = rng::stream(SEED, &[1]);
    let mut worst = 0.0f64;
    for t in 0..200 {
        let n = 1 + t % 3;
        let p = 1 + (t / 3) % 3;
        let (cost, energies) = if n == 3 && t % 2 == 0 {
            let f = Formula::new(3, vec![[0, 1, 2]]).unwrap();
            let c = quantum::build_cost_diagonal(&f).unwrap();
            let e = c.energies().iter().map(|&x| x as f64).collect::<Vec<_>>();
            (c, e)
        } else {
            let e: Vec<u32> = (0..1 << n).map(|_| r.gen_range(0..5)).collect();
            let ef = e.iter().map(|&x| x as f64).collect::<Vec<_>>();
            (CostDiagonal::from_energies(n, e).unwrap(), ef)
        };
        let h = BiasFields::new((0..n).map(|_| r.gen_range(-3.0..3.0)).collect()).unwrap();
        let s = Schedule::new(
            (0..p).map(|_| r.gen_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI)).collect(),
            (0..p).map(|_| r.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect(),
        )
        .unwrap();
        let psi0 = quantum::prepare_initial_state(&h);
        let got = quantum::evolve(&psi0, &s, &h, &cost).unwrap();
        let hc = common::diagonal(&energies);
        let hm = common::mixer_hamiltonian(h.as_slice());
        let mut v = psi0.amplitudes().to_vec();
        for k in 0..p {
            v = common::mat_vec(&common::expm_i(&hc, s.gamma[k]), &v);
            v = common::mat_vec(&common::expm_i(&hm, s.beta[k]), &v);
        }
        let g = common::ground_state(&hm);
        worst = worst.max(common::max_diff(got.amplitudes(), &v)).max(common::diff_up_to_phase(psi0.amplitudes(), &g));
    }
    Verdict::check(worst <= 1e-10, format!("200 configs, max amplitude error {worst:.2e} (tol 1e-10)"))
}

// 2 ----------------------------------------------------------------------

fn reduction_identity() -> Verdict {
    let mut mismatches = 0;
    let mut iterations = 0;
    for s in 0..20u64 {
        let mut r = rng::stream(SEED, &[2, s]);
        let alpha = r.gen_range(0.5..3.0);
        let f = sat::generate_instance(6, alpha, &mut r).unwrap();
        let c = quantum::build_cost_diagonal(&f).unwrap();
        let cfg = OptimizerConfig { samples: 3, ..Default::default() };
        let points = variational::tqa_init(3, cfg.samples, cfg.delta_t, cfg.xi, 6, &mut r);
        let qaoa = variational::optimize_points(&c, points.clone(), Algorithm::Qaoa, &cfg).unwrap();
        let zeroed: Vec<InitPoint> = points.iter().map(InitPoint::unbiased).collect();
        let ab_cfg = OptimizerConfig { learning_rate: 0.0, ..cfg.clone() };
        let ab = variational::optimize_points(&c, zeroed, Algorithm::AbQaoa, &ab_cfg).unwrap();
        for (a, b) in qaoa.samples.iter().zip(&ab.samples) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            iterations += a.n_con;
            let same_bits = a.energies.len() == b.energies.len()
                && a.energies.iter().zip(&b.energies).all(|(x, y)| x.to_bits() == y.to_bits());
            if !same_bits || a.snapshots != b.snapshots || a.n_con != b.n_con {
                mismatches += 1;
            }
        }
    }
    Verdict::check(
        mismatches == 0,
        format!("20 seeded n=6 runs (60 samples, {iterations} iterations), {mismatches} trace mismatches"),
    )
}

// 3 ----------------------------------------------------------------------

/// GF(2) rank of the rows, each a bitmask.
fn gf2_rank(mut rows: Vec<u16>) -> u32 {
    let mut rank = 0;
    for bit in 0..16 {
        let Some(i) = rows.iter().position(|&r| r >> bit & 1 == 1) else { continue };
        let pivot = rows.swap_remove(i);
        for r in rows.iter_mut() {
            if *r >> bit & 1 == 1 {
                *r ^= pivot;
            }
        }
        rank += 1;
    }
    rank
}

/// Mean cut rank of a graph over all proper nonempty subsets; equals the
/// bipartition-averaged entropy of its graph state.
fn mean_cut_rank(adj: &[u16], n: usize) -> f64 {
    let full = (1u16 << n) - 1;
    let total: u32 = (1..full)
        .map(|a| gf2_rank((0..n).filter(|i| a >> i & 1 == 1).map(|i| adj[i] & !a & full).collect()))
        .sum();
    total as f64 / (full - 1) as f64
}

fn graph_state(adj: &[u16], n: usize) -> StateVector {
    let norm = 1.0 / ((1usize << n) as f64).sqrt();
    let amps = (0..1usize << n)
        .map(|z| {
            let edges: u32 = (0..n)
                .filter(|&i| z >> i & 1 == 1)
                .map(|i| (adj[i] as usize & z & ((1 << i) - 1)).count_ones())
                .sum();
            C::new(if edges % 2 == 0 { norm } else { -norm }, 0.0)
        })
        .collect();
    StateVector::from_amplitudes(n, amps).unwrap()
}

fn entropy_bound() -> Verdict {
    let n = 10;
    // independent value of the bound: mean of min(|A|, n - |A|) over all proper subsets
    let max_avg = (1..(1u32 << n) - 1).map(|a| a.count_ones().min(n as u32 - a.count_ones()) as f64).sum::<f64>()
        / ((1u32 << n) - 2) as f64;
    let mut r = rng::stream(SEED, &[3]);
    let mut random_max = 0.0f64;
    let mut random_min = f64::INFINITY;
    for _ in 0..100 {
        let mut amps: Vec<C> =
            (0..1 << n).map(|_| C::new(r.sample(StandardNormal), r.sample(StandardNormal))).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        let se = diagnostics::entanglement_entropy_avg(&StateVector::from_amplitudes(n, amps).unwrap()).unwrap().mean;
        random_max = random_max.max(se);
        random_min = random_min.min(se);
    }

    // graph state chosen by greedy edge flips to maximize the mean cut rank
    let mut adj = vec![0u16; n];
    for i in 0..n {
        for j in 0..i {
            if r.gen::<bool>() {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    let mut best = mean_cut_rank(&adj, n);
    loop {
        let mut improved = false;
        for i in 0..n {
            for j in 0..i {
                adj[i] ^= 1 << j;
                adj[j] ^= 1 << i;
                let v = mean_cut_rank(&adj, n);
                if v > best + 1e-12 {
                    best = v;
                    improved = true;
                } else {
                    adj[i] ^= 1 << j;
                    adj[j] ^= 1 << i;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let constructed = diagnostics::entanglement_entropy_avg(&graph_state(&adj, n)).unwrap().mean;
    let ok = (max_avg - 1930.0 / 511.0).abs() < 1e-12
        && (diagnostics::max_average_entropy(n) - max_avg).abs() < 1e-12
        && random_min >= 0.0
        && random_max <= SE_BOUND + 1e-9
        && (constructed - best).abs() < 1e-9
        && constructed >= 0.95 * max_avg
        && constructed <= max_avg + 1e-9;
    Verdict::check(
        ok,
        format!(
            "random states in [{random_min:.4}, {random_max:.4}] <= {SE_BOUND}; constructed {constructed:.4} \
             (cut-rank oracle {best:.4}) vs 1930/511 = {max_avg:.4}, ratio {:.3}",
            constructed / max_avg
        ),
    )
}

// 4 ----------------------------------------------------------------------

fn sat_transition() -> Verdict {
    let alphas: Vec<f64> = (3..=14).map(|i| i as f64 / 10.0).collect();
    let probs: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            let ens = Ensemble::generate(SEED, 10, a, 100).unwrap();
            let truths: Vec<bool> = ens.instances.iter().map(|f| sat::sat_oracle(f).unwrap()).collect();
            diagnostics::sat_probability(&truths).unwrap()
        })
        .collect();
    let crossing = (0..alphas.len() - 1).find(|&i| probs[i] >= 0.5 && probs[i + 1] < 0.5).map(|i| {
        alphas[i] + (probs[i] - 0.5) * (alphas[i + 1] - alphas[i]) / (probs[i] - probs[i + 1])
    });
    let curve: Vec<String> = alphas.iter().zip(&probs).map(|(a, p)| format!("{a:.1}:{p:.2}")).collect();
    let ok = matches!(crossing, Some(x) if x > 0.5 && x < 0.7);
    Verdict::check(
        ok,
        format!("n=10, P_SAT = 0.5 at alpha {}; curve {}", crossing.map_or("none".into(), |x| format!("{x:.3}")), curve.join(" ")),
    )
}

// 5 ----------------------------------------------------------------------

fn approximation_error() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for a in [0.9, 2.0, 3.0] {
        let ens = Ensemble::generate(SEED, 10, a, 100).unwrap();
        let mean = ens.instances.iter().map(|f| sat::approximation_error(f).unwrap() as f64).sum::<f64>() / 100.0;
        ok &= mean <= 1.0;
        parts.push(format!("alpha {a}: {mean:.2}"));
    }
    Verdict::check(ok, format!("mean approximation error (<= 1): {}", parts.join(", ")))
}

// 6 and 12 ---------------------------------------------------------------

fn decision_config() -> ExperimentConfig {
    config(json!({
        "n": [10], "levels": [4], "instances": 20, "problem": "decision",
        "algorithms": ["qaoa", "ab_qaoa"],
    }))
}

fn run_decision_sweep(threads: usize, dir: &Path) -> SweepResult {
    let cfg = decision_config();
    let res = harness::with_threads(Some(threads), || harness::sweep(&cfg)).unwrap().unwrap();
    res.export(dir, &cfg).unwrap();
    res
}

fn decision_gap(res: &SweepResult) -> Verdict {
    let cfg = decision_config();
    let mut ab_min = f64::INFINITY;
    let mut qaoa_near = f64::INFINITY;
    let mut rows = Vec::new();
    for &a in &cfg.alpha {
        let q = res.cell(Method::Qaoa, 10, a, 4).unwrap().p_succ.unwrap();
        let b = res.cell(Method::AbQaoa, 10, a, 4).unwrap().p_succ.unwrap();
        ab_min = ab_min.min(b);
        if (0.5..=0.8).contains(&a) {
            qaoa_near = qaoa_near.min(q);
        }
        rows.push(format!("{a}:{q:.2}/{b:.2}"));
    }
    Verdict::check(
        ab_min >= 0.9 && qaoa_near < 0.7 && res.flagged() == 0,
        format!(
            "min ab-QAOA P_succ {ab_min:.2} (>= 0.9), min QAOA P_succ near alpha_c {qaoa_near:.2} (< 0.7); \
             alpha:qaoa/ab {}",
            rows.join(" ")
        ),
    )
}

fn determinism(first: &Path) -> Verdict {
    let again = tempfile::tempdir().unwrap();
    run_decision_sweep(4, again.path());
    let same = ["sweep_instances.csv", "sweep_cells.csv", "manifest.json"].iter().all(|f| {
        std::fs::read(first.join(f)).unwrap() == std::fs::read(again.path().join(f)).unwrap()
    });
    Verdict::check(same, "criterion-6 sweep with 1 and 4 worker threads: CSV and manifest bytes identical".into())
}

// 7 and 11 ---------------------------------------------------------------

fn reachability_config() -> ExperimentConfig {
    config(json!({ "n": [10], "alpha": [3.0], "levels": [4, 8], "instances": 20, "algorithms": ["qaoa", "ab_qaoa"] }))
}

fn reachability(res: &SweepResult) -> Verdict {
    let get = |m, p| res.cell(m, 10, 3.0, p).unwrap().infidelity_mean.unwrap();
    let (q4, q8, b4, b8) = (get(Method::Qaoa, 4), get(Method::Qaoa, 8), get(Method::AbQaoa, 4), get(Method::AbQaoa, 8));
    Verdict::check(
        q4 > 0.5 && b4 < 0.3 && b8 < 0.15,
        format!("n=10 alpha=3 mean IF: QAOA p4 {q4:.3} (> 0.5), p8 {q8:.3}; ab-QAOA p4 {b4:.3} (< 0.3), p8 {b8:.3} (< 0.15)"),
    )
}

fn n_con_sanity(res: &SweepResult) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [4, 8] {
        let q = res.cell(Method::Qaoa, 10, 3.0, p).unwrap().n_con_mean.unwrap();
        let b = res.cell(Method::AbQaoa, 10, 3.0, p).unwrap().n_con_mean.unwrap();
        ok &= (10.0..=60.0).contains(&q) && (10.0..=60.0).contains(&b) && b <= q;
        parts.push(format!("p{p}: QAOA {q:.1}, ab-QAOA {b:.1}"));
    }
    Verdict::soft(ok, format!("mean N_con in [10, 60], ab-QAOA <= QAOA: {}", parts.join("; ")))
}

// 8 ----------------------------------------------------------------------

fn levels_protocol() -> Verdict {
    let cfg = config(json!({
        "n": [6, 8], "alpha": [0.9, 1.2, 2.0, 3.0], "instances": 20, "problem": "max",
        "algorithms": ["qaoa", "ab_qaoa"], "optimizer": { "gradient": "adjoint" },
    }));
    let res = harness::levels_protocol(&cfg).unwrap();
    let mut ab_ok = true;
    let (mut q_sum, mut b_sum) = (0.0, 0.0);
    let mut parts = Vec::new();
    for &n in &cfg.n {
        for &a in &cfg.alpha {
            let q = res.cell(Method::Qaoa, n, a).unwrap().level_mean.unwrap();
            let b = res.cell(Method::AbQaoa, n, a).unwrap().level_mean.unwrap();
            ab_ok &= b <= 8.0;
            q_sum += q;
            b_sum += b;
            parts.push(format!("n{n} a{a}: {q:.1}/{b:.1}"));
        }
    }
    let ratio = q_sum / b_sum;
    Verdict::check(
        ab_ok && ratio >= 3.0 && res.flagged() == 0,
        format!("mean levels QAOA/ab-QAOA: {}; pooled ratio {ratio:.2} (>= 3)", parts.join(", ")),
    )
}

// 9 ----------------------------------------------------------------------

fn optimization_free() -> Verdict {
    let levels = [4usize, 8, 12, 16];
    let alphas = [0.9, 1.2, 2.0, 3.0];
    let cfg = OfabConfig { p: 16, ..Default::default() };
    let mut pooled = vec![0.0; levels.len()];
    let mut per_cell_ok = true;
    let mut parts = Vec::new();
    for a in alphas {
        let ensemble = Prepared::ensemble(SEED, 10, a, 20).unwrap();
        let mut unsolved = vec![0usize; levels.len()];
        for (i, inst) in ensemble.iter().enumerate() {
            let mut r = rng::stream(SEED, &[9, rng::alpha_tag(a), i as u64]);
            let res = ofab::opt_free_run(&inst.formula, &cfg, &mut r).unwrap();
            for (li, &l) in levels.iter().enumerate() {
                let (_, asg, _) = res.best_at_level(&inst.formula, l, TiePolicy::Zero).unwrap();
                if !inst.ground.ground_indices.contains(&asg.to_index()) {
                    unsolved[li] += 1;
                }
            }
        }
        let ifs: Vec<f64> = unsolved.iter().map(|&u| u as f64 / 20.0).collect();
        per_cell_ok &= ifs[3] < 0.15;
        for (p, v) in pooled.iter_mut().zip(&ifs) {
            *p += v / alphas.len() as f64;
        }
        parts.push(format!("a{a}: {}", ifs.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join("/")));
    }
    let improving = pooled[0] > pooled[3];
    Verdict::check(
        per_cell_ok && improving,
        format!(
            "bias-state IF at p=4/8/12/16: {}; pooled {} (p16 < 0.15 per cell, p4 > p16 pooled)",
            parts.join(", "),
            pooled.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join("/")
        ),
    )
}

// 10 ---------------------------------------------------------------------

fn diagnostics_ordering() -> Verdict {
    let p = 8;
    let cfg = config(json!({
        "n": [10], "alpha": [3.0], "levels": [p], "instances": 10, "algorithms": ["qaoa", "ab_qaoa"], "etas": [1.0],
    }));
    let metrics = [Metric::EntanglementEntropy, Metric::ParticipationRatio, Metric::AnnealingEntropy];
    let rows = harness::diagnostics_study(&cfg, &metrics).unwrap();
    let mut mean: BTreeMap<(Method, Metric, usize), f64> = BTreeMap::new();
    for r in &rows {
        *mean.entry((r.algo, r.metric, r.k)).or_default() += r.value / 10.0;
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for m in metrics {
        let q: Vec<f64> = (0..=p).map(|k| mean[&(Method::Qaoa, m, k)]).collect();
        let b: Vec<f64> = (0..=p).map(|k| mean[&(Method::AbQaoa, m, k)]).collect();
        let below = (2..=p).all(|k| b[k] <= q[k]);
        ok &= below && b[p] < q[p];
        let worst_k = (2..=p).max_by(|&i, &j| (b[i] - q[i]).total_cmp(&(b[j] - q[j]))).unwrap();
        parts.push(format!(
            "{} k=p {:.3}/{:.3}, largest ab-minus-QAOA {:+.3} at k={worst_k}",
            m.name(),
            q[p],
            b[p],
            b[worst_k] - q[worst_k]
        ));
    }
    Verdict::check(ok, format!("eta=1 means QAOA/ab-QAOA: {}", parts.join("; ")))
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |i: u32| wanted.is_empty() || wanted.contains(&i);
    let mut failed = 0;
    let mut report = |id: u32, name: &str, start: Instant, v: Verdict| {
        let tag = match v.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Warn => "WARN",
        };
        if v.status == Status::Fail {
            failed += 1;
        }
        println!("criterion {id:>2} {name:<26} {tag} ({:.1}s): {}", start.elapsed().as_secs_f64(), v.detail);
    };

    let t = Instant::now();
    if run(1) {
        report(1, "oracle equivalence", t, oracle_equivalence());
    }
    let t = Instant::now();
    if run(2) {
        report(2, "reduction identity", t, reduction_identity());
    }
    let t = Instant::now();
    if run(3) {
        report(3, "entropy bound", t, entropy_bound());
    }
    let t = Instant::now();
    if run(4) {
        report(4, "SAT transition", t, sat_transition());
    }
    let t = Instant::now();
    if run(5) {
        report(5, "approximation error", t, approximation_error());
    }
    let sweep_dir = tempfile::tempdir().unwrap();
    if run(6) || run(12) {
        let t = Instant::now();
        let res = run_decision_sweep(1, sweep_dir.path());
        if run(6) {
            report(6, "decision-problem gap", t, decision_gap(&res));
        }
    }
    if run(7) || run(11) {
        let t = Instant::now();
        let cfg = reachability_config();
        let res = harness::sweep(&cfg).unwrap();
        if run(7) {
            report(7, "reachability deficit", t, reachability(&res));
        }
        if run(11) {
            report(11, "N_con sanity (soft)", t, n_con_sanity(&res));
        }
    }
    let t = Instant::now();
    if run(8) {
        report(8, "levels protocol", t, levels_protocol());
    }
    let t = Instant::now();
    if run(9) {
        report(9, "optimization-free", t, optimization_free());
    }
    let t = Instant::now();
    if run(10) {
        report(10, "diagnostics ordering", t, diagnostics_ordering());
    }
    let t = Instant::now();
    if run(12) {
        report(12, "determinism", t, determinism(sweep_dir.path()));
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
