//! Random 1-in-3 positive SAT instances, their penalty energy, and an
//! exhaustive ground-state solver.
//!
//! A clause holds three distinct positive literals and is satisfied when
//! exactly one of them is true. The penalty of a clause with `t` true literals
//! is `(t - 1)^2`, which takes values in {0, 1, 4}.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Clause = [usize; 3];

/// Largest variable count the exhaustive solver accepts.
pub const BRUTE_FORCE_CAP: usize = 24;

/// Default SAT/UNSAT threshold on the ground (or measured) energy.
pub const SAT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFormula")]
pub struct Formula {
    n: usize,
    clauses: Vec<Clause>,
}

#[derive(Deserialize)]
struct RawFormula {
    n: usize,
    clauses: Vec<Vec<usize>>,
}

impl TryFrom<RawFormula> for Formula {
    type Error = Error;

    fn try_from(raw: RawFormula) -> Result<Self> {
        let clauses = raw
            .clauses
            .into_iter()
            .map(|c| {
                <[usize; 3]>::try_from(c.as_slice()).map_err(|_| {
                    Error::InvalidFormula(format!("clause {c:?} does not have 3 literals"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Formula::new(raw.n, clauses)
    }
}

impl Formula {
    /// Builds a formula, canonicalizing each clause to sorted order and the
    /// clause list to sorted order. Rejects repeated literals, out-of-range
    /// indices, and duplicate clauses.
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidFormula("n must be positive".into()));
        }
        let mut canon = Vec::with_capacity(clauses.len());
        for mut c in clauses {
            c.sort_unstable();
            if c[0] == c[1] || c[1] == c[2] {
                return Err(Error::InvalidFormula(format!("clause {c:?} repeats a variable")));
            }
            if c[2] >= n {
                return Err(Error::InvalidFormula(format!(
                    "clause {c:?} references a variable >= n = {n}"
                )));
            }
            canon.push(c);
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidFormula(format!("duplicate clause {:?}", w[0])));
        }
        Ok(Self { n, clauses: canon })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Clause density m / n.
    pub fn density(&self) -> f64 {
        self.m() as f64 / self.n as f64
    }

    /// Per-clause bit masks over basis-state indices (bit j = variable j).
    pub fn clause_masks(&self) -> Vec<u64> {
        self.clauses
            .iter()
            .map(|c| c.iter().fold(0u64, |m, &v| m | (1u64 << v)))
            .collect()
    }
}

/// A truth assignment; `bits[j] == 1` means variable j is true.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub bits: Vec<u8>,
}

impl Assignment {
    pub fn from_index(z: u64, n: usize) -> Self {
        Self {
            bits: (0..n).map(|j| ((z >> j) & 1) as u8).collect(),
        }
    }

    pub fn to_index(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |z, (j, &b)| z | (u64::from(b & 1) << j))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| 1 - (b & 1)).collect(),
        }
    }
}

impl std::fmt::Display for Assignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSolution {
    /// Minimum penalty energy.
    pub energy: u32,
    /// Basis indices of every assignment attaining `energy`, ascending.
    pub ground_indices: Vec<u64>,
    /// Minimum number of violated clauses over all assignments.
    pub min_violated: u32,
    n: usize,
}

impl GroundSolution {
    pub fn ground_assignments(&self) -> Vec<Assignment> {
        self.ground_indices
            .iter()
            .map(|&z| Assignment::from_index(z, self.n))
            .collect()
    }

    pub fn is_sat(&self) -> bool {
        f64::from(self.energy) < SAT_THRESHOLD
    }
}

/// How `approximation_error` picks "the" ground state among degenerate ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTieBreak {
    /// Fewest violated clauses within the degenerate ground set.
    #[default]
    MinViolated,
    /// Lowest basis index in the degenerate ground set.
    FirstFound,
}

/// Number of clauses implied by density `alpha`, rounded half-up.
pub fn clause_count(n: usize, alpha: f64) -> usize {
    (alpha * n as f64 + 0.5 + 1e-9).floor().max(0.0) as usize
}

pub fn binomial3(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

fn unrank_triples(n: usize) -> Vec<Clause> {
    let mut all = Vec::with_capacity(binomial3(n));
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                all.push([i, j, k]);
            }
        }
    }
    all
}

/// Draws a formula with `round(alpha * n)` distinct clauses, uniformly
/// without replacement from all 3-subsets of the variables.
pub fn generate_instance<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Result<Formula> {
    if n < 3 {
        return Err(Error::InvalidFormula(format!("need n >= 3, got {n}")));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidFormula(format!("invalid clause density {alpha}")));
    }
    let m = clause_count(n, alpha);
    let max = binomial3(n);
    if m > max {
        return Err(Error::DensityTooHigh { n, m, max });
    }
    let clauses = if max <= 1 << 16 {
        let all = unrank_triples(n);
        index::sample(rng, max, m).into_iter().map(|i| all[i]).collect()
    } else {
        let mut seen = HashSet::with_capacity(m);
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let mut c = [0usize; 3];
            for (slot, v) in c.iter_mut().zip(index::sample(rng, n, 3)) {
                *slot = v;
            }
            c.sort_unstable();
            if seen.insert(c) {
                out.push(c);
            }
        }
        out
    };
    Formula::new(n, clauses)
}

fn true_count(clause: &Clause, a: &Assignment) -> u32 {
    clause.iter().map(|&v| u32::from(a.bits[v] & 1)).sum()
}

fn check_assignment(f: &Formula, a: &Assignment) {
    assert_eq!(a.len(), f.n(), "assignment length must equal the variable count");
}

/// Sum over clauses of `(t - 1)^2`, `t` the number of true literals.
pub fn penalty_energy(f: &Formula, a: &Assignment) -> u32 {
    check_assignment(f, a);
    f.clauses()
        .iter()
        .map(|c| {
            let t = true_count(c, a) as i32;
            ((t - 1) * (t - 1)) as u32
        })
        .sum()
}

/// Number of clauses whose true-literal count is not exactly one.
pub fn violated_count(f: &Formula, a: &Assignment) -> u32 {
    check_assignment(f, a);
    f.clauses().iter().filter(|c| true_count(c, a) != 1).count() as u32
}

#[inline]
fn clause_penalty(t: u32) -> u32 {
    match t {
        0 => 1,
        1 => 0,
        2 => 1,
        _ => 4,
    }
}

/// Exhaustive minimum of the penalty energy and, separately, of the
/// violated-clause count.
pub fn brute_force_ground(f: &Formula) -> Result<GroundSolution> {
    let n = f.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::SizeCap { what: "exhaustive search", n, cap: BRUTE_FORCE_CAP });
    }
    let masks = f.clause_masks();
    let mut best = u32::MAX;
    let mut grounds = Vec::new();
    let mut min_violated = u32::MAX;
    for z in 0..(1u64 << n) {
        let mut energy = 0;
        let mut violated = 0;
        for &m in &masks {
            let t = (z & m).count_ones();
            energy += clause_penalty(t);
            violated += u32::from(t != 1);
        }
        min_violated = min_violated.min(violated);
        match energy.cmp(&best) {
            std::cmp::Ordering::Less => {
                best = energy;
                grounds.clear();
                grounds.push(z);
            }
            std::cmp::Ordering::Equal => grounds.push(z),
            std::cmp::Ordering::Greater => {}
        }
    }
    Ok(GroundSolution { energy: best, ground_indices: grounds, min_violated, n })
}

/// Violated clauses in the penalty ground state minus the true Max-SAT
/// optimum. Uses the default tie-break.
pub fn approximation_error(f: &Formula) -> Result<u32> {
    approximation_error_with(f, GroundTieBreak::default())
}

pub fn approximation_error_with(f: &Formula, tie: GroundTieBreak) -> Result<u32> {
    let g = brute_force_ground(f)?;
    let violated = |z: u64| violated_count(f, &Assignment::from_index(z, f.n()));
    let at_ground = match tie {
        GroundTieBreak::MinViolated => g.ground_indices.iter().map(|&z| violated(z)).min(),
        GroundTieBreak::FirstFound => g.ground_indices.first().map(|&z| violated(z)),
    }
    .expect("ground set is never empty");
    Ok(at_ground - g.min_violated)
}

/// True iff the formula has a zero-penalty assignment.
pub fn sat_oracle(f: &Formula) -> Result<bool> {
    Ok(brute_force_ground(f)?.is_sat())
}

/// A set of instances drawn at one (n, alpha) from one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub seed: u64,
    pub n: usize,
    pub alpha: f64,
    pub instances: Vec<Formula>,
}

impl Ensemble {
    /// Instance `i` draws from its own stream, so any prefix or any
    /// parallel split reproduces the same formulas.
    pub fn generate(seed: u64, n: usize, alpha: f64, count: usize) -> Result<Self> {
        let instances = (0..count)
            .map(|i| {
                let mut rng = crate::rng::stream(seed, &[0x5a7, n as u64, crate::rng::alpha_tag(alpha), i as u64]);
                generate_instance(n, alpha, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { seed, n, alpha, instances })
    }
}
