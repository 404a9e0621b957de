//! Exhaustive enumeration of a DG search space.
//!
//! Enumerates every multiset of `n_dg` genes over the same discrete
//! bus/size grids the genetic algorithm searches, scores each decoded plan
//! through the same [`Evaluator`], and ranks the results. On spaces small
//! enough to enumerate this provides the exact optimum, which makes it both
//! a brute-force solver in its own right and a correctness reference for
//! the stochastic search.

use crate::ga::{Evaluator, GaConfig, GaError, PlanScore};
use crate::indices::IndexOptions;
use crate::network::{BusKind, DGPlan, Network};
use crate::powerflow::SolverOptions;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// Default ceiling on the number of plans an enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Errors raised while describing or enumerating a search space.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid search space: {0}")]
    BadSpace(String),
    #[error("search space holds {count} plans, above the cap of {cap}; shrink the grids or raise the cap")]
    TooLarge { count: u128, cap: u128 },
    #[error("search space size overflows the counter; shrink the grids")]
    CountOverflow,
    #[error(transparent)]
    Ga(#[from] GaError),
}

/// Discrete placement/sizing space shared with the genetic algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub candidate_buses: Vec<usize>,
    /// Discrete active-power sizes, MW.
    pub p_grid: Vec<f64>,
    /// Discrete reactive-power sizes, MVAr.
    pub q_grid: Vec<f64>,
    /// Number of DG units per plan.
    pub n_dg: usize,
    /// Refuse to enumerate more plans than this.
    pub cap: u64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            candidate_buses: Vec::new(),
            p_grid: Vec::new(),
            q_grid: Vec::new(),
            n_dg: 1,
            cap: DEFAULT_ENUMERATION_CAP as u64,
        }
    }
}

impl SearchSpace {
    /// The space a [`GaConfig`] searches, with the default cap.
    pub fn from_ga_config(cfg: &GaConfig) -> Self {
        SearchSpace {
            candidate_buses: cfg.candidate_buses.clone(),
            p_grid: cfg.p_grid.clone(),
            q_grid: cfg.q_grid.clone(),
            n_dg: cfg.n_dg,
            ..SearchSpace::default()
        }
    }

    /// Number of distinct genes: buses x active sizes x reactive sizes.
    pub fn gene_count(&self) -> usize {
        self.candidate_buses.len() * self.p_grid.len() * self.q_grid.len()
    }

    /// Number of distinct plans: multisets of `n_dg` genes out of
    /// `gene_count()`, i.e. C(G + n - 1, n). `None` when the count
    /// overflows 128 bits.
    pub fn enumeration_count(&self) -> Option<u128> {
        let g = self.gene_count() as u128;
        if g == 0 {
            return Some(0);
        }
        let n = self.n_dg as u128;
        // Product form of the binomial coefficient; every partial product
        // after the division is exact.
        let mut count: u128 = 1;
        for i in 1..=n {
            count = count.checked_mul(g - 1 + i)? / i;
        }
        Some(count)
    }

    fn validate(&self, net: &Network) -> Result<(), OracleError> {
        if self.n_dg == 0 {
            return Err(OracleError::BadSpace("n_dg must be at least 1".into()));
        }
        if self.candidate_buses.is_empty() {
            return Err(OracleError::BadSpace(
                "candidate_buses must not be empty".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for &bus in &self.candidate_buses {
            if !seen.insert(bus) {
                return Err(OracleError::BadSpace(format!(
                    "candidate bus {bus} listed twice"
                )));
            }
            match net.bus_index(bus) {
                None => {
                    return Err(OracleError::BadSpace(format!(
                        "candidate bus {bus} does not exist"
                    )))
                }
                Some(i) if net.buses[i].kind == BusKind::Slack => {
                    return Err(OracleError::BadSpace(format!(
                        "candidate bus {bus} is the slack bus"
                    )));
                }
                Some(_) => {}
            }
        }
        for (name, grid) in [("p_grid", &self.p_grid), ("q_grid", &self.q_grid)] {
            if grid.is_empty() {
                return Err(OracleError::BadSpace(format!("{name} must not be empty")));
            }
            if grid.iter().any(|v| !v.is_finite()) {
                return Err(OracleError::BadSpace(format!(
                    "{name} entries must be finite"
                )));
            }
        }
        let count = self.enumeration_count().ok_or(OracleError::CountOverflow)?;
        if count > self.cap as u128 {
            return Err(OracleError::TooLarge {
                count,
                cap: self.cap as u128,
            });
        }
        Ok(())
    }

    /// Decode a flat gene index into `(bus, p_mw, q_mvar)`.
    fn decode(&self, gene: usize) -> (usize, f64, f64) {
        let pq = self.p_grid.len() * self.q_grid.len();
        let b = gene / pq;
        let rem = gene % pq;
        (
            self.candidate_buses[b],
            self.p_grid[rem / self.q_grid.len()],
            self.q_grid[rem % self.q_grid.len()],
        )
    }

    fn plan_of(&self, genes: &[usize]) -> DGPlan {
        DGPlan::from_triples(&genes.iter().map(|&g| self.decode(g)).collect::<Vec<_>>())
    }
}

/// One enumerated plan with its score, used in ranked listings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPlan {
    pub plan: DGPlan,
    /// `None` when the plan's power flow did not converge.
    pub score: Option<PlanScore>,
    /// Penalised fitness; negative infinity for unsolvable plans.
    pub fitness: f64,
}

/// Enumerate and score every plan in the space, best first.
///
/// Ties in fitness are broken by the lexicographic order of the gene
/// multiset, so the ranking is total and reproducible. Uses the same
/// penalty default as the genetic algorithm.
pub fn enumerate_all(
    net: &Network,
    space: &SearchSpace,
    solver: &SolverOptions,
    index_opts: &IndexOptions,
) -> Result<Vec<RankedPlan>, OracleError> {
    enumerate_all_with(
        net,
        space,
        solver,
        index_opts,
        GaConfig::default().penalty_coefficient,
    )
}

/// [`enumerate_all`] with an explicit penalty coefficient.
pub fn enumerate_all_with(
    net: &Network,
    space: &SearchSpace,
    solver: &SolverOptions,
    index_opts: &IndexOptions,
    penalty_coefficient: f64,
) -> Result<Vec<RankedPlan>, OracleError> {
    space.validate(net)?;
    let evaluator = Evaluator::new(net, *solver, *index_opts, penalty_coefficient)?;
    let g = space.gene_count();
    let n = space.n_dg;

    // Walk all non-decreasing index sequences of length n over 0..g
    // (one canonical representative per multiset).
    let mut genes = vec![0usize; n];
    let mut ranked: Vec<(Vec<usize>, RankedPlan)> = Vec::new();
    loop {
        let plan = space.plan_of(&genes);
        let score = evaluator.evaluate(&plan);
        let fitness = score.as_ref().map_or(f64::NEG_INFINITY, |s| s.fitness);
        ranked.push((
            genes.clone(),
            RankedPlan {
                plan,
                score,
                fitness,
            },
        ));
        if !advance(&mut genes, g) {
            return Ok(finish_ranking(ranked));
        }
    }
}

/// Step to the next non-decreasing sequence; false when exhausted.
fn advance(genes: &mut [usize], g: usize) -> bool {
    for pos in (0..genes.len()).rev() {
        if genes[pos] + 1 < g {
            let v = genes[pos] + 1;
            for slot in genes.iter_mut().skip(pos) {
                *slot = v;
            }
            return true;
        }
    }
    false
}

fn finish_ranking(mut ranked: Vec<(Vec<usize>, RankedPlan)>) -> Vec<RankedPlan> {
    ranked.sort_by(|a, b| {
        b.1.fitness
            .total_cmp(&a.1.fitness)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.into_iter().map(|(_, r)| r).collect()
}

/// The exact optimum of the space (the top entry of [`enumerate_all`]).
pub fn best_plan(
    net: &Network,
    space: &SearchSpace,
    solver: &SolverOptions,
    index_opts: &IndexOptions,
) -> Result<RankedPlan, OracleError> {
    let ranked = enumerate_all(net, space, solver, index_opts)?;
    ranked
        .into_iter()
        .next()
        .ok_or_else(|| OracleError::BadSpace("search space is empty".into()))
}

/// Compact single-token plan spelling: `bus:p_mw:q_mvar` per unit,
/// semicolon-separated (safe inside a CSV field).
pub fn plan_compact(plan: &DGPlan) -> String {
    plan.units
        .iter()
        .map(|u| format!("{}:{}:{}", u.bus, u.p_mw, u.q_mvar))
        .collect::<Vec<_>>()
        .join(";")
}

/// Ranked results as CSV: `plan,llri,vpii,ltapii,bi,violations`.
///
/// Unsolvable plans report empty index fields and `unsolved` in the
/// violations column.
pub fn sweep_csv(ranked: &[RankedPlan]) -> String {
    let mut out = String::from("plan,llri,vpii,ltapii,bi,violations\n");
    for r in ranked {
        match &r.score {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    plan_compact(&r.plan),
                    s.llri,
                    s.vpii,
                    s.ltapii,
                    s.bi,
                    s.violations.len()
                );
            }
            None => {
                let _ = writeln!(out, "{},,,,,unsolved", plan_compact(&r.plan));
            }
        }
    }
    out
}
