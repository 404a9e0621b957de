//! Seeded genetic algorithm for DG placement and sizing.
//!
//! A chromosome is a list of `n_dg` genes, each selecting a candidate bus
//! and one entry from the discrete active/reactive sizing grids. Fitness is
//! the blended benefit index of the decoded plan minus a penalty
//! proportional to the summed operating-limit excesses; plans whose power
//! flow fails to converge score negative infinity.
//!
//! The generational scheme is: rank the population, keep the better half,
//! pair the survivors randomly for single-point crossover, then mutate each
//! offspring field independently. The single best individual is carried
//! into the next generation unmutated and keeps its cached fitness, so the
//! best score can never regress between generations. Evolution stops after
//! a fixed stall window without strict improvement or at the generation
//! cap. All randomness comes from one seeded stream, making runs with the
//! same seed reproduce bit for bit.

use crate::indices::{
    benefit_index, check_constraints, line_loss_sum, ltap_sum, total_violation_excess,
    voltage_profile_sum, IndexOptions, IndexReport, Violation,
};
use crate::network::{DGPlan, Network, NetworkError};
use crate::powerflow::{solve, PowerFlowError, PowerFlowSolution, SolverOptions};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while configuring or running an optimisation.
#[derive(Debug, Error)]
pub enum GaError {
    #[error("invalid GA configuration: {0}")]
    BadConfig(String),
    #[error("base-case power flow did not converge; the feeder cannot be scored")]
    BaseCaseDiverged,
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Search-space and loop parameters for the genetic algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    /// Number of DG units per plan (one gene each).
    pub n_dg: usize,
    /// Bus ids eligible for placement.
    pub candidate_buses: Vec<usize>,
    /// Discrete active-power sizes, MW.
    pub p_grid: Vec<f64>,
    /// Discrete reactive-power sizes, MVAr.
    pub q_grid: Vec<f64>,
    pub population_size: usize,
    /// Per-field probability of redrawing a gene field, in [0, 1].
    pub mutation_rate: f64,
    /// Fitness penalty per pu of summed constraint excess.
    pub penalty_coefficient: f64,
    /// Stop after this many consecutive generations without improvement.
    pub stall_generations: usize,
    pub max_generations: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            n_dg: 1,
            candidate_buses: Vec::new(),
            p_grid: Vec::new(),
            q_grid: Vec::new(),
            population_size: 40,
            mutation_rate: 0.05,
            penalty_coefficient: 100.0,
            stall_generations: 15,
            max_generations: 200,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    /// Reject configurations the algorithm cannot run on.
    pub fn validate(&self, net: &Network) -> Result<(), GaError> {
        if self.n_dg == 0 {
            return Err(GaError::BadConfig("n_dg must be at least 1".into()));
        }
        if self.candidate_buses.is_empty() {
            return Err(GaError::BadConfig(
                "candidate_buses must not be empty".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for &bus in &self.candidate_buses {
            if !seen.insert(bus) {
                return Err(GaError::BadConfig(format!(
                    "candidate bus {bus} listed twice"
                )));
            }
            match net.bus_index(bus) {
                None => {
                    return Err(GaError::BadConfig(format!(
                        "candidate bus {bus} does not exist"
                    )));
                }
                Some(i) if net.buses[i].kind == crate::network::BusKind::Slack => {
                    return Err(GaError::BadConfig(format!(
                        "candidate bus {bus} is the slack bus"
                    )));
                }
                Some(_) => {}
            }
        }
        for (name, grid) in [("p_grid", &self.p_grid), ("q_grid", &self.q_grid)] {
            if grid.is_empty() {
                return Err(GaError::BadConfig(format!("{name} must not be empty")));
            }
            if grid.iter().any(|v| !v.is_finite()) {
                return Err(GaError::BadConfig(format!("{name} entries must be finite")));
            }
        }
        if self.population_size < 2 {
            return Err(GaError::BadConfig(
                "population_size must be at least 2".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(GaError::BadConfig(format!(
                "mutation_rate must lie in [0, 1], got {}",
                self.mutation_rate
            )));
        }
        if !self.penalty_coefficient.is_finite() || self.penalty_coefficient < 0.0 {
            return Err(GaError::BadConfig(format!(
                "penalty_coefficient must be non-negative, got {}",
                self.penalty_coefficient
            )));
        }
        if self.stall_generations == 0 {
            return Err(GaError::BadConfig(
                "stall_generations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One candidate solution: `(bus index, p index, q index)` per DG unit,
/// all indices into the corresponding `GaConfig` lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<(usize, usize, usize)>,
}

impl Chromosome {
    /// Decode into a concrete placement plan.
    pub fn to_plan(&self, cfg: &GaConfig) -> DGPlan {
        DGPlan::from_triples(
            &self
                .genes
                .iter()
                .map(|&(b, p, q)| (cfg.candidate_buses[b], cfg.p_grid[p], cfg.q_grid[q]))
                .collect::<Vec<_>>(),
        )
    }
}

/// Fitness summary of one evaluated plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanScore {
    pub llri: f64,
    pub vpii: f64,
    pub ltapii: f64,
    /// Blended benefit index before any penalty.
    pub bi: f64,
    pub violations: Vec<Violation>,
    /// `bi` minus the penalty on summed violation excess.
    pub fitness: f64,
}

/// Scores DG plans against a fixed base case.
///
/// The base-case power flow and its raw index sums are computed once; every
/// plan evaluation then needs a single with-DG solve. Both the genetic
/// algorithm and the exhaustive enumerator score plans through this type,
/// so their fitness values for the same plan are identical.
pub struct Evaluator<'a> {
    net: &'a Network,
    solver: SolverOptions,
    index_opts: IndexOptions,
    penalty_coefficient: f64,
    base_sol: PowerFlowSolution,
    ll_base: f64,
    vp_base: f64,
    ltap_base: f64,
}

impl<'a> Evaluator<'a> {
    /// Solve the base case and freeze its index sums.
    pub fn new(
        net: &'a Network,
        solver: SolverOptions,
        index_opts: IndexOptions,
        penalty_coefficient: f64,
    ) -> Result<Self, GaError> {
        let base_sol = solve(net, &solver)?;
        if !base_sol.converged {
            return Err(GaError::BaseCaseDiverged);
        }
        let ll_base = line_loss_sum(net, &base_sol);
        let vp_base = voltage_profile_sum(net, &base_sol);
        let ltap_base = ltap_sum(net, &base_sol, index_opts.ltap_end);
        Ok(Evaluator {
            net,
            solver,
            index_opts,
            penalty_coefficient,
            base_sol,
            ll_base,
            vp_base,
            ltap_base,
        })
    }

    /// The cached base-case solution.
    pub fn base_solution(&self) -> &PowerFlowSolution {
        &self.base_sol
    }

    /// The feeder being scored.
    pub fn network(&self) -> &Network {
        self.net
    }

    /// Score a plan, or `None` when its power flow cannot be solved.
    pub fn evaluate(&self, plan: &DGPlan) -> Option<PlanScore> {
        let dg_net = self.net.apply_dg(plan).ok()?;
        let dg_sol = solve(&dg_net, &self.solver).ok()?;
        if !dg_sol.converged {
            return None;
        }
        let llri = line_loss_sum(&dg_net, &dg_sol) / self.ll_base;
        let vpii = voltage_profile_sum(&dg_net, &dg_sol) / self.vp_base;
        let ltapii = ltap_sum(&dg_net, &dg_sol, self.index_opts.ltap_end) / self.ltap_base;
        let bi = benefit_index(llri, vpii, ltapii, &self.index_opts.weights);
        let violations = check_constraints(&dg_net, &dg_sol, plan);
        let fitness = bi - self.penalty_coefficient * total_violation_excess(&violations);
        Some(PlanScore {
            llri,
            vpii,
            ltapii,
            bi,
            violations,
            fitness,
        })
    }

    /// Penalised fitness; negative infinity when the plan is unsolvable.
    pub fn fitness(&self, plan: &DGPlan) -> f64 {
        self.evaluate(plan).map_or(f64::NEG_INFINITY, |s| s.fitness)
    }

    /// Full with/without comparison for a plan whose power flow converges.
    pub fn full_report(&self, plan: &DGPlan) -> Option<IndexReport> {
        let dg_net = self.net.apply_dg(plan).ok()?;
        let dg_sol = solve(&dg_net, &self.solver).ok()?;
        if !dg_sol.converged {
            return None;
        }
        Some(crate::indices::index_report(
            self.net,
            &self.base_sol,
            &dg_net,
            &dg_sol,
            plan,
            &self.index_opts,
        ))
    }
}

/// Best and mean fitness of one generation's population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

/// Outcome of one optimisation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best_plan: DGPlan,
    pub best_fitness: f64,
    /// Per-generation statistics, starting with the initial population.
    pub history: Vec<GenerationStats>,
    /// Generations evolved (excluding the initial population).
    pub generations_run: usize,
    /// Total number of plan evaluations.
    pub evaluations: usize,
}

struct Dims {
    buses: usize,
    p: usize,
    q: usize,
    n_dg: usize,
}

fn random_chromosome(rng: &mut ChaCha8Rng, dims: &Dims) -> Chromosome {
    Chromosome {
        genes: (0..dims.n_dg)
            .map(|_| {
                (
                    rng.random_range(0..dims.buses),
                    rng.random_range(0..dims.p),
                    rng.random_range(0..dims.q),
                )
            })
            .collect(),
    }
}

/// Single-point crossover. Multi-unit chromosomes cut at a gene boundary;
/// single-unit chromosomes cut inside the gene so the operator still mixes
/// material (after the bus field or after the size field).
fn crossover(a: &Chromosome, b: &Chromosome, rng: &mut ChaCha8Rng) -> (Chromosome, Chromosome) {
    let n = a.genes.len();
    if n == 1 {
        let cut = rng.random_range(1..3usize);
        let (ab, ap, aq) = a.genes[0];
        let (bb, bp, bq) = b.genes[0];
        let (c1, c2) = match cut {
            1 => ((ab, bp, bq), (bb, ap, aq)),
            _ => ((ab, ap, bq), (bb, bp, aq)),
        };
        (
            Chromosome { genes: vec![c1] },
            Chromosome { genes: vec![c2] },
        )
    } else {
        let cut = rng.random_range(1..n);
        let mut g1 = a.genes[..cut].to_vec();
        g1.extend_from_slice(&b.genes[cut..]);
        let mut g2 = b.genes[..cut].to_vec();
        g2.extend_from_slice(&a.genes[cut..]);
        (Chromosome { genes: g1 }, Chromosome { genes: g2 })
    }
}

/// Redraw each gene field independently with probability `rate`.
fn mutate(c: &mut Chromosome, rate: f64, dims: &Dims, rng: &mut ChaCha8Rng) {
    for gene in &mut c.genes {
        if rng.random::<f64>() < rate {
            gene.0 = rng.random_range(0..dims.buses);
        }
        if rng.random::<f64>() < rate {
            gene.1 = rng.random_range(0..dims.p);
        }
        if rng.random::<f64>() < rate {
            gene.2 = rng.random_range(0..dims.q);
        }
    }
}

/// Rank population indices best-first; equal fitness keeps earlier
/// individuals ahead, so ordering is total and reproducible.
fn rank(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    order
}

/// Run the genetic algorithm on a feeder.
pub fn run_ga(
    net: &Network,
    cfg: &GaConfig,
    solver: &SolverOptions,
    index_opts: &IndexOptions,
) -> Result<GaResult, GaError> {
    cfg.validate(net)?;
    let evaluator = Evaluator::new(net, *solver, *index_opts, cfg.penalty_coefficient)?;
    let dims = Dims {
        buses: cfg.candidate_buses.len(),
        p: cfg.p_grid.len(),
        q: cfg.q_grid.len(),
        n_dg: cfg.n_dg,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let pop_size = cfg.population_size;

    let mut population: Vec<Chromosome> = (0..pop_size)
        .map(|_| random_chromosome(&mut rng, &dims))
        .collect();
    let mut fitness: Vec<f64> = population
        .iter()
        .map(|c| evaluator.fitness(&c.to_plan(cfg)))
        .collect();
    let mut evaluations = pop_size;

    let stats_of = |generation: usize, fitness: &[f64]| {
        let best = fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = fitness.iter().sum::<f64>() / fitness.len() as f64;
        GenerationStats {
            generation,
            best,
            mean,
        }
    };

    let mut history = vec![stats_of(0, &fitness)];
    let order = rank(&fitness);
    let mut best_index = order[0];
    let mut best_fitness = fitness[best_index];
    let mut best_chromosome = population[best_index].clone();
    let mut stall = 0usize;
    let mut generations_run = 0usize;

    for generation in 1..=cfg.max_generations {
        // Truncation selection: the better half survives (at least one).
        let order = rank(&fitness);
        let survivor_count = (pop_size / 2).max(1);
        let survivors: Vec<usize> = order[..survivor_count].to_vec();
        let elite = survivors[0];
        let elite_chromosome = population[elite].clone();
        let elite_fitness = fitness[elite];

        let mut shuffled = survivors.clone();
        shuffled.shuffle(&mut rng);

        // Breed offspring from cyclic pairs of the shuffled survivors until
        // the elite slot plus offspring restore the population size.
        let mut offspring: Vec<Chromosome> = Vec::with_capacity(pop_size - 1);
        let mut k = 0usize;
        while offspring.len() < pop_size - 1 {
            let a = shuffled[k % shuffled.len()];
            let b = shuffled[(k + 1) % shuffled.len()];
            k += 2;
            let (c1, c2) = crossover(&population[a], &population[b], &mut rng);
            offspring.push(c1);
            if offspring.len() < pop_size - 1 {
                offspring.push(c2);
            }
        }
        for child in &mut offspring {
            mutate(child, cfg.mutation_rate, &dims, &mut rng);
        }

        let offspring_fitness: Vec<f64> = offspring
            .iter()
            .map(|c| evaluator.fitness(&c.to_plan(cfg)))
            .collect();
        evaluations += offspring.len();

        // The elite keeps its cached fitness; nothing is re-evaluated.
        population = std::iter::once(elite_chromosome).chain(offspring).collect();
        fitness = std::iter::once(elite_fitness)
            .chain(offspring_fitness)
            .collect();

        history.push(stats_of(generation, &fitness));
        generations_run = generation;

        let order = rank(&fitness);
        best_index = order[0];
        if fitness[best_index] > best_fitness {
            best_fitness = fitness[best_index];
            best_chromosome = population[best_index].clone();
            stall = 0;
        } else {
            stall += 1;
        }
        if stall >= cfg.stall_generations {
            break;
        }
    }

    Ok(GaResult {
        best_plan: best_chromosome.to_plan(cfg),
        best_fitness,
        history,
        generations_run,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::load_network_from_text;
    use approx::assert_relative_eq;

    const CHAIN: &str = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,1.2,0.6
3,load,1.0,0.5
4,load,1.5,0.9
5,load,0.8,0.4
[branches]
1,1,2,0.02,0.04,1.0
2,2,3,0.02,0.04,1.0
3,3,4,0.02,0.04,1.0
4,4,5,0.02,0.04,1.0
";

    fn small_config() -> GaConfig {
        GaConfig {
            n_dg: 1,
            candidate_buses: vec![2, 3, 4, 5],
            p_grid: vec![0.0, 1.0, 2.0, 3.0],
            q_grid: vec![0.0, 1.0, 2.0],
            population_size: 12,
            max_generations: 40,
            rng_seed: 7,
            ..GaConfig::default()
        }
    }

    fn net() -> crate::network::Network {
        load_network_from_text(CHAIN).unwrap()
    }

    #[test]
    fn chromosome_decodes_through_the_grids() {
        let cfg = small_config();
        let c = Chromosome {
            genes: vec![(2, 3, 1)],
        };
        let plan = c.to_plan(&cfg);
        assert_eq!(plan.units.len(), 1);
        assert_eq!(plan.units[0].bus, 4);
        assert_eq!(plan.units[0].p_mw, 3.0);
        assert_eq!(plan.units[0].q_mvar, 1.0);
    }

    #[test]
    fn evaluator_scores_empty_plan_at_the_weighted_identity() {
        let net = net();
        let ev = Evaluator::new(
            &net,
            SolverOptions::default(),
            IndexOptions::default(),
            100.0,
        )
        .unwrap();
        let score = ev.evaluate(&DGPlan::empty()).unwrap();
        assert_eq!(score.llri, 1.0);
        assert_eq!(score.vpii, 1.0);
        assert_eq!(score.ltapii, 1.0);
        assert!((score.fitness - 1.0).abs() < 1.0e-9);
    }

    #[test]
    fn evaluator_rejects_unsolvable_plans_with_negative_infinity() {
        let net = net();
        let ev = Evaluator::new(
            &net,
            SolverOptions::default(),
            IndexOptions::default(),
            100.0,
        )
        .unwrap();
        // A large negative injection acts as an impossible extra load.
        let hopeless = DGPlan::from_triples(&[(5, -500.0, -300.0)]);
        assert_eq!(ev.fitness(&hopeless), f64::NEG_INFINITY);
    }

    #[test]
    fn penalty_reduces_fitness_below_the_raw_benefit() {
        let net = net();
        let ev = Evaluator::new(
            &net,
            SolverOptions::default(),
            IndexOptions::default(),
            100.0,
        )
        .unwrap();
        // Enough injection to push voltages above 1.05 pu somewhere.
        let hot = DGPlan::from_triples(&[(5, 12.0, 8.0)]);
        let score = ev.evaluate(&hot).unwrap();
        assert!(!score.violations.is_empty(), "expected a voltage violation");
        assert!(score.fitness < score.bi);
        assert_relative_eq!(
            score.bi - score.fitness,
            100.0 * total_violation_excess(&score.violations),
            epsilon = 1.0e-12
        );
    }

    #[test]
    fn identical_seeds_reproduce_identical_results() {
        let net = net();
        let cfg = small_config();
        let a = run_ga(
            &net,
            &cfg,
            &SolverOptions::default(),
            &IndexOptions::default(),
        )
        .unwrap();
        let b = run_ga(
            &net,
            &cfg,
            &SolverOptions::default(),
            &IndexOptions::default(),
        )
        .unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb, "same seed must reproduce the run byte for byte");
    }

    #[test]
    fn best_fitness_never_regresses_across_generations() {
        let net = net();
        let mut cfg = small_config();
        cfg.rng_seed = 123;
        let result = run_ga(
            &net,
            &cfg,
            &SolverOptions::default(),
            &IndexOptions::default(),
        )
        .unwrap();
        for pair in result.history.windows(2) {
            assert!(
                pair[1].best >= pair[0].best,
                "generation {} best {} fell below generation {} best {}",
                pair[1].generation,
                pair[1].best,
                pair[0].generation,
                pair[0].best
            );
        }
        assert_eq!(
            result.best_fitness,
            result.history.last().unwrap().best,
            "final best must equal the last generation's best"
        );
    }

    #[test]
    fn degenerate_search_space_stalls_out_quickly() {
        let net = net();
        let cfg = GaConfig {
            n_dg: 1,
            candidate_buses: vec![3],
            p_grid: vec![1.0],
            q_grid: vec![0.5],
            population_size: 4,
            stall_generations: 5,
            max_generations: 100,
            ..GaConfig::default()
        };
        let result = run_ga(
            &net,
            &cfg,
            &SolverOptions::default(),
            &IndexOptions::default(),
        )
        .unwrap();
        assert_eq!(
            result.generations_run, 5,
            "a single-point space cannot improve, so the stall window ends the run"
        );
        assert_eq!(result.best_plan.units[0].bus, 3);
    }

    #[test]
    fn zero_generation_budget_returns_the_initial_best() {
        let net = net();
        let cfg = GaConfig {
            max_generations: 0,
            ..small_config()
        };
        let result = run_ga(
            &net,
            &cfg,
            &SolverOptions::default(),
            &IndexOptions::default(),
        )
        .unwrap();
        assert_eq!(result.generations_run, 0);
        assert_eq!(result.history.len(), 1);
        assert_eq!(result.evaluations, cfg.population_size);
        assert_eq!(result.best_fitness, result.history[0].best);
    }

    #[test]
    fn config_validation_catches_bad_inputs() {
        let net = net();
        let mut cfg = small_config();
        cfg.candidate_buses = vec![];
        assert!(matches!(cfg.validate(&net), Err(GaError::BadConfig(_))));

        let mut cfg = small_config();
        cfg.candidate_buses = vec![1];
        assert!(
            cfg.validate(&net).is_err(),
            "slack bus is not a valid candidate"
        );

        let mut cfg = small_config();
        cfg.candidate_buses = vec![99];
        assert!(
            cfg.validate(&net).is_err(),
            "unknown bus is not a valid candidate"
        );

        let mut cfg = small_config();
        cfg.mutation_rate = 1.5;
        assert!(cfg.validate(&net).is_err());

        let mut cfg = small_config();
        cfg.population_size = 1;
        assert!(cfg.validate(&net).is_err());
    }

    #[test]
    fn ga_finds_a_beneficial_plan_on_a_heavy_chain() {
        let net = net();
        let result = run_ga(
            &net,
            &small_config(),
            &SolverOptions::default(),
            &IndexOptions::default(),
        )
        .unwrap();
        assert!(
            result.best_fitness > 1.5,
            "a well-placed DG must clearly beat the empty plan, got {}",
            result.best_fitness
        );
        let (p, _) = result.best_plan.total_mw_mvar();
        assert!(p > 0.0, "the winning plan should inject active power");
    }
}
