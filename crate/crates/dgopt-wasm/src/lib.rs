//! Browser bindings for the feeder toolkit.
//!
//! Every export takes plain strings or numbers and returns a JSON string,
//! so the demo page in `www/` needs nothing beyond the glue that
//! `wasm-pack build --target web` generates. The `*_json` functions hold
//! all the logic and compile on any target, which keeps them testable with
//! an ordinary `cargo test`.

use dgopt::cli::parse_plan_inline;
use dgopt::ga::{run_ga, GaConfig};
use dgopt::indices::{index_report, IndexOptions, IndexReport};
use dgopt::network::{load_network_from_text, DGPlan, Network};
use dgopt::oracle::plan_compact;
use dgopt::powerflow::{solve, PowerFlowSolution, SolverOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Everything the page needs to draw one solved case.
#[derive(Serialize)]
struct SolveView {
    bus_ids: Vec<usize>,
    v_mag_pu: Vec<f64>,
    v_ang_rad: Vec<f64>,
    i_branch_amp: Vec<f64>,
    p_loss_kw: f64,
    q_loss_kvar: f64,
    min_v_pu: f64,
    regulation_pct: f64,
    iterations: usize,
    converged: bool,
}

/// A base case and a with-DG case side by side, plus the benefit indices.
#[derive(Serialize)]
struct CompareView {
    plan: String,
    base: SolveView,
    with_dg: SolveView,
    report: IndexReport,
}

/// A finished GA run: the winner, the search space it used, and the
/// per-generation fitness trace for the convergence chart.
#[derive(Serialize)]
struct OptimizeView {
    best_plan: String,
    best_fitness: f64,
    generations_run: usize,
    evaluations: usize,
    history_best: Vec<f64>,
    history_mean: Vec<f64>,
    candidate_buses: Vec<usize>,
    p_grid_mw: Vec<f64>,
    q_grid_mvar: Vec<f64>,
    compare: CompareView,
}

fn view_of(net: &Network, sol: &PowerFlowSolution) -> SolveView {
    SolveView {
        bus_ids: net.buses.iter().map(|b| b.id).collect(),
        v_mag_pu: sol.v_mag.clone(),
        v_ang_rad: sol.v_ang.clone(),
        i_branch_amp: sol.i_branch_amps(net),
        p_loss_kw: sol.p_loss * net.s_base_mva * 1.0e3,
        q_loss_kvar: sol.q_loss * net.s_base_mva * 1.0e3,
        min_v_pu: sol.min_v_mag(),
        regulation_pct: sol.voltage_regulation_pct(),
        iterations: sol.iterations,
        converged: sol.converged,
    }
}

fn parse_feeder(text: &str) -> Result<Network, String> {
    load_network_from_text(text).map_err(|e| e.to_string())
}

fn solve_checked(net: &Network, opts: &SolverOptions) -> Result<PowerFlowSolution, String> {
    let sol = solve(net, opts).map_err(|e| e.to_string())?;
    if !sol.converged {
        return Err(format!(
            "power flow did not converge within {} iterations (mismatch {:.3e})",
            sol.iterations, sol.mismatch
        ));
    }
    Ok(sol)
}

/// Solve a feeder and report voltages, currents, and losses as JSON.
pub fn solve_json(feeder: &str) -> Result<String, String> {
    let net = parse_feeder(feeder)?;
    let sol = solve_checked(&net, &SolverOptions::default())?;
    serde_json::to_string(&view_of(&net, &sol)).map_err(|e| e.to_string())
}

fn compare_view(net: &Network, plan: &DGPlan) -> Result<CompareView, String> {
    let opts = SolverOptions::default();
    let index_opts = IndexOptions::default();
    let base_sol = solve_checked(net, &opts)?;
    let dg_net = net.apply_dg(plan).map_err(|e| e.to_string())?;
    let dg_sol = solve_checked(&dg_net, &opts)?;
    let report = index_report(net, &base_sol, &dg_net, &dg_sol, plan, &index_opts);
    Ok(CompareView {
        plan: plan_compact(plan),
        base: view_of(net, &base_sol),
        with_dg: view_of(&dg_net, &dg_sol),
        report,
    })
}

/// Compare a feeder with and without an inline `bus:p:q;bus:p:q` plan.
pub fn compare_json(feeder: &str, plan: &str) -> Result<String, String> {
    let net = parse_feeder(feeder)?;
    let plan = parse_plan_inline(plan)?;
    serde_json::to_string(&compare_view(&net, &plan)?).map_err(|e| e.to_string())
}

/// A ready-to-run search space for feeders the user just pasted in:
/// every non-slack bus is a candidate, active power is gridded from zero
/// to 60 % of the total feeder load, and reactive power to 60 % of the
/// total reactive load.
fn demo_ga_config(net: &Network, n_dg: usize, seed: u64) -> Result<GaConfig, String> {
    let slack = net.slack_index().ok_or("feeder has no slack bus")?;
    let candidate_buses: Vec<usize> = net
        .buses
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != slack)
        .map(|(_, b)| b.id)
        .collect();
    let (p_total, q_total) = net.total_load_mw_mvar();
    if p_total <= 0.0 {
        return Err("feeder carries no load to optimise against".into());
    }
    let p_top = 0.6 * p_total;
    let p_grid = (0..=5).map(|k| p_top * k as f64 / 5.0).collect();
    let q_top = 0.6 * q_total;
    let q_grid = if q_top > 0.0 {
        vec![0.0, q_top / 2.0, q_top]
    } else {
        vec![0.0]
    };
    Ok(GaConfig {
        n_dg,
        candidate_buses,
        p_grid,
        q_grid,
        rng_seed: seed,
        ..GaConfig::default()
    })
}

/// Run the GA on an automatically derived search space and report the
/// winner, its indices, and the convergence history as JSON.
pub fn optimize_json(feeder: &str, n_dg: usize, seed: u64) -> Result<String, String> {
    let net = parse_feeder(feeder)?;
    let cfg = demo_ga_config(&net, n_dg, seed)?;
    let solver = SolverOptions::default();
    let index_opts = IndexOptions::default();
    let result = run_ga(&net, &cfg, &solver, &index_opts).map_err(|e| e.to_string())?;
    let compare = compare_view(&net, &result.best_plan)?;
    let view = OptimizeView {
        best_plan: plan_compact(&result.best_plan),
        best_fitness: result.best_fitness,
        generations_run: result.generations_run,
        evaluations: result.evaluations,
        history_best: result.history.iter().map(|g| g.best).collect(),
        history_mean: result.history.iter().map(|g| g.mean).collect(),
        candidate_buses: cfg.candidate_buses,
        p_grid_mw: cfg.p_grid,
        q_grid_mvar: cfg.q_grid,
        compare,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// The bundled nine-bus demo feeder, pre-loaded into the page's editor.
#[wasm_bindgen]
pub fn sample_feeder() -> String {
    include_str!("../../../feeders/bus9.fdr").to_string()
}

/// Solve the pasted feeder; returns a `SolveView` JSON string.
#[wasm_bindgen]
pub fn solve_feeder(feeder: &str) -> Result<String, JsError> {
    solve_json(feeder).map_err(|e| JsError::new(&e))
}

/// Compare the pasted feeder against an inline plan; returns `CompareView` JSON.
#[wasm_bindgen]
pub fn compare_feeder(feeder: &str, plan: &str) -> Result<String, JsError> {
    compare_json(feeder, plan).map_err(|e| JsError::new(&e))
}

/// Optimise DG placement on the pasted feeder; returns `OptimizeView` JSON.
#[wasm_bindgen]
pub fn optimize_feeder(feeder: &str, n_dg: u32, seed: u32) -> Result<String, JsError> {
    optimize_json(feeder, n_dg as usize, seed as u64).map_err(|e| JsError::new(&e))
}
