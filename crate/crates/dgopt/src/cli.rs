//! Command-line interface: solve, compare, optimize, sweep, and validate.
//!
//! Exit codes: 0 on success, 1 on input errors (unreadable or invalid
//! feeder/plan data), 2 when a power flow fails to converge, and 3 on
//! configuration errors (bad flags, bad weights, missing study sections).

use crate::ga::{run_ga, Evaluator, GaConfig, GaError, GaResult};
use crate::indices::{FitnessMode, IndexOptions, IndexWeights, LtapEnd};
use crate::network::{load_network, parse_network, DGPlan, Network, NetworkError};
use crate::oracle::{enumerate_all_with, plan_compact, OracleError, RankedPlan, SearchSpace};
use crate::powerflow::{solve, PowerFlowError, PowerFlowSolution, SolveMethod, SolverOptions};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Exit code for input problems: unreadable files, parse failures,
/// semantically invalid feeders, bad plans.
pub const EXIT_INPUT: i32 = 1;
/// Exit code when a required power flow does not converge.
pub const EXIT_NO_CONVERGENCE: i32 = 2;
/// Exit code for configuration problems: bad flags, weights, or study files.
pub const EXIT_CONFIG: i32 = 3;

/// Distribution-feeder analysis and DG placement toolkit.
#[derive(Debug, Parser)]
#[command(name = "dgopt", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one power flow and write voltage/branch tables.
    Solve(SolveArgs),
    /// Compare the feeder with and without a DG plan.
    Compare(CompareArgs),
    /// Search for the best DG plan with the genetic algorithm.
    Optimize(OptimizeArgs),
    /// Exhaustively score every plan in a discrete search space.
    Sweep(SweepArgs),
    /// Check a feeder file and list any problems.
    Validate(ValidateArgs),
}

/// Flags shared by every analysis subcommand.
#[derive(Debug, Args, Clone)]
struct CommonArgs {
    /// Feeder file to analyse.
    #[arg(long)]
    feeder: Option<PathBuf>,
    /// Study configuration (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for result files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Power mismatch convergence threshold, pu.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Power-flow iteration budget.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Slack bus voltage, pu.
    #[arg(long)]
    slack_voltage: Option<f64>,
    /// Power-flow method: auto, sweep, or newton.
    #[arg(long)]
    method: Option<String>,
    /// Benefit weights as bw_vpi,bw_llr,bw_ltap (must sum to 1).
    #[arg(long)]
    weights: Option<String>,
    /// Benefit blend: consistent or as-written.
    #[arg(long)]
    fitness_mode: Option<String>,
    /// Endpoint voltage in the transfer sum: receiving or sending.
    #[arg(long)]
    ltap_end: Option<String>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// DG plan: inline `bus:p_mw:q_mvar[,bus:p_mw:q_mvar...]` or a file of
    /// `bus,p_mw,q_mvar` lines.
    #[arg(long)]
    plan: Option<String>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Random seed for the genetic algorithm.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Feeder file to check.
    #[arg(long)]
    feeder: Option<PathBuf>,
    /// Study configuration naming the feeder.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Study configuration file (TOML). Flags override individual values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Feeder path, resolved relative to the working directory.
    pub feeder: Option<String>,
    /// Output directory.
    pub out_dir: Option<String>,
    /// DG plan for `compare` (inline spelling or a file path).
    pub plan: Option<String>,
    /// Endpoint voltage for the transfer sum.
    pub ltap_end: Option<LtapEnd>,
    pub solver: Option<SolverOptions>,
    pub weights: Option<IndexWeights>,
    pub ga: Option<GaConfig>,
    pub sweep: Option<SearchSpace>,
}

/// A failure mapped to a process exit code.
#[derive(Debug)]
struct AppError {
    code: i32,
    message: String,
}

impl AppError {
    fn input(message: impl Into<String>) -> Self {
        AppError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn no_convergence(message: impl Into<String>) -> Self {
        AppError {
            code: EXIT_NO_CONVERGENCE,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        AppError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<NetworkError> for AppError {
    fn from(e: NetworkError) -> Self {
        AppError::input(e.to_string())
    }
}

impl From<PowerFlowError> for AppError {
    fn from(e: PowerFlowError) -> Self {
        match e {
            PowerFlowError::BadNetwork(_) => AppError::input(e.to_string()),
            PowerFlowError::Degenerate(_) => AppError::no_convergence(e.to_string()),
        }
    }
}

impl From<GaError> for AppError {
    fn from(e: GaError) -> Self {
        match e {
            GaError::BadConfig(_) => AppError::config(e.to_string()),
            GaError::BaseCaseDiverged => AppError::no_convergence(e.to_string()),
            GaError::PowerFlow(p) => p.into(),
            GaError::Network(n) => n.into(),
        }
    }
}

impl From<OracleError> for AppError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Ga(g) => g.into(),
            other => AppError::config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::input(format!("I/O error: {e}"))
    }
}

/// Parse argv and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Optimize(args) => cmd_optimize(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Validate(args) => cmd_validate(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

/// Everything a run mode needs, resolved from flags + config + defaults.
struct Resolved {
    feeder_path: PathBuf,
    net: Network,
    out_dir: PathBuf,
    solver: SolverOptions,
    index_opts: IndexOptions,
    config_path: Option<PathBuf>,
    config: StudyConfig,
}

fn load_study_config(path: &Path) -> Result<StudyConfig, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| AppError::config(format!("bad config {}: {e}", path.display())))
}

fn parse_weights_flag(raw: &str) -> Result<(f64, f64, f64), AppError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(AppError::config(format!(
            "--weights needs three comma-separated values (bw_vpi,bw_llr,bw_ltap), got {raw:?}"
        )));
    }
    let mut vals = [0.0_f64; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| AppError::config(format!("--weights entry {part:?} is not a number")))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

fn resolve(common: &CommonArgs) -> Result<Resolved, AppError> {
    let config_path = common.config.clone();
    let config = match &config_path {
        Some(p) => load_study_config(p)?,
        None => StudyConfig::default(),
    };

    let feeder_path = common
        .feeder
        .clone()
        .or_else(|| config.feeder.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            AppError::config("no feeder given: pass --feeder or set `feeder` in the config")
        })?;
    let net = load_network(&feeder_path)?;

    let out_dir = common
        .out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("dgopt-out"));

    let mut solver = config.solver.unwrap_or_default();
    if let Some(t) = common.tolerance {
        solver.tolerance = t;
    }
    if let Some(n) = common.max_iterations {
        solver.max_iterations = n;
    }
    if let Some(v) = common.slack_voltage {
        solver.slack_voltage = v;
    }
    if let Some(m) = &common.method {
        solver.method = m.parse::<SolveMethod>().map_err(AppError::config)?;
    }
    if !solver.tolerance.is_finite() || solver.tolerance <= 0.0 {
        return Err(AppError::config(format!(
            "tolerance must be positive, got {}",
            solver.tolerance
        )));
    }
    if !solver.slack_voltage.is_finite() || solver.slack_voltage <= 0.0 {
        return Err(AppError::config(format!(
            "slack voltage must be positive, got {}",
            solver.slack_voltage
        )));
    }

    let mut weights = config.weights.unwrap_or_default();
    if let Some(raw) = &common.weights {
        let (vpi, llr, ltap) = parse_weights_flag(raw)?;
        weights.bw_vpi = vpi;
        weights.bw_llr = llr;
        weights.bw_ltap = ltap;
    }
    if let Some(raw) = &common.fitness_mode {
        weights.fitness_mode = raw.parse::<FitnessMode>().map_err(AppError::config)?;
    }
    weights
        .validate()
        .map_err(|e| AppError::config(e.to_string()))?;

    let mut ltap_end = config.ltap_end.unwrap_or_default();
    if let Some(raw) = &common.ltap_end {
        ltap_end = match raw.as_str() {
            "receiving" => LtapEnd::Receiving,
            "sending" => LtapEnd::Sending,
            other => {
                return Err(AppError::config(format!(
                    "unknown --ltap-end {other:?} (expected \"receiving\" or \"sending\")"
                )));
            }
        };
    }

    Ok(Resolved {
        feeder_path,
        net,
        out_dir,
        solver,
        index_opts: IndexOptions { weights, ltap_end },
        config_path,
        config,
    })
}

/// Parse a plan given inline (`bus:p:q,bus:p:q`) or as a file of
/// `bus,p_mw,q_mvar` lines with `#` comments.
fn parse_plan(raw: &str) -> Result<DGPlan, AppError> {
    let path = Path::new(raw);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::input(format!("cannot read plan {}: {e}", path.display())))?;
        return parse_plan_file(&text)
            .map_err(|e| AppError::input(format!("bad plan file {}: {e}", path.display())));
    }
    if raw.contains(':') {
        return parse_plan_inline(raw).map_err(AppError::input);
    }
    Err(AppError::input(format!(
        "plan {raw:?} is neither an existing file nor an inline bus:p:q list"
    )))
}

/// Parse an inline `bus:p_mw:q_mvar` list separated by `,` or `;`.
pub fn parse_plan_inline(raw: &str) -> Result<DGPlan, String> {
    let mut triples = Vec::new();
    for token in raw.split([',', ';']) {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let parts: Vec<&str> = token.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("plan unit {token:?} must be bus:p_mw:q_mvar"));
        }
        let bus: usize = parts[0]
            .trim()
            .parse()
            .map_err(|_| format!("bad bus id in plan unit {token:?}"))?;
        let p: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| format!("bad p_mw in plan unit {token:?}"))?;
        let q: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("bad q_mvar in plan unit {token:?}"))?;
        triples.push((bus, p, q));
    }
    if triples.is_empty() {
        return Err("plan is empty".into());
    }
    Ok(DGPlan::from_triples(&triples))
}

fn parse_plan_file(text: &str) -> Result<DGPlan, String> {
    let mut triples = Vec::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let data = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let data = data.trim();
        if data.is_empty() || data == "bus,p_mw,q_mvar" {
            continue;
        }
        let fields: Vec<&str> = data.split(',').collect();
        if fields.len() != 3 {
            return Err(format!(
                "line {}: plan row needs bus,p_mw,q_mvar",
                lineno + 1
            ));
        }
        let bus: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| format!("line {}: bad bus id {:?}", lineno + 1, fields[0]))?;
        let p: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| format!("line {}: bad p_mw {:?}", lineno + 1, fields[1]))?;
        let q: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| format!("line {}: bad q_mvar {:?}", lineno + 1, fields[2]))?;
        triples.push((bus, p, q));
    }
    if triples.is_empty() {
        return Err("plan file holds no units".into());
    }
    Ok(DGPlan::from_triples(&triples))
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn file_sha256(path: &Path) -> Result<String, AppError> {
    let bytes = std::fs::read(path)
        .map_err(|e| AppError::input(format!("cannot hash {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

/// Deterministic run manifest: inputs, their hashes, and every effective
/// setting. Identical inputs and settings produce identical bytes, so
/// reruns can be verified by comparing manifests.
fn manifest_text(
    command: &str,
    resolved: &Resolved,
    extra: &[(String, String)],
) -> Result<String, AppError> {
    let mut out = String::new();
    let _ = writeln!(out, "tool = dgopt {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "command = {command}");
    let _ = writeln!(out, "feeder = {}", resolved.feeder_path.display());
    let _ = writeln!(
        out,
        "feeder_sha256 = {}",
        file_sha256(&resolved.feeder_path)?
    );
    match &resolved.config_path {
        Some(p) => {
            let _ = writeln!(out, "config = {}", p.display());
            let _ = writeln!(out, "config_sha256 = {}", file_sha256(p)?);
        }
        None => {
            let _ = writeln!(out, "config = -");
            let _ = writeln!(out, "config_sha256 = -");
        }
    }
    let s = &resolved.solver;
    let _ = writeln!(out, "tolerance = {}", s.tolerance);
    let _ = writeln!(out, "max_iterations = {}", s.max_iterations);
    let _ = writeln!(out, "slack_voltage = {}", s.slack_voltage);
    let method = match s.method {
        SolveMethod::Auto => "auto",
        SolveMethod::Sweep => "sweep",
        SolveMethod::Newton => "newton",
    };
    let _ = writeln!(out, "method = {method}");
    let w = &resolved.index_opts.weights;
    let _ = writeln!(out, "bw_vpi = {}", w.bw_vpi);
    let _ = writeln!(out, "bw_llr = {}", w.bw_llr);
    let _ = writeln!(out, "bw_ltap = {}", w.bw_ltap);
    let mode = match w.fitness_mode {
        FitnessMode::Consistent => "consistent",
        FitnessMode::AsWritten => "as-written",
    };
    let _ = writeln!(out, "fitness_mode = {mode}");
    let end = match resolved.index_opts.ltap_end {
        LtapEnd::Receiving => "receiving",
        LtapEnd::Sending => "sending",
    };
    let _ = writeln!(out, "ltap_end = {end}");
    for (key, value) in extra {
        let _ = writeln!(out, "{key} = {value}");
    }
    Ok(out)
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), AppError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| AppError::input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| AppError::input(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn voltages_csv(net: &Network, sol: &PowerFlowSolution) -> String {
    let mut out = String::from("bus,v_mag_pu,v_ang_rad\n");
    for (bus, (vm, va)) in net.buses.iter().zip(sol.v_mag.iter().zip(&sol.v_ang)) {
        let _ = writeln!(out, "{},{},{}", bus.id, vm, va);
    }
    out
}

fn branches_csv(net: &Network, sol: &PowerFlowSolution) -> String {
    let mut out = String::from("branch,from,to,i_pu,i_amp,p_flow_pu,q_flow_pu\n");
    let i_base = net.i_base_a();
    let flows = sol.branch_flows(net);
    for ((br, &i), &(p, q)) in net.branches.iter().zip(&sol.i_branch).zip(&flows) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            br.id,
            br.from_bus,
            br.to_bus,
            i,
            i * i_base,
            p,
            q
        );
    }
    out
}

fn solve_summary(net: &Network, sol: &PowerFlowSolution) -> String {
    let mut out = String::new();
    let (p_bal, q_bal) = sol.total_losses(net);
    let _ = writeln!(out, "buses:                {}", net.buses.len());
    let _ = writeln!(out, "branches:             {}", net.branches.len());
    let _ = writeln!(out, "loops:                {}", net.loop_count());
    let _ = writeln!(out, "converged:            {}", sol.converged);
    let _ = writeln!(out, "iterations:           {}", sol.iterations);
    let _ = writeln!(out, "mismatch (pu):        {:e}", sol.mismatch);
    let _ = writeln!(
        out,
        "slack P (MW):         {:.6}",
        sol.p_slack * net.s_base_mva
    );
    let _ = writeln!(
        out,
        "slack Q (MVAr):       {:.6}",
        sol.q_slack * net.s_base_mva
    );
    let _ = writeln!(
        out,
        "losses (kW):          {:.4}",
        sol.p_loss * net.s_base_mva * 1.0e3
    );
    let _ = writeln!(
        out,
        "losses (kvar):        {:.4}",
        sol.q_loss * net.s_base_mva * 1.0e3
    );
    let _ = writeln!(
        out,
        "losses by balance:    {:.4} kW / {:.4} kvar",
        p_bal * net.s_base_mva * 1.0e3,
        q_bal * net.s_base_mva * 1.0e3
    );
    let _ = writeln!(out, "min voltage (pu):     {:.6}", sol.min_v_mag());
    let _ = writeln!(
        out,
        "regulation (%):       {:.4}",
        sol.voltage_regulation_pct()
    );
    out
}

fn cmd_solve(args: &SolveArgs) -> Result<i32, AppError> {
    let resolved = resolve(&args.common)?;
    let sol = solve(&resolved.net, &resolved.solver)?;
    let summary = solve_summary(&resolved.net, &sol);
    print!("{summary}");
    write_out(
        &resolved.out_dir,
        "voltages.csv",
        &voltages_csv(&resolved.net, &sol),
    )?;
    write_out(
        &resolved.out_dir,
        "branches.csv",
        &branches_csv(&resolved.net, &sol),
    )?;
    write_out(&resolved.out_dir, "summary.txt", &summary)?;
    let manifest = manifest_text("solve", &resolved, &[])?;
    write_out(&resolved.out_dir, "manifest.txt", &manifest)?;
    if !sol.converged {
        return Err(AppError::no_convergence(format!(
            "power flow did not converge in {} iterations (mismatch {:e})",
            sol.iterations, sol.mismatch
        )));
    }
    Ok(0)
}

fn indices_csv_row(plan: &DGPlan, score: &crate::ga::PlanScore) -> String {
    format!(
        "plan,llri,vpii,ltapii,bi,violations\n{},{},{},{},{},{}\n",
        plan_compact(plan),
        score.llri,
        score.vpii,
        score.ltapii,
        score.bi,
        score.violations.len()
    )
}

fn cmd_compare(args: &CompareArgs) -> Result<i32, AppError> {
    let resolved = resolve(&args.common)?;
    let plan_raw = args
        .plan
        .clone()
        .or_else(|| resolved.config.plan.clone())
        .ok_or_else(|| {
            AppError::config("no plan given: pass --plan or set `plan` in the config")
        })?;
    let plan = parse_plan(&plan_raw)?;

    let evaluator = Evaluator::new(
        &resolved.net,
        resolved.solver,
        resolved.index_opts,
        GaConfig::default().penalty_coefficient,
    )?;
    let score = evaluator.evaluate(&plan).ok_or_else(|| {
        AppError::no_convergence("power flow with the DG plan applied did not converge")
    })?;
    let report = evaluator
        .full_report(&plan)
        .expect("report must exist when evaluation succeeded");

    let mut compare_text = String::new();
    let _ = writeln!(compare_text, "feeder: {}", resolved.feeder_path.display());
    let _ = writeln!(compare_text, "plan:   {}", plan_compact(&plan));
    let _ = writeln!(compare_text);
    compare_text.push_str(&report.summary_text());
    print!("{compare_text}");

    let dg_net = resolved.net.apply_dg(&plan)?;
    let base_sol = evaluator.base_solution().clone();
    let dg_sol = solve(&dg_net, &resolved.solver)?;
    write_out(&resolved.out_dir, "compare.txt", &compare_text)?;
    write_out(
        &resolved.out_dir,
        "indices.csv",
        &indices_csv_row(&plan, &score),
    )?;
    write_out(
        &resolved.out_dir,
        "voltages_base.csv",
        &voltages_csv(&resolved.net, &base_sol),
    )?;
    write_out(
        &resolved.out_dir,
        "voltages_dg.csv",
        &voltages_csv(&dg_net, &dg_sol),
    )?;
    write_out(
        &resolved.out_dir,
        "branches_base.csv",
        &branches_csv(&resolved.net, &base_sol),
    )?;
    write_out(
        &resolved.out_dir,
        "branches_dg.csv",
        &branches_csv(&dg_net, &dg_sol),
    )?;
    let manifest = manifest_text(
        "compare",
        &resolved,
        &[("plan".to_string(), plan_compact(&plan))],
    )?;
    write_out(&resolved.out_dir, "manifest.txt", &manifest)?;
    Ok(0)
}

fn history_csv(result: &GaResult) -> String {
    let mut out = String::from("generation,best,mean\n");
    for s in &result.history {
        let _ = writeln!(out, "{},{},{}", s.generation, s.best, s.mean);
    }
    out
}

fn best_plan_file(plan: &DGPlan) -> String {
    let mut out = String::from("# best DG plan\nbus,p_mw,q_mvar\n");
    for u in &plan.units {
        let _ = writeln!(out, "{},{},{}", u.bus, u.p_mw, u.q_mvar);
    }
    out
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<i32, AppError> {
    let resolved = resolve(&args.common)?;
    let mut ga_cfg = resolved
        .config
        .ga
        .clone()
        .ok_or_else(|| AppError::config("optimize needs a [ga] section in the config file"))?;
    if let Some(seed) = args.seed {
        ga_cfg.rng_seed = seed;
    }

    let result = run_ga(
        &resolved.net,
        &ga_cfg,
        &resolved.solver,
        &resolved.index_opts,
    )?;

    let evaluator = Evaluator::new(
        &resolved.net,
        resolved.solver,
        resolved.index_opts,
        ga_cfg.penalty_coefficient,
    )?;
    let best_score = evaluator.evaluate(&result.best_plan);

    let mut lines = String::new();
    let _ = writeln!(
        lines,
        "best plan:        {}",
        plan_compact(&result.best_plan)
    );
    let _ = writeln!(lines, "best fitness:     {:.6}", result.best_fitness);
    let _ = writeln!(lines, "generations:      {}", result.generations_run);
    let _ = writeln!(lines, "evaluations:      {}", result.evaluations);
    if let Some(score) = &best_score {
        let _ = writeln!(lines, "violations:       {}", score.violations.len());
    }
    print!("{lines}");

    write_out(&resolved.out_dir, "history.csv", &history_csv(&result))?;
    write_out(
        &resolved.out_dir,
        "best_plan.txt",
        &best_plan_file(&result.best_plan),
    )?;
    if let Some(report) = evaluator.full_report(&result.best_plan) {
        let mut compare_text = String::new();
        let _ = writeln!(compare_text, "feeder: {}", resolved.feeder_path.display());
        let _ = writeln!(compare_text, "plan:   {}", plan_compact(&result.best_plan));
        let _ = writeln!(compare_text);
        compare_text.push_str(&report.summary_text());
        write_out(&resolved.out_dir, "compare.txt", &compare_text)?;
    }
    if let Some(score) = &best_score {
        write_out(
            &resolved.out_dir,
            "indices.csv",
            &indices_csv_row(&result.best_plan, score),
        )?;
    }
    let extra = vec![
        ("seed".to_string(), ga_cfg.rng_seed.to_string()),
        (
            "population_size".to_string(),
            ga_cfg.population_size.to_string(),
        ),
        (
            "mutation_rate".to_string(),
            ga_cfg.mutation_rate.to_string(),
        ),
        (
            "penalty_coefficient".to_string(),
            ga_cfg.penalty_coefficient.to_string(),
        ),
        (
            "stall_generations".to_string(),
            ga_cfg.stall_generations.to_string(),
        ),
        (
            "max_generations".to_string(),
            ga_cfg.max_generations.to_string(),
        ),
        ("n_dg".to_string(), ga_cfg.n_dg.to_string()),
    ];
    let manifest = manifest_text("optimize", &resolved, &extra)?;
    write_out(&resolved.out_dir, "manifest.txt", &manifest)?;
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32, AppError> {
    let resolved = resolve(&args.common)?;
    let space = match (&resolved.config.sweep, &resolved.config.ga) {
        (Some(space), _) => space.clone(),
        (None, Some(ga)) => SearchSpace::from_ga_config(ga),
        (None, None) => {
            return Err(AppError::config(
                "sweep needs a [sweep] (or [ga]) section in the config file",
            ));
        }
    };
    let penalty = resolved
        .config
        .ga
        .as_ref()
        .map(|g| g.penalty_coefficient)
        .unwrap_or_else(|| GaConfig::default().penalty_coefficient);

    let ranked = enumerate_all_with(
        &resolved.net,
        &space,
        &resolved.solver,
        &resolved.index_opts,
        penalty,
    )?;
    print_sweep_head(&ranked);
    write_out(
        &resolved.out_dir,
        "sweep.csv",
        &crate::oracle::sweep_csv(&ranked),
    )?;
    let extra = vec![
        ("n_dg".to_string(), space.n_dg.to_string()),
        ("plans".to_string(), ranked.len().to_string()),
        ("penalty_coefficient".to_string(), penalty.to_string()),
    ];
    let manifest = manifest_text("sweep", &resolved, &extra)?;
    write_out(&resolved.out_dir, "manifest.txt", &manifest)?;
    Ok(0)
}

fn print_sweep_head(ranked: &[RankedPlan]) {
    println!("ranked {} plans", ranked.len());
    for (i, r) in ranked.iter().take(5).enumerate() {
        match &r.score {
            Some(s) => println!(
                "  #{}: {}  fitness {:.6}  (violations: {})",
                i + 1,
                plan_compact(&r.plan),
                r.fitness,
                s.violations.len()
            ),
            None => println!("  #{}: {}  unsolved", i + 1, plan_compact(&r.plan)),
        }
    }
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32, AppError> {
    let feeder_path = match (&args.feeder, &args.config) {
        (Some(p), _) => p.clone(),
        (None, Some(c)) => {
            let config = load_study_config(c)?;
            config
                .feeder
                .map(PathBuf::from)
                .ok_or_else(|| AppError::config("config file names no feeder"))?
        }
        (None, None) => {
            return Err(AppError::config("validate needs --feeder or --config"));
        }
    };
    let text = std::fs::read_to_string(&feeder_path)
        .map_err(|e| AppError::input(format!("cannot read {}: {e}", feeder_path.display())))?;
    let net = parse_network(&text)?;
    let problems = net.validate();
    if problems.is_empty() {
        println!(
            "ok: {} buses, {} branches, {} loop(s), {:.3} MW / {:.3} MVAr load",
            net.buses.len(),
            net.branches.len(),
            net.loop_count(),
            net.total_load_mw_mvar().0,
            net.total_load_mw_mvar().1
        );
        Ok(0)
    } else {
        eprintln!(
            "{} problem(s) in {}:",
            problems.len(),
            feeder_path.display()
        );
        for p in &problems {
            eprintln!("  - {p}");
        }
        Err(AppError::input(format!(
            "feeder {} failed validation",
            feeder_path.display()
        )))
    }
}
