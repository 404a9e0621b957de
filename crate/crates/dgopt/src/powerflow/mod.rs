//! AC power flow for distribution feeders.
//!
//! Two solvers share one interface: a backward/forward sweep for radial
//! feeders and a Newton-Raphson solver on the bus admittance matrix for
//! feeders with closed tie loops. `SolveMethod::Auto` picks by topology.
//! All quantities in a [`PowerFlowSolution`] are per unit on the feeder
//! bases; a flat start at the slack voltage is used throughout.

mod newton;
mod sweep;

use crate::network::Network;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Backward/forward sweep when the feeder is radial, Newton otherwise.
    #[default]
    Auto,
    /// Backward/forward sweep; rejects feeders with loops.
    Sweep,
    /// Newton-Raphson on the bus admittance matrix.
    Newton,
}

impl std::str::FromStr for SolveMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(SolveMethod::Auto),
            "sweep" => Ok(SolveMethod::Sweep),
            "newton" => Ok(SolveMethod::Newton),
            other => Err(format!(
                "unknown method {other:?} (expected auto, sweep, or newton)"
            )),
        }
    }
}

/// Tunable solver parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Convergence threshold on the largest per-bus power mismatch, pu.
    pub tolerance: f64,
    /// Iteration budget before the solve is declared non-convergent.
    pub max_iterations: usize,
    /// Voltage magnitude held at the slack bus, pu.
    pub slack_voltage: f64,
    pub method: SolveMethod,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1.0e-6,
            max_iterations: 50,
            slack_voltage: 1.0,
            method: SolveMethod::Auto,
        }
    }
}

/// Errors for structurally unsolvable cases.
///
/// Running out of iterations is not an error: the solution is returned
/// with `converged = false` so callers can decide how to react.
#[derive(Debug, Error)]
pub enum PowerFlowError {
    #[error("network is not solvable: {0}")]
    BadNetwork(String),
    #[error("numerically degenerate system: {0}")]
    Degenerate(String),
}

/// Converged (or best-effort) state of one power-flow solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    /// Voltage magnitude per bus, pu, aligned with `Network::buses`.
    pub v_mag: Vec<f64>,
    /// Voltage angle per bus, radians.
    pub v_ang: Vec<f64>,
    /// Branch current magnitude, pu, aligned with `Network::branches`.
    pub i_branch: Vec<f64>,
    /// Active power supplied by the substation source, pu.
    pub p_slack: f64,
    /// Reactive power supplied by the substation source, pu.
    pub q_slack: f64,
    /// Total series active loss from the branch currents, pu.
    pub p_loss: f64,
    /// Total series reactive loss from the branch currents, pu.
    pub q_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest per-bus power mismatch at the returned state, pu.
    pub mismatch: f64,
    /// Position of the slack bus in the bus table.
    pub slack_index: usize,
}

impl PowerFlowSolution {
    /// Complex bus voltage reconstructed from magnitude and angle.
    pub fn v_complex(&self, index: usize) -> Complex64 {
        Complex64::from_polar(self.v_mag[index], self.v_ang[index])
    }

    /// Smallest voltage magnitude on the feeder, pu.
    pub fn min_v_mag(&self) -> f64 {
        self.v_mag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Voltage regulation in percent: drop from the slack voltage to the
    /// weakest bus, relative to the slack voltage.
    pub fn voltage_regulation_pct(&self) -> f64 {
        let v_slack = self.v_mag[self.slack_index];
        100.0 * (v_slack - self.min_v_mag()) / v_slack
    }

    /// Total losses from the power balance: generation minus demand, pu.
    ///
    /// This is an independent route to the same physical quantity as
    /// `p_loss`/`q_loss` (which sum per-branch series losses); the two must
    /// agree for a converged solve.
    pub fn total_losses(&self, net: &Network) -> (f64, f64) {
        let (load_p, load_q) = net.total_load_mw_mvar();
        let (gen_p, gen_q) = net.total_gen_mw_mvar();
        let p = self.p_slack + (gen_p - load_p) / net.s_base_mva;
        let q = self.q_slack + (gen_q - load_q) / net.s_base_mva;
        (p, q)
    }

    /// Branch currents in amperes on the feeder's current base.
    pub fn i_branch_amps(&self, net: &Network) -> Vec<f64> {
        let i_base = net.i_base_a();
        self.i_branch.iter().map(|i| i * i_base).collect()
    }

    /// Sending-end complex power flow per branch, (P, Q) in pu,
    /// oriented from each branch's `from_bus` to its `to_bus`.
    pub fn branch_flows(&self, net: &Network) -> Vec<(f64, f64)> {
        let index_of: HashMap<usize, usize> = net
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect();
        net.branches
            .iter()
            .map(|br| {
                let f = index_of[&br.from_bus];
                let t = index_of[&br.to_bus];
                let z = Complex64::new(br.r_pu(), br.x_pu());
                let vf = self.v_complex(f);
                let vt = self.v_complex(t);
                let i = (vf - vt) / z;
                let s = vf * i.conj();
                (s.re, s.im)
            })
            .collect()
    }
}

/// Network data pre-indexed for the solvers.
pub(crate) struct Prepared {
    /// Position of the slack bus.
    pub slack: usize,
    /// Branches as (from index, to index, series impedance pu).
    pub branches: Vec<(usize, usize, Complex64)>,
    /// Net scheduled injection per bus (generation minus load), pu.
    pub s_inj: Vec<Complex64>,
}

pub(crate) fn prepare(net: &Network) -> Result<Prepared, PowerFlowError> {
    let base_ok = |x: f64| x.is_finite() && x > 0.0;
    if !base_ok(net.s_base_mva) || !base_ok(net.v_base_kv) {
        return Err(PowerFlowError::BadNetwork(format!(
            "bases must be positive, got {} kV / {} MVA",
            net.v_base_kv, net.s_base_mva
        )));
    }
    let slack = net.slack_index().ok_or_else(|| {
        PowerFlowError::BadNetwork("network must have exactly one slack bus".into())
    })?;
    if !net.is_connected() {
        return Err(PowerFlowError::BadNetwork(
            "some buses are unreachable from the slack bus".into(),
        ));
    }
    let index_of: HashMap<usize, usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let mut branches = Vec::with_capacity(net.branches.len());
    for br in &net.branches {
        let z = Complex64::new(br.r_pu(), br.x_pu());
        if z.norm() < 1.0e-12 {
            return Err(PowerFlowError::Degenerate(format!(
                "branch {} has (numerically) zero series impedance",
                br.id
            )));
        }
        let f = *index_of.get(&br.from_bus).ok_or_else(|| {
            PowerFlowError::BadNetwork(format!(
                "branch {}: unknown from bus {}",
                br.id, br.from_bus
            ))
        })?;
        let t = *index_of.get(&br.to_bus).ok_or_else(|| {
            PowerFlowError::BadNetwork(format!("branch {}: unknown to bus {}", br.id, br.to_bus))
        })?;
        branches.push((f, t, z));
    }
    let s_inj = net
        .buses
        .iter()
        .map(|b| {
            Complex64::new(
                (b.p_gen_mw - b.p_load_mw) / net.s_base_mva,
                (b.q_gen_mvar - b.q_load_mvar) / net.s_base_mva,
            )
        })
        .collect();
    Ok(Prepared {
        slack,
        branches,
        s_inj,
    })
}

/// Largest per-bus scheduled-vs-calculated power mismatch, pu.
///
/// The calculated injection at each bus comes from the branch equations at
/// the candidate voltages; the slack bus is excluded because it balances
/// whatever the rest of the system requires.
pub(crate) fn power_mismatch(prep: &Prepared, v: &[Complex64]) -> f64 {
    let mut s_calc = vec![Complex64::ZERO; v.len()];
    for &(f, t, z) in &prep.branches {
        let i = (v[f] - v[t]) / z;
        s_calc[f] += v[f] * i.conj();
        s_calc[t] -= v[t] * i.conj();
    }
    let mut worst: f64 = 0.0;
    for (idx, (calc, spec)) in s_calc.iter().zip(&prep.s_inj).enumerate() {
        if idx == prep.slack {
            continue;
        }
        let res = spec - calc;
        worst = worst.max(res.re.abs()).max(res.im.abs());
    }
    worst
}

/// Run a power-flow solve on the feeder.
///
/// Structural problems (no single slack, disconnected buses, zero-impedance
/// branches, sweep requested on a looped feeder) are errors. Exhausting the
/// iteration budget returns the best-effort state with `converged = false`.
pub fn solve(net: &Network, opts: &SolverOptions) -> Result<PowerFlowSolution, PowerFlowError> {
    if !opts.tolerance.is_finite() || opts.tolerance <= 0.0 {
        return Err(PowerFlowError::BadNetwork(format!(
            "tolerance must be positive, got {}",
            opts.tolerance
        )));
    }
    if !opts.slack_voltage.is_finite() || opts.slack_voltage <= 0.0 {
        return Err(PowerFlowError::BadNetwork(format!(
            "slack voltage must be positive, got {}",
            opts.slack_voltage
        )));
    }
    let prep = prepare(net)?;
    let radial = net.loop_count() == 0;
    let method = match opts.method {
        SolveMethod::Auto => {
            if radial {
                SolveMethod::Sweep
            } else {
                SolveMethod::Newton
            }
        }
        m => m,
    };
    let (v, iterations, converged, mismatch) = match method {
        SolveMethod::Sweep => {
            if !radial {
                return Err(PowerFlowError::BadNetwork(
                    "sweep solver requires a radial feeder; use newton or auto".into(),
                ));
            }
            sweep::solve_sweep(&prep, opts)?
        }
        SolveMethod::Newton => newton::solve_newton(&prep, opts)?,
        SolveMethod::Auto => unreachable!("auto resolved above"),
    };
    Ok(finish(net, &prep, &v, iterations, converged, mismatch))
}

/// Derive branch currents, losses, and the slack power from bus voltages.
fn finish(
    net: &Network,
    prep: &Prepared,
    v: &[Complex64],
    iterations: usize,
    converged: bool,
    mismatch: f64,
) -> PowerFlowSolution {
    let mut i_branch = Vec::with_capacity(prep.branches.len());
    let mut p_loss = 0.0;
    let mut q_loss = 0.0;
    let mut into_slack = Complex64::ZERO;
    for (br, &(f, t, z)) in net.branches.iter().zip(&prep.branches) {
        let i = (v[f] - v[t]) / z;
        let i2 = i.norm_sqr();
        p_loss += i2 * br.r_pu();
        q_loss += i2 * br.x_pu();
        if f == prep.slack {
            into_slack -= i;
        }
        if t == prep.slack {
            into_slack += i;
        }
        i_branch.push(i.norm());
    }
    // Source output = net flow leaving the slack bus plus its own local load
    // (station service), minus any local generation.
    let s_out = v[prep.slack] * (-into_slack).conj();
    let slack_bus = &net.buses[prep.slack];
    let p_slack = s_out.re + (slack_bus.p_load_mw - slack_bus.p_gen_mw) / net.s_base_mva;
    let q_slack = s_out.im + (slack_bus.q_load_mvar - slack_bus.q_gen_mvar) / net.s_base_mva;
    PowerFlowSolution {
        v_mag: v.iter().map(|c| c.norm()).collect(),
        v_ang: v.iter().map(|c| c.arg()).collect(),
        i_branch,
        p_slack,
        q_slack,
        p_loss,
        q_loss,
        iterations,
        converged,
        mismatch,
        slack_index: prep.slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{load_network_from_text, DGPlan};
    use approx::assert_relative_eq;

    const TWO_BUS: &str = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,5.0,3.0
[branches]
1,1,2,0.02,0.04,1.0
";

    fn tight_opts() -> SolverOptions {
        SolverOptions {
            tolerance: 1.0e-10,
            ..SolverOptions::default()
        }
    }

    /// Exact two-bus solution from the closed-form quadratic:
    /// |V2|^2 is a root of v^2 + (2(rP+xQ) - 1)v + (r^2+x^2)(P^2+Q^2) = 0
    /// with P = 0.5, Q = 0.3, z = 0.02 + j0.04.
    const V2_EXPECTED: f64 = 0.97738844525104;
    const PLOSS_EXPECTED: f64 = 0.0071182708975492575;
    const QLOSS_EXPECTED: f64 = 0.014236541795098515;
    const I_EXPECTED: f64 = 0.5965849016506056;
    const ANG_EXPECTED: f64 = -0.01432437517636277;

    #[test]
    fn sweep_matches_closed_form_two_bus_solution() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let sol = solve(&net, &tight_opts()).unwrap();
        assert!(sol.converged, "two-bus case must converge");
        assert_relative_eq!(sol.v_mag[1], V2_EXPECTED, epsilon = 1.0e-9);
        assert_relative_eq!(sol.v_ang[1], ANG_EXPECTED, epsilon = 1.0e-9);
        assert_relative_eq!(sol.i_branch[0], I_EXPECTED, epsilon = 1.0e-9);
        assert_relative_eq!(sol.p_loss, PLOSS_EXPECTED, epsilon = 1.0e-9);
        assert_relative_eq!(sol.q_loss, QLOSS_EXPECTED, epsilon = 1.0e-9);
    }

    #[test]
    fn newton_matches_closed_form_two_bus_solution() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let opts = SolverOptions {
            method: SolveMethod::Newton,
            ..tight_opts()
        };
        let sol = solve(&net, &opts).unwrap();
        assert!(sol.converged);
        assert_relative_eq!(sol.v_mag[1], V2_EXPECTED, epsilon = 1.0e-9);
        assert_relative_eq!(sol.p_loss, PLOSS_EXPECTED, epsilon = 1.0e-9);
    }

    #[test]
    fn both_solvers_agree_on_a_radial_feeder() {
        let text = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,1.2,0.6
3,load,0.8,0.4
4,load,1.5,0.9
5,load,0.5,0.2
[branches]
1,1,2,0.02,0.04,1.0
2,2,3,0.03,0.05,0.8
3,2,4,0.025,0.045,1.2
4,4,5,0.02,0.04,0.6
";
        let net = load_network_from_text(text).unwrap();
        let sweep = solve(&net, &tight_opts()).unwrap();
        let newton = solve(
            &net,
            &SolverOptions {
                method: SolveMethod::Newton,
                ..tight_opts()
            },
        )
        .unwrap();
        assert!(sweep.converged && newton.converged);
        for i in 0..net.buses.len() {
            assert_relative_eq!(sweep.v_mag[i], newton.v_mag[i], epsilon = 1.0e-8);
            assert_relative_eq!(sweep.v_ang[i], newton.v_ang[i], epsilon = 1.0e-8);
        }
        assert_relative_eq!(sweep.p_loss, newton.p_loss, epsilon = 1.0e-8);
    }

    #[test]
    fn loss_routes_agree_for_converged_solves() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let sol = solve(&net, &tight_opts()).unwrap();
        let (p_bal, q_bal) = sol.total_losses(&net);
        assert_relative_eq!(sol.p_loss, p_bal, epsilon = 1.0e-9);
        assert_relative_eq!(sol.q_loss, q_bal, epsilon = 1.0e-9);
    }

    #[test]
    fn slack_power_covers_load_plus_losses() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let sol = solve(&net, &tight_opts()).unwrap();
        assert_relative_eq!(sol.p_slack, 0.5 + PLOSS_EXPECTED, epsilon = 1.0e-9);
        assert_relative_eq!(sol.q_slack, 0.3 + QLOSS_EXPECTED, epsilon = 1.0e-9);
    }

    #[test]
    fn station_load_at_slack_counts_toward_source_output() {
        let text = "\
[bases]
6.5,10
[buses]
1,slack,0.5,0.2
2,load,5.0,3.0
[branches]
1,1,2,0.02,0.04,1.0
";
        let net = load_network_from_text(text).unwrap();
        let sol = solve(&net, &tight_opts()).unwrap();
        assert_relative_eq!(sol.p_slack, 0.55 + PLOSS_EXPECTED, epsilon = 1.0e-9);
        let (p_bal, _) = sol.total_losses(&net);
        assert_relative_eq!(sol.p_loss, p_bal, epsilon = 1.0e-9);
    }

    #[test]
    fn zero_load_feeder_is_flat_at_the_slack_voltage() {
        let text = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,0,0
[branches]
1,1,2,0.02,0.04,1.0
";
        let net = load_network_from_text(text).unwrap();
        let opts = SolverOptions {
            slack_voltage: 1.02,
            ..SolverOptions::default()
        };
        let sol = solve(&net, &opts).unwrap();
        assert!(sol.converged);
        assert_eq!(
            sol.iterations, 0,
            "flat start already satisfies a dead network"
        );
        assert_relative_eq!(sol.v_mag[1], 1.02);
        assert_eq!(sol.p_loss, 0.0);
    }

    #[test]
    fn looped_feeder_splits_flow_between_parallel_paths() {
        // Two identical paths from the slack to the load: by symmetry each
        // carries half the current, and losses are half the single-path case.
        let looped = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,5.0,3.0
[branches]
1,1,2,0.02,0.04,1.0
2,1,2,0.02,0.04,1.0
";
        let net = load_network_from_text(looped).unwrap();
        let sol = solve(&net, &tight_opts()).unwrap();
        assert!(sol.converged);
        assert_relative_eq!(sol.i_branch[0], sol.i_branch[1], epsilon = 1.0e-9);
        let single = load_network_from_text(TWO_BUS).unwrap();
        let ssol = solve(&single, &tight_opts()).unwrap();
        assert!(
            sol.p_loss < 0.6 * ssol.p_loss,
            "parallel path should roughly halve losses: {} vs {}",
            sol.p_loss,
            ssol.p_loss
        );
    }

    #[test]
    fn sweep_on_looped_feeder_is_rejected() {
        let looped = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,5.0,3.0
[branches]
1,1,2,0.02,0.04,1.0
2,1,2,0.02,0.04,1.0
";
        let net = load_network_from_text(looped).unwrap();
        let err = solve(
            &net,
            &SolverOptions {
                method: SolveMethod::Sweep,
                ..SolverOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, PowerFlowError::BadNetwork(_)));
    }

    #[test]
    fn impossible_load_reports_non_convergence() {
        // Far beyond the maximum power transfer of this line.
        let text = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,500.0,300.0
[branches]
1,1,2,0.02,0.04,1.0
";
        let net = load_network_from_text(text).unwrap();
        let sol = solve(&net, &SolverOptions::default()).unwrap();
        assert!(
            !sol.converged,
            "an infeasible load must not report convergence"
        );
        assert_eq!(sol.iterations, SolverOptions::default().max_iterations);
    }

    #[test]
    fn converged_solution_satisfies_reported_tolerance() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let opts = SolverOptions::default();
        let sol = solve(&net, &opts).unwrap();
        assert!(sol.converged);
        assert!(
            sol.mismatch < opts.tolerance,
            "converged flag requires mismatch {} < tolerance {}",
            sol.mismatch,
            opts.tolerance
        );
    }

    #[test]
    fn dg_injection_reduces_losses_and_lifts_voltage() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let base = solve(&net, &tight_opts()).unwrap();
        let with_dg = net
            .apply_dg(&DGPlan::from_triples(&[(2, 4.0, 2.4)]))
            .unwrap();
        let dg = solve(&with_dg, &tight_opts()).unwrap();
        assert!(
            dg.p_loss < 0.1 * base.p_loss,
            "local generation should slash line losses"
        );
        assert!(dg.v_mag[1] > base.v_mag[1]);
        let (p_bal, _) = dg.total_losses(&with_dg);
        assert_relative_eq!(dg.p_loss, p_bal, epsilon = 1.0e-9);
    }

    #[test]
    fn branch_flow_orientation_matches_the_file() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let sol = solve(&net, &tight_opts()).unwrap();
        let flows = sol.branch_flows(&net);
        assert!(flows[0].0 > 0.5, "power flows from slack toward the load");
        assert_relative_eq!(flows[0].0, sol.p_slack, epsilon = 1.0e-9);
    }

    #[test]
    fn regulation_measures_drop_to_the_weakest_bus() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let sol = solve(&net, &tight_opts()).unwrap();
        let expected = 100.0 * (1.0 - V2_EXPECTED);
        assert_relative_eq!(sol.voltage_regulation_pct(), expected, epsilon = 1.0e-6);
    }
}
