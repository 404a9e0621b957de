//! Benefit indices comparing a feeder with and without DG.
//!
//! Three raw quantities are evaluated on each power-flow solution:
//!
//! * line-loss sum `LL = 3 * sum(I_i^2 * R_i * D_i)` over branches, with
//!   current in pu, resistance in pu/km, and distance in km;
//! * voltage-profile sum `VP = sum(|V_i| * L_i * K_i)` over load buses,
//!   with the load magnitude `L_i` in pu and the profile weights `K_i`
//!   summing to one;
//! * line-transfer sum `LTAP = sum(I_i * V_j)` over branches, pairing each
//!   branch current with one endpoint voltage (receiving end by default).
//!
//! Each improvement index is the with-DG value over the without-DG value
//! (LLRI, VPII, LTAPII), and the scalar benefit index blends them with
//! user weights. Losses and transfer burden shrink with good DG placement,
//! so those two ratios enter the blend reciprocally in the default mode.

use crate::network::{BusKind, DGPlan, Network};
use crate::powerflow::PowerFlowSolution;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

/// How the three ratios combine into the scalar benefit index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitnessMode {
    /// `bw_vpi * VPII + bw_llr / LLRI + bw_ltap / LTAPII`.
    ///
    /// All three terms grow as the plan improves, so maximising the blend
    /// rewards every index consistently. This is the default.
    #[default]
    Consistent,
    /// `bw_vpi * VPII + bw_llr / LLRI + bw_ltap * LTAPII`.
    ///
    /// Multiplies the transfer ratio directly, which rewards plans that
    /// keep LTAPII large; retained as a selectable alternative blend.
    AsWritten,
}

impl std::str::FromStr for FitnessMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consistent" => Ok(FitnessMode::Consistent),
            "as-written" => Ok(FitnessMode::AsWritten),
            other => Err(format!(
                "unknown fitness mode {other:?} (expected \"consistent\" or \"as-written\")"
            )),
        }
    }
}

/// Which endpoint voltage pairs with each branch current in the LTAP sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LtapEnd {
    /// Use the `to_bus` voltage (default).
    #[default]
    Receiving,
    /// Use the `from_bus` voltage.
    Sending,
}

/// Blend weights for the benefit index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexWeights {
    /// Weight on the voltage-profile ratio VPII.
    pub bw_vpi: f64,
    /// Weight on the line-loss term (applied to 1/LLRI).
    pub bw_llr: f64,
    /// Weight on the line-transfer term.
    pub bw_ltap: f64,
    pub fitness_mode: FitnessMode,
}

impl Default for IndexWeights {
    fn default() -> Self {
        IndexWeights {
            bw_vpi: 1.0 / 3.0,
            bw_llr: 1.0 / 3.0,
            bw_ltap: 1.0 / 3.0,
            fitness_mode: FitnessMode::Consistent,
        }
    }
}

/// Error for weight triples that do not describe a convex blend.
#[derive(Debug, Error)]
#[error("invalid index weights: {0}")]
pub struct WeightError(String);

impl IndexWeights {
    /// Weights must be non-negative and sum to one (within 1e-9).
    pub fn validate(&self) -> Result<(), WeightError> {
        for (name, w) in [
            ("bw_vpi", self.bw_vpi),
            ("bw_llr", self.bw_llr),
            ("bw_ltap", self.bw_ltap),
        ] {
            if !w.is_finite() || w < 0.0 {
                return Err(WeightError(format!("{name} must be non-negative, got {w}")));
            }
        }
        let sum = self.bw_vpi + self.bw_llr + self.bw_ltap;
        if (sum - 1.0).abs() > 1.0e-9 {
            return Err(WeightError(format!("weights must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

/// Improvement ratio: the with-DG value of a quantity over its base value.
pub fn improvement_ratio(with_value: f64, without_value: f64) -> f64 {
    with_value / without_value
}

/// Line-loss reduction index LLRI (with-DG losses over base losses).
pub fn llri(ll_with: f64, ll_without: f64) -> f64 {
    improvement_ratio(ll_with, ll_without)
}

/// Voltage-profile improvement index VPII.
pub fn vpii(vp_with: f64, vp_without: f64) -> f64 {
    improvement_ratio(vp_with, vp_without)
}

/// Line-transfer improvement index LTAPII.
pub fn ltapii(ltap_with: f64, ltap_without: f64) -> f64 {
    improvement_ratio(ltap_with, ltap_without)
}

/// Scalar benefit index from the three ratios and a weight triple.
///
/// LLRI always enters reciprocally (small residual losses are good);
/// the mode decides whether LTAPII multiplies directly or reciprocally.
pub fn benefit_index(llri: f64, vpii: f64, ltapii: f64, w: &IndexWeights) -> f64 {
    let ltap_term = match w.fitness_mode {
        FitnessMode::Consistent => w.bw_ltap / ltapii,
        FitnessMode::AsWritten => w.bw_ltap * ltapii,
    };
    w.bw_vpi * vpii + w.bw_llr / llri + ltap_term
}

/// Line-loss sum over all branches, `3 * sum(I^2 * R_per_km * D_km)`.
pub fn line_loss_sum(net: &Network, sol: &PowerFlowSolution) -> f64 {
    net.branches
        .iter()
        .zip(&sol.i_branch)
        .map(|(br, &i)| 3.0 * i * i * br.r_pu_per_km * br.length_km)
        .sum()
}

/// Voltage-profile sum over load buses, `sum(|V| * L * K)` with the load
/// magnitude `L = |P + jQ|` in pu.
pub fn voltage_profile_sum(net: &Network, sol: &PowerFlowSolution) -> f64 {
    net.buses
        .iter()
        .zip(&sol.v_mag)
        .filter(|(b, _)| b.has_load())
        .map(|(b, &v)| {
            let l = (b.p_load_mw.powi(2) + b.q_load_mvar.powi(2)).sqrt() / net.s_base_mva;
            v * l * b.weight_k
        })
        .sum()
}

/// Line-transfer sum over branches, `sum(I * V_end)` with the configured
/// endpoint voltage.
pub fn ltap_sum(net: &Network, sol: &PowerFlowSolution, end: LtapEnd) -> f64 {
    let index_of: HashMap<usize, usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    net.branches
        .iter()
        .zip(&sol.i_branch)
        .map(|(br, &i)| {
            let bus = match end {
                LtapEnd::Receiving => br.to_bus,
                LtapEnd::Sending => br.from_bus,
            };
            i * sol.v_mag[index_of[&bus]]
        })
        .sum()
}

/// Kind of operating-limit violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    VoltageLow,
    VoltageHigh,
    BranchFlow,
    DgPMin,
    DgPMax,
    DgQMin,
    DgQMax,
}

/// One violated operating limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Human-readable identity of the violating element, e.g. `bus 7`.
    pub entity: String,
    /// The limit, in the element's natural unit (pu for voltages and flows,
    /// MW/MVAr for DG capability limits).
    pub bound: f64,
    /// The observed value, same unit as `bound`.
    pub actual: f64,
    /// Amount beyond the limit, always expressed in pu so that excesses of
    /// different kinds can be summed into one penalty.
    pub excess: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let what = match self.kind {
            ViolationKind::VoltageLow => "voltage below limit",
            ViolationKind::VoltageHigh => "voltage above limit",
            ViolationKind::BranchFlow => "flow above limit",
            ViolationKind::DgPMin => "DG active power below limit",
            ViolationKind::DgPMax => "DG active power above limit",
            ViolationKind::DgQMin => "DG reactive power below limit",
            ViolationKind::DgQMax => "DG reactive power above limit",
        };
        write!(
            f,
            "{}: {} ({} vs limit {}, excess {:.6} pu)",
            self.entity, what, self.actual, self.bound, self.excess
        )
    }
}

/// Check bus voltages, branch flows, and DG capability against their limits.
///
/// `net`/`sol` describe the operating state being judged (normally the
/// with-DG case); `plan` supplies the capability limits, if any.
pub fn check_constraints(net: &Network, sol: &PowerFlowSolution, plan: &DGPlan) -> Vec<Violation> {
    let mut violations = Vec::new();
    for (bus, &v) in net.buses.iter().zip(&sol.v_mag) {
        if bus.kind == BusKind::Slack {
            continue;
        }
        if v < bus.v_min_pu {
            violations.push(Violation {
                kind: ViolationKind::VoltageLow,
                entity: format!("bus {}", bus.id),
                bound: bus.v_min_pu,
                actual: v,
                excess: bus.v_min_pu - v,
            });
        } else if v > bus.v_max_pu {
            violations.push(Violation {
                kind: ViolationKind::VoltageHigh,
                entity: format!("bus {}", bus.id),
                bound: bus.v_max_pu,
                actual: v,
                excess: v - bus.v_max_pu,
            });
        }
    }
    let flows = sol.branch_flows(net);
    for (br, &(p, _)) in net.branches.iter().zip(&flows) {
        if p.abs() > br.p_flow_max_pu {
            violations.push(Violation {
                kind: ViolationKind::BranchFlow,
                entity: format!("branch {}", br.id),
                bound: br.p_flow_max_pu,
                actual: p.abs(),
                excess: p.abs() - br.p_flow_max_pu,
            });
        }
    }
    for unit in plan.merged().units {
        let checks = [
            (ViolationKind::DgPMin, unit.p_min_mw, unit.p_mw, true),
            (ViolationKind::DgPMax, unit.p_max_mw, unit.p_mw, false),
            (ViolationKind::DgQMin, unit.q_min_mvar, unit.q_mvar, true),
            (ViolationKind::DgQMax, unit.q_max_mvar, unit.q_mvar, false),
        ];
        for (kind, bound, actual, is_lower) in checks {
            let Some(bound) = bound else { continue };
            let exceeded = if is_lower {
                actual < bound
            } else {
                actual > bound
            };
            if exceeded {
                violations.push(Violation {
                    kind,
                    entity: format!("DG at bus {}", unit.bus),
                    bound,
                    actual,
                    excess: (actual - bound).abs() / net.s_base_mva,
                });
            }
        }
    }
    violations
}

/// Sum of violation excesses (pu), the quantity penalised by the optimiser.
pub fn total_violation_excess(violations: &[Violation]) -> f64 {
    violations.iter().map(|v| v.excess).sum()
}

/// Full with/without comparison of one DG plan on one feeder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub ll_without: f64,
    pub ll_with: f64,
    pub llri: f64,
    pub vp_without: f64,
    pub vp_with: f64,
    pub vpii: f64,
    pub ltap_without: f64,
    pub ltap_with: f64,
    pub ltapii: f64,
    /// Blended benefit index under the weights the report was built with.
    pub bi: f64,
    /// Physical losses in kW for both cases, from the branch-current route.
    pub p_loss_without_kw: f64,
    pub p_loss_with_kw: f64,
    /// Loss reduction in percent of the base losses.
    pub loss_reduction_pct: f64,
    pub regulation_without_pct: f64,
    pub regulation_with_pct: f64,
    pub min_v_without_pu: f64,
    pub min_v_with_pu: f64,
    /// Operating-limit violations of the with-DG case.
    pub violations: Vec<Violation>,
}

/// Options for building an [`IndexReport`].
#[derive(Debug, Clone, Copy, Default)]
pub struct IndexOptions {
    pub weights: IndexWeights,
    pub ltap_end: LtapEnd,
}

/// Compare a base-case solution against a with-DG solution.
///
/// `base_net`/`base_sol` is the feeder without the plan; `dg_net`/`dg_sol`
/// is the same feeder with the plan applied. Violations are checked on the
/// with-DG state.
pub fn index_report(
    base_net: &Network,
    base_sol: &PowerFlowSolution,
    dg_net: &Network,
    dg_sol: &PowerFlowSolution,
    plan: &DGPlan,
    opts: &IndexOptions,
) -> IndexReport {
    let ll_without = line_loss_sum(base_net, base_sol);
    let ll_with = line_loss_sum(dg_net, dg_sol);
    let vp_without = voltage_profile_sum(base_net, base_sol);
    let vp_with = voltage_profile_sum(dg_net, dg_sol);
    let ltap_without = ltap_sum(base_net, base_sol, opts.ltap_end);
    let ltap_with = ltap_sum(dg_net, dg_sol, opts.ltap_end);
    let llri = llri(ll_with, ll_without);
    let vpii = vpii(vp_with, vp_without);
    let ltapii = ltapii(ltap_with, ltap_without);
    let bi = benefit_index(llri, vpii, ltapii, &opts.weights);
    let p_loss_without_kw = base_sol.p_loss * base_net.s_base_mva * 1.0e3;
    let p_loss_with_kw = dg_sol.p_loss * dg_net.s_base_mva * 1.0e3;
    IndexReport {
        ll_without,
        ll_with,
        llri,
        vp_without,
        vp_with,
        vpii,
        ltap_without,
        ltap_with,
        ltapii,
        bi,
        p_loss_without_kw,
        p_loss_with_kw,
        loss_reduction_pct: 100.0 * (p_loss_without_kw - p_loss_with_kw) / p_loss_without_kw,
        regulation_without_pct: base_sol.voltage_regulation_pct(),
        regulation_with_pct: dg_sol.voltage_regulation_pct(),
        min_v_without_pu: base_sol.min_v_mag(),
        min_v_with_pu: dg_sol.min_v_mag(),
        violations: check_constraints(dg_net, dg_sol, plan),
    }
}

impl IndexReport {
    /// Multi-line human-readable comparison table.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28}{:>14}{:>14}",
            "quantity", "without DG", "with DG"
        );
        let _ = writeln!(
            out,
            "{:<28}{:>14.4}{:>14.4}",
            "line losses (kW)", self.p_loss_without_kw, self.p_loss_with_kw
        );
        let _ = writeln!(
            out,
            "{:<28}{:>14.4}{:>14.4}",
            "min bus voltage (pu)", self.min_v_without_pu, self.min_v_with_pu
        );
        let _ = writeln!(
            out,
            "{:<28}{:>14.4}{:>14.4}",
            "voltage regulation (%)", self.regulation_without_pct, self.regulation_with_pct
        );
        let _ = writeln!(
            out,
            "{:<28}{:>14.6}{:>14.6}",
            "loss sum LL", self.ll_without, self.ll_with
        );
        let _ = writeln!(
            out,
            "{:<28}{:>14.6}{:>14.6}",
            "voltage profile VP", self.vp_without, self.vp_with
        );
        let _ = writeln!(
            out,
            "{:<28}{:>14.6}{:>14.6}",
            "transfer sum LTAP", self.ltap_without, self.ltap_with
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "loss reduction:   {:.2} %", self.loss_reduction_pct);
        let _ = writeln!(out, "LLRI:             {:.4}", self.llri);
        let _ = writeln!(out, "VPII:             {:.4}", self.vpii);
        let _ = writeln!(out, "LTAPII:           {:.4}", self.ltapii);
        let _ = writeln!(out, "benefit index:    {:.4}", self.bi);
        if self.violations.is_empty() {
            let _ = writeln!(out, "violations:       none");
        } else {
            let _ = writeln!(out, "violations:       {}", self.violations.len());
            for v in &self.violations {
                let _ = writeln!(out, "  - {v}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{load_network_from_text, DGPlan, DGUnit};
    use crate::powerflow::{solve, SolverOptions};
    use approx::assert_relative_eq;

    fn weights(vpi: f64, llr: f64, ltap: f64, mode: FitnessMode) -> IndexWeights {
        IndexWeights {
            bw_vpi: vpi,
            bw_llr: llr,
            bw_ltap: ltap,
            fitness_mode: mode,
        }
    }

    #[test]
    fn ratios_divide_with_by_without() {
        assert_relative_eq!(llri(0.0016, 0.0071), 0.22535211267605634, epsilon = 1.0e-12);
        assert_relative_eq!(vpii(0.170, 0.161), 1.0559006211180124, epsilon = 1.0e-12);
        assert_relative_eq!(
            ltapii(0.5419, 1.6332),
            0.33180259613029633,
            epsilon = 1.0e-12
        );
    }

    #[test]
    fn consistent_blend_rewards_all_three_directions() {
        let w = weights(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, FitnessMode::Consistent);
        let bi = benefit_index(0.2230, 1.0285, 0.3318, &w);
        assert_relative_eq!(bi, 2.8422, epsilon = 5.0e-4);
    }

    #[test]
    fn alternative_blend_multiplies_the_transfer_ratio() {
        let w = weights(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, FitnessMode::AsWritten);
        let bi = benefit_index(0.2230, 1.0285, 0.3318, &w);
        let expected = (1.0285 + 1.0 / 0.2230 + 0.3318) / 3.0;
        assert_relative_eq!(bi, expected, epsilon = 1.0e-12);
    }

    #[test]
    fn unit_ratios_give_unit_benefit_in_both_modes() {
        for mode in [FitnessMode::Consistent, FitnessMode::AsWritten] {
            let w = weights(0.25, 0.5, 0.25, mode);
            assert_eq!(benefit_index(1.0, 1.0, 1.0, &w), 1.0, "mode {mode:?}");
        }
    }

    #[test]
    fn weight_validation_enforces_the_budget() {
        assert!(IndexWeights::default().validate().is_ok());
        let bad_sum = weights(0.5, 0.5, 0.5, FitnessMode::Consistent);
        assert!(bad_sum.validate().is_err());
        let negative = weights(-0.2, 0.6, 0.6, FitnessMode::Consistent);
        assert!(negative.validate().is_err());
    }

    #[test]
    fn fitness_mode_parses_from_cli_spelling() {
        assert_eq!(
            "consistent".parse::<FitnessMode>().unwrap(),
            FitnessMode::Consistent
        );
        assert_eq!(
            "as-written".parse::<FitnessMode>().unwrap(),
            FitnessMode::AsWritten
        );
        assert!("other".parse::<FitnessMode>().is_err());
    }

    const TWO_BUS: &str = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,5.0,3.0
[branches]
1,1,2,0.02,0.04,1.0
";

    fn tight() -> SolverOptions {
        SolverOptions {
            tolerance: 1.0e-10,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn raw_sums_match_hand_values_on_the_two_bus_case() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let sol = solve(&net, &tight()).unwrap();
        let i = sol.i_branch[0];
        assert_relative_eq!(
            line_loss_sum(&net, &sol),
            3.0 * i * i * 0.02,
            epsilon = 1.0e-12
        );
        // Single load bus: K = 1, L = |5 + j3| / 10.
        let l = (5.0_f64.powi(2) + 3.0_f64.powi(2)).sqrt() / 10.0;
        assert_relative_eq!(
            voltage_profile_sum(&net, &sol),
            sol.v_mag[1] * l,
            epsilon = 1.0e-12
        );
        assert_relative_eq!(
            ltap_sum(&net, &sol, LtapEnd::Receiving),
            i * sol.v_mag[1],
            epsilon = 1.0e-12
        );
        assert_relative_eq!(
            ltap_sum(&net, &sol, LtapEnd::Sending),
            i * sol.v_mag[0],
            epsilon = 1.0e-12
        );
    }

    #[test]
    fn empty_plan_report_is_the_identity() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let sol = solve(&net, &tight()).unwrap();
        let report = index_report(
            &net,
            &sol,
            &net,
            &sol,
            &DGPlan::empty(),
            &IndexOptions::default(),
        );
        assert_eq!(report.llri, 1.0);
        assert_eq!(report.vpii, 1.0);
        assert_eq!(report.ltapii, 1.0);
        assert!((report.bi - 1.0).abs() <= 1.0e-9);
        assert_eq!(report.loss_reduction_pct, 0.0);
    }

    #[test]
    fn dg_plan_improves_all_reported_directions() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let base = solve(&net, &tight()).unwrap();
        let plan = DGPlan::from_triples(&[(2, 4.0, 2.4)]);
        let dg_net = net.apply_dg(&plan).unwrap();
        let dg_sol = solve(&dg_net, &tight()).unwrap();
        let report = index_report(
            &net,
            &base,
            &dg_net,
            &dg_sol,
            &plan,
            &IndexOptions::default(),
        );
        assert!(
            report.llri < 1.0,
            "losses must shrink, LLRI = {}",
            report.llri
        );
        assert!(
            report.vpii > 1.0,
            "voltage profile must lift, VPII = {}",
            report.vpii
        );
        assert!(
            report.ltapii < 1.0,
            "transfer burden must shrink, LTAPII = {}",
            report.ltapii
        );
        assert!(report.loss_reduction_pct > 90.0);
        assert!(report.regulation_with_pct < report.regulation_without_pct);
        assert!(report.bi > 1.0);
        assert!(
            report.violations.is_empty(),
            "violations: {:?}",
            report.violations
        );
    }

    #[test]
    fn voltage_bound_violations_are_detected_with_pu_excess() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        // Heavy over-injection drives bus 2 above its 1.05 pu ceiling.
        let plan = DGPlan::from_triples(&[(2, 18.0, 12.0)]);
        let dg_net = net.apply_dg(&plan).unwrap();
        let dg_sol = solve(&dg_net, &tight()).unwrap();
        assert!(dg_sol.converged);
        let violations = check_constraints(&dg_net, &dg_sol, &plan);
        assert_eq!(violations.len(), 1, "violations: {violations:?}");
        let v = &violations[0];
        assert_eq!(v.kind, ViolationKind::VoltageHigh);
        assert_eq!(v.bound, 1.05);
        assert_relative_eq!(v.excess, v.actual - 1.05, epsilon = 1.0e-12);
    }

    #[test]
    fn branch_flow_limit_is_enforced_on_magnitude() {
        let text = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,5.0,3.0
[branches]
1,1,2,0.02,0.04,1.0,0.3
";
        let net = load_network_from_text(text).unwrap();
        let sol = solve(&net, &tight()).unwrap();
        let violations = check_constraints(&net, &sol, &DGPlan::empty());
        assert!(
            violations
                .iter()
                .any(|v| v.kind == ViolationKind::BranchFlow),
            "0.5 pu of load through a 0.3 pu limit must violate: {violations:?}"
        );
    }

    #[test]
    fn dg_capability_limits_are_checked_in_natural_units() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let plan = DGPlan {
            units: vec![DGUnit::new(2, 3.0, 1.0).with_limits(None, Some(2.0), None, None)],
        };
        let dg_net = net.apply_dg(&plan).unwrap();
        let dg_sol = solve(&dg_net, &tight()).unwrap();
        let violations = check_constraints(&dg_net, &dg_sol, &plan);
        let v = violations
            .iter()
            .find(|v| v.kind == ViolationKind::DgPMax)
            .expect("3 MW against a 2 MW limit must violate");
        assert_eq!(v.bound, 2.0);
        assert_eq!(v.actual, 3.0);
        assert_relative_eq!(v.excess, 1.0 / 10.0, epsilon = 1.0e-12);
    }

    #[test]
    fn violation_excesses_sum_into_the_penalty_quantity() {
        let violations = vec![
            Violation {
                kind: ViolationKind::VoltageLow,
                entity: "bus 5".into(),
                bound: 0.9,
                actual: 0.88,
                excess: 0.02,
            },
            Violation {
                kind: ViolationKind::BranchFlow,
                entity: "branch 2".into(),
                bound: 0.5,
                actual: 0.6,
                excess: 0.1,
            },
        ];
        assert_relative_eq!(total_violation_excess(&violations), 0.12, epsilon = 1.0e-12);
        assert_eq!(total_violation_excess(&[]), 0.0);
    }

    #[test]
    fn summary_text_reports_the_headline_numbers() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let sol = solve(&net, &tight()).unwrap();
        let report = index_report(
            &net,
            &sol,
            &net,
            &sol,
            &DGPlan::empty(),
            &IndexOptions::default(),
        );
        let text = report.summary_text();
        assert!(text.contains("LLRI"), "missing LLRI line:\n{text}");
        assert!(
            text.contains("benefit index"),
            "missing benefit line:\n{text}"
        );
        assert!(
            text.contains("violations:       none"),
            "missing violations line:\n{text}"
        );
    }
}
