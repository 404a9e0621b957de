//! Feeder data model: buses, branches, DG plans, and the text file format.
//!
//! Feeder files are plain text with three sections. `#` starts a comment,
//! blank lines are ignored, and every data row is a comma-separated record:
//!
//! ```text
//! [bases]
//! 6.5,10
//! [buses]
//! # id,kind,p_load_mw,q_load_mvar[,v_min_pu,v_max_pu[,weight_k]]
//! 1,slack,0.0,0.0
//! 2,load,5.0,3.0
//! [branches]
//! # id,from,to,r_pu_per_km,x_pu_per_km,length_km[,p_flow_max_pu]
//! 1,1,2,0.02,0.04,1.0
//! ```

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

/// Default lower voltage bound applied when a bus row omits it.
pub const DEFAULT_V_MIN_PU: f64 = 0.90;
/// Default upper voltage bound applied when a bus row omits it.
pub const DEFAULT_V_MAX_PU: f64 = 1.05;

/// Errors raised while reading, parsing, or validating feeder data.
#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("feeder validation failed:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("unknown bus id {0} in DG plan")]
    UnknownBus(usize),
    #[error("DG may not be placed on the slack bus (bus {0})")]
    DgOnSlack(usize),
}

/// Role a bus plays in the power-flow problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    /// The substation bus: holds the reference voltage and balances power.
    Slack,
    /// An ordinary bus with fixed complex power demand (possibly zero).
    Load,
}

/// One node of the feeder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// External 1-based identifier, unique within the network.
    pub id: usize,
    pub kind: BusKind,
    /// Active power demand in MW.
    pub p_load_mw: f64,
    /// Reactive power demand in MVAr.
    pub q_load_mvar: f64,
    /// Lower acceptable voltage magnitude, per unit.
    pub v_min_pu: f64,
    /// Upper acceptable voltage magnitude, per unit.
    pub v_max_pu: f64,
    /// Voltage-profile weighting factor; weights over load buses sum to one.
    pub weight_k: f64,
    /// Active DG injection currently applied to this bus, MW.
    pub p_gen_mw: f64,
    /// Reactive DG injection currently applied to this bus, MVAr.
    pub q_gen_mvar: f64,
}

impl Bus {
    /// True when the bus draws any load.
    pub fn has_load(&self) -> bool {
        self.p_load_mw != 0.0 || self.q_load_mvar != 0.0
    }

    /// Net injected power (generation minus load) in MW / MVAr.
    pub fn net_injection_mw(&self) -> (f64, f64) {
        (
            self.p_gen_mw - self.p_load_mw,
            self.q_gen_mvar - self.q_load_mvar,
        )
    }
}

/// One line segment connecting two buses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// External 1-based identifier, unique within the network.
    pub id: usize,
    /// Bus id at the sending end (orientation as written in the file).
    pub from_bus: usize,
    /// Bus id at the receiving end.
    pub to_bus: usize,
    /// Resistance in pu per kilometre.
    pub r_pu_per_km: f64,
    /// Reactance in pu per kilometre.
    pub x_pu_per_km: f64,
    /// Segment length in kilometres.
    pub length_km: f64,
    /// Active-power flow limit in pu; `f64::INFINITY` means unlimited.
    pub p_flow_max_pu: f64,
}

impl Branch {
    /// Total series resistance of the segment, pu.
    pub fn r_pu(&self) -> f64 {
        self.r_pu_per_km * self.length_km
    }

    /// Total series reactance of the segment, pu.
    pub fn x_pu(&self) -> f64 {
        self.x_pu_per_km * self.length_km
    }
}

/// A whole feeder: bases plus bus and branch tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    /// Line-to-line voltage base, kV.
    pub v_base_kv: f64,
    /// Three-phase apparent power base, MVA.
    pub s_base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
}

/// One dispatchable generator placed at a bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DGUnit {
    /// Bus the unit connects to.
    pub bus: usize,
    /// Active power injection, MW.
    pub p_mw: f64,
    /// Reactive power injection, MVAr.
    pub q_mvar: f64,
    /// Optional capability limits; `None` means unbounded on that side.
    pub p_min_mw: Option<f64>,
    pub p_max_mw: Option<f64>,
    pub q_min_mvar: Option<f64>,
    pub q_max_mvar: Option<f64>,
}

impl DGUnit {
    /// Unit with the given injection and no capability limits.
    pub fn new(bus: usize, p_mw: f64, q_mvar: f64) -> Self {
        DGUnit {
            bus,
            p_mw,
            q_mvar,
            p_min_mw: None,
            p_max_mw: None,
            q_min_mvar: None,
            q_max_mvar: None,
        }
    }

    /// Attach symmetric capability limits (used by sizing studies).
    pub fn with_limits(
        mut self,
        p_min_mw: Option<f64>,
        p_max_mw: Option<f64>,
        q_min_mvar: Option<f64>,
        q_max_mvar: Option<f64>,
    ) -> Self {
        self.p_min_mw = p_min_mw;
        self.p_max_mw = p_max_mw;
        self.q_min_mvar = q_min_mvar;
        self.q_max_mvar = q_max_mvar;
        self
    }
}

/// A set of DG units to be applied to a feeder together.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DGPlan {
    pub units: Vec<DGUnit>,
}

impl DGPlan {
    /// Plan with no units; applying it leaves the feeder unchanged.
    pub fn empty() -> Self {
        DGPlan { units: Vec::new() }
    }

    /// Plan from plain `(bus, p_mw, q_mvar)` triples without limits.
    pub fn from_triples(triples: &[(usize, f64, f64)]) -> Self {
        DGPlan {
            units: triples
                .iter()
                .map(|&(bus, p, q)| DGUnit::new(bus, p, q))
                .collect(),
        }
    }

    /// Total plan injection, (MW, MVAr).
    pub fn total_mw_mvar(&self) -> (f64, f64) {
        self.units
            .iter()
            .fold((0.0, 0.0), |(p, q), u| (p + u.p_mw, q + u.q_mvar))
    }

    /// Combine units that target the same bus into one unit per bus.
    ///
    /// Injections add; a combined limit stays finite only when every
    /// contributing unit carried one, in which case the limits add too.
    /// Unit order follows first appearance of each bus.
    pub fn merged(&self) -> DGPlan {
        let mut order: Vec<usize> = Vec::new();
        let mut by_bus: HashMap<usize, DGUnit> = HashMap::new();
        for unit in &self.units {
            match by_bus.get_mut(&unit.bus) {
                None => {
                    order.push(unit.bus);
                    by_bus.insert(unit.bus, unit.clone());
                }
                Some(acc) => {
                    acc.p_mw += unit.p_mw;
                    acc.q_mvar += unit.q_mvar;
                    acc.p_min_mw = add_limits(acc.p_min_mw, unit.p_min_mw);
                    acc.p_max_mw = add_limits(acc.p_max_mw, unit.p_max_mw);
                    acc.q_min_mvar = add_limits(acc.q_min_mvar, unit.q_min_mvar);
                    acc.q_max_mvar = add_limits(acc.q_max_mvar, unit.q_max_mvar);
                }
            }
        }
        DGPlan {
            units: order
                .into_iter()
                .map(|b| by_bus.remove(&b).unwrap())
                .collect(),
        }
    }
}

fn add_limits(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x + y),
        _ => None,
    }
}

impl Network {
    /// Current base in amperes: `S_base / (sqrt(3) * V_base)`.
    pub fn i_base_a(&self) -> f64 {
        self.s_base_mva * 1.0e3 / (3.0_f64.sqrt() * self.v_base_kv)
    }

    /// Position of the slack bus in `buses`, if exactly one exists.
    pub fn slack_index(&self) -> Option<usize> {
        let mut found = None;
        for (i, b) in self.buses.iter().enumerate() {
            if b.kind == BusKind::Slack {
                if found.is_some() {
                    return None;
                }
                found = Some(i);
            }
        }
        found
    }

    /// Position of the bus with external id `id`.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Number of independent loops: `branches - buses + components`.
    pub fn loop_count(&self) -> usize {
        let components = self.component_count();
        (self.branches.len() + components).saturating_sub(self.buses.len())
    }

    /// True when every bus can be reached from the slack bus.
    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    fn component_count(&self) -> usize {
        if self.buses.is_empty() {
            return 0;
        }
        let index_of: HashMap<usize, usize> = self
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.buses.len()];
        for br in &self.branches {
            if let (Some(&f), Some(&t)) = (index_of.get(&br.from_bus), index_of.get(&br.to_bus)) {
                adj[f].push(t);
                adj[t].push(f);
            }
        }
        let mut seen = vec![false; self.buses.len()];
        let mut components = 0;
        for start in 0..self.buses.len() {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(i) = queue.pop_front() {
                for &j in &adj[i] {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        components
    }

    /// Total demand over all buses, (MW, MVAr).
    pub fn total_load_mw_mvar(&self) -> (f64, f64) {
        self.buses
            .iter()
            .fold((0.0, 0.0), |(p, q), b| (p + b.p_load_mw, q + b.q_load_mvar))
    }

    /// Total DG injection currently applied, (MW, MVAr).
    pub fn total_gen_mw_mvar(&self) -> (f64, f64) {
        self.buses
            .iter()
            .fold((0.0, 0.0), |(p, q), b| (p + b.p_gen_mw, q + b.q_gen_mvar))
    }

    /// Structural checks; an empty return means the feeder is well formed.
    ///
    /// Checks: positive bases, exactly one slack bus, unique bus/branch ids,
    /// branch endpoints resolve and differ, positive impedance data, every
    /// bus reachable from the slack, sensible voltage bounds, non-negative
    /// weights summing to one over load buses.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !self.v_base_kv.is_finite() || self.v_base_kv <= 0.0 {
            problems.push(format!(
                "v_base_kv must be positive, got {}",
                self.v_base_kv
            ));
        }
        if !self.s_base_mva.is_finite() || self.s_base_mva <= 0.0 {
            problems.push(format!(
                "s_base_mva must be positive, got {}",
                self.s_base_mva
            ));
        }
        if self.buses.is_empty() {
            problems.push("feeder has no buses".into());
            return problems;
        }

        let mut ids = HashSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                problems.push(format!("duplicate bus id {}", b.id));
            }
            let bounds_ok = b.v_min_pu.is_finite()
                && b.v_min_pu > 0.0
                && !b.v_max_pu.is_nan()
                && b.v_min_pu < b.v_max_pu;
            if !bounds_ok {
                problems.push(format!(
                    "bus {}: voltage bounds must satisfy 0 < v_min < v_max, got [{}, {}]",
                    b.id, b.v_min_pu, b.v_max_pu
                ));
            }
            if b.weight_k < 0.0 || !b.weight_k.is_finite() {
                problems.push(format!(
                    "bus {}: weight_k must be non-negative, got {}",
                    b.id, b.weight_k
                ));
            }
            for (name, v) in [
                ("p_load_mw", b.p_load_mw),
                ("q_load_mvar", b.q_load_mvar),
                ("p_gen_mw", b.p_gen_mw),
                ("q_gen_mvar", b.q_gen_mvar),
            ] {
                if !v.is_finite() {
                    problems.push(format!("bus {}: {name} must be finite, got {v}", b.id));
                }
            }
        }

        let slack_count = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .count();
        if slack_count != 1 {
            problems.push(format!(
                "feeder must have exactly one slack bus, found {slack_count}"
            ));
        }

        let mut branch_ids = HashSet::new();
        for br in &self.branches {
            if !branch_ids.insert(br.id) {
                problems.push(format!("duplicate branch id {}", br.id));
            }
            for (name, bus) in [("from", br.from_bus), ("to", br.to_bus)] {
                if !ids.contains(&bus) {
                    problems.push(format!("branch {}: {name} bus {bus} does not exist", br.id));
                }
            }
            if br.from_bus == br.to_bus {
                problems.push(format!(
                    "branch {}: connects bus {} to itself",
                    br.id, br.from_bus
                ));
            }
            if !br.length_km.is_finite() || br.length_km <= 0.0 {
                problems.push(format!(
                    "branch {}: length_km must be positive, got {}",
                    br.id, br.length_km
                ));
            }
            if br.r_pu_per_km < 0.0 || br.x_pu_per_km < 0.0 {
                problems.push(format!("branch {}: impedance must be non-negative", br.id));
            }
            let z2 = br.r_pu().powi(2) + br.x_pu().powi(2);
            if z2.is_nan() || z2 <= 1.0e-24 {
                problems.push(format!(
                    "branch {}: series impedance is (numerically) zero",
                    br.id
                ));
            }
            if br.p_flow_max_pu.is_nan() || br.p_flow_max_pu <= 0.0 {
                problems.push(format!(
                    "branch {}: p_flow_max_pu must be positive (or omitted), got {}",
                    br.id, br.p_flow_max_pu
                ));
            }
        }

        if slack_count == 1 && !self.is_connected() {
            problems.push(
                "feeder is not connected: some buses are unreachable from the slack bus".into(),
            );
        }

        let weight_sum: f64 = self
            .buses
            .iter()
            .filter(|b| b.has_load())
            .map(|b| b.weight_k)
            .sum();
        let has_loads = self.buses.iter().any(|b| b.has_load());
        if has_loads && (weight_sum - 1.0).abs() > 1.0e-9 {
            problems.push(format!(
                "weight_k over load buses must sum to 1, got {weight_sum}"
            ));
        }
        problems
    }

    /// Return a copy of the feeder with the plan's injections applied.
    ///
    /// Units on the same bus are merged first, so applying `A` then `B`
    /// matches applying the concatenation of `A` and `B` in one step.
    /// Placing DG on an unknown bus or on the slack bus is an error.
    pub fn apply_dg(&self, plan: &DGPlan) -> Result<Network, NetworkError> {
        let mut net = self.clone();
        for unit in plan.merged().units {
            let idx = net
                .bus_index(unit.bus)
                .ok_or(NetworkError::UnknownBus(unit.bus))?;
            if net.buses[idx].kind == BusKind::Slack {
                return Err(NetworkError::DgOnSlack(unit.bus));
            }
            net.buses[idx].p_gen_mw += unit.p_mw;
            net.buses[idx].q_gen_mvar += unit.q_mvar;
        }
        Ok(net)
    }

    /// Render the feeder in the text file format.
    ///
    /// All optional columns are written explicitly, so a serialize/parse
    /// round trip reproduces the network exactly. Runtime DG injections are
    /// not part of the format and are not written.
    pub fn to_feeder_text(&self) -> String {
        let mut out = String::new();
        out.push_str("[bases]\n");
        let _ = writeln!(out, "{},{}", self.v_base_kv, self.s_base_mva);
        out.push_str("[buses]\n# id,kind,p_load_mw,q_load_mvar,v_min_pu,v_max_pu,weight_k\n");
        for b in &self.buses {
            let kind = match b.kind {
                BusKind::Slack => "slack",
                BusKind::Load => "load",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                b.id, kind, b.p_load_mw, b.q_load_mvar, b.v_min_pu, b.v_max_pu, b.weight_k
            );
        }
        out.push_str("[branches]\n# id,from,to,r_pu_per_km,x_pu_per_km,length_km,p_flow_max_pu\n");
        for br in &self.branches {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                br.id,
                br.from_bus,
                br.to_bus,
                br.r_pu_per_km,
                br.x_pu_per_km,
                br.length_km,
                br.p_flow_max_pu
            );
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Bases,
    Buses,
    Branches,
}

fn parse_field<T: std::str::FromStr>(
    raw: &str,
    line: usize,
    what: &str,
) -> Result<T, NetworkError> {
    raw.trim().parse().map_err(|_| NetworkError::Parse {
        line,
        message: format!("invalid {what}: {:?}", raw.trim()),
    })
}

fn finite_field(raw: &str, line: usize, what: &str) -> Result<f64, NetworkError> {
    let v: f64 = parse_field(raw, line, what)?;
    if !v.is_finite() {
        return Err(NetworkError::Parse {
            line,
            message: format!("{what} must be finite, got {v}"),
        });
    }
    Ok(v)
}

/// Parse feeder text into a [`Network`] without running semantic validation.
///
/// Structural problems (bad syntax, duplicate ids, unknown endpoint buses,
/// missing sections) are reported with their line number. Unspecified
/// `weight_k` entries are filled so that load buses share the remaining
/// budget equally; zero-load buses default to weight zero.
pub fn parse_network(text: &str) -> Result<Network, NetworkError> {
    let mut section = Section::None;
    let mut bases: Option<(f64, f64)> = None;
    let mut buses: Vec<Bus> = Vec::new();
    let mut weights: Vec<Option<f64>> = Vec::new();
    let mut branches: Vec<Branch> = Vec::new();
    let mut bus_ids: HashSet<usize> = HashSet::new();
    let mut branch_ids: HashSet<usize> = HashSet::new();

    for (lineno, raw_line) in text.lines().enumerate() {
        let line = lineno + 1;
        let data = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let data = data.trim();
        if data.is_empty() {
            continue;
        }
        match data {
            "[bases]" => {
                section = Section::Bases;
                continue;
            }
            "[buses]" => {
                section = Section::Buses;
                continue;
            }
            "[branches]" => {
                section = Section::Branches;
                continue;
            }
            _ if data.starts_with('[') => {
                return Err(NetworkError::Parse {
                    line,
                    message: format!("unknown section {data:?}"),
                });
            }
            _ => {}
        }

        let fields: Vec<&str> = data.split(',').collect();
        match section {
            Section::None => {
                return Err(NetworkError::Parse {
                    line,
                    message: "data before any section header".into(),
                });
            }
            Section::Bases => {
                if bases.is_some() {
                    return Err(NetworkError::Parse {
                        line,
                        message: "duplicate [bases] row".into(),
                    });
                }
                if fields.len() != 2 {
                    return Err(NetworkError::Parse {
                        line,
                        message: format!(
                            "[bases] row needs 2 fields (v_base_kv,s_base_mva), got {}",
                            fields.len()
                        ),
                    });
                }
                bases = Some((
                    finite_field(fields[0], line, "v_base_kv")?,
                    finite_field(fields[1], line, "s_base_mva")?,
                ));
            }
            Section::Buses => {
                if !(4..=7).contains(&fields.len()) {
                    return Err(NetworkError::Parse {
                        line,
                        message: format!("bus row needs 4 to 7 fields, got {}", fields.len()),
                    });
                }
                let id: usize = parse_field(fields[0], line, "bus id")?;
                if !bus_ids.insert(id) {
                    return Err(NetworkError::Parse {
                        line,
                        message: format!("duplicate bus id {id}"),
                    });
                }
                let kind = match fields[1].trim() {
                    "slack" => BusKind::Slack,
                    "load" => BusKind::Load,
                    other => {
                        return Err(NetworkError::Parse {
                            line,
                            message: format!(
                                "bus kind must be \"slack\" or \"load\", got {other:?}"
                            ),
                        });
                    }
                };
                let p_load_mw = finite_field(fields[2], line, "p_load_mw")?;
                let q_load_mvar = finite_field(fields[3], line, "q_load_mvar")?;
                let v_min_pu = match fields.get(4) {
                    Some(f) => finite_field(f, line, "v_min_pu")?,
                    None => DEFAULT_V_MIN_PU,
                };
                let v_max_pu = match fields.get(5) {
                    Some(f) => finite_field(f, line, "v_max_pu")?,
                    None => DEFAULT_V_MAX_PU,
                };
                let weight = match fields.get(6) {
                    Some(f) => Some(finite_field(f, line, "weight_k")?),
                    None => None,
                };
                weights.push(weight);
                buses.push(Bus {
                    id,
                    kind,
                    p_load_mw,
                    q_load_mvar,
                    v_min_pu,
                    v_max_pu,
                    weight_k: 0.0,
                    p_gen_mw: 0.0,
                    q_gen_mvar: 0.0,
                });
            }
            Section::Branches => {
                if !(6..=7).contains(&fields.len()) {
                    return Err(NetworkError::Parse {
                        line,
                        message: format!("branch row needs 6 or 7 fields, got {}", fields.len()),
                    });
                }
                let id: usize = parse_field(fields[0], line, "branch id")?;
                if !branch_ids.insert(id) {
                    return Err(NetworkError::Parse {
                        line,
                        message: format!("duplicate branch id {id}"),
                    });
                }
                let from_bus: usize = parse_field(fields[1], line, "from bus")?;
                let to_bus: usize = parse_field(fields[2], line, "to bus")?;
                for (name, b) in [("from", from_bus), ("to", to_bus)] {
                    if !bus_ids.contains(&b) {
                        return Err(NetworkError::Parse {
                            line,
                            message: format!("{name} bus {b} is not declared in [buses]"),
                        });
                    }
                }
                let r_pu_per_km = finite_field(fields[3], line, "r_pu_per_km")?;
                let x_pu_per_km = finite_field(fields[4], line, "x_pu_per_km")?;
                let length_km = finite_field(fields[5], line, "length_km")?;
                let p_flow_max_pu = match fields.get(6) {
                    // "inf" (accepted by the float parser) also means unlimited.
                    Some(f) => parse_field::<f64>(f, line, "p_flow_max_pu")?,
                    None => f64::INFINITY,
                };
                if p_flow_max_pu.is_nan() {
                    return Err(NetworkError::Parse {
                        line,
                        message: "p_flow_max_pu must not be NaN".into(),
                    });
                }
                branches.push(Branch {
                    id,
                    from_bus,
                    to_bus,
                    r_pu_per_km,
                    x_pu_per_km,
                    length_km,
                    p_flow_max_pu,
                });
            }
        }
    }

    let (v_base_kv, s_base_mva) = bases.ok_or(NetworkError::Parse {
        line: text.lines().count(),
        message: "missing [bases] section".into(),
    })?;
    if buses.is_empty() {
        return Err(NetworkError::Parse {
            line: text.lines().count(),
            message: "missing or empty [buses] section".into(),
        });
    }

    // Fill unspecified weights: load buses split the remaining budget evenly,
    // zero-load buses contribute nothing to the voltage-profile sum.
    let specified: f64 = buses
        .iter()
        .zip(&weights)
        .filter(|(b, w)| b.has_load() && w.is_some())
        .map(|(_, w)| w.unwrap())
        .sum();
    let unspecified_loads = buses
        .iter()
        .zip(&weights)
        .filter(|(b, w)| b.has_load() && w.is_none())
        .count();
    let fill = if unspecified_loads > 0 {
        ((1.0 - specified) / unspecified_loads as f64).max(0.0)
    } else {
        0.0
    };
    for (bus, weight) in buses.iter_mut().zip(&weights) {
        bus.weight_k = match weight {
            Some(w) => *w,
            None if bus.has_load() => fill,
            None => 0.0,
        };
    }

    Ok(Network {
        v_base_kv,
        s_base_mva,
        buses,
        branches,
    })
}

/// Parse feeder text and reject it unless [`Network::validate`] is clean.
pub fn load_network_from_text(text: &str) -> Result<Network, NetworkError> {
    let net = parse_network(text)?;
    let problems = net.validate();
    if problems.is_empty() {
        Ok(net)
    } else {
        Err(NetworkError::Invalid(problems))
    }
}

/// Read and parse a feeder file, rejecting invalid networks.
pub fn load_network<P: AsRef<Path>>(path: P) -> Result<Network, NetworkError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_network_from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
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

    fn three_bus_text() -> String {
        "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,2.0,1.0
3,load,1.5,0.5
[branches]
1,1,2,0.02,0.04,1.0
2,2,3,0.02,0.04,0.5
"
        .to_string()
    }

    #[test]
    fn parses_two_bus_feeder() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        assert_eq!(net.buses.len(), 2);
        assert_eq!(net.branches.len(), 1);
        assert_eq!(net.buses[0].kind, BusKind::Slack);
        assert_eq!(net.buses[1].p_load_mw, 5.0);
        assert_eq!(net.buses[1].v_min_pu, DEFAULT_V_MIN_PU);
        assert_eq!(net.buses[1].v_max_pu, DEFAULT_V_MAX_PU);
        assert_eq!(net.branches[0].p_flow_max_pu, f64::INFINITY);
        assert_eq!(net.loop_count(), 0);
    }

    #[test]
    fn current_base_matches_hand_calculation() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        assert_relative_eq!(net.i_base_a(), 888.2311833686551, max_relative = 1.0e-12);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\n\n[bases]\n6.5,10  # inline\n[buses]\n1,slack,0,0\n2,load,1,0.5\n\n[branches]\n1,1,2,0.02,0.04,1\n";
        let net = load_network_from_text(text).unwrap();
        assert_eq!(net.buses.len(), 2);
    }

    #[test]
    fn weight_fill_is_uniform_over_load_buses() {
        let net = load_network_from_text(&three_bus_text()).unwrap();
        assert_eq!(net.buses[0].weight_k, 0.0, "zero-load slack gets no weight");
        assert_relative_eq!(net.buses[1].weight_k, 0.5);
        assert_relative_eq!(net.buses[2].weight_k, 0.5);
    }

    #[test]
    fn explicit_weights_fill_the_remainder() {
        let text = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,2.0,1.0,0.9,1.05,0.6
3,load,1.5,0.5
4,load,1.0,0.5
[branches]
1,1,2,0.02,0.04,1.0
2,2,3,0.02,0.04,0.5
3,3,4,0.02,0.04,0.5
";
        let net = load_network_from_text(text).unwrap();
        assert_eq!(net.buses[1].weight_k, 0.6);
        assert_relative_eq!(net.buses[2].weight_k, 0.2);
        assert_relative_eq!(net.buses[3].weight_k, 0.2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "[bases]\n6.5,10\n[buses]\n1,slack,0,0\n2,load,abc,0.5\n";
        let err = parse_network(text).unwrap_err();
        match err {
            NetworkError::Parse { line, ref message } => {
                assert_eq!(line, 5);
                assert!(
                    message.contains("p_load_mw"),
                    "unexpected message: {message}"
                );
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_branch_endpoint_is_a_parse_error() {
        let text =
            "[bases]\n6.5,10\n[buses]\n1,slack,0,0\n2,load,1,0.5\n[branches]\n1,1,99,0.02,0.04,1\n";
        let err = parse_network(text).unwrap_err();
        assert!(
            err.to_string().contains("bus 99"),
            "unexpected error: {err}"
        );
    }

    #[test]
    fn duplicate_bus_id_is_rejected() {
        let text = "[bases]\n6.5,10\n[buses]\n1,slack,0,0\n1,load,1,0.5\n[branches]\n";
        let err = parse_network(text).unwrap_err();
        assert!(
            err.to_string().contains("duplicate bus id 1"),
            "unexpected error: {err}"
        );
    }

    #[test]
    fn two_slack_buses_fail_validation() {
        let text = "[bases]\n6.5,10\n[buses]\n1,slack,0,0\n2,slack,0,0\n3,load,1,0.5\n[branches]\n1,1,2,0.02,0.04,1\n2,2,3,0.02,0.04,1\n";
        let net = parse_network(text).unwrap();
        let problems = net.validate();
        assert!(
            problems.iter().any(|p| p.contains("exactly one slack")),
            "missing slack-count problem in {problems:?}"
        );
    }

    #[test]
    fn disconnected_bus_fails_validation() {
        let text = "[bases]\n6.5,10\n[buses]\n1,slack,0,0\n2,load,1,0.5\n3,load,1,0.5\n[branches]\n1,1,2,0.02,0.04,1\n";
        let net = parse_network(text).unwrap();
        let problems = net.validate();
        assert!(
            problems.iter().any(|p| p.contains("not connected")),
            "missing connectivity problem in {problems:?}"
        );
    }

    #[test]
    fn weight_budget_violation_is_reported() {
        let text = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,2.0,1.0,0.9,1.05,0.7
3,load,1.5,0.5,0.9,1.05,0.7
[branches]
1,1,2,0.02,0.04,1.0
2,2,3,0.02,0.04,0.5
";
        let net = parse_network(text).unwrap();
        let problems = net.validate();
        assert!(
            problems.iter().any(|p| p.contains("sum to 1")),
            "missing weight-budget problem in {problems:?}"
        );
    }

    #[test]
    fn loop_count_sees_tie_branches() {
        let text = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,1,0.5
3,load,1,0.5
[branches]
1,1,2,0.02,0.04,1
2,2,3,0.02,0.04,1
3,3,1,0.02,0.04,1
";
        let net = load_network_from_text(text).unwrap();
        assert_eq!(net.loop_count(), 1);
    }

    #[test]
    fn serialize_parse_round_trip_is_exact() {
        let net = load_network_from_text(&three_bus_text()).unwrap();
        let text = net.to_feeder_text();
        let reparsed = load_network_from_text(&text).unwrap();
        assert_eq!(net, reparsed);
    }

    #[test]
    fn round_trip_preserves_flow_limits_and_bounds() {
        let text = "\
[bases]
6.5,10
[buses]
1,slack,0,0
2,load,0.8,0.32,0.85,1.02,0.9
3,load,0.3,0.12,0.85,1.02,0.1
[branches]
1,1,2,0.008,0.048,1.0,0.75
2,2,3,0.008,0.048,1.0
";
        let net = load_network_from_text(text).unwrap();
        assert_eq!(net.branches[0].p_flow_max_pu, 0.75);
        let reparsed = load_network_from_text(&net.to_feeder_text()).unwrap();
        assert_eq!(net, reparsed);
    }

    #[test]
    fn empty_plan_leaves_network_unchanged() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let applied = net.apply_dg(&DGPlan::empty()).unwrap();
        assert_eq!(net, applied);
    }

    #[test]
    fn apply_dg_adds_injections() {
        let net = load_network_from_text(&three_bus_text()).unwrap();
        let plan = DGPlan::from_triples(&[(3, 1.5, 0.5)]);
        let applied = net.apply_dg(&plan).unwrap();
        assert_eq!(applied.buses[2].p_gen_mw, 1.5);
        assert_eq!(applied.buses[2].q_gen_mvar, 0.5);
        assert_eq!(applied.buses[1].p_gen_mw, 0.0, "other buses untouched");
        assert_eq!(applied.total_gen_mw_mvar(), (1.5, 0.5));
    }

    #[test]
    fn apply_dg_merges_duplicate_buses() {
        let net = load_network_from_text(&three_bus_text()).unwrap();
        let plan = DGPlan::from_triples(&[(2, 1.0, 0.25), (2, 0.5, 0.25)]);
        let applied = net.apply_dg(&plan).unwrap();
        assert_eq!(applied.buses[1].p_gen_mw, 1.5);
        assert_eq!(applied.buses[1].q_gen_mvar, 0.5);
    }

    #[test]
    fn sequential_application_matches_concatenated_plan() {
        let net = load_network_from_text(&three_bus_text()).unwrap();
        let a = DGPlan::from_triples(&[(2, 0.7, 0.3)]);
        let b = DGPlan::from_triples(&[(2, 0.4, 0.1), (3, 0.9, 0.2)]);
        let sequential = net.apply_dg(&a).unwrap().apply_dg(&b).unwrap();
        let mut combined = a.clone();
        combined.units.extend(b.units.clone());
        let merged = net.apply_dg(&combined).unwrap();
        assert_eq!(sequential, merged);
    }

    #[test]
    fn dg_on_unknown_or_slack_bus_is_rejected() {
        let net = load_network_from_text(TWO_BUS).unwrap();
        let unknown = net.apply_dg(&DGPlan::from_triples(&[(99, 1.0, 0.0)]));
        assert!(matches!(unknown, Err(NetworkError::UnknownBus(99))));
        let on_slack = net.apply_dg(&DGPlan::from_triples(&[(1, 1.0, 0.0)]));
        assert!(matches!(on_slack, Err(NetworkError::DgOnSlack(1))));
    }

    #[test]
    fn merged_plan_combines_limits_conservatively() {
        let plan = DGPlan {
            units: vec![
                DGUnit::new(5, 1.0, 0.5).with_limits(Some(0.0), Some(2.0), None, Some(1.0)),
                DGUnit::new(5, 0.5, 0.5).with_limits(Some(0.0), Some(1.0), Some(0.0), Some(1.0)),
            ],
        };
        let merged = plan.merged();
        assert_eq!(merged.units.len(), 1);
        let u = &merged.units[0];
        assert_eq!((u.p_mw, u.q_mvar), (1.5, 1.0));
        assert_eq!(u.p_max_mw, Some(3.0));
        assert_eq!(
            u.q_min_mvar, None,
            "a missing limit stays missing after merge"
        );
        assert_eq!(u.q_max_mvar, Some(2.0));
    }
}
