//! Per-unit network model: buses, branches, generators and the
//! voltage-controlled / load bus split used by the controller.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Default lower voltage limit, pu.
pub const DEFAULT_V_MIN: f64 = 0.9;
/// Default upper voltage limit, pu.
pub const DEFAULT_V_MAX: f64 = 1.1;

pub type BusId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

impl BusKind {
    /// Slack and PV buses hold their voltage magnitude at a set-point.
    pub fn is_voltage_controlled(self) -> bool {
        matches!(self, BusKind::Slack | BusKind::Pv)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BusKind::Slack => "slack",
            BusKind::Pv => "pv",
            BusKind::Pq => "pq",
        }
    }
}

impl fmt::Display for BusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Loads are in MW/MVAr (positive Q = inductive); shunts are MW/MVAr
/// consumed at 1 pu voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    pub p_load: f64,
    pub q_load: f64,
    pub g_shunt: f64,
    pub b_shunt: f64,
    /// Voltage magnitude set-point for slack/PV buses; initial guess otherwise.
    pub v_setpoint: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Bus {
    /// A load bus at 1 pu with the default limits and nothing attached.
    pub fn new(id: BusId, kind: BusKind) -> Self {
        Self {
            id,
            kind,
            p_load: 0.0,
            q_load: 0.0,
            g_shunt: 0.0,
            b_shunt: 0.0,
            v_setpoint: 1.0,
            v_min: DEFAULT_V_MIN,
            v_max: DEFAULT_V_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, pu.
    pub b_charging: f64,
    /// Off-nominal turns ratio on the from side; 1.0 for lines.
    pub tap: f64,
    /// Phase shift, degrees.
    pub shift: f64,
    pub in_service: bool,
}

impl Branch {
    pub fn line(from_bus: BusId, to_bus: BusId, r: f64, x: f64, b_charging: f64) -> Self {
        Self {
            from_bus,
            to_bus,
            r,
            x,
            b_charging,
            tap: 1.0,
            shift: 0.0,
            in_service: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: BusId,
    pub p_gen: f64,
    pub v_setpoint: f64,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("invalid network: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("set-point {0} pu outside (0, 2)")]
    SetpointOutOfRange(f64),
}

/// One broken network invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveBaseMva(f64),
    NoBuses,
    NoSlack,
    MultipleSlack(Vec<BusId>),
    InvalidBusId(BusId),
    DuplicateBusId(BusId),
    BadVoltageLimits { bus: BusId, v_min: f64, v_max: f64 },
    SetpointOutOfRange { bus: BusId, v: f64 },
    NonFinite { what: String },
    DanglingBranch { branch: usize, bus: BusId },
    DanglingGenerator { generator: usize, bus: BusId },
    ZeroImpedance { branch: usize },
    NonPositiveTap { branch: usize, tap: f64 },
    MissingGenerator { bus: BusId },
    GeneratorAtLoadBus { bus: BusId },
    Islanded(Vec<BusId>),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveBaseMva(v) => write!(f, "base MVA {v} must be positive"),
            Violation::NoBuses => write!(f, "network has no buses"),
            Violation::NoSlack => write!(f, "no slack bus"),
            Violation::MultipleSlack(ids) => write!(f, "multiple slack buses {ids:?}"),
            Violation::InvalidBusId(id) => write!(f, "bus id {id} must be positive"),
            Violation::DuplicateBusId(id) => write!(f, "duplicate bus id {id}"),
            Violation::BadVoltageLimits { bus, v_min, v_max } => {
                write!(f, "bus {bus}: voltage limits [{v_min}, {v_max}] invalid")
            }
            Violation::SetpointOutOfRange { bus, v } => {
                write!(f, "bus {bus}: set-point {v} pu outside (0, 2)")
            }
            Violation::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Violation::DanglingBranch { branch, bus } => {
                write!(f, "branch {branch} references nonexistent bus {bus}")
            }
            Violation::DanglingGenerator { generator, bus } => {
                write!(f, "generator {generator} references nonexistent bus {bus}")
            }
            Violation::ZeroImpedance { branch } => {
                write!(f, "branch {branch} has zero impedance")
            }
            Violation::NonPositiveTap { branch, tap } => {
                write!(f, "branch {branch} has non-positive tap {tap}")
            }
            Violation::MissingGenerator { bus } => {
                write!(f, "voltage-controlled bus {bus} has no in-service generator")
            }
            Violation::GeneratorAtLoadBus { bus } => {
                write!(f, "load bus {bus} hosts an in-service generator")
            }
            Violation::Islanded(ids) => write!(f, "buses {ids:?} are islanded from the slack"),
        }
    }
}

impl Network {
    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    /// Internal index (position in `buses`) of an external bus id.
    pub fn index_of(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn bus_ids(&self) -> Vec<BusId> {
        self.buses.iter().map(|b| b.id).collect()
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.kind == BusKind::Slack)
    }

    /// Sum of in-service generator active output at each bus, MW.
    pub fn generation_mw(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.buses.len()];
        for g in self.generators.iter().filter(|g| g.in_service) {
            if let Some(k) = self.index_of(g.bus) {
                out[k] += g.p_gen;
            }
        }
        out
    }

    /// Voltage magnitude set-points of all buses, indexed internally.
    pub fn setpoints(&self) -> Vec<f64> {
        self.buses.iter().map(|b| b.v_setpoint).collect()
    }

    /// Sets the magnitude set-point of a voltage-controlled bus and of every
    /// generator it hosts.
    pub fn set_bus_setpoint(&mut self, id: BusId, v: f64) -> Result<(), NetworkError> {
        let bus = self
            .buses
            .iter_mut()
            .find(|b| b.id == id)
            .ok_or(NetworkError::UnknownBus(id))?;
        bus.v_setpoint = v;
        for g in self.generators.iter_mut().filter(|g| g.bus == id) {
            g.v_setpoint = v;
        }
        Ok(())
    }
}

pub fn validate_network(net: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(net.base_mva > 0.0) || !net.base_mva.is_finite() {
        out.push(Violation::NonPositiveBaseMva(net.base_mva));
    }
    if net.buses.is_empty() {
        out.push(Violation::NoBuses);
        return out;
    }

    let mut ids = BTreeSet::new();
    for b in &net.buses {
        if b.id == 0 {
            out.push(Violation::InvalidBusId(b.id));
        }
        if !ids.insert(b.id) {
            out.push(Violation::DuplicateBusId(b.id));
        }
        let values = [
            b.p_load,
            b.q_load,
            b.g_shunt,
            b.b_shunt,
            b.v_setpoint,
            b.v_min,
            b.v_max,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            out.push(Violation::NonFinite {
                what: format!("bus {}", b.id),
            });
        } else if !(0.0 < b.v_min && b.v_min < b.v_max) {
            out.push(Violation::BadVoltageLimits {
                bus: b.id,
                v_min: b.v_min,
                v_max: b.v_max,
            });
        }
        if b.kind.is_voltage_controlled() && !(b.v_setpoint > 0.0 && b.v_setpoint < 2.0) {
            out.push(Violation::SetpointOutOfRange {
                bus: b.id,
                v: b.v_setpoint,
            });
        }
    }

    let slacks: Vec<BusId> = net
        .buses
        .iter()
        .filter(|b| b.kind == BusKind::Slack)
        .map(|b| b.id)
        .collect();
    match slacks.len() {
        0 => out.push(Violation::NoSlack),
        1 => {}
        _ => out.push(Violation::MultipleSlack(slacks.clone())),
    }

    for (k, br) in net.branches.iter().enumerate() {
        for bus in [br.from_bus, br.to_bus] {
            if !ids.contains(&bus) {
                out.push(Violation::DanglingBranch { branch: k, bus });
            }
        }
        if [br.r, br.x, br.b_charging, br.tap, br.shift]
            .iter()
            .any(|v| !v.is_finite())
        {
            out.push(Violation::NonFinite {
                what: format!("branch {k}"),
            });
            continue;
        }
        if br.in_service && br.r * br.r + br.x * br.x == 0.0 {
            out.push(Violation::ZeroImpedance { branch: k });
        }
        if !(br.tap > 0.0) {
            out.push(Violation::NonPositiveTap {
                branch: k,
                tap: br.tap,
            });
        }
    }

    let mut with_gen = BTreeSet::new();
    for (k, g) in net.generators.iter().enumerate() {
        if !ids.contains(&g.bus) {
            out.push(Violation::DanglingGenerator {
                generator: k,
                bus: g.bus,
            });
        }
        if !g.p_gen.is_finite() || !g.v_setpoint.is_finite() {
            out.push(Violation::NonFinite {
                what: format!("generator {k}"),
            });
        }
        if g.in_service {
            with_gen.insert(g.bus);
        }
    }
    for b in &net.buses {
        match b.kind {
            BusKind::Slack | BusKind::Pv if !with_gen.contains(&b.id) => {
                out.push(Violation::MissingGenerator { bus: b.id })
            }
            BusKind::Pq if with_gen.contains(&b.id) => out.push(Violation::GeneratorAtLoadBus { bus: b.id }),
            _ => {}
        }
    }

    let islanded = unreachable_buses(net);
    if !islanded.is_empty() && slacks.len() == 1 {
        out.push(Violation::Islanded(islanded));
    }
    out
}

/// Buses not reachable from the slack (or the first bus when there is no
/// slack) over in-service branches.
fn unreachable_buses(net: &Network) -> Vec<BusId> {
    let mut adjacency: BTreeMap<BusId, Vec<BusId>> = BTreeMap::new();
    for br in net.branches.iter().filter(|b| b.in_service) {
        adjacency.entry(br.from_bus).or_default().push(br.to_bus);
        adjacency.entry(br.to_bus).or_default().push(br.from_bus);
    }
    let start = net
        .buses
        .iter()
        .find(|b| b.kind == BusKind::Slack)
        .unwrap_or(&net.buses[0])
        .id;
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(b) = stack.pop() {
        for &n in adjacency.get(&b).into_iter().flatten() {
            if seen.insert(n) {
                stack.push(n);
            }
        }
    }
    let mut out: Vec<BusId> = net
        .buses
        .iter()
        .map(|b| b.id)
        .filter(|id| !seen.contains(id))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Split of the buses into the voltage-controlled set (slack included) and
/// the load set. Indices refer to positions in `Network::buses`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BusPartition {
    pub slack_idx: usize,
    /// Slack and PV buses, ascending external id.
    pub pv_idx: Vec<usize>,
    /// PQ buses, ascending external id.
    pub pq_idx: Vec<usize>,
    pub ext_to_int: BTreeMap<BusId, usize>,
    /// External id of each internal index.
    pub bus_ids: Vec<BusId>,
}

impl BusPartition {
    pub fn bus_count(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn pv_ids(&self) -> Vec<BusId> {
        self.pv_idx.iter().map(|&k| self.bus_ids[k]).collect()
    }

    pub fn pq_ids(&self) -> Vec<BusId> {
        self.pq_idx.iter().map(|&k| self.bus_ids[k]).collect()
    }

    /// Position of a bus within the PQ coordinate list.
    pub fn pq_position(&self, id: BusId) -> Option<usize> {
        let k = *self.ext_to_int.get(&id)?;
        self.pq_idx.iter().position(|&p| p == k)
    }

    /// Position of a bus within the voltage-controlled coordinate list.
    pub fn pv_position(&self, id: BusId) -> Option<usize> {
        let k = *self.ext_to_int.get(&id)?;
        self.pv_idx.iter().position(|&p| p == k)
    }
}

pub fn partition_buses(net: &Network) -> Result<BusPartition, NetworkError> {
    let violations = validate_network(net);
    if !violations.is_empty() {
        return Err(NetworkError::Invalid(violations));
    }
    let bus_ids = net.bus_ids();
    let ext_to_int: BTreeMap<BusId, usize> = bus_ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let mut pv_idx = Vec::new();
    let mut pq_idx = Vec::new();
    // BTreeMap iteration gives ascending external id.
    for &k in ext_to_int.values() {
        if net.buses[k].kind.is_voltage_controlled() {
            pv_idx.push(k);
        } else {
            pq_idx.push(k);
        }
    }
    let slack_idx = net.slack_index().expect("validated network has a slack");
    Ok(BusPartition {
        slack_idx,
        pv_idx,
        pq_idx,
        ext_to_int,
        bus_ids,
    })
}

/// Adds `dq` MVAr of reactive load at `bus`; positive is inductive.
pub fn apply_disturbance(net: &Network, bus: BusId, dq: f64) -> Result<Network, NetworkError> {
    let mut out = net.clone();
    let b = out
        .buses
        .iter_mut()
        .find(|b| b.id == bus)
        .ok_or(NetworkError::UnknownBus(bus))?;
    b.q_load += dq;
    Ok(out)
}

/// Moves every slack/PV bus and every generator to the same set-point.
pub fn set_flat_setpoints(net: &Network, v: f64) -> Result<Network, NetworkError> {
    if !(v > 0.0 && v < 2.0) {
        return Err(NetworkError::SetpointOutOfRange(v));
    }
    let mut out = net.clone();
    for b in out.buses.iter_mut().filter(|b| b.kind.is_voltage_controlled()) {
        b.v_setpoint = v;
    }
    for g in &mut out.generators {
        g.v_setpoint = v;
    }
    Ok(out)
}
