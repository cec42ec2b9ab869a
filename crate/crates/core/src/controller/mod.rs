//! Iterative generator set-point control that restores out-of-limit load
//! voltages, in two flavours:
//!
//! * OVC moves all set-points along the dominant singular direction of
//!   `N = Aᵀ·M·A`, the cheapest move (in ‖ΔV_PV‖₂) that reaches the target.
//! * SVC moves only the set-point the controlled bus is most sensitive to.
//!
//! Each iteration picks one controlled bus, plans a step on the linear
//! model, clamps the new set-points into the voltage band, and evaluates the
//! result with a fresh power flow (or the linear model in
//! [`EvaluationMode::Linear`]).

mod run;
mod step;

use serde::Serialize;
use thiserror::Error;

use crate::netmodel::{BusId, BusKind, DEFAULT_V_MAX, DEFAULT_V_MIN};
use crate::numerics::NumericsError;
use crate::powerflow::{PowerFlowError, PowerFlowSolution, DEFAULT_TOLERANCE};
use crate::sensitivity::{SensitivityError, SlackMode};

pub use run::{compare_ovc_svc, ovc_run, run_method, svc_run, Comparison};
pub use step::{
    build_n_matrix, build_weight_matrix, find_critical_buses, ovc_step, performance_index,
    select_controlled_bus, svc_step, StepPlan,
};

/// Below this the controlled bus is treated as unreachable from the
/// set-points.
pub const CONTROLLABILITY_TOL: f64 = 1e-10;
/// A pair `(controlled bus, direction)` seen this many times without the
/// critical set reaching a new minimum stops the run as oscillating.
pub const OSCILLATION_REPEATS: usize = 4;
/// Deviations closer than this count as a tie when picking the controlled bus.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    /// Re-solve the AC power flow after each step.
    PowerFlow,
    /// Update load voltages with `A·ΔV_PV` instead of solving.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ovc,
    Svc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ovc => "ovc",
            Method::Svc => "svc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlConfig {
    pub v_ref: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub max_iterations: usize,
    pub evaluation_mode: EvaluationMode,
    pub clamp_pv: bool,
    pub pf_tolerance: f64,
    pub slack_mode: SlackMode,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            v_ref: 1.0,
            v_min: DEFAULT_V_MIN,
            v_max: DEFAULT_V_MAX,
            max_iterations: 20,
            evaluation_mode: EvaluationMode::PowerFlow,
            clamp_pv: true,
            pf_tolerance: DEFAULT_TOLERANCE,
            slack_mode: SlackMode::Control,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        let finite = [self.v_ref, self.v_min, self.v_max, self.pf_tolerance]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(ControlError::Config("non-finite setting".into()));
        }
        if !(0.0 < self.v_min && self.v_min < self.v_ref && self.v_ref < self.v_max) {
            return Err(ControlError::Config(format!(
                "need 0 < v_min < v_ref < v_max, got {} / {} / {}",
                self.v_min, self.v_ref, self.v_max
            )));
        }
        if !(self.pf_tolerance > 0.0) {
            return Err(ControlError::Config("pf_tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Resolved,
    IterationCapHit,
    Infeasible,
    Oscillating,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Resolved => "resolved",
            Outcome::IterationCapHit => "iteration_cap_hit",
            Outcome::Infeasible => "infeasible",
            Outcome::Oscillating => "oscillating",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based.
    pub index: usize,
    /// Out-of-limit load buses seen at the start of the iteration.
    pub critical_buses: Vec<(BusId, f64)>,
    #[serde(flatten)]
    pub step: StepPlan,
    /// `ΔV_PQᵀ·M·ΔV_PQ` on the change actually obtained.
    pub j_achieved: f64,
    /// All bus magnitudes after the step, `Network::buses` order.
    pub vm_after: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlTrace {
    pub method: Method,
    pub config: ControlConfig,
    /// External ids in `Network::buses` order.
    pub bus_ids: Vec<BusId>,
    pub bus_kinds: Vec<BusKind>,
    /// Buses whose set-points the controller moves, in step-vector order.
    pub control_ids: Vec<BusId>,
    pub initial_solution: PowerFlowSolution,
    pub initial_setpoints: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    pub outcome: Outcome,
    pub final_solution: PowerFlowSolution,
    pub final_setpoints: Vec<f64>,
    pub j_achieved_total: f64,
}

impl ControlTrace {
    pub fn bus_position(&self, id: BusId) -> Option<usize> {
        self.bus_ids.iter().position(|&b| b == id)
    }

    pub fn initial_vm(&self, id: BusId) -> Option<f64> {
        self.bus_position(id).map(|k| self.initial_solution.vm[k])
    }

    pub fn final_vm(&self, id: BusId) -> Option<f64> {
        self.bus_position(id).map(|k| self.final_solution.vm[k])
    }

    /// Magnitude snapshots: the initial solution, then one per iteration.
    pub fn snapshots(&self) -> Vec<&[f64]> {
        std::iter::once(self.initial_solution.vm.as_slice())
            .chain(self.iterations.iter().map(|r| r.vm_after.as_slice()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("invalid control settings: {0}")]
    Config(String),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("initial power flow failed: {0}")]
    InitialPowerFlow(PowerFlowError),
    #[error("power flow failed after control iteration {iteration}: {source}")]
    PowerFlow {
        iteration: usize,
        source: PowerFlowError,
    },
    #[error("power-flow solution has not converged")]
    Unconverged,
    #[error("bus {0} is not a load bus")]
    NotLoadBus(BusId),
    #[error("bus {bus} cannot be moved by the set-points (gain {gain:.3e})")]
    Uncontrollable { bus: BusId, gain: f64 },
    #[error("no critical buses")]
    NoCriticalBuses,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}
