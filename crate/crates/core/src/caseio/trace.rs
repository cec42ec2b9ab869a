//! CSV writers for control traces and sensitivity matrices.

use std::fmt::Write as _;

use serde::Serialize;

use crate::controller::ControlTrace;
use crate::netmodel::{BusId, BusKind};
use crate::sensitivity::SensitivityModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceRole {
    /// Slack or PV bus (magnitude is a set-point).
    Pv,
    Pq,
    /// Load bus outside the voltage band.
    Critical,
    /// The critical bus targeted by the next iteration.
    Controlled,
}

impl TraceRole {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceRole::Pv => "pv",
            TraceRole::Pq => "pq",
            TraceRole::Critical => "critical",
            TraceRole::Controlled => "controlled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    /// 0 is the state before control; `k` the state after iteration `k`.
    pub iteration: usize,
    pub bus: BusId,
    pub voltage_pu: f64,
    pub role: TraceRole,
}

/// One row per bus per snapshot, iterations ascending and buses ascending
/// within each.
pub fn trace_rows(trace: &ControlTrace) -> Vec<TraceRow> {
    let mut order: Vec<usize> = (0..trace.bus_ids.len()).collect();
    order.sort_by_key(|&k| trace.bus_ids[k]);
    let (v_min, v_max) = (trace.config.v_min, trace.config.v_max);

    let mut rows = Vec::new();
    for (it, vm) in trace.snapshots().into_iter().enumerate() {
        let next_cb = trace.iterations.get(it).map(|r| r.step.controlled_bus);
        for &k in &order {
            let bus = trace.bus_ids[k];
            let v = vm[k];
            let role = if trace.bus_kinds[k] != BusKind::Pq {
                TraceRole::Pv
            } else if next_cb == Some(bus) {
                TraceRole::Controlled
            } else if v < v_min || v > v_max {
                TraceRole::Critical
            } else {
                TraceRole::Pq
            };
            rows.push(TraceRow {
                iteration: it,
                bus,
                voltage_pu: v,
                role,
            });
        }
    }
    rows
}

pub fn write_trace_csv(trace: &ControlTrace) -> String {
    let mut out = String::from("iteration,bus,voltage_pu,role\n");
    for r in trace_rows(trace) {
        let _ = writeln!(
            out,
            "{},{},{:.6},{}",
            r.iteration,
            r.bus,
            r.voltage_pu,
            r.role.as_str()
        );
    }
    out
}

/// Long-format dump of `s_vq` and `a_ctrl` keyed by bus id.
pub fn write_sensitivity_csv(model: &SensitivityModel) -> String {
    let mut out = String::from("matrix,row_bus,col_bus,value\n");
    let order = model.ordering();
    for (i, &r) in order.iter().enumerate() {
        for (j, &c) in order.iter().enumerate() {
            let _ = writeln!(out, "s_vq,{r},{c},{:.10e}", model.s_vq[(i, j)]);
        }
    }
    let controls = model.control_ids();
    for (i, r) in model.load_ids().into_iter().enumerate() {
        for (j, &c) in controls.iter().enumerate() {
            let _ = writeln!(out, "a_ctrl,{r},{c},{:.10e}", model.a_ctrl[(i, j)]);
        }
    }
    out
}
