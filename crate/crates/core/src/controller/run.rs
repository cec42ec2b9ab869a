use std::collections::BTreeMap;

use serde::Serialize;

use super::step::{
    build_weight_matrix, find_critical_buses, ovc_step, performance_index, select_controlled_bus, svc_step,
    StepPlan,
};
use super::{
    ControlConfig, ControlError, ControlTrace, EvaluationMode, IterationRecord, Method, Outcome,
    OSCILLATION_REPEATS,
};
use crate::netmodel::{BusId, Network};
use crate::powerflow::{solve_newton, PowerFlowSolution, NEWTON_MAX_ITER};
use crate::sensitivity::{build_model_with, SensitivityModel};

pub fn ovc_run(net: &Network, cfg: &ControlConfig) -> Result<ControlTrace, ControlError> {
    run_method(net, cfg, Method::Ovc)
}

pub fn svc_run(net: &Network, cfg: &ControlConfig) -> Result<ControlTrace, ControlError> {
    run_method(net, cfg, Method::Svc)
}

/// Solve, find critical buses, step, re-evaluate; until none remain or a
/// stopping rule fires.
pub fn run_method(net: &Network, cfg: &ControlConfig, method: Method) -> Result<ControlTrace, ControlError> {
    cfg.validate()?;
    let model = build_model_with(net, cfg.slack_mode)?;
    let initial =
        solve_newton(net, cfg.pf_tolerance, NEWTON_MAX_ITER).map_err(ControlError::InitialPowerFlow)?;
    let control_ids = model.control_ids();
    let initial_setpoints: Vec<f64> = model.control_idx.iter().map(|&k| initial.vm[k]).collect();

    let mut current_net = net.clone();
    let mut sol = initial.clone();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut seen: BTreeMap<(BusId, bool), usize> = BTreeMap::new();
    let mut fewest_critical = usize::MAX;

    let outcome = loop {
        let critical = find_critical_buses(&sol, cfg, &model.partition)?;
        if critical.is_empty() {
            break Outcome::Resolved;
        }
        if records.len() >= cfg.max_iterations {
            break Outcome::IterationCapHit;
        }
        if critical.len() < fewest_critical {
            fewest_critical = critical.len();
            seen.clear();
        }
        let cb = select_controlled_bus(&critical, cfg)?;
        let vm_cb = critical.iter().find(|c| c.0 == cb).expect("selected from list").1;
        let raise = vm_cb < cfg.v_ref;
        let count = seen.entry((cb, raise)).or_default();
        *count += 1;
        if *count >= OSCILLATION_REPEATS {
            break Outcome::Oscillating;
        }

        let step = match method {
            Method::Ovc => ovc_step(&model, &sol, cb, cfg),
            Method::Svc => svc_step(&model, &sol, cb, cfg),
        };
        let step = match step {
            Ok(s) => s,
            Err(ControlError::Uncontrollable { .. }) => break Outcome::Infeasible,
            Err(e) => return Err(e),
        };
        if step.dv_pv.iter().all(|d| d.abs() <= f64::EPSILON) {
            // every set-point that could help is pinned at a limit
            break Outcome::Infeasible;
        }

        let index = records.len() + 1;
        for (&id, &v) in control_ids.iter().zip(&step.setpoints_after) {
            current_net
                .set_bus_setpoint(id, v)
                .expect("control ids come from the network");
        }
        let next =
            evaluate(&current_net, &model, &sol, &step, cfg).map_err(|source| ControlError::PowerFlow {
                iteration: index,
                source,
            })?;

        let m = build_weight_matrix(cb, &model.partition)?;
        let dv_pq: Vec<f64> = model
            .partition
            .pq_idx
            .iter()
            .map(|&k| next.vm[k] - sol.vm[k])
            .collect();
        let j_achieved = performance_index(&m, &dv_pq)?;

        records.push(IterationRecord {
            index,
            critical_buses: critical,
            step,
            j_achieved,
            vm_after: next.vm.clone(),
        });
        sol = next;
    };

    let final_setpoints = model.control_idx.iter().map(|&k| sol.vm[k]).collect();
    let j_achieved_total = records.iter().fold(0.0, |acc, r| acc + r.j_achieved);
    Ok(ControlTrace {
        method,
        config: *cfg,
        bus_ids: model.partition.bus_ids.clone(),
        bus_kinds: net.buses.iter().map(|b| b.kind).collect(),
        control_ids,
        initial_solution: initial,
        initial_setpoints,
        iterations: records,
        outcome,
        final_solution: sol,
        final_setpoints,
        j_achieved_total,
    })
}

/// New operating point after a step: a full power flow, or the linear
/// estimate `vm_PQ + A·ΔV_PV` with the angles carried over.
fn evaluate(
    net: &Network,
    model: &SensitivityModel,
    sol: &PowerFlowSolution,
    step: &StepPlan,
    cfg: &ControlConfig,
) -> Result<PowerFlowSolution, crate::powerflow::PowerFlowError> {
    match cfg.evaluation_mode {
        EvaluationMode::PowerFlow => solve_newton(net, cfg.pf_tolerance, NEWTON_MAX_ITER),
        EvaluationMode::Linear => {
            let dv_pq = model.predict_dvpq(&step.dv_pv).expect("step sized to the model");
            let mut vm = sol.vm.clone();
            for (&k, &v) in model.control_idx.iter().zip(&step.setpoints_after) {
                vm[k] = v;
            }
            for (&k, d) in model.partition.pq_idx.iter().zip(&dv_pq) {
                vm[k] += d;
            }
            Ok(PowerFlowSolution {
                vm,
                va: sol.va.clone(),
                converged: true,
                iterations: 0,
                max_mismatch: sol.max_mismatch,
            })
        }
    }
}

/// First-iteration performance of both methods from the same start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub controlled_bus: BusId,
    pub j_ovc: f64,
    pub j_svc: f64,
    pub ovc: ControlTrace,
    pub svc: ControlTrace,
}

pub fn compare_ovc_svc(net: &Network, cfg: &ControlConfig) -> Result<Comparison, ControlError> {
    let ovc = ovc_run(net, cfg)?;
    let svc = svc_run(net, cfg)?;
    let (Some(first_ovc), Some(first_svc)) = (ovc.iterations.first(), svc.iterations.first()) else {
        return Err(ControlError::NoCriticalBuses);
    };
    debug_assert_eq!(first_ovc.step.controlled_bus, first_svc.step.controlled_bus);
    Ok(Comparison {
        controlled_bus: first_ovc.step.controlled_bus,
        j_ovc: first_ovc.j_achieved,
        j_svc: first_svc.j_achieved,
        ovc,
        svc,
    })
}
