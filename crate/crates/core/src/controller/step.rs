use serde::Serialize;

use super::{ControlConfig, ControlError, Method, CONTROLLABILITY_TOL, TIE_TOL};
use crate::netmodel::{BusId, BusPartition};
use crate::numerics::{top_singular_pair, DenseMatrix};
use crate::powerflow::PowerFlowSolution;
use crate::sensitivity::SensitivityModel;

/// One planned set-point move, before its effect is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepPlan {
    pub method: Method,
    pub controlled_bus: BusId,
    /// `v_ref − vm(cb)`.
    pub dv_cb_target: f64,
    /// Square root of the largest singular value of `N`.
    pub sigma1: f64,
    /// Unit direction over the control coordinates.
    pub u1: Vec<f64>,
    pub alpha: f64,
    /// `alpha·u1`, before clamping.
    pub dv_pv_requested: Vec<f64>,
    /// Set-point change actually applied.
    pub dv_pv: Vec<f64>,
    pub setpoints_before: Vec<f64>,
    pub setpoints_after: Vec<f64>,
    /// Control buses whose new set-point was cut back to a limit.
    pub clamped: Vec<BusId>,
    /// `alpha²·sigma1²`, before clamping.
    pub j_predicted: f64,
}

/// Load buses outside `[v_min, v_max]`, ascending id.
pub fn find_critical_buses(
    sol: &PowerFlowSolution,
    cfg: &ControlConfig,
    partition: &BusPartition,
) -> Result<Vec<(BusId, f64)>, ControlError> {
    if !sol.converged {
        return Err(ControlError::Unconverged);
    }
    Ok(partition
        .pq_idx
        .iter()
        .map(|&k| (partition.bus_ids[k], sol.vm[k]))
        .filter(|&(_, v)| v < cfg.v_min || v > cfg.v_max)
        .collect())
}

/// The critical bus nearest the reference; lowest id on ties.
pub fn select_controlled_bus(critical: &[(BusId, f64)], cfg: &ControlConfig) -> Result<BusId, ControlError> {
    let mut best: Option<(BusId, f64)> = None;
    for &(id, v) in critical {
        let dev = (v - cfg.v_ref).abs();
        best = match best {
            Some((bid, bdev)) if bdev < dev - TIE_TOL => Some((bid, bdev)),
            Some((bid, bdev)) if (bdev - dev).abs() <= TIE_TOL && bid < id => Some((bid, bdev)),
            _ => Some((id, dev)),
        };
    }
    best.map(|(id, _)| id).ok_or(ControlError::NoCriticalBuses)
}

/// Diagonal selector with a single 1 at the controlled bus.
pub fn build_weight_matrix(cb: BusId, partition: &BusPartition) -> Result<DenseMatrix, ControlError> {
    let pos = partition.pq_position(cb).ok_or(ControlError::NotLoadBus(cb))?;
    let n = partition.pq_idx.len();
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        if i == pos && j == pos {
            1.0
        } else {
            0.0
        }
    }))
}

/// `N = Aᵀ·M·A`, symmetrized.
pub fn build_n_matrix(model: &SensitivityModel, m: &DenseMatrix) -> Result<DenseMatrix, ControlError> {
    let n_pq = model.a_ctrl.rows();
    if m.rows() != n_pq || m.cols() != n_pq {
        return Err(ControlError::DimensionMismatch {
            expected: n_pq,
            found: m.rows(),
        });
    }
    let a = &model.a_ctrl;
    Ok(a.transpose().matmul(&m.matmul(a)?)?.symmetrized()?)
}

/// `ΔV_PQᵀ·M·ΔV_PQ`.
pub fn performance_index(m: &DenseMatrix, dv_pq: &[f64]) -> Result<f64, ControlError> {
    if m.rows() != dv_pq.len() || m.cols() != dv_pq.len() {
        return Err(ControlError::DimensionMismatch {
            expected: m.rows(),
            found: dv_pq.len(),
        });
    }
    let mv = m.mul_vec(dv_pq)?;
    Ok(dv_pq.iter().zip(&mv).map(|(a, b)| a * b).sum())
}

fn current_setpoints(model: &SensitivityModel, sol: &PowerFlowSolution) -> Vec<f64> {
    model.control_idx.iter().map(|&k| sol.vm[k]).collect()
}

fn target(
    model: &SensitivityModel,
    sol: &PowerFlowSolution,
    cb: BusId,
    cfg: &ControlConfig,
) -> Result<f64, ControlError> {
    model.load_position(cb).ok_or(ControlError::NotLoadBus(cb))?;
    let k = model.partition.ext_to_int[&cb];
    Ok(cfg.v_ref - sol.vm[k])
}

struct Direction {
    method: Method,
    cb: BusId,
    dv_cb_target: f64,
    sigma1: f64,
    u1: Vec<f64>,
    alpha: f64,
}

/// Applies the move and clamps into the band when configured.
fn finish(model: &SensitivityModel, d: Direction, before: Vec<f64>, cfg: &ControlConfig) -> StepPlan {
    let Direction {
        method,
        cb,
        dv_cb_target,
        sigma1,
        u1,
        alpha,
    } = d;
    let requested: Vec<f64> = u1.iter().map(|u| alpha * u).collect();
    let ids = model.control_ids();
    let mut after = Vec::with_capacity(before.len());
    let mut clamped = Vec::new();
    for ((v, d), id) in before.iter().zip(&requested).zip(&ids) {
        let raw = v + d;
        let new = if cfg.clamp_pv {
            raw.clamp(cfg.v_min, cfg.v_max)
        } else {
            raw
        };
        if new != raw {
            clamped.push(*id);
        }
        after.push(new);
    }
    let dv_pv = after.iter().zip(&before).map(|(a, b)| a - b).collect();
    StepPlan {
        method,
        controlled_bus: cb,
        dv_cb_target,
        sigma1,
        u1,
        alpha,
        dv_pv_requested: requested,
        dv_pv,
        setpoints_before: before,
        setpoints_after: after,
        clamped,
        j_predicted: alpha * alpha * sigma1 * sigma1,
    }
}

/// Minimum-norm set-point move that brings the controlled bus to the
/// reference on the linear model.
pub fn ovc_step(
    model: &SensitivityModel,
    sol: &PowerFlowSolution,
    cb: BusId,
    cfg: &ControlConfig,
) -> Result<StepPlan, ControlError> {
    let dv_cb = target(model, sol, cb, cfg)?;
    let m = build_weight_matrix(cb, &model.partition)?;
    let n = build_n_matrix(model, &m)?;
    let (sigma1_sq, mut u1) = top_singular_pair(&n)?;
    let sigma1 = sigma1_sq.max(0.0).sqrt();
    if sigma1 < CONTROLLABILITY_TOL {
        return Err(ControlError::Uncontrollable {
            bus: cb,
            gain: sigma1,
        });
    }
    let row = model.a_row(cb).expect("checked load bus");
    let gain: f64 = row.iter().zip(&u1).map(|(a, u)| a * u).sum();
    if gain < 0.0 {
        u1.iter_mut().for_each(|u| *u = -*u);
    }
    let d = Direction {
        method: Method::Ovc,
        cb,
        dv_cb_target: dv_cb,
        sigma1,
        u1,
        alpha: dv_cb / sigma1,
    };
    Ok(finish(model, d, current_setpoints(model, sol), cfg))
}

/// Moves only the set-point with the largest sensitivity at the controlled
/// bus (lowest id on ties).
pub fn svc_step(
    model: &SensitivityModel,
    sol: &PowerFlowSolution,
    cb: BusId,
    cfg: &ControlConfig,
) -> Result<StepPlan, ControlError> {
    let dv_cb = target(model, sol, cb, cfg)?;
    let row = model.a_row(cb).expect("checked load bus");
    let mut best = 0;
    for j in 1..row.len() {
        if row[j].abs() > row[best].abs() {
            best = j;
        }
    }
    let a = row[best];
    if a.abs() < CONTROLLABILITY_TOL {
        return Err(ControlError::Uncontrollable {
            bus: cb,
            gain: a.abs(),
        });
    }
    let mut u1 = vec![0.0; row.len()];
    u1[best] = a.signum();
    let d = Direction {
        method: Method::Svc,
        cb,
        dv_cb_target: dv_cb,
        sigma1: a.abs(),
        u1,
        alpha: dv_cb / a.abs(),
    };
    Ok(finish(model, d, current_setpoints(model, sol), cfg))
}
