//! Q–V sensitivities from the decoupled B″ matrix and the control matrix
//! mapping generator set-point moves to load-bus voltage moves.

use serde::Serialize;
use thiserror::Error;

use crate::netmodel::{partition_buses, BusId, BusPartition, Network, NetworkError};
use crate::numerics::{invert, svd, DenseMatrix, NumericsError};
use crate::powerflow::{build_bpp_full, PowerFlowError};

/// Whether the slack magnitude is a control coordinate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SlackMode {
    /// Slack set-point is adjustable like any PV bus.
    #[default]
    Control,
    /// Slack is the fixed voltage reference and drops out of the model.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
    #[error("B″ is singular: {0}")]
    SingularBpp(NumericsError),
    #[error("generator block of the sensitivity matrix is singular (condition estimate {condition:.3e})")]
    SingularS11 { condition: f64 },
    #[error("no voltage-controlled coordinates to act on")]
    NoControls,
    #[error("no load buses to observe")]
    NoLoads,
    #[error("expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityModel {
    /// `(B″)⁻¹` over control coordinates followed by load coordinates.
    pub s_vq: DenseMatrix,
    pub s11: DenseMatrix,
    pub s12: DenseMatrix,
    pub s21: DenseMatrix,
    pub s22: DenseMatrix,
    /// `s21·s11⁻¹`, load × control.
    pub a_ctrl: DenseMatrix,
    /// `s22 − s21·s11⁻¹·s12`: load-voltage response to load-Q changes with
    /// the set-points held.
    pub d_gain: DenseMatrix,
    pub partition: BusPartition,
    pub slack_mode: SlackMode,
    /// Internal indices of the control coordinates, in model order.
    pub control_idx: Vec<usize>,
}

impl SensitivityModel {
    pub fn control_ids(&self) -> Vec<BusId> {
        self.control_idx
            .iter()
            .map(|&k| self.partition.bus_ids[k])
            .collect()
    }

    pub fn load_ids(&self) -> Vec<BusId> {
        self.partition.pq_ids()
    }

    /// Bus ids in `s_vq` row order.
    pub fn ordering(&self) -> Vec<BusId> {
        let mut ids = self.control_ids();
        ids.extend(self.load_ids());
        ids
    }

    pub fn control_position(&self, id: BusId) -> Option<usize> {
        let k = *self.partition.ext_to_int.get(&id)?;
        self.control_idx.iter().position(|&c| c == k)
    }

    pub fn load_position(&self, id: BusId) -> Option<usize> {
        self.partition.pq_position(id)
    }

    /// Row of `a_ctrl` for a load bus.
    pub fn a_row(&self, id: BusId) -> Option<&[f64]> {
        self.load_position(id).map(|r| self.a_ctrl.row(r))
    }

    /// Linearized load-voltage change for a set-point move, disturbance term
    /// neglected.
    pub fn predict_dvpq(&self, dv_pv: &[f64]) -> Result<Vec<f64>, SensitivityError> {
        if dv_pv.len() != self.a_ctrl.cols() {
            return Err(SensitivityError::DimensionMismatch {
                expected: self.a_ctrl.cols(),
                found: dv_pv.len(),
            });
        }
        Ok(self.a_ctrl.mul_vec(dv_pv).expect("length checked"))
    }
}

/// B″ over all buses, rows and columns ordered voltage-controlled buses
/// first (slack included) then load buses, each ascending by id.
pub fn build_bpp(net: &Network, partition: &BusPartition) -> Result<DenseMatrix, PowerFlowError> {
    let order: Vec<usize> = partition
        .pv_idx
        .iter()
        .chain(&partition.pq_idx)
        .copied()
        .collect();
    Ok(build_bpp_full(net)?.select(&order, &order))
}

pub fn build_model(net: &Network) -> Result<SensitivityModel, SensitivityError> {
    build_model_with(net, SlackMode::default())
}

pub fn build_model_with(net: &Network, slack_mode: SlackMode) -> Result<SensitivityModel, SensitivityError> {
    let partition = partition_buses(net)?;
    let bpp = build_bpp(net, &partition)?;

    let control_idx: Vec<usize> = partition
        .pv_idx
        .iter()
        .copied()
        .filter(|&k| slack_mode == SlackMode::Control || k != partition.slack_idx)
        .collect();
    if control_idx.is_empty() {
        return Err(SensitivityError::NoControls);
    }
    if partition.pq_idx.is_empty() {
        return Err(SensitivityError::NoLoads);
    }
    let n_pv = partition.pv_idx.len();
    let keep: Vec<usize> = (0..bpp.rows())
        .filter(|&r| r >= n_pv || control_idx.contains(&partition.pv_idx[r]))
        .collect();
    let s_vq = invert(&bpp.select(&keep, &keep)).map_err(SensitivityError::SingularBpp)?;

    let g = control_idx.len();
    let n = s_vq.rows();
    let ctrl: Vec<usize> = (0..g).collect();
    let load: Vec<usize> = (g..n).collect();
    let s11 = s_vq.select(&ctrl, &ctrl);
    let s12 = s_vq.select(&ctrl, &load);
    let s21 = s_vq.select(&load, &ctrl);
    let s22 = s_vq.select(&load, &load);

    let s11_inv = invert(&s11).map_err(|_| SensitivityError::SingularS11 {
        condition: condition_estimate(&s11),
    })?;
    let a_ctrl = s21.matmul(&s11_inv).expect("block shapes agree");
    let d_gain = s22
        .sub(&a_ctrl.matmul(&s12).expect("block shapes agree"))
        .expect("block shapes agree");

    Ok(SensitivityModel {
        s_vq,
        s11,
        s12,
        s21,
        s22,
        a_ctrl,
        d_gain,
        partition,
        slack_mode,
        control_idx,
    })
}

/// Ratio of extreme singular values; infinite when rank deficient.
fn condition_estimate(a: &DenseMatrix) -> f64 {
    match svd(a) {
        Ok(r) => {
            let max = r.sigma.first().copied().unwrap_or(0.0);
            let min = r.sigma.last().copied().unwrap_or(0.0);
            if min > 0.0 {
                max / min
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}
