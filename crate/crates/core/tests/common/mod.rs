#![allow(dead_code)]

use qvctl_core::netmodel::{apply_disturbance, Network};
use qvctl_core::numerics::DenseMatrix;
use qvctl_core::powerflow::{solve_newton, NEWTON_MAX_ITER};

/// Finite differences at ε = 1e-4 need solves well below the default tolerance.
pub const FD_TOLERANCE: f64 = 1e-12;
use qvctl_core::sensitivity::SensitivityModel;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Worst relative error of the linear set-point prediction `ε·A·d` against
/// re-solved power flows, over the given unit directions.
pub fn setpoint_fd_error(net: &Network, model: &SensitivityModel, eps: f64, dirs: &[Vec<f64>]) -> f64 {
    let base = solve_newton(net, FD_TOLERANCE, NEWTON_MAX_ITER).unwrap();
    let ids = model.control_ids();
    let mut worst: f64 = 0.0;
    for d in dirs {
        let mut moved = net.clone();
        for (&id, &dk) in ids.iter().zip(d) {
            let v = moved.bus(id).unwrap().v_setpoint;
            moved.set_bus_setpoint(id, v + eps * dk).unwrap();
        }
        let sol = solve_newton(&moved, FD_TOLERANCE, NEWTON_MAX_ITER).unwrap();
        let step: Vec<f64> = d.iter().map(|x| eps * x).collect();
        let predicted = model.predict_dvpq(&step).unwrap();
        let err: Vec<f64> = model
            .partition
            .pq_idx
            .iter()
            .zip(&predicted)
            .map(|(&k, p)| sol.vm[k] - base.vm[k] - p)
            .collect();
        worst = worst.max(max_abs(&err) / max_abs(&predicted));
    }
    worst
}

/// Worst relative error of `d_gain` columns against re-solved power flows
/// when `eps` pu of reactive injection is added at each load bus in turn.
pub fn injection_fd_error(net: &Network, model: &SensitivityModel, eps: f64) -> f64 {
    let base = solve_newton(net, FD_TOLERANCE, NEWTON_MAX_ITER).unwrap();
    let mut worst: f64 = 0.0;
    for (col, id) in model.load_ids().into_iter().enumerate() {
        // injection is negative load
        let moved = apply_disturbance(net, id, -eps * net.base_mva).unwrap();
        let sol = solve_newton(&moved, FD_TOLERANCE, NEWTON_MAX_ITER).unwrap();
        let predicted: Vec<f64> = (0..model.d_gain.rows())
            .map(|r| eps * model.d_gain[(r, col)])
            .collect();
        let err: Vec<f64> = model
            .partition
            .pq_idx
            .iter()
            .zip(&predicted)
            .map(|(&k, p)| sol.vm[k] - base.vm[k] - p)
            .collect();
        worst = worst.max(max_abs(&err) / max_abs(&predicted));
    }
    worst
}
