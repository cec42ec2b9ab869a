//! AC power flow: admittance assembly, Newton-Raphson and fast-decoupled
//! solvers, and a branch-by-branch mismatch audit.

mod fdlf;
mod mismatch;
mod newton;
mod ybus;

use serde::Serialize;
use thiserror::Error;

use crate::netmodel::{Network, NetworkError};

pub use fdlf::{build_bp, solve_fdlf};
pub use mismatch::{bus_mismatch, max_constrained_mismatch, BranchLosses};
pub use newton::solve_newton;
pub use ybus::{build_bpp_full, build_ybus, AdmittanceMatrix};

/// Convergence threshold on per-unit power mismatch.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const NEWTON_MAX_ITER: usize = 30;
pub const FDLF_MAX_ITER: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerFlowError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("power flow did not converge in {iterations} iterations (mismatch {mismatch:.3e} pu)")]
    NoConvergence { iterations: usize, mismatch: f64 },
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerFlowSolution {
    /// Voltage magnitudes, pu, in `Network::buses` order.
    pub vm: Vec<f64>,
    /// Voltage angles, radians; the slack keeps 0.
    pub va: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
}

impl PowerFlowSolution {
    /// A network whose only bus is the slack has nothing to solve.
    fn trivial(vm: Vec<f64>, va: Vec<f64>) -> Self {
        Self {
            vm,
            va,
            converged: true,
            iterations: 0,
            max_mismatch: 0.0,
        }
    }
}

/// Scheduled net injections in pu: generation minus load. Reactive
/// generation at slack/PV buses is free and not included.
pub(crate) fn scheduled_injections(net: &Network) -> (Vec<f64>, Vec<f64>) {
    let gen = net.generation_mw();
    let p = net
        .buses
        .iter()
        .zip(&gen)
        .map(|(b, g)| (g - b.p_load) / net.base_mva)
        .collect();
    let q = net.buses.iter().map(|b| -b.q_load / net.base_mva).collect();
    (p, q)
}

/// Flat start: set-point magnitudes at slack/PV buses, 1.0 elsewhere.
pub(crate) fn flat_start(net: &Network) -> (Vec<f64>, Vec<f64>) {
    let vm = net
        .buses
        .iter()
        .map(|b| {
            if b.kind.is_voltage_controlled() {
                b.v_setpoint
            } else {
                1.0
            }
        })
        .collect();
    (vm, vec![0.0; net.buses.len()])
}

/// Injected power at every bus, `S = V·conj(Y·V)`.
pub(crate) fn injections(y: &AdmittanceMatrix, vm: &[f64], va: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = y.n;
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        for k in 0..n {
            let (g, b) = (y.g[(i, k)], y.b[(i, k)]);
            if g == 0.0 && b == 0.0 {
                continue;
            }
            let (s, c) = (va[i] - va[k]).sin_cos();
            p[i] += vm[i] * vm[k] * (g * c + b * s);
            q[i] += vm[i] * vm[k] * (g * s - b * c);
        }
    }
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{self, BundledCase};

    /// Two-bus reactive equation for a lossless line: `V² − V + x·Q = 0`
    /// with the slack at 1 pu and no active flow; iterated as a scalar
    /// fixed point `V = 1 − x·Q/V`.
    fn two_bus_oracle(x: f64, q: f64) -> f64 {
        let mut v = 1.0;
        for _ in 0..200 {
            v = 1.0 - x * q / v;
        }
        v
    }

    #[test]
    fn two_bus_no_load_is_flat() {
        let net = cases::two_bus(0.0);
        let sol = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).unwrap();
        assert_eq!(sol.vm, vec![1.0, 1.0]);
        assert_eq!(sol.va, vec![0.0, 0.0]);
        let (dp, dq) = bus_mismatch(&net, &sol.vm, &sol.va);
        assert!(dp.iter().chain(&dq).all(|&v| v == 0.0));
    }

    #[test]
    fn two_bus_reactive_load_matches_scalar_oracle() {
        let net = cases::two_bus(10.0);
        let expected = two_bus_oracle(0.1, 0.1);
        assert!((expected - 0.98990).abs() < 5e-6);
        let nr = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).unwrap();
        assert!((nr.vm[1] - expected).abs() < 1e-9);
        let fd = solve_fdlf(&net, DEFAULT_TOLERANCE, FDLF_MAX_ITER).unwrap();
        assert!((fd.vm[1] - expected).abs() < 1e-6);
    }

    #[test]
    fn newton_and_fdlf_agree_on_bundled_cases() {
        for c in BundledCase::ALL {
            let net = c.network();
            let nr = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).unwrap();
            let fd = solve_fdlf(&net, DEFAULT_TOLERANCE, FDLF_MAX_ITER).unwrap();
            for k in 0..net.buses.len() {
                assert!((nr.vm[k] - fd.vm[k]).abs() < 1e-6, "{} vm[{k}]", c.name());
                assert!((nr.va[k] - fd.va[k]).abs() < 1e-6, "{} va[{k}]", c.name());
            }
            assert!(max_constrained_mismatch(&net, &nr.vm, &nr.va) <= DEFAULT_TOLERANCE);
            assert!(max_constrained_mismatch(&net, &fd.vm, &fd.va) <= DEFAULT_TOLERANCE);
        }
    }

    #[test]
    fn setpoints_held_exactly() {
        let net = BundledCase::Ieee14.network();
        let sol = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).unwrap();
        for (k, b) in net.buses.iter().enumerate() {
            if b.kind.is_voltage_controlled() {
                assert_eq!(sol.vm[k], b.v_setpoint);
            }
        }
        assert_eq!(sol.va[net.slack_index().unwrap()], 0.0);
    }

    #[test]
    fn ieee9_disturbed_voltage() {
        let net = cases::Scenario::ieee9().network();
        let sol = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).unwrap();
        let k = net.index_of(9).unwrap();
        assert!((sol.vm[k] - 0.885).abs() < 0.01, "{}", sol.vm[k]);
    }

    #[test]
    fn power_is_conserved() {
        for c in BundledCase::ALL {
            let net = c.network();
            let sol = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).unwrap();
            let y = build_ybus(&net).unwrap();
            let (p, _) = injections(&y, &sol.vm, &sol.va);
            let load: f64 = net.buses.iter().map(|b| b.p_load).sum::<f64>() / net.base_mva;
            let generation = p.iter().sum::<f64>() + load;
            let losses = BranchLosses::compute(&net, &sol.vm, &sol.va);
            assert!(
                (generation - load - losses.total_p()).abs() < 1e-6,
                "{}: {generation} vs {load} + {}",
                c.name(),
                losses.total_p()
            );
        }
    }

    #[test]
    fn mismatch_derivative_matches_bpp() {
        let net = cases::two_bus(10.0);
        let sol = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).unwrap();
        let mut vm = sol.vm.clone();
        let h = 0.01;
        vm[1] += h;
        let (_, dq) = bus_mismatch(&net, &vm, &sol.va);
        // first-order: −∂Q/∂V·h with ∂Q/∂V = B″·V at the converged point
        let expected = -10.0 * h * sol.vm[1];
        assert!(
            (dq[1] - expected).abs() < 0.2 * expected.abs(),
            "{} vs {expected}",
            dq[1]
        );
    }

    #[test]
    fn divergent_case_reports_error() {
        let net = cases::two_bus(400.0);
        assert!(matches!(
            solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER),
            Err(PowerFlowError::NoConvergence { .. }) | Err(PowerFlowError::SingularJacobian { .. })
        ));
    }
}
