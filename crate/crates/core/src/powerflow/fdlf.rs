use super::{
    build_bpp_full, build_ybus, flat_start, injections, scheduled_injections, PowerFlowError,
    PowerFlowSolution,
};
use crate::netmodel::{partition_buses, Network};
use crate::numerics::{invert, DenseMatrix};

/// Active-iteration matrix over all buses: series reactances only, no
/// resistance, charging, shunts or taps.
pub fn build_bp(net: &Network) -> DenseMatrix {
    let n = net.buses.len();
    let mut bp = DenseMatrix::zeros(n, n);
    for br in net.branches.iter().filter(|b| b.in_service) {
        let (Some(f), Some(t)) = (net.index_of(br.from_bus), net.index_of(br.to_bus)) else {
            continue;
        };
        let b = 1.0 / br.x;
        bp[(f, f)] += b;
        bp[(t, t)] += b;
        bp[(f, t)] -= b;
        bp[(t, f)] -= b;
    }
    bp
}

/// Fast-decoupled load flow with constant B′ (angles) and B″ (magnitudes).
pub fn solve_fdlf(net: &Network, tol: f64, max_iter: usize) -> Result<PowerFlowSolution, PowerFlowError> {
    let part = partition_buses(net)?;
    let y = build_ybus(net)?;
    let (p_sched, q_sched) = scheduled_injections(net);
    let (mut vm, mut va) = flat_start(net);

    let pvpq: Vec<usize> = (0..net.buses.len()).filter(|&k| k != part.slack_idx).collect();
    let pq = part.pq_idx.clone();
    if pvpq.is_empty() {
        return Ok(PowerFlowSolution::trivial(vm, va));
    }
    let singular = |_| PowerFlowError::SingularJacobian { iteration: 0 };
    let bp_inv = invert(&build_bp(net).select(&pvpq, &pvpq)).map_err(singular)?;
    let bpp_inv = if pq.is_empty() {
        None
    } else {
        Some(invert(&build_bpp_full(net)?.select(&pq, &pq)).map_err(singular)?)
    };

    let mismatch = |vm: &[f64], va: &[f64]| {
        let (p, q) = injections(&y, vm, va);
        let dp: Vec<f64> = pvpq.iter().map(|&i| p_sched[i] - p[i]).collect();
        let dq: Vec<f64> = pq.iter().map(|&i| q_sched[i] - q[i]).collect();
        let worst = dp.iter().chain(&dq).fold(0.0_f64, |m, v| m.max(v.abs()));
        (dp, dq, worst)
    };

    let mut iterations = 0;
    loop {
        let (dp, _, worst) = mismatch(&vm, &va);
        if !worst.is_finite() || iterations == max_iter {
            return Err(PowerFlowError::NoConvergence {
                iterations,
                mismatch: worst,
            });
        }
        if worst <= tol {
            return Ok(PowerFlowSolution {
                vm,
                va,
                converged: true,
                iterations,
                max_mismatch: worst,
            });
        }
        iterations += 1;

        let rhs: Vec<f64> = dp.iter().zip(&pvpq).map(|(d, &i)| d / vm[i]).collect();
        let dtheta = bp_inv.mul_vec(&rhs).expect("B′ sized to the angle unknowns");
        for (d, &i) in dtheta.iter().zip(&pvpq) {
            va[i] += d;
        }

        let (_, dq, worst) = mismatch(&vm, &va);
        let Some(bpp_inv) = bpp_inv.as_ref().filter(|_| worst > tol) else {
            continue;
        };
        let rhs: Vec<f64> = dq.iter().zip(&pq).map(|(d, &i)| d / vm[i]).collect();
        let dv = bpp_inv.mul_vec(&rhs).expect("B″ sized to the magnitude unknowns");
        for (d, &i) in dv.iter().zip(&pq) {
            vm[i] += d;
        }
        if vm.iter().any(|&v| !(v > 0.0)) {
            return Err(PowerFlowError::NoConvergence {
                iterations,
                mismatch: worst,
            });
        }
    }
}
