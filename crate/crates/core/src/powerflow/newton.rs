use super::{
    build_ybus, flat_start, injections, scheduled_injections, AdmittanceMatrix, PowerFlowError,
    PowerFlowSolution,
};
use crate::netmodel::{partition_buses, Network};
use crate::numerics::{lu_solve, DenseMatrix};

/// Full Newton-Raphson in polar coordinates. Unknowns are the angles of all
/// non-slack buses and the magnitudes of PQ buses.
pub fn solve_newton(net: &Network, tol: f64, max_iter: usize) -> Result<PowerFlowSolution, PowerFlowError> {
    let part = partition_buses(net)?;
    let y = build_ybus(net)?;
    let (p_sched, q_sched) = scheduled_injections(net);
    let (mut vm, mut va) = flat_start(net);

    let pvpq: Vec<usize> = (0..net.buses.len()).filter(|&k| k != part.slack_idx).collect();
    let pq = part.pq_idx.clone();
    if pvpq.is_empty() {
        return Ok(PowerFlowSolution::trivial(vm, va));
    }
    let na = pvpq.len();

    let mut iterations = 0;
    loop {
        let (p, q) = injections(&y, &vm, &va);
        let mut f: Vec<f64> = pvpq.iter().map(|&i| p_sched[i] - p[i]).collect();
        f.extend(pq.iter().map(|&i| q_sched[i] - q[i]));
        let mismatch = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !mismatch.is_finite() {
            return Err(PowerFlowError::NoConvergence { iterations, mismatch });
        }
        if mismatch <= tol {
            return Ok(PowerFlowSolution {
                vm,
                va,
                converged: true,
                iterations,
                max_mismatch: mismatch,
            });
        }
        if iterations == max_iter {
            return Err(PowerFlowError::NoConvergence { iterations, mismatch });
        }
        iterations += 1;

        let jac = jacobian(&y, &vm, &va, &p, &q, &pvpq, &pq);
        let dx = lu_solve(&jac, &DenseMatrix::column(&f)).map_err(|_| PowerFlowError::SingularJacobian {
            iteration: iterations,
        })?;
        for (k, &i) in pvpq.iter().enumerate() {
            va[i] += dx[(k, 0)];
        }
        for (k, &i) in pq.iter().enumerate() {
            vm[i] += dx[(na + k, 0)];
        }
        if vm.iter().any(|&v| !(v > 0.0)) {
            return Err(PowerFlowError::NoConvergence { iterations, mismatch });
        }
    }
}

/// `[[∂P/∂θ, ∂P/∂V], [∂Q/∂θ, ∂Q/∂V]]` restricted to the unknowns.
fn jacobian(
    y: &AdmittanceMatrix,
    vm: &[f64],
    va: &[f64],
    p: &[f64],
    q: &[f64],
    pvpq: &[usize],
    pq: &[usize],
) -> DenseMatrix {
    let na = pvpq.len();
    let n = na + pq.len();
    let mut jac = DenseMatrix::zeros(n, n);

    // (dP/dθ, dP/dV, dQ/dθ, dQ/dV) of bus i with respect to bus k
    let partials = |i: usize, k: usize| -> [f64; 4] {
        let (g, b) = (y.g[(i, k)], y.b[(i, k)]);
        if i == k {
            [
                -q[i] - b * vm[i] * vm[i],
                p[i] / vm[i] + g * vm[i],
                p[i] - g * vm[i] * vm[i],
                q[i] / vm[i] - b * vm[i],
            ]
        } else {
            let (s, c) = (va[i] - va[k]).sin_cos();
            let gs_bc = g * s - b * c;
            let gc_bs = g * c + b * s;
            [
                vm[i] * vm[k] * gs_bc,
                vm[i] * gc_bs,
                -vm[i] * vm[k] * gc_bs,
                vm[i] * gs_bc,
            ]
        }
    };

    for (r, &i) in pvpq.iter().enumerate() {
        for (c, &k) in pvpq.iter().enumerate() {
            jac[(r, c)] = partials(i, k)[0];
        }
        for (c, &k) in pq.iter().enumerate() {
            jac[(r, na + c)] = partials(i, k)[1];
        }
    }
    for (r, &i) in pq.iter().enumerate() {
        for (c, &k) in pvpq.iter().enumerate() {
            jac[(na + r, c)] = partials(i, k)[2];
        }
        for (c, &k) in pq.iter().enumerate() {
            jac[(na + r, na + c)] = partials(i, k)[3];
        }
    }
    jac
}
