//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use qvctl_core::cases::{BundledCase, Scenario};
use qvctl_core::controller::{
    build_n_matrix, build_weight_matrix, compare_ovc_svc, find_critical_buses, ovc_run, ovc_step,
    ControlConfig, ControlTrace, EvaluationMode, Outcome,
};
use qvctl_core::netmodel::Network;
use qvctl_core::numerics::{lu_solve, svd, top_singular_pair, DenseMatrix};
use qvctl_core::powerflow::{
    max_constrained_mismatch, solve_fdlf, solve_newton, DEFAULT_TOLERANCE, FDLF_MAX_ITER, NEWTON_MAX_ITER,
};
use qvctl_core::sensitivity::build_model;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_matrix, random_unit, setpoint_fd_error};

type Verdict = Result<String, String>;
type Criterion = fn() -> Verdict;

/// Collects sub-check failures so a criterion reports all of them.
struct Checks {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            notes: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn finish(self) -> Verdict {
        if self.failures.is_empty() {
            Ok(self.notes.join("; "))
        } else {
            Err(format!(
                "{} | passed: {}",
                self.failures.join("; "),
                self.notes.join("; ")
            ))
        }
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn all_within_band(trace: &ControlTrace) -> bool {
    let cfg = &trace.config;
    trace
        .final_solution
        .vm
        .iter()
        .all(|&v| v >= cfg.v_min - 1e-12 && v <= cfg.v_max + 1e-12)
}

fn criterion_1() -> Verdict {
    let mut c = Checks::new();
    for case in BundledCase::ALL {
        let net = case.network();
        let nr = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).map_err(|e| e.to_string())?;
        let fd = solve_fdlf(&net, DEFAULT_TOLERANCE, FDLF_MAX_ITER).map_err(|e| e.to_string())?;
        let dvm = nr
            .vm
            .iter()
            .zip(&fd.vm)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let mis = max_constrained_mismatch(&net, &nr.vm, &nr.va)
            .max(max_constrained_mismatch(&net, &fd.vm, &fd.va));
        c.check(dvm <= 1e-6, format!("{} |Δvm| {dvm:.1e}", case.name()));
        c.check(mis <= 1e-8, format!("{} mismatch {mis:.1e}", case.name()));
    }
    c.finish()
}

fn criterion_2() -> Verdict {
    let mut c = Checks::new();
    let net = Scenario::ieee9().network();
    let t = ovc_run(&net, &ControlConfig::default()).map_err(|e| e.to_string())?;
    let pre = t.initial_vm(9).unwrap();
    let post = t.final_vm(9).unwrap();
    c.check(within(pre, 0.885, 0.010), format!("pre vm9 {pre:.4}"));
    c.check(
        t.outcome == Outcome::Resolved && t.iterations.len() == 1,
        format!("{} in {} iteration(s)", t.outcome.as_str(), t.iterations.len()),
    );
    c.check(within(post, 0.993, 0.010), format!("post vm9 {post:.4}"));
    c.check(all_within_band(&t), "all voltages in band".into());
    let slack = t.final_setpoints[0];
    c.check(within(slack, 1.100, 0.005), format!("slack set-point {slack:.4}"));
    c.finish()
}

fn criterion_3() -> Verdict {
    let mut c = Checks::new();
    let net = Scenario::ieee14().network();
    let t = ovc_run(&net, &ControlConfig::default()).map_err(|e| e.to_string())?;
    let pre = t.initial_vm(10).unwrap();
    c.check(within(pre, 1.112, 0.010), format!("pre vm10 {pre:.4}"));
    c.check(
        t.outcome == Outcome::Resolved && t.iterations.len() == 2,
        format!("{} in {} iteration(s)", t.outcome.as_str(), t.iterations.len()),
    );
    if let Some(first) = t.iterations.first() {
        let k = t.bus_position(12).unwrap();
        let v12 = first.vm_after[k];
        c.check(
            v12 < 0.9 && within(v12, 0.899, 0.010),
            format!("vm12 after iteration 1 {v12:.4}"),
        );
    }
    match t.iterations.get(1) {
        Some(second) => {
            let cb = second.step.controlled_bus;
            c.check(cb == 12, format!("iteration 2 controls bus {cb} (want 12)"));
        }
        None => c.check(false, "no second iteration".into()),
    }
    c.finish()
}

fn criterion_4() -> Verdict {
    let mut c = Checks::new();
    let net = Scenario::ieee30().network();
    let t = ovc_run(&net, &ControlConfig::default()).map_err(|e| e.to_string())?;
    let (v8, v25) = (t.initial_vm(8).unwrap(), t.initial_vm(25).unwrap());
    c.check(within(v8, 0.878, 0.010), format!("pre vm8 {v8:.4}"));
    c.check(within(v25, 1.116, 0.010), format!("pre vm25 {v25:.4}"));
    let first = t.iterations.first().map(|r| r.step.controlled_bus);
    c.check(first == Some(25), format!("first controlled bus {first:?}"));
    c.check(
        t.outcome == Outcome::Resolved && t.iterations.len() == 2,
        format!("{} in {} iteration(s)", t.outcome.as_str(), t.iterations.len()),
    );
    let f8 = t.final_vm(8).unwrap();
    c.check(within(f8, 0.941, 0.015), format!("final vm8 {f8:.4}"));
    c.finish()
}

fn criterion_5() -> Verdict {
    let mut c = Checks::new();
    let cases = [
        (Scenario::ieee9(), 0.0117),
        (Scenario::ieee14(), 0.0119),
        (Scenario::ieee30(), 0.0052),
    ];
    for (s, reference) in cases {
        let cmp = compare_ovc_svc(&s.network(), &ControlConfig::default()).map_err(|e| e.to_string())?;
        c.check(
            cmp.j_ovc > cmp.j_svc,
            format!("{} J_OVC {:.5} > J_SVC {:.5}", s.name, cmp.j_ovc, cmp.j_svc),
        );
        c.check(
            (cmp.j_ovc - reference).abs() <= 0.25 * reference,
            format!("{} J_OVC within 25% of {reference}", s.name),
        );
    }
    c.finish()
}

fn criterion_6() -> Verdict {
    let mut c = Checks::new();
    let s = Scenario::ieee14_conflict();
    let cfg = ControlConfig::default();
    let t = ovc_run(&s.network(), &cfg).map_err(|e| format!("run failed: {e}"))?;
    let mut low = false;
    let mut high = false;
    for rec in &t.iterations {
        for &(_, v) in &rec.critical_buses {
            low |= v < cfg.v_min;
            high |= v > cfg.v_max;
        }
    }
    c.check(
        low && high,
        format!("under- and over-voltage both seen ({low}, {high})"),
    );
    c.check(
        matches!(t.outcome, Outcome::Resolved | Outcome::Oscillating) && t.iterations.len() <= 20,
        format!("{} after {} iteration(s)", t.outcome.as_str(), t.iterations.len()),
    );
    if t.outcome == Outcome::Resolved {
        c.check(all_within_band(&t), "resolved state in band".into());
    }
    c.finish()
}

fn criterion_7() -> Verdict {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in BundledCase::ALL {
        let net = case.network();
        let model = build_model(&net).map_err(|e| e.to_string())?;
        let dirs: Vec<Vec<f64>> = (0..20)
            .map(|_| random_unit(&mut rng, model.control_idx.len()))
            .collect();
        let coarse = setpoint_fd_error(&net, &model, 1e-3, &dirs);
        let fine = setpoint_fd_error(&net, &model, 1e-4, &dirs);
        c.check(
            coarse <= 0.15,
            format!("{} err@1e-3 {:.4}%", case.name(), 100.0 * coarse),
        );
        c.check(
            fine < coarse,
            format!("{} err@1e-4 {:.4}%", case.name(), 100.0 * fine),
        );
    }
    c.finish()
}

fn scenarios() -> Vec<(&'static str, Network)> {
    Scenario::all()
        .into_iter()
        .map(|s| (s.name, s.network()))
        .collect()
}

fn criterion_8() -> Verdict {
    let mut c = Checks::new();
    let linear = ControlConfig {
        evaluation_mode: EvaluationMode::Linear,
        clamp_pv: false,
        ..ControlConfig::default()
    };
    let mut worst_land: f64 = 0.0;
    let mut worst_chain: f64 = 0.0;
    for (_, net) in scenarios() {
        let model = build_model(&net).map_err(|e| e.to_string())?;
        let sol = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).map_err(|e| e.to_string())?;
        for (cb, v) in find_critical_buses(&sol, &linear, &model.partition).map_err(|e| e.to_string())? {
            let step = ovc_step(&model, &sol, cb, &linear).map_err(|e| e.to_string())?;
            let pos = model.load_position(cb).unwrap();
            let landed = v + model.predict_dvpq(&step.dv_pv).unwrap()[pos];
            worst_land = worst_land.max((landed - linear.v_ref).abs());
        }
        for cfg in [linear, ControlConfig::default()] {
            let t = ovc_run(&net, &cfg).map_err(|e| e.to_string())?;
            for r in &t.iterations {
                let s = &r.step;
                worst_chain =
                    worst_chain.max((s.alpha.powi(2) * s.sigma1.powi(2) - s.dv_cb_target.powi(2)).abs());
            }
        }
    }
    c.check(worst_land <= 1e-12, format!("|vm(CB) − v_ref| {worst_land:.1e}"));
    c.check(worst_chain <= 1e-12, format!("|α²σ₁² − ΔV²| {worst_chain:.1e}"));
    c.finish()
}

fn criterion_9() -> Verdict {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = ControlConfig::default();
    let mut worst_sigma: f64 = 0.0;
    let mut worst_margin = f64::INFINITY;
    for (_, net) in scenarios() {
        let model = build_model(&net).map_err(|e| e.to_string())?;
        for id in model.load_ids() {
            let m = build_weight_matrix(id, &model.partition).map_err(|e| e.to_string())?;
            let n = build_n_matrix(&model, &m).map_err(|e| e.to_string())?;
            let (s2, _) = top_singular_pair(&n).map_err(|e| e.to_string())?;
            let row = model.a_row(id).unwrap();
            let direct: f64 = row.iter().map(|a| a * a).sum();
            worst_sigma = worst_sigma.max((s2 - direct).abs());
        }

        let sol = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).map_err(|e| e.to_string())?;
        let crit = find_critical_buses(&sol, &cfg, &model.partition).map_err(|e| e.to_string())?;
        for (cb, _) in crit {
            let step = ovc_step(&model, &sol, cb, &cfg).map_err(|e| e.to_string())?;
            let w = model.a_row(cb).unwrap();
            let ovc_norm = step.dv_pv_requested.iter().map(|x| x * x).sum::<f64>().sqrt();
            for _ in 0..10_000 {
                let d = random_unit(&mut rng, w.len());
                let gain: f64 = w.iter().zip(&d).map(|(a, b)| a * b).sum();
                if gain.abs() < 1e-12 {
                    continue;
                }
                // scale so the predicted change at the controlled bus hits the target
                let norm = (step.dv_cb_target / gain).abs();
                worst_margin = worst_margin.min(norm - ovc_norm);
            }
        }
    }
    c.check(worst_sigma <= 1e-9, format!("|σ₁² − ‖row‖²| {worst_sigma:.1e}"));
    c.check(
        worst_margin >= -1e-9,
        format!("sampled norm − OVC norm ≥ {worst_margin:.2e}"),
    );
    c.finish()
}

fn criterion_10() -> Verdict {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut recon, mut orth, mut order_ok) = (0.0_f64, 0.0_f64, true);
    for _ in 0..500 {
        let (m, n) = (rng.gen_range(1..=30), rng.gen_range(1..=30));
        let a = random_matrix(&mut rng, m, n);
        let r = svd(&a).map_err(|e| e.to_string())?;
        let err =
            r.reconstruct().sub(&a).unwrap().norm_frobenius() / a.norm_frobenius().max(f64::MIN_POSITIVE);
        recon = recon.max(err);
        for q in [&r.u, &r.vt] {
            let qtq = &q.transpose() * q;
            orth = orth.max(qtq.sub(&DenseMatrix::identity(q.cols())).unwrap().max_abs());
        }
        order_ok &= r.sigma.windows(2).all(|w| w[0] >= w[1]) && r.sigma.iter().all(|&s| s >= 0.0);
    }
    c.check(recon <= 1e-8, format!("SVD reconstruction {recon:.1e}"));
    c.check(orth <= 1e-10, format!("SVD orthogonality {orth:.1e}"));
    c.check(order_ok, "singular values sorted and non-negative".into());

    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=30);
        let k = rng.gen_range(1..=3);
        let a = random_matrix(&mut rng, n, n);
        let b = random_matrix(&mut rng, n, k);
        let Ok(x) = lu_solve(&a, &b) else { continue };
        let res = a.matmul(&x).unwrap().sub(&b).unwrap().norm_inf();
        let bound = 1e-9 * (a.norm_inf() * x.norm_inf() + b.norm_inf());
        if res > bound {
            violations += 1;
        }
    }
    c.check(
        violations == 0,
        format!("lu_solve residual bound violations {violations}/1000"),
    );
    c.finish()
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("power-flow fidelity", criterion_1),
        ("9-bus reproduction", criterion_2),
        ("14-bus reproduction", criterion_3),
        ("30-bus reproduction", criterion_4),
        ("OVC vs SVC performance index", criterion_5),
        ("conflicting disturbances", criterion_6),
        ("sensitivity finite differences", criterion_7),
        ("linear-model exactness", criterion_8),
        ("rank-1 oracle and direction optimality", criterion_9),
        ("numerics suite", criterion_10),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS  criterion {:>2}  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {:>2}  {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
