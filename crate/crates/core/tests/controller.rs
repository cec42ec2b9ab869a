use proptest::prelude::*;
use qvctl_core::cases::{BundledCase, Scenario};
use qvctl_core::controller::{
    build_n_matrix, build_weight_matrix, ovc_run, ovc_step, svc_step, ControlConfig, Outcome,
};
use qvctl_core::netmodel::{apply_disturbance, BusKind, Network};
use qvctl_core::numerics::top_singular_pair;
use qvctl_core::powerflow::{solve_newton, DEFAULT_TOLERANCE, NEWTON_MAX_ITER};
use qvctl_core::sensitivity::build_model;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn load_buses(net: &Network) -> Vec<usize> {
    net.buses
        .iter()
        .filter(|b| b.kind == BusKind::Pq)
        .map(|b| b.id)
        .collect()
}

fn case_strategy() -> impl Strategy<Value = BundledCase> {
    prop::sample::select(BundledCase::ALL.to_vec())
}

#[test]
fn top_direction_is_the_normalized_row() {
    for case in BundledCase::ALL {
        let model = build_model(&case.network()).unwrap();
        for id in model.load_ids() {
            let m = build_weight_matrix(id, &model.partition).unwrap();
            let (s2, u1) = top_singular_pair(&build_n_matrix(&model, &m).unwrap()).unwrap();
            let row = model.a_row(id).unwrap();
            let r = norm(row);
            assert!((s2 - r * r).abs() < 1e-9);
            let d: f64 = row.iter().zip(&u1).map(|(a, u)| a * u).sum::<f64>() / r;
            assert!((d.abs() - 1.0).abs() < 1e-9, "{} bus {id}", case.name());
        }
    }
}

#[test]
fn ovc_never_needs_a_larger_move_than_svc() {
    let cfg = ControlConfig {
        clamp_pv: false,
        ..ControlConfig::default()
    };
    for s in Scenario::all() {
        let net = s.network();
        let model = build_model(&net).unwrap();
        let sol = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).unwrap();
        for id in model.load_ids() {
            let ovc = ovc_step(&model, &sol, id, &cfg).unwrap();
            let svc = svc_step(&model, &sol, id, &cfg).unwrap();
            assert!(
                norm(&ovc.dv_pv_requested) <= norm(&svc.dv_pv_requested) + 1e-12,
                "{} bus {id}",
                s.name
            );
        }
    }
}

#[test]
fn oscillation_or_resolution_on_conflict() {
    let trace = ovc_run(&Scenario::ieee14_conflict().network(), &ControlConfig::default()).unwrap();
    assert!(matches!(trace.outcome, Outcome::Resolved | Outcome::Oscillating));
    assert!(trace.iterations.len() <= 20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn step_scales_linearly_with_target(case in case_strategy(), pick in any::<prop::sample::Index>(), v_ref in 0.95f64..1.05) {
        let net = case.network();
        let model = build_model(&net).unwrap();
        let sol = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER).unwrap();
        let ids = model.load_ids();
        let id = ids[pick.index(ids.len())];
        let cfg = ControlConfig { v_ref, clamp_pv: false, ..ControlConfig::default() };
        let step = ovc_step(&model, &sol, id, &cfg).unwrap();
        let row = model.a_row(id).unwrap();
        let predicted: f64 = row.iter().zip(&step.dv_pv).map(|(a, d)| a * d).sum();
        prop_assert!((predicted - step.dv_cb_target).abs() < 1e-12);
        // direction is independent of the target: dv = target · row / ‖row‖²
        let r2: f64 = row.iter().map(|a| a * a).sum();
        for (d, a) in step.dv_pv.iter().zip(row) {
            prop_assert!((d - step.dv_cb_target * a / r2).abs() < 1e-12);
        }
    }

    #[test]
    fn clamped_setpoints_stay_in_band(case in case_strategy(), pick in any::<prop::sample::Index>(), dq in -60.0f64..60.0, flat in 0.9f64..1.1) {
        let base = qvctl_core::netmodel::set_flat_setpoints(&case.network(), flat).unwrap();
        let loads = load_buses(&base);
        let bus = loads[pick.index(loads.len())];
        let net = apply_disturbance(&base, bus, dq).unwrap();
        let model = build_model(&net).unwrap();
        let Ok(sol) = solve_newton(&net, DEFAULT_TOLERANCE, NEWTON_MAX_ITER) else { return Ok(()) };
        let cfg = ControlConfig::default();
        let step = ovc_step(&model, &sol, bus, &cfg).unwrap();
        for v in &step.setpoints_after {
            prop_assert!(*v >= cfg.v_min - 1e-15 && *v <= cfg.v_max + 1e-15);
        }
    }

    #[test]
    fn runs_terminate_within_the_cap(case in case_strategy(), pick in any::<prop::sample::Index>(), dq in -80.0f64..80.0) {
        let base = case.network();
        let loads = load_buses(&base);
        let bus = loads[pick.index(loads.len())];
        let net = apply_disturbance(&base, bus, dq).unwrap();
        let cfg = ControlConfig { max_iterations: 8, ..ControlConfig::default() };
        if let Ok(trace) = ovc_run(&net, &cfg) {
            prop_assert!(trace.iterations.len() <= cfg.max_iterations);
            if trace.outcome == Outcome::Resolved {
                prop_assert!(trace.final_solution.vm.iter().all(|&v| v >= cfg.v_min && v <= cfg.v_max));
            }
            prop_assert!(trace.final_setpoints.iter().all(|&v| v >= cfg.v_min - 1e-12 && v <= cfg.v_max + 1e-12)
                || trace.iterations.is_empty());
        }
    }
}
