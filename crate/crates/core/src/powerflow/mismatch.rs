//! Residual audit computed branch by branch, independent of the assembled
//! admittance matrix.

use num_complex::Complex64;

use super::{scheduled_injections, ybus::branch_stamps};
use crate::netmodel::{BusKind, Network};

fn voltages(vm: &[f64], va: &[f64]) -> Vec<Complex64> {
    vm.iter()
        .zip(va)
        .map(|(&m, &a)| Complex64::from_polar(m, a))
        .collect()
}

/// Complex power leaving each bus into every branch and shunt.
fn injected(net: &Network, v: &[Complex64]) -> Vec<Complex64> {
    let mut s = vec![Complex64::new(0.0, 0.0); net.buses.len()];
    for br in net.branches.iter().filter(|b| b.in_service) {
        let (Some(f), Some(t)) = (net.index_of(br.from_bus), net.index_of(br.to_bus)) else {
            continue;
        };
        let [yff, yft, ytf, ytt] = branch_stamps(br.r, br.x, br.b_charging, br.tap, br.shift);
        let i_f = yff * v[f] + yft * v[t];
        let i_t = ytf * v[f] + ytt * v[t];
        s[f] += v[f] * i_f.conj();
        s[t] += v[t] * i_t.conj();
    }
    for (k, bus) in net.buses.iter().enumerate() {
        let ysh = Complex64::new(bus.g_shunt, bus.b_shunt) / net.base_mva;
        s[k] += v[k] * (ysh * v[k]).conj();
    }
    s
}

/// Scheduled minus injected `(P, Q)` at every bus, pu. Slack P and slack/PV
/// Q are free quantities, so their entries equal the generation the
/// solution implies rather than a residual.
pub fn bus_mismatch(net: &Network, vm: &[f64], va: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(vm.len(), net.buses.len(), "vm length");
    assert_eq!(va.len(), net.buses.len(), "va length");
    let s = injected(net, &voltages(vm, va));
    let (p_sched, q_sched) = scheduled_injections(net);
    let dp = p_sched.iter().zip(&s).map(|(p, s)| p - s.re).collect();
    let dq = q_sched.iter().zip(&s).map(|(q, s)| q - s.im).collect();
    (dp, dq)
}

/// Largest residual over the constrained equations: P at non-slack buses,
/// Q at PQ buses.
pub fn max_constrained_mismatch(net: &Network, vm: &[f64], va: &[f64]) -> f64 {
    let (dp, dq) = bus_mismatch(net, vm, va);
    net.buses
        .iter()
        .enumerate()
        .flat_map(|(k, b)| {
            let p = (b.kind != BusKind::Slack).then_some(dp[k].abs());
            let q = (b.kind == BusKind::Pq).then_some(dq[k].abs());
            p.into_iter().chain(q)
        })
        .fold(0.0, f64::max)
}

/// Active and reactive losses per in-service branch plus shunt consumption.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchLosses {
    pub branch: Vec<Complex64>,
    pub shunt: Complex64,
}

impl BranchLosses {
    pub fn compute(net: &Network, vm: &[f64], va: &[f64]) -> Self {
        let v = voltages(vm, va);
        let mut branch = Vec::new();
        for br in net.branches.iter().filter(|b| b.in_service) {
            let (Some(f), Some(t)) = (net.index_of(br.from_bus), net.index_of(br.to_bus)) else {
                continue;
            };
            let [yff, yft, ytf, ytt] = branch_stamps(br.r, br.x, br.b_charging, br.tap, br.shift);
            let s_f = v[f] * (yff * v[f] + yft * v[t]).conj();
            let s_t = v[t] * (ytf * v[f] + ytt * v[t]).conj();
            branch.push(s_f + s_t);
        }
        let shunt = net
            .buses
            .iter()
            .zip(&v)
            .map(|(b, v)| Complex64::new(b.g_shunt, -b.b_shunt) / net.base_mva * v.norm_sqr())
            .sum();
        Self { branch, shunt }
    }

    pub fn total_p(&self) -> f64 {
        self.branch.iter().map(|s| s.re).sum::<f64>() + self.shunt.re
    }
}
