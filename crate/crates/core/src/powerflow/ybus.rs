use num_complex::Complex64;

use super::PowerFlowError;
use crate::netmodel::{Network, NetworkError, Violation};
use crate::numerics::DenseMatrix;

/// Bus admittance matrix split into conductance and susceptance, indexed
/// like `Network::buses`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    pub n: usize,
    pub g: DenseMatrix,
    pub b: DenseMatrix,
}

/// π-model stamps of one branch: `(y_ff, y_ft, y_tf, y_tt)`.
pub(crate) fn branch_stamps(r: f64, x: f64, b_charging: f64, tap: f64, shift_deg: f64) -> [Complex64; 4] {
    let ys = Complex64::new(1.0, 0.0) / Complex64::new(r, x);
    let half = Complex64::new(0.0, b_charging / 2.0);
    let t = Complex64::from_polar(tap, shift_deg.to_radians());
    let ytt = ys + half;
    [ytt / (tap * tap), -ys / t.conj(), -ys / t, ytt]
}

pub fn build_ybus(net: &Network) -> Result<AdmittanceMatrix, PowerFlowError> {
    let n = net.buses.len();
    let mut g = DenseMatrix::zeros(n, n);
    let mut b = DenseMatrix::zeros(n, n);
    for (k, br) in net.branches.iter().enumerate() {
        if !br.in_service {
            continue;
        }
        if br.r == 0.0 && br.x == 0.0 {
            return Err(NetworkError::Invalid(vec![Violation::ZeroImpedance { branch: k }]).into());
        }
        let f = net
            .index_of(br.from_bus)
            .ok_or(NetworkError::UnknownBus(br.from_bus))?;
        let t = net
            .index_of(br.to_bus)
            .ok_or(NetworkError::UnknownBus(br.to_bus))?;
        let [yff, yft, ytf, ytt] = branch_stamps(br.r, br.x, br.b_charging, br.tap, br.shift);
        for (i, j, y) in [(f, f, yff), (f, t, yft), (t, f, ytf), (t, t, ytt)] {
            g[(i, j)] += y.re;
            b[(i, j)] += y.im;
        }
    }
    for (i, bus) in net.buses.iter().enumerate() {
        g[(i, i)] += bus.g_shunt / net.base_mva;
        b[(i, i)] += bus.b_shunt / net.base_mva;
    }
    Ok(AdmittanceMatrix { n, g, b })
}

/// `−Im(Ybus)` of the network with series resistance and phase shift
/// dropped; line charging, bus shunts and taps are kept. This is the
/// reactive-iteration matrix of the decoupled solver and the matrix whose
/// inverse gives the Q–V sensitivities.
pub fn build_bpp_full(net: &Network) -> Result<DenseMatrix, PowerFlowError> {
    let mut reactive = net.clone();
    for br in &mut reactive.branches {
        br.r = 0.0;
        br.shift = 0.0;
    }
    Ok(build_ybus(&reactive)?.b.scale(-1.0))
}
