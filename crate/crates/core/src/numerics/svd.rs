//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! The columns of `A` are rotated pairwise until they are mutually
//! orthogonal; the accumulated rotations form `V`, the column norms are the
//! singular values and the normalized columns are the left singular vectors.
//! For wide matrices the transpose is decomposed instead.

use super::matrix::{dot, norm2};
use super::{DenseMatrix, NumericsError, PSD_TOL, SVD_MAX_SWEEPS, SVD_OFFDIAG_TOL, SYMMETRY_TOL};

/// `A = U·diag(sigma)·Vᵀ` with `U` m×m, `Vᵀ` n×n and `sigma` of length
/// `min(m, n)`, sorted descending.
///
/// Sign convention: the largest-magnitude entry of every left singular
/// vector is non-negative (first such entry on ties).
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub vt: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = (self.u.rows(), self.vt.rows());
        DenseMatrix::from_fn(m, n, |i, j| {
            self.sigma
                .iter()
                .enumerate()
                .map(|(k, s)| self.u[(i, k)] * s * self.vt[(k, j)])
                .sum()
        })
    }

    /// Left singular vector `k`.
    pub fn left(&self, k: usize) -> Vec<f64> {
        self.u.col(k)
    }

    /// Right singular vector `k`.
    pub fn right(&self, k: usize) -> Vec<f64> {
        self.vt.row(k).to_vec()
    }
}

pub fn svd(a: &DenseMatrix) -> Result<SvdResult, NumericsError> {
    let mut result = if a.rows() >= a.cols() {
        svd_tall(a)?
    } else {
        let t = svd_tall(&a.transpose())?;
        SvdResult {
            u: t.vt.transpose(),
            sigma: t.sigma,
            vt: t.u.transpose(),
        }
    };
    normalize_signs(&mut result);
    Ok(result)
}

fn svd_tall(a: &DenseMatrix) -> Result<SvdResult, NumericsError> {
    let (m, n) = (a.rows(), a.cols());
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    // Columns at roundoff level carry no direction worth orthogonalizing.
    let null_floor = f64::EPSILON * a.norm_frobenius();

    let mut converged = n < 2;
    let mut off = 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < SVD_MAX_SWEEPS {
        sweeps += 1;
        off = 0.0_f64;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                if alpha.sqrt() <= null_floor || beta.sqrt() <= null_floor {
                    continue;
                }
                let gamma = dot(&w[i], &w[j]);
                let ratio = gamma.abs() / (alpha * beta).sqrt();
                off = off.max(ratio);
                if ratio <= SVD_OFFDIAG_TOL {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        converged = off <= SVD_OFFDIAG_TOL;
    }
    if !converged {
        return Err(NumericsError::NoConvergence {
            sweeps,
            off_diagonal: off,
        });
    }

    let norms: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| norms[q].total_cmp(&norms[p]));
    let sigma: Vec<f64> = order.iter().map(|&k| norms[k]).collect();

    let rank_floor = m.max(n) as f64 * f64::EPSILON * sigma[0];
    let mut u_cols: Vec<Option<Vec<f64>>> = order
        .iter()
        .zip(&sigma)
        .map(|(&k, &s)| {
            if s > rank_floor && s > 0.0 {
                Some(w[k].iter().map(|x| x / s).collect())
            } else {
                None
            }
        })
        .collect();
    u_cols.resize(m, None);
    let u_cols = complete_basis(m, u_cols);

    let u = DenseMatrix::from_fn(m, m, |i, j| u_cols[j][i]);
    let vt = DenseMatrix::from_fn(n, n, |i, j| v[order[i]][j]);
    Ok(SvdResult { u, sigma, vt })
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(j);
    let (ci, cj) = (&mut head[i], &mut tail[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the missing columns with unit vectors orthogonal to everything
/// already present. Each new vector is the standard basis vector with the
/// largest residual after projection (Gram–Schmidt applied twice), so the
/// residual never drops below `1/sqrt(m)`.
fn complete_basis(m: usize, cols: Vec<Option<Vec<f64>>>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = cols.iter().flatten().cloned().collect();
    let mut out = Vec::with_capacity(m);
    for col in cols {
        match col {
            Some(c) => out.push(c),
            None => {
                let (e, nrm) = (0..m)
                    .map(|k| {
                        let mut e: Vec<f64> = (0..m).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
                        for _ in 0..2 {
                            for b in &basis {
                                let p = dot(&e, b);
                                e.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                            }
                        }
                        let nrm = norm2(&e);
                        (e, nrm)
                    })
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("m > 0 when a column is missing");
                let e: Vec<f64> = e.into_iter().map(|x| x / nrm).collect();
                basis.push(e.clone());
                out.push(e);
            }
        }
    }
    out
}

fn normalize_signs(r: &mut SvdResult) {
    let m = r.u.rows();
    let paired = r.sigma.len();
    for k in 0..m {
        let col = r.u.col(k);
        let lead = col
            .iter()
            .copied()
            .fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if lead < 0.0 {
            for i in 0..m {
                r.u[(i, k)] = -r.u[(i, k)];
            }
            if k < paired {
                for j in 0..r.vt.cols() {
                    r.vt[(k, j)] = -r.vt[(k, j)];
                }
            }
        }
    }
}

/// Largest singular value of a symmetric positive semidefinite matrix and
/// its left singular vector (unit norm, same sign convention as [`svd`]).
pub fn top_singular_pair(a: &DenseMatrix) -> Result<(f64, Vec<f64>), NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let scale = a.max_abs().max(1.0);
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(NumericsError::NotSymmetric(asym));
    }
    let r = svd(a)?;
    // For a symmetric matrix uₖ = ±vₖ, the sign being that of the eigenvalue.
    for k in 0..r.sigma.len() {
        if dot(&r.left(k), &r.right(k)) < 0.0 && r.sigma[k] > PSD_TOL * scale {
            return Err(NumericsError::NotPsd(-r.sigma[k]));
        }
    }
    Ok((r.sigma[0], r.left(0)))
}
