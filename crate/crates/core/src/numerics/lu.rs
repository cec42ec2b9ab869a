use super::{DenseMatrix, NumericsError, PIVOT_TOL};

/// In-place LU factorization with partial pivoting, `P·A = L·U`.
struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    fn factor(a: &DenseMatrix) -> Result<Self, NumericsError> {
        if !a.is_square() {
            return Err(NumericsError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let threshold = PIVOT_TOL * a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= threshold {
                return Err(NumericsError::Singular {
                    column: k,
                    pivot,
                    threshold,
                });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / d;
                lu[(i, k)] = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    lu[(i, j)] -= factor * lu[(k, j)];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(NumericsError::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let k = b.cols();
        let mut x = DenseMatrix::from_fn(n, k, |i, j| b[(self.perm[i], j)]);
        for c in 0..k {
            for i in 0..n {
                let mut s = x[(i, c)];
                for j in 0..i {
                    s -= self.lu[(i, j)] * x[(j, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for j in i + 1..n {
                    s -= self.lu[(i, j)] * x[(j, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

/// Solves `a·x = b` for every column of `b`.
pub fn lu_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    LuFactors::factor(a)?.solve(b)
}

pub fn invert(a: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    let f = LuFactors::factor(a)?;
    f.solve(&DenseMatrix::identity(a.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DenseMatrix, b: &DenseMatrix, tol: f64) -> bool {
        a.sub(b).unwrap().max_abs() <= tol
    }

    #[test]
    fn identity_system_returns_rhs() {
        let b = DenseMatrix::from_rows(&[[1.5, -2.0], [0.25, 7.0], [3.0, 0.0]]);
        let x = lu_solve(&DenseMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn two_by_two_matches_cofactor_solution() {
        // det = 15·9 − 25 = 110
        let a = DenseMatrix::from_rows(&[[15.0, -5.0], [-5.0, 9.0]]);
        let x = lu_solve(&a, &DenseMatrix::column(&[1.0, 0.0])).unwrap();
        let expected = DenseMatrix::column(&[9.0 / 110.0, 5.0 / 110.0]);
        assert!(close(&x, &expected, 1e-15));
    }

    #[test]
    fn rank_one_matrix_is_singular() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let err = lu_solve(&a, &DenseMatrix::column(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, NumericsError::Singular { column: 1, .. }));
        assert!(invert(&DenseMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn non_square_rejected() {
        let a = DenseMatrix::zeros(2, 3);
        assert_eq!(
            invert(&a).unwrap_err(),
            NumericsError::NotSquare { rows: 2, cols: 3 }
        );
    }

    #[test]
    fn inverse_examples() {
        let a = DenseMatrix::from_rows(&[[15.0, -5.0], [-5.0, 9.0]]);
        let expected = DenseMatrix::from_rows(&[[9.0, 5.0], [5.0, 15.0]]).scale(1.0 / 110.0);
        assert!(close(&invert(&a).unwrap(), &expected, 1e-15));

        assert_eq!(
            invert(&DenseMatrix::identity(4)).unwrap(),
            DenseMatrix::identity(4)
        );

        let d = invert(&DenseMatrix::from_diagonal(&[2.0, 4.0])).unwrap();
        assert_eq!(d, DenseMatrix::from_diagonal(&[0.5, 0.25]));
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        let x = lu_solve(&a, &DenseMatrix::column(&[3.0, 4.0])).unwrap();
        assert_eq!(x, DenseMatrix::column(&[4.0, 3.0]));
    }
}
