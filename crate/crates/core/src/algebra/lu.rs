use super::{AlgebraError, Scalar};

/// Dense LU factorization with partial pivoting, `P A = L U`, stored in place.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factors a row-major `n x n` matrix.
    pub fn factor(n: usize, mut a: Vec<T>) -> Result<Self, AlgebraError> {
        if a.len() != n * n {
            return Err(AlgebraError::DimensionMismatch {
                expected: n * n,
                got: a.len(),
            });
        }
        let scale = a.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let tol = T::singular_tol() * scale;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = T::infinity();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if scale == T::zero() || best <= tol || !best.is_finite() {
                let cond = if best == T::zero() || !best.is_finite() {
                    f64::INFINITY
                } else {
                    (scale / best).to_f64().unwrap_or(f64::INFINITY)
                };
                return Err(AlgebraError::SingularMatrix {
                    condition_estimate: cond,
                });
            }
            min_pivot = min_pivot.min(best);
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / piv;
                if f == T::zero() {
                    continue;
                }
                a[i * n + k] = f;
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] = a[i * n + j] - f * u;
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `A X = B` for a row-major `n x m` right-hand side.
    pub fn solve_matrix(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len() % n.max(1), 0, "rhs shape mismatch");
        let m = b.len().checked_div(n).unwrap_or(0);
        let mut out = vec![T::zero(); n * m];
        let mut col = vec![T::zero(); n];
        for c in 0..m {
            for r in 0..n {
                col[r] = b[r * m + c];
            }
            let x = self.solve(&col);
            for r in 0..n {
                out[r * m + c] = x[r];
            }
        }
        out
    }

    pub fn inverse(&self) -> Vec<T> {
        let n = self.n;
        let mut eye = vec![T::zero(); n * n];
        for k in 0..n {
            eye[k * n + k] = T::one();
        }
        self.solve_matrix(&eye)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_permuted_system() {
        let a = vec![0.0, 1.0, 1.0, 0.0];
        let lu = Lu::factor(2, a).unwrap();
        assert_eq!(lu.solve(&[2.0, 3.0]), vec![3.0, 2.0]);
    }

    #[test]
    fn solves_three_by_three() {
        let a = vec![2.0, 1.0, 1.0, 4.0, -6.0, 0.0, -2.0, 7.0, 2.0];
        let lu = Lu::factor(3, a.clone()).unwrap();
        let x = lu.solve(&[5.0, -2.0, 9.0]);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((r - [5.0, -2.0, 9.0][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_is_singular() {
        assert!(Lu::<f64>::factor(2, vec![0.0; 4]).is_err());
        assert!(Lu::<f64>::factor(2, vec![0.0; 3]).is_err());
    }
}
