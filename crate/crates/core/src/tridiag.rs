//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored.
///
/// ```
/// use hygrosim::tridiag::solve_tridiagonal;
/// let x = solve_tridiagonal(&[0.0, -1.0, -1.0], &[2.0, 2.0, 2.0], &[-1.0, -1.0, 0.0], &[1.0, 0.0, 1.0]).unwrap();
/// assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-14));
/// ```
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let f = Factorized::new(lower, diag, upper)?;
    let mut x = vec![0.0; rhs.len()];
    f.solve_into(rhs, &mut x);
    Ok(x)
}

/// Forward-eliminated tridiagonal matrix, reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct Factorized {
    /// `lower[i] / pivot[i]`
    a: Vec<f64>,
    c_prime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Factorized {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(Error::Argument(format!(
                "tridiagonal bands must have equal, non-zero length (got {}, {}, {})",
                lower.len(),
                n,
                upper.len()
            )));
        }
        let mut c_prime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * c_prime[i - 1]
            };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Argument(format!(
                    "singular tridiagonal system (zero pivot at row {i})"
                )));
            }
            inv_pivot[i] = 1.0 / pivot;
            c_prime[i] = upper[i] * inv_pivot[i];
        }
        let a = lower.iter().zip(&inv_pivot).map(|(l, p)| l * p).collect();
        Ok(Factorized {
            a,
            c_prime,
            inv_pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve_into(&self, rhs: &[f64], x: &mut [f64]) {
        let n = self.len();
        assert!(
            rhs.len() == n && x.len() == n,
            "right-hand side and solution must match the matrix size"
        );
        let (a, inv, c) = (&self.a[..n], &self.inv_pivot[..n], &self.c_prime[..n]);
        let mut prev = rhs[0] * inv[0];
        x[0] = prev;
        for i in 1..n {
            prev = rhs[i] * inv[i] - a[i] * prev;
            x[i] = prev;
        }
        for i in (0..n - 1).rev() {
            prev = x[i] - c[i] * prev;
            x[i] = prev;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multiply(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn recovers_known_solution() {
        let n = 50;
        let lower: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.5 + 0.002 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + (i as f64).sin()).collect();
        let x: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let rhs = multiply(&lower, &diag, &upper, &x);
        let got = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in got.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_is_reported() {
        assert!(solve_tridiagonal(&[0.0, 1.0], &[1.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(solve_tridiagonal(&[0.0], &[1.0, 2.0], &[0.0], &[1.0]).is_err());
    }
}
