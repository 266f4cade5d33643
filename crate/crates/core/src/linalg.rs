//! Small dense linear-algebra helpers for symmetric positive-definite systems.
//!
//! The regression paths only ever solve SPD systems (Gram matrices plus a
//! ridge term, kernel matrices plus a noise term), so a Cholesky
//! factorization covers everything. Deterministic, single-threaded.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    /// Factor `a = L Lᵀ`. Fails with the offending column if a pivot is not
    /// strictly positive (matrix not positive definite / rank deficient).
    pub fn new(a: ArrayView2<'_, f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "cholesky needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut diag = a[[j, j]];
            for k in 0..j {
                diag -= l[[j, k]] * l[[j, k]];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite { column: j });
            }
            let djj = diag.sqrt();
            l[[j, j]] = djj;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / djj;
            }
        }
        Ok(Self { l })
    }

    /// Trace of `A⁻¹`, via one solve per unit vector.
    pub fn inverse_trace(&self) -> f64 {
        let n = self.l.nrows();
        let mut trace = 0.0;
        let mut e = Array1::<f64>::zeros(n);
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            trace += self.solve(&e)[j];
        }
        trace
    }

    /// Solve `A x = b` given the factorization.
    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.l.nrows();
        assert_eq!(b.len(), n, "rhs length must match factor dimension");
        // forward: L y = b
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[[i, k]] * y[k];
            }
            y[i] = s / self.l[[i, i]];
        }
        // backward: Lᵀ x = y
        let mut x = y;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[[k, i]] * x[k];
            }
            x[i] = s / self.l[[i, i]];
        }
        x
    }
}

/// Solve the SPD system `A x = b` directly.
pub fn solve_spd(a: ArrayView2<'_, f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    Ok(Cholesky::new(a)?.solve(b))
}

/// Symmetrize in place: `a ← (a + aᵀ)/2`. Gram products accumulate tiny
/// asymmetries that would otherwise leak into the factorization.
pub fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
}
