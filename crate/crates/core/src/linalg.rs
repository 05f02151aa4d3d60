//! Small dense symmetric eigensolver (cyclic Jacobi rotations).
//!
//! Matrices handled here are at most a few hundred rows (Gram matrices of
//! Explain matrices), so an O(n^3) per sweep method is adequate.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Result, XmError};

/// Off-diagonal Frobenius threshold, relative to the matrix norm.
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `A = V diag(values) V^T` of a symmetric matrix.
/// Eigenvalues are sorted in descending order; eigenvectors are the columns
/// of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl SymmetricEigen {
    /// `V diag(f(values)) V^T`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            scaled.column_mut(j).mapv_inplace(|x| x * fj);
        }
        scaled.dot(&self.vectors.t())
    }
}

pub fn max_asymmetry(a: ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

/// Eigen-decomposition of a square symmetric matrix.
///
/// The input is symmetrized as `(A + A^T) / 2` first; callers that need to
/// reject asymmetric input should check [`max_asymmetry`] themselves.
pub fn symmetric_eigen(a: ArrayView2<f64>) -> Result<SymmetricEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(XmError::Numerical(format!(
            "eigensolver needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(XmError::Numerical("matrix has non-finite entries".into()));
    }
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = 0.5 * (a[[i, j]] + a[[j, i]]);
        }
    }
    let mut v = Array2::<f64>::eye(n);
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();

    if scale > 0.0 {
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let off = off_diagonal_norm(&m);
            if off <= OFF_DIAGONAL_TOL * scale {
                // one polishing sweep after reaching the threshold
                if converged {
                    break;
                }
                converged = true;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
        if off_diagonal_norm(&m) > 1e3 * OFF_DIAGONAL_TOL * scale {
            return Err(XmError::Numerical("Jacobi eigensolver did not converge".into()));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]));
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok(SymmetricEigen { values, vectors })
}

fn off_diagonal_norm(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[[i, j]] * m[[i, j]];
            }
        }
    }
    s.sqrt()
}

fn rotate(m: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize) {
    let apq = m[[p, q]];
    if apq == 0.0 {
        return;
    }
    let app = m[[p, p]];
    let aqq = m[[q, q]];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = m.nrows();

    for k in 0..n {
        let mkp = m[[k, p]];
        let mkq = m[[k, q]];
        m[[k, p]] = c * mkp - s * mkq;
        m[[k, q]] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[[p, k]];
        let mqk = m[[q, k]];
        m[[p, k]] = c * mpk - s * mqk;
        m[[q, k]] = s * mpk + c * mqk;
    }
    m[[p, q]] = 0.0;
    m[[q, p]] = 0.0;
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}
