//! Matrix entropy diagnostics on PSD Gram matrices: Von Neumann entropy,
//! the associated Bregman divergence, and the quantum Pinsker gap.

use ndarray::{Array2, ArrayView2};

use crate::error::{Result, XmError};
use crate::linalg::{max_asymmetry, symmetric_eigen, SymmetricEigen};

const SYMMETRY_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-9;
/// Eigenvalues below this fraction of the largest count as zero.
const ZERO_EIGENVALUE: f64 = 1e-12;
/// Overlap of `A`'s support with `B`'s null space beyond which the
/// divergence is infinite.
const SUPPORT_TOL: f64 = 1e-9;

fn checked_eigen(a: ArrayView2<f64>) -> Result<SymmetricEigen> {
    let asym = max_asymmetry(a);
    if asym > SYMMETRY_TOL {
        return Err(XmError::NotSymmetric(asym));
    }
    symmetric_eigen(a)
}

/// Eigenvalues clamped to zero below the relative cutoff (and when negative).
fn clamped(eig: &SymmetricEigen) -> Vec<f64> {
    let top = eig.values.iter().copied().fold(0.0, f64::max);
    eig.values
        .iter()
        .map(|&l| if l <= ZERO_EIGENVALUE * top { 0.0 } else { l })
        .collect()
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `-tr(A log A)` with `0 log 0 = 0`; eigenvalues at or below the cutoff
/// (including small negative round-off) are treated as zero.
pub fn von_neumann_entropy(a: ArrayView2<f64>) -> Result<f64> {
    let eig = checked_eigen(a)?;
    Ok(-clamped(&eig).into_iter().map(xlogx).sum::<f64>())
}

/// `tr[A (log A − log B)] − tr A + tr B`.
///
/// Returns `f64::INFINITY` when `A` has weight outside the support of `B`.
pub fn bregman_divergence(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(XmError::Config("divergence needs matrices of equal shape".into()));
    }
    let ea = checked_eigen(a)?;
    let eb = checked_eigen(b)?;
    let la = clamped(&ea);
    let lb = clamped(&eb);
    let n = la.len();

    // overlaps[i][j] = (p_i · q_j)^2 between eigenvectors of A and B
    let overlap = ea.vectors.t().dot(&eb.vectors).mapv(|x| x * x);

    let mut cross = 0.0;
    for i in 0..n {
        if la[i] == 0.0 {
            continue;
        }
        let mut outside = 0.0;
        for j in 0..n {
            if lb[j] == 0.0 {
                outside += overlap[[i, j]];
            } else {
                cross += la[i] * lb[j].ln() * overlap[[i, j]];
            }
        }
        if outside > SUPPORT_TOL {
            return Ok(f64::INFINITY);
        }
    }
    let self_term: f64 = la.iter().copied().map(xlogx).sum();
    let tr_a: f64 = la.iter().sum();
    let tr_b: f64 = lb.iter().sum();
    Ok(self_term - cross - tr_a + tr_b)
}

/// `D(A‖B) − ½ ‖A − B‖_*²` for trace-one PSD matrices; non-negative by the
/// quantum Pinsker inequality.
pub fn pinsker_gap(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    for m in [a, b] {
        let tr = m.diag().sum();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(XmError::TraceNotNormalized(tr));
        }
    }
    let d = bregman_divergence(a, b)?;
    let diff = &a - &b;
    // A − B is symmetric: its nuclear norm is the sum of |eigenvalues|
    let trace_norm: f64 = symmetric_eigen(diff.view())?.values.iter().map(|l| l.abs()).sum();
    Ok(d - 0.5 * trace_norm * trace_norm)
}

/// `A / tr(A)`.
pub fn trace_normalize(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let tr = a.diag().sum();
    if !(tr > 0.0 && tr.is_finite()) {
        return Err(XmError::Numerical(format!(
            "cannot trace-normalize a matrix with trace {tr}"
        )));
    }
    Ok(a.mapv(|x| x / tr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn maximally_mixed_qubit() {
        let h = von_neumann_entropy((Array2::<f64>::eye(2) * 0.5).view()).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn pure_state_has_zero_entropy() {
        // projector onto (1, 1)/√2
        let p = array![[0.5, 0.5], [0.5, 0.5]];
        assert!(von_neumann_entropy(p.view()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn diagonal_entropy() {
        let h = von_neumann_entropy(array![[0.7, 0.0], [0.0, 0.3]].view()).unwrap();
        let expect = -0.7 * 0.7f64.ln() - 0.3 * 0.3f64.ln();
        assert!((h - expect).abs() < 1e-14);
        assert!((h - 0.6109).abs() < 1e-4);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = von_neumann_entropy(array![[0.5, 0.1], [0.0, 0.5]].view()).unwrap_err();
        assert!(matches!(err, XmError::NotSymmetric(_)));
    }

    #[test]
    fn divergence_of_self_is_zero() {
        let a = array![[0.6, 0.1], [0.1, 0.4]];
        assert!(bregman_divergence(a.view(), a.view()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn commuting_diagonal_divergence_is_kl() {
        let a = array![[0.6, 0.0], [0.0, 0.4]];
        let b = array![[0.5, 0.0], [0.0, 0.5]];
        let d = bregman_divergence(a.view(), b.view()).unwrap();
        let kl = 0.6 * (0.6f64 / 0.5).ln() + 0.4 * (0.4f64 / 0.5).ln();
        assert!((d - kl).abs() < 1e-14);
        assert!((d - 0.02014).abs() < 1e-5);
    }

    #[test]
    fn support_violation_is_infinite() {
        let a = array![[0.5, 0.0], [0.0, 0.5]];
        let b = array![[1.0, 0.0], [0.0, 0.0]];
        assert_eq!(bregman_divergence(a.view(), b.view()).unwrap(), f64::INFINITY);
        // the reverse direction is finite
        assert!(bregman_divergence(b.view(), a.view()).unwrap().is_finite());
    }

    #[test]
    fn pinsker_examples() {
        let a = array![[0.9, 0.0], [0.0, 0.1]];
        let b = array![[0.5, 0.0], [0.0, 0.5]];
        let gap = pinsker_gap(a.view(), b.view()).unwrap();
        let d = 0.9 * (0.9f64 / 0.5).ln() + 0.1 * (0.1f64 / 0.5).ln();
        assert!((d - 0.3681).abs() < 1e-4);
        assert!((gap - (d - 0.32)).abs() < 1e-12);
        assert!(gap > 0.0);
        assert!(pinsker_gap(a.view(), a.view()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pinsker_requires_unit_trace() {
        let a = array![[2.0, 0.0], [0.0, 1.0]];
        let err = pinsker_gap(a.view(), a.view()).unwrap_err();
        assert!(matches!(err, XmError::TraceNotNormalized(_)));
        let n = trace_normalize(a.view()).unwrap();
        assert!(pinsker_gap(n.view(), n.view()).is_ok());
    }
}
