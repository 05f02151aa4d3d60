//! Sparsity and orthogonality penalties on raw Explain matrices.
//!
//! With `u = y/‖y‖` and `w = f/‖f‖` the raw matrix is `u wᵀ`, which gives
//! closed forms for both penalties:
//!
//! ```text
//! sparsity      Σ_ij |E_ij|                 = ‖y‖₁‖f‖₁ / (‖y‖₂‖f‖₂)
//! orthogonality Σ_{i≠j} |⟨E_i:, E_j:⟩|      = (‖y‖₁² − ‖y‖₂²) / ‖y‖₂²
//! ```
//!
//! Both are invariant to rescaling `y`, so the gradient is orthogonal to `y`.
//! Training code uses [`xm_gradient`], which costs O(d).

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, XmError};
use crate::explain::explain_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XmConfig {
    /// Weight of the sparsity term.
    pub gamma: f64,
    /// Weight of the orthogonality term.
    pub delta: f64,
    /// Include `i == j` row pairs in the orthogonality sum.
    #[serde(default)]
    pub include_diagonal: bool,
}

impl Default for XmConfig {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            delta: 0.0,
            include_diagonal: false,
        }
    }
}

impl XmConfig {
    pub fn new(gamma: f64, delta: f64) -> Self {
        Self {
            gamma,
            delta,
            include_diagonal: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("delta", self.delta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(XmError::Config(format!(
                    "XM weight {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.gamma == 0.0 && self.delta == 0.0
    }
}

/// `Σ_j ‖E[:, j]‖₁`, the entrywise L1 norm.
pub fn sparsity_loss(e: ArrayView2<f64>) -> f64 {
    e.iter().map(|x| x.abs()).sum()
}

/// `Σ |⟨E[i, :], E[j, :]⟩|` over ordered row pairs, `i ≠ j` unless
/// `include_diagonal`.
pub fn orthogonality_loss(e: ArrayView2<f64>, include_diagonal: bool) -> f64 {
    let d = e.nrows();
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i == j && !include_diagonal {
                continue;
            }
            total += e.row(i).dot(&e.row(j)).abs();
        }
    }
    total
}

fn norms(v: ArrayView1<f64>) -> (f64, f64) {
    let l1 = v.iter().map(|x| x.abs()).sum();
    let l2 = v.dot(&v).sqrt();
    (l1, l2)
}

/// `γ·sparsity + δ·orthogonality` evaluated on the explicit Explain matrix.
pub fn xm_loss(y: ArrayView1<f64>, f: ArrayView1<f64>, cfg: &XmConfig) -> Result<f64> {
    let e = explain_matrix(y, f).map_err(collapse)?;
    let mut loss = 0.0;
    if cfg.gamma != 0.0 {
        loss += cfg.gamma * sparsity_loss(e.raw.view());
    }
    if cfg.delta != 0.0 {
        loss += cfg.delta * orthogonality_loss(e.raw.view(), cfg.include_diagonal);
    }
    Ok(loss)
}

/// Same value as [`xm_loss`] from the closed forms, in O(d + f).
pub fn xm_loss_closed_form(y: ArrayView1<f64>, f: ArrayView1<f64>, cfg: &XmConfig) -> Result<f64> {
    let (y1, y2) = norms(y);
    let (f1, f2) = norms(f);
    if !(y2 > 0.0) {
        return Err(XmError::ZeroVector("embedding vector y (collapse)"));
    }
    if !(f2 > 0.0) {
        return Err(XmError::ZeroVector("sense feature vector f"));
    }
    let sparse = y1 * f1 / (y2 * f2);
    let mut ortho = (y1 * y1 - y2 * y2) / (y2 * y2);
    if cfg.include_diagonal {
        ortho += 1.0;
    }
    Ok(cfg.gamma * sparse + cfg.delta * ortho)
}

fn collapse(e: XmError) -> XmError {
    match e {
        XmError::ZeroVector("embedding vector y") => XmError::ZeroVector("embedding vector y (collapse)"),
        other => other,
    }
}

/// Gradient of [`xm_loss`] with respect to `y`, using `sign(0) = 0`.
///
/// The diagonal flag only shifts the orthogonality term by a constant, so
/// the gradient is the same in both modes.
pub fn xm_gradient(y: ArrayView1<f64>, f: ArrayView1<f64>, cfg: &XmConfig) -> Result<Array1<f64>> {
    let mut out = Array1::zeros(y.len());
    add_xm_gradient(y, f, cfg, 1.0, out.view_mut().into_slice().expect("contiguous"))?;
    Ok(out)
}

/// `out += scale · ∇_y xm_loss(y, f)`, allocation-free for training loops.
pub fn add_xm_gradient(
    y: ArrayView1<f64>,
    f: ArrayView1<f64>,
    cfg: &XmConfig,
    scale: f64,
    out: &mut [f64],
) -> Result<()> {
    let (y1, y2) = norms(y);
    if !(y2 > 0.0) {
        return Err(XmError::ZeroVector("embedding vector y (collapse)"));
    }
    let (f1, f2) = norms(f);
    if !(f2 > 0.0) {
        return Err(XmError::ZeroVector("sense feature vector f"));
    }
    let c = cfg.gamma * f1 / f2;
    let y2sq = y2 * y2;
    // sparse: c (s_i/‖y‖₂ − ‖y‖₁ y_i/‖y‖₂³)
    // ortho:  δ (2‖y‖₁ s_i/‖y‖₂² − 2‖y‖₁² y_i/‖y‖₂⁴)
    let sign_coef = c / y2 + cfg.delta * 2.0 * y1 / y2sq;
    let lin_coef = c * y1 / (y2sq * y2) + cfg.delta * 2.0 * y1 * y1 / (y2sq * y2sq);
    for (o, &yi) in out.iter_mut().zip(y.iter()) {
        let s = if yi > 0.0 {
            1.0
        } else if yi < 0.0 {
            -1.0
        } else {
            0.0
        };
        *o += scale * (sign_coef * s - lin_coef * yi);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sparsity_examples() {
        assert!((sparsity_loss(array![[0.6, 0.0], [0.8, 0.0]].view()) - 1.4).abs() < 1e-15);
        assert_eq!(sparsity_loss(array![[0.0, 0.3], [0.0, 0.0]].view()), 0.3);
        let d = 5;
        let k = 3;
        let y = Array1::<f64>::ones(d);
        let f = Array1::<f64>::ones(k);
        let e = explain_matrix(y.view(), f.view()).unwrap();
        assert!((sparsity_loss(e.raw.view()) - ((d * k) as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn orthogonality_examples() {
        assert_eq!(orthogonality_loss(array![[1.0, 0.0], [0.0, 1.0]].view(), false), 0.0);
        let e = array![[0.6, 0.0], [0.8, 0.0]];
        assert!((orthogonality_loss(e.view(), false) - 0.96).abs() < 1e-15);
        assert!((orthogonality_loss(e.view(), true) - 1.96).abs() < 1e-15);
    }

    #[test]
    fn loss_examples() {
        let cfg = XmConfig::new(1.0, 1.0);
        let l = xm_loss(array![1.0, 1.0].view(), array![1.0, 1.0].view(), &cfg).unwrap();
        assert!((l - 3.0).abs() < 1e-12);
        let zero = XmConfig::new(0.0, 0.0);
        assert_eq!(xm_loss(array![1.0, 2.0].view(), array![1.0].view(), &zero).unwrap(), 0.0);
        // one-hot y: no orthogonality penalty, sparsity = ‖f‖₁/‖f‖₂
        let f = array![0.2, 0.5, 1.0];
        let l = xm_loss(array![0.0, 3.0, 0.0].view(), f.view(), &cfg).unwrap();
        assert!((l - 1.7 / (0.04f64 + 0.25 + 1.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_y_is_collapse() {
        let err = xm_loss(array![0.0, 0.0].view(), array![1.0].view(), &XmConfig::new(1.0, 1.0)).unwrap_err();
        assert!(err.to_string().contains("collapse"));
        assert!(xm_gradient(array![0.0].view(), array![1.0].view(), &XmConfig::default()).is_err());
    }

    #[test]
    fn one_hot_gradient_vanishes() {
        let g = xm_gradient(
            array![0.0, 1.0, 0.0].view(),
            array![0.3, 0.7].view(),
            &XmConfig::new(1.0, 1.0),
        )
        .unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn gradient_is_minus_one_homogeneous() {
        let y = array![0.3, -1.2, 0.7, 0.05];
        let f = array![0.1, 0.9, 0.4];
        let cfg = XmConfig::new(0.7, 1.3);
        let g1 = xm_gradient(y.view(), f.view(), &cfg).unwrap();
        let g2 = xm_gradient((&y * 2.0).view(), f.view(), &cfg).unwrap();
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((a / 2.0 - b).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(XmConfig::new(-1.0, 0.0).validate().is_err());
        assert!(XmConfig::new(0.0, f64::NAN).validate().is_err());
        assert!(XmConfig::new(0.5, 2.0).validate().is_ok());
    }
}
