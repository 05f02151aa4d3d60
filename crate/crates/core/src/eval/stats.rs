use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Result, XmError};

/// Sample mean and standard error (sample standard deviation over √n).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n < 2 {
            0.0
        } else {
            (sample_variance(xs, mean) / n as f64).sqrt()
        };
        Self { mean, se }
    }
}

fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Two-sided p-value of Welch's unequal-variance t-test.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(XmError::Config("Welch's test needs at least two samples per group".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    let va = sample_variance(a, ma) / na;
    let vb = sample_variance(b, mb) / nb;
    let se2 = va + vb;
    if se2 == 0.0 {
        return Ok(if ma == mb { 1.0 } else { 0.0 });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let p = beta_reg(df / 2.0, 0.5, df / (df + t * t));
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_example() {
        // t = −1, df = 8
        let p = welch_t(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((p - 0.3466).abs() < 1e-3, "{p}");
    }

    #[test]
    fn identical_samples() {
        let a = [0.3, 1.2, 0.7, 2.0];
        assert!((welch_t(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(welch_t(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(welch_t(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn symmetric() {
        let a = [0.1, 0.5, 0.2];
        let b = [1.0, 0.7, 1.5, 0.9];
        assert_eq!(welch_t(&a, &b).unwrap(), welch_t(&b, &a).unwrap());
        assert!(welch_t(&[1.0], &b).is_err());
    }

    #[test]
    fn mean_se() {
        let s = MeanSe::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
