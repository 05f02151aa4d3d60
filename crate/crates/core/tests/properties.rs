use ndarray::{Array1, Array2};
use proptest::prelude::*;
use xm_core::eval::{auc, welch_t};
use xm_core::explain::{
    bregman_divergence, explain_batch, explain_matrix, normalize_explain, nuclear_norm, pinsker_gap,
    trace_normalize, von_neumann_entropy, NormalizationMode, View,
};
use xm_core::xm::{orthogonality_loss, sparsity_loss, xm_gradient, xm_loss, xm_loss_closed_form, XmConfig};

/// Entries bounded away from zero so sign(y) is locally constant.
fn away_from_zero(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0.05f64..2.0, any::<bool>()).prop_map(|(m, s)| if s { m } else { -m }), len)
}

fn nonzero_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 1..=max_len).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Random trace-1 PSD matrix `B Bᵀ / tr` of full rank (almost surely).
fn density(d: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |v| {
        let b = Array2::from_shape_vec((d, d), v).unwrap();
        let m = b.dot(&b.t()) + Array2::<f64>::eye(d) * 1e-3;
        trace_normalize(m.view()).unwrap()
    })
}

proptest! {
    #[test]
    fn raw_explain_has_unit_nuclear_norm(y in nonzero_vec(40), f in nonzero_vec(9)) {
        let e = explain_matrix(Array1::from(y).view(), Array1::from(f).view()).unwrap();
        prop_assert!((nuclear_norm(e.raw.view()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn closed_forms_match_direct_sums(y in nonzero_vec(30), f in nonzero_vec(8), g in 0.0f64..2.0, d in 0.0f64..2.0, diag in any::<bool>()) {
        let (y, f) = (Array1::from(y), Array1::from(f));
        let cfg = XmConfig { include_diagonal: diag, ..XmConfig::new(g, d) };
        let direct = xm_loss(y.view(), f.view(), &cfg).unwrap();
        let closed = xm_loss_closed_form(y.view(), f.view(), &cfg).unwrap();
        prop_assert!((direct - closed).abs() <= 1e-9 * closed.abs().max(1e-12));
    }

    #[test]
    fn sparsity_and_orthogonality_are_scale_invariant(y in nonzero_vec(20), f in nonzero_vec(7), s in 0.01f64..100.0) {
        let (y, f) = (Array1::from(y), Array1::from(f));
        let e1 = explain_matrix(y.view(), f.view()).unwrap();
        let e2 = explain_matrix((&y * s).view(), f.view()).unwrap();
        prop_assert!(rel(sparsity_loss(e1.raw.view()), sparsity_loss(e2.raw.view())) < 1e-9);
        let o1 = orthogonality_loss(e1.raw.view(), false);
        prop_assert!((o1 - orthogonality_loss(e2.raw.view(), false)).abs() <= 1e-9 * (1.0 + o1));
    }

    #[test]
    fn xm_gradient_matches_finite_differences(y in away_from_zero(12), f in away_from_zero(7), g in 0.1f64..2.0, d in 0.1f64..2.0) {
        let (y, f) = (Array1::from(y), Array1::from(f));
        let cfg = XmConfig::new(g, d);
        let grad = xm_gradient(y.view(), f.view(), &cfg).unwrap();
        let h = 1e-6;
        let mut fd = Array1::zeros(y.len());
        for i in 0..y.len() {
            let mut up = y.clone();
            up[i] += h;
            let mut down = y.clone();
            down[i] -= h;
            fd[i] = (xm_loss_closed_form(up.view(), f.view(), &cfg).unwrap()
                - xm_loss_closed_form(down.view(), f.view(), &cfg).unwrap()) / (2.0 * h);
        }
        let err = (&grad - &fd).mapv(|x| x * x).sum().sqrt() / fd.mapv(|x| x * x).sum().sqrt().max(1e-12);
        prop_assert!(err <= 1e-5, "relative error {}", err);
    }

    #[test]
    fn xm_gradient_is_orthogonal_to_y(y in away_from_zero(16), f in away_from_zero(7)) {
        // the loss is scale invariant, so moving along y changes nothing
        let (y, f) = (Array1::from(y), Array1::from(f));
        let grad = xm_gradient(y.view(), f.view(), &XmConfig::new(0.7, 0.4)).unwrap();
        prop_assert!(grad.dot(&y).abs() <= 1e-9 * grad.dot(&grad).sqrt() * y.dot(&y).sqrt());
    }

    #[test]
    fn pinsker_holds_for_random_densities(a in density(4), b in density(4)) {
        prop_assert!(bregman_divergence(a.view(), b.view()).unwrap() >= -1e-12);
        prop_assert!(pinsker_gap(a.view(), b.view()).unwrap() >= -1e-9);
    }

    #[test]
    fn entropy_is_bounded_by_log_d(a in density(5)) {
        let s = von_neumann_entropy(a.view()).unwrap();
        prop_assert!(s >= -1e-12 && s <= 5f64.ln() + 1e-10);
    }

    #[test]
    fn population_normalization_stays_in_unit_box(
        y in prop::collection::vec(away_from_zero(6), 3..12),
        f in prop::collection::vec(away_from_zero(4), 12),
    ) {
        let n = y.len();
        let ym = Array2::from_shape_vec((n, 6), y.concat()).unwrap();
        let fm = Array2::from_shape_vec((n, 4), f[..n].concat()).unwrap();
        let mut batch = explain_batch(ym.view(), fm.view()).unwrap();
        normalize_explain(&mut batch, NormalizationMode::Population).unwrap();
        for i in 0..6 {
            for j in 0..4 {
                let col: Vec<f64> = batch.iter().map(|e| e.view(View::Normalized).unwrap()[[i, j]]).collect();
                prop_assert!(col.iter().all(|x| (0.0..=1.0).contains(x)));
                let hi = col.iter().cloned().fold(f64::MIN, f64::max);
                let lo = col.iter().cloned().fold(f64::MAX, f64::min);
                prop_assert!((hi - 1.0).abs() < 1e-12 || (lo - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn auc_equals_pairwise_count(scores in prop::collection::vec(-2i32..3, 2..30), labels in prop::collection::vec(any::<bool>(), 30)) {
        let labels = &labels[..scores.len()];
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let s: Vec<f64> = scores.iter().map(|&x| x as f64).collect();
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1.0;
                    wins += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let got = auc(Array1::from(s).view(), labels).unwrap();
        prop_assert!((got - wins / pairs).abs() < 1e-12);
    }

    #[test]
    fn welch_is_symmetric(a in prop::collection::vec(-5.0f64..5.0, 2..10), b in prop::collection::vec(-5.0f64..5.0, 2..10)) {
        let p = welch_t(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - welch_t(&b, &a).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn uniform_density_has_entropy_log_d() {
    for d in 1..=10 {
        let m = Array2::<f64>::eye(d) / d as f64;
        assert!((von_neumann_entropy(m.view()).unwrap() - (d as f64).ln()).abs() < 1e-10);
    }
}

#[test]
fn welch_matches_student_t_cdf() {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    // equal variances 1 and sizes 3: t = -1/sqrt(2/3), df = 4
    let p = welch_t(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
    let t = 1.0 / (2.0f64 / 3.0).sqrt();
    let expect = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, 4.0).unwrap().cdf(t));
    assert!((p - expect).abs() < 1e-10, "{p} vs {expect}");
}
