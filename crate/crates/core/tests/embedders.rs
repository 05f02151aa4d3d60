use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use xm_core::embed::{noise_weights, sdne_train, AliasTable, LineConfig, SdneConfig, SdneModel};
use xm_core::features::{normalize_features, structural_features, FeatureMatrix, FeatureSet};
use xm_core::graph::{karate, Graph};
use xm_core::xm::{xm_gradient, XmConfig};

fn six_node() -> Graph {
    Graph::from_pairs(6, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (3, 5)]).unwrap()
}

fn features(g: &Graph) -> FeatureMatrix {
    normalize_features(&structural_features(g, &FeatureSet::default()).unwrap())
}

fn chi_square_p(counts: &[u64], weights: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let wsum: f64 = weights.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &w) in counts.iter().zip(weights) {
        let expected = total as f64 * w / wsum;
        if expected > 0.0 {
            stat += (c as f64 - expected).powi(2) / expected;
            cells += 1;
        }
    }
    let dist = ChiSquared::new((cells - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

fn draw_counts(weights: &[f64], draws: usize, seed: u64) -> Vec<u64> {
    let table = AliasTable::new(weights).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..draws {
        counts[table.sample(&mut rng)] += 1;
    }
    counts
}

#[test]
fn alias_table_matches_edge_weights() {
    let weights: Vec<f64> = (1..=40).map(|k| (k as f64).sqrt() + (k % 3) as f64).collect();
    let counts = draw_counts(&weights, 1_000_000, 17);
    assert!(chi_square_p(&counts, &weights) > 0.01);
}

#[test]
fn noise_distribution_follows_degree_power() {
    let g = karate();
    let w = noise_weights(&g, 0.75);
    for (v, wv) in w.iter().enumerate() {
        assert!((wv - (g.degree(v) as f64).powf(0.75)).abs() < 1e-12);
    }
    let counts = draw_counts(&w, 1_000_000, 3);
    assert!(chi_square_p(&counts, &w) > 0.01);
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    diff / scale
}

#[test]
fn sdne_backprop_matches_finite_differences() {
    let g = six_node();
    let f = features(&g);
    let cfg = SdneConfig {
        dim: 2,
        hidden: vec![2],
        alpha: 0.7,
        beta_recon: 1.3,
        nu: 0.05,
        beta_pen: 4.0,
        xm: Some(XmConfig::new(0.4, 0.6)),
        ..Default::default()
    };
    let mut model = SdneModel::new(&g, &cfg, Some(&f)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-6;
    for _ in 0..100 {
        let p: Vec<f64> = (0..model.parameter_count()).map(|_| rng.random_range(-1.5..1.5)).collect();
        model.set_parameters(&p);
        let (_, grad) = model.loss_and_gradient().unwrap();
        let mut fd = vec![0.0; p.len()];
        let mut q = p.clone();
        for i in 0..p.len() {
            q[i] = p[i] + h;
            model.set_parameters(&q);
            let up = model.loss().unwrap().total;
            q[i] = p[i] - h;
            model.set_parameters(&q);
            let down = model.loss().unwrap().total;
            q[i] = p[i];
            fd[i] = (up - down) / (2.0 * h);
        }
        let err = relative_error(&grad, &fd);
        assert!(err <= 1e-4, "relative error {err}");
    }
}

#[test]
fn xm_only_adds_its_own_gradient() {
    let g = karate();
    let f = features(&g);
    let xm = XmConfig::new(0.3, 0.8);
    let base_cfg = SdneConfig {
        dim: 6,
        hidden: vec![10],
        seed: 4,
        ..Default::default()
    };
    let xm_cfg = SdneConfig {
        xm: Some(xm),
        ..base_cfg.clone()
    };
    let base = SdneModel::new(&g, &base_cfg, None).unwrap();
    let with = SdneModel::new(&g, &xm_cfg, Some(&f)).unwrap();
    assert_eq!(base.parameters(), with.parameters());

    let y = base.embedding();
    let diff: Array2<f64> = with.code_gradient().unwrap() - base.code_gradient().unwrap();
    for k in 0..g.node_count() {
        let expect = xm_gradient(y.row(k), f.row(k), &xm).unwrap();
        for (a, b) in diff.row(k).iter().zip(expect.iter()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "node {k}: {a} vs {b}");
        }
    }
    let lb = base.loss().unwrap();
    let lx = with.loss().unwrap();
    assert_eq!(lb.reconstruction, lx.reconstruction);
    assert_eq!(lb.first_order, lx.first_order);
    assert!(lx.xm > 0.0);
}

#[test]
fn ten_epochs_give_ten_timings() {
    let cfg = SdneConfig {
        dim: 4,
        hidden: vec![8],
        epochs: 10,
        ..Default::default()
    };
    let emb = sdne_train(&karate(), &cfg, None).unwrap();
    assert_eq!(xm_core::embed::epoch_timings(&emb).len(), 10);
    assert_eq!(emb.loss_history.len(), 10);
}

#[test]
fn embedding_roundtrips_through_json_and_csv() {
    let cfg = LineConfig {
        dim: 4,
        epochs: 1,
        seed: 8,
        ..Default::default()
    };
    let emb = xm_core::embed::line_train(&karate(), &cfg, None).unwrap();
    let back = xm_core::embed::EmbeddingMatrix::from_json(&emb.to_json().unwrap()).unwrap();
    assert_eq!(back, emb);
    let mut buf = Vec::new();
    emb.write_csv(&mut buf).unwrap();
    let values = xm_core::embed::EmbeddingMatrix::read_csv_values(buf.as_slice()).unwrap();
    assert_eq!(values, emb.values);
}
