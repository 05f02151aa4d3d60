use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;
use serde_json::{json, Value};
use xm_core::embed::EmbeddingMatrix;
use xm_core::eval::{
    ablation, derive_seed, norm_distribution, norm_p_value, run_link_prediction, EvalReport, LinkPredOptions,
};
use xm_core::explain::{explain_batch, normalize_explain, nuclear_norm, View};
use xm_core::features::{
    normalize_features, positional_features, structural_features, FeatureMatrix, FeatureSet,
};
use xm_core::graph::{graph_stats, Graph};
use xm_core::xm::XmConfig;
use xm_core::{Result, XmError};

use crate::config::{builtin, Format, RunConfig};

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(dir, name, text.as_bytes())
}

/// Resolved config plus graph identity, stored with every output bundle.
fn manifest(cfg: &RunConfig, g: Option<&Graph>, extra: Value) -> Result<()> {
    let mut m = json!({ "config": cfg });
    if let Some(g) = g {
        m["graph"] = json!({
            "name": cfg.input.name(),
            "sha256": g.content_hash(),
            "nodes": g.node_count(),
            "edges": g.edge_count(),
        });
    }
    if let (Value::Object(dst), Value::Object(src)) = (&mut m, extra) {
        dst.extend(src);
    }
    write_json(&cfg.out, "manifest.json", &m)
}

/// Timings and warnings: not reproducible, so kept apart from data files.
fn diagnostics(cfg: &RunConfig, value: Value) -> Result<()> {
    eprintln!("{}", serde_json::to_string(&value)?);
    write_json(&cfg.out, "diagnostics.json", &value)
}

/// Normalized sense features of `g` selected by `cfg.features`.
fn features_for(cfg: &RunConfig, g: &Graph) -> Result<FeatureMatrix> {
    let raw = if cfg.features == "positional" {
        if cfg.anchors.is_empty() {
            return Err(XmError::Config("positional features need --anchors".into()));
        }
        positional_features(g, &cfg.anchors)?
    } else {
        structural_features(g, &FeatureSet::parse(&cfg.features)?)?
    };
    let f = normalize_features(&raw);
    for w in &f.warnings {
        eprintln!("warning: {w}");
    }
    Ok(f)
}

fn matrix_bytes(f: &FeatureMatrix, format: Format) -> Result<Vec<u8>> {
    Ok(match format {
        Format::Csv => {
            let mut buf = Vec::new();
            f.write_csv(&mut buf)?;
            buf
        }
        Format::Json => f.to_json()?.into_bytes(),
    })
}

pub fn stats(cfg: &RunConfig) -> Result<()> {
    let g = cfg.input.load()?;
    let s = graph_stats(&g);
    write_json(&cfg.out, "stats.json", &s)?;
    manifest(cfg, Some(&g), json!({}))?;
    println!("{}", serde_json::to_string_pretty(&s)?);
    Ok(())
}

pub fn features(cfg: &RunConfig) -> Result<()> {
    let g = cfg.input.load()?;
    let f = features_for(cfg, &g)?;
    let name = match cfg.format {
        Format::Csv => "features.csv",
        Format::Json => "features.json",
    };
    write(&cfg.out, name, &matrix_bytes(&f, cfg.format)?)?;
    manifest(cfg, Some(&g), json!({ "columns": f.names, "warnings": f.warnings }))
}

fn strip_timings(emb: &EmbeddingMatrix) -> EmbeddingMatrix {
    let mut e = emb.clone();
    e.epoch_seconds.clear();
    e
}

fn embedding_bytes(emb: &EmbeddingMatrix, format: Format) -> Result<Vec<u8>> {
    Ok(match format {
        Format::Csv => {
            let mut buf = Vec::new();
            emb.write_csv(&mut buf)?;
            buf
        }
        Format::Json => strip_timings(emb).to_json()?.into_bytes(),
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

pub fn embed(cfg: &RunConfig) -> Result<()> {
    cfg.require_seed()?;
    let g = cfg.input.load()?;
    let method = cfg.method_with_xm();
    let f = match method.xm() {
        Some(_) => Some(features_for(cfg, &g)?),
        None => None,
    };
    let emb = method.train(&g, f.as_ref())?;
    let name = match cfg.format {
        Format::Csv => "embedding.csv",
        Format::Json => "embedding.json",
    };
    write(&cfg.out, name, &embedding_bytes(&emb, cfg.format)?)?;
    manifest(
        cfg,
        Some(&g),
        json!({
            "method": method,
            "config_hash": emb.config_hash,
            "loss_history": emb.loss_history,
        }),
    )?;
    diagnostics(
        cfg,
        json!({
            "epoch_seconds": emb.epoch_seconds,
            "mean_epoch_seconds": mean(&emb.epoch_seconds),
        }),
    )
}

fn read_embedding(path: &Path) -> Result<Array2<f64>> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path)?;
        Ok(EmbeddingMatrix::from_json(&text)?.values)
    } else {
        EmbeddingMatrix::read_csv_values(fs::File::open(path)?)
    }
}

pub fn explain(cfg: &RunConfig) -> Result<()> {
    let path = cfg
        .embedding
        .as_ref()
        .ok_or_else(|| XmError::Config("explain needs --embedding".into()))?;
    let values = read_embedding(path)?;
    let (f, g) = match &cfg.feature_file {
        Some(p) => {
            let file = fs::File::open(p)?;
            (FeatureMatrix::read_csv(file)?, None)
        }
        None => {
            let g = cfg.input.load()?;
            (features_for(cfg, &g)?, Some(g))
        }
    };
    if f.node_count() != values.nrows() {
        return Err(XmError::Config(format!(
            "embedding has {} rows but features cover {} nodes",
            values.nrows(),
            f.node_count()
        )));
    }
    if let Some(&bad) = cfg.nodes.iter().find(|&&k| k >= values.nrows()) {
        return Err(XmError::Config(format!("node {bad} out of range")));
    }
    let mut batch = explain_batch(values.view(), f.values.view())?;
    let summary = normalize_explain(&mut batch, cfg.mode)?;
    for &k in &cfg.nodes {
        let mut buf = Vec::new();
        batch[k].write_csv(&f.names, &mut buf)?;
        write(&cfg.out, &format!("explain_node{k}.csv"), &buf)?;
    }
    let mut norms = String::from("node,nuclear_norm\n");
    let mut all = Vec::with_capacity(batch.len());
    for e in &batch {
        let v = nuclear_norm(e.view(View::Normalized)?);
        all.push(v);
        norms.push_str(&format!("{},{v}\n", e.node));
    }
    write(&cfg.out, "norms.csv", norms.as_bytes())?;
    let stats = xm_core::eval::MeanSe::of(&all);
    manifest(
        cfg,
        g.as_ref(),
        json!({ "norm": stats, "constant_cells": summary.constant, "degenerate": summary.degenerate }),
    )
}

pub fn linkpred(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.require_seed()?;
    let g = cfg.input.load()?;
    let opts = LinkPredOptions {
        folds: cfg.folds,
        combiner: cfg.combiner,
        features: feature_set(cfg)?,
        mode: cfg.mode,
        ..Default::default()
    };
    let method = cfg.method_with_xm();
    let mut reports = vec![run_link_prediction(&g, &method.with_xm(None), &opts, seed)?];
    if method.xm().is_some() {
        let mut xm = run_link_prediction(&g, &method, &opts, seed)?;
        xm.p_value = Some(norm_p_value(&reports[0], &xm)?);
        reports.push(xm);
    }
    for r in &mut reports {
        r.dataset = cfg.input.name();
    }
    let clean: Vec<EvalReport> = reports.iter().map(EvalReport::without_timings).collect();
    write_json(&cfg.out, "report.json", &clean)?;
    let mut buf = Vec::new();
    EvalReport::write_csv(&clean, &mut buf)?;
    write(&cfg.out, "report.csv", &buf)?;
    manifest(cfg, Some(&g), json!({}))?;
    let timings: Vec<Value> = reports
        .iter()
        .map(|r| json!({ "xm": r.xm.is_some(), "seconds_per_epoch": r.seconds_per_epoch }))
        .collect();
    diagnostics(cfg, json!({ "timings": timings }))
}

fn feature_set(cfg: &RunConfig) -> Result<FeatureSet> {
    if cfg.features == "positional" {
        return Err(XmError::Config(
            "positional features are per-graph; use a structural set here".into(),
        ));
    }
    FeatureSet::parse(&cfg.features)
}

/// XM weights for runs that need them: explicit flags, then the method's
/// own setting, then the tuned default for the method.
fn resolved_xm(cfg: &RunConfig) -> XmConfig {
    cfg.xm
        .or(cfg.method.xm())
        .unwrap_or_else(|| cfg.method.default_xm())
}

pub fn run_ablation(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.require_seed()?;
    let g = cfg.input.load()?;
    let f = features_for(cfg, &g)?;
    let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|k| derive_seed(seed, k)).collect();
    let table = ablation(&g, &cfg.method.with_xm(None), resolved_xm(cfg), &seeds, &f, cfg.mode)?;
    let clean = table.without_timings();
    let mut buf = Vec::new();
    clean.write_csv(&mut buf)?;
    write(&cfg.out, "ablation.csv", &buf)?;
    write(&cfg.out, "ablation.json", clean.to_json()?.as_bytes())?;
    manifest(cfg, Some(&g), json!({}))?;
    let timings: Vec<Value> = table
        .rows
        .iter()
        .map(|r| json!({ "config": r.name, "seconds_per_epoch": r.seconds_per_epoch }))
        .collect();
    diagnostics(cfg, json!({ "timings": timings }))
}

pub fn demo(cfg: &RunConfig, name: &str) -> Result<()> {
    let g = builtin(name)?;
    let seed = cfg.seed.unwrap_or(0);
    let method = cfg.method.with_seed(seed);
    let xm = resolved_xm(cfg);
    // (feature set label, anchors) pairs and the nodes to show
    let (sets, nodes): (Vec<(&str, Vec<usize>)>, Vec<usize>) = match name {
        "karate" => (vec![("structural", vec![])], vec![0, 11, 33]),
        "barbell" => {
            let m = g.node_count() / 2;
            (
                vec![("structural", vec![]), ("positional", vec![m / 2, m + m / 2])],
                vec![m - 1, 2 * m - 1],
            )
        }
        other => {
            return Err(XmError::Config(format!("no demo for '{other}' (karate | barbell)")));
        }
    };
    let structural = normalize_features(&structural_features(&g, &FeatureSet::default())?);
    let variants = [
        ("base", method.with_xm(None).train(&g, None)?),
        ("xm", method.with_xm(Some(xm)).train(&g, Some(&structural))?),
    ];
    let mut summary = Vec::new();
    for (variant, emb) in &variants {
        let mut buf = Vec::new();
        emb.write_csv(&mut buf)?;
        write(&cfg.out, &format!("embedding_{variant}.csv"), &buf)?;
        for (set, anchors) in &sets {
            let f = if anchors.is_empty() {
                structural.clone()
            } else {
                normalize_features(&positional_features(&g, anchors)?)
            };
            let mut batch = explain_batch(emb.values.view(), f.values.view())?;
            normalize_explain(&mut batch, cfg.mode)?;
            for &k in &nodes {
                let mut buf = Vec::new();
                batch[k].write_csv(&f.names, &mut buf)?;
                let file = if sets.len() == 1 {
                    format!("explain_{variant}_node{k}.csv")
                } else {
                    format!("explain_{variant}_{set}_node{k}.csv")
                };
                write(&cfg.out, &file, &buf)?;
            }
            let dist = norm_distribution(emb.values.view(), &f, cfg.mode)?;
            summary.push(json!({ "variant": variant, "features": set, "norm": dist.stats }));
        }
    }
    manifest(
        cfg,
        Some(&g),
        json!({ "demo": name, "nodes": nodes, "xm": xm, "method": method, "norms": summary }),
    )
}
