//! Acceptance criteria, one verdict line each.
//!
//! cargo test --test acceptance
//!
//! The full-data check reads the report written by `si-predict evaluate` on
//! the challenge data from `SI_PREDICT_REPORT`; without it that criterion is
//! skipped.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ndarray::{Array1, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use si_predict::eval::{
    better_ear, fit_trend, per_system_report, rmse, rmse_by_bin, EvaluationReport,
};
use si_predict::exemplar::{
    blend_backward, exemplar_blend, secondary_head, ExemplarParams, PooledMemory, SecondaryModel,
    NORM_EPS,
};
use si_predict::features::{DecoderFeatures, MockBackend};
use si_predict::model::{
    check_gradients, Affine, LayerWeighting, ModelDims, ModelKind, Module, PrimaryModel,
};
use si_predict::synth::{planted_examples, write_corpus, SynthSpec};
use si_predict::training::{train, TrainConfig, ValidationSets};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn small_dims(rng: &mut ChaCha8Rng) -> ModelDims {
    ModelDims {
        feature_dim: rng.random_range(3..=6),
        layers: rng.random_range(2..=4),
        hidden: rng.random_range(2..=4),
        attn_hidden: rng.random_range(2..=5),
    }
}

fn random_features(rng: &mut ChaCha8Rng, w: usize, dims: ModelDims) -> DecoderFeatures {
    DecoderFeatures::new(Array3::from_shape_simple_fn(
        (w, dims.feature_dim, dims.layers),
        || rng.random_range(-1.5f32..1.5),
    ))
    .unwrap()
}

fn random_affine(rng: &mut ChaCha8Rng, input: usize, output: usize) -> Affine {
    let mut a = Affine::zeros(input, output);
    a.weight.mapv_inplace(|_| rng.random_range(-1.0..1.0));
    a.bias.mapv_inplace(|_| rng.random_range(-1.0..1.0));
    a
}

fn count_parameters() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let dims = ModelDims::standard();
    let p = PrimaryModel::init(dims, &mut rng).num_params();
    let s = SecondaryModel::init(dims, &mut rng).num_params();
    let within = |n: usize, target: f64| (n as f64 - target).abs() <= 0.1 * target;
    ensure(within(p, 8.3e6), || format!("primary has {p} parameters"))?;
    ensure(within(s, 10.0e6), || format!("secondary has {s} parameters"))?;
    Ok(format!("primary {p}, secondary {s}"))
}

/// Per-term scalar loops over plain vectors.
fn scalar_affine(a: &Affine, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for o in 0..a.weight.nrows() {
        let mut s = a.bias[o];
        for i in 0..x.len() {
            s += a.weight[[o, i]] * x[i];
        }
        out.push(s);
    }
    out
}

fn scalar_norm(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += x * x;
    }
    s.sqrt()
}

fn oracle_head(y: &[f64], memory: &[(Vec<f64>, f64)], p: &ExemplarParams) -> (f64, f64, f64) {
    let fy = scalar_affine(&p.f, y);
    let mut a = 0.0;
    for (v, label) in memory {
        let gv = scalar_affine(&p.g, v);
        let mut dot = 0.0;
        for k in 0..fy.len() {
            dot += fy[k] * gv[k];
        }
        let denom = scalar_norm(&fy) * scalar_norm(&gv);
        let denom = if denom < NORM_EPS { NORM_EPS } else { denom };
        a += dot / denom * label;
    }
    let r = p.h.weight[[0, 0]] * a + p.h.bias[0];
    (a, r, 1.0 / (1.0 + (-r).exp()))
}

fn exemplar_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut guarded = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=12);
        let d = rng.random_range(1..=16);
        let params = ExemplarParams {
            f: random_affine(&mut rng, n, n),
            g: random_affine(&mut rng, n, n),
            h: random_affine(&mut rng, 1, 1),
        };
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            if rng.random_bool(0.05) {
                // g(v) = 0 exactly, exercising the guarded denominator.
                let mut v = vec![0.0; n];
                v[0] = 1.0;
                v
            } else {
                (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
            }
        };
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let memory: Vec<(Vec<f64>, f64)> = (0..d)
            .map(|_| (draw(&mut rng), rng.random_range(0.0..1.0)))
            .collect();
        let mut params = params;
        if memory.iter().any(|(v, _)| v[0] == 1.0 && v[1..].iter().all(|&x| x == 0.0)) {
            // Make g annihilate the unit vector e0.
            for o in 0..n {
                params.g.weight[[o, 0]] = 0.0;
                params.g.bias[o] = 0.0;
            }
        }
        let pooled = PooledMemory::new(
            memory.iter().map(|(v, _)| Array1::from(v.clone())).collect(),
            memory.iter().map(|(_, l)| *l).collect(),
        )
        .map_err(|e| e.to_string())?;
        let y_arr = Array1::from(y.clone());
        let (a_oracle, r_oracle, s_oracle) = oracle_head(&y, &memory, &params);
        let (a, cache) = exemplar_blend(y_arr.view(), &pooled, &params);
        let (out, _) = secondary_head(y_arr.view(), &pooled, &params);
        guarded += cache.guarded_terms();
        for (got, want) in [(a, a_oracle), (out.a, a_oracle), (out.r, r_oracle), (out.output, s_oracle)] {
            let err = (got - want).abs() / want.abs().max(1.0);
            worst = worst.max(err);
            ensure(err <= 1e-10, || format!("seed {seed}: {got} vs oracle {want}"))?;
        }
    }
    Ok(format!("1000 instances, worst error {worst:.2e}, {guarded} guarded terms"))
}

fn gradient_checks() -> Outcome {
    let (mut layer, mut attn, mut head) = (0.0f64, 0.0f64, 0.0f64);
    let target = 0.35;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let dims = small_dims(&mut rng);
        let mut model = PrimaryModel::init(dims, &mut rng);
        model.trunk.weighting.raw.mapv_inplace(|_| rng.random_range(-1.0..1.0));
        let w = rng.random_range(1..=5);
        let f = random_features(&mut rng, w, dims);
        let loss = |m: &PrimaryModel| (m.predict(&f).unwrap() - target).powi(2);
        let cache = model.forward(&f).map_err(|e| e.to_string())?;
        let mut grad = model.zeros_like();
        model.backward(&f, &cache, 2.0 * (cache.output - target), &mut grad);
        let g = check_gradients(&model, &grad, loss, |n| n.contains("layer_weighting"), 1e-5, 1e-7, 64, &mut rng);
        ensure(g.max_rel_error < 1e-4 && g.checked > 0, || format!("layer weights, seed {seed}: {g:?}"))?;
        layer = layer.max(g.max_rel_error);
        let g = check_gradients(&model, &grad, loss, |n| n.contains("attention"), 1e-5, 1e-7, 16, &mut rng);
        ensure(g.max_rel_error < 1e-4 && g.checked > 0, || format!("attention, seed {seed}: {g:?}"))?;
        attn = attn.max(g.max_rel_error);

        let model = SecondaryModel::init(dims, &mut rng);
        let mem: Vec<DecoderFeatures> = (0..rng.random_range(1..=4))
            .map(|_| {
                let w = rng.random_range(1..=5);
                random_features(&mut rng, w, dims)
            })
            .collect();
        let refs: Vec<&DecoderFeatures> = mem.iter().collect();
        let labels: Vec<f64> = mem.iter().map(|_| rng.random_range(0.0..1.0)).collect();
        let input = random_features(&mut rng, w, dims);
        let mut model = model;
        model.exemplar.h.weight[[0, 0]] = rng.random_range(-3.0..3.0);
        let loss = |m: &SecondaryModel| {
            let (pooled, _) = m.pool_memory(&refs, &labels).unwrap();
            (m.predict(&input, &pooled).unwrap() - target).powi(2)
        };
        let (pooled, caches) = model.pool_memory(&refs, &labels).map_err(|e| e.to_string())?;
        let cache = model.forward(&input, &pooled).map_err(|e| e.to_string())?;
        let mut grad = model.zeros_like();
        let d_mem = model.backward(&input, &cache, &pooled, 2.0 * (cache.out.output - target), &mut grad);
        for ((f, c), d) in refs.iter().zip(&caches).zip(&d_mem) {
            model.trunk.backward(f, c, d.view(), &mut grad.trunk);
        }
        let g = check_gradients(&model, &grad, loss, |n| n.starts_with("exemplar."), 1e-5, 1e-7, 64, &mut rng);
        ensure(g.max_rel_error < 1e-4 && g.checked > 0, || format!("f/g/h, seed {seed}: {g:?}"))?;
        head = head.max(g.max_rel_error);

        // The head alone, on pooled vectors that bypass the trunk.
        let n = dims.pooled_dim();
        let mut params = ExemplarParams::init(n, &mut rng);
        params.h.weight[[0, 0]] = rng.random_range(-3.0..3.0);
        let y = Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..1.0));
        let mem = PooledMemory::new(
            (0..3).map(|_| Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..1.0))).collect(),
            vec![0.1, 0.5, 0.9],
        )
        .map_err(|e| e.to_string())?;
        let loss = |p: &ExemplarParams| (secondary_head(y.view(), &mem, p).0.output - target).powi(2);
        let (out, blend) = secondary_head(y.view(), &mem, &params);
        let mut grad = params.zeros_like();
        let dr = 2.0 * (out.output - target) * out.output * (1.0 - out.output);
        grad.h.weight[[0, 0]] += dr * out.a;
        grad.h.bias[0] += dr;
        blend_backward(y.view(), &mem, &params, &blend, dr * params.h.weight[[0, 0]], &mut grad);
        let g = check_gradients(&params, &grad, loss, |_| true, 1e-5, 1e-7, 64, &mut rng);
        ensure(g.max_rel_error < 1e-4, || format!("head only, seed {seed}: {g:?}"))?;
        head = head.max(g.max_rel_error);
    }
    Ok(format!(
        "20 instances each, worst relative error: layer weights {layer:.1e}, attention {attn:.1e}, f/g/h {head:.1e}"
    ))
}

fn structural_invariants() -> Outcome {
    let w = LayerWeighting::new(12).weights();
    ensure((w.sum() - 1.0).abs() <= 1e-12, || format!("initial weights sum to {}", w.sum()))?;
    ensure(w.iter().all(|&v| (v - 1.0 / 12.0).abs() <= 1e-12), || format!("initial weights {w}"))?;
    let mut checked = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = small_dims(&mut rng);
        let mut lw = LayerWeighting::new(dims.layers);
        lw.raw.mapv_inplace(|_| rng.random_range(-5.0..5.0));
        let w = lw.weights();
        ensure((w.sum() - 1.0).abs() <= 1e-12 && w.iter().all(|&v| v > 0.0), || {
            format!("seed {seed}: layer weights {w}")
        })?;

        let model = PrimaryModel::init(dims, &mut rng);
        let words = rng.random_range(1..=8);
        let f = random_features(&mut rng, words, dims);
        let cache = model.forward(&f).map_err(|e| e.to_string())?;
        let alpha = cache.trunk.attention_weights();
        ensure(
            (alpha.sum() - 1.0).abs() <= 1e-12 && alpha.iter().all(|&a| a >= 0.0),
            || format!("seed {seed}: attention {alpha}"),
        )?;
        let rows = cache.trunk.blstm_output();
        for (c, &v) in cache.pooled.iter().enumerate() {
            let col = rows.column(c);
            let lo = col.fold(f64::INFINITY, |a, &b| a.min(b));
            let hi = col.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            ensure(v >= lo - 1e-12 && v <= hi + 1e-12, || format!("seed {seed}: pooled outside hull"))?;
        }
        ensure(cache.output > 0.0 && cache.output < 1.0, || format!("primary output {}", cache.output))?;

        let sec = SecondaryModel::init(dims, &mut rng);
        let mem: Vec<DecoderFeatures> = (0..3).map(|_| random_features(&mut rng, 2, dims)).collect();
        let refs: Vec<&DecoderFeatures> = mem.iter().collect();
        let (pooled, _) = sec.pool_memory(&refs, &[0.0, 0.5, 1.0]).map_err(|e| e.to_string())?;
        let s = sec.predict(&f, &pooled).map_err(|e| e.to_string())?;
        ensure(s > 0.0 && s < 1.0, || format!("secondary output {s}"))?;

        let mut ch = || Some(rng.random_range(0.0..1.0));
        let (p, q) = ([ch(), ch()], [ch(), ch()]);
        let b = better_ear(p, q).map_err(|e| e.to_string())?;
        let pmax = p[0].unwrap().max(p[1].unwrap());
        let qmax = q[0].unwrap().max(q[1].unwrap());
        ensure(b.primary == Some(pmax) && b.secondary == Some(qmax), || format!("better ear {b:?}"))?;
        ensure((b.ensemble - (pmax + qmax) / 2.0).abs() <= 1e-12, || format!("ensemble {b:?}"))?;
        checked += 1;
    }
    Ok(format!("{checked} random instances"))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn test_rmse(p: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - t[i]).powi(2);
    }
    (s / p.len() as f64).sqrt()
}

fn heldout_rmse(model: &PrimaryModel, backend: &MockBackend, n: usize, mean_label: f64) -> Result<(f64, f64), String> {
    let (source, examples) = planted_examples(backend, "heldout", n).map_err(|e| e.to_string())?;
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for e in &examples {
        let f = si_predict::features::FeatureSource::get(&source, &e.key)
            .map_err(|e| e.to_string())?
            .ok_or("missing held-out features")?;
        pred.push(model.predict(&f).map_err(|e| e.to_string())?);
        truth.push(e.label);
    }
    let constant = vec![mean_label; truth.len()];
    Ok((test_rmse(&pred, &truth), test_rmse(&constant, &truth)))
}

fn synthetic_learnability() -> Outcome {
    let backend = MockBackend::new(7).with_planted_signal().with_word_range(2, 6);
    let (source, examples) = planted_examples(&backend, "train", 128).map_err(|e| e.to_string())?;
    let config = TrainConfig {
        epochs: 5,
        batch_size: 8,
        learning_rate: 1e-4,
        seed: 3,
        dims: ModelDims::standard(),
        ..TrainConfig::defaults(ModelKind::Primary)
    };
    let outcome = train(&config, &examples, ValidationSets::default(), &source).map_err(|e| e.to_string())?;
    let h = &outcome.history.records;
    let (first, last) = (h[0].train_mse, h[h.len() - 1].train_mse);
    ensure(last <= 0.5 * first, || format!("training MSE {first:.4} -> {last:.4}"))?;
    let si_predict::model::TrainedModel::Primary(model) = outcome.final_model else {
        return Err("expected a primary model".into());
    };
    let labels: Vec<f64> = examples.iter().map(|e| e.label).collect();
    let (model_rmse, constant_rmse) = heldout_rmse(&model, &backend, 64, mean(&labels))?;
    ensure(model_rmse < constant_rmse, || {
        format!("held-out RMSE {model_rmse:.4} vs constant mean {constant_rmse:.4}")
    })?;
    Ok(format!(
        "training MSE {first:.4} -> {last:.4}; held-out RMSE {model_rmse:.4} vs constant mean {constant_rmse:.4}"
    ))
}

fn metric_suite() -> Outcome {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=60);
        let systems = ["E001", "E002", "E003", "E004", "E005"];
        let rows: Vec<(&str, f64, f64)> = (0..n)
            .map(|_| {
                let s = systems[rng.random_range(0..systems.len())];
                let t = if rng.random_bool(0.1) { 100.0 } else { rng.random_range(0.0..100.0) };
                (s, rng.random_range(0.0..100.0), t)
            })
            .collect();
        let p: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let t: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let got = rmse(&p, &t).map_err(|e| e.to_string())?;
        ensure(close(got, test_rmse(&p, &t), 1e-10), || format!("seed {seed}: rmse"))?;

        let bins = rmse_by_bin(&p, &t, 10.0).map_err(|e| e.to_string())?;
        for b in 0..10usize {
            let mut bp = Vec::new();
            let mut bt = Vec::new();
            for i in 0..n {
                let idx = if t[i] >= 100.0 { 9 } else { (t[i] / 10.0) as usize };
                if idx == b {
                    bp.push(p[i]);
                    bt.push(t[i]);
                }
            }
            let found = bins.iter().find(|x| x.center == b as f64 * 10.0 + 5.0);
            match found {
                None => ensure(bp.is_empty(), || format!("seed {seed}: bin {b} missing"))?,
                Some(x) => ensure(x.count == bp.len() && close(x.rmse, test_rmse(&bp, &bt), 1e-10), || {
                    format!("seed {seed}: bin {b} {x:?}")
                })?,
            }
        }

        let report = per_system_report(&rows).map_err(|e| e.to_string())?;
        let mut present: Vec<&str> = systems.iter().copied().filter(|s| rows.iter().any(|r| r.0 == *s)).collect();
        present.sort();
        ensure(report.systems.len() == present.len(), || format!("seed {seed}: system count"))?;
        for (stats, name) in report.systems.iter().zip(&present) {
            let sp: Vec<f64> = rows.iter().filter(|r| r.0 == *name).map(|r| r.1).collect();
            let st: Vec<f64> = rows.iter().filter(|r| r.0 == *name).map(|r| r.2).collect();
            ensure(
                stats.system == *name
                    && stats.count == sp.len()
                    && close(stats.mean_true, mean(&st), 1e-10)
                    && close(stats.mean_predicted, mean(&sp), 1e-10)
                    && close(stats.rmse, test_rmse(&sp, &st), 1e-10),
                || format!("seed {seed}: {stats:?}"),
            )?;
        }
    }

    let points = [
        (28.722, 36.5399182077136),
        (57.872, 26.95570662357407),
        (95.659, 15.267219660029815),
        (72.994, 25.265223948179752),
        (45.073, 23.842532789596014),
        (84.250, 20.522091276992835),
        (38.123, 22.774675285482896),
        (74.237, 21.560360435983355),
        (32.900, 28.096722666528382),
    ];
    let trend = fit_trend(&points).ok_or("no trend")?;
    ensure(
        (trend.slope + 0.1917).abs() <= 1e-3 && (trend.intercept - 35.819).abs() <= 1e-3,
        || format!("trend {trend:?}"),
    )?;
    Ok(format!(
        "200 random cases; trend {:.3} {:+.4} x",
        trend.intercept, trend.slope
    ))
}

fn full_data() -> Option<Outcome> {
    let path = std::env::var_os("SI_PREDICT_REPORT")?;
    Some((|| {
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", Path::new(&path).display()))?;
        let report: EvaluationReport = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let r = report.rmse_overall;
        ensure(r <= 27.0, || format!("ensemble RMSE {r:.2} above 27.0 (target 25.3 +- 1.5)"))?;
        ensure(r < report.baseline_rmse, || format!("ensemble RMSE {r:.2} not below baseline {}", report.baseline_rmse))?;
        ensure(!report.layer_weights.is_empty(), || "report has no layer weights".into())?;
        let mut peaks = Vec::new();
        for (name, w) in &report.layer_weights {
            let peak = w
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i + 1)
                .ok_or("empty layer weights")?;
            ensure((7..=8).contains(&peak), || format!("{name} layer weights peak at layer {peak}"))?;
            peaks.push(format!("{name}: layer {peak}"));
        }
        Ok(format!("ensemble RMSE {r:.2} over {} signals; peaks {}", report.count, peaks.join(", ")))
    })())
}

fn e2e_predictions(dir: &Path) -> Result<Vec<u8>, String> {
    const BACKEND: &str = "mock:4:planted:w2-5:d12x6";
    let backend: si_predict::features::FeatureBackend = BACKEND.parse().map_err(|e: si_predict::Error| e.to_string())?;
    let spec = SynthSpec {
        train_records: 72,
        eval_records: 24,
        ..SynthSpec::default()
    };
    let corpus = write_corpus(&dir.join("corpus"), &spec, backend.as_mock()).map_err(|e| e.to_string())?;
    let cache = dir.join("cache");
    let out = dir.join("run");
    let run = |args: &[&str], manifest: &Path| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_si-predict"))
            .args(args)
            .arg("--manifest")
            .arg(manifest)
            .arg("--cache")
            .arg(&cache)
            .arg("--out")
            .arg(&out)
            .args(["--backend", BACKEND, "--seed", "11", "--split", "all"])
            .env("RUST_LOG", "warn")
            .stdout(std::process::Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("si-predict {args:?} exited with {status}"))
    };
    run(&["extract"], &corpus.train_manifest)?;
    run(&["extract"], &corpus.eval_manifest)?;
    let hyper = ["--epochs", "2", "--batch-size", "4", "--lr", "1e-3"];
    run(&[&["train", "--model", "primary"][..], &hyper].concat(), &corpus.train_manifest)?;
    run(
        &[&["train", "--model", "secondary", "--exemplars", "4"][..], &hyper].concat(),
        &corpus.train_manifest,
    )?;
    run(&["evaluate"], &corpus.eval_manifest)?;
    std::fs::read(out.join("evaluation/predictions.csv")).map_err(|e| e.to_string())
}

fn reproducibility() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = e2e_predictions(a.path())?;
    let second = e2e_predictions(b.path())?;
    ensure(first.len() > 200, || "predictions CSV is suspiciously small".into())?;
    ensure(first == second, || "predictions CSVs differ between runs".into())?;
    Ok(format!("{} identical bytes over {} rows", first.len(), first.iter().filter(|&&c| c == b'\n').count() - 1))
}

fn main() {
    let criteria: [(&str, fn() -> Option<Outcome>); 8] = [
        ("parameter counts", || Some(count_parameters())),
        ("exemplar module oracle", || Some(exemplar_oracle())),
        ("gradient checks", || Some(gradient_checks())),
        ("structural invariants", || Some(structural_invariants())),
        ("synthetic learnability", || Some(synthetic_learnability())),
        ("metric suite", || Some(metric_suite())),
        ("full-data reproduction", full_data),
        ("reproducibility", || Some(reproducibility())),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Some(Ok(detail)) => println!("PASS {} {name} ({secs:.1}s): {detail}", i + 1),
            Some(Err(detail)) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {detail}", i + 1);
            }
            None => println!("SKIP {} {name}: set SI_PREDICT_REPORT to an evaluation report.json", i + 1),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
