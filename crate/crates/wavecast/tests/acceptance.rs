//! End-to-end acceptance checks for the whole toolkit. Each numbered check
//! prints exactly one PASS/FAIL/SKIP line; the process exits nonzero if any
//! check fails.
//!
//! Check 7 replays the buoy-reconstruction experiment against live NDBC
//! archives and only runs when the environment variable `WAVECAST_ALLOW_NET`
//! is set (or `--allow-net` is passed after `--`); otherwise it is reported
//! as SKIP.

use chrono::NaiveDateTime;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use wavecast::dataset::{
    build_reconstruction_set, chronological_split, ReconstructionTiming, SampleWindow, SplitSpec,
};
use wavecast::feature_select::{elastic_net_loss, feature_attribution, nonzero_percentage};
use wavecast::hypertune::{expected_improvement, tune, Candidate, Dimension, ParamGrid, TuneConfig};
use wavecast::metrics;
use wavecast::ndbc::{
    align_stations, fetch_stdmet, is_missing, merge_series, parse_stdmet, ColumnKey, FeatureId,
    StationSeries, DEFAULT_URL_TEMPLATE,
};
use wavecast::net::gradcheck::{finite_difference_gradient, max_relative_error};
use wavecast::optim::{
    adam_step, amsgrad_step, OptimizerConfig, OptimizerState, OptimizerVariant, RegularizerConfig,
};
use wavecast::seq2seq::{
    bptt_gradient, draw_epoch_mode, epsilon, forecast, persistence_forecast, train, BaselineKind,
    EpochMode, Network, RecurrentHeadModel, SchedulePolicy, Seq2SeqModel, Shapes, TrainConfig,
};
use wavecast::wave_physics::{energy_flux, spectral_moment, PhysicsConstants, SpectrumSample};

fn origin() -> NaiveDateTime {
    chrono::NaiveDate::from_ymd_opt(2010, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
}

fn series_windows(series: &[f64], t_in: usize, t_out: usize) -> Vec<SampleWindow> {
    let need = t_in + t_out;
    (0..=series.len() - need)
        .map(|o| SampleWindow {
            x: series[o..o + t_in].iter().map(|&v| vec![v]).collect(),
            y: series[o + t_in..o + need].iter().map(|&v| vec![v]).collect(),
            origin: origin() + chrono::Duration::hours(o as i64),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// 1. gradient correctness
// ---------------------------------------------------------------------------

fn check_gradients() {
    let start = Instant::now();
    let shapes = Shapes {
        input_steps: 3,
        output_steps: 2,
        input_width: 2,
        target_width: 1,
        hidden: 4,
        layers: 1,
    };
    let reg = RegularizerConfig::default();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = Seq2SeqModel::init(shapes, &mut rng, 1.0);
        let batch: Vec<SampleWindow> = (0..2)
            .map(|_| SampleWindow {
                x: (0..3)
                    .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect(),
                y: (0..2).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect(),
                origin: origin(),
            })
            .collect();
        // alternate modes so both the forced and the feedback paths are hit
        let teacher_forced = seed % 2 == 0;
        let (_, analytic) = bptt_gradient(&model, &batch, teacher_forced, &reg);
        let w = model.params().flat;
        let f = |probe: &[f64]| {
            let mut m = model.clone();
            m.set_from_flat(probe);
            elastic_net_loss(&m, &batch, teacher_forced, &reg)
        };
        let numeric = finite_difference_gradient(&f, &w, 1e-5);
        let err = max_relative_error(&analytic, &numeric, 1e-6);
        assert!(err < 1e-4, "seed {seed}: max relative error {err}");
    }
    assert!(start.elapsed().as_secs() < 60, "gradient check too slow");
}

// ---------------------------------------------------------------------------
// 2. optimizer math
// ---------------------------------------------------------------------------

fn check_optimizers() {
    // Adam's first step is a pure sign step of size alpha
    for &g in &[4.0, -0.07, 1e3, -0.01] {
        let cfg = OptimizerConfig::new(OptimizerVariant::Adam, 0.02);
        let mut state = OptimizerState::new(1);
        let mut w = [1.0];
        adam_step(&mut w, &[g], &mut state, &cfg, 0.02);
        assert!(
            (w[0] - (1.0 - 0.02 * g.signum())).abs() < 1e-6,
            "first Adam step for gradient {g}: {w:?}"
        );
    }

    // AMSGrad's second-moment max never decreases over random gradients
    let cfg = OptimizerConfig::new(OptimizerVariant::AmsGrad, 0.01);
    let mut state = OptimizerState::new(8);
    let mut w = [0.0; 8];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut prev = state.v_max.clone();
    for _ in 0..1000 {
        let grad: Vec<f64> = (0..8).map(|_| rng.gen_range(-5.0..5.0)).collect();
        amsgrad_step(&mut w, &grad, &mut state, &cfg, 0.01);
        for i in 0..8 {
            assert!(state.v_max[i] >= prev[i], "v_max decreased at index {i}");
        }
        prev.copy_from_slice(&state.v_max);
    }

    // Adam solves the scalar quadratic (w-3)^2 within budget
    let cfg = OptimizerConfig::new(OptimizerVariant::Adam, 0.1);
    let mut state = OptimizerState::new(1);
    let mut w = [0.0];
    let mut solved = false;
    for _ in 0..500 {
        let grad = [2.0 * (w[0] - 3.0)];
        adam_step(&mut w, &grad, &mut state, &cfg, 0.1);
        if (w[0] - 3.0).abs() < 0.01 {
            solved = true;
            break;
        }
    }
    assert!(solved, "Adam missed |w-3| < 0.01 within 500 steps (w = {})", w[0]);
}

// ---------------------------------------------------------------------------
// 3. teacher-forcing schedule
// ---------------------------------------------------------------------------

fn check_schedule() {
    for k in [1.0, 3.0, 20.0, 75.0] {
        // epoch 0 exactly, then strict decrease
        assert_eq!(epsilon(0, k), k / (k + 1.0));
        let mut last = f64::INFINITY;
        for ep in 0..200 {
            let e = epsilon(ep, k);
            assert!(e < last, "epsilon not strictly decreasing at epoch {ep}");
            last = e;
        }
    }

    // k = epochs = 20 keeps the forcing probability above 0.86 throughout
    let min = (0..20).map(|ep| epsilon(ep, 20.0)).fold(f64::INFINITY, f64::min);
    assert!(min > 0.86, "min epsilon {min}");

    // the final two epochs never teacher-force regardless of the draw
    let policy = SchedulePolicy::new(20.0, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        for ep in [18, 19] {
            assert_eq!(draw_epoch_mode(&policy, ep, &mut rng), EpochMode::Autoregressive);
        }
    }
}

// ---------------------------------------------------------------------------
// 4. metric oracles
// ---------------------------------------------------------------------------

fn check_metrics() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let n = rng.gen_range(1..50);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let yh: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let nf = n as f64;

        let mut sq = 0.0;
        let mut abs = 0.0;
        let mut hub = 0.0;
        let mut ape = 0.0;
        let mut kept = 0usize;
        let mut aape = 0.0;
        for i in 0..n {
            let e = y[i] - yh[i];
            sq += e * e;
            abs += e.abs();
            hub += if e.abs() <= 1.0 { 0.5 * e * e } else { e.abs() - 0.5 };
            if y[i].abs() > 1e-12 {
                ape += (e / y[i]).abs();
                kept += 1;
                aape += (e / y[i]).abs().atan();
            } else if e.abs() > 1e-12 {
                aape += FRAC_PI_2;
            }
        }
        assert!((metrics::rmse(&y, &yh).unwrap() - (sq / nf).sqrt()).abs() < 1e-12);
        assert!((metrics::mae(&y, &yh).unwrap() - abs / nf).abs() < 1e-12);
        assert!((metrics::huber(&y, &yh, 1.0).unwrap() - hub / nf).abs() < 1e-12);
        let (mape_v, skipped) = metrics::mape(&y, &yh).unwrap();
        assert_eq!(skipped, n - kept);
        if kept > 0 {
            assert!((mape_v - ape / kept as f64).abs() < 1e-12);
        }
        let maape_v = metrics::maape(&y, &yh).unwrap();
        assert!((maape_v - aape / nf).abs() < 1e-12);
        assert!(maape_v <= FRAC_PI_2 + 1e-15);

        if n >= 2 {
            let my = y.iter().sum::<f64>() / nf;
            let mh = yh.iter().sum::<f64>() / nf;
            let cov: f64 = (0..n).map(|i| (y[i] - my) * (yh[i] - mh)).sum();
            let vy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
            let vh: f64 = yh.iter().map(|v| (v - mh) * (v - mh)).sum();
            if vy > 0.0 && vh > 0.0 {
                let direct = cov / (vy.sqrt() * vh.sqrt());
                assert!((metrics::pearson_cc(&y, &yh).unwrap() - direct).abs() < 1e-12);
            }
        }
    }

    // Huber is continuous across the quadratic/linear switch
    for delta in [0.25, 1.0, 3.0] {
        let below = metrics::huber(&[delta * (1.0 - 1e-9)], &[0.0], delta).unwrap();
        let at = metrics::huber(&[delta], &[0.0], delta).unwrap();
        let above = metrics::huber(&[delta * (1.0 + 1e-9)], &[0.0], delta).unwrap();
        assert!((at - 0.5 * delta * delta).abs() < 1e-12);
        assert!((above - below).abs() < 1e-6 * delta * delta);
    }
}

// ---------------------------------------------------------------------------
// 5. wave physics
// ---------------------------------------------------------------------------

fn check_physics() {
    let freqs: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
    let flat = SpectrumSample::new(freqs, vec![1.0; 101]).unwrap();
    assert!((spectral_moment(&flat, 0).unwrap() - 1.0).abs() < 1e-3);
    assert!((spectral_moment(&flat, 1).unwrap() - 0.5).abs() < 1e-3);

    let p = energy_flux(2.0, 8.0, &PhysicsConstants::default()).unwrap();
    assert!((p - 1.5689e4).abs() / 1.5689e4 < 1e-3, "energy flux {p}");
}

// ---------------------------------------------------------------------------
// 6. synthetic learning beats persistence
// ---------------------------------------------------------------------------

fn check_synthetic_learning() {
    let start = Instant::now();
    let series: Vec<f64> = (0..2000).map(|i| (2.0 * PI * i as f64 / 24.0).sin()).collect();
    let windows = series_windows(&series, 10, 5);
    let (tr, va, te) = chronological_split(windows.len(), &SplitSpec::default()).unwrap();
    let (train_set, val_set, test_set) = (&windows[tr], &windows[va], &windows[te]);

    // best tuned setting: h=64, T=10, batch 16, lr 0.001, 1 layer,
    // lambda 0.001, k = 0.4 * epochs
    let epochs = 30;
    let shapes = Shapes {
        input_steps: 10,
        output_steps: 5,
        input_width: 1,
        target_width: 1,
        hidden: 64,
        layers: 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut model = Seq2SeqModel::init(shapes, &mut rng, 1.0);
    let mut cfg = TrainConfig::new(
        epochs,
        16,
        OptimizerConfig::new(OptimizerVariant::Adam, 0.001),
        0.4 * epochs as f64,
    );
    cfg.reg = RegularizerConfig::l2(0.001);
    let report = train(&mut model, train_set, val_set, &cfg, &mut rng).unwrap();
    assert!(!report.diverged);

    let mut truth = Vec::new();
    let mut model_pred = Vec::new();
    let mut persist_pred = Vec::new();
    for w in test_set {
        let out = forecast(&model, &w.x, 5);
        let base = persistence_forecast(&w.x, &[0], 5);
        for t in 0..5 {
            truth.push(w.y[t][0]);
            model_pred.push(out[t][0]);
            persist_pred.push(base[t][0]);
        }
    }
    let model_maape = metrics::maape(&truth, &model_pred).unwrap();
    let persist_maape = metrics::maape(&truth, &persist_pred).unwrap();
    assert!(
        model_maape < persist_maape,
        "model MAAPE {model_maape} not below persistence {persist_maape}"
    );
    assert!(start.elapsed().as_secs() < 300, "synthetic learning too slow");
}

// ---------------------------------------------------------------------------
// 7. buoy reconstruction replication (network, best effort)
// ---------------------------------------------------------------------------

fn net_allowed() -> bool {
    std::env::var_os("WAVECAST_ALLOW_NET").is_some()
        || std::env::args().any(|a| a == "--allow-net")
}

fn check_reconstruction_replication() {
    let start = Instant::now();
    let stations = ["46025", "46042", "46069"];
    let mut merged: Vec<StationSeries> = Vec::new();
    for st in stations {
        let parts: Vec<StationSeries> = [2009, 2010]
            .iter()
            .map(|&year| {
                let text = fetch_stdmet(DEFAULT_URL_TEMPLATE, st, year)
                    .unwrap_or_else(|e| panic!("fetch {st} {year}: {e}"));
                parse_stdmet(st, &text)
                    .unwrap_or_else(|e| panic!("parse {st} {year}: {e}"))
                    .0
            })
            .collect();
        merged.push(merge_series(parts));
    }
    let wanted: Vec<(String, FeatureId)> = stations
        .iter()
        .map(|s| (s.to_string(), FeatureId::Wvht))
        .collect();
    let table = align_stations(&merged, &wanted).unwrap();
    let rows = table.n_rows() as f64;
    assert!(
        (rows - 9263.0).abs() <= 0.02 * 9263.0,
        "aligned rows {rows} not within 2% of 9263"
    );

    let target = ColumnKey::feature("46069", FeatureId::Wvht);
    let inputs = [
        ColumnKey::feature("46025", FeatureId::Wvht),
        ColumnKey::feature("46042", FeatureId::Wvht),
    ];
    let windows =
        build_reconstruction_set(&table, &target, &inputs, 10, ReconstructionTiming::Nowcast)
            .unwrap();
    use chrono::Datelike;
    let train_2009: Vec<SampleWindow> = windows
        .iter()
        .filter(|w| w.origin.year() == 2009)
        .cloned()
        .collect();
    let test_2010: Vec<SampleWindow> = windows
        .iter()
        .filter(|w| w.origin.year() == 2010)
        .cloned()
        .collect();
    assert!(!train_2009.is_empty() && !test_2010.is_empty());
    let val_cut = train_2009.len() * 9 / 10;
    let (fit_set, val_set) = train_2009.split_at(val_cut);

    let shapes = Shapes {
        input_steps: 10,
        output_steps: 1,
        input_width: 2,
        target_width: 1,
        hidden: 64,
        layers: 1,
    };
    let cfg = TrainConfig::new(
        50,
        32,
        OptimizerConfig::new(OptimizerVariant::Adam, 0.001),
        20.0,
    );

    let eval = |pairs: (Vec<f64>, Vec<f64>)| {
        let (truth, pred) = pairs;
        let rmse = metrics::rmse(&truth, &pred).unwrap();
        let cc = metrics::pearson_cc(&truth, &pred).unwrap();
        (rmse, cc * cc)
    };
    let collect = |model: &dyn Fn(&[Vec<f64>]) -> f64| {
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for w in &test_2010 {
            truth.push(w.y[0][0]);
            pred.push(model(&w.x));
        }
        (truth, pred)
    };

    // SL-LSTM + FCL baseline
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut lstm = RecurrentHeadModel::build(BaselineKind::SlLstmFcl, shapes, &mut rng, 1.0);
    train(&mut lstm, fit_set, val_set, &cfg, &mut rng).unwrap();
    let (rmse, r2) = eval(collect(&|x| forecast(&lstm, x, 1)[0][0]));
    assert!(rmse <= 0.35, "SL-LSTM+FCL test RMSE {rmse}");
    assert!(r2 >= 0.72, "SL-LSTM+FCL test r^2 {r2}");

    // encoder-decoder on the same split
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut s2s = Seq2SeqModel::init(shapes, &mut rng, 1.0);
    train(&mut s2s, fit_set, val_set, &cfg, &mut rng).unwrap();
    let (_, r2_s2s) = eval(collect(&|x| forecast(&s2s, x, 1)[0][0]));
    assert!(r2_s2s >= 0.75, "seq2seq test r^2 {r2_s2s}");

    assert!(start.elapsed().as_secs() < 1800, "replication too slow");
}

// ---------------------------------------------------------------------------
// 8. elastic-net sparsity
// ---------------------------------------------------------------------------

fn check_sparsity() {
    // 10 inputs: 5 informative sinusoids, 5 pure-noise channels; the target
    // is a blend of the informative ones
    let n = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let periods = [11.0, 17.0, 23.0, 29.0, 37.0];
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let mut row: Vec<f64> = periods
                .iter()
                .enumerate()
                .map(|(j, p)| (2.0 * PI * t as f64 / p + j as f64).sin())
                .collect();
            row.extend((0..5).map(|_| rng.gen_range(-1.0..1.0)));
            row
        })
        .collect();
    let target: Vec<f64> = rows.iter().map(|r| 0.2 * r[..5].iter().sum::<f64>()).collect();

    let t_in = 6;
    let t_out = 2;
    let windows: Vec<SampleWindow> = (0..=n - t_in - t_out)
        .map(|o| SampleWindow {
            x: rows[o..o + t_in].to_vec(),
            y: (o + t_in..o + t_in + t_out).map(|r| vec![target[r]]).collect(),
            origin: origin() + chrono::Duration::hours(o as i64),
        })
        .collect();

    let shapes = Shapes {
        input_steps: t_in,
        output_steps: t_out,
        input_width: 10,
        target_width: 1,
        hidden: 8,
        layers: 1,
    };

    let run = |lambda2: f64| {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut model = Seq2SeqModel::init(shapes, &mut rng, 1.0);
        // plain SGD with decay so the final 1-norm kick is far below the
        // zero threshold and shrunk weights stay put
        let mut cfg = TrainConfig::new(
            30,
            16,
            OptimizerConfig::new(OptimizerVariant::Sgd, 0.05).with_decay(0.85),
            5.0,
        );
        cfg.reg = RegularizerConfig { lambda1: 0.0, lambda2 };
        train(&mut model, &windows, &[], &cfg, &mut rng).unwrap();
        let params = model.params();
        let density = nonzero_percentage(&params.flat).density_percent();
        let noise_mass: f64 = feature_attribution(&params, 10)
            .into_iter()
            .filter(|(idx, _)| *idx >= 5)
            .map(|(_, score)| score)
            .sum();
        (density, noise_mass)
    };

    let (d0, noise0) = run(0.0);
    let (d1, _) = run(0.01);
    let (d2, noise2) = run(0.1);
    assert!(d0 > 95.0, "density at lambda2=0 is {d0}%");
    assert!(d0 >= d1 && d1 >= d2, "density not nonincreasing: {d0} {d1} {d2}");
    assert!(
        noise2 < 0.5 * noise0,
        "noise attribution {noise2} not below half of {noise0}"
    );
}

// ---------------------------------------------------------------------------
// 9. GP-EI tuner
// ---------------------------------------------------------------------------

fn check_tuner() {
    // closed form: mu = best - 1, sigma = 1 gives z = 1 and
    // EI = Phi(1) + phi(1)
    for best in [0.0, -3.5, 12.0] {
        let ei = expected_improvement(best - 1.0, 1.0, best);
        assert!((ei - 1.0833154705876863).abs() < 1e-9, "EI {ei}");
    }

    // deterministic separable objective over a 5x5x5 grid: budget 30 must
    // land on the exhaustive optimum
    let grid = ParamGrid::new(vec![
        Dimension::new("a", (0..5).map(|i| i as f64).collect()),
        Dimension::new("b", (0..5).map(|i| i as f64).collect()),
        Dimension::new("c", (0..5).map(|i| i as f64).collect()),
    ]);
    assert_eq!(grid.len(), 125);
    let objective = |c: &Candidate| -> Result<f64, String> {
        let v: Vec<f64> = c.indices.iter().map(|&i| i as f64).collect();
        Ok((v[0] - 3.0).powi(2) + (v[1] - 1.0).powi(2) + (v[2] - 2.0).powi(2))
    };
    let exhaustive_best = (0..125)
        .map(|i| (i, objective(&grid.candidate(i)).unwrap()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let cfg = TuneConfig { budget: 30, ..TuneConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let result = tune(&grid, objective, &cfg, &mut rng, None).unwrap();
    assert_eq!(grid.flat_index(&result.best), exhaustive_best.0);
    assert_eq!(result.best_score, exhaustive_best.1);
}

// ---------------------------------------------------------------------------
// 10. parser fixtures
// ---------------------------------------------------------------------------

fn mask(record: &wavecast::ndbc::StationRecord, features: &[FeatureId]) -> Vec<FeatureId> {
    features.iter().copied().filter(|f| record.get(*f).is_none()).collect()
}

fn check_parser_fixtures() {
    use FeatureId::*;

    // 4 time columns, 2-digit years, plain header line
    let text = include_str!("data/fixture_4col.txt");
    let (series, report) = parse_stdmet("fixture4", text).unwrap();
    assert_eq!(report.rows_read, 8);
    assert_eq!(report.rows_rejected, 2);
    assert_eq!(report.duplicate_timestamps, 1);
    let expected_missing: BTreeMap<FeatureId, usize> =
        [Wdir, Wspd, Gst, Wvht, Mwd, Pres, Atmp, Dewp, Vis]
            .into_iter()
            .map(|f| (f, 1))
            .collect();
    assert_eq!(report.missing_counts, expected_missing);
    assert_eq!(series.records.len(), 5);
    let feats = series.features.clone();
    assert_eq!(feats.len(), 12);
    let hours: Vec<u32> = series
        .records
        .iter()
        .map(|r| chrono::Timelike::hour(&r.timestamp))
        .collect();
    assert_eq!(hours, vec![0, 1, 2, 3, 6]);
    assert!(series
        .records
        .iter()
        .all(|r| chrono::Datelike::year(&r.timestamp) == 1998));
    assert_eq!(mask(&series.records[0], &feats), vec![Dewp, Vis]);
    assert_eq!(mask(&series.records[1], &feats), vec![Wvht]);
    assert_eq!(mask(&series.records[2], &feats), vec![Atmp]);
    assert_eq!(mask(&series.records[3], &feats), vec![Wdir, Wspd, Gst, Mwd, Pres]);
    assert_eq!(mask(&series.records[4], &feats), vec![]);

    // the duplicate row's differing values must not have replaced the first
    assert_eq!(series.records[2].get(Wvht), Some(1.45));

    // align_stations drops exactly the rows missing a wanted feature
    let wanted = vec![
        ("fixture4".to_string(), Wvht),
        ("fixture4".to_string(), Atmp),
    ];
    let table = align_stations(std::slice::from_ref(&series), &wanted).unwrap();
    let kept: Vec<u32> = table.timestamps.iter().map(chrono::Timelike::hour).collect();
    assert_eq!(kept, vec![0, 3, 6]);

    // 5 time columns, 4-digit years, '#' header and units lines
    let text5 = include_str!("data/fixture_5col.txt");
    let (series5, report5) = parse_stdmet("fixture5", text5).unwrap();
    assert_eq!(report5.rows_read, 3);
    assert_eq!(report5.rows_rejected, 0);
    assert_eq!(report5.duplicate_timestamps, 0);
    assert_eq!(series5.records.len(), 3);
    let feats5 = series5.features.clone();
    assert_eq!(feats5.len(), 13);
    let minutes: Vec<u32> = series5
        .records
        .iter()
        .map(|r| chrono::Timelike::minute(&r.timestamp))
        .collect();
    assert_eq!(minutes, vec![0, 50, 50]);
    assert_eq!(mask(&series5.records[0], &feats5), vec![Tide]);
    assert_eq!(mask(&series5.records[1], &feats5), vec![Wvht, Dpd, Apd, Mwd, Tide]);
    assert_eq!(mask(&series5.records[2], &feats5), vec![]);
    let expected_missing5: BTreeMap<FeatureId, usize> =
        [(Wvht, 1), (Dpd, 1), (Apd, 1), (Mwd, 1), (Tide, 2)].into_iter().collect();
    assert_eq!(report5.missing_counts, expected_missing5);

    // sentinel detection itself
    assert!(is_missing(Wdir, 999.0));
    assert!(is_missing(Pres, 9999.0));
    assert!(is_missing(Wvht, 99.0));
    assert!(!is_missing(Wvht, 1.45));

    // align on WVHT alone keeps the 5-column rows that carry it
    let wanted5 = vec![("fixture5".to_string(), Wvht)];
    let table5 = align_stations(std::slice::from_ref(&series5), &wanted5).unwrap();
    assert_eq!(table5.n_rows(), 2);
}

// ---------------------------------------------------------------------------

fn run_check(n: usize, name: &str, failures: &mut usize, f: fn()) {
    let start = Instant::now();
    let result = std::panic::catch_unwind(f);
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(()) => println!("check {n:2} PASS ({secs:7.2}s)  {name}"),
        Err(cause) => {
            let msg = cause
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| cause.downcast_ref::<&str>().copied())
                .unwrap_or("panic");
            println!("check {n:2} FAIL ({secs:7.2}s)  {name}: {msg}");
            *failures += 1;
        }
    }
}

fn main() {
    // suppress the default panic backtraces; the FAIL line carries the message
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0usize;
    run_check(1, "gradient correctness vs central differences", &mut failures, check_gradients);
    run_check(2, "optimizer update math", &mut failures, check_optimizers);
    run_check(3, "teacher-forcing schedule", &mut failures, check_schedule);
    run_check(4, "metric oracles", &mut failures, check_metrics);
    run_check(5, "wave physics formulas", &mut failures, check_physics);
    run_check(6, "synthetic forecasting beats persistence", &mut failures, check_synthetic_learning);
    if net_allowed() {
        run_check(7, "buoy reconstruction replication (network)", &mut failures, check_reconstruction_replication);
    } else {
        println!("check  7 SKIP            buoy reconstruction replication (set WAVECAST_ALLOW_NET to run)");
    }
    run_check(8, "elastic-net sparsity and attribution", &mut failures, check_sparsity);
    run_check(9, "GP-EI tuner", &mut failures, check_tuner);
    run_check(10, "stdmet parser fixtures", &mut failures, check_parser_fixtures);
    let _ = std::panic::take_hook();
    if failures > 0 {
        eprintln!("{failures} acceptance check(s) failed");
        std::process::exit(1);
    }
}
