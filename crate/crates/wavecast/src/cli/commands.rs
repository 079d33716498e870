//! Subcommand implementations for the batch CLI.

use crate::cli::checkpoint::{self, AnyModel};
use crate::cli::config::{ConfigError, RunConfig};
use crate::dataset::{
    build_reconstruction_set, chronological_split, make_windows, ReconstructionTiming,
    SampleWindow, SplitSpec, WindowSpec,
};
use crate::feature_select::{feature_attribution, nonzero_percentage};
use crate::hypertune::{tune, Candidate, ParamGrid, TuneConfig};
use crate::metrics::MetricReport;
use crate::ndbc::{
    align_stations, fetch_stdmet, merge_series, parse_stdmet, AlignedTable, ColumnKey, FeatureId,
    StationSeries, DEFAULT_URL_TEMPLATE,
};
use crate::seq2seq::{
    train, BaselineKind, Network, RecurrentHeadModel, Seq2SeqModel, Shapes, TrainConfig,
    TrainReport,
};
use chrono::NaiveDateTime;
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for I/O and input-data problems, 3 for configuration problems,
    /// 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 2,
            CliError::Usage(_) | CliError::Config(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Optional `key = value` run-configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw in the run.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (reserved; the current implementation is serial).
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Permit network downloads (station fetches).
    #[arg(long, global = true)]
    pub allow_net: bool,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig, CliError> {
        match &self.config {
            Some(path) => Ok(RunConfig::from_file(path)?),
            None => Ok(RunConfig::default()),
        }
    }
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

fn parse_keys(spec: &str) -> Result<Vec<ColumnKey>, CliError> {
    spec.split(',')
        .map(|part| {
            part.trim()
                .split_once(':')
                .map(|(s, n)| ColumnKey::new(s.trim(), n.trim()))
                .ok_or_else(|| {
                    CliError::Usage(format!("column '{part}' is not STATION:FEATURE"))
                })
        })
        .collect()
}

/// Read back the CSV an `ingest` run wrote.
pub fn read_table_csv(path: &Path) -> Result<AlignedTable, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{} is empty", path.display())))?;
    let mut cols = header.split(',');
    if cols.next() != Some("timestamp") {
        return Err(CliError::Data(format!(
            "{}: first column must be 'timestamp'",
            path.display()
        )));
    }
    let keys: Vec<ColumnKey> = cols
        .map(|c| {
            c.split_once(':')
                .map(|(s, n)| ColumnKey::new(s, n))
                .ok_or_else(|| CliError::Data(format!("bad column header '{c}'")))
        })
        .collect::<Result<_, _>>()?;

    let mut timestamps = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); keys.len()];
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let ts = fields
            .next()
            .and_then(|t| NaiveDateTime::parse_from_str(t, "%Y-%m-%dT%H:%M:%SZ").ok())
            .ok_or_else(|| CliError::Data(format!("line {}: bad timestamp", lineno + 1)))?;
        timestamps.push(ts);
        for col in columns.iter_mut() {
            let v: f64 = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| CliError::Data(format!("line {}: bad value", lineno + 1)))?;
            col.push(v);
        }
        if fields.next().is_some() {
            return Err(CliError::Data(format!("line {}: too many fields", lineno + 1)));
        }
    }
    if timestamps.is_empty() {
        return Err(CliError::Data(format!("{} has no data rows", path.display())));
    }
    Ok(AlignedTable::new(
        timestamps,
        keys.into_iter().zip(columns).collect(),
    ))
}

/// Windows per split, generated within each chronological row range so no
/// window straddles a boundary.
fn split_windows(
    table: &AlignedTable,
    spec: &WindowSpec,
    stride: usize,
    split: &SplitSpec,
) -> Result<(Vec<SampleWindow>, Vec<SampleWindow>, Vec<SampleWindow>), CliError> {
    let (tr, va, te) = chronological_split(table.n_rows(), split)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let cut = |r: std::ops::Range<usize>| -> Result<Vec<SampleWindow>, CliError> {
        make_windows(&table.slice_rows(r.start, r.end), spec, stride)
            .map_err(|e| CliError::Data(e.to_string()))
    };
    Ok((cut(tr)?, cut(va)?, cut(te)?))
}

fn split_slices<T: Clone>(items: &[T], split: &SplitSpec) -> Result<(Vec<T>, Vec<T>, Vec<T>), CliError> {
    let (tr, va, te) =
        chronological_split(items.len(), split).map_err(|e| CliError::Data(e.to_string()))?;
    Ok((
        items[tr].to_vec(),
        items[va].to_vec(),
        items[te].to_vec(),
    ))
}

fn split_spec(cfg: &RunConfig) -> SplitSpec {
    SplitSpec {
        train_frac: cfg.train_frac,
        val_frac: cfg.val_frac,
        test_frac: cfg.test_frac,
    }
}

fn build_model(
    kind: &str,
    shapes: Shapes,
    cfg: &RunConfig,
    seed: u64,
) -> Result<AnyModel, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if kind == "seq2seq" {
        return Ok(AnyModel::Seq2Seq(Seq2SeqModel::init(
            shapes,
            &mut rng,
            cfg.forget_bias,
        )));
    }
    let baseline: BaselineKind = kind.parse().map_err(|e: String| CliError::Usage(e))?;
    Ok(AnyModel::Baseline(RecurrentHeadModel::build(
        baseline,
        shapes,
        &mut rng,
        cfg.forget_bias,
    )))
}

fn run_training(
    model: &mut AnyModel,
    train_set: &[SampleWindow],
    val_set: &[SampleWindow],
    cfg: &RunConfig,
    seed: u64,
) -> Result<TrainReport, CliError> {
    let mut tc = TrainConfig::new(
        cfg.epochs,
        cfg.batch_size,
        cfg.optimizer_config(),
        cfg.schedule_k(),
    );
    tc.reg = cfg.regularizer();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let report = match model {
        AnyModel::Seq2Seq(m) => train(m, train_set, val_set, &tc, &mut rng),
        AnyModel::Baseline(m) => train(m, train_set, val_set, &tc, &mut rng),
    }
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(report)
}

fn eval_metrics(model: &AnyModel, windows: &[SampleWindow]) -> Result<MetricReport, CliError> {
    let t_out = model.shapes().output_steps;
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for w in windows {
        let out = model.forecast(&w.x, t_out);
        for (yt, ot) in w.y.iter().zip(&out) {
            truth.extend_from_slice(yt);
            pred.extend_from_slice(ot);
        }
    }
    crate::metrics::report(&truth, &pred).map_err(|e| CliError::Runtime(e.to_string()))
}

fn trace_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,mode,lr,train_loss,val_maape,val_rmse\n");
    for r in &report.epochs {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12}")).unwrap_or_else(|| "NA".into());
        out.push_str(&format!(
            "{},{:?},{:.12},{:.12},{},{}\n",
            r.epoch,
            r.mode,
            r.lr,
            r.train_loss,
            opt(r.val_maape),
            opt(r.val_rmse)
        ));
    }
    out
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Standard-meteorological text files, one per station-year.
    pub inputs: Vec<PathBuf>,
    /// Station id per input file; defaults to the part of the file stem
    /// before the year suffix.
    #[arg(long)]
    pub station: Vec<String>,
    /// Download annual archives given as STATION:YEAR (needs --allow-net).
    #[arg(long)]
    pub fetch: Vec<String>,
    /// Comma-separated feature labels to align on.
    #[arg(long, default_value = "WVHT")]
    pub features: String,
    /// Output directory for aligned.csv and per-input reports.
    #[arg(long)]
    pub out: PathBuf,
}

fn station_from_stem(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_default();
    // annual archives are named like 46025h2009; strip the h+year suffix
    if let Some(pos) = stem.rfind('h') {
        let tail = &stem[pos + 1..];
        if tail.len() == 4 && tail.chars().all(|c| c.is_ascii_digit()) {
            return stem[..pos].to_string();
        }
    }
    stem
}

pub fn run_ingest(args: &IngestArgs, common: &Common) -> Result<(), CliError> {
    if args.inputs.is_empty() && args.fetch.is_empty() {
        return Err(CliError::Usage("no inputs given".into()));
    }
    if !args.station.is_empty() && args.station.len() != args.inputs.len() {
        return Err(CliError::Usage(
            "--station must be given once per input file".into(),
        ));
    }
    if !args.fetch.is_empty() && !common.allow_net {
        return Err(CliError::Usage("--fetch requires --allow-net".into()));
    }

    let features: Vec<FeatureId> = args
        .features
        .split(',')
        .map(|f| {
            FeatureId::from_label(f.trim())
                .ok_or_else(|| CliError::Usage(format!("unknown feature '{f}'")))
        })
        .collect::<Result<_, _>>()?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;

    let mut parses: Vec<StationSeries> = Vec::new();
    for (i, path) in args.inputs.iter().enumerate() {
        let station = args
            .station
            .get(i)
            .cloned()
            .unwrap_or_else(|| station_from_stem(path));
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let (series, report) =
            parse_stdmet(&station, &text).map_err(|e| CliError::Data(e.to_string()))?;
        println!("{station} ({}): {}", path.display(), report.summary());
        let report_path = args.out.join(format!(
            "{}.report.csv",
            path.file_stem().unwrap_or_default().to_string_lossy()
        ));
        write_out(&report_path, &report.to_csv())?;
        parses.push(series);
    }
    for spec in &args.fetch {
        let (station, year) = spec
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("--fetch '{spec}' is not STATION:YEAR")))?;
        let year: i32 = year
            .parse()
            .map_err(|_| CliError::Usage(format!("bad year in --fetch '{spec}'")))?;
        let text = fetch_stdmet(DEFAULT_URL_TEMPLATE, station, year)
            .map_err(|e| CliError::Data(e.to_string()))?;
        let (series, report) =
            parse_stdmet(station, &text).map_err(|e| CliError::Data(e.to_string()))?;
        println!("{station} ({year}, fetched): {}", report.summary());
        write_out(
            &args.out.join(format!("{station}h{year}.report.csv")),
            &report.to_csv(),
        )?;
        parses.push(series);
    }

    // several files of the same station become one chronological series
    let mut merged: Vec<StationSeries> = Vec::new();
    for series in parses {
        match merged.iter_mut().position(|m| m.station_id == series.station_id) {
            Some(i) => {
                let existing = merged.remove(i);
                merged.insert(i, merge_series(vec![existing, series]));
            }
            None => merged.push(series),
        }
    }

    let wanted: Vec<(String, FeatureId)> = merged
        .iter()
        .flat_map(|s| features.iter().map(|f| (s.station_id.clone(), *f)))
        .collect();
    let table = align_stations(&merged, &wanted).map_err(|e| CliError::Data(e.to_string()))?;
    let aligned_path = args.out.join("aligned.csv");
    write_out(&aligned_path, &table.to_csv())?;
    println!(
        "aligned {} rows x {} columns -> {}",
        table.n_rows(),
        wanted.len(),
        aligned_path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Aligned table CSV (output of `ingest`).
    pub data: PathBuf,
    /// Target column as STATION:FEATURE.
    #[arg(long)]
    pub target: String,
    /// Comma-separated input columns; defaults to the target.
    #[arg(long)]
    pub inputs: Option<String>,
    /// Network kind: seq2seq, sl-rnn, ml-rnn, sl-lstm or ml-lstm.
    #[arg(long, default_value = "seq2seq")]
    pub model: String,
    /// Checkpoint prefix; writes <out>.bin, <out>.manifest and <out>.trace.csv.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_train(args: &TrainArgs, common: &Common) -> Result<(), CliError> {
    let cfg = common.run_config()?;
    let table = read_table_csv(&args.data)?;
    let targets = parse_keys(&args.target)?;
    let inputs = match &args.inputs {
        Some(spec) => parse_keys(spec)?,
        None => targets.clone(),
    };
    let spec = WindowSpec {
        input_steps: cfg.input_steps,
        output_steps: cfg.output_steps,
        input_features: inputs,
        target_features: targets,
    };
    let (train_set, val_set, test_set) = split_windows(&table, &spec, cfg.stride, &split_spec(&cfg))?;
    println!(
        "windows: {} train / {} val / {} test",
        train_set.len(),
        val_set.len(),
        test_set.len()
    );

    let shapes = Shapes {
        input_steps: spec.input_steps,
        output_steps: spec.output_steps,
        input_width: spec.input_width(),
        target_width: spec.target_width(),
        hidden: cfg.hidden,
        layers: cfg.layers,
    };
    let mut model = build_model(&args.model, shapes, &cfg, common.seed)?;
    let report = run_training(&mut model, &train_set, &val_set, &cfg, common.seed)?;
    if report.diverged {
        eprintln!("warning: training diverged; keeping the best weights seen");
    }
    println!(
        "best epoch {} (selection score {:.6})",
        report.best_epoch, report.best_score
    );

    let metrics = eval_metrics(&model, &test_set)?;
    println!("{}", MetricReport::CSV_HEADER);
    println!("{}", metrics.to_csv_row());

    checkpoint::save(&args.out, &model).map_err(|e| CliError::Data(e.to_string()))?;
    let trace_path = PathBuf::from(format!("{}.trace.csv", args.out.display()));
    write_out(&trace_path, &trace_csv(&report))?;
    println!("checkpoint written to {}.bin", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// forecast
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Aligned table CSV to forecast over.
    pub data: PathBuf,
    /// Checkpoint prefix written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Target column as STATION:FEATURE.
    #[arg(long)]
    pub target: String,
    /// Comma-separated input columns; defaults to the target.
    #[arg(long)]
    pub inputs: Option<String>,
    /// Predictions CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_forecast(args: &ForecastArgs, common: &Common) -> Result<(), CliError> {
    let cfg = common.run_config()?;
    let model = checkpoint::load(&args.checkpoint).map_err(|e| CliError::Data(e.to_string()))?;
    let shapes = model.shapes();
    let table = read_table_csv(&args.data)?;
    let targets = parse_keys(&args.target)?;
    let inputs = match &args.inputs {
        Some(spec) => parse_keys(spec)?,
        None => targets.clone(),
    };
    if inputs.len() != shapes.input_width || targets.len() != shapes.target_width {
        return Err(CliError::Usage(format!(
            "checkpoint expects {} input / {} target columns",
            shapes.input_width, shapes.target_width
        )));
    }
    let spec = WindowSpec {
        input_steps: shapes.input_steps,
        output_steps: shapes.output_steps,
        input_features: inputs,
        target_features: targets,
    };
    let windows =
        make_windows(&table, &spec, cfg.stride).map_err(|e| CliError::Data(e.to_string()))?;

    let mut csv = String::from("origin");
    for t in 0..shapes.output_steps {
        for j in 0..shapes.target_width {
            csv.push_str(&format!(",truth{t}_{j},pred{t}_{j}"));
        }
    }
    csv.push('\n');
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for w in &windows {
        let out = model.forecast(&w.x, shapes.output_steps);
        csv.push_str(&w.origin.format("%Y-%m-%dT%H:%M:%SZ").to_string());
        for (yt, ot) in w.y.iter().zip(&out) {
            for (a, b) in yt.iter().zip(ot) {
                csv.push_str(&format!(",{a:.12},{b:.12}"));
                truth.push(*a);
                pred.push(*b);
            }
        }
        csv.push('\n');
    }
    let metrics = crate::metrics::report(&truth, &pred).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("{}", MetricReport::CSV_HEADER);
    println!("{}", metrics.to_csv_row());
    if let Some(out) = &args.out {
        write_out(out, &csv)?;
        println!("predictions written to {}", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Aligned table CSV covering the target and its neighbor stations.
    pub data: PathBuf,
    /// Column to reconstruct, as STATION:FEATURE.
    #[arg(long)]
    pub target: String,
    /// Comma-separated neighbor columns used as inputs.
    #[arg(long)]
    pub inputs: String,
    /// Network kind: seq2seq, sl-rnn, ml-rnn, sl-lstm or ml-lstm.
    #[arg(long, default_value = "sl-lstm")]
    pub model: String,
    /// Target timing relative to the inputs: nowcast or one-step-ahead.
    #[arg(long, default_value = "nowcast")]
    pub timing: String,
    /// Optional checkpoint prefix for the fitted model.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_reconstruct(args: &ReconstructArgs, common: &Common) -> Result<(), CliError> {
    let cfg = common.run_config()?;
    let table = read_table_csv(&args.data)?;
    let target = parse_keys(&args.target)?
        .into_iter()
        .next()
        .expect("parse_keys yields at least one key");
    let inputs = parse_keys(&args.inputs)?;
    let timing = match args.timing.as_str() {
        "nowcast" => ReconstructionTiming::Nowcast,
        "one-step-ahead" => ReconstructionTiming::OneStepAhead,
        other => return Err(CliError::Usage(format!("unknown timing '{other}'"))),
    };
    let windows = build_reconstruction_set(&table, &target, &inputs, cfg.input_steps, timing)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let (train_set, val_set, test_set) = split_slices(&windows, &split_spec(&cfg))?;
    println!(
        "reconstruction windows: {} train / {} val / {} test",
        train_set.len(),
        val_set.len(),
        test_set.len()
    );

    let shapes = Shapes {
        input_steps: cfg.input_steps,
        output_steps: 1,
        input_width: inputs.len(),
        target_width: 1,
        hidden: cfg.hidden,
        layers: cfg.layers,
    };
    let mut model = build_model(&args.model, shapes, &cfg, common.seed)?;
    let report = run_training(&mut model, &train_set, &val_set, &cfg, common.seed)?;
    println!(
        "best epoch {} (selection score {:.6})",
        report.best_epoch, report.best_score
    );
    let metrics = eval_metrics(&model, &test_set)?;
    println!("{}", MetricReport::CSV_HEADER);
    println!("{}", metrics.to_csv_row());
    if let Some(out) = &args.out {
        checkpoint::save(out, &model).map_err(|e| CliError::Data(e.to_string()))?;
        println!("checkpoint written to {}.bin", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Aligned table CSV to tune against.
    pub data: PathBuf,
    /// Target column as STATION:FEATURE.
    #[arg(long)]
    pub target: String,
    /// Comma-separated input columns; defaults to the target.
    #[arg(long)]
    pub inputs: Option<String>,
    /// Objective evaluations to spend.
    #[arg(long, default_value_t = 30)]
    pub budget: usize,
    /// CSV ledger; existing rows are resumed, new ones appended.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Write the best candidate as a run-configuration file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_tune(args: &TuneArgs, common: &Common) -> Result<(), CliError> {
    let base = common.run_config()?;
    let table = read_table_csv(&args.data)?;
    let targets = parse_keys(&args.target)?;
    let inputs = match &args.inputs {
        Some(spec) => parse_keys(spec)?,
        None => targets.clone(),
    };
    let grid = ParamGrid::forecasting_default();

    let objective = |c: &Candidate| -> Result<f64, String> {
        let v = grid.values(c);
        let mut cfg = base.clone();
        cfg.hidden = v[0] as usize;
        cfg.input_steps = v[1] as usize;
        cfg.batch_size = v[2] as usize;
        cfg.learning_rate = v[3];
        cfg.layers = v[4] as usize;
        cfg.lambda1 = v[5];
        cfg.k_fraction = v[6];
        let spec = WindowSpec {
            input_steps: cfg.input_steps,
            output_steps: cfg.output_steps,
            input_features: inputs.clone(),
            target_features: targets.clone(),
        };
        let (train_set, val_set, _) = split_windows(&table, &spec, cfg.stride, &split_spec(&cfg))
            .map_err(|e| e.to_string())?;
        let shapes = Shapes {
            input_steps: spec.input_steps,
            output_steps: spec.output_steps,
            input_width: spec.input_width(),
            target_width: spec.target_width(),
            hidden: cfg.hidden,
            layers: cfg.layers,
        };
        let mut model = build_model("seq2seq", shapes, &cfg, common.seed).map_err(|e| e.to_string())?;
        let report = run_training(&mut model, &train_set, &val_set, &cfg, common.seed)
            .map_err(|e| e.to_string())?;
        if report.diverged {
            return Err("diverged".into());
        }
        Ok(report.best_score)
    };

    let tune_cfg = TuneConfig {
        budget: args.budget,
        ..TuneConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed.wrapping_add(99));
    let result = tune(&grid, objective, &tune_cfg, &mut rng, args.ledger.as_deref())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("evaluations: {}", result.history.len());
    println!("best score: {:.6}", result.best_score);
    let mut best_cfg = String::new();
    for (dim, value) in grid.dims.iter().zip(grid.values(&result.best)) {
        println!("  {} = {}", dim.name, value);
        // the grid's shared "lambda" strength maps onto the 2-norm key
        let key = if dim.name == "lambda" { "lambda1" } else { dim.name.as_str() };
        best_cfg.push_str(&format!("{key} = {value}\n"));
    }
    if let Some(out) = &args.out {
        write_out(out, &best_cfg)?;
        println!("best candidate written to {}", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Ground-truth values, one per line (header optional).
    #[arg(long)]
    pub truth: PathBuf,
    /// Predicted values, one per line (header optional).
    #[arg(long)]
    pub pred: PathBuf,
    /// Optional path for the metric report CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_value_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => values.push(v),
            // a single non-numeric first line is tolerated as a header
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(CliError::Data(format!(
                    "{} line {}: '{line}' is not a number",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::Data(format!("{} has no values", path.display())));
    }
    Ok(values)
}

pub fn run_metrics(args: &MetricsArgs, _common: &Common) -> Result<(), CliError> {
    let truth = read_value_column(&args.truth)?;
    let pred = read_value_column(&args.pred)?;
    let report = crate::metrics::report(&truth, &pred).map_err(|e| CliError::Data(e.to_string()))?;
    let csv = format!("{}\n{}\n", MetricReport::CSV_HEADER, report.to_csv_row());
    print!("{csv}");
    if let Some(out) = &args.out {
        write_out(out, &csv)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// select-features
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct SelectFeaturesArgs {
    /// Aligned table CSV.
    pub data: PathBuf,
    /// Target column as STATION:FEATURE.
    #[arg(long)]
    pub target: String,
    /// Comma-separated candidate input columns.
    #[arg(long)]
    pub inputs: String,
    /// Comma-separated 1-norm strengths to sweep.
    #[arg(long, default_value = "0.0,0.01,0.1")]
    pub lambda2: String,
    /// Optional CSV output with one row per (lambda2, feature).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_select_features(args: &SelectFeaturesArgs, common: &Common) -> Result<(), CliError> {
    let base = common.run_config()?;
    let table = read_table_csv(&args.data)?;
    let targets = parse_keys(&args.target)?;
    let inputs = parse_keys(&args.inputs)?;
    let lambdas: Vec<f64> = args
        .lambda2
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad lambda2 value '{v}'")))
        })
        .collect::<Result<_, _>>()?;

    let spec = WindowSpec {
        input_steps: base.input_steps,
        output_steps: base.output_steps,
        input_features: inputs.clone(),
        target_features: targets,
    };
    let (train_set, val_set, _) = split_windows(&table, &spec, base.stride, &split_spec(&base))?;
    let shapes = Shapes {
        input_steps: spec.input_steps,
        output_steps: spec.output_steps,
        input_width: spec.input_width(),
        target_width: spec.target_width(),
        hidden: base.hidden,
        layers: base.layers,
    };

    let mut csv = String::from("lambda2,density_percent,feature,column,score\n");
    for &l2 in &lambdas {
        let mut cfg = base.clone();
        cfg.lambda2 = l2;
        let mut model = build_model("seq2seq", shapes, &cfg, common.seed)?;
        run_training(&mut model, &train_set, &val_set, &cfg, common.seed)?;
        let params = match &model {
            AnyModel::Seq2Seq(m) => m.params(),
            AnyModel::Baseline(m) => m.params(),
        };
        let sparsity = nonzero_percentage(&params.flat);
        let ranked = feature_attribution(&params, inputs.len());
        println!(
            "lambda2 = {l2}: {:.1}% of {} weights nonzero",
            sparsity.density_percent(),
            sparsity.total
        );
        for (rank, (idx, score)) in ranked.iter().enumerate() {
            println!("  #{:<2} {} ({score:.4})", rank + 1, inputs[*idx]);
            csv.push_str(&format!(
                "{l2},{:.6},{idx},{},{score:.12}\n",
                sparsity.density_percent(),
                inputs[*idx]
            ));
        }
    }
    if let Some(out) = &args.out {
        write_out(out, &csv)?;
    }
    Ok(())
}
