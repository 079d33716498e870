//! Supervised window construction over aligned tables: forecasting windows
//! (historical inputs → future targets), reconstruction windows (neighbor
//! observations → contemporaneous target) and chronological 60/20/20 splits.
//!
//! Raw measurements are used as-is; an optional affine scaler (fit on the
//! training split only) exists behind a flag for callers that want it.

use crate::ndbc::{AlignedTable, ColumnKey};
use crate::wave_physics::{energy_flux, PhysicsConstants, PhysicsError};
use chrono::NaiveDateTime;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("table has {n} rows but a window needs {need}")]
    TooFewRows { n: usize, need: usize },
    #[error("split fractions must be nonnegative and sum to 1, got {0}")]
    BadSplit(f64),
    #[error("split needs at least 3 rows, got {0}")]
    SplitTooSmall(usize),
    #[error("split range '{0}' is empty")]
    EmptyRange(&'static str),
    #[error("column {0} not found in table")]
    MissingColumn(String),
    #[error("reconstruction inputs list is empty")]
    NoInputs,
    #[error("reconstruction target duplicates an input column")]
    TargetIsInput,
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

/// Shape of one supervised example: `T` input steps of `d` features mapping
/// to `T_out` output steps of `m` targets.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    pub input_steps: usize,
    pub output_steps: usize,
    pub input_features: Vec<ColumnKey>,
    pub target_features: Vec<ColumnKey>,
}

impl WindowSpec {
    pub fn input_width(&self) -> usize {
        self.input_features.len()
    }

    pub fn target_width(&self) -> usize {
        self.target_features.len()
    }
}

/// One training example: a T×d input matrix and T'×m target matrix, both
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    /// T rows of d features.
    pub x: Vec<Vec<f64>>,
    /// T_out rows of m targets.
    pub y: Vec<Vec<f64>>,
    pub origin: NaiveDateTime,
}

/// Chronological split fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
        }
    }
}

/// Slide a window of `T` inputs and `T_out` targets over the table at the
/// given stride. Offsets run 0, stride, 2·stride, …; the count is
/// floor((n − T − T_out)/stride) + 1.
pub fn make_windows(
    table: &AlignedTable,
    spec: &WindowSpec,
    stride: usize,
) -> Result<Vec<SampleWindow>, DatasetError> {
    assert!(stride >= 1, "stride must be positive");
    let n = table.n_rows();
    let need = spec.input_steps + spec.output_steps;
    if n < need {
        return Err(DatasetError::TooFewRows { n, need });
    }
    let inputs = resolve_columns(table, &spec.input_features)?;
    let targets = resolve_columns(table, &spec.target_features)?;

    let count = (n - need) / stride + 1;
    let mut windows = Vec::with_capacity(count);
    for w in 0..count {
        let o = w * stride;
        let x = (o..o + spec.input_steps)
            .map(|r| inputs.iter().map(|c| c[r]).collect())
            .collect();
        let y = (o + spec.input_steps..o + need)
            .map(|r| targets.iter().map(|c| c[r]).collect())
            .collect();
        windows.push(SampleWindow {
            x,
            y,
            origin: table.timestamps[o],
        });
    }
    Ok(windows)
}

fn resolve_columns<'a>(
    table: &'a AlignedTable,
    keys: &[ColumnKey],
) -> Result<Vec<&'a [f64]>, DatasetError> {
    keys.iter()
        .map(|k| {
            table
                .column(k)
                .ok_or_else(|| DatasetError::MissingColumn(k.to_string()))
        })
        .collect()
}

/// Contiguous chronological index ranges for train/validation/test.
/// Windows are generated within each range independently so no window
/// straddles a boundary.
pub fn chronological_split(
    n: usize,
    s: &SplitSpec,
) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>, std::ops::Range<usize>), DatasetError> {
    let sum = s.train_frac + s.val_frac + s.test_frac;
    if s.train_frac < 0.0 || s.val_frac < 0.0 || s.test_frac < 0.0 || (sum - 1.0).abs() > 1e-9 {
        return Err(DatasetError::BadSplit(sum));
    }
    if n < 3 {
        return Err(DatasetError::SplitTooSmall(n));
    }
    let a = (s.train_frac * n as f64).floor() as usize;
    let b = ((s.train_frac + s.val_frac) * n as f64).floor() as usize;
    let (train, val, test) = (0..a, a..b, b..n);
    if train.is_empty() {
        return Err(DatasetError::EmptyRange("train"));
    }
    if val.is_empty() {
        return Err(DatasetError::EmptyRange("validation"));
    }
    if test.is_empty() {
        return Err(DatasetError::EmptyRange("test"));
    }
    Ok((train, val, test))
}

/// Reconstruction timing: whether the target is contemporaneous with the
/// latest observed inputs (nowcast) or one step after them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReconstructionTiming {
    /// Target at row o+T−1, the last observed input row.
    #[default]
    Nowcast,
    /// Target at row o+T, one step ahead of the inputs.
    OneStepAhead,
}

/// Build windows for the reconstruction task: T rows of neighbor features as
/// input, a single 1×1 target per window.
pub fn build_reconstruction_set(
    table: &AlignedTable,
    target: &ColumnKey,
    inputs: &[ColumnKey],
    input_steps: usize,
    timing: ReconstructionTiming,
) -> Result<Vec<SampleWindow>, DatasetError> {
    if inputs.is_empty() {
        return Err(DatasetError::NoInputs);
    }
    if inputs.contains(target) {
        return Err(DatasetError::TargetIsInput);
    }
    let n = table.n_rows();
    let extra = match timing {
        ReconstructionTiming::Nowcast => 0,
        ReconstructionTiming::OneStepAhead => 1,
    };
    let need = input_steps + extra;
    if n < need {
        return Err(DatasetError::TooFewRows { n, need });
    }
    let input_cols = resolve_columns(table, inputs)?;
    let target_col = table
        .column(target)
        .ok_or_else(|| DatasetError::MissingColumn(target.to_string()))?;

    let count = n - need + 1;
    let mut windows = Vec::with_capacity(count);
    for o in 0..count {
        let x: Vec<Vec<f64>> = (o..o + input_steps)
            .map(|r| input_cols.iter().map(|c| c[r]).collect())
            .collect();
        let target_row = o + input_steps - 1 + extra;
        windows.push(SampleWindow {
            x,
            y: vec![vec![target_col[target_row]]],
            origin: table.timestamps[o],
        });
    }
    Ok(windows)
}

/// Append a `POWER` column computed from the station's WVHT and APD columns.
pub fn derive_power_column(
    table: &mut AlignedTable,
    station: &str,
    c: &PhysicsConstants,
) -> Result<ColumnKey, DatasetError> {
    let hs_key = ColumnKey::new(station, "WVHT");
    let apd_key = ColumnKey::new(station, "APD");
    let hs = table
        .column(&hs_key)
        .ok_or_else(|| DatasetError::MissingColumn(hs_key.to_string()))?
        .to_vec();
    let apd = table
        .column(&apd_key)
        .ok_or_else(|| DatasetError::MissingColumn(apd_key.to_string()))?
        .to_vec();
    let power: Result<Vec<f64>, PhysicsError> = hs
        .iter()
        .zip(&apd)
        .map(|(h, a)| energy_flux(*h, *a, c))
        .collect();
    let key = ColumnKey::new(station, "POWER");
    table.push_column(key.clone(), power?);
    Ok(key)
}

/// Per-feature affine scaler (opt-in; fit on the training split only).
#[derive(Debug, Clone)]
pub struct AffineScaler {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl AffineScaler {
    /// Fit mean/std per input feature over the given windows.
    pub fn fit(windows: &[SampleWindow]) -> Option<Self> {
        let d = windows.first()?.x.first()?.len();
        let mut sum = vec![0.0; d];
        let mut sumsq = vec![0.0; d];
        let mut n = 0usize;
        for w in windows {
            for row in &w.x {
                for (j, v) in row.iter().enumerate() {
                    sum[j] += v;
                    sumsq[j] += v * v;
                }
                n += 1;
            }
        }
        let shift: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let scale: Vec<f64> = sumsq
            .iter()
            .zip(&shift)
            .map(|(sq, m)| {
                let var = sq / n as f64 - m * m;
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Some(AffineScaler { shift, scale })
    }

    pub fn apply(&self, windows: &mut [SampleWindow]) {
        for w in windows {
            for row in &mut w.x {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = (*v - self.shift[j]) / self.scale[j];
                }
            }
        }
    }
}

/// Serialize windows as CSV, one row per window: x flattened row-major, then y.
pub fn windows_to_csv(windows: &[SampleWindow]) -> String {
    let mut out = String::new();
    if let Some(first) = windows.first() {
        let t = first.x.len();
        let d = first.x[0].len();
        let t_out = first.y.len();
        let m = first.y[0].len();
        out.push_str("origin");
        for i in 0..t {
            for j in 0..d {
                out.push_str(&format!(",x{i}_{j}"));
            }
        }
        for i in 0..t_out {
            for j in 0..m {
                out.push_str(&format!(",y{i}_{j}"));
            }
        }
        out.push('\n');
    }
    for w in windows {
        out.push_str(&w.origin.format("%Y-%m-%dT%H:%M:%SZ").to_string());
        for row in w.x.iter().chain(w.y.iter()) {
            for v in row {
                out.push_str(&format!(",{v:.12}"));
            }
        }
        out.push('\n');
    }
    out
}
