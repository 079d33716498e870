//! Forecast error metrics: RMSE, MAE, MAPE, MAAPE, Huber, Pearson CC and r².
//!
//! MAAPE is the headline metric for tuning and model selection since it is
//! scale independent and bounded by π/2 even when targets hit zero. MAPE
//! excludes zero targets and reports how many were skipped; MAAPE assigns the
//! π/2 limit value instead so nothing is dropped.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("correlation undefined: zero variance in {0}")]
    ZeroVariance(&'static str),
}

/// One row of evaluation results.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
    pub maape: f64,
    pub huber: f64,
    /// Pearson correlation; `None` when either series has zero variance.
    pub cc: Option<f64>,
    /// cc², `None` alongside `cc`.
    pub r2: Option<f64>,
    pub n: usize,
    pub skipped_zero_targets: usize,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "rmse,mae,mape,maape,huber,cc,r2,n,skipped_zero_targets";

    pub fn to_csv_row(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.12}")).unwrap_or_else(|| "NA".to_string())
        }
        format!(
            "{:.12},{:.12},{:.12},{:.12},{:.12},{},{},{},{}",
            self.rmse,
            self.mae,
            self.mape,
            self.maape,
            self.huber,
            opt(self.cc),
            opt(self.r2),
            self.n,
            self.skipped_zero_targets
        )
    }
}

fn check(y: &[f64], yhat: &[f64]) -> Result<(), MetricError> {
    if y.is_empty() {
        return Err(MetricError::Empty);
    }
    if y.len() != yhat.len() {
        return Err(MetricError::LengthMismatch(y.len(), yhat.len()));
    }
    Ok(())
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64, MetricError> {
    check(y, yhat)?;
    let mse: f64 = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.len() as f64;
    Ok(mse.sqrt())
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64, MetricError> {
    check(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// Mean Huber loss: quadratic within δ of zero error, linear outside.
pub fn huber(y: &[f64], yhat: &[f64], delta: f64) -> Result<f64, MetricError> {
    check(y, yhat)?;
    let total: f64 = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| {
            let e = (a - b).abs();
            if e <= delta {
                0.5 * e * e
            } else {
                delta * e - 0.5 * delta * delta
            }
        })
        .sum();
    Ok(total / y.len() as f64)
}

const MAPE_ZERO_EPS: f64 = 1e-12;

/// Mean absolute percentage error over terms with |y| > 1e-12.
/// Returns `(mape, skipped_count)`.
pub fn mape(y: &[f64], yhat: &[f64]) -> Result<(f64, usize), MetricError> {
    check(y, yhat)?;
    let mut acc = 0.0;
    let mut kept = 0usize;
    for (a, b) in y.iter().zip(yhat) {
        if a.abs() > MAPE_ZERO_EPS {
            acc += ((a - b) / a).abs();
            kept += 1;
        }
    }
    let skipped = y.len() - kept;
    let value = if kept > 0 { acc / kept as f64 } else { 0.0 };
    Ok((value, skipped))
}

/// Mean arctangent absolute percentage error; the y=0, e≠0 term contributes
/// its limit value π/2, so nothing is excluded.
pub fn maape(y: &[f64], yhat: &[f64]) -> Result<f64, MetricError> {
    check(y, yhat)?;
    let total: f64 = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| {
            let e = (a - b).abs();
            if a.abs() > MAPE_ZERO_EPS {
                (e / a.abs()).atan()
            } else if e > MAPE_ZERO_EPS {
                std::f64::consts::FRAC_PI_2
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / y.len() as f64)
}

/// Pearson correlation coefficient using population standard deviations.
pub fn pearson_cc(y: &[f64], yhat: &[f64]) -> Result<f64, MetricError> {
    check(y, yhat)?;
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mh = yhat.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vy = 0.0;
    let mut vh = 0.0;
    for (a, b) in y.iter().zip(yhat) {
        cov += (a - my) * (b - mh);
        vy += (a - my) * (a - my);
        vh += (b - mh) * (b - mh);
    }
    if vy == 0.0 {
        return Err(MetricError::ZeroVariance("truth"));
    }
    if vh == 0.0 {
        return Err(MetricError::ZeroVariance("prediction"));
    }
    Ok(cov / (vy.sqrt() * vh.sqrt()))
}

/// All metrics at once with the default δ=1 for Huber.
pub fn report(y: &[f64], yhat: &[f64]) -> Result<MetricReport, MetricError> {
    let (mape_v, skipped) = mape(y, yhat)?;
    let cc = pearson_cc(y, yhat).ok();
    Ok(MetricReport {
        rmse: rmse(y, yhat)?,
        mae: mae(y, yhat)?,
        mape: mape_v,
        maape: maape(y, yhat)?,
        huber: huber(y, yhat, 1.0)?,
        cc,
        r2: cc.map(|c| c * c),
        n: y.len(),
        skipped_zero_targets: skipped,
    })
}
