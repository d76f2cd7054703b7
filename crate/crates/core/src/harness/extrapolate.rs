use serde::{Deserialize, Serialize};

use super::SweepRecord;
use crate::{Error, Result};

/// Records used by the tail fit.
pub const TAIL: usize = 3;

/// Quantities that can be extrapolated to `p = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Lambda,
    L1,
    LinfPow,
    /// `||v||_q^{q-p}`, falling back to `lambda` where `v` is undefined.
    LaneEmdenQPow,
    /// `||v||_inf^{q-p} = lambda ||u||_inf^{q-p}`.
    LaneEmdenInfPow,
}

impl Observable {
    pub fn value(self, r: &SweepRecord) -> f64 {
        match self {
            Observable::Lambda => r.lambda,
            Observable::L1 => r.l1,
            Observable::LinfPow => r.linf_pow,
            Observable::LaneEmdenQPow => r.lane_emden_q_pow.unwrap_or(r.lambda),
            Observable::LaneEmdenInfPow => r.lambda * r.linf_pow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: f64,
    pub slope: f64,
    /// Root-mean-square deviation of the tail from the fitted line.
    pub fit_residual: f64,
    pub points: usize,
}

impl Extrapolation {
    /// `fit_residual / |value|`.
    pub fn relative_residual(&self) -> f64 {
        self.fit_residual / self.value.abs()
    }
}

/// Least-squares line through `(p - 1, observable)` over the last three
/// records, evaluated at `p = 1`.
pub fn extrapolate_limit(records: &[SweepRecord], observable: Observable) -> Result<Extrapolation> {
    if records.len() < TAIL {
        return Err(Error::InvalidArgument(format!(
            "extrapolation needs {TAIL} records, got {}",
            records.len()
        )));
    }
    let tail = &records[records.len() - TAIL..];
    let xs: Vec<f64> = tail.iter().map(|r| r.p - 1.0).collect();
    let ys: Vec<f64> = tail.iter().map(|r| observable.value(r)).collect();
    let n = TAIL as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("extrapolation needs distinct values of p".into()));
    }
    let slope = sxy / sxx;
    let value = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - value - slope * x).powi(2)).sum();
    Ok(Extrapolation { value, slope, fit_residual: (ss / n).sqrt(), points: TAIL })
}
