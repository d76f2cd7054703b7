use serde::Serialize;

use crate::grid::{lq_norm, measure_region, total_variation, BinaryRegion, ScalarField};
use crate::{Error, Result};

const COAREA_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRatio {
    pub t: f64,
    pub area: f64,
    pub perimeter: f64,
    pub ratio: f64,
    /// `|ratio - h_ref| / h_ref`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedLevel {
    pub t: f64,
    pub note: String,
}

/// Direct values against their level-set integrals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoareaCheck {
    pub total_variation: f64,
    pub perimeter_integral: f64,
    pub l1: f64,
    pub area_integral: f64,
}

impl CoareaCheck {
    pub fn tv_mismatch(&self) -> f64 {
        (self.total_variation - self.perimeter_integral).abs() / self.total_variation
    }

    pub fn l1_mismatch(&self) -> f64 {
        (self.l1 - self.area_integral).abs() / self.l1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperlevelReport {
    pub levels: Vec<LevelRatio>,
    pub skipped: Vec<SkippedLevel>,
    pub coarea: CoareaCheck,
}

/// Cheeger ratios `P(E_t) / |E_t|` of the superlevel sets `E_t = {u > t}`,
/// plus trapezoid checks of `TV(u) = int P(E_t) dt` and
/// `||u||_1 = int |E_t| dt` on a 64-point grid over `[0, sup u]`.
pub fn superlevel_check(u: &ScalarField, h_ref: f64, t_list: &[f64]) -> Result<SuperlevelReport> {
    if u.min() < 0.0 {
        return Err(Error::InvalidArgument("superlevel check needs u >= 0".into()));
    }
    let sup = u.sup();
    let mut levels = Vec::new();
    let mut skipped = Vec::new();
    for &t in t_list {
        if !(t > 0.0 && t < sup) {
            skipped.push(SkippedLevel { t, note: format!("outside (0, {sup})") });
            continue;
        }
        let e = BinaryRegion::superlevel(u, t);
        let (area, perimeter) = measure_region(&e);
        if area == 0.0 {
            skipped.push(SkippedLevel { t, note: "empty superlevel set".into() });
            continue;
        }
        let ratio = perimeter / area;
        levels.push(LevelRatio { t, area, perimeter, ratio, deviation: (ratio - h_ref).abs() / h_ref });
    }

    let dt = sup / (COAREA_POINTS - 1) as f64;
    let (mut per_int, mut area_int) = (0.0, 0.0);
    for k in 0..COAREA_POINTS {
        let t = k as f64 * dt;
        let (a, p) = measure_region(&BinaryRegion::superlevel(u, t));
        let w = if k == 0 || k == COAREA_POINTS - 1 { 0.5 } else { 1.0 };
        per_int += w * p * dt;
        area_int += w * a * dt;
    }
    let coarea = CoareaCheck {
        total_variation: total_variation(u),
        perimeter_integral: per_int,
        l1: lq_norm(u, 1.0)?,
        area_integral: area_int,
    };
    Ok(SuperlevelReport { levels, skipped, coarea })
}
