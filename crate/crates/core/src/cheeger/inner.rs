use std::f64::consts::PI;
use std::sync::Arc;

use super::{CheegerMethod, CheegerResult};
use crate::grid::{dilate, distance_to_complement, inner_region_from_distance, GridDomain};
use crate::{Error, Result};

/// Cheeger constant of a convex domain: `h = 1 / r*` where `r*` solves
/// `|Omega_r| = pi r^2`, `Omega_r` the inner parallel set at distance `r`.
/// The Cheeger set is `Omega_{r*}` dilated by `r*`.
pub fn cheeger_inner_parallel(domain: &Arc<GridDomain>, tol: f64) -> Result<CheegerResult> {
    if !domain.is_convex() {
        return Err(Error::InvalidArgument(format!(
            "inner parallel bisection needs a convex domain, got {}",
            domain.shape()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let dist = distance_to_complement(domain);
    let h2 = domain.spacing().powi(2);
    let excess = |r: f64| -> f64 {
        let count = dist
            .iter()
            .zip(domain.inside())
            .filter(|(&d, &ins)| ins && d > r)
            .count();
        count as f64 * h2 - PI * r * r
    };
    let inradius = dist.iter().fold(0.0f64, |m, &d| m.max(d));
    let (mut lo, mut hi) = (0.0, inradius);
    if !(excess(lo) > 0.0 && excess(hi) <= 0.0) {
        return Err(Error::NoSignChange(format!(
            "area of inner parallel sets minus pi r^2 keeps its sign on [0, {inradius}]"
        )));
    }
    // bisect r until the bracket on h = 1/r is narrower than tol
    let mut iterations = 0;
    while 1.0 / lo.max(f64::MIN_POSITIVE) - 1.0 / hi > tol && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let r_star = 0.5 * (lo + hi);
    let region = dilate(&inner_region_from_distance(domain, &dist, r_star), r_star);
    Ok(CheegerResult {
        h: 1.0 / r_star,
        method: CheegerMethod::InnerParallel,
        lo: 1.0 / hi,
        hi: 1.0 / lo,
        iterations,
        region: Some(region),
    })
}
