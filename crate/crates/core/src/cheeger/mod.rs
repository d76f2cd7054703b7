//! Cheeger constant `h(Omega) = inf P(E) / |E|` of a raster domain.
//!
//! Two independent routes: bisection on inner parallel sets (convex
//! domains only) and bisection on the sign of the relaxed total-variation
//! profile `m(t) = min { TV(u) - t ||u||_1 : 0 <= u <= 1 }`.

mod inner;
mod superlevel;
mod tv;

use serde::{Deserialize, Serialize};

use crate::grid::BinaryRegion;

pub use inner::cheeger_inner_parallel;
pub use superlevel::{superlevel_check, CoareaCheck, LevelRatio, SkippedLevel, SuperlevelReport};
pub use tv::{cheeger_tv, tv_profile, TvParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheegerMethod {
    InnerParallel,
    TvBisection,
}

#[derive(Debug, Clone)]
pub struct CheegerResult {
    pub h: f64,
    pub method: CheegerMethod,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
    pub region: Option<BinaryRegion>,
}

/// JSON form of a [`CheegerResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheegerSummary {
    pub h: f64,
    pub method: CheegerMethod,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

impl CheegerResult {
    pub fn summary(&self) -> CheegerSummary {
        CheegerSummary {
            h: self.h,
            method: self.method,
            lo: self.lo,
            hi: self.hi,
            iterations: self.iterations,
        }
    }
}
