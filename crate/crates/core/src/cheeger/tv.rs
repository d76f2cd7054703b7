use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CheegerMethod, CheegerResult};
use crate::grid::{BinaryRegion, GridDomain};
use crate::{Error, Result};

const NONE: usize = usize::MAX;

/// Controls of the total-variation bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvParams {
    /// Target width of the final bracket on `h`.
    pub tol: f64,
    /// Duality gap at which a profile evaluation stops.
    pub inner_tol: f64,
    pub max_inner: usize,
    /// Primal-dual steps between duality-gap evaluations.
    pub check_every: usize,
}

impl Default for TvParams {
    fn default() -> Self {
        Self { tol: 1e-2, inner_tol: 1e-6, max_inner: 400_000, check_every: 25 }
    }
}

/// Outcome of one profile evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Sign {
    Negative,
    NonNegative,
}

/// Primal-dual (Chambolle-Pock) solver for
/// `min { TV_up(u) - t sum u h^2 : 0 <= u <= 1 on the mask, u = 0 outside }`
/// where `TV_up(u) = h sum_i |((u_i - u_j)_+)_{j ~ i}|` is the upwind total
/// variation. State is kept between calls so that nearby `t` warm-start.
struct ProfileSolver {
    h: f64,
    area: f64,
    nodes: Vec<usize>,
    nbr: Vec<[usize; 4]>,
    u: Vec<f64>,
    ubar: Vec<f64>,
    dual: Vec<[f64; 4]>,
    kt: Vec<f64>,
    steps: usize,
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    primal: f64,
    dual: f64,
}

impl Bounds {
    fn gap(&self) -> f64 {
        self.primal - self.dual
    }
}

impl ProfileSolver {
    fn new(domain: &GridDomain) -> Self {
        let nx = domain.nx();
        let mut index = vec![NONE; domain.len()];
        let mut nodes = Vec::new();
        for (k, &ins) in domain.inside().iter().enumerate() {
            if ins {
                index[k] = nodes.len();
                nodes.push(k);
            }
        }
        let nbr = nodes
            .iter()
            .map(|&k| [index[k + 1], index[k - 1], index[k + nx], index[k - nx]])
            .collect();
        let n = nodes.len();
        Self {
            h: domain.spacing(),
            area: domain.area(),
            nodes,
            nbr,
            u: vec![0.0; n],
            ubar: vec![0.0; n],
            dual: vec![[0.0; 4]; n],
            kt: vec![0.0; n],
            steps: 0,
        }
    }

    #[inline]
    fn value(v: &[f64], j: usize) -> f64 {
        if j == NONE {
            0.0
        } else {
            v[j]
        }
    }

    /// `kt = K^T dual` with `(K u)_{i,d} = (u_i - u_{nbr_d(i)}) / h`.
    fn adjoint(&mut self) {
        let inv_h = 1.0 / self.h;
        self.kt.fill(0.0);
        for i in 0..self.nodes.len() {
            let pi = self.dual[i];
            for d in 0..4 {
                let a = pi[d] * inv_h;
                self.kt[i] += a;
                let j = self.nbr[i][d];
                if j != NONE {
                    self.kt[j] -= a;
                }
            }
        }
    }

    fn step(&mut self, t: f64) {
        let inv_h = 1.0 / self.h;
        let tau = 0.99 * self.h / 4.0;
        let sigma = tau;
        for i in 0..self.nodes.len() {
            let ui = self.ubar[i];
            let mut p = self.dual[i];
            let mut norm2 = 0.0;
            for d in 0..4 {
                let g = (ui - Self::value(&self.ubar, self.nbr[i][d])) * inv_h;
                p[d] = (p[d] + sigma * g).max(0.0);
                norm2 += p[d] * p[d];
            }
            if norm2 > 1.0 {
                let s = 1.0 / norm2.sqrt();
                p.iter_mut().for_each(|x| *x *= s);
            }
            self.dual[i] = p;
        }
        self.adjoint();
        for i in 0..self.nodes.len() {
            let old = self.u[i];
            let new = (old - tau * (self.kt[i] - t)).clamp(0.0, 1.0);
            self.u[i] = new;
            self.ubar[i] = 2.0 * new - old;
        }
        self.steps += 1;
    }

    fn bounds(&mut self, t: f64) -> Bounds {
        let h = self.h;
        let mut tv = 0.0;
        let mut mass = 0.0;
        for i in 0..self.nodes.len() {
            let ui = self.u[i];
            let mut acc = 0.0;
            for d in 0..4 {
                let g = (ui - Self::value(&self.u, self.nbr[i][d])).max(0.0);
                acc += g * g;
            }
            tv += acc.sqrt();
            mass += ui;
        }
        self.adjoint();
        let dual: f64 = self.kt.iter().map(|&k| (k - t).min(0.0)).sum();
        Bounds { primal: tv * h - t * mass * h * h, dual: dual * h * h }
    }

    fn threshold(&self, t: f64, inner_tol: f64) -> f64 {
        (10.0 * inner_tol).max(1e-6 * t * self.area)
    }

    /// Runs until the gap closes below `inner_tol` or, when `certify` is set,
    /// until the sign of `m(t)` is settled.
    fn run(&mut self, t: f64, params: &TvParams, certify: bool) -> Result<(Bounds, Option<Sign>)> {
        let thr = self.threshold(t, params.inner_tol);
        let start = self.steps;
        loop {
            for _ in 0..params.check_every {
                self.step(t);
            }
            let b = self.bounds(t);
            if certify {
                if b.primal < -thr {
                    return Ok((b, Some(Sign::Negative)));
                }
                if b.dual > -thr {
                    return Ok((b, Some(Sign::NonNegative)));
                }
            }
            if b.gap() <= params.inner_tol {
                let sign = if b.primal < -thr { Sign::Negative } else { Sign::NonNegative };
                return Ok((b, Some(sign)));
            }
            if self.steps - start >= params.max_inner {
                return Err(Error::TvNotConverged { t, gap: b.gap(), iterations: self.steps - start });
            }
        }
    }
}

/// `m(t) = min { TV(u) - t ||u||_1 : 0 <= u <= 1, u = 0 outside }` with the
/// upwind total variation, to duality gap `inner_tol`. The returned value is
/// the primal bound capped at 0 (u = 0 is feasible).
pub fn tv_profile(domain: &Arc<GridDomain>, t: f64, inner_tol: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t = {t} must be nonnegative")));
    }
    if !(inner_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("inner_tol = {inner_tol} must be positive")));
    }
    let params = TvParams { inner_tol, ..TvParams::default() };
    let mut solver = ProfileSolver::new(domain);
    let (b, _) = solver.run(t, &params, false)?;
    Ok(b.primal.min(0.0))
}

/// Bisection on `t` for the sign change of the profile `m(t)` over
/// `[0, 4 / spacing]`. The region is where the certified iterate at the
/// upper end of the final bracket exceeds half its maximum.
pub fn cheeger_tv(domain: &Arc<GridDomain>, params: &TvParams) -> Result<CheegerResult> {
    if !(params.tol > 0.0 && params.inner_tol > 0.0 && params.check_every > 0) {
        return Err(Error::InvalidArgument("TV bisection tolerances must be positive".into()));
    }
    let mut solver = ProfileSolver::new(domain);
    let (mut lo, mut hi) = (0.0, 4.0 / domain.spacing());
    let (_, sign) = solver.run(hi, params, true)?;
    if sign != Some(Sign::Negative) {
        return Err(Error::NoSignChange(format!("profile is not negative at t = {hi}")));
    }
    let mut u_hi = solver.u.clone();
    let mut iterations = 0;
    while hi - lo > params.tol {
        let mid = 0.5 * (lo + hi);
        let (_, sign) = solver.run(mid, params, true)?;
        if sign == Some(Sign::Negative) {
            hi = mid;
            u_hi.clone_from(&solver.u);
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let level = 0.5 * u_hi.iter().cloned().fold(0.0, f64::max);
    let mut mask = vec![false; domain.len()];
    for (i, &k) in solver.nodes.iter().enumerate() {
        mask[k] = u_hi[i] > level;
    }
    let region = BinaryRegion::new(domain.clone(), mask)?;
    Ok(CheegerResult {
        h: 0.5 * (lo + hi),
        method: CheegerMethod::TvBisection,
        lo,
        hi,
        iterations,
        region: Some(region),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, ShapeTag};

    fn square(n: usize) -> Arc<GridDomain> {
        Arc::new(build_domain(ShapeTag::Square { side: 1.0 }, n).unwrap())
    }

    #[test]
    fn profile_examples() {
        let d = square(48);
        assert_eq!(tv_profile(&d, 0.0, 1e-6).unwrap(), 0.0);
        assert!(tv_profile(&d, 6.0, 1e-6).unwrap() < 0.0);
        assert!(tv_profile(&d, 2.0, 1e-6).unwrap() >= -1e-6);
        assert!(tv_profile(&d, -1.0, 1e-6).is_err());
    }

    #[test]
    fn profile_is_nonincreasing() {
        let d = square(32);
        let ts: Vec<f64> = (0..10).map(|k| 3.0 + 0.4 * k as f64).collect();
        let m: Vec<f64> = ts.iter().map(|&t| tv_profile(&d, t, 1e-7).unwrap()).collect();
        for w in m.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "{m:?}");
        }
    }

    #[test]
    fn bisection_brackets_the_square_constant() {
        let d = square(48);
        let r = cheeger_tv(&d, &TvParams::default()).unwrap();
        assert!(r.lo <= r.h && r.h <= r.hi && r.hi - r.lo <= 1e-2);
        let exact = 2.0 + std::f64::consts::PI.sqrt();
        assert!((r.h - exact).abs() / exact < 0.05, "h = {}", r.h);
        let (a, p) = crate::grid::measure_region(r.region.as_ref().unwrap());
        assert!((p / a - r.h).abs() / r.h < 0.1, "ratio {}", p / a);
    }
}
