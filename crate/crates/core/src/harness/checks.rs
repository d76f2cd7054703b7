use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{extrapolate_limit, Extrapolation, Observable, Sweep, SweepRecord};
use crate::cheeger::{superlevel_check, SuperlevelReport};
use crate::grid::{distance_to_complement, lq_norm, rayleigh_quotient, GridDomain, ScalarField};
use crate::plap::{minimize_rayleigh, SolveParams, SolveResult};
use crate::special::{ball_cheeger, beta, sobolev_constant, BallSize, SobolevParams};
use crate::{Error, Result};

/// Planar dimension used by every grid check.
const N: u32 = 2;

/// Tolerances of the limit checks. Relative unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub lambda: f64,
    pub path_agreement: f64,
    /// Absolute, on `||u||_1` against 1.
    pub l1: f64,
    /// Absolute, on `||u||_inf^{q-p}` against 1.
    pub linf_pow: f64,
    pub linf_bounds: f64,
    pub superlevel: f64,
    pub coarea_tv: f64,
    pub coarea_l1: f64,
    /// Slack on `lambda <= h` for records with `p <= 1.1`.
    pub upper_limit: f64,
    pub fit_residual: f64,
    pub estim_slack: f64,
    pub lane_emden: f64,
    /// Factor on `h` bounding `||v||_inf^{q-p}` across a sweep.
    pub lane_emden_bound: f64,
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lambda: 0.05,
            path_agreement: 0.04,
            l1: 0.03,
            linf_pow: 0.05,
            linf_bounds: 0.15,
            superlevel: 0.10,
            coarea_tv: 0.03,
            coarea_l1: 0.01,
            upper_limit: 0.10,
            fit_residual: 0.10,
            estim_slack: 0.01,
            lane_emden: 0.07,
            lane_emden_bound: 2.0,
            identity: 1e-10,
        }
    }
}

/// One named verdict with its numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckEntry {
    /// `|value - reference| <= tolerance |reference|`.
    pub fn relative(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        let pass = (value - reference).abs() <= tolerance * reference.abs();
        Self { name: name.into(), value, reference, tolerance, pass }
    }

    /// `|value - reference| <= tolerance`.
    pub fn absolute(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        let pass = (value - reference).abs() <= tolerance;
        Self { name: name.into(), value, reference, tolerance, pass }
    }

    /// `value <= reference (1 + tolerance)`.
    pub fn at_most(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        let pass = value <= reference * (1.0 + tolerance);
        Self { name: name.into(), value, reference, tolerance, pass }
    }

    /// `value >= reference (1 - tolerance)`.
    pub fn at_least(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        let pass = value >= reference * (1.0 - tolerance);
        Self { name: name.into(), value, reference, tolerance, pass }
    }

    pub fn failed(name: impl Into<String>, reference: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value: f64::NAN, reference, tolerance, pass: false }
    }
}

/// Limit verdicts for one sweep.
#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub path: String,
    pub h_ref: f64,
    pub extrapolated_lambda: Option<Extrapolation>,
    pub extrapolated_l1: Option<Extrapolation>,
    pub extrapolated_linf_pow: Option<Extrapolation>,
    pub checks: Vec<CheckEntry>,
    pub superlevel: Option<SuperlevelReport>,
}

impl LimitReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn limit_checks(
    checks: &mut Vec<CheckEntry>,
    records: &[SweepRecord],
    observable: Observable,
    name: &str,
    reference: f64,
    tol: f64,
    relative: bool,
    fit_tol: f64,
) -> Option<Extrapolation> {
    match extrapolate_limit(records, observable) {
        Ok(e) => {
            checks.push(if relative {
                CheckEntry::relative(name, e.value, reference, tol)
            } else {
                CheckEntry::absolute(name, e.value, reference, tol)
            });
            checks.push(CheckEntry::at_most(format!("{name}_fit"), e.relative_residual(), fit_tol, 0.0));
            Some(e)
        }
        Err(_) => {
            checks.push(CheckEntry::failed(name, reference, tol));
            None
        }
    }
}

/// Extrapolated limits of `lambda`, `||u||_1` and `||u||_inf^{q-p}`, the
/// bounds on `||u||_inf` and the superlevel ratios at the smallest `p`, and
/// `lambda <= h` near `p = 1`.
pub fn check_theorem_main(sweep: &Sweep, h_ref: f64, tol: &Tolerances) -> LimitReport {
    let records = &sweep.records;
    let mut checks = Vec::new();
    if let Some(err) = &sweep.aborted {
        checks.push(CheckEntry::failed(format!("sweep_complete: {err}"), 0.0, 0.0));
    }
    let lam = limit_checks(&mut checks, records, Observable::Lambda, "lambda_limit", h_ref, tol.lambda, true, tol.fit_residual);
    let l1 = limit_checks(&mut checks, records, Observable::L1, "l1_limit", 1.0, tol.l1, false, tol.fit_residual);
    let linf = limit_checks(&mut checks, records, Observable::LinfPow, "linf_pow_limit", 1.0, tol.linf_pow, false, tol.fit_residual);

    let near_one: Vec<&SweepRecord> = records.iter().filter(|r| r.p <= 1.1 + 1e-12).collect();
    if !near_one.is_empty() {
        let worst = near_one.iter().map(|r| r.lambda).fold(f64::NEG_INFINITY, f64::max);
        checks.push(CheckEntry::at_most("lambda_upper_limit", worst, h_ref, tol.upper_limit));
    }

    let mut superlevel = None;
    if let Some(last) = sweep.solutions.last() {
        let domain = last.u.domain();
        let area = domain.area();
        let linf = last.u.sup();
        checks.push(CheckEntry::at_least("linf_lower", linf, 1.0 / area, tol.linf_bounds));
        match ball_cheeger(N, BallSize::Volume(area)) {
            Ok(h_ball) => {
                let upper = h_ref * h_ref / (area * h_ball * h_ball);
                checks.push(CheckEntry::at_most("linf_upper", linf, upper, tol.linf_bounds));
            }
            Err(_) => checks.push(CheckEntry::failed("linf_upper", f64::NAN, tol.linf_bounds)),
        }
        let ts: Vec<f64> = [0.3, 0.5, 0.7].iter().map(|f| f * linf).collect();
        match superlevel_check(&last.u, h_ref, &ts) {
            Ok(rep) => {
                let worst = rep.levels.iter().map(|l| l.deviation).fold(0.0, f64::max);
                let complete = rep.skipped.is_empty();
                checks.push(CheckEntry {
                    name: "superlevel_ratio".into(),
                    value: if complete { worst } else { f64::NAN },
                    reference: 0.0,
                    tolerance: tol.superlevel,
                    pass: complete && worst <= tol.superlevel,
                });
                checks.push(CheckEntry::at_most("coarea_tv", rep.coarea.tv_mismatch(), tol.coarea_tv, 0.0));
                checks.push(CheckEntry::at_most("coarea_l1", rep.coarea.l1_mismatch(), tol.coarea_l1, 0.0));
                superlevel = Some(rep);
            }
            Err(_) => checks.push(CheckEntry::failed("superlevel_ratio", 0.0, tol.superlevel)),
        }
    }

    LimitReport {
        path: sweep.path.label(),
        h_ref,
        extrapolated_lambda: lam,
        extrapolated_l1: l1,
        extrapolated_linf_pow: linf,
        checks,
        superlevel,
    }
}

/// `|a - b| / min(|a|, |b|) <= tol` for every pair of labelled limits.
pub fn check_path_agreement(limits: &[(String, f64)], tol: f64) -> Vec<CheckEntry> {
    let mut out = Vec::new();
    for (i, (la, a)) in limits.iter().enumerate() {
        for (lb, b) in &limits[i + 1..] {
            let scale = a.abs().min(b.abs());
            let value = (a - b).abs() / scale;
            out.push(CheckEntry::at_most(format!("agreement_{la}_{lb}"), value, tol, 0.0));
        }
    }
    out
}

/// Branch of the integral `I_{sigma,q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimBranch {
    Sublinear,
    Superlinear,
}

/// `I_{sigma,q} = sigma B(a, N(p-1)/p + 1)` with `a = N(1-q)/p + sigma`
/// for `q < 1` and `a = sigma` otherwise.
pub fn estim_integral(n: u32, p: f64, q: f64, sigma: f64) -> Result<(f64, EstimBranch)> {
    if !(sigma >= 1.0) {
        return Err(Error::InvalidArgument(format!("sigma = {sigma} must be at least 1")));
    }
    if !(q >= 0.0) {
        return Err(Error::InvalidArgument(format!("q = {q} must be nonnegative")));
    }
    let nf = n as f64;
    let (a, branch) = if q < 1.0 {
        (nf * (1.0 - q) / p + sigma, EstimBranch::Sublinear)
    } else {
        (sigma, EstimBranch::Superlinear)
    };
    Ok((sigma * beta(a, nf * (p - 1.0) / p + 1.0)?, branch))
}

/// `C_{lambda,sigma,q} = (S_{N,p} / lambda)^{N/p} (p / (p + N(p-1)))^{N+1} I_{sigma,q}`.
pub fn estim_constant(n: u32, p: f64, q: f64, sigma: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
    }
    let nf = n as f64;
    let s = sobolev_constant(SobolevParams::new(n, p)?)?;
    let (i, _) = estim_integral(n, p, q, sigma)?;
    Ok((s / lambda).powf(nf / p) * (p / (p + nf * (p - 1.0))).powf(nf + 1.0) * i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimCheck {
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
    pub branch: EstimBranch,
    pub constant: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `C ||u||_inf^{(N(p-q) + p sigma)/p} <= ||u||_sigma^sigma (1 + slack)`
/// for a converged minimiser.
pub fn check_lemma_estim(result: &SolveResult, sigma: f64, slack: f64) -> Result<EstimCheck> {
    if !result.converged {
        return Err(Error::InvalidArgument("estimate checked on an unconverged solve".into()));
    }
    let (p, q) = (result.p, result.q);
    let nf = N as f64;
    let (_, branch) = estim_integral(N, p, q, sigma)?;
    let constant = estim_constant(N, p, q, sigma, result.lambda)?;
    let lhs = constant * result.u.sup().powf((nf * (p - q) + p * sigma) / p);
    let rhs = lq_norm(&result.u, sigma)?.powf(sigma);
    Ok(EstimCheck { p, q, sigma, branch, constant, lhs, rhs, pass: lhs <= rhs * (1.0 + slack) })
}

/// `|Omega| (h(Omega*) / h(Omega))^N` with `Omega*` the ball of equal area.
pub fn e_p_lower_bound(area: f64, h_ref: f64) -> Result<f64> {
    let h_ball = ball_cheeger(N, BallSize::Volume(area))?;
    Ok(area * (h_ball / h_ref).powi(N as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Le1Row {
    pub p: f64,
    pub q: f64,
    pub v_q_pow: f64,
    pub v_inf_pow: f64,
    /// `| ||v||_q^{q-p} - lambda | / lambda`.
    pub identity_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub p: f64,
    pub q: f64,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Le1Report {
    pub rows: Vec<Le1Row>,
    pub skipped: Vec<SkippedRecord>,
    pub checks: Vec<CheckEntry>,
}

impl Le1Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Lane-Emden observables `||v||_q^{q-p}` and `||v||_inf^{q-p}`, their
/// limits against `h_ref`, the identity against `lambda`, and a bound
/// `||v||_inf^{q-p} <= lane_emden_bound * h_ref` over the sweep.
pub fn check_corollary_le1(records: &[SweepRecord], h_ref: f64, tol: &Tolerances) -> Le1Report {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut kept = Vec::new();
    for r in records {
        match r.lane_emden_q_pow {
            Some(vq) if r.q != r.p => {
                rows.push(Le1Row {
                    p: r.p,
                    q: r.q,
                    v_q_pow: vq,
                    v_inf_pow: Observable::LaneEmdenInfPow.value(r),
                    identity_defect: (vq - r.lambda).abs() / r.lambda,
                });
                kept.push(r.clone());
            }
            _ => skipped.push(SkippedRecord { p: r.p, q: r.q, note: "q = p has no Lane-Emden rescaling".into() }),
        }
    }
    let mut checks = Vec::new();
    let ft = tol.fit_residual;
    limit_checks(&mut checks, &kept, Observable::LaneEmdenQPow, "v_q_pow_limit", h_ref, tol.lane_emden, true, ft);
    limit_checks(&mut checks, &kept, Observable::LaneEmdenInfPow, "v_inf_pow_limit", h_ref, tol.lane_emden, true, ft);
    if !rows.is_empty() {
        let defect = rows.iter().map(|r| r.identity_defect).fold(0.0, f64::max);
        checks.push(CheckEntry::at_most("v_q_pow_identity", defect, tol.identity, 0.0));
        let peak = rows.iter().map(|r| r.v_inf_pow).fold(0.0, f64::max);
        checks.push(CheckEntry::at_most("v_inf_pow_bounded", peak, tol.lane_emden_bound * h_ref, 0.0));
    }
    Le1Report { rows, skipped, checks }
}

/// Seeded positive test fields `d^g (1 + sum_k a_k cos(w_k . x + phi_k))`
/// with `d` the distance to the complement and `sum |a_k| <= 0.75`.
pub fn random_test_fields(domain: &Arc<GridDomain>, count: usize, seed: u64) -> Vec<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = distance_to_complement(domain);
    let scale = 2.0 * PI / (domain.nx().max(domain.ny()) as f64 * domain.spacing());
    (0..count)
        .map(|_| {
            let g: f64 = rng.gen_range(0.3..1.5);
            let modes: Vec<(f64, f64, f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.gen_range(-0.25..0.25),
                        scale * rng.gen_range(-4.0..4.0),
                        scale * rng.gen_range(-4.0..4.0),
                        rng.gen_range(0.0..2.0 * PI),
                    )
                })
                .collect();
            let (nx, h) = (domain.nx(), domain.spacing());
            let values = dist
                .iter()
                .enumerate()
                .map(|(k, &d)| {
                    if d <= 0.0 {
                        return 0.0;
                    }
                    let (x, y) = ((k % nx) as f64 * h, (k / nx) as f64 * h);
                    let wave: f64 = modes.iter().map(|&(a, wx, wy, ph)| a * (wx * x + wy * y + ph).cos()).sum();
                    d.powf(g) * (1.0 + wave)
                })
                .collect();
            ScalarField::from_values(domain.clone(), values).expect("test field vanishes off the mask")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientCheck {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub min_quotient: f64,
    pub fields: usize,
    pub pass: bool,
}

/// `lambda <= ||grad w||_p^p / ||w||_q^p` for every test field `w`.
pub fn check_quotient_bound(result: &SolveResult, fields: &[ScalarField]) -> Result<QuotientCheck> {
    let mut min_quotient = f64::INFINITY;
    for w in fields {
        min_quotient = min_quotient.min(rayleigh_quotient(w, result.p, result.q)?);
    }
    Ok(QuotientCheck {
        p: result.p,
        q: result.q,
        lambda: result.lambda,
        min_quotient,
        fields: fields.len(),
        pass: result.lambda <= min_quotient,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub p: f64,
    pub q_list: Vec<f64>,
    /// `lambda_{p,q} |Omega|^{p/q}` per entry of `q_list`.
    pub scaled: Vec<f64>,
    pub strictly_decreasing: bool,
}

/// Solves at fixed `p` along increasing `q_list` and tests that
/// `q -> lambda_{p,q} |Omega|^{p/q}` strictly decreases.
pub fn check_q_monotonicity(
    domain: &Arc<GridDomain>,
    p: f64,
    q_list: &[f64],
    params: &SolveParams,
) -> Result<MonotonicityCheck> {
    if q_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!("q list {q_list:?} is not strictly increasing")));
    }
    let area = domain.area();
    let mut scaled = Vec::with_capacity(q_list.len());
    let mut prev: Option<SolveResult> = None;
    for &q in q_list {
        let r = minimize_rayleigh(domain, p, q, params, prev.as_ref().map(|s| &s.u))?;
        if !r.converged {
            return Err(Error::SweepAborted {
                p,
                reason: format!("q = {q}: no convergence (residual {:e})", r.residual),
            });
        }
        scaled.push(r.lambda * area.powf(p / q));
        prev = Some(r);
    }
    let strictly_decreasing = scaled.windows(2).all(|w| w[1] < w[0]);
    Ok(MonotonicityCheck { p, q_list: q_list.to_vec(), scaled, strictly_decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, ShapeTag};

    #[test]
    fn estim_integral_spot_values() {
        // sigma = 1, q = 1, N = 2, p = 2: int_0^1 (1 - t) dt
        let (i, b) = estim_integral(2, 2.0, 1.0, 1.0).unwrap();
        assert!((i - 0.5).abs() < 1e-13);
        assert_eq!(b, EstimBranch::Superlinear);
        // q = 0.5, p = 2, sigma = 1: int_0^1 (1 - t) t^{1/2} dt = 4/15
        let (i, b) = estim_integral(2, 2.0, 0.5, 1.0).unwrap();
        assert!((i - 4.0 / 15.0).abs() < 1e-13);
        assert_eq!(b, EstimBranch::Sublinear);
        // sigma = 2, q = 1.5, p = 1.5: 2 int_0^1 (1 - t)^{2/3} t dt = 2 B(2, 5/3)
        let (i, _) = estim_integral(2, 1.5, 1.5, 2.0).unwrap();
        let midpoint: f64 = (0..200_000)
            .map(|k| {
                let t = (k as f64 + 0.5) / 200_000.0;
                2.0 * (1.0 - t).powf(2.0 / 3.0) * t
            })
            .sum::<f64>()
            / 200_000.0;
        assert!((i - midpoint).abs() < 1e-8);
        assert!(estim_integral(2, 1.5, 1.0, 0.5).is_err());
    }

    #[test]
    fn e_p_bound_examples() {
        // disk: the bound is the area itself
        let b = e_p_lower_bound(PI, 2.0).unwrap();
        assert!((b - PI).abs() < 1e-12);
        // unit square: (2 sqrt(pi) / (2 + sqrt(pi)))^2
        let b = e_p_lower_bound(1.0, 2.0 + PI.sqrt()).unwrap();
        let s = PI.sqrt();
        assert!((b - (2.0 * s / (2.0 + s)).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn entries() {
        assert!(CheckEntry::relative("a", 1.04, 1.0, 0.05).pass);
        assert!(!CheckEntry::relative("a", 1.06, 1.0, 0.05).pass);
        assert!(CheckEntry::at_most("a", 2.0, 2.0, 0.0).pass);
        assert!(!CheckEntry::at_least("a", 0.8, 1.0, 0.15).pass);
        assert!(!CheckEntry::failed("a", 1.0, 0.1).pass);
        let agree = check_path_agreement(&[("x".into(), 3.8), ("y".into(), 3.7), ("z".into(), 4.0)], 0.04);
        assert_eq!(agree.len(), 3);
        assert_eq!(agree.iter().filter(|c| c.pass).count(), 1);
    }

    #[test]
    fn test_fields_are_positive_and_seeded() {
        let d = Arc::new(build_domain(ShapeTag::Disk { radius: 1.0 }, 32).unwrap());
        let a = random_test_fields(&d, 5, 9);
        let b = random_test_fields(&d, 5, 9);
        let c = random_test_fields(&d, 5, 10);
        assert_eq!(a.len(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.values(), y.values());
        }
        assert_ne!(a[0].values(), c[0].values());
        for f in &a {
            for (k, &v) in f.values().iter().enumerate() {
                assert_eq!(v > 0.0, d.is_inside(k));
            }
        }
    }

    #[test]
    fn quotient_bound_holds_on_a_small_grid() {
        let d = Arc::new(build_domain(ShapeTag::Square { side: 1.0 }, 24).unwrap());
        let r = minimize_rayleigh(&d, 1.5, 1.2, &SolveParams::default(), None).unwrap();
        let fields = random_test_fields(&d, 20, 0);
        let c = check_quotient_bound(&r, &fields).unwrap();
        assert!(c.pass, "{c:?}");
        let est = check_lemma_estim(&r, 1.0, 0.01).unwrap();
        assert!(est.pass, "{est:?}");
        assert!(est.lhs > 0.0);
    }
}
