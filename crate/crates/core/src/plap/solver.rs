use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operator::WeightedLaplacian;
use crate::grid::{distance_to_complement, energy_raw, for_each_cell_gradient, lq_norm, GridDomain, ScalarField};
use crate::{Error, Result};

/// Relative energy increase tolerated as round-off before backtracking.
const ENERGY_SLACK: f64 = 1e-13;

/// Solver controls. Regularisation levels are in units of the grid spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveParams {
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub tol_lambda: f64,
    pub tol_residual: f64,
    /// Relative energy decrease below which the regularisation is halved.
    pub stage_tol: f64,
    pub max_outer: usize,
    pub inner_solver_tol: f64,
    pub seed: u64,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            epsilon_start: 1.0,
            epsilon_min: 1e-3,
            tol_lambda: 1e-8,
            tol_residual: 1e-6,
            stage_tol: 1e-9,
            max_outer: 20_000,
            inner_solver_tol: 1e-11,
            seed: 0,
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon_min", self.epsilon_min),
            ("tol_lambda", self.tol_lambda),
            ("tol_residual", self.tol_residual),
            ("stage_tol", self.stage_tol),
            ("inner_solver_tol", self.inner_solver_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.epsilon_min <= self.epsilon_start && self.epsilon_start.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon_min {} exceeds epsilon_start {}",
                self.epsilon_min, self.epsilon_start
            )));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidArgument("max_outer must be positive".into()));
        }
        Ok(())
    }
}

/// One outer step: regularisation level (length units) and regularised energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub epsilon: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub lambda: f64,
    pub u: ScalarField,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub p: f64,
    pub q: f64,
    pub history: Vec<IterationRecord>,
    /// Nodes lifted to the positivity floor when forming `u^{q-1}` at the
    /// last step (only for `q < 1`).
    pub clamped_nodes: usize,
    pub factorizations: usize,
}

/// JSON form of a [`SolveResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub l1: f64,
    pub linf: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveResult {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            p: self.p,
            q: self.q,
            lambda: self.lambda,
            l1: lq_norm(&self.u, 1.0).unwrap_or(f64::NAN),
            linf: self.u.sup(),
            residual: self.residual,
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

/// `p* = 2p / (2 - p)` in the plane; infinite for `p >= 2`.
pub fn critical_exponent(p: f64) -> f64 {
    if p >= 2.0 {
        f64::INFINITY
    } else {
        2.0 * p / (2.0 - p)
    }
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in (1, 2]")));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("q = {q} must be positive")));
    }
    let critical = critical_exponent(p);
    if q >= critical {
        return Err(Error::SupercriticalExponent { q, critical });
    }
    Ok(())
}

fn lq_raw(u: &[f64], q: f64, h2: f64) -> f64 {
    let s: f64 = u.iter().map(|v| v.abs().powf(q)).sum();
    (s * h2).powf(1.0 / q)
}

fn normalize(u: &mut [f64], q: f64, h2: f64) -> f64 {
    let n = lq_raw(u, q, h2);
    if n > 0.0 {
        u.iter_mut().for_each(|v| *v /= n);
    }
    n
}

fn cell_weights(domain: &GridDomain, u: &[f64], p: f64, eps: f64, w: &mut [f64]) {
    w.fill(0.0);
    let e2 = eps * eps;
    let expo = 0.5 * (p - 2.0);
    for_each_cell_gradient(domain, u, |c, g2| {
        w[c] = (g2 + e2).powf(expo);
    });
}

/// `u^{q-1}`, with `u` lifted to `1e-12 sup u` when `q < 1`.
fn source(u: &[f64], q: f64, inside: &[bool], out: &mut [f64]) -> usize {
    let floor = if q < 1.0 {
        1e-12 * u.iter().fold(0.0f64, |m, v| m.max(*v))
    } else {
        0.0
    };
    let mut clamped = 0;
    for ((o, &v), &ins) in out.iter_mut().zip(u).zip(inside) {
        *o = if !ins {
            0.0
        } else if q == 1.0 {
            1.0
        } else if q < 1.0 {
            if v < floor {
                clamped += 1;
            }
            v.max(floor).powf(q - 1.0)
        } else {
            v.max(0.0).powf(q - 1.0)
        };
    }
    clamped
}

/// Distance-to-boundary bump with a seeded 1% multiplicative perturbation,
/// normalised in `L^q`.
pub fn initial_guess(domain: &Arc<GridDomain>, q: f64, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = distance_to_complement(domain);
    for (v, &ins) in u.iter_mut().zip(domain.inside()) {
        if ins {
            *v *= 1.0 + 0.01 * rng.gen_range(-1.0..=1.0);
        } else {
            *v = 0.0;
        }
    }
    normalize(&mut u, q, domain.spacing().powi(2));
    ScalarField::from_values(domain.clone(), u).expect("bump is finite and supported inside")
}

fn residual_raw(domain: &GridDomain, u: &[f64], lambda: f64, p: f64, q: f64, eps: f64) -> f64 {
    if u.iter().all(|&v| v == 0.0) {
        return if lambda == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let nx = domain.nx();
    let h2 = domain.spacing().powi(2);
    let mut w = vec![0.0; domain.len()];
    cell_weights(domain, u, p, eps, &mut w);
    let mut ku = vec![0.0; domain.len()];
    for j in 0..domain.ny() - 1 {
        for i in 0..nx - 1 {
            let c = j * nx + i;
            if w[c] == 0.0 {
                continue;
            }
            let dx = u[c + 1] - u[c];
            let dy = u[c + nx] - u[c];
            let a = w[c] / h2;
            ku[c] -= a * (dx + dy);
            ku[c + 1] += a * dx;
            ku[c + nx] += a * dy;
        }
    }
    let mut f = vec![0.0; domain.len()];
    source(u, q, domain.inside(), &mut f);
    let (mut rr, mut ff) = (0.0, 0.0);
    for k in 0..domain.len() {
        if domain.is_inside(k) {
            let r = ku[k] - lambda * f[k];
            rr += r * r;
            ff += f[k] * f[k];
        }
    }
    let scale = if lambda > 0.0 { lambda * ff.sqrt() } else { ff.sqrt() };
    let pde = rr.sqrt() / scale;
    let norm_defect = (lq_raw(u, q, h2) - 1.0).abs();
    pde.max(norm_defect)
}

/// Relative residual of the discrete Euler-Lagrange system
/// `K(W_eps) u = lambda u^{q-1}` at `eps = params.epsilon_min * spacing`,
/// combined with the normalisation defect `| ||u||_q - 1 |`.
///
/// Returns 0 for `u = 0, lambda = 0` and infinity for `u = 0, lambda != 0`.
pub fn el_residual(u: &ScalarField, lambda: f64, p: f64, q: f64, params: &SolveParams) -> f64 {
    let d = u.domain();
    residual_raw(d, u.values(), lambda, p, q, params.epsilon_min * d.spacing())
}

/// Lagged-diffusivity inverse iteration for `lambda_{p,q}`.
///
/// Each outer step freezes the weights `(|grad u|^2 + eps^2)^{(p-2)/2}`,
/// solves `K(W) v = u^{q-1}`, and renormalises `v` in `L^q`. A step that
/// raises the regularised energy is replaced by a backtracked combination.
/// `eps` is halved from `epsilon_start` to `epsilon_min` once the relative
/// energy decrease falls below `stage_tol`.
pub fn minimize_rayleigh(
    domain: &Arc<GridDomain>,
    p: f64,
    q: f64,
    params: &SolveParams,
    warm_start: Option<&ScalarField>,
) -> Result<SolveResult> {
    check_exponents(p, q)?;
    params.validate()?;
    let h = domain.spacing();
    let h2 = h * h;
    let inside = domain.inside();

    let mut u: Vec<f64> = match warm_start {
        Some(w) => {
            if w.domain().as_ref() != domain.as_ref() {
                return Err(Error::InvalidArgument("warm start lives on another domain".into()));
            }
            w.values().iter().map(|v| v.max(0.0)).collect()
        }
        None => initial_guess(domain, q, params.seed).into_values(),
    };
    if normalize(&mut u, q, h2) == 0.0 {
        return Err(Error::InvalidArgument("warm start vanishes identically".into()));
    }

    let mut op = WeightedLaplacian::new(domain.clone())?;
    let n = op.len();
    let mut weights = vec![0.0; domain.len()];
    let mut f_full = vec![0.0; domain.len()];
    let mut b = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut v = vec![0.0; domain.len()];
    let mut trial = vec![0.0; domain.len()];

    let eps_min = params.epsilon_min * h;
    let mut eps = (params.epsilon_start * h).max(eps_min);
    let mut energy = energy_raw(domain, &u, p, eps);
    let mut lambda = energy_raw(domain, &u, p, 0.0);
    let mut residual = f64::INFINITY;
    let mut history = Vec::new();
    let mut converged = false;
    let mut clamped = 0;
    let mut iterations = 0;

    while iterations < params.max_outer {
        iterations += 1;
        cell_weights(domain, &u, p, eps, &mut weights);
        op.assemble(&weights);
        clamped = source(&u, q, inside, &mut f_full);
        op.gather(&f_full, &mut b);

        // the fixed point satisfies v = u / lambda', a good starting iterate
        let mut lambda_eps = 0.0;
        for_each_cell_gradient(domain, &u, |c, g2| lambda_eps += weights[c] * g2);
        lambda_eps *= h2;
        op.gather(&u, &mut x);
        if lambda_eps > 0.0 {
            x.iter_mut().for_each(|t| *t /= lambda_eps);
        }
        op.solve(&b, &mut x, params.inner_solver_tol)?;
        x.iter_mut().for_each(|t| *t = t.max(0.0));
        op.scatter(&x, &mut v);
        if normalize(&mut v, q, h2) == 0.0 {
            break;
        }

        let mut new_energy = energy_raw(domain, &v, p, eps);
        if new_energy > energy * (1.0 + ENERGY_SLACK) {
            let mut theta = 0.5;
            let mut accepted = false;
            while theta > 1e-9 {
                for k in 0..trial.len() {
                    trial[k] = u[k] + theta * (v[k] - u[k]);
                }
                normalize(&mut trial, q, h2);
                let e = energy_raw(domain, &trial, p, eps);
                if e <= energy * (1.0 + ENERGY_SLACK) {
                    v.copy_from_slice(&trial);
                    new_energy = e;
                    accepted = true;
                    break;
                }
                theta *= 0.5;
            }
            if !accepted {
                v.copy_from_slice(&u);
                new_energy = energy;
            }
        }
        let decrease = (energy - new_energy) / energy;
        std::mem::swap(&mut u, &mut v);
        energy = new_energy;
        history.push(IterationRecord { epsilon: eps, energy });

        let new_lambda = energy_raw(domain, &u, p, 0.0);
        let lambda_change = (new_lambda - lambda).abs() / new_lambda;
        lambda = new_lambda;

        if eps > eps_min {
            if decrease < params.stage_tol {
                eps = (0.5 * eps).max(eps_min);
                energy = energy_raw(domain, &u, p, eps);
            }
        } else {
            residual = residual_raw(domain, &u, lambda, p, q, eps_min);
            if residual <= params.tol_residual && lambda_change <= params.tol_lambda {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        residual = residual_raw(domain, &u, lambda, p, q, eps_min);
    }

    Ok(SolveResult {
        lambda,
        u: ScalarField::from_values(domain.clone(), u)?,
        residual,
        iterations,
        converged,
        p,
        q,
        history,
        clamped_nodes: clamped,
        factorizations: op.factorizations,
    })
}

/// Scale factor `lambda^{1/(q-p)}` taking `u_{p,q}` to the Lane-Emden
/// solution `v_{p,q}`.
pub fn lane_emden_factor(lambda: f64, p: f64, q: f64) -> Result<f64> {
    if q == p {
        return Err(Error::InvalidArgument("Lane-Emden rescaling needs q != p".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
    }
    Ok(lambda.powf(1.0 / (q - p)))
}

/// `v = lambda^{1/(q-p)} u` and the identity defect
/// `| ||v||_q^{q-p} - lambda | / lambda`.
pub fn lane_emden(result: &SolveResult) -> Result<(ScalarField, f64)> {
    if !result.converged {
        return Err(Error::InvalidArgument("Lane-Emden rescaling of an unconverged solve".into()));
    }
    let c = lane_emden_factor(result.lambda, result.p, result.q)?;
    let v = result.u.scaled(c);
    let lhs = lq_norm(&v, result.q)?.powf(result.q - result.p);
    Ok((v, (lhs - result.lambda).abs() / result.lambda))
}

/// `u / sup u`.
pub fn sup_normalized(u: &ScalarField) -> Result<ScalarField> {
    let s = u.sup();
    if s == 0.0 {
        return Err(Error::InvalidArgument("cannot sup-normalise the zero field".into()));
    }
    Ok(u.scaled(1.0 / s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, grad_energy_p, rayleigh_quotient, ShapeTag};

    fn square(n: usize) -> Arc<GridDomain> {
        Arc::new(build_domain(ShapeTag::Square { side: 1.0 }, n).unwrap())
    }

    #[test]
    fn rejects_bad_exponents() {
        let d = square(16);
        let sp = SolveParams::default();
        assert!(matches!(
            minimize_rayleigh(&d, 1.5, 6.0, &sp, None),
            Err(Error::SupercriticalExponent { .. })
        ));
        assert!(minimize_rayleigh(&d, 1.0, 1.0, &sp, None).is_err());
        assert!(minimize_rayleigh(&d, 2.5, 1.0, &sp, None).is_err());
        let bad = SolveParams { epsilon_min: 2.0, ..SolveParams::default() };
        assert!(minimize_rayleigh(&d, 1.5, 1.0, &bad, None).is_err());
    }

    #[test]
    fn linear_case_matches_discrete_eigenvalue() {
        // the discrete Dirichlet Laplacian on an m x m interior grid has
        // lowest eigenvalue 8 sin^2(pi h / 2) / h^2 with h = 1 / n
        let n = 32;
        let d = square(n);
        let r = minimize_rayleigh(&d, 2.0, 2.0, &SolveParams::default(), None).unwrap();
        assert!(r.converged, "residual {}", r.residual);
        let h = 1.0 / n as f64;
        let exact = 8.0 * (std::f64::consts::PI * h / 2.0).sin().powi(2) / (h * h);
        assert!((r.lambda - exact).abs() / exact < 1e-8, "{} vs {exact}", r.lambda);
    }

    #[test]
    fn result_invariants() {
        let d = square(32);
        let sp = SolveParams::default();
        let r = minimize_rayleigh(&d, 1.5, 1.2, &sp, None).unwrap();
        assert!(r.converged);
        assert!((lq_norm(&r.u, 1.2).unwrap() - 1.0).abs() < 1e-12);
        assert!(r.u.min() >= 0.0);
        for (k, &ins) in d.inside().iter().enumerate() {
            if ins {
                assert!(r.u.values()[k] > 0.0);
            }
        }
        assert!((r.lambda - grad_energy_p(&r.u, 1.5, 0.0)).abs() <= 1e-12 * r.lambda);
        assert!(el_residual(&r.u, r.lambda, 1.5, 1.2, &sp) <= sp.tol_residual);
        assert!(el_residual(&r.u.scaled(1.1), r.lambda, 1.5, 1.2, &sp) > sp.tol_residual);
        let zero = ScalarField::zeros(d.clone());
        assert_eq!(el_residual(&zero, 0.0, 1.5, 1.2, &sp), 0.0);
        assert!(el_residual(&zero, 1.0, 1.5, 1.2, &sp).is_infinite());
        let rq = rayleigh_quotient(&r.u.scaled(3.0), 1.5, 1.2).unwrap();
        assert!((rq - r.lambda).abs() < 1e-10 * r.lambda);
    }

    #[test]
    fn energy_never_increases_within_a_stage() {
        let d = square(32);
        let r = minimize_rayleigh(&d, 1.3, 0.8, &SolveParams::default(), None).unwrap();
        for w in r.history.windows(2) {
            if w[0].epsilon == w[1].epsilon {
                assert!(w[1].energy <= w[0].energy * (1.0 + ENERGY_SLACK), "{:?}", w);
            }
        }
    }

    #[test]
    fn lane_emden_examples() {
        let d = square(16);
        let u = initial_guess(&d, 1.0, 3);
        let mk = |lambda: f64, p: f64, q: f64| SolveResult {
            lambda,
            u: u.clone(),
            residual: 0.0,
            iterations: 0,
            converged: true,
            p,
            q,
            history: vec![],
            clamped_nodes: 0,
            factorizations: 0,
        };
        assert!((lane_emden_factor(4.0, 1.2, 1.0).unwrap() - 4f64.powi(-5)).abs() < 1e-15);
        let (v, _) = lane_emden(&mk(1.0, 1.4, 1.1)).unwrap();
        assert_eq!(v.values(), u.values());
        assert!(lane_emden(&mk(2.0, 1.3, 1.3)).is_err());
        let mut nc = mk(2.0, 1.3, 1.1);
        nc.converged = false;
        assert!(lane_emden(&nc).is_err());
    }

    #[test]
    fn initial_guess_is_deterministic() {
        let d = square(24);
        assert_eq!(initial_guess(&d, 1.5, 9), initial_guess(&d, 1.5, 9));
        assert_ne!(initial_guess(&d, 1.5, 9), initial_guess(&d, 1.5, 10));
    }
}
