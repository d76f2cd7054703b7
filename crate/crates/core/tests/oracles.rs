//! Independent oracles for derived reference values.

use std::f64::consts::PI;
use std::sync::Arc;

use cheeger_lab::grid::{build_domain, lq_norm, GridDomain, ShapeTag};
use cheeger_lab::harness::{e_p_lower_bound, estim_constant, estim_integral, run_sweep, QPath};
use cheeger_lab::plap::{minimize_rayleigh, sup_normalized, SolveParams};
use cheeger_lab::special::{gamma, sobolev_constant, SobolevParams};
use cheeger_lab::verify::BESSEL_J0_ZERO;

/// Radial minimiser of `int |u'|^p r dr / (int |u|^p r dr)` on the unit disk
/// by lagged-diffusivity inverse iteration on `m` cells with a tridiagonal
/// solve. Returns `(lambda, sup u)` for `u` normalised in `L^p` of the disk.
fn radial_oracle(p: f64, m: usize) -> (f64, f64) {
    let dr = 1.0 / m as f64;
    let r: Vec<f64> = (0..=m).map(|i| i as f64 * dr).collect();
    let mid: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * dr).collect();
    let mut w: Vec<f64> = r.iter().map(|&x| x * dr).collect();
    w[0] = dr * dr / 8.0;
    w[m] = 0.5 * dr;
    let norm = |u: &[f64]| (2.0 * PI * u.iter().zip(&w).map(|(v, w)| v.abs().powf(p) * w).sum::<f64>()).powf(1.0 / p);
    let energy = |u: &[f64], eps: f64| {
        2.0 * PI * dr * (0..m).map(|i| {
            let g = (u[i + 1] - u[i]) / dr;
            (g * g + eps * eps).powf(0.5 * p) * mid[i]
        }).sum::<f64>()
    };
    let mut u: Vec<f64> = r.iter().map(|x| 1.0 - x * x).collect();
    let s = norm(&u);
    u.iter_mut().for_each(|v| *v /= s);
    let mut eps = dr;
    let mut prev = f64::NAN;
    for _ in 0..200_000 {
        let a: Vec<f64> = (0..m)
            .map(|i| {
                let g = (u[i + 1] - u[i]) / dr;
                (g * g + eps * eps).powf(0.5 * (p - 2.0)) * mid[i] / dr
            })
            .collect();
        // Thomas algorithm on nodes 0..m-1, u_m = 0.
        let mut diag: Vec<f64> = (0..m).map(|i| a[i] + if i > 0 { a[i - 1] } else { 0.0 }).collect();
        let mut rhs: Vec<f64> = (0..m).map(|i| w[i] * u[i].abs().powf(p - 1.0)).collect();
        for i in 1..m {
            let f = -a[i - 1] / diag[i - 1];
            diag[i] += f * a[i - 1];
            rhs[i] -= f * rhs[i - 1];
        }
        let mut v = vec![0.0; m + 1];
        v[m - 1] = rhs[m - 1] / diag[m - 1];
        for i in (0..m - 1).rev() {
            v[i] = (rhs[i] + a[i] * v[i + 1]) / diag[i];
        }
        v.iter_mut().for_each(|x| *x = x.max(0.0));
        let s = norm(&v);
        v.iter_mut().for_each(|x| *x /= s);
        let e = energy(&v, eps);
        u = v;
        if (prev - e).abs() < 1e-11 * e {
            if eps <= 1e-4 * dr {
                break;
            }
            eps *= 0.5;
        }
        prev = e;
    }
    (energy(&u, 0.0), u.iter().cloned().fold(0.0, f64::max))
}

fn disk(n: usize) -> Arc<GridDomain> {
    Arc::new(build_domain(ShapeTag::Disk { radius: 1.0 }, n).unwrap())
}

fn square(n: usize) -> Arc<GridDomain> {
    Arc::new(build_domain(ShapeTag::Square { side: 1.0 }, n).unwrap())
}

/// Power series of `J_0` and bisection on `[2, 3]`.
#[test]
fn bessel_zero_from_series() {
    let j0 = |x: f64| {
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..60 {
            term *= -(x * x) / (4.0 * (k * k) as f64);
            sum += term;
        }
        sum
    };
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..100 {
        let c = 0.5 * (a + b);
        if j0(a) * j0(c) <= 0.0 {
            b = c;
        } else {
            a = c;
        }
    }
    assert!((0.5 * (a + b) - BESSEL_J0_ZERO).abs() < 1e-13);
}

/// Euler's integral for Gamma by composite Simpson on a truncated range,
/// shifted by the recurrence so the integrand is smooth at the origin.
#[test]
fn gamma_against_euler_integral() {
    let integral = |s: f64| {
        let (lo, hi, k) = (0.0_f64, 60.0_f64, 200_000);
        let h = (hi - lo) / k as f64;
        let f = |t: f64| if t == 0.0 { 0.0 } else { t.powf(s - 1.0) * (-t).exp() };
        let mut sum = f(lo) + f(hi);
        for i in 1..k {
            sum += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        sum * h / 3.0
    };
    let euler = |s: f64| integral(s + 3.0) / (s * (s + 1.0) * (s + 2.0));
    for s in [1.5, 2.25, 3.7, 5.0] {
        let g = gamma(s).unwrap();
        assert!((g - euler(s)).abs() < 1e-8 * g, "Gamma({s})");
    }
}

/// Near p = 1 the Sobolev constant approaches the isoperimetric constant
/// `N omega_N^{1/N}`, which is `2 sqrt(pi)` in the plane.
#[test]
fn sobolev_constant_tends_to_isoperimetric_constant() {
    let target = 2.0 * PI.sqrt();
    let mut prev = f64::INFINITY;
    for p in [1.01, 1.001, 1.0001] {
        let s = sobolev_constant(SobolevParams::new(2, p).unwrap()).unwrap();
        let gap = (s - target).abs();
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 1e-3 * target);
}

/// The radial oracle reproduces `j_{0,1}^2` at p = 2.
#[test]
fn radial_oracle_is_calibrated() {
    let (lambda, _) = radial_oracle(2.0, 800);
    assert!((lambda - BESSEL_J0_ZERO * BESSEL_J0_ZERO).abs() < 2e-3 * lambda);
}

#[test]
fn disk_solve_matches_radial_oracle() {
    let (lambda, linf) = radial_oracle(1.2, 1000);
    let d = disk(96);
    let r = minimize_rayleigh(&d, 1.2, 1.2, &SolveParams::default(), None).unwrap();
    assert!(r.converged);
    assert!((r.lambda - lambda).abs() < 0.02 * lambda, "{} vs {lambda}", r.lambda);
    assert!((r.u.sup() - linf).abs() < 0.02 * linf, "{} vs {linf}", r.u.sup());
}

/// Near p = 1 the minimiser's sup on the unit disk stays well above `1/pi`.
#[test]
fn disk_sup_near_one_sits_above_inverse_area() {
    let (_, linf) = radial_oracle(1.05, 1000);
    assert!(linf > 1.1 / PI);
    let d = disk(128);
    let s = run_sweep(&d, &QPath::EqualP, &[1.6, 1.4, 1.2, 1.1, 1.05], &SolveParams::default()).unwrap();
    assert!(s.is_complete());
    let sup = s.solutions.last().unwrap().u.sup();
    assert!((sup - linf).abs() < 0.03 * linf, "{sup} vs {linf}");
}

/// `I` is `sigma B(a, N(p-1)/p + 1)`; check against a
/// midpoint rule on `sigma int_0^1 s^{a-1} (1-s)^{b-1} ds`.
#[test]
fn estim_integral_against_quadrature() {
    let quad = |a: f64, b: f64| {
        let k = 400_000;
        let h = 1.0 / k as f64;
        (0..k).map(|i| {
            let s = (i as f64 + 0.5) * h;
            s.powf(a - 1.0) * (1.0 - s).powf(b - 1.0)
        }).sum::<f64>() * h
    };
    for (p, q, sigma) in [(1.5, 1.2, 1.0), (1.5, 1.2, 2.0), (1.3, 0.8, 2.0), (1.8, 0.6, 1.5)] {
        let (i, _) = estim_integral(2, p, q, sigma).unwrap();
        let a = if q < 1.0 { 2.0 * (1.0 - q) / p + sigma } else { sigma };
        let b = 2.0 * (p - 1.0) / p + 1.0;
        let o = sigma * quad(a, b);
        assert!((i - o).abs() < 1e-4 * o, "({p}, {q}, {sigma}): {i} vs {o}");
    }
}

/// For `q = p`, `sigma = 1` and `lambda = h` the constant of the estimate
/// tends to `(2 sqrt(pi) / h)^2`, which is `|Omega| (h*/h)^2`.
#[test]
fn estim_constant_approaches_the_e_p_bound() {
    let area = 1.0;
    let h = 2.0 + PI.sqrt();
    let bound = e_p_lower_bound(area, h).unwrap();
    assert!((bound - (2.0 * PI.sqrt() / h).powi(2)).abs() < 1e-12);
    let mut prev = f64::INFINITY;
    for p in [1.1, 1.01, 1.001, 1.0001] {
        let gap = (estim_constant(2, p, p, 1.0, h).unwrap() - bound).abs();
        assert!(gap < prev, "p = {p}");
        prev = gap;
    }
    assert!(prev < 1e-3 * bound);
}

#[test]
fn e_p_is_sup_normalised() {
    let d = square(48);
    let r = minimize_rayleigh(&d, 1.4, 1.4, &SolveParams::default(), None).unwrap();
    let e = sup_normalized(&r.u).unwrap();
    assert!((e.sup() - 1.0).abs() < 1e-15);
    assert!(lq_norm(&e, 1.0).unwrap() <= d.area() * (1.0 + 1e-12));
}

#[test]
fn warm_start_saves_iterations() {
    let d = square(48);
    let sp = SolveParams::default();
    let first = minimize_rayleigh(&d, 1.3, 1.3, &sp, None).unwrap();
    let cold = minimize_rayleigh(&d, 1.25, 1.25, &sp, None).unwrap();
    let warm = minimize_rayleigh(&d, 1.25, 1.25, &sp, Some(&first.u)).unwrap();
    assert!(cold.converged && warm.converged);
    assert!(warm.iterations < cold.iterations, "{} vs {}", warm.iterations, cold.iterations);
    assert!((warm.lambda - cold.lambda).abs() < 1e-4 * cold.lambda);
}
