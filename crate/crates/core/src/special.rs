//! Gamma and Beta functions, unit-ball volume, Sobolev constant and the
//! Cheeger constant of a ball.

use std::f64::consts::PI;

use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn check_positive(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("argument {t} must be positive and finite")))
    }
}

/// `ln Gamma(t)` for `t > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(t: f64) -> Result<f64> {
    check_positive(t)?;
    Ok(ln_gamma_unchecked(t))
}

fn ln_gamma_unchecked(t: f64) -> f64 {
    if t < 0.5 {
        // reflection; Gamma(t) > 0 on (0, 1/2)
        return (PI / (PI * t).sin()).ln() - ln_gamma_unchecked(1.0 - t);
    }
    let x = t - 1.0;
    let mut a = LANCZOS[0];
    let tt = x + LANCZOS_G + 0.5;
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + k as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * tt.ln() - tt + a.ln()
}

/// `Gamma(t)` for `t > 0`.
pub fn gamma(t: f64) -> Result<f64> {
    check_positive(t)?;
    if t < 0.5 {
        return Ok(PI / ((PI * t).sin() * gamma(1.0 - t)?));
    }
    Ok(ln_gamma_unchecked(t).exp())
}

/// `ln B(a, b)` computed from [`ln_gamma`].
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    check_positive(a)?;
    check_positive(b)?;
    Ok(ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b))
}

pub fn beta(a: f64, b: f64) -> Result<f64> {
    Ok(ln_beta(a, b)?.exp())
}

/// Volume `omega_N` of the unit ball of `R^N`.
pub fn unit_ball_volume(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let half = 0.5 * n as f64;
    Ok(PI.powf(half) / gamma(1.0 + half)?)
}

/// Dimension and exponent of a Sobolev constant, `1 < p < N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevParams {
    pub n: u32,
    pub p: f64,
}

impl SobolevParams {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        if n < 2 || !(p > 1.0 && p < n as f64) {
            return Err(Error::InvalidArgument(format!(
                "Sobolev exponent p = {p} must lie in (1, {n})"
            )));
        }
        Ok(Self { n, p })
    }

    /// Critical exponent `Np / (N - p)`.
    pub fn critical(&self) -> f64 {
        let n = self.n as f64;
        n * self.p / (n - self.p)
    }
}

/// Best constant `S_{N,p}` of the embedding of `W^{1,p}` into `L^{p*}`:
///
/// `N omega_N^{p/N} ((N-p)/(p-1))^{p-1} (Gamma(N/p) Gamma(1+N-N/p) / Gamma(N))^{p/N}`.
pub fn sobolev_constant(params: SobolevParams) -> Result<f64> {
    let SobolevParams { n, p } = SobolevParams::new(params.n, params.p)?;
    let nf = n as f64;
    let ln_omega = unit_ball_volume(n)?.ln();
    let ln_ratio = ln_gamma(nf / p)? + ln_gamma(1.0 + nf - nf / p)? - ln_gamma(nf)?;
    let ln_s = nf.ln()
        + (p / nf) * ln_omega
        + (p - 1.0) * ((nf - p) / (p - 1.0)).ln()
        + (p / nf) * ln_ratio;
    Ok(ln_s.exp())
}

/// Size of a ball, given by radius or by volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BallSize {
    Radius(f64),
    Volume(f64),
}

/// Cheeger constant `N / R` of a ball in `R^N`.
pub fn ball_cheeger(n: u32, size: BallSize) -> Result<f64> {
    let nf = n as f64;
    match size {
        BallSize::Radius(r) => {
            check_positive(r)?;
            unit_ball_volume(n)?;
            Ok(nf / r)
        }
        BallSize::Volume(v) => {
            check_positive(v)?;
            Ok(nf * (unit_ball_volume(n)? / v).powf(1.0 / nf))
        }
    }
}
