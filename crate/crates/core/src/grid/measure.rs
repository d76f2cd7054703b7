use std::sync::Arc;

use super::{contour_length, distance_to_complement, squared_edt, BinaryRegion, GridDomain, ScalarField};
use crate::{Error, Result};

/// `(sum |u|^q h^2)^(1/q)`, or `max |u|` for `q = f64::INFINITY`.
pub fn lq_norm(u: &ScalarField, q: f64) -> Result<f64> {
    if q.is_nan() || q <= 0.0 {
        return Err(Error::InvalidArgument(format!("norm exponent {q} must be positive")));
    }
    if q == f64::INFINITY {
        return Ok(u.sup());
    }
    let h2 = u.domain().spacing().powi(2);
    let s: f64 = u.values().iter().map(|v| v.abs().powf(q)).sum();
    Ok((s * h2).powf(1.0 / q))
}

/// Visits every forward-difference cell that touches the mask, passing the
/// squared gradient magnitude.
#[inline]
pub(crate) fn for_each_cell_gradient(
    domain: &GridDomain,
    u: &[f64],
    mut visit: impl FnMut(usize, f64),
) {
    let (nx, ny) = (domain.nx(), domain.ny());
    let inv_h = 1.0 / domain.spacing();
    let inside = domain.inside();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = j * nx + i;
            if !(inside[c] || inside[c + 1] || inside[c + nx]) {
                continue;
            }
            let gx = (u[c + 1] - u[c]) * inv_h;
            let gy = (u[c + nx] - u[c]) * inv_h;
            visit(c, gx * gx + gy * gy);
        }
    }
}

/// Discrete `sum (|grad u|^2 + eps^2)^(p/2) h^2` over cells touching the mask.
pub fn grad_energy_p(u: &ScalarField, p: f64, eps: f64) -> f64 {
    energy_raw(u.domain(), u.values(), p, eps)
}

pub(crate) fn energy_raw(domain: &GridDomain, u: &[f64], p: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    let half_p = 0.5 * p;
    let mut s = 0.0;
    for_each_cell_gradient(domain, u, |_, g2| {
        let a = g2 + e2;
        if a > 0.0 {
            s += a.powf(half_p);
        }
    });
    s * domain.spacing().powi(2)
}

/// `grad_energy_p(u, p, 0) / lq_norm(u, q)^p`; infinite for `u = 0`.
pub fn rayleigh_quotient(u: &ScalarField, p: f64, q: f64) -> Result<f64> {
    let n = lq_norm(u, q)?;
    if n == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(grad_energy_p(u, p, 0.0) / n.powf(p))
}

/// Isotropic forward-difference total variation of the zero extension.
pub fn total_variation(u: &ScalarField) -> f64 {
    let d = u.domain();
    let (nx, ny) = (d.nx(), d.ny());
    let v = u.values();
    let mut s = 0.0;
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = j * nx + i;
            s += (v[c + 1] - v[c]).hypot(v[c + nx] - v[c]);
        }
    }
    s * d.spacing()
}

/// Upwind total variation: at each node the Euclidean norm of the positive
/// parts of the four one-sided differences `u_i - u_neighbour`.
pub fn upwind_total_variation(u: &ScalarField) -> f64 {
    upwind_tv_raw(u.domain(), u.values())
}

pub(crate) fn upwind_tv_raw(d: &GridDomain, v: &[f64]) -> f64 {
    let nx = d.nx();
    let mut s = 0.0;
    for (k, &inside) in d.inside().iter().enumerate() {
        if !inside {
            continue;
        }
        let c = v[k];
        let mut acc = 0.0;
        for nb in [k + 1, k - 1, k + nx, k - nx] {
            let g = (c - v[nb]).max(0.0);
            acc += g * g;
        }
        s += acc.sqrt();
    }
    s * d.spacing()
}

/// Width (in spacings) of the smoothing kernel used by [`perimeter`]:
/// grows like the square root of the raster size, so it spans more cells
/// yet shrinks in length units under refinement.
pub fn perimeter_kernel_width(domain: &GridDomain) -> f64 {
    let n = (domain.nx().max(domain.ny()) - 1) as f64;
    (n.sqrt() / 8.0).max(1.0)
}

/// Perimeter of a region: length of the level-1/2 marching-squares contour
/// of its indicator after a separable Gaussian blur of width
/// [`perimeter_kernel_width`].
pub fn perimeter(region: &BinaryRegion) -> f64 {
    let d = region.domain();
    let (nx, ny) = (d.nx(), d.ny());
    let sigma = perimeter_kernel_width(d);
    let r = (3.0 * sigma).ceil() as isize;
    let mut w: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);

    let src: Vec<f64> = region.mask().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut tmp = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let mut acc = 0.0;
            for (t, wt) in w.iter().enumerate() {
                let ii = i as isize + t as isize - r;
                if ii >= 0 && (ii as usize) < nx {
                    acc += wt * src[j * nx + ii as usize];
                }
            }
            tmp[j * nx + i] = acc;
        }
    }
    let mut blurred = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let mut acc = 0.0;
            for (t, wt) in w.iter().enumerate() {
                let jj = j as isize + t as isize - r;
                if jj >= 0 && (jj as usize) < ny {
                    acc += wt * tmp[jj as usize * nx + i];
                }
            }
            blurred[j * nx + i] = acc;
        }
    }
    contour_length(nx, ny, &blurred, 0.5) * d.spacing()
}

/// Cell-counting area and contour perimeter; `(0, 0)` for an empty region.
pub fn measure_region(region: &BinaryRegion) -> (f64, f64) {
    if region.is_empty() {
        return (0.0, 0.0);
    }
    let h = region.domain().spacing();
    (region.count() as f64 * h * h, perimeter(region))
}

/// Inner parallel set `{x in Omega : dist(x, complement) > r}`.
pub fn inner_region(domain: &Arc<GridDomain>, r: f64) -> BinaryRegion {
    let dist = distance_to_complement(domain);
    inner_region_from_distance(domain, &dist, r)
}

/// As [`inner_region`] with a precomputed [`distance_to_complement`].
pub fn inner_region_from_distance(domain: &Arc<GridDomain>, dist: &[f64], r: f64) -> BinaryRegion {
    let mask = dist
        .iter()
        .zip(domain.inside())
        .map(|(&d, &ins)| ins && d > r)
        .collect();
    BinaryRegion::from_mask_unchecked(domain.clone(), mask)
}

/// Nodes of the domain within distance `r` of the region.
pub fn dilate(region: &BinaryRegion, r: f64) -> BinaryRegion {
    let d = region.domain();
    if region.is_empty() {
        return region.clone();
    }
    let rr = (r / d.spacing()).powi(2) * (1.0 + 1e-12);
    let d2 = squared_edt(d.nx(), d.ny(), region.mask());
    let mask = d2
        .iter()
        .zip(d.inside())
        .map(|(&v, &ins)| ins && v <= rr)
        .collect();
    BinaryRegion::from_mask_unchecked(d.clone(), mask)
}
