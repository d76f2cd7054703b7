use super::GridDomain;

/// Exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher).
///
/// Returns, for every node, the squared distance in node units to the
/// nearest node with `seed == true`; `f64::INFINITY` when there is no seed.
pub fn squared_edt(nx: usize, ny: usize, seed: &[bool]) -> Vec<f64> {
    assert_eq!(seed.len(), nx * ny);
    let mut d: Vec<f64> = seed.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let n = nx.max(ny);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for j in 0..ny {
        let row = &mut d[j * nx..(j + 1) * nx];
        f[..nx].copy_from_slice(row);
        transform_1d(&f[..nx], &mut out[..nx], &mut v, &mut z);
        row.copy_from_slice(&out[..nx]);
    }
    for i in 0..nx {
        for j in 0..ny {
            f[j] = d[j * nx + i];
        }
        transform_1d(&f[..ny], &mut out[..ny], &mut v, &mut z);
        for j in 0..ny {
            d[j * nx + i] = out[j];
        }
    }
    d
}

fn transform_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let Some(first) = f.iter().position(|x| x.is_finite()) else {
        out.fill(f64::INFINITY);
        return;
    };
    let mut k = 0usize;
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        *o = dq * dq + f[v[k]];
    }
}

/// Distance (length units) from each inside node to the nearest outside
/// node; zero on outside nodes.
pub fn distance_to_complement(domain: &GridDomain) -> Vec<f64> {
    let seed: Vec<bool> = domain.inside().iter().map(|&b| !b).collect();
    squared_edt(domain.nx(), domain.ny(), &seed)
        .into_iter()
        .map(|d2| d2.sqrt() * domain.spacing())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(nx: usize, ny: usize, seed: &[bool]) -> Vec<f64> {
        let mut d = vec![f64::INFINITY; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                for jj in 0..ny {
                    for ii in 0..nx {
                        if seed[jj * nx + ii] {
                            let di = i as f64 - ii as f64;
                            let dj = j as f64 - jj as f64;
                            let v = di * di + dj * dj;
                            if v < d[j * nx + i] {
                                d[j * nx + i] = v;
                            }
                        }
                    }
                }
            }
        }
        d
    }

    #[test]
    fn matches_brute_force() {
        let (nx, ny) = (13, 9);
        let mut state = 12345u64;
        let seed: Vec<bool> = (0..nx * ny)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) % 7 == 0
            })
            .collect();
        assert_eq!(squared_edt(nx, ny, &seed), brute(nx, ny, &seed));
    }

    #[test]
    fn no_seed_gives_infinity() {
        assert!(squared_edt(4, 3, &[false; 12]).iter().all(|d| d.is_infinite()));
    }
}
