use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
use faer::linalg::cholesky::llt::factor::LltRegularization;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, LltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};

use crate::grid::GridDomain;
use crate::{Error, Result};

const NONE: usize = usize::MAX;

/// Weighted five-point Laplacian `K(W)` on the inside nodes.
///
/// Every forward-difference cell `c` carries a weight `W_c`, shared by the
/// edges `(c, c+1)` and `(c, c+nx)`; `v^T K v h^2 = sum_c W_c |grad v|_c^2 h^2`.
/// Linear systems are solved by conjugate gradients preconditioned with a
/// sparse Cholesky factor, refreshed whenever the stale factor stops being
/// effective.
pub(crate) struct WeightedLaplacian {
    domain: Arc<GridDomain>,
    unknown: Vec<usize>,
    nodes: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    symbolic: SymbolicCholesky<usize>,
    factor: Vec<f64>,
    has_factor: bool,
    mem: MemBuffer,
    refactor_after: usize,
    pub factorizations: usize,
}

impl WeightedLaplacian {
    pub fn new(domain: Arc<GridDomain>) -> Result<Self> {
        let nx = domain.nx();
        let mut unknown = vec![NONE; domain.len()];
        let mut nodes = Vec::with_capacity(domain.inside_count());
        for (k, &inside) in domain.inside().iter().enumerate() {
            if inside {
                unknown[k] = nodes.len();
                nodes.push(k);
            }
        }
        let n = nodes.len();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(3 * n);
        col_ptr.push(0);
        for (m, &k) in nodes.iter().enumerate() {
            row_idx.push(m);
            for nb in [k + 1, k + nx] {
                if unknown[nb] != NONE {
                    row_idx.push(unknown[nb]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        let values = vec![0.0; row_idx.len()];
        let pattern = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let symbolic = factorize_symbolic_cholesky(
            pattern,
            Side::Lower,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let par = Par::Seq;
        let req = StackReq::any_of(&[
            symbolic.factorize_numeric_llt_scratch::<f64>(par, Default::default()),
            symbolic.solve_in_place_scratch::<f64>(1, par),
        ]);
        let factor = vec![0.0; symbolic.len_val()];
        Ok(Self {
            domain,
            unknown,
            nodes,
            col_ptr,
            row_idx,
            values,
            symbolic,
            factor,
            has_factor: false,
            mem: MemBuffer::new(req),
            refactor_after: 10,
            factorizations: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn gather(&self, full: &[f64], out: &mut [f64]) {
        for (o, &k) in out.iter_mut().zip(&self.nodes) {
            *o = full[k];
        }
    }

    pub fn scatter(&self, compact: &[f64], full: &mut [f64]) {
        full.fill(0.0);
        for (&v, &k) in compact.iter().zip(&self.nodes) {
            full[k] = v;
        }
    }

    /// Loads cell weights (indexed by the cell's lower-left node).
    pub fn assemble(&mut self, weight: &[f64]) {
        let d = &self.domain;
        let nx = d.nx();
        let inv_h2 = 1.0 / (d.spacing() * d.spacing());
        self.values.fill(0.0);
        for j in 0..d.ny() - 1 {
            for i in 0..nx - 1 {
                let c = j * nx + i;
                let w = weight[c];
                if w == 0.0 {
                    continue;
                }
                let w = w * inv_h2;
                let uc = self.unknown[c];
                for (slot, nb) in [(1usize, c + 1), (2, c + nx)] {
                    let un = self.unknown[nb];
                    if uc != NONE {
                        self.values[self.col_ptr[uc]] += w;
                    }
                    if un != NONE {
                        self.values[self.col_ptr[un]] += w;
                    }
                    if uc != NONE && un != NONE {
                        // right neighbour is stored before the upper one
                        let start = self.col_ptr[uc] + 1;
                        let pos = if slot == 1 || self.row_idx[start] == un { start } else { start + 1 };
                        debug_assert_eq!(self.row_idx[pos], un);
                        self.values[pos] -= w;
                    }
                }
            }
        }
    }

    /// `y = K x` on compact vectors.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for col in 0..self.nodes.len() {
            let start = self.col_ptr[col];
            y[col] += self.values[start] * x[col];
            for pos in start + 1..self.col_ptr[col + 1] {
                let row = self.row_idx[pos];
                let a = self.values[pos];
                y[row] += a * x[col];
                y[col] += a * x[row];
            }
        }
    }

    pub fn refactor(&mut self) -> Result<()> {
        let n = self.nodes.len();
        let pattern = SymbolicSparseColMatRef::new_checked(n, n, &self.col_ptr, None, &self.row_idx);
        let a = SparseColMatRef::new(pattern, &self.values);
        let stack = MemStack::new(&mut self.mem);
        self.symbolic
            .factorize_numeric_llt(
                &mut self.factor,
                a,
                Side::Lower,
                LltRegularization::default(),
                Par::Seq,
                stack,
                Default::default(),
            )
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        self.has_factor = true;
        self.factorizations += 1;
        Ok(())
    }

    fn precondition(&mut self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        let llt = LltRef::new(&self.symbolic, &self.factor);
        let stack = MemStack::new(&mut self.mem);
        let n = z.len();
        llt.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(z, n, 1),
            Par::Seq,
            stack,
        );
    }

    /// Solves `K x = b` to relative residual `tol`, starting from `x`.
    /// Returns the number of conjugate-gradient steps.
    pub fn solve(&mut self, b: &[f64], x: &mut [f64], tol: f64) -> Result<usize> {
        let n = b.len();
        if !self.has_factor {
            self.refactor()?;
        }
        let b_norm = norm(b);
        if b_norm == 0.0 {
            x.fill(0.0);
            return Ok(0);
        }
        let mut r = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        let mut steps = 0;
        let mut refreshed = false;
        'restart: loop {
            self.apply(x, &mut q);
            for i in 0..n {
                r[i] = b[i] - q[i];
            }
            if norm(&r) <= tol * b_norm {
                return Ok(steps);
            }
            self.precondition(&r, &mut z);
            p.copy_from_slice(&z);
            let mut rz = dot(&r, &z);
            for it in 0.. {
                self.apply(&p, &mut q);
                let alpha = rz / dot(&p, &q);
                for i in 0..n {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * q[i];
                }
                steps += 1;
                if norm(&r) <= tol * b_norm {
                    return Ok(steps);
                }
                if it + 1 >= self.refactor_after {
                    if refreshed {
                        if it + 1 >= 20 * self.refactor_after {
                            return Err(Error::Factorization(format!(
                                "preconditioned CG stalled at relative residual {:e}",
                                norm(&r) / b_norm
                            )));
                        }
                    } else {
                        self.refactor()?;
                        refreshed = true;
                        continue 'restart;
                    }
                }
                self.precondition(&r, &mut z);
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for i in 0..n {
                    p[i] = z[i] + beta * p[i];
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, ShapeTag};

    fn setup() -> (Arc<GridDomain>, WeightedLaplacian, Vec<f64>) {
        let d = Arc::new(build_domain(ShapeTag::Lshape { side: 1.0 }, 24).unwrap());
        let mut op = WeightedLaplacian::new(d.clone()).unwrap();
        let w: Vec<f64> = (0..d.len()).map(|k| 1.0 + (k % 7) as f64 * 0.3).collect();
        op.assemble(&w);
        (d, op, w)
    }

    #[test]
    fn quadratic_form_matches_cell_sum() {
        let (d, op, w) = setup();
        let full: Vec<f64> = (0..d.len())
            .map(|k| if d.is_inside(k) { ((k * 37) % 11) as f64 - 5.0 } else { 0.0 })
            .collect();
        let mut x = vec![0.0; op.len()];
        op.gather(&full, &mut x);
        let mut y = vec![0.0; op.len()];
        op.apply(&x, &mut y);
        let h2 = d.spacing().powi(2);
        let form = dot(&x, &y) * h2;
        let mut direct = 0.0;
        crate::grid::for_each_cell_gradient(&d, &full, |c, g2| direct += w[c] * g2 * h2);
        assert!((form - direct).abs() / direct < 1e-12, "{form} {direct}");
    }

    #[test]
    fn solve_reaches_tolerance_with_stale_factor() {
        let (d, mut op, w) = setup();
        let b: Vec<f64> = (0..op.len()).map(|i| 1.0 + (i % 5) as f64).collect();
        let mut x = vec![0.0; op.len()];
        op.solve(&b, &mut x, 1e-12).unwrap();
        let mut y = vec![0.0; op.len()];
        op.apply(&x, &mut y);
        let err: f64 = y.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-11 * norm(&b));
        assert!(x.iter().all(|&v| v > 0.0), "M-matrix inverse keeps positivity");

        let w2: Vec<f64> = w.iter().enumerate().map(|(k, v)| v * (1.0 + 0.05 * (k % 3) as f64)).collect();
        op.assemble(&w2);
        let before = op.factorizations;
        let mut x2 = x.clone();
        op.solve(&b, &mut x2, 1e-12).unwrap();
        op.apply(&x2, &mut y);
        let err: f64 = y.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-11 * norm(&b));
        assert!(op.factorizations <= before + 1);
        let _ = d;
    }
}
