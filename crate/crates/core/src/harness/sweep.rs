use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::QPath;
use crate::grid::{lq_norm, GridDomain};
use crate::plap::{lane_emden, minimize_rayleigh, SolveParams, SolveResult};
use crate::{Error, Result};

/// Smallest `p` a sweep may reach.
pub const P_FLOOR: f64 = 1.02;

/// Observables of one sweep point. `lane_emden_q_pow` is empty for `q = p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub l1: f64,
    pub linf: f64,
    pub linf_pow: f64,
    pub lane_emden_q_pow: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl SweepRecord {
    pub fn from_result(result: &SolveResult) -> Result<Self> {
        let (p, q) = (result.p, result.q);
        let linf = result.u.sup();
        let lane_emden_q_pow = if q != p && result.converged {
            let (v, _) = lane_emden(result)?;
            Some(lq_norm(&v, q)?.powf(q - p))
        } else {
            None
        };
        Ok(Self {
            p,
            q,
            lambda: result.lambda,
            l1: lq_norm(&result.u, 1.0)?,
            linf,
            linf_pow: linf.powf(q - p),
            lane_emden_q_pow,
            residual: result.residual,
            iterations: result.iterations,
        })
    }
}

/// Records of a sweep, in continuation order, with the fields they came from.
#[derive(Debug)]
pub struct Sweep {
    pub path: QPath,
    pub records: Vec<SweepRecord>,
    pub solutions: Vec<SolveResult>,
    /// Set when a solve failed to converge; the records stop before it.
    pub aborted: Option<Error>,
}

impl Sweep {
    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_records_csv(&self.records, out)
    }
}

/// CSV with header `p,q,lambda,l1,linf,linf_pow,lane_emden_q_pow,residual,iterations`.
pub fn write_records_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record([
            "p",
            "q",
            "lambda",
            "l1",
            "linf",
            "linf_pow",
            "lane_emden_q_pow",
            "residual",
            "iterations",
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Solves along `p_list` (strictly decreasing, in `[1.02, 2]`), each solve
/// warm-started from the previous minimiser.
pub fn run_sweep(
    domain: &Arc<GridDomain>,
    path: &QPath,
    p_list: &[f64],
    params: &SolveParams,
) -> Result<Sweep> {
    if p_list.is_empty() {
        return Err(Error::InvalidArgument("empty p list".into()));
    }
    if p_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(format!("p list {p_list:?} is not strictly decreasing")));
    }
    if p_list.iter().any(|&p| !(P_FLOOR..=2.0).contains(&p)) {
        return Err(Error::InvalidArgument(format!("p list {p_list:?} leaves [{P_FLOOR}, 2]")));
    }
    path.validate(p_list)?;
    params.validate()?;

    let mut sweep = Sweep { path: path.clone(), records: Vec::new(), solutions: Vec::new(), aborted: None };
    for (k, &p) in p_list.iter().enumerate() {
        let q = path.q_at(p, k)?;
        let warm = sweep.solutions.last().map(|s| &s.u);
        let result = minimize_rayleigh(domain, p, q, params, warm)?;
        if !result.converged {
            sweep.aborted = Some(Error::SweepAborted {
                p,
                reason: format!(
                    "no convergence after {} iterations (residual {:e})",
                    result.iterations, result.residual
                ),
            });
            break;
        }
        sweep.records.push(SweepRecord::from_result(&result)?);
        sweep.solutions.push(result);
    }
    Ok(sweep)
}
