//! The acceptance suite: twelve numbered criteria evaluated on shared,
//! lazily computed artifacts.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::cheeger::{cheeger_inner_parallel, cheeger_tv, TvParams};
use crate::grid::{build_domain, rayleigh_quotient, GridDomain, ShapeTag};
use crate::harness::{
    check_corollary_le1, check_lemma_estim, check_path_agreement, check_q_monotonicity,
    check_quotient_bound, check_theorem_main, random_test_fields, write_records_csv,
    CheckEntry, EstimBranch, LimitReport, QPath, Sweep, Tolerances,
};
use crate::plap::{minimize_rayleigh, SolveParams};
use crate::special::{gamma, sobolev_constant, unit_ball_volume, SobolevParams};
use crate::{Error, Result};

/// First positive zero of the Bessel function `J_0`.
pub const BESSEL_J0_ZERO: f64 = 2.404_825_557_695_773;

pub const CRITERIA: u32 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    /// Resolution of every sweep.
    pub sweep_n: usize,
    /// Resolution of the `p = q = 2` calibration solves.
    pub calibration_n: usize,
    /// Resolution of the Cheeger cross-validation.
    pub cheeger_n: usize,
    pub p_list: Vec<f64>,
    pub seed: u64,
    pub test_fields: usize,
    pub solve: SolveParams,
    pub tv: TvParams,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self::at_resolution(128)
    }
}

impl SuiteConfig {
    /// Sweeps at `n`, calibration and Cheeger runs at `2n`.
    pub fn at_resolution(n: usize) -> Self {
        Self {
            sweep_n: n,
            calibration_n: 2 * n,
            cheeger_n: 2 * n,
            p_list: vec![1.6, 1.4, 1.2, 1.1, 1.05],
            seed: 0,
            test_fields: 20,
            solve: SolveParams::default(),
            tv: TvParams::default(),
            tolerances: Tolerances::default(),
        }
    }

    fn solve_params(&self) -> SolveParams {
        SolveParams { seed: self.seed, ..self.solve.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<CheckEntry>,
    pub notes: Vec<String>,
}

impl CriterionResult {
    fn new(id: u32, title: &str, checks: Vec<CheckEntry>, notes: Vec<String>) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self { id, title: title.into(), pass, checks, notes }
    }

    fn error(id: u32, title: &str, err: &str) -> Self {
        Self { id, title: title.into(), pass: false, checks: Vec::new(), notes: vec![err.to_string()] }
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckEntry> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// One `PASS`/`FAIL` line.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let failing: Vec<&str> = self.failing().map(|c| c.name.as_str()).collect();
        if failing.is_empty() && self.notes.is_empty() {
            format!("{verdict} [{:2}] {}", self.id, self.title)
        } else if failing.is_empty() {
            format!("{verdict} [{:2}] {} ({})", self.id, self.title, self.notes.join("; "))
        } else {
            format!("{verdict} [{:2}] {} (failing: {})", self.id, self.title, failing.join(", "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: SuiteConfig,
    pub criteria: Vec<CriterionResult>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn new(config: SuiteConfig, criteria: Vec<CriterionResult>) -> Self {
        let pass = criteria.iter().all(|c| c.pass);
        Self { config, criteria, pass }
    }
}

type Shared<T> = OnceLock<std::result::Result<T, String>>;

fn shared<T>(cell: &Shared<T>, init: impl FnOnce() -> Result<T>) -> std::result::Result<&T, String> {
    cell.get_or_init(|| init().map_err(|e| e.to_string())).as_ref().map_err(Clone::clone)
}

/// Square and disk paths of the limit sweeps.
pub fn square_paths() -> Vec<QPath> {
    vec![QPath::ConstantOne, QPath::EqualP, QPath::Power { beta: 2.0 }, QPath::Power { beta: -1.0 }]
}

pub struct Suite {
    config: SuiteConfig,
    square: Shared<Arc<GridDomain>>,
    disk: Shared<Arc<GridDomain>>,
    h_square: Shared<f64>,
    h_disk: Shared<f64>,
    square_sweeps: Shared<Vec<Sweep>>,
    disk_sweep: Shared<Sweep>,
}

impl Suite {
    pub fn new(config: SuiteConfig) -> Self {
        Self {
            config,
            square: OnceLock::new(),
            disk: OnceLock::new(),
            h_square: OnceLock::new(),
            h_disk: OnceLock::new(),
            square_sweeps: OnceLock::new(),
            disk_sweep: OnceLock::new(),
        }
    }

    pub fn config(&self) -> &SuiteConfig {
        &self.config
    }

    fn square(&self) -> std::result::Result<&Arc<GridDomain>, String> {
        shared(&self.square, || Ok(Arc::new(build_domain(ShapeTag::Square { side: 1.0 }, self.config.sweep_n)?)))
    }

    fn disk(&self) -> std::result::Result<&Arc<GridDomain>, String> {
        shared(&self.disk, || Ok(Arc::new(build_domain(ShapeTag::Disk { radius: 1.0 }, self.config.sweep_n)?)))
    }

    /// Inner-parallel Cheeger constant of the sweep square.
    fn h_square(&self) -> std::result::Result<f64, String> {
        let d = self.square()?;
        shared(&self.h_square, || Ok(cheeger_inner_parallel(d, 1e-9)?.h)).copied()
    }

    fn h_disk(&self) -> std::result::Result<f64, String> {
        let d = self.disk()?;
        shared(&self.h_disk, || Ok(cheeger_inner_parallel(d, 1e-9)?.h)).copied()
    }

    pub fn square_sweeps(&self) -> std::result::Result<&[Sweep], String> {
        let d = self.square()?;
        shared(&self.square_sweeps, || {
            square_paths()
                .iter()
                .map(|path| crate::harness::run_sweep(d, path, &self.config.p_list, &self.config.solve_params()))
                .collect()
        })
        .map(|v| v.as_slice())
    }

    pub fn disk_sweep(&self) -> std::result::Result<&Sweep, String> {
        let d = self.disk()?;
        shared(&self.disk_sweep, || {
            crate::harness::run_sweep(d, &QPath::EqualP, &self.config.p_list, &self.config.solve_params())
        })
    }

    fn all_sweeps(&self) -> std::result::Result<Vec<&Sweep>, String> {
        let mut v: Vec<&Sweep> = self.square_sweeps()?.iter().collect();
        v.push(self.disk_sweep()?);
        Ok(v)
    }

    fn square_report(&self, path: &QPath) -> std::result::Result<LimitReport, String> {
        let h = self.h_square()?;
        let sweep = self
            .square_sweeps()?
            .iter()
            .find(|s| &s.path == path)
            .ok_or_else(|| format!("no sweep along {path}"))?;
        Ok(check_theorem_main(sweep, h, &self.config.tolerances))
    }

    pub fn criterion(&self, id: u32) -> CriterionResult {
        let (title, outcome) = match id {
            1 => ("special constants", self.constants()),
            2 => ("solver calibration at p = q = 2", self.calibration()),
            3 => ("Cheeger cross-validation", self.cheeger()),
            4 => ("lambda limit along four q-paths", self.lambda_limits()),
            5 => ("L1 and sup-power limits", self.norm_limits()),
            6 => ("sup bound on the disk", self.disk_bound()),
            7 => ("superlevel ratios and coarea", self.superlevel()),
            8 => ("L-infinity estimate on every record", self.estimate()),
            9 => ("Lane-Emden identity and q-monotonicity", self.identities()),
            10 => ("Rayleigh quotient bound", self.quotient_bound()),
            11 => ("Lane-Emden limits on q = p^2", self.lane_emden()),
            12 => ("determinism", self.determinism()),
            _ => ("unknown criterion", Err(format!("no criterion {id}"))),
        };
        match outcome {
            Ok((checks, notes)) => CriterionResult::new(id, title, checks, notes),
            Err(e) => CriterionResult::error(id, title, &e),
        }
    }

    /// Criteria 1 to 11.
    pub fn report_without_determinism(&self) -> VerifyReport {
        VerifyReport::new(self.config.clone(), (1..CRITERIA).map(|id| self.criterion(id)).collect())
    }

    pub fn run(&self) -> VerifyReport {
        VerifyReport::new(self.config.clone(), (1..=CRITERIA).map(|id| self.criterion(id)).collect())
    }

    /// Named files: `report.json` and one CSV per sweep.
    pub fn artifacts(&self, report: &VerifyReport) -> Result<Vec<(String, Vec<u8>)>> {
        let mut files = Vec::new();
        let mut json = serde_json::to_vec_pretty(report)?;
        json.push(b'\n');
        files.push(("report.json".to_string(), json));
        if let Ok(sweeps) = self.square_sweeps() {
            for s in sweeps {
                let mut buf = Vec::new();
                write_records_csv(&s.records, &mut buf)?;
                files.push((format!("sweep_square_{}.csv", s.path.label()), buf));
            }
        }
        if let Ok(s) = self.disk_sweep() {
            let mut buf = Vec::new();
            write_records_csv(&s.records, &mut buf)?;
            files.push((format!("sweep_disk_{}.csv", s.path.label()), buf));
        }
        Ok(files)
    }
}

type Outcome = std::result::Result<(Vec<CheckEntry>, Vec<String>), String>;

fn err(e: Error) -> String {
    e.to_string()
}

impl Suite {
    fn constants(&self) -> Outcome {
        let g = gamma(0.5).map_err(err)?;
        let w2 = unit_ball_volume(2).map_err(err)?;
        let w3 = unit_ball_volume(3).map_err(err)?;
        let s = sobolev_constant(SobolevParams::new(2, 1.001).map_err(err)?).map_err(err)?;
        Ok((
            vec![
                CheckEntry::absolute("gamma_half", g, PI.sqrt(), 1e-10),
                CheckEntry::absolute("omega_2", w2, PI, 1e-12),
                CheckEntry::absolute("omega_3", w3, 4.0 * PI / 3.0, 1e-12),
                CheckEntry::relative("sobolev_2_1.001", s, 2.0 * PI.sqrt(), 0.005),
            ],
            Vec::new(),
        ))
    }

    fn calibration(&self) -> Outcome {
        let n = self.config.calibration_n;
        let params = self.config.solve_params();
        let sq = Arc::new(build_domain(ShapeTag::Square { side: 1.0 }, n).map_err(err)?);
        let disk = Arc::new(build_domain(ShapeTag::Disk { radius: 1.0 }, n).map_err(err)?);
        let a = minimize_rayleigh(&sq, 2.0, 2.0, &params, None).map_err(err)?;
        let b = minimize_rayleigh(&disk, 2.0, 2.0, &params, None).map_err(err)?;
        let mut notes = Vec::new();
        for r in [&a, &b] {
            if !r.converged {
                notes.push(format!("unconverged solve, residual {:e}", r.residual));
            }
        }
        Ok((
            vec![
                CheckEntry::relative("square_lambda", a.lambda, 2.0 * PI * PI, 0.01),
                CheckEntry::relative("disk_lambda", b.lambda, BESSEL_J0_ZERO * BESSEL_J0_ZERO, 0.01),
            ],
            notes,
        ))
    }

    fn cheeger(&self) -> Outcome {
        let n = self.config.cheeger_n;
        let sq = Arc::new(build_domain(ShapeTag::Square { side: 1.0 }, n).map_err(err)?);
        let disk = Arc::new(build_domain(ShapeTag::Disk { radius: 1.0 }, n).map_err(err)?);
        let inner = cheeger_inner_parallel(&sq, 1e-9).map_err(err)?;
        let tv = cheeger_tv(&sq, &self.config.tv).map_err(err)?;
        let tv_disk = cheeger_tv(&disk, &self.config.tv).map_err(err)?;
        Ok((
            vec![
                CheckEntry::relative("square_tv_vs_inner", tv.h, inner.h, 0.02),
                CheckEntry::relative("square_inner", inner.h, 2.0 + PI.sqrt(), 0.01),
                CheckEntry::relative("disk_tv", tv_disk.h, 2.0, 0.02),
            ],
            Vec::new(),
        ))
    }

    fn lambda_limits(&self) -> Outcome {
        let tol = &self.config.tolerances;
        let mut checks = Vec::new();
        let mut limits = Vec::new();
        for path in square_paths() {
            let rep = self.square_report(&path)?;
            for name in ["lambda_limit", "lambda_limit_fit"] {
                if let Some(c) = rep.check(name) {
                    checks.push(CheckEntry { name: format!("{}_{}", rep.path, c.name), ..c.clone() });
                }
            }
            if let Some(c) = rep.checks.iter().find(|c| c.name.starts_with("sweep_complete")) {
                checks.push(c.clone());
            }
            match rep.extrapolated_lambda {
                Some(e) => limits.push((rep.path.clone(), e.value)),
                None => checks.push(CheckEntry::failed(format!("{}_lambda_limit", rep.path), rep.h_ref, tol.lambda)),
            }
        }
        checks.extend(check_path_agreement(&limits, tol.path_agreement));
        Ok((checks, vec![format!("h_ref = {}", self.h_square()?)]))
    }

    fn norm_limits(&self) -> Outcome {
        let mut checks = Vec::new();
        for path in square_paths() {
            let rep = self.square_report(&path)?;
            for name in ["l1_limit", "l1_limit_fit", "linf_pow_limit", "linf_pow_limit_fit"] {
                match rep.check(name) {
                    Some(c) => checks.push(CheckEntry { name: format!("{}_{}", rep.path, c.name), ..c.clone() }),
                    None => checks.push(CheckEntry::failed(format!("{}_{name}", rep.path), 1.0, 0.0)),
                }
            }
        }
        Ok((checks, Vec::new()))
    }

    fn disk_bound(&self) -> Outcome {
        let sweep = self.disk_sweep()?;
        let tol = &self.config.tolerances;
        let mut checks = Vec::new();
        match (&sweep.aborted, sweep.solutions.last()) {
            (None, Some(last)) => {
                checks.push(CheckEntry::relative("linf_vs_inverse_area", last.u.sup(), 1.0 / PI, tol.linf_bounds));
                let rep = check_theorem_main(sweep, self.h_disk()?, tol);
                for name in ["linf_lower", "linf_upper"] {
                    if let Some(c) = rep.check(name) {
                        checks.push(c.clone());
                    }
                }
            }
            (Some(e), _) => return Err(e.to_string()),
            (None, None) => return Err("empty disk sweep".into()),
        }
        Ok((checks, vec![format!("p = {}", sweep.records.last().map_or(f64::NAN, |r| r.p))]))
    }

    fn superlevel(&self) -> Outcome {
        let rep = self.square_report(&QPath::ConstantOne)?;
        let mut checks = Vec::new();
        for name in ["superlevel_ratio", "coarea_tv", "coarea_l1"] {
            match rep.check(name) {
                Some(c) => checks.push(c.clone()),
                None => checks.push(CheckEntry::failed(name, 0.0, 0.0)),
            }
        }
        let notes = rep
            .superlevel
            .iter()
            .flat_map(|s| s.levels.iter())
            .map(|l| format!("t = {:.4}: ratio {:.4}", l.t, l.ratio))
            .collect();
        Ok((checks, notes))
    }

    fn estimate(&self) -> Outcome {
        let slack = self.config.tolerances.estim_slack;
        let mut worst: f64 = 0.0;
        let (mut sub, mut sup, mut total, mut passed) = (0usize, 0usize, 0usize, 0usize);
        for sweep in self.all_sweeps()? {
            for sol in &sweep.solutions {
                for sigma in [1.0, 2.0] {
                    let c = check_lemma_estim(sol, sigma, slack).map_err(err)?;
                    worst = worst.max(c.lhs / c.rhs);
                    total += 1;
                    passed += c.pass as usize;
                    match c.branch {
                        EstimBranch::Sublinear => sub += 1,
                        EstimBranch::Superlinear => sup += 1,
                    }
                }
            }
        }
        let count = |name: &str, n: usize| CheckEntry {
            name: name.into(),
            value: n as f64,
            reference: 1.0,
            tolerance: 0.0,
            pass: n >= 1,
        };
        Ok((
            vec![
                CheckEntry::at_most("estimate_worst_ratio", worst, 1.0, slack),
                count("estimate_sublinear_records", sub),
                count("estimate_superlinear_records", sup),
            ],
            vec![format!("{passed} of {total} evaluations pass")],
        ))
    }

    fn identities(&self) -> Outcome {
        let tol = &self.config.tolerances;
        let mut defect: f64 = 0.0;
        let mut count = 0;
        for sweep in self.all_sweeps()? {
            for r in &sweep.records {
                if let Some(vq) = r.lane_emden_q_pow {
                    defect = defect.max((vq - r.lambda).abs() / r.lambda);
                    count += 1;
                }
            }
        }
        let mono = check_q_monotonicity(self.square()?, 1.5, &[0.8, 1.0, 1.2, 1.5, 1.8], &self.config.solve_params())
            .map_err(err)?;
        let ratio = mono.scaled.windows(2).map(|w| w[1] / w[0]).fold(f64::NEG_INFINITY, f64::max);
        let identity = CheckEntry {
            name: "lane_emden_identity".into(),
            value: defect,
            reference: 0.0,
            tolerance: tol.identity,
            pass: count > 0 && defect <= tol.identity,
        };
        Ok((
            vec![
                identity,
                CheckEntry {
                    name: "q_monotonicity_max_ratio".into(),
                    value: ratio,
                    reference: 1.0,
                    tolerance: 0.0,
                    pass: mono.strictly_decreasing,
                },
            ],
            vec![format!("{count} records with q != p"), format!("scaled values {:?}", mono.scaled)],
        ))
    }

    fn quotient_bound(&self) -> Outcome {
        let mut worst_random: f64 = 0.0;
        let mut worst_previous: f64 = 0.0;
        let mut points = 0;
        let mut ok = true;
        for sweep in self.all_sweeps()? {
            let domain = match sweep.solutions.first() {
                Some(s) => s.u.domain().clone(),
                None => continue,
            };
            let fields = random_test_fields(&domain, self.config.test_fields, self.config.seed);
            for (k, sol) in sweep.solutions.iter().enumerate() {
                let c = check_quotient_bound(sol, &fields).map_err(err)?;
                worst_random = worst_random.max(c.lambda / c.min_quotient);
                ok &= c.pass;
                if k > 0 {
                    let bound = rayleigh_quotient(&sweep.solutions[k - 1].u, sol.p, sol.q).map_err(err)?;
                    worst_previous = worst_previous.max(sol.lambda / bound);
                }
                points += 1;
            }
        }
        Ok((
            vec![
                CheckEntry { name: "random_fields".into(), value: worst_random, reference: 1.0, tolerance: 0.0, pass: ok },
                CheckEntry::at_most("previous_minimiser", worst_previous, 1.0, 0.0),
            ],
            vec![format!("{points} sweep points, {} fields each", self.config.test_fields)],
        ))
    }

    fn lane_emden(&self) -> Outcome {
        let h = self.h_square()?;
        let sweep = self
            .square_sweeps()?
            .iter()
            .find(|s| s.path == QPath::Power { beta: 2.0 })
            .ok_or("no q = p^2 sweep")?;
        let rep = check_corollary_le1(&sweep.records, h, &self.config.tolerances);
        let notes = rep
            .rows
            .iter()
            .map(|r| format!("p = {}: |v|_q^(q-p) = {:.4}, |v|_inf^(q-p) = {:.4}", r.p, r.v_q_pow, r.v_inf_pow))
            .collect();
        Ok((rep.checks, notes))
    }

    fn determinism(&self) -> Outcome {
        let mut checks = Vec::new();
        let reduced = SuiteConfig { seed: self.config.seed, ..SuiteConfig::at_resolution(24) };
        let runs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
            .map(|_| {
                let suite = Suite::new(reduced.clone());
                let report = suite.report_without_determinism();
                suite.artifacts(&report)
            })
            .collect::<Result<_>>()
            .map_err(err)?;
        let same = runs[0] == runs[1];
        checks.push(CheckEntry {
            name: "reduced_suite_artifacts".into(),
            value: runs[0].len() as f64,
            reference: runs[1].len() as f64,
            tolerance: 0.0,
            pass: same,
        });

        let original = self
            .square_sweeps()?
            .iter()
            .find(|s| s.path == QPath::ConstantOne)
            .ok_or("no q = 1 sweep")?;
        let rerun = crate::harness::run_sweep(
            self.square()?,
            &QPath::ConstantOne,
            &self.config.p_list,
            &self.config.solve_params(),
        )
        .map_err(err)?;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_records_csv(&original.records, &mut a).map_err(err)?;
        write_records_csv(&rerun.records, &mut b).map_err(err)?;
        checks.push(CheckEntry {
            name: "sweep_csv_rerun".into(),
            value: a.len() as f64,
            reference: b.len() as f64,
            tolerance: 0.0,
            pass: a == b,
        });
        Ok((checks, vec![format!("{} files compared", runs[0].len() + 1)]))
    }
}
