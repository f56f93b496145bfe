//! Run configuration, sweep execution and report files.
//!
//! A run writes `report.json` (every check, plus the soundness assertions)
//! and `convergence.csv` (one row per `N`, columns [`CSV_HEADER`]) into the
//! output directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{audit_constants, estimate_constants, AuditReport, ConstantsReport};
use crate::error::{Error, Result};
use crate::gibbs::{
    empirical_limit_test, fluctuation_sweep, limit_samples, ks_against_model, lln_sweep, preposition1_check, sample_with,
    FluctuationModel, GibbsMeasure, KsReport, MgfSweep, PrepositionReport, SamplerOptions,
};
use crate::laplace::{approximate, Theorem};
use crate::problem::{catalog, BoxDomain, MaximumKind, ProblemSpec, ProblemSummary};
use crate::problem::config::ProblemDef;
use crate::quadrature::{integrate_with, OracleOptions};

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "LAPLACE_CERT_OUT";
pub const DEFAULT_OUTPUT: &str = "laplace-cert-out";
pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "convergence.csv";
pub const CSV_HEADER: [&str; 9] = [
    "N",
    "leading",
    "oracle",
    "abs_error",
    "remainder_magnitude",
    "bound_ok",
    "mgf_x_residual",
    "mgf_y_residual",
    "ks_stat",
];
pub const PLOT_HEADER: [&str; 5] = ["N", "log_N", "log_rel_error", "log_mgf_x_residual", "log_mgf_y_residual"];

/// Audit size used by the `constants` check.
pub const AUDIT_POINTS: usize = 1000;

/// Floor on KS thresholds; the pilot can only raise it.
pub const KS_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Laplace,
    Constants,
    Lln,
    Fluctuations,
    Preposition1,
    Sampler,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Laplace,
        Check::Constants,
        Check::Lln,
        Check::Fluctuations,
        Check::Preposition1,
        Check::Sampler,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Check::Laplace => "laplace",
            Check::Constants => "constants",
            Check::Lln => "lln",
            Check::Fluctuations => "fluctuations",
            Check::Preposition1 => "preposition1",
            Check::Sampler => "sampler",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown check {s:?} (expected one of laplace, constants, lln, fluctuations, preposition1, sampler)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: ProblemDef,
    pub n_sweep: Vec<u64>,
    pub grid_res: usize,
    pub tol: f64,
    pub safety_factor: f64,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub output_path: PathBuf,
    /// MGF argument; defaults to 0.5 in every coordinate.
    pub xi: Option<Vec<f64>>,
    pub sample_count: usize,
}

/// Partial configuration as read from a file or flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigPatch {
    pub problem: Option<ProblemDef>,
    pub n_sweep: Option<Vec<u64>>,
    pub grid_res: Option<usize>,
    pub tol: Option<f64>,
    pub safety_factor: Option<f64>,
    pub seed: Option<u64>,
    pub checks: Option<Vec<String>>,
    pub output_path: Option<PathBuf>,
    pub xi: Option<Vec<f64>>,
    pub sample_count: Option<usize>,
}

impl RunConfigPatch {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: RunConfigPatch) -> RunConfigPatch {
        RunConfigPatch {
            problem: other.problem.or(self.problem),
            n_sweep: other.n_sweep.or(self.n_sweep),
            grid_res: other.grid_res.or(self.grid_res),
            tol: other.tol.or(self.tol),
            safety_factor: other.safety_factor.or(self.safety_factor),
            seed: other.seed.or(self.seed),
            checks: other.checks.or(self.checks),
            output_path: other.output_path.or(self.output_path),
            xi: other.xi.or(self.xi),
            sample_count: other.sample_count.or(self.sample_count),
        }
    }

    /// Fills defaults and validates. `default_output` is used when no output path is set.
    pub fn finish(self, default_output: PathBuf) -> Result<RunConfig> {
        let problem = self.problem.ok_or_else(|| Error::Config("no problem given".into()))?;
        let checks = match self.checks {
            Some(names) => {
                let mut v = names.iter().map(|s| s.trim().parse()).collect::<Result<Vec<Check>>>()?;
                v.sort();
                v.dedup();
                v
            }
            None => vec![Check::Laplace],
        };
        let cfg = RunConfig {
            problem,
            n_sweep: self.n_sweep.unwrap_or_else(|| vec![25, 100, 400, 1600]),
            grid_res: self.grid_res.unwrap_or(64),
            tol: self.tol.unwrap_or(1e-11),
            safety_factor: self.safety_factor.unwrap_or(1.1),
            seed: self.seed.unwrap_or(0),
            checks,
            output_path: self.output_path.unwrap_or(default_output),
            xi: self.xi,
            sample_count: self.sample_count.unwrap_or(20_000),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sweep.is_empty() || self.n_sweep.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!("n_sweep must be nonempty and strictly increasing, got {:?}", self.n_sweep)));
        }
        if self.checks.is_empty() {
            return Err(Error::Config("no checks selected".into()));
        }
        if self.grid_res < 16 {
            return Err(Error::Config(format!("grid_res must be at least 16, got {}", self.grid_res)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.safety_factor >= 1.0) {
            return Err(Error::Config(format!("safety_factor must be at least 1, got {}", self.safety_factor)));
        }
        if self.sample_count < 100 && (self.checks.contains(&Check::Fluctuations) || self.checks.contains(&Check::Sampler)) {
            return Err(Error::Config(format!("sample_count must be at least 100, got {}", self.sample_count)));
        }
        Ok(())
    }

    fn wants(&self, c: Check) -> bool {
        self.checks.contains(&c)
    }
}

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    SoundnessFailure = 1,
    Config = 2,
    Assumption = 3,
    Budget = 4,
}

impl Status {
    pub fn for_error(e: &Error) -> Status {
        match e {
            Error::Config(_) | Error::Io(_) | Error::InvalidProblem(_) | Error::Range { .. } => Status::Config,
            Error::Budget { .. } => Status::Budget,
            _ => Status::Assumption,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub leading: Option<f64>,
    pub oracle: Option<f64>,
    pub abs_error: Option<f64>,
    pub relative_error: Option<f64>,
    pub remainder_magnitude: Option<f64>,
    pub bound_ok: Option<bool>,
    pub mgf_x_residual: Option<f64>,
    pub mgf_y_residual: Option<f64>,
    pub ks_stat: Option<f64>,
}

impl ConvergenceRow {
    fn empty(n: u64) -> Self {
        ConvergenceRow {
            n,
            leading: None,
            oracle: None,
            abs_error: None,
            relative_error: None,
            remainder_magnitude: None,
            bound_ok: None,
            mgf_x_residual: None,
            mgf_y_residual: None,
            ks_stat: None,
        }
    }

    fn csv_record(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        vec![
            self.n.to_string(),
            f(self.leading),
            f(self.oracle),
            f(self.abs_error),
            f(self.remainder_magnitude),
            self.bound_ok.map(|b| b.to_string()).unwrap_or_default(),
            f(self.mgf_x_residual),
            f(self.mgf_y_residual),
            f(self.ks_stat),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub theorem: Theorem,
    pub leading: f64,
    pub oracle: f64,
    pub abs_error: f64,
    pub remainder_magnitude: f64,
    pub ln_leading: f64,
    pub ln_oracle: f64,
    pub ln_remainder: f64,
    pub relative_error: f64,
    pub relative_remainder: f64,
    pub oracle_error_estimate: f64,
    pub bound_ok: bool,
    pub omega_bound: f64,
    pub omega_terms: std::collections::BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplerRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub acceptance_rate: f64,
    pub mean: Vec<f64>,
    pub ks: KsReport,
    /// KS threshold from the pilot run on exact limit draws at the same count.
    pub ks_threshold: f64,
    pub pilot_ks: f64,
    /// Largest `|empirical − quadrature| / standard error` over the test boxes.
    pub box_z_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub check: Check,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub problem: ProblemSummary,
    pub config: RunConfig,
    pub constants: Option<ConstantsReport>,
    pub audit: Option<AuditReport>,
    pub laplace: Vec<LaplaceRow>,
    pub lln: Option<MgfSweep>,
    pub fluctuations: Option<MgfSweep>,
    pub preposition1: Option<PrepositionReport>,
    pub sampler: Vec<SamplerRow>,
    pub rows: Vec<ConvergenceRow>,
    pub warnings: Vec<String>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl RunReport {
    pub fn status(&self) -> Status {
        if self.assertions.iter().all(|a| a.passed) {
            Status::Ok
        } else {
            Status::SoundnessFailure
        }
    }
}

fn default_xi(spec: &ProblemSpec) -> Vec<f64> {
    vec![0.5; spec.dimension()]
}

/// Boundary-axis component kept below half the MGF pole.
fn fluctuation_xi(xi: &[f64], model: &FluctuationModel) -> Vec<f64> {
    let mut v = xi.to_vec();
    if let (Some(face), Some(rate)) = (model.boundary, model.rate) {
        v[face.axis] = v[face.axis].clamp(-0.5 * rate, 0.5 * rate);
    }
    v
}

/// Boxes of Gaussian-scale size around `x*(N)`, clipped to the domain.
fn test_boxes(spec: &ProblemSpec, n: u64, seed: u64) -> Result<Vec<BoxDomain>> {
    let domain = spec.local_domain();
    let c = spec.x_star_at(n)?;
    let s = 2.0 / (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b0c5);
    let mut out = Vec::new();
    while out.len() < 10 {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for a in 0..c.len() {
            let l = (c[a] + rng.random_range(-1.5..0.5) * s).max(domain.lower()[a]);
            let h = (l + rng.random_range(0.3..1.5) * s).min(domain.upper()[a]);
            lo.push(l);
            hi.push(h);
        }
        if let Ok(b) = BoxDomain::new(lo, hi) {
            out.push(b);
        }
    }
    Ok(out)
}

fn sampler_row(spec: &ProblemSpec, consts: &ConstantsReport, cfg: &RunConfig, n: u64, box_check: bool) -> Result<SamplerRow> {
    let measure = GibbsMeasure::new(spec, n, cfg.tol)?;
    let batch = sample_with(&measure, consts, cfg.sample_count, cfg.seed, &SamplerOptions::default())?;
    let model = FluctuationModel::from_spec(spec)?;
    let ks = empirical_limit_test(&batch, &model)?;
    let pilot = ks_against_model(&limit_samples(&model, cfg.sample_count, cfg.seed)?, &model)?.max_statistic();
    let box_z_max = if box_check {
        let mut worst: f64 = 0.0;
        for b in test_boxes(spec, n, cfg.seed)? {
            let p = measure.measure_of(&b)?;
            let q = batch.fraction_in(&measure, &b);
            let se = (p * (1.0 - p) / cfg.sample_count as f64).sqrt().max(1.0 / cfg.sample_count as f64);
            worst = worst.max((p - q).abs() / se);
        }
        Some(worst)
    } else {
        None
    };
    Ok(SamplerRow {
        n,
        acceptance_rate: batch.acceptance_rate,
        mean: batch.mean.clone(),
        ks_threshold: KS_THRESHOLD.max(3.0 * pilot),
        pilot_ks: pilot,
        ks,
        box_z_max,
    })
}

/// Executes the selected checks. Errors abort the run.
pub fn execute(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let spec = cfg.problem.resolve()?;
    for &n in &cfg.n_sweep {
        spec.check_range(n)?;
    }
    let xi = match &cfg.xi {
        Some(v) if v.len() != spec.dimension() => {
            return Err(Error::Config(format!("xi has length {}, problem dimension {}", v.len(), spec.dimension())))
        }
        Some(v) => v.clone(),
        None => default_xi(&spec),
    };
    let needs_constants = [Check::Laplace, Check::Constants, Check::Preposition1, Check::Sampler, Check::Fluctuations]
        .iter()
        .any(|&c| cfg.wants(c));
    let constants = if needs_constants {
        Some(estimate_constants(&spec, cfg.grid_res, &cfg.n_sweep, cfg.safety_factor)?)
    } else {
        None
    };
    let mut assertions = Vec::new();
    let mut warnings = Vec::new();
    let mut rows: Vec<ConvergenceRow> = cfg.n_sweep.iter().map(|&n| ConvergenceRow::empty(n)).collect();

    let audit = if cfg.wants(Check::Constants) {
        let a = audit_constants(constants.as_ref().expect("constants computed"), &spec, AUDIT_POINTS, cfg.seed)?;
        assertions.push(Assertion {
            check: Check::Constants,
            name: "random audit of every constant".into(),
            passed: a.passed(),
            detail: format!("{} checks at {} points, {} violations", a.checks, a.points, a.violations.len()),
        });
        Some(a)
    } else {
        None
    };

    let mut laplace = Vec::new();
    if cfg.wants(Check::Laplace) {
        let consts = constants.as_ref().expect("constants computed");
        let opts = OracleOptions::with_tol(cfg.tol);
        laplace = cfg
            .n_sweep
            .par_iter()
            .map(|&n| -> Result<LaplaceRow> {
                let r = approximate(&spec, consts, n)?;
                let o = integrate_with(&spec, None, &[], None, n, &opts)?;
                Ok(LaplaceRow {
                    n,
                    theorem: r.theorem,
                    leading: r.leading,
                    oracle: o.value(),
                    abs_error: r.abs_error(&o),
                    remainder_magnitude: r.remainder_magnitude,
                    ln_leading: r.ln_leading,
                    ln_oracle: o.ln_abs(),
                    ln_remainder: r.ln_remainder,
                    relative_error: r.relative_error(&o),
                    relative_remainder: r.relative_remainder(),
                    oracle_error_estimate: o.relative_error(),
                    bound_ok: r.encloses(&o),
                    omega_bound: r.omega_bound,
                    omega_terms: r.omega_terms,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for (row, l) in rows.iter_mut().zip(&laplace) {
            row.leading = Some(l.leading);
            row.oracle = Some(l.oracle);
            row.abs_error = Some(l.abs_error);
            row.relative_error = Some(l.relative_error);
            row.remainder_magnitude = Some(l.remainder_magnitude);
            row.bound_ok = Some(l.bound_ok);
            assertions.push(Assertion {
                check: Check::Laplace,
                name: format!("oracle inside enclosure at N = {}", l.n),
                passed: l.bound_ok,
                detail: format!("relative error {:e}, relative remainder {:e}", l.relative_error, l.relative_remainder),
            });
        }
    }

    let lln = if cfg.wants(Check::Lln) {
        let s = lln_sweep(&spec, &xi, &cfg.n_sweep, cfg.tol)?;
        for (row, r) in rows.iter_mut().zip(&s.rows) {
            row.mgf_x_residual = Some(r.residual);
        }
        assertions.push(Assertion {
            check: Check::Lln,
            name: "M_X residual decays along the sweep".into(),
            passed: !s.non_decay_detected,
            detail: format!("step ratios {:?}", s.step_ratios),
        });
        Some(s)
    } else {
        None
    };

    let mut sampler = Vec::new();
    let fluctuations = if cfg.wants(Check::Fluctuations) {
        let model = FluctuationModel::from_spec(&spec)?;
        let s = fluctuation_sweep(&spec, &fluctuation_xi(&xi, &model), &cfg.n_sweep, cfg.tol)?;
        for (row, r) in rows.iter_mut().zip(&s.rows) {
            row.mgf_y_residual = Some(r.residual);
        }
        if s.hypothesis_violated {
            warnings.push("ε(N)√N does not decay on the sweep: the fluctuation limit is not guaranteed".into());
            if s.non_decay_detected {
                warnings.push("M_Y residuals do not decay (hypothesis violation detected)".into());
            }
        } else {
            assertions.push(Assertion {
                check: Check::Fluctuations,
                name: "M_Y residual decays along the sweep".into(),
                passed: !s.non_decay_detected,
                detail: format!("step ratios {:?}", s.step_ratios),
            });
        }
        Some(s)
    } else {
        None
    };

    if cfg.wants(Check::Fluctuations) || cfg.wants(Check::Sampler) {
        let consts = constants.as_ref().expect("constants computed");
        let box_check = cfg.wants(Check::Sampler);
        sampler = cfg
            .n_sweep
            .iter()
            .map(|&n| sampler_row(&spec, consts, cfg, n, box_check))
            .collect::<Result<Vec<_>>>()?;
        for (row, s) in rows.iter_mut().zip(&sampler) {
            row.ks_stat = Some(s.ks.max_statistic());
            if let Some(z) = s.box_z_max {
                assertions.push(Assertion {
                    check: Check::Sampler,
                    name: format!("sampler box frequencies match quadrature at N = {}", s.n),
                    passed: z <= 5.0,
                    detail: format!("largest deviation {z:.2} standard errors over 10 boxes"),
                });
            }
            if s.ks.max_statistic() > s.ks_threshold {
                warnings.push(format!(
                    "KS {:.4} exceeds the pilot threshold {:.4} at N = {}",
                    s.ks.max_statistic(),
                    s.ks_threshold,
                    s.n
                ));
            }
        }
    }

    let preposition1 = if cfg.wants(Check::Preposition1) {
        if spec.maximum().kind != MaximumKind::InteriorA {
            warnings.push("preposition1 skipped: the tilted-maximum estimates need an interior maximum".into());
            None
        } else {
            let r = preposition1_check(&spec, constants.as_ref().expect("constants computed"), &xi, &cfg.n_sweep)?;
            assertions.push(Assertion {
                check: Check::Preposition1,
                name: "tilted-maximum statistics stay bounded".into(),
                passed: r.passed(),
                detail: format!("shift {}, value {}, determinant {}", r.shift_bounded, r.value_bounded, r.det_bounded),
            });
            Some(r)
        }
    } else {
        None
    };

    let passed = assertions.iter().all(|a| a.passed);
    Ok(RunReport {
        problem: spec.summary(),
        config: cfg.clone(),
        constants,
        audit,
        laplace,
        lln,
        fluctuations,
        preposition1,
        sampler,
        rows,
        warnings,
        assertions,
        passed,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Writes `report.json` and `convergence.csv` into `dir`.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    fs::write(dir.join(REPORT_FILE), json + "\n")?;
    let mut w = csv::Writer::from_path(dir.join(CSV_FILE)).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in &report.rows {
        w.write_record(row.csv_record()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs and writes the report; the status reflects soundness or the first error.
pub fn run(cfg: &RunConfig) -> (Status, Result<RunReport>) {
    match execute(cfg) {
        Ok(report) => match write_report(&report, &cfg.output_path) {
            Ok(()) => (report.status(), Ok(report)),
            Err(e) => (Status::for_error(&e), Err(e)),
        },
        Err(e) => (Status::for_error(&e), Err(e)),
    }
}

/// One line per catalog problem: name, dimension, kind, closed form, description.
pub fn list_problems() -> String {
    let mut out = format!("{:<12} {:>3} {:<11} {:<12} {}\n", "name", "m", "kind", "closed_form", "description");
    for spec in catalog::catalog() {
        out.push_str(&format!(
            "{:<12} {:>3} {:<11} {:<12} {}\n",
            spec.name(),
            spec.dimension(),
            spec.maximum().kind.as_str(),
            if spec.exact().is_some() { "yes" } else { "no" },
            spec.description()
        ));
    }
    out
}

#[derive(Debug, Deserialize)]
struct ReportRows {
    rows: Vec<ConvergenceRow>,
}

/// Log-log convergence data from a report: `(csv text, slope of log error vs log N)`.
pub fn plotdata(report_json: &str) -> Result<(String, Option<f64>)> {
    let parsed: ReportRows = serde_json::from_str(report_json).map_err(|e| Error::Config(format!("malformed report: {e}")))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PLOT_HEADER).map_err(csv_err)?;
    let ln = |v: Option<f64>| v.filter(|x| *x > 0.0).map(|x| format!("{:e}", x.ln())).unwrap_or_default();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in &parsed.rows {
        let log_n = (r.n as f64).ln();
        if let Some(e) = r.relative_error.filter(|e| *e > 0.0) {
            xs.push(log_n);
            ys.push(e.ln());
        }
        w.write_record([r.n.to_string(), log_n.to_string(), ln(r.relative_error), ln(r.mgf_x_residual), ln(r.mgf_y_residual)])
            .map_err(csv_err)?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?)
        .expect("csv output is utf-8");
    Ok((text, least_squares_slope(&xs, &ys)))
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}
