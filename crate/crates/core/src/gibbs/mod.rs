//! The Gibbs measure `P_N(A) = ∫_A e^{N f(x,N)} dx / ∫_Ω e^{N f(x,N)} dx` and
//! quadrature-based checks of its law of large numbers and fluctuation limits.
//!
//! All vectors (`ξ`, boxes, maximizers) are in the box's local frame, which
//! is the world frame for unrotated domains. The fluctuation vector is
//! `Y = √N (X − x*)`; for a boundary maximum the boundary coordinate is
//! replaced by `N` times the inward distance to the face, so `Y` on that axis
//! is nonnegative with limiting law `Exp(|f'(x*)|)`.

mod ks;
mod sampler;

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{tangent_hessian, ConstantsReport};
use crate::derivatives::Differentiator;
use crate::error::{Error, Result};
use crate::linalg::{determinant, negated_inverse, Matrix, Vector};
use crate::problem::optimize::maximize_in_box;
use crate::problem::{BoundaryFace, BoxDomain, EpsilonSchedule, MaximumKind, ProblemSpec, ScalarField};
use crate::quadrature::{integrate_with, OracleOptions, OracleValue};

pub use ks::{empirical_limit_test, kolmogorov_survival, ks_statistic, limit_samples, ks_against_model, KsMarginal, KsReport, Law};
pub use sampler::{sample, sample_with, SampleBatch, SamplerOptions};

/// Residuals below this are treated as converged when judging decay.
pub const RESIDUAL_FLOOR: f64 = 1e-9;

/// Per-16x ratio of `ε(N)√N` above which the fluctuation hypothesis
/// `ε = o(1/√N)` is reported as violated.
pub const HYPOTHESIS_RATIO: f64 = 0.9;

/// Admissible slack for the bounded-ratio statistics: within this factor of
/// the value at the smallest `N`.
pub const BOUNDED_RATIO_FACTOR: f64 = 3.0;

pub struct GibbsMeasure {
    spec: ProblemSpec,
    n: u64,
    normalizer: OracleValue,
    opts: OracleOptions,
    unit: ScalarField,
}

#[derive(Debug, Clone, Serialize)]
pub struct MgfReport {
    pub xi: Vec<f64>,
    #[serde(rename = "N")]
    pub n: u64,
    pub mgf_value: f64,
    pub limit_prediction: f64,
    pub residual: f64,
    pub expected_decay: f64,
    /// Relative error estimate of `mgf_value` from the two quadratures.
    pub quadrature_error: f64,
    /// Set when `ε(N)√N` does not decay (fluctuation MGFs only).
    pub hypothesis_warning: bool,
}

impl MgfReport {
    fn new(xi: &[f64], n: u64, mgf_value: f64, limit_prediction: f64, expected_decay: f64) -> Self {
        MgfReport {
            xi: xi.to_vec(),
            n,
            mgf_value,
            limit_prediction,
            residual: (mgf_value / limit_prediction - 1.0).abs(),
            expected_decay,
            quadrature_error: 0.0,
            hypothesis_warning: false,
        }
    }
}

/// Whether `ε(N)√N` shrinks by at least [`HYPOTHESIS_RATIO`] per 16x in `N`.
pub fn fluctuation_hypothesis_holds(eps: &EpsilonSchedule, n: u64) -> bool {
    let now = eps.eval(n) * (n as f64).sqrt();
    if eps.is_zero() || now == 0.0 {
        return true;
    }
    let later = eps.eval(16 * n) * (16.0 * n as f64).sqrt();
    later / now <= HYPOTHESIS_RATIO
}

impl GibbsMeasure {
    /// Computes the normalizer with absolute tolerance `tol` on its scaled value.
    pub fn new(spec: &ProblemSpec, n: u64, tol: f64) -> Result<Self> {
        spec.check_range(n)?;
        let opts = OracleOptions::with_tol(tol);
        let unit = ScalarField::constant(spec.dimension(), 1.0);
        let normalizer = integrate_with(spec, Some(&unit), &[], None, n, &opts)?;
        Ok(GibbsMeasure {
            spec: spec.clone(),
            n,
            normalizer,
            opts,
            unit,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn log_normalizer(&self) -> f64 {
        self.normalizer.ln_abs()
    }

    pub fn normalizer(&self) -> &OracleValue {
        &self.normalizer
    }

    fn integral(&self, tilt: &[f64], region: Option<&BoxDomain>) -> Result<OracleValue> {
        integrate_with(&self.spec, Some(&self.unit), tilt, region, self.n, &self.opts)
    }

    /// `ln(num / normalizer)` and its relative error estimate.
    fn ln_ratio(&self, num: &OracleValue) -> (f64, f64) {
        let den = &self.normalizer;
        let ln = num.log_scale - den.log_scale + (num.scaled / den.scaled).ln();
        (ln, num.relative_error() + den.relative_error())
    }

    /// `P_N(b)` for a box `b` (local frame) inside the domain.
    pub fn measure_of(&self, b: &BoxDomain) -> Result<f64> {
        if b.dim() != self.spec.dimension() {
            return Err(Error::Domain(format!("box has dimension {}, problem {}", b.dim(), self.spec.dimension())));
        }
        let num = self.integral(&[], Some(b))?;
        let (ln, _) = self.ln_ratio(&num);
        Ok(ln.exp())
    }

    /// Maximizer of `N f(x,N) + t·x`, required to stay in `Ω′` (and on the
    /// binding face in the boundary case).
    pub fn tilted_maximizer(&self, tilt: &[f64]) -> Result<Vec<f64>> {
        let nf = self.n as f64;
        let t: Vec<f64> = tilt.iter().map(|v| v / nf).collect();
        let f = self.spec.local_f(self.n).linear_combination(1.0, &ScalarField::linear(t), 1.0);
        tilted_argmax(&self.spec, &f, self.n)
    }

    /// `M_X(ξ) = E[e^{ξ·X}]` against the limit `e^{ξ·x*}`.
    pub fn mgf_x(&self, xi: &[f64]) -> Result<MgfReport> {
        self.check_dim(xi)?;
        let nf = self.n as f64;
        let x_star = &self.spec.maximum().x_star;
        let prediction = dot(xi, x_star).exp();
        let decay = (1.0 / nf.sqrt()).max(self.spec.epsilon().eval(self.n));
        if xi.iter().all(|&v| v == 0.0) {
            return Ok(MgfReport::new(xi, self.n, 1.0, 1.0, decay));
        }
        self.tilted_maximizer(xi)?;
        let num = self.integral(xi, None)?;
        let (ln, err) = self.ln_ratio(&num);
        let mut r = MgfReport::new(xi, self.n, ln.exp(), prediction, decay);
        r.quadrature_error = err;
        Ok(r)
    }

    /// Tilt vector `t` with `ξ·Y = t·X − t·x*`.
    fn y_tilt(&self, xi: &[f64]) -> Vec<f64> {
        let nf = self.n as f64;
        let mut t: Vec<f64> = xi.iter().map(|v| v * nf.sqrt()).collect();
        if let Some(face) = self.spec.maximum().boundary {
            t[face.axis] = face.inward_sign() * nf * xi[face.axis];
        }
        t
    }

    /// `M_Y(ξ) = E[e^{ξ·Y}]` against the fluctuation limit.
    pub fn mgf_y(&self, xi: &[f64]) -> Result<MgfReport> {
        self.check_dim(xi)?;
        let model = FluctuationModel::from_spec(&self.spec)?;
        if let (Some(face), Some(rate)) = (model.boundary, model.rate) {
            let x1 = xi[face.axis];
            if x1.abs() >= rate * (1.0 - 1e-3) {
                return Err(Error::Pole { xi: x1, rate });
            }
        }
        let prediction = model.mgf(xi);
        let nf = self.n as f64;
        let decay = (1.0 / nf.sqrt()).max(self.spec.epsilon().eval(self.n) * nf.sqrt());
        let warning = self.spec.has_perturbation() && !fluctuation_hypothesis_holds(self.spec.epsilon(), self.n);
        let mut r = if xi.iter().all(|&v| v == 0.0) {
            MgfReport::new(xi, self.n, 1.0, prediction, decay)
        } else {
            let t = self.y_tilt(xi);
            self.tilted_maximizer(&t)?;
            let num = self.integral(&t, None)?;
            let (ln, err) = self.ln_ratio(&num);
            let mut r = MgfReport::new(xi, self.n, (ln - dot(&t, &self.spec.maximum().x_star)).exp(), prediction, decay);
            r.quadrature_error = err;
            r
        };
        r.hypothesis_warning = warning;
        Ok(r)
    }

    fn check_dim(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.spec.dimension() {
            return Err(Error::Domain(format!("xi has length {}, problem dimension {}", xi.len(), self.spec.dimension())));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizer of a tilted field, started from `x*(N)`, with the `Ω′` and face checks.
fn tilted_argmax(spec: &ProblemSpec, f: &ScalarField, n: u64) -> Result<Vec<f64>> {
    let start = spec.x_star_at(n)?;
    let domain = spec.local_domain();
    let x = maximize_in_box(f, &domain, &start, &[])?.point;
    let info = spec.maximum();
    if !info.neighborhood.contains_local(&x, 1e-12) {
        return Err(Error::TiltTooLarge(format!("tilted maximizer {x:?} at N = {n} leaves Ω′")));
    }
    if let Some(face) = info.boundary {
        if (x[face.axis] - face.coordinate(&domain)).abs() > 1e-12 {
            return Err(Error::TiltTooLarge(format!("tilted maximizer {x:?} at N = {n} leaves the binding face")));
        }
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GaussianInterior,
    ExpTimesGaussianBoundary,
}

/// Limit law of `Y(N)`.
#[derive(Debug, Clone)]
pub struct FluctuationModel {
    pub kind: ModelKind,
    /// `(−D²f(x*))^{-1}` on the Gaussian coordinates (tangent ones in the boundary case).
    pub covariance: Matrix,
    /// `|∂f/∂n(x*)|` on the boundary axis.
    pub rate: Option<f64>,
    pub boundary: Option<BoundaryFace>,
    /// Limit maximizer `x*` (local frame).
    pub center: Vec<f64>,
    pub rotation: Matrix,
}

impl FluctuationModel {
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        let info = spec.maximum();
        let domain = spec.local_domain();
        let diff = Differentiator::for_region(spec.local_f_limit(), &domain);
        let x = &info.x_star;
        let h = tangent_hessian(&diff.hessian(x)?, info.boundary_axis());
        let covariance = if h.nrows() == 0 { h } else { negated_inverse(&h)? };
        let (kind, rate) = match info.boundary {
            None => (ModelKind::GaussianInterior, None),
            Some(face) => (ModelKind::ExpTimesGaussianBoundary, Some(diff.gradient(x)?[face.axis].abs())),
        };
        Ok(FluctuationModel {
            kind,
            covariance,
            rate,
            boundary: info.boundary,
            center: x.clone(),
            rotation: spec.domain().rotation().clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Indices of the Gaussian coordinates, in order.
    pub fn gaussian_axes(&self) -> Vec<usize> {
        let skip = self.boundary.map(|f| f.axis);
        (0..self.dim()).filter(|&a| Some(a) != skip).collect()
    }

    /// Limit MGF: `exp(½ ξ̂ᵀΣξ̂)`, times `rate/(rate − ξ₁)` on the boundary axis.
    pub fn mgf(&self, xi: &[f64]) -> f64 {
        let axes = self.gaussian_axes();
        let v = Vector::from_iterator(axes.len(), axes.iter().map(|&a| xi[a]));
        let gauss = (0.5 * v.dot(&(&self.covariance * &v))).exp();
        match (self.boundary, self.rate) {
            (Some(face), Some(rate)) => rate / (rate - xi[face.axis]) * gauss,
            _ => gauss,
        }
    }

    /// `Y(N)` for a world-frame point.
    pub fn to_y(&self, n: u64, world: &[f64]) -> Vec<f64> {
        let nf = n as f64;
        let u = self.rotation.transpose() * Vector::from_column_slice(world);
        let mut y: Vec<f64> = (0..self.dim()).map(|a| nf.sqrt() * (u[a] - self.center[a])).collect();
        if let Some(face) = self.boundary {
            y[face.axis] = nf * face.inward_sign() * (u[face.axis] - self.center[face.axis]);
        }
        y
    }
}

/// One row of [`maximum_drift_check`].
#[derive(Debug, Clone, Serialize)]
pub struct DriftRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub epsilon: f64,
    pub x_star_n: Vec<f64>,
    pub drift: f64,
    /// `ε(N)|Dσ(x*)|/F'(2)`, widened by `1e-6` relative.
    pub bound: f64,
    pub ok: bool,
}

/// Locates `x*(N)` on the sweep and compares `|x*(N) − x*|` with the drift bound.
pub fn maximum_drift_check(spec: &ProblemSpec, consts: &ConstantsReport, n_sweep: &[u64]) -> Result<Vec<DriftRow>> {
    if !spec.has_perturbation() {
        return Err(Error::Precondition("drift check needs a nonzero perturbation".into()));
    }
    let domain = spec.local_domain();
    let x0 = &spec.maximum().x_star;
    let dsigma = Differentiator::for_region(spec.local_sigma(), &domain).gradient(x0)?.norm();
    n_sweep
        .iter()
        .map(|&n| {
            spec.check_range(n)?;
            let x = spec.x_star_in_neighborhood(n)?;
            let drift = x.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let eps = spec.epsilon().eval(n);
            let bound = eps * dsigma / consts.f2_prime * (1.0 + 1e-6);
            Ok(DriftRow {
                n,
                epsilon: eps,
                x_star_n: x,
                drift,
                bound,
                ok: drift <= bound,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MgfSweep {
    pub rows: Vec<MgfReport>,
    /// `residual(N_{k+1}) / residual(N_k)`.
    pub step_ratios: Vec<f64>,
    /// `ε(N)√N` fails to decay on the sweep (fluctuation sweeps only).
    pub hypothesis_violated: bool,
    /// Some step of the sweep fails to reduce a residual above [`RESIDUAL_FLOOR`].
    pub non_decay_detected: bool,
}

impl MgfSweep {
    fn from_rows(rows: Vec<MgfReport>, hypothesis_violated: bool) -> Self {
        let step_ratios: Vec<f64> = rows.windows(2).map(|w| w[1].residual / w[0].residual).collect();
        let non_decay_detected = rows
            .windows(2)
            .any(|w| w[1].residual > RESIDUAL_FLOOR && w[1].residual >= w[0].residual);
        MgfSweep {
            rows,
            step_ratios,
            hypothesis_violated,
            non_decay_detected,
        }
    }

    /// `residual(16N)/residual(N)` for every pair of sweep points 16x apart.
    pub fn ratios_per_16x(&self) -> Vec<(u64, f64)> {
        let mut out = Vec::new();
        for a in &self.rows {
            if let Some(b) = self.rows.iter().find(|b| b.n == 16 * a.n) {
                out.push((a.n, b.residual / a.residual));
            }
        }
        out
    }

    /// Largest `residual / expected_decay` on the sweep.
    pub fn max_tracking_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.residual / r.expected_decay).fold(0.0, f64::max)
    }
}

fn validate_sweep(n_sweep: &[u64]) -> Result<()> {
    if n_sweep.is_empty() || n_sweep.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("N sweep must be nonempty and strictly increasing".into()));
    }
    Ok(())
}

/// `M_X(ξ)` along the sweep.
pub fn lln_sweep(spec: &ProblemSpec, xi: &[f64], n_sweep: &[u64], tol: f64) -> Result<MgfSweep> {
    validate_sweep(n_sweep)?;
    let rows = n_sweep
        .par_iter()
        .map(|&n| GibbsMeasure::new(spec, n, tol)?.mgf_x(xi))
        .collect::<Result<Vec<_>>>()?;
    Ok(MgfSweep::from_rows(rows, false))
}

/// `M_Y(ξ)` along the sweep.
pub fn fluctuation_sweep(spec: &ProblemSpec, xi: &[f64], n_sweep: &[u64], tol: f64) -> Result<MgfSweep> {
    validate_sweep(n_sweep)?;
    let rows = n_sweep
        .par_iter()
        .map(|&n| GibbsMeasure::new(spec, n, tol)?.mgf_y(xi))
        .collect::<Result<Vec<_>>>()?;
    let violated = rows.iter().any(|r| r.hypothesis_warning);
    Ok(MgfSweep::from_rows(rows, violated))
}

/// One row of [`preposition1_check`].
#[derive(Debug, Clone, Serialize)]
pub struct PrepositionRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub x_tilde: Vec<f64>,
    /// `|x̃*(N) − x*(N) − Σξ/√N|`.
    pub shift_residual: f64,
    pub shift_stat: f64,
    /// `|f̃(x̃*) − f(x*(N)) − ξᵀΣξ/(2N)|`.
    pub value_residual: f64,
    pub value_stat: f64,
    /// `√(det D²f(x*(N),N) / det D²f̃(x̃*(N),N))`.
    pub det_root_ratio: f64,
    pub det_stat: f64,
    /// `|ξ|/(F'(2)√N)`, the first-order bound on `|x̃*(N) − x*(N)|`.
    pub shift_bound: f64,
    pub shift_bound_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrepositionReport {
    pub xi: Vec<f64>,
    pub rows: Vec<PrepositionRow>,
    pub shift_bounded: bool,
    pub value_bounded: bool,
    pub det_bounded: bool,
}

impl PrepositionReport {
    pub fn passed(&self) -> bool {
        self.shift_bounded && self.value_bounded && self.det_bounded && self.rows.iter().all(|r| r.shift_bound_ok)
    }
}

fn bounded(stats: &[f64]) -> bool {
    let base = stats.first().copied().unwrap_or(0.0).max(1e-8);
    stats.iter().all(|&s| s <= BOUNDED_RATIO_FACTOR * base)
}

/// Maximizes `f̃(x,N) = f(x,N) + ξ·(x − x*)/√N` on the sweep and evaluates
/// the three scaled estimates for the tilted maximum, value and curvature.
pub fn preposition1_check(spec: &ProblemSpec, consts: &ConstantsReport, xi: &[f64], n_sweep: &[u64]) -> Result<PrepositionReport> {
    validate_sweep(n_sweep)?;
    if spec.maximum().kind != MaximumKind::InteriorA {
        return Err(Error::TheoremMismatch("the tilted-maximum estimates need an interior maximum".into()));
    }
    if xi.len() != spec.dimension() {
        return Err(Error::Domain(format!("xi has length {}, problem dimension {}", xi.len(), spec.dimension())));
    }
    if spec.has_perturbation() && n_sweep.iter().any(|&n| !fluctuation_hypothesis_holds(spec.epsilon(), n)) {
        return Err(Error::Precondition("ε(N)√N does not decay on the sweep".into()));
    }
    let domain = spec.local_domain();
    let x0 = spec.maximum().x_star.clone();
    let limit_h = Differentiator::for_region(spec.local_f_limit(), &domain).hessian(&x0)?;
    let sigma = negated_inverse(&limit_h)?;
    let xiv = Vector::from_column_slice(xi);
    let sxi = &sigma * &xiv;
    let quad = xiv.dot(&sxi);
    let xi_norm = xiv.norm();

    let rows = n_sweep
        .iter()
        .map(|&n| {
            spec.check_range(n)?;
            let nf = n as f64;
            let sq = nf.sqrt();
            let f = spec.local_f(n);
            let x_n = spec.x_star_in_neighborhood(n)?;
            let t: Vec<f64> = xi.iter().map(|v| v / sq).collect();
            let offset = -dot(&t, &x0);
            let tilted = f.linear_combination(1.0, &ScalarField::linear(t.clone()), 1.0);
            let xt = tilted_argmax(spec, &tilted, n)?;
            let diff = Differentiator::for_region(&f, &domain);
            let shift: Vec<f64> = xt.iter().zip(&x_n).map(|(a, b)| a - b).collect();
            let shift_residual = shift.iter().zip(sxi.iter()).map(|(d, s)| (d - s / sq).powi(2)).sum::<f64>().sqrt();
            let f_tilde = f.eval(&xt) + dot(&t, &xt) + offset;
            let value_residual = (f_tilde - f.eval(&x_n) - quad / (2.0 * nf)).abs();
            let eps = spec.epsilon().eval(n);
            let value_scale = if eps > 0.0 { nf.powf(1.5).min(sq / eps) } else { nf.powf(1.5) };
            let det_root_ratio = (determinant(&diff.hessian(&x_n)?).abs() / determinant(&diff.hessian(&xt)?).abs()).sqrt();
            let shift_norm = shift.iter().map(|d| d * d).sum::<f64>().sqrt();
            let shift_bound = xi_norm / (consts.f2_prime * sq) * (1.0 + 1e-6);
            Ok(PrepositionRow {
                n,
                x_tilde: xt,
                shift_residual,
                shift_stat: shift_residual * nf,
                value_residual,
                value_stat: value_residual * value_scale,
                det_root_ratio,
                det_stat: (det_root_ratio - 1.0).abs() * sq,
                shift_bound,
                shift_bound_ok: shift_norm <= shift_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&PrepositionRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Ok(PrepositionReport {
        xi: xi.to_vec(),
        shift_bounded: bounded(&col(|r| r.shift_stat)),
        value_bounded: bounded(&col(|r| r.value_stat)),
        det_bounded: bounded(&col(|r| r.det_stat)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::estimate_constants;
    use crate::problem::catalog;
    use crate::special::normal_cdf;

    fn interval(a: f64, b: f64) -> BoxDomain {
        BoxDomain::new(vec![a], vec![b]).unwrap()
    }

    #[test]
    fn whole_domain_has_probability_one() {
        for name in ["gauss1d", "exp1d", "mixed2d"] {
            let spec = catalog::by_name(name).unwrap();
            let m = GibbsMeasure::new(&spec, 100, 1e-12).unwrap();
            assert_eq!(m.measure_of(&spec.local_domain()).unwrap(), 1.0);
        }
    }

    #[test]
    fn box_probabilities() {
        let g = GibbsMeasure::new(&catalog::gauss1d().unwrap(), 100, 1e-12).unwrap();
        let p = g.measure_of(&interval(-0.01, 0.01)).unwrap();
        let exact = 2.0 * normal_cdf(0.1) - 1.0;
        assert!((p - exact).abs() < 1e-10, "{p} vs {exact}");
        let e = GibbsMeasure::new(&catalog::exp1d().unwrap(), 50, 1e-12).unwrap();
        let p = e.measure_of(&interval(0.0, 0.02)).unwrap();
        assert!((p - (1.0 - (-1f64).exp()) / (1.0 - (-50f64).exp())).abs() < 1e-10);
        assert!(matches!(e.measure_of(&interval(-0.5, 0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn mgf_at_zero_is_one() {
        for name in ["gauss1d", "exp1d", "mixed2d"] {
            let spec = catalog::by_name(name).unwrap();
            let g = GibbsMeasure::new(&spec, 64, 1e-12).unwrap();
            let z = vec![0.0; spec.dimension()];
            assert_eq!(g.mgf_x(&z).unwrap().mgf_value, 1.0);
            let y = g.mgf_y(&z).unwrap();
            assert_eq!((y.mgf_value, y.limit_prediction), (1.0, 1.0));
        }
    }

    #[test]
    fn exp1d_mgf_x_closed_form() {
        let spec = catalog::exp1d().unwrap();
        for n in [25u64, 200] {
            let nf = n as f64;
            let r = GibbsMeasure::new(&spec, n, 1e-13).unwrap().mgf_x(&[0.5]).unwrap();
            let exact = nf / (nf - 0.5) * (-(-(nf - 0.5)).exp_m1()) / (-(-nf).exp_m1());
            assert!((r.mgf_value / exact - 1.0).abs() < 1e-11);
            assert_eq!(r.limit_prediction, 1.0);
        }
    }

    #[test]
    fn exp1d_mgf_y_and_pole() {
        let spec = catalog::exp1d().unwrap();
        let g = GibbsMeasure::new(&spec, 200, 1e-13).unwrap();
        let r = g.mgf_y(&[0.5]).unwrap();
        // N X on [0, N] is a truncated unit exponential: E e^{Y/2} = 2 (1 - e^{-N/2}) / (1 - e^{-N})
        let exact = 2.0 * (1.0 - (-100f64).exp()) / (1.0 - (-200f64).exp());
        assert!((r.mgf_value - exact).abs() < 1e-10);
        assert!((r.limit_prediction - 2.0).abs() < 1e-8);
        assert!(matches!(g.mgf_y(&[0.9995]), Err(Error::Pole { .. })));
    }

    #[test]
    fn gauss1d_mgf_y_matches_gaussian() {
        let g = GibbsMeasure::new(&catalog::gauss1d().unwrap(), 400, 1e-13).unwrap();
        let r = g.mgf_y(&[1.0]).unwrap();
        assert!((r.limit_prediction - 0.5f64.exp()).abs() < 1e-12);
        assert!(r.residual < 1e-10);
    }

    #[test]
    fn tilt_leaving_neighbourhood_is_refused() {
        let g = GibbsMeasure::new(&catalog::gauss1d().unwrap(), 25, 1e-12).unwrap();
        assert!(matches!(g.mgf_x(&[20.0]), Err(Error::TiltTooLarge(_))));
    }

    #[test]
    fn lln_residual_decays() {
        let spec = catalog::gauss1d().unwrap();
        let s = lln_sweep(&spec, &[0.5], &[25, 100, 400, 1600], 1e-13).unwrap();
        assert!(!s.non_decay_detected);
        for (_, r) in s.ratios_per_16x() {
            assert!(r <= 0.6);
        }
    }

    #[test]
    fn drift_of_quadratic_shift() {
        let spec = catalog::gauss1d_perturbed("shift", EpsilonSchedule::power(1.0, 1.0)).unwrap();
        let c = estimate_constants(&spec, 32, &[25, 100, 400], 1.1).unwrap();
        for row in maximum_drift_check(&spec, &c, &[25, 100, 400]).unwrap() {
            assert!((row.x_star_n[0] - 1.0 / row.n as f64).abs() < 1e-8);
            assert!(row.ok);
        }
        let plain = catalog::gauss1d().unwrap();
        let pc = estimate_constants(&plain, 32, &[25], 1.1).unwrap();
        assert!(matches!(maximum_drift_check(&plain, &pc, &[25]), Err(Error::Precondition(_))));
    }

    #[test]
    fn drift_along_tangent_only() {
        let spec = catalog::mixed2d().unwrap();
        let sigma = ScalarField::linear(vec![0.0, 1.0]);
        let spec = crate::problem::ProblemBuilder::new("mixed2d_drift", spec.domain().clone(), spec.f_limit().clone())
            .perturbation(sigma, EpsilonSchedule::power(1.0, 0.75))
            .build()
            .unwrap();
        let sweep = [25, 100, 400];
        let c = estimate_constants(&spec, 32, &sweep, 1.1).unwrap();
        for row in maximum_drift_check(&spec, &c, &sweep).unwrap() {
            assert_eq!(row.x_star_n[0], 0.0);
            assert!(row.ok, "{row:?}");
        }
    }

    #[test]
    fn preposition_on_quadratic_is_exact() {
        let spec = catalog::gauss1d().unwrap();
        let c = estimate_constants(&spec, 32, &[25], 1.1).unwrap();
        let r = preposition1_check(&spec, &c, &[1.0], &[25, 100, 400]).unwrap();
        assert!(r.passed());
        for row in &r.rows {
            assert!(row.shift_residual < 1e-12 && row.value_residual < 1e-14);
            assert!((row.det_root_ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hypothesis_flag() {
        assert!(fluctuation_hypothesis_holds(&EpsilonSchedule::power(1.0, 0.75), 100));
        assert!(!fluctuation_hypothesis_holds(&EpsilonSchedule::power(1.0, 0.5), 100));
        assert!(!fluctuation_hypothesis_holds(&EpsilonSchedule::power(1.0, 0.25), 100));
        assert!(fluctuation_hypothesis_holds(&EpsilonSchedule::zero(), 100));
    }
}
