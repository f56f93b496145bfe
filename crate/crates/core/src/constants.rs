//! Grid-certified values of the derivative and separation constants that
//! enter the remainder bounds.
//!
//! Sup-type constants are grid maxima times `safety_factor`; inf-type
//! constants are grid minima divided by it. Suprema over `N` range over the
//! sweep the report was computed for.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derivatives::{operator_norm_hessian, third_tensor_norm_bound, DerivativeSource, Differentiator};
use crate::error::{Error, Result};
use crate::linalg::{determinant, symmetric_eigenvalues, without_axis, Matrix};
use crate::problem::{BoxDomain, MaximumKind, ProblemSpec};

/// Tolerance factor used when auditing reported constants at random points.
pub const AUDIT_SLACK: f64 = 1.0001;

/// `None` <-> `null` <-> `+inf` for constants that can be vacuous.
mod serde_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Separate values of the second argument of the `min` defining the
/// `Ω`-constants, before the safety factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationTerms {
    /// `inf_N (f(x*(N),N) - sup_{Ω∖Ω′} f) / sup_{Ω∖Ω′} |x - x*(N)|^2`.
    #[serde(with = "serde_inf")]
    pub quadratic: f64,
    /// Same with the first power of the distance (boundary case).
    #[serde(with = "serde_inf")]
    pub linear: f64,
    /// Whether `Ω∖Ω′` is empty, which makes both terms vacuous.
    pub outer_region_empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub problem: String,
    pub kind: MaximumKind,
    /// `sup ‖D²f‖` over `Ω′` and the sweep.
    #[serde(rename = "F2")]
    pub f2: f64,
    /// `inf ‖(D²f)^{-1}‖^{-1}`; tangent Hessian in the boundary case, `+inf`
    /// (serialized `null`) when the tangent space is trivial.
    #[serde(rename = "F2_prime", with = "serde_inf")]
    pub f2_prime: f64,
    #[serde(rename = "F2_prime_Omega", with = "serde_inf")]
    pub f2_prime_omega: f64,
    /// `sup` of the Frobenius norm of the third-derivative tensor.
    #[serde(rename = "F3")]
    pub f3: f64,
    /// `sup_Ω |g|`.
    #[serde(rename = "G")]
    pub g: f64,
    /// `sup_{Ω′} |∇g|`.
    #[serde(rename = "G1")]
    pub g1: f64,
    /// `inf |∂f/∂n|` along the inward normal (boundary case only).
    #[serde(rename = "F1_prime")]
    pub f1_prime: Option<f64>,
    #[serde(rename = "F1_prime_Omega")]
    pub f1_prime_omega: Option<f64>,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub lambda_upper: f64,
    pub grid_res: usize,
    pub n_sweep: Vec<u64>,
    pub safety_factor: f64,
    pub fd_step: f64,
    pub derivative_source: DerivativeSource,
    pub separation: SeparationTerms,
}

#[derive(Debug, Clone, Copy)]
struct LocalExtrema {
    hess_norm_max: f64,
    tangent_min_sv: f64,
    third_max: f64,
    det_min: f64,
    det_max: f64,
    normal_min: f64,
    grad_g_max: f64,
}

impl LocalExtrema {
    fn identity() -> Self {
        LocalExtrema {
            hess_norm_max: 0.0,
            tangent_min_sv: f64::INFINITY,
            third_max: 0.0,
            det_min: f64::INFINITY,
            det_max: 0.0,
            normal_min: f64::INFINITY,
            grad_g_max: 0.0,
        }
    }

    fn merge(self, o: Self) -> Self {
        LocalExtrema {
            hess_norm_max: self.hess_norm_max.max(o.hess_norm_max),
            tangent_min_sv: self.tangent_min_sv.min(o.tangent_min_sv),
            third_max: self.third_max.max(o.third_max),
            det_min: self.det_min.min(o.det_min),
            det_max: self.det_max.max(o.det_max),
            normal_min: self.normal_min.min(o.normal_min),
            grad_g_max: self.grad_g_max.max(o.grad_g_max),
        }
    }
}

/// Hessian restricted to the coordinates tangent to the binding face.
pub(crate) fn tangent_hessian(h: &Matrix, boundary_axis: Option<usize>) -> Matrix {
    match boundary_axis {
        Some(a) => without_axis(h, a),
        None => h.clone(),
    }
}

/// Whether `p` lies in the closure of `domain ∖ nb`.
pub(crate) fn in_outer_closure(p: &[f64], domain: &BoxDomain, nb: &BoxDomain) -> bool {
    (0..p.len()).any(|a| {
        (nb.lower()[a] > domain.lower()[a] && p[a] <= nb.lower()[a])
            || (nb.upper()[a] < domain.upper()[a] && p[a] >= nb.upper()[a])
    })
}

fn outer_points(domain: &BoxDomain, nb: &BoxDomain, res: usize) -> Vec<Vec<f64>> {
    domain
        .grid_points(res)
        .chain(nb.grid_points(res))
        .filter(|p| in_outer_closure(p, domain, nb))
        .collect()
}

fn validate_inputs(spec: &ProblemSpec, grid_res: usize, n_sweep: &[u64], safety: f64) -> Result<()> {
    if grid_res < 16 {
        return Err(Error::Precondition(format!("grid_res {grid_res} < 16")));
    }
    if n_sweep.is_empty() {
        return Err(Error::Precondition("empty N sweep".into()));
    }
    for &n in n_sweep {
        spec.check_range(n)?;
    }
    if !(safety.is_finite() && safety >= 1.0) {
        return Err(Error::Precondition(format!("safety factor {safety} < 1")));
    }
    Ok(())
}

/// Distinct `N` values at which `f(·,N)` must be examined: a single one when
/// the problem is unperturbed.
fn effective_sweep(spec: &ProblemSpec, n_sweep: &[u64]) -> Vec<u64> {
    if spec.has_perturbation() {
        n_sweep.to_vec()
    } else {
        vec![n_sweep[0]]
    }
}

pub fn estimate_constants(spec: &ProblemSpec, grid_res: usize, n_sweep: &[u64], safety_factor: f64) -> Result<ConstantsReport> {
    validate_inputs(spec, grid_res, n_sweep, safety_factor)?;
    let domain = spec.local_domain();
    let info = spec.maximum();
    let nb = &info.neighborhood;
    let axis = info.boundary_axis();
    let step = crate::derivatives::DEFAULT_RELATIVE_STEP * domain.min_edge();
    let inner: Vec<Vec<f64>> = nb.grid_points(grid_res).collect();
    let outer = outer_points(&domain, nb, grid_res);

    let mut ext = LocalExtrema::identity();
    let mut quad = f64::INFINITY;
    let mut lin = f64::INFINITY;
    let mut source = DerivativeSource::Analytic;
    for n in effective_sweep(spec, n_sweep) {
        let f = spec.local_f(n);
        if !f.has_all_derivatives() {
            source = DerivativeSource::FiniteDifference;
        }
        let diff = Differentiator::new(&f, step, Some(&domain))?;
        let gdiff = Differentiator::new(spec.local_g(), step, Some(&domain))?;
        let partial: Result<Vec<LocalExtrema>> = inner
            .par_iter()
            .map(|p| {
                let b = diff.bundle(p)?;
                let ht = tangent_hessian(&b.hessian, axis);
                let eig = symmetric_eigenvalues(&ht);
                if eig.iter().any(|&e| e >= 0.0) {
                    return Err(Error::Definiteness(p.clone()));
                }
                let det = determinant(&ht).abs();
                Ok(LocalExtrema {
                    hess_norm_max: operator_norm_hessian(&b.hessian)?,
                    tangent_min_sv: eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs())),
                    third_max: third_tensor_norm_bound(&b.third),
                    det_min: det,
                    det_max: det,
                    normal_min: axis.map_or(f64::INFINITY, |a| b.gradient[a].abs()),
                    grad_g_max: gdiff.gradient(p)?.norm(),
                })
            })
            .collect();
        ext = partial?.into_iter().fold(ext, LocalExtrema::merge);

        if !outer.is_empty() {
            let x_n = spec.x_star_at(n)?;
            let f_star = f.eval(&x_n);
            let (sup_f, sup_d2) = outer.par_iter().map(|p| {
                let d2: f64 = p.iter().zip(&x_n).map(|(a, b)| (a - b).powi(2)).sum();
                (f.eval(p), d2)
            }).reduce(|| (f64::NEG_INFINITY, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
            let gap = f_star - sup_f;
            quad = quad.min(gap / sup_d2);
            lin = lin.min(gap / sup_d2.sqrt());
        }
    }

    let g_sup = domain
        .grid_points(grid_res)
        .chain(nb.grid_points(grid_res))
        .map(|p| spec.local_g().eval(&p).abs())
        .fold(0.0, f64::max);

    let s = safety_factor;
    let f2_prime = ext.tangent_min_sv / s;
    let f2_prime_omega = f2_prime.min(quad / s);
    let (f1_prime, f1_prime_omega) = match info.kind {
        MaximumKind::BoundaryB => {
            let f1 = ext.normal_min / s;
            (Some(f1), Some(f1.min(lin / s)))
        }
        MaximumKind::InteriorA => (None, None),
    };
    let (lambda, lambda_upper) = if ext.det_min.is_finite() { (ext.det_min / s, ext.det_max * s) } else { (1.0, 1.0) };
    let report = ConstantsReport {
        problem: spec.name().to_string(),
        kind: info.kind,
        f2: ext.hess_norm_max * s,
        f2_prime,
        f2_prime_omega,
        f3: ext.third_max * s,
        g: g_sup * s,
        g1: ext.grad_g_max * s,
        f1_prime,
        f1_prime_omega,
        lambda,
        lambda_upper,
        grid_res,
        n_sweep: n_sweep.to_vec(),
        safety_factor,
        fd_step: step,
        derivative_source: source,
        separation: SeparationTerms {
            quadratic: quad,
            linear: lin,
            outer_region_empty: outer.is_empty(),
        },
    };
    check_positivity(&report)?;
    Ok(report)
}

fn check_positivity(r: &ConstantsReport) -> Result<()> {
    let positive = |v: f64, eq: &'static str| -> Result<()> {
        if v > 0.0 {
            Ok(())
        } else {
            Err(Error::assumption(eq, format!("certified value {v:e} is not positive")))
        }
    };
    positive(r.f2_prime, "F'(2)")?;
    positive(r.f2_prime_omega, "F'(2)_Omega")?;
    positive(r.lambda, "lambda <= |det D2f|")?;
    if let Some(v) = r.f1_prime {
        positive(v, "F'(1)")?;
    }
    if let Some(v) = r.f1_prime_omega {
        positive(v, "F'(1)_Omega")?;
    }
    Ok(())
}

/// Recomputes `report` on a grid twice as fine.
pub fn refine_constants(report: &ConstantsReport, spec: &ProblemSpec) -> Result<ConstantsReport> {
    estimate_constants(spec, report.grid_res * 2, &report.n_sweep, report.safety_factor)
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub points: usize,
    pub checks: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, b: &BoxDomain) -> Vec<f64> {
    (0..b.dim()).map(|a| rng.random_range(b.lower()[a]..=b.upper()[a])).collect()
}

/// Checks every reported constant at `points` random points of `Ω′` (and of
/// `Ω` / `Ω∖Ω′` for the global constants) for each `N` of the report's sweep.
pub fn audit_constants(report: &ConstantsReport, spec: &ProblemSpec, points: usize, seed: u64) -> Result<AuditReport> {
    let domain = spec.local_domain();
    let info = spec.maximum();
    let nb = &info.neighborhood;
    let axis = info.boundary_axis();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner: Vec<Vec<f64>> = (0..points).map(|_| uniform_point(&mut rng, nb)).collect();
    let whole: Vec<Vec<f64>> = (0..points).map(|_| uniform_point(&mut rng, &domain)).collect();
    let mut outer = Vec::new();
    if !report.separation.outer_region_empty {
        let mut tries = 0;
        while outer.len() < points && tries < 1000 * points {
            let p = uniform_point(&mut rng, &domain);
            if in_outer_closure(&p, &domain, nb) {
                outer.push(p);
            }
            tries += 1;
        }
    }
    let k = AUDIT_SLACK;
    let mut violations = Vec::new();
    let mut checks = 0;
    let mut flag = |ok: bool, what: String| {
        checks += 1;
        if !ok {
            violations.push(what);
        }
    };
    let gdiff = Differentiator::new(spec.local_g(), report.fd_step, Some(&domain))?;
    for p in &whole {
        let gv = spec.local_g().eval(p).abs();
        flag(gv <= report.g * k, format!("|g| = {gv} > G at {p:?}"));
    }
    for n in effective_sweep(spec, &report.n_sweep) {
        let f = spec.local_f(n);
        let diff = Differentiator::new(&f, report.fd_step, Some(&domain))?;
        for p in &inner {
            let b = diff.bundle(p)?;
            let ht = tangent_hessian(&b.hessian, axis);
            let eig = symmetric_eigenvalues(&ht);
            let hn = operator_norm_hessian(&b.hessian)?;
            flag(hn <= report.f2 * k, format!("N={n}: |D2f| = {hn} > F2 at {p:?}"));
            let sv = eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
            flag(sv * k >= report.f2_prime, format!("N={n}: min|eig| = {sv} < F2' at {p:?}"));
            let t = third_tensor_norm_bound(&b.third);
            flag(t <= report.f3 * k, format!("N={n}: |D3f| = {t} > F3 at {p:?}"));
            let det = determinant(&ht).abs();
            flag(
                det * k >= report.lambda && det <= report.lambda_upper * k,
                format!("N={n}: |det| = {det} outside [lambda, Lambda] at {p:?}"),
            );
            let gg = gdiff.gradient(p)?.norm();
            flag(gg <= report.g1 * k, format!("|Dg| = {gg} > G1 at {p:?}"));
            if let (Some(a), Some(f1)) = (axis, report.f1_prime) {
                let d = b.gradient[a].abs();
                flag(d * k >= f1, format!("N={n}: |df/dn| = {d} < F1' at {p:?}"));
            }
        }
        if !outer.is_empty() {
            let x_n = spec.x_star_at(n)?;
            let f_star = f.eval(&x_n);
            for p in &outer {
                let d2: f64 = p.iter().zip(&x_n).map(|(a, b)| (a - b).powi(2)).sum();
                let drop = f_star - f.eval(p);
                flag(
                    drop * k >= report.f2_prime_omega * d2,
                    format!("N={n}: f* - f = {drop} < F2'_Omega |x-x*|^2 at {p:?}"),
                );
                if let Some(f1o) = report.f1_prime_omega {
                    flag(
                        drop * k >= f1o * d2.sqrt(),
                        format!("N={n}: f* - f = {drop} < F1'_Omega |x-x*| at {p:?}"),
                    );
                }
            }
        }
    }
    Ok(AuditReport {
        points,
        checks,
        violations,
    })
}
