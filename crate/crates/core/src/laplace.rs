//! Leading Laplace terms and explicit remainder bounds.
//!
//! Three cases: a one-dimensional boundary maximum (`T1`), an interior
//! maximum in any dimension (`T2`) and a boundary maximum on one flat face in
//! dimension `m >= 2` (`T3`). Leading terms and remainders carry the common
//! factor `e^{N f(x*(N),N)}` in log space.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::{tangent_hessian, ConstantsReport};
use crate::derivatives::Differentiator;
use crate::error::{Error, Result};
use crate::linalg::{determinant, symmetric_eigenvalues};
use crate::problem::{neighborhood_fit_radius, MaximumKind, ProblemSpec};
use crate::quadrature::OracleValue;
use crate::special::{gamma, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Theorem {
    T1,
    T2,
    T3,
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceResult {
    pub theorem: Theorem,
    #[serde(rename = "N")]
    pub n: u64,
    /// `ln |leading|`.
    pub ln_leading: f64,
    pub leading_sign: f64,
    /// `leading_sign * exp(ln_leading)`; may under- or overflow.
    pub leading: f64,
    pub omega_bound: f64,
    /// Named summands of `omega_bound` (and of its sub-bounds).
    pub omega_terms: BTreeMap<String, f64>,
    pub ln_remainder: f64,
    pub remainder_magnitude: f64,
    /// `[leading - remainder, leading + remainder]`.
    pub enclosure: [f64; 2],
    /// `x*(N)` in the local frame.
    pub x_star: Vec<f64>,
    /// `f(x*(N), N)`.
    pub f_star: f64,
}

impl LaplaceResult {
    /// Oracle and leading term on the oracle's scale.
    fn on_scale(&self, oracle: &OracleValue) -> (f64, f64, f64) {
        let s = oracle.log_scale;
        let lead = self.leading_sign * (self.ln_leading - s).exp();
        let rem = (self.ln_remainder - s).exp();
        (oracle.scaled, lead, rem)
    }

    /// Whether the oracle value lies in the enclosure (compared in log space).
    pub fn encloses(&self, oracle: &OracleValue) -> bool {
        let (v, lead, rem) = self.on_scale(oracle);
        (v - lead).abs() <= rem
    }

    /// `|oracle - leading| / |oracle|`.
    pub fn relative_error(&self, oracle: &OracleValue) -> f64 {
        let (v, lead, _) = self.on_scale(oracle);
        ((v - lead) / v).abs()
    }

    /// `|oracle - leading|`, on the natural scale.
    pub fn abs_error(&self, oracle: &OracleValue) -> f64 {
        let (v, lead, _) = self.on_scale(oracle);
        (v - lead).abs() * oracle.log_scale.exp()
    }

    /// `remainder / |leading|`.
    pub fn relative_remainder(&self) -> f64 {
        (self.ln_remainder - self.ln_leading).exp()
    }
}

/// How the radius of the Gaussian tail region is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusMode {
    /// `R = N^{-1/3}`.
    CubeRootN,
    Fixed(f64),
}

/// Natural log of the tail-lemma bound on `∫_{|x|>=R} |x|^k e^{-a N |x|^2} dx`:
/// `π^{m/2}/Γ(m/2) (aN)^{-(k+m+1)/2} [Γ(k+m) + (1 + ρ)^{k+m-1}] e^{-η}` with
/// `(ρ, η) = (√a N^{1/6}, a N^{1/3})` or `(√(aN) R, a N R^2)`.
pub fn ln_gaussian_tail_bound(m: usize, k: u32, a: f64, n: f64, mode: RadiusMode) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("tail bound needs a > 0, got {a}")));
    }
    if m == 0 || !(n >= 1.0) {
        return Err(Error::Domain(format!("tail bound needs m >= 1 and N >= 1 (m={m}, N={n})")));
    }
    let (rho, eta) = match mode {
        RadiusMode::CubeRootN => (a.sqrt() * n.powf(1.0 / 6.0), a * n.cbrt()),
        RadiusMode::Fixed(r) => {
            if !(r > 0.0) {
                return Err(Error::Domain(format!("tail bound needs R > 0, got {r}")));
            }
            ((a * n).sqrt() * r, a * n * r * r)
        }
    };
    let mf = m as f64;
    let km = (k as usize + m) as f64;
    let bracket = gamma(km) + (1.0 + rho).powf(km - 1.0);
    Ok(0.5 * mf * PI.ln() - ln_gamma(0.5 * mf) - 0.5 * (km + 1.0) * (a * n).ln() + bracket.ln() - eta)
}

pub fn gaussian_tail_bound(m: usize, k: u32, a: f64, n: f64, mode: RadiusMode) -> Result<f64> {
    ln_gaussian_tail_bound(m, k, a, n, mode).map(f64::exp)
}

/// Quantities of `f(·,N)` and `g` at `x*(N)`.
struct PeakData {
    x: Vec<f64>,
    f_star: f64,
    g_star: f64,
    /// Inward normal derivative (boundary case).
    normal: Option<f64>,
    /// `|det|` of the (tangent) Hessian.
    abs_det: f64,
}

fn peak_data(spec: &ProblemSpec, consts: &ConstantsReport, n: u64) -> Result<PeakData> {
    spec.check_range(n)?;
    if consts.kind != spec.maximum().kind {
        return Err(Error::TheoremMismatch(format!(
            "constants were computed for a {} maximum",
            consts.kind.as_str()
        )));
    }
    if spec.has_perturbation() && !consts.n_sweep.contains(&n) {
        return Err(Error::Precondition(format!("N = {n} is outside the sweep the constants certify")));
    }
    let x = spec.x_star_in_neighborhood(n)?;
    let info = spec.maximum();
    let domain = spec.local_domain();
    if info.kind == MaximumKind::InteriorA {
        let radius = (n as f64).powf(-1.0 / 3.0);
        let mut shifted = info.clone();
        shifted.x_star = x.clone();
        if neighborhood_fit_radius(&shifted, &domain, &info.neighborhood) < radius {
            return Err(Error::assumption("U_N ⊂ Ω′", format!("ball of radius N^(-1/3) = {radius} leaves Ω′ at N = {n}")));
        }
    }
    let f = spec.local_f(n);
    let diff = Differentiator::for_region(&f, &domain);
    let h = tangent_hessian(&diff.hessian(&x)?, info.boundary_axis());
    let eig = symmetric_eigenvalues(&h);
    let abs_det = determinant(&h).abs();
    if eig.iter().any(|&e| e >= 0.0) || !(abs_det > 0.0) {
        return Err(Error::Degeneracy(abs_det));
    }
    let normal = match info.boundary {
        Some(face) => {
            let d = face.inward_sign() * diff.gradient(&x)?[face.axis];
            if d >= 0.0 {
                return Err(Error::assumption("inward derivative < 0", format!("{d:e} at N = {n}")));
            }
            Some(d)
        }
        None => None,
    };
    Ok(PeakData {
        f_star: f.eval(&x),
        g_star: spec.local_g().eval(&x),
        x,
        normal,
        abs_det,
    })
}

fn require(v: Option<f64>, name: &'static str) -> Result<f64> {
    v.ok_or(Error::MissingConstant(name))
}

fn finish(
    theorem: Theorem,
    n: u64,
    peak: PeakData,
    ln_leading_rest: f64,
    ln_remainder_rest: f64,
    omega_bound: f64,
    omega_terms: BTreeMap<String, f64>,
) -> LaplaceResult {
    let nf = n as f64;
    let ln_leading = nf * peak.f_star + ln_leading_rest + peak.g_star.abs().ln();
    let leading_sign = if peak.g_star == 0.0 { 0.0 } else { peak.g_star.signum() };
    let ln_remainder = nf * peak.f_star + ln_remainder_rest + omega_bound.ln();
    let leading = leading_sign * ln_leading.exp();
    let remainder_magnitude = ln_remainder.exp();
    LaplaceResult {
        theorem,
        n,
        ln_leading,
        leading_sign,
        leading,
        omega_bound,
        omega_terms,
        ln_remainder,
        remainder_magnitude,
        enclosure: [leading - remainder_magnitude, leading + remainder_magnitude],
        x_star: peak.x,
        f_star: peak.f_star,
    }
}

/// One-dimensional boundary maximum.
pub fn approx_1d_boundary(spec: &ProblemSpec, consts: &ConstantsReport, n: u64) -> Result<LaplaceResult> {
    if spec.maximum().kind != MaximumKind::BoundaryB {
        return Err(Error::TheoremMismatch("interior maximum; use the interior approximation".into()));
    }
    if spec.dimension() != 1 {
        return Err(Error::TheoremMismatch("boundary maximum in m >= 2; use the multivariate boundary approximation".into()));
    }
    let f1 = require(consts.f1_prime, "F1_prime")?;
    let f1o = require(consts.f1_prime_omega, "F1_prime_Omega")?;
    let peak = peak_data(spec, consts, n)?;
    let nf = n as f64;
    let sq = nf.sqrt();
    let gs = peak.g_star.abs();
    let terms = [
        ("curvature", gs * consts.f2 / f1.powi(3) * (0.5 * consts.f2).exp()),
        ("weight_gradient", consts.g1 / (f1 * f1)),
        ("outer_tail", consts.g / f1o * nf * (-sq * f1o).exp()),
        ("inner_tail", gs / f1 * nf * (-sq * f1).exp()),
    ];
    let omega: f64 = terms.iter().map(|t| t.1).sum();
    let normal = peak.normal.expect("boundary peak has a normal derivative").abs();
    Ok(finish(
        Theorem::T1,
        n,
        peak,
        -nf.ln() - normal.ln(),
        -2.0 * nf.ln(),
        omega,
        terms.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    ))
}

/// Bound on `|ω_I|` in dimension `m` at `N`.
fn omega_interior(m: usize, consts: &ConstantsReport, g_star: f64, n: f64) -> [(&'static str, f64); 2] {
    let mf = m as f64;
    let (f2p, f2po, f3) = (consts.f2_prime, consts.f2_prime_omega, consts.f3);
    let local = PI.powf(0.5 * mf) * gamma(0.5 * (mf + 1.0)) / gamma(0.5 * mf)
        * (0.5 * f2p).powf(-0.5 * (mf + 1.0))
        * (f3 / (3.0 * f2p) * f3.exp() * g_star.abs() + consts.g1);
    let tail = PI.powf(0.5 * mf) / gamma(0.5 * mf)
        * (0.5 * f2po).powf(-0.5 * (mf + 1.0))
        * (gamma(mf) + (1.0 + f2po.sqrt() * n.powf(1.0 / 6.0) / 2f64.sqrt()).powf(mf - 1.0))
        * (consts.g + g_star.abs())
        * (-n.cbrt() * f2po).exp();
    [("local", local), ("tail", tail)]
}

/// Interior maximum.
pub fn approx_interior(spec: &ProblemSpec, consts: &ConstantsReport, n: u64) -> Result<LaplaceResult> {
    if spec.maximum().kind != MaximumKind::InteriorA {
        return Err(Error::TheoremMismatch("boundary maximum; use a boundary approximation".into()));
    }
    let peak = peak_data(spec, consts, n)?;
    let m = spec.dimension();
    let nf = n as f64;
    let terms = omega_interior(m, consts, peak.g_star, nf);
    let omega: f64 = terms.iter().map(|t| t.1).sum();
    let ln_gauss = 0.5 * m as f64 * (2.0 * PI / nf).ln();
    let ln_det = 0.5 * peak.abs_det.ln();
    Ok(finish(
        Theorem::T2,
        n,
        peak,
        ln_gauss - ln_det,
        ln_gauss - 0.5 * nf.ln(),
        omega,
        terms.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    ))
}

/// Boundary maximum on one face in dimension `m >= 2`.
pub fn approx_boundary_md(spec: &ProblemSpec, consts: &ConstantsReport, n: u64) -> Result<LaplaceResult> {
    if spec.maximum().kind != MaximumKind::BoundaryB {
        return Err(Error::TheoremMismatch("interior maximum; use the interior approximation".into()));
    }
    let m = spec.dimension();
    if m < 2 {
        return Err(Error::TheoremMismatch("one-dimensional boundary maximum; use the 1-D approximation".into()));
    }
    let f1 = require(consts.f1_prime, "F1_prime")?;
    let f1o = require(consts.f1_prime_omega, "F1_prime_Omega")?;
    let peak = peak_data(spec, consts, n)?;
    let nf = n as f64;
    let sq = nf.sqrt();
    let mf = m as f64;
    let gs = peak.g_star.abs();
    let (f2, f3, g, g1, lam) = (consts.f2, consts.f3, consts.g, consts.g1, consts.lambda);
    let f2po = consts.f2_prime_omega;

    let b1 = [
        ("b1_curvature", gs * f2 / (lam.sqrt() * f1.powi(3)) * (0.5 * f2).exp()),
        (
            "b1_weight_gradient",
            (g1 / lam.sqrt() + mf * g * f3 / (lam.powf(1.5) * consts.f2_prime)) / (f1 * f1),
        ),
        ("b1_outer_tail", g / (lam.sqrt() * f1o) * nf * (-sq * f1o).exp()),
        ("b1_inner_tail", gs / (lam.sqrt() * f1) * nf * (-sq * f1).exp()),
    ];
    let b2 = [
        ("b2_curvature", f2 / f1.powi(3) * (0.5 * f2).exp()),
        ("b2_outer_tail", nf * (-sq * f1o).exp() / f1o),
        ("b2_inner_tail", nf * (-sq * f1).exp() / f1),
    ];
    // the interior bound is applied to the (m-1)-dimensional cross-sections
    let wi = omega_interior(m - 1, consts, peak.g_star, nf);
    let omega_b1: f64 = b1.iter().map(|t| t.1).sum();
    let omega_b2: f64 = b2.iter().map(|t| t.1).sum();
    let omega_i: f64 = wi.iter().map(|t| t.1).sum();

    let mut shifted = spec.maximum().clone();
    shifted.x_star = peak.x.clone();
    let r = neighborhood_fit_radius(&shifted, &spec.local_domain(), &shifted.neighborhood);
    let outer = if r.is_finite() {
        2.0 * PI.sqrt() / gamma(0.5 * mf)
            * f2po.powf(-0.5 * (mf + 1.0))
            * (gamma(mf) + (1.0 + (nf * f2po).sqrt() * r / 2f64.sqrt()).powf(mf - 1.0))
            * g
            * (-nf * f2po * r * r).exp()
    } else {
        0.0
    };
    let parts = [
        ("boundary", omega_b1 / sq),
        ("cross_section", omega_i * (1.0 / f1 + omega_b2 / nf)),
        ("outer_region", outer),
    ];
    let omega: f64 = parts.iter().map(|t| t.1).sum();
    let mut terms: BTreeMap<String, f64> = parts.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in b1.iter().chain(&b2) {
        terms.insert(k.to_string(), *v);
    }
    for (k, v) in wi {
        terms.insert(format!("interior_{k}"), v);
    }
    terms.insert("R".into(), r);

    let normal = peak.normal.expect("boundary peak has a normal derivative").abs();
    let ln_gauss = 0.5 * (mf - 1.0) * (2.0 * PI / nf).ln();
    let ln_det = 0.5 * peak.abs_det.ln();
    Ok(finish(
        Theorem::T3,
        n,
        peak,
        -nf.ln() + ln_gauss - normal.ln() - ln_det,
        -nf.ln() + ln_gauss - 0.5 * nf.ln(),
        omega,
        terms,
    ))
}

/// Dispatches on the maximum kind and dimension.
pub fn approximate(spec: &ProblemSpec, consts: &ConstantsReport, n: u64) -> Result<LaplaceResult> {
    match (spec.maximum().kind, spec.dimension()) {
        (MaximumKind::InteriorA, _) => approx_interior(spec, consts, n),
        (MaximumKind::BoundaryB, 1) => approx_1d_boundary(spec, consts, n),
        (MaximumKind::BoundaryB, _) => approx_boundary_md(spec, consts, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::estimate_constants;
    use crate::problem::catalog;
    use crate::quadrature::integrate;

    fn setup(name: &str) -> (ProblemSpec, ConstantsReport) {
        let spec = catalog::by_name(name).unwrap();
        let c = estimate_constants(&spec, 32, &[25, 100, 400], 1.1).unwrap();
        (spec, c)
    }

    #[test]
    fn exp1d_leading_and_enclosure() {
        let (spec, c) = setup("exp1d");
        let r = approx_1d_boundary(&spec, &c, 25).unwrap();
        assert!((r.leading - 0.04).abs() < 1e-16);
        let oracle = integrate(&spec, None, 25, 1e-13).unwrap();
        assert!(r.encloses(&oracle));
    }

    #[test]
    fn gauss1d_leading() {
        let (spec, c) = setup("gauss1d");
        let r = approx_interior(&spec, &c, 100).unwrap();
        assert!((r.leading - (2.0 * PI / 100.0).sqrt()).abs() < 1e-14);
        assert!(r.encloses(&integrate(&spec, None, 100, 1e-12).unwrap()));
    }

    #[test]
    fn gauss2d_leading() {
        let spec = catalog::gauss2d().unwrap();
        let c = estimate_constants(&spec, 32, &[64], 1.1).unwrap();
        let r = approx_interior(&spec, &c, 64).unwrap();
        assert!((r.leading - 2.0 * PI / 64.0).abs() < 1e-14);
    }

    #[test]
    fn mixed2d_leading() {
        let (spec, c) = setup("mixed2d");
        let r = approx_boundary_md(&spec, &c, 100).unwrap();
        assert!((r.leading - 0.01 * (2.0 * PI / 100.0).sqrt()).abs() < 1e-15);
        assert!(r.encloses(&integrate(&spec, None, 100, 1e-12).unwrap()));
    }

    #[test]
    fn theorem_mismatch() {
        let (spec, c) = setup("gauss1d");
        assert!(matches!(approx_1d_boundary(&spec, &c, 100), Err(Error::TheoremMismatch(_))));
        let (bspec, bc) = setup("exp1d");
        assert!(matches!(approx_boundary_md(&bspec, &bc, 100), Err(Error::TheoremMismatch(_))));
        assert!(matches!(approx_interior(&bspec, &bc, 100), Err(Error::TheoremMismatch(_))));
    }

    #[test]
    fn tail_bound_modes_agree() {
        for n in [1.0, 8.0, 1000.0, 1e4] {
            let a = gaussian_tail_bound(2, 1, 1.3, n, RadiusMode::CubeRootN).unwrap();
            let b = gaussian_tail_bound(2, 1, 1.3, n, RadiusMode::Fixed(n.powf(-1.0 / 3.0))).unwrap();
            assert!((a / b - 1.0).abs() < 1e-12);
        }
        assert!(gaussian_tail_bound(1, 0, 0.0, 4.0, RadiusMode::CubeRootN).is_err());
        assert!(gaussian_tail_bound(1, 0, 1.0, 4.0, RadiusMode::Fixed(0.0)).is_err());
    }

    #[test]
    fn tail_bound_decreases_with_n() {
        let mut prev = f64::INFINITY;
        for n in [1.0, 10.0, 100.0, 1000.0, 1e4] {
            let b = gaussian_tail_bound(1, 0, 1.0, n, RadiusMode::CubeRootN).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }
}
