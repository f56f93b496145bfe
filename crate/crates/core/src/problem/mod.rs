//! Problem descriptions: the integral `I(N) = ∫ g e^{N f(x,N)} dx` over a box,
//! with `f(x,N) = f(x) + eps(N) sigma(x)` and a classified unique maximum.

pub mod catalog;
pub mod classify;
pub mod config;
pub mod domain;
pub mod field;
pub mod optimize;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use classify::{classify_field, BoundaryFace, BoundarySide, Classification, MaximumKind};
pub use domain::{BoxDomain, BoxRepr};
pub use field::{DecayClass, EpsilonExpr, EpsilonSchedule, FieldExpr, Polynomial, ScalarField, Term};

use crate::derivatives::Differentiator;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, without_axis};
use classify::CRITICAL_TOL;
use optimize::refine_maximizer;

/// Where the maximum sits and the neighbourhood `Ω′` on which constants are
/// certified. Points are in the box's local frame.
#[derive(Debug, Clone, Serialize)]
pub struct MaximumInfo {
    pub kind: MaximumKind,
    pub x_star: Vec<f64>,
    pub boundary: Option<BoundaryFace>,
    pub neighborhood: BoxDomain,
}

impl MaximumInfo {
    pub fn boundary_axis(&self) -> Option<usize> {
        self.boundary.map(|b| b.axis)
    }

    pub fn fixed_axes(&self) -> Vec<usize> {
        self.boundary.iter().map(|b| b.axis).collect()
    }
}

/// Closed-form value of `ln I(N)` for catalog problems that have one.
#[derive(Clone)]
pub struct ExactIntegral {
    log_value: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    pub formula: &'static str,
}

impl ExactIntegral {
    pub fn new(formula: &'static str, log_value: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        ExactIntegral {
            log_value: Arc::new(log_value),
            formula,
        }
    }

    pub fn ln_value(&self, n: u64) -> f64 {
        (self.log_value)(n)
    }

    pub fn value(&self, n: u64) -> f64 {
        self.ln_value(n).exp()
    }
}

impl fmt::Debug for ExactIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.formula)
    }
}

/// Field triple transported into the box's local frame.
#[derive(Debug, Clone)]
struct LocalFields {
    f_limit: ScalarField,
    sigma: ScalarField,
    g: ScalarField,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    name: String,
    description: String,
    domain: BoxDomain,
    f_limit: ScalarField,
    sigma: Option<ScalarField>,
    epsilon: EpsilonSchedule,
    g: ScalarField,
    maximum: MaximumInfo,
    n_zero: u64,
    exact: Option<ExactIntegral>,
    local: LocalFields,
}

impl ProblemSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn dimension(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// The domain in its own frame (identity rotation); the space all
    /// numerics work in.
    pub fn local_domain(&self) -> BoxDomain {
        self.domain.local_frame()
    }

    pub fn f_limit(&self) -> &ScalarField {
        &self.f_limit
    }

    pub fn sigma(&self) -> Option<&ScalarField> {
        self.sigma.as_ref()
    }

    pub fn epsilon(&self) -> &EpsilonSchedule {
        &self.epsilon
    }

    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn maximum(&self) -> &MaximumInfo {
        &self.maximum
    }

    pub fn n_zero(&self) -> u64 {
        self.n_zero
    }

    pub fn exact(&self) -> Option<&ExactIntegral> {
        self.exact.as_ref()
    }

    pub fn local_f_limit(&self) -> &ScalarField {
        &self.local.f_limit
    }

    pub fn local_sigma(&self) -> &ScalarField {
        &self.local.sigma
    }

    pub fn local_g(&self) -> &ScalarField {
        &self.local.g
    }

    pub fn has_perturbation(&self) -> bool {
        self.sigma.is_some() && !self.epsilon.is_zero()
    }

    pub fn check_range(&self, n: u64) -> Result<()> {
        if n <= self.n_zero {
            Err(Error::Range { n, n_zero: self.n_zero })
        } else {
            Ok(())
        }
    }

    /// `f(·, N)` in local coordinates, without the `N > N0` check.
    pub fn local_f(&self, n: u64) -> ScalarField {
        let eps = self.epsilon.eval(n);
        if eps == 0.0 || self.sigma.is_none() {
            self.local.f_limit.clone()
        } else {
            self.local.f_limit.linear_combination(1.0, &self.local.sigma, eps)
        }
    }

    /// Maximizer `x*(N)` of `f(·, N)` in local coordinates, found by Newton
    /// ascent from `x*`; the boundary coordinate stays on its face.
    pub fn x_star_at(&self, n: u64) -> Result<Vec<f64>> {
        if !self.has_perturbation() || self.epsilon.eval(n) == 0.0 {
            return Ok(self.maximum.x_star.clone());
        }
        refine_maximizer(&self.local_f(n), &self.local_domain(), &self.maximum.x_star, &self.maximum.fixed_axes())
    }

    /// `x*(N)` with the check that it stays in `Ω′`.
    pub fn x_star_in_neighborhood(&self, n: u64) -> Result<Vec<f64>> {
        let x = self.x_star_at(n)?;
        if !self.maximum.neighborhood.contains_local(&x, 1e-12) {
            return Err(Error::assumption(
                "x*(N) in Ω′",
                format!("maximizer {x:?} at N = {n} leaves the neighbourhood"),
            ));
        }
        Ok(x)
    }

    pub fn summary(&self) -> ProblemSummary {
        ProblemSummary {
            name: self.name.clone(),
            description: self.description.clone(),
            dimension: self.dimension(),
            domain: self.domain.clone(),
            kind: self.maximum.kind,
            x_star: self.maximum.x_star.clone(),
            boundary: self.maximum.boundary,
            neighborhood: self.maximum.neighborhood.clone(),
            n_zero: self.n_zero,
            epsilon: self.epsilon.expr().clone(),
            perturbed: self.has_perturbation(),
            closed_form: self.exact.as_ref().map(|e| e.formula.to_string()),
        }
    }

    /// Same problem with the given neighbourhood and `N0` (rechecked).
    pub fn with_neighborhood(&self, neighborhood: BoxDomain, n_zero: Option<u64>) -> Result<ProblemSpec> {
        let mut maximum = self.maximum.clone();
        check_neighborhood(&self.local_domain(), &maximum.x_star, &neighborhood)?;
        let n_zero = n_zero.unwrap_or_else(|| default_n_zero(&maximum, &self.local_domain(), &neighborhood));
        maximum.neighborhood = neighborhood;
        let mut out = self.clone();
        out.maximum = maximum;
        out.n_zero = n_zero;
        Ok(out)
    }

    /// Same problem with another perturbation schedule.
    pub fn with_epsilon(&self, epsilon: EpsilonSchedule) -> ProblemSpec {
        let mut out = self.clone();
        out.epsilon = epsilon;
        out.exact = None;
        out
    }
}

/// Serializable description of a problem for reports and listings.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemSummary {
    pub name: String,
    pub description: String,
    pub dimension: usize,
    pub domain: BoxDomain,
    pub kind: MaximumKind,
    pub x_star: Vec<f64>,
    pub boundary: Option<BoundaryFace>,
    pub neighborhood: BoxDomain,
    pub n_zero: u64,
    pub epsilon: EpsilonExpr,
    pub perturbed: bool,
    pub closed_form: Option<String>,
}

/// `f(·, N)` in world coordinates. Rejects `N <= N0`.
pub fn assemble_f(spec: &ProblemSpec, n: u64) -> Result<ScalarField> {
    spec.check_range(n)?;
    let eps = spec.epsilon.eval(n);
    Ok(match &spec.sigma {
        Some(s) if eps != 0.0 => spec.f_limit.linear_combination(1.0, s, eps),
        _ => spec.f_limit.clone(),
    })
}

/// Reclassifies the maximum of `spec` on a grid of `grid_res` intervals per
/// axis and checks the maximum invariants at a few `N > N0`.
pub fn classify_maximum(spec: &ProblemSpec, grid_res: usize) -> Result<MaximumInfo> {
    let local = spec.local_domain();
    let c = classify_field(&spec.local.f_limit, &local, grid_res)?;
    let neighborhood = if spec.maximum.neighborhood.contains_local(&c.x_star, 1e-12) {
        spec.maximum.neighborhood.clone()
    } else {
        default_neighborhood(&c, &local)?
    };
    let info = MaximumInfo {
        kind: c.kind,
        x_star: c.x_star,
        boundary: c.boundary,
        neighborhood,
    };
    let mut probe = spec.clone();
    probe.maximum = info.clone();
    let n0 = spec.n_zero + 1;
    for n in [n0, 4 * n0, 16 * n0] {
        verify_maximum_at(&probe, n)?;
    }
    Ok(info)
}

/// Checks the critical-point conditions of `x*(N)` for one `N`.
pub fn verify_maximum_at(spec: &ProblemSpec, n: u64) -> Result<Vec<f64>> {
    let x = spec.x_star_in_neighborhood(n)?;
    let f = spec.local_f(n);
    let domain = spec.local_domain();
    let diff = Differentiator::for_region(&f, &domain);
    let g = diff.gradient(&x)?;
    let h = diff.hessian(&x)?;
    match spec.maximum.boundary {
        None => {
            if g.amax() > CRITICAL_TOL {
                return Err(Error::assumption(
                    "Df(x*(N), N) = 0",
                    format!("gradient {:e} at N = {n}", g.amax()),
                ));
            }
            let eig = symmetric_eigenvalues(&h);
            if eig.iter().any(|&e| e >= 0.0) {
                return Err(Error::Definiteness(eig));
            }
        }
        Some(face) => {
            let tangent = (0..x.len()).filter(|&a| a != face.axis).map(|a| g[a].abs()).fold(0.0, f64::max);
            if tangent > CRITICAL_TOL {
                return Err(Error::assumption(
                    "tangential Df(x*(N), N) = 0",
                    format!("tangential gradient {tangent:e} at N = {n}"),
                ));
            }
            let inward = face.inward_sign() * g[face.axis];
            if inward >= 0.0 {
                return Err(Error::assumption(
                    "inward derivative < 0",
                    format!("inward derivative {inward:e} at N = {n}"),
                ));
            }
            let eig = symmetric_eigenvalues(&without_axis(&h, face.axis));
            if eig.iter().any(|&e| e >= 0.0) {
                return Err(Error::Definiteness(eig));
            }
        }
    }
    Ok(x)
}

/// Default `Ω′`: per axis, half-width `min(edge/4, distance to the nearest
/// face other than the binding one)`, centred on `x*` (anchored on the
/// binding face in the boundary case).
pub fn default_neighborhood(c: &Classification, domain: &BoxDomain) -> Result<BoxDomain> {
    let m = domain.dim();
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for a in 0..m {
        let (lo, hi, x) = (domain.lower()[a], domain.upper()[a], c.x_star[a]);
        let quarter = 0.25 * (hi - lo);
        match c.boundary {
            Some(face) if face.axis == a => {
                let h = quarter.min(hi - lo);
                match face.side {
                    BoundarySide::Lower => {
                        lower[a] = x;
                        upper[a] = x + h;
                    }
                    BoundarySide::Upper => {
                        lower[a] = x - h;
                        upper[a] = x;
                    }
                }
            }
            _ => {
                let h = quarter.min(x - lo).min(hi - x);
                if h <= 0.0 {
                    return Err(Error::assumption(
                        "Ω′ ⊂ Ω",
                        format!("maximizer {:?} lies on a second face (axis {a})", c.x_star),
                    ));
                }
                lower[a] = x - h;
                upper[a] = x + h;
            }
        }
    }
    BoxDomain::new(lower, upper)
}

fn check_neighborhood(domain: &BoxDomain, x_star: &[f64], nb: &BoxDomain) -> Result<()> {
    if nb.dim() != domain.dim() || !domain.contains_box(nb, 1e-12) {
        return Err(Error::InvalidProblem("neighbourhood must lie inside the domain".into()));
    }
    if !nb.contains_local(x_star, 1e-12) {
        return Err(Error::InvalidProblem(format!("neighbourhood does not contain x* = {x_star:?}")));
    }
    Ok(())
}

/// Radius of the largest ball around `x*` (half-ball in the boundary case)
/// inside `Ω′`, measured to the `Ω′` faces that are interior to `Ω`.
pub fn neighborhood_fit_radius(maximum: &MaximumInfo, domain: &BoxDomain, nb: &BoxDomain) -> f64 {
    let mut r = f64::INFINITY;
    for a in 0..domain.dim() {
        let x = maximum.x_star[a];
        let below_is_binding = matches!(maximum.boundary, Some(f) if f.axis == a && f.side == BoundarySide::Lower);
        let above_is_binding = matches!(maximum.boundary, Some(f) if f.axis == a && f.side == BoundarySide::Upper);
        if !below_is_binding {
            r = r.min(x - nb.lower()[a]);
        }
        if !above_is_binding {
            r = r.min(nb.upper()[a] - x);
        }
    }
    r
}

/// Default `N0`: one less than the smallest `N` whose shrinking ball
/// (radius `N^{-1/3}` interior, `N^{-1/2}` boundary) fits in `Ω′`.
pub fn default_n_zero(maximum: &MaximumInfo, domain: &BoxDomain, nb: &BoxDomain) -> u64 {
    let r = neighborhood_fit_radius(maximum, domain, nb);
    if !(r > 0.0) {
        return u64::MAX;
    }
    let p = match maximum.kind {
        MaximumKind::InteriorA => 3,
        MaximumKind::BoundaryB => 2,
    };
    let mut n = (r.powi(-p) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
    while (n as f64).powf(-1.0 / p as f64) > r * (1.0 + 1e-12) {
        n += 1;
    }
    n - 1
}

/// Assembles and validates a [`ProblemSpec`].
#[derive(Debug, Clone)]
pub struct ProblemBuilder {
    name: String,
    description: String,
    domain: BoxDomain,
    f_limit: ScalarField,
    sigma: Option<ScalarField>,
    epsilon: EpsilonSchedule,
    g: Option<ScalarField>,
    neighborhood: Option<BoxDomain>,
    n_zero: Option<u64>,
    exact: Option<ExactIntegral>,
    grid_res: usize,
}

impl ProblemBuilder {
    pub fn new(name: impl Into<String>, domain: BoxDomain, f_limit: ScalarField) -> Self {
        ProblemBuilder {
            name: name.into(),
            description: String::new(),
            domain,
            f_limit,
            sigma: None,
            epsilon: EpsilonSchedule::zero(),
            g: None,
            neighborhood: None,
            n_zero: None,
            exact: None,
            grid_res: 64,
        }
    }

    pub fn description(mut self, d: impl Into<String>) -> Self {
        self.description = d.into();
        self
    }

    pub fn perturbation(mut self, sigma: ScalarField, epsilon: EpsilonSchedule) -> Self {
        self.sigma = Some(sigma);
        self.epsilon = epsilon;
        self
    }

    pub fn weight(mut self, g: ScalarField) -> Self {
        self.g = Some(g);
        self
    }

    /// Neighbourhood `Ω′` in the local frame.
    pub fn neighborhood(mut self, nb: BoxDomain) -> Self {
        self.neighborhood = Some(nb);
        self
    }

    pub fn n_zero(mut self, n0: u64) -> Self {
        self.n_zero = Some(n0);
        self
    }

    pub fn exact(mut self, exact: ExactIntegral) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn classification_grid(mut self, res: usize) -> Self {
        self.grid_res = res;
        self
    }

    pub fn build(self) -> Result<ProblemSpec> {
        let m = self.domain.dim();
        let g = self.g.unwrap_or_else(|| ScalarField::constant(m, 1.0));
        for (what, d) in [("f", self.f_limit.dim()), ("g", g.dim())] {
            if d != m {
                return Err(Error::InvalidProblem(format!("{what} has dimension {d}, domain has {m}")));
            }
        }
        if let Some(s) = &self.sigma {
            if s.dim() != m {
                return Err(Error::InvalidProblem(format!("sigma has dimension {}, domain has {m}", s.dim())));
            }
        }
        let r = self.domain.rotation().clone();
        let rotated = self.domain.is_rotated();
        let to_local = |f: &ScalarField| if rotated { f.pulled_back(&r) } else { f.clone() };
        let local = LocalFields {
            f_limit: to_local(&self.f_limit),
            sigma: self.sigma.as_ref().map(to_local).unwrap_or_else(|| ScalarField::zero(m)),
            g: to_local(&g),
        };
        let local_domain = self.domain.local_frame();
        let c = classify_field(&local.f_limit, &local_domain, self.grid_res)?;
        let neighborhood = match self.neighborhood {
            Some(nb) => {
                check_neighborhood(&local_domain, &c.x_star, &nb)?;
                nb
            }
            None => default_neighborhood(&c, &local_domain)?,
        };
        let maximum = MaximumInfo {
            kind: c.kind,
            x_star: c.x_star,
            boundary: c.boundary,
            neighborhood,
        };
        let n_zero = self
            .n_zero
            .unwrap_or_else(|| default_n_zero(&maximum, &local_domain, &maximum.neighborhood));
        if n_zero == u64::MAX {
            return Err(Error::assumption("U_N ⊂ Ω′", "neighbourhood has no room around x*"));
        }
        Ok(ProblemSpec {
            name: self.name,
            description: self.description,
            domain: self.domain,
            f_limit: self.f_limit,
            sigma: self.sigma,
            epsilon: self.epsilon,
            g,
            maximum,
            n_zero: n_zero.max(1),
            exact: self.exact,
            local,
        })
    }
}
