//! Scalar fields with optional analytic derivatives, plus the declarative
//! polynomial / exponential-polynomial expressions used by config files.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Tensor3, Vector};

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64]) -> Vector + Send + Sync;
type HessianFn = dyn Fn(&[f64]) -> Matrix + Send + Sync;
type ThirdFn = dyn Fn(&[f64]) -> Tensor3 + Send + Sync;

/// A real function on R^m. Derivative handles are optional; callers fall
/// back to finite differences (see [`crate::derivatives`]) when absent.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradientFn>>,
    hessian: Option<Arc<HessianFn>>,
    third: Option<Arc<ThirdFn>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .field("third", &self.third.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            dim,
            value: Arc::new(value),
            gradient: None,
            hessian: None,
            third: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vector + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn with_third(mut self, t: impl Fn(&[f64]) -> Tensor3 + Send + Sync + 'static) -> Self {
        self.third = Some(Arc::new(t));
        self
    }

    /// Constant field with exact (zero) derivatives.
    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarField::new(dim, move |_| c)
            .with_gradient(move |_| Vector::zeros(dim))
            .with_hessian(move |_| Matrix::zeros(dim, dim))
            .with_third(move |_| Tensor3::zeros(dim))
    }

    pub fn zero(dim: usize) -> Self {
        ScalarField::constant(dim, 0.0)
    }

    /// `x -> c . x`.
    pub fn linear(coeffs: Vec<f64>) -> Self {
        let dim = coeffs.len();
        let c = Vector::from_vec(coeffs);
        let cv = c.clone();
        ScalarField::new(dim, move |x| cv.iter().zip(x).map(|(a, b)| a * b).sum())
            .with_gradient(move |_| c.clone())
            .with_hessian(move |_| Matrix::zeros(dim, dim))
            .with_third(move |_| Tensor3::zeros(dim))
    }

    /// `x -> -1/2 (x - c)^T A (x - c)` for symmetric `a`.
    pub fn neg_quadratic(a: Matrix, center: Vec<f64>) -> Self {
        let dim = center.len();
        let a1 = a.clone();
        let c1 = Vector::from_vec(center);
        let c2 = c1.clone();
        let a2 = a.clone();
        ScalarField::new(dim, move |x| {
            let d = Vector::from_column_slice(x) - &c1;
            -0.5 * d.dot(&(&a1 * &d))
        })
        .with_gradient(move |x| -(&a2 * (Vector::from_column_slice(x) - &c2)))
        .with_hessian(move |_| -a.clone())
        .with_third(move |_| Tensor3::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn analytic_gradient(&self, x: &[f64]) -> Option<Vector> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn analytic_hessian(&self, x: &[f64]) -> Option<Matrix> {
        self.hessian.as_ref().map(|h| h(x))
    }

    pub fn analytic_third(&self, x: &[f64]) -> Option<Tensor3> {
        self.third.as_ref().map(|t| t(x))
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn has_third(&self) -> bool {
        self.third.is_some()
    }

    pub fn has_all_derivatives(&self) -> bool {
        self.has_gradient() && self.has_hessian() && self.has_third()
    }

    /// `a * self + b * other`. A derivative handle survives only when both
    /// operands provide it.
    pub fn linear_combination(&self, a: f64, other: &ScalarField, b: f64) -> ScalarField {
        assert_eq!(self.dim, other.dim, "field dimensions differ");
        let (v1, v2) = (self.value.clone(), other.value.clone());
        let mut out = ScalarField::new(self.dim, move |x| a * v1(x) + b * v2(x));
        if let (Some(g1), Some(g2)) = (self.gradient.clone(), other.gradient.clone()) {
            out.gradient = Some(Arc::new(move |x| g1(x) * a + g2(x) * b));
        }
        if let (Some(h1), Some(h2)) = (self.hessian.clone(), other.hessian.clone()) {
            out.hessian = Some(Arc::new(move |x| h1(x) * a + h2(x) * b));
        }
        if let (Some(t1), Some(t2)) = (self.third.clone(), other.third.clone()) {
            out.third = Some(Arc::new(move |x| t1(x).scaled(a).add(&t2(x).scaled(b))));
        }
        out
    }

    /// Pull back through `x = R u`: returns `u -> f(R u)` with derivatives
    /// transformed accordingly.
    pub fn pulled_back(&self, r: &Matrix) -> ScalarField {
        let dim = self.dim;
        let to_world = {
            let r = r.clone();
            move |u: &[f64]| -> Vec<f64> { (&r * Vector::from_column_slice(u)).iter().copied().collect() }
        };
        let v = self.value.clone();
        let tw = to_world.clone();
        let mut out = ScalarField::new(dim, move |u| v(&tw(u)));
        if let Some(g) = self.gradient.clone() {
            let (r, tw) = (r.clone(), to_world.clone());
            out.gradient = Some(Arc::new(move |u| r.transpose() * g(&tw(u))));
        }
        if let Some(h) = self.hessian.clone() {
            let (r, tw) = (r.clone(), to_world.clone());
            out.hessian = Some(Arc::new(move |u| r.transpose() * h(&tw(u)) * &r));
        }
        if let Some(t) = self.third.clone() {
            let (r, tw) = (r.clone(), to_world);
            out.third = Some(Arc::new(move |u| t(&tw(u)).rotated(&r)));
        }
        out
    }

    /// Drop every derivative handle, forcing finite differences downstream.
    pub fn without_derivatives(&self) -> ScalarField {
        ScalarField {
            dim: self.dim,
            value: self.value.clone(),
            gradient: None,
            hessian: None,
            third: None,
        }
    }
}

/// One monomial `coef * prod x_i^{powers_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// Declarative field expression, as accepted in problem config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldExpr {
    Constant { value: f64 },
    /// Sum of monomials.
    Poly { terms: Vec<Term> },
    /// `scale * exp(sum of monomials)`.
    ExpPoly {
        #[serde(default = "one")]
        scale: f64,
        terms: Vec<Term>,
    },
}

fn one() -> f64 {
    1.0
}

impl FieldExpr {
    pub fn to_field(&self, dim: usize) -> Result<ScalarField> {
        match self {
            FieldExpr::Constant { value } => Ok(ScalarField::constant(dim, *value)),
            FieldExpr::Poly { terms } => Ok(Polynomial::new(dim, terms.clone())?.into_field()),
            FieldExpr::ExpPoly { scale, terms } => {
                let p = Polynomial::new(dim, terms.clone())?;
                Ok(exp_of_polynomial(p, *scale))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Term>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if t.powers.len() != dim {
                return Err(Error::InvalidProblem(format!(
                    "monomial has {} exponents, expected {dim}",
                    t.powers.len()
                )));
            }
            if !t.coef.is_finite() {
                return Err(Error::InvalidProblem("non-finite coefficient".into()));
            }
        }
        Ok(Polynomial { dim, terms })
    }

    fn monomial_derivative(t: &Term, x: &[f64], orders: &[usize]) -> f64 {
        // d^k/dx_{i1}..dx_{ik} of coef * prod x^p
        let mut counts = vec![0u32; t.powers.len()];
        for &o in orders {
            counts[o] += 1;
        }
        let mut v = t.coef;
        for (i, (&p, &c)) in t.powers.iter().zip(&counts).enumerate() {
            if c > p {
                return 0.0;
            }
            let mut falling = 1.0;
            for j in 0..c {
                falling *= (p - j) as f64;
            }
            v *= falling * x[i].powi((p - c) as i32);
        }
        v
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| Self::monomial_derivative(t, x, &[])).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vector {
        Vector::from_fn(self.dim, |i, _| {
            self.terms.iter().map(|t| Self::monomial_derivative(t, x, &[i])).sum()
        })
    }

    pub fn hessian(&self, x: &[f64]) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| {
            self.terms.iter().map(|t| Self::monomial_derivative(t, x, &[i, j])).sum()
        })
    }

    pub fn third(&self, x: &[f64]) -> Tensor3 {
        Tensor3::from_fn(self.dim, |i, j, k| {
            self.terms.iter().map(|t| Self::monomial_derivative(t, x, &[i, j, k])).sum()
        })
    }

    pub fn into_field(self) -> ScalarField {
        let p = Arc::new(self);
        let (p1, p2, p3, p4) = (p.clone(), p.clone(), p.clone(), p.clone());
        ScalarField::new(p.dim, move |x| p1.value(x))
            .with_gradient(move |x| p2.gradient(x))
            .with_hessian(move |x| p3.hessian(x))
            .with_third(move |x| p4.third(x))
    }
}

fn exp_of_polynomial(p: Polynomial, scale: f64) -> ScalarField {
    let p = Arc::new(p);
    let dim = p.dim;
    let (p1, p2, p3, p4) = (p.clone(), p.clone(), p.clone(), p.clone());
    ScalarField::new(dim, move |x| scale * p1.value(x).exp())
        .with_gradient(move |x| p2.gradient(x) * (scale * p2.value(x).exp()))
        .with_hessian(move |x| {
            let g = p3.gradient(x);
            (&g * g.transpose() + p3.hessian(x)) * (scale * p3.value(x).exp())
        })
        .with_third(move |x| {
            let e = scale * p4.value(x).exp();
            let g = p4.gradient(x);
            let h = p4.hessian(x);
            let d3 = p4.third(x);
            Tensor3::from_fn(dim, |i, j, k| {
                e * (g[i] * g[j] * g[k]
                    + g[i] * h[(j, k)]
                    + g[j] * h[(i, k)]
                    + g[k] * h[(i, j)]
                    + d3.get(i, j, k))
            })
        })
}

/// Rate tag for a perturbation schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayClass {
    Zero,
    /// `eps(N) = o(1/sqrt(N))`.
    OOneOverSqrtN,
    Generic,
}

/// Perturbation amplitude `eps(N)` in `f(x, N) = f(x) + eps(N) sigma(x)`.
#[derive(Clone)]
pub struct EpsilonSchedule {
    eval: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    decay_class: DecayClass,
    expr: EpsilonExpr,
}

impl fmt::Debug for EpsilonSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EpsilonSchedule")
            .field("expr", &self.expr)
            .field("decay_class", &self.decay_class)
            .finish()
    }
}

/// Declarative schedule; `Power` is `coef * N^(-exponent)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonExpr {
    Zero,
    Power { coef: f64, exponent: f64 },
}

impl EpsilonSchedule {
    pub fn zero() -> Self {
        EpsilonSchedule {
            eval: Arc::new(|_| 0.0),
            decay_class: DecayClass::Zero,
            expr: EpsilonExpr::Zero,
        }
    }

    pub fn power(coef: f64, exponent: f64) -> Self {
        let decay_class = if coef == 0.0 {
            DecayClass::Zero
        } else if exponent > 0.5 {
            DecayClass::OOneOverSqrtN
        } else {
            DecayClass::Generic
        };
        EpsilonSchedule {
            eval: Arc::new(move |n| coef * (n as f64).powf(-exponent)),
            decay_class,
            expr: EpsilonExpr::Power { coef, exponent },
        }
    }

    pub fn from_expr(expr: &EpsilonExpr) -> Result<Self> {
        match *expr {
            EpsilonExpr::Zero => Ok(EpsilonSchedule::zero()),
            EpsilonExpr::Power { coef, exponent } => {
                if !(coef.is_finite() && coef >= 0.0 && exponent > 0.0) {
                    return Err(Error::InvalidProblem(format!(
                        "epsilon schedule needs coef >= 0 and exponent > 0, got {coef}, {exponent}"
                    )));
                }
                Ok(EpsilonSchedule::power(coef, exponent))
            }
        }
    }

    pub fn eval(&self, n: u64) -> f64 {
        (self.eval)(n)
    }

    pub fn decay_class(&self) -> DecayClass {
        self.decay_class
    }

    pub fn expr(&self) -> &EpsilonExpr {
        &self.expr
    }

    pub fn is_zero(&self) -> bool {
        self.decay_class == DecayClass::Zero
    }

    /// Checks the schedule is nonnegative and nonincreasing on `sweep`, and for
    /// the `o(1/sqrt N)` class that `eps(N) sqrt(N)` is nonincreasing too.
    pub fn validate_on(&self, sweep: &[u64]) -> Result<()> {
        let mut prev: Option<(f64, f64)> = None;
        for &n in sweep {
            let e = self.eval(n);
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::InvalidProblem(format!("eps({n}) = {e} is not a nonnegative real")));
            }
            let scaled = e * (n as f64).sqrt();
            if let Some((pe, ps)) = prev {
                if e > pe {
                    return Err(Error::InvalidProblem(format!("eps increases at N = {n}")));
                }
                if self.decay_class == DecayClass::OOneOverSqrtN && scaled > ps * (1.0 + 1e-12) {
                    return Err(Error::InvalidProblem(format!(
                        "eps(N) sqrt(N) increases at N = {n} although tagged o(1/sqrt N)"
                    )));
                }
            }
            prev = Some((e, scaled));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives_match_hand_values() {
        // f = 3 x^2 y - y^3
        let p = Polynomial::new(
            2,
            vec![Term { coef: 3.0, powers: vec![2, 1] }, Term { coef: -1.0, powers: vec![0, 3] }],
        )
        .unwrap();
        let x = [2.0, 1.5];
        assert!((p.value(&x) - (18.0 - 3.375)).abs() < 1e-12);
        let g = p.gradient(&x);
        assert!((g[0] - 18.0).abs() < 1e-12 && (g[1] - (12.0 - 6.75)).abs() < 1e-12);
        let h = p.hessian(&x);
        assert!((h[(0, 1)] - 12.0).abs() < 1e-12 && (h[(1, 1)] + 9.0).abs() < 1e-12);
        let t = p.third(&x);
        assert_eq!(t.get(0, 0, 1), 6.0);
        assert_eq!(t.get(1, 1, 1), -6.0);
        assert_eq!(t.get(0, 0, 0), 0.0);
    }

    #[test]
    fn wrong_arity_is_rejected() {
        assert!(Polynomial::new(2, vec![Term { coef: 1.0, powers: vec![1] }]).is_err());
    }

    #[test]
    fn linear_combination_drops_missing_handles() {
        let a = ScalarField::linear(vec![1.0]);
        let b = ScalarField::new(1, |x| x[0] * x[0]);
        let c = a.linear_combination(1.0, &b, 2.0);
        assert!(!c.has_gradient());
        assert_eq!(c.eval(&[3.0]), 21.0);
        let d = a.linear_combination(1.0, &ScalarField::linear(vec![2.0]), 0.5);
        assert_eq!(d.analytic_gradient(&[0.0]).unwrap()[0], 2.0);
    }

    #[test]
    fn power_schedule_classes() {
        assert_eq!(EpsilonSchedule::power(1.0, 0.75).decay_class(), DecayClass::OOneOverSqrtN);
        assert_eq!(EpsilonSchedule::power(1.0, 0.25).decay_class(), DecayClass::Generic);
        assert!(EpsilonSchedule::power(1.0, 0.75).validate_on(&[25, 100, 400]).is_ok());
        assert!(EpsilonSchedule::zero().is_zero());
    }

    #[test]
    fn exp_poly_config_round_trip() {
        let src = r#"kind = "exp_poly"
scale = 2.0
terms = [{ coef = -1.0, powers = [2] }]"#;
        let expr: FieldExpr = toml::from_str(src).unwrap();
        let f = expr.to_field(1).unwrap();
        assert!((f.eval(&[1.0]) - 2.0 * (-1f64).exp()).abs() < 1e-15);
        let h = f.analytic_hessian(&[0.0]).unwrap();
        assert!((h[(0, 0)] + 4.0).abs() < 1e-14);
    }
}
