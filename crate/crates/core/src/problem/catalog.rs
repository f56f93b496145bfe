//! Built-in test problems with known maximizers and, where available,
//! closed-form integrals.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Tensor3, Vector};
use crate::problem::field::Term;
use crate::problem::{BoxDomain, EpsilonSchedule, ExactIntegral, Polynomial, ProblemBuilder, ProblemSpec, ScalarField};
use crate::special::{erf, ln_one_minus_exp};

type Constructor = fn() -> Result<ProblemSpec>;

const ENTRIES: &[(&str, Constructor)] = &[
    ("gauss1d", gauss1d),
    ("exp1d", exp1d),
    ("quartic1d", quartic1d),
    ("cusp1d", cusp1d),
    ("drift1d", drift1d),
    ("gauss2d", gauss2d),
    ("coupled2d", coupled2d),
    ("mixed2d", mixed2d),
    ("mixed2d_rot", mixed2d_rot),
    ("ridge2d", ridge2d),
    ("gauss3d", gauss3d),
    ("boundary3d", boundary3d),
];

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|(n, _)| *n).collect()
}

pub fn by_name(name: &str) -> Result<ProblemSpec> {
    ENTRIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| c())
        .unwrap_or_else(|| Err(Error::Config(format!("unknown catalog problem {name:?}"))))
}

pub fn catalog() -> Vec<ProblemSpec> {
    ENTRIES
        .iter()
        .map(|(name, c)| c().unwrap_or_else(|e| panic!("catalog entry {name} failed to build: {e}")))
        .collect()
}

fn poly(dim: usize, terms: &[(f64, &[u32])]) -> ScalarField {
    let terms = terms.iter().map(|(c, p)| Term { coef: *c, powers: p.to_vec() }).collect();
    Polynomial::new(dim, terms).expect("well-formed catalog polynomial").into_field()
}

/// `ln ∫_{-1}^{1} e^{-N t^2/2} dt`.
fn ln_gauss_segment(n: u64) -> f64 {
    let nf = n as f64;
    0.5 * (2.0 * PI / nf).ln() + erf((nf / 2.0).sqrt()).ln()
}

/// `ln ∫_0^1 e^{-N t} dt`.
fn ln_exp_segment(n: u64) -> f64 {
    let nf = n as f64;
    ln_one_minus_exp(-nf) - nf.ln()
}

fn symmetric_interval() -> BoxDomain {
    BoxDomain::new(vec![-1.0], vec![1.0]).expect("valid box")
}

/// Half-line face problems live on `[0,1] x [-1,1]^{m-1}` so the maximizer
/// touches exactly one face.
fn slab(m: usize) -> BoxDomain {
    let mut lower = vec![-1.0; m];
    lower[0] = 0.0;
    BoxDomain::new(lower, vec![1.0; m]).expect("valid box")
}

pub fn gauss1d() -> Result<ProblemSpec> {
    ProblemBuilder::new("gauss1d", symmetric_interval(), ScalarField::neg_quadratic(Matrix::identity(1, 1), vec![0.0]))
        .description("f = -x^2/2 on [-1,1], g = 1")
        .exact(ExactIntegral::new("sqrt(2 pi/N) erf(sqrt(N/2))", ln_gauss_segment))
        .build()
}

/// `gauss1d` with `sigma(x) = x` and the given schedule.
pub fn gauss1d_perturbed(name: &str, epsilon: EpsilonSchedule) -> Result<ProblemSpec> {
    let eps = epsilon.clone();
    ProblemBuilder::new(name, symmetric_interval(), ScalarField::neg_quadratic(Matrix::identity(1, 1), vec![0.0]))
        .description("f = -x^2/2 + eps(N) x on [-1,1], g = 1")
        .perturbation(ScalarField::linear(vec![1.0]), epsilon)
        .exact(ExactIntegral::new(
            "e^{N eps^2/2} sqrt(2 pi/N) [erf(sqrt(N/2)(1-eps)) + erf(sqrt(N/2)(1+eps))]/2",
            move |n| {
                let nf = n as f64;
                let e = eps.eval(n);
                let s = (nf / 2.0).sqrt();
                nf * e * e / 2.0 + 0.5 * (2.0 * PI / nf).ln() + (0.5 * (erf(s * (1.0 - e)) + erf(s * (1.0 + e)))).ln()
            },
        ))
        .build()
}

pub fn drift1d() -> Result<ProblemSpec> {
    gauss1d_perturbed("drift1d", EpsilonSchedule::power(1.0, 0.75))
}

pub fn exp1d() -> Result<ProblemSpec> {
    ProblemBuilder::new("exp1d", BoxDomain::new(vec![0.0], vec![1.0])?, ScalarField::linear(vec![-1.0]))
        .description("f = -x on [0,1], g = 1")
        .exact(ExactIntegral::new("(1 - e^{-N})/N", ln_exp_segment))
        .build()
}

pub fn quartic1d() -> Result<ProblemSpec> {
    ProblemBuilder::new("quartic1d", symmetric_interval(), poly(1, &[(-0.5, &[2]), (-0.25, &[4])]))
        .description("f = -x^2/2 - x^4/4 on [-1,1], g = 1")
        .build()
}

/// `-x^2/2 - |x|^3/3` along one axis: smooth to second order, with a
/// third derivative that jumps at the origin.
fn cusp_profile() -> (
    impl Fn(f64) -> f64 + Copy + Send + Sync,
    impl Fn(f64) -> f64 + Copy + Send + Sync,
    impl Fn(f64) -> f64 + Copy + Send + Sync,
    impl Fn(f64) -> f64 + Copy + Send + Sync,
) {
    (
        |t: f64| -0.5 * t * t - t.abs().powi(3) / 3.0,
        |t: f64| -t - t * t.abs(),
        |t: f64| -1.0 - 2.0 * t.abs(),
        |t: f64| if t == 0.0 { 0.0 } else { -2.0 * t.signum() },
    )
}

pub fn cusp1d() -> Result<ProblemSpec> {
    let (v, d1, d2, d3) = cusp_profile();
    let f = ScalarField::new(1, move |x| v(x[0]))
        .with_gradient(move |x| Vector::from_element(1, d1(x[0])))
        .with_hessian(move |x| Matrix::from_element(1, 1, d2(x[0])))
        .with_third(move |x| Tensor3::from_fn(1, |_, _, _| d3(x[0])));
    ProblemBuilder::new("cusp1d", symmetric_interval(), f)
        .description("f = -x^2/2 - |x|^3/3 on [-1,1], g = 1 (third derivative jumps at 0)")
        .build()
}

pub fn gauss2d() -> Result<ProblemSpec> {
    ProblemBuilder::new(
        "gauss2d",
        BoxDomain::cube(2, -1.0, 1.0)?,
        ScalarField::neg_quadratic(Matrix::identity(2, 2), vec![0.0, 0.0]),
    )
    .description("f = -(x1^2 + x2^2)/2 on [-1,1]^2, g = 1")
    .exact(ExactIntegral::new("(sqrt(2 pi/N) erf(sqrt(N/2)))^2", |n| 2.0 * ln_gauss_segment(n)))
    .build()
}

pub fn coupled2d() -> Result<ProblemSpec> {
    let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
    ProblemBuilder::new("coupled2d", BoxDomain::cube(2, -1.0, 1.0)?, ScalarField::neg_quadratic(a, vec![0.0, 0.0]))
        .description("f = -x1^2/2 - x1 x2 - x2^2 on [-1,1]^2, g = 1 + x1/2 + x2^2/4")
        .weight(poly(2, &[(1.0, &[0, 0]), (0.5, &[1, 0]), (0.25, &[0, 2])]))
        .build()
}

fn mixed_field() -> ScalarField {
    poly(2, &[(-1.0, &[1, 0]), (-0.5, &[0, 2])])
}

pub fn mixed2d() -> Result<ProblemSpec> {
    ProblemBuilder::new("mixed2d", slab(2), mixed_field())
        .description("f = -x1 - x2^2/2 on [0,1] x [-1,1], g = 1")
        .exact(ExactIntegral::new("(1 - e^{-N})/N * sqrt(2 pi/N) erf(sqrt(N/2))", |n| {
            ln_exp_segment(n) + ln_gauss_segment(n)
        }))
        .build()
}

/// Rotation by `angle` in the plane.
pub fn planar_rotation(angle: f64) -> Matrix {
    let (s, c) = angle.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// `mixed2d` placed in the world by a 30 degree rotation.
pub fn mixed2d_rot() -> Result<ProblemSpec> {
    let r = planar_rotation(PI / 6.0);
    let world = mixed_field().pulled_back(&r.transpose());
    ProblemBuilder::new("mixed2d_rot", slab(2).with_rotation(r)?, world)
        .description("mixed2d rotated by 30 degrees")
        .exact(ExactIntegral::new("(1 - e^{-N})/N * sqrt(2 pi/N) erf(sqrt(N/2))", |n| {
            ln_exp_segment(n) + ln_gauss_segment(n)
        }))
        .build()
}

pub fn ridge2d() -> Result<ProblemSpec> {
    let (v, d1, d2, d3) = cusp_profile();
    let f = ScalarField::new(2, move |x| -x[0] + v(x[1]))
        .with_gradient(move |x| Vector::from_vec(vec![-1.0, d1(x[1])]))
        .with_hessian(move |x| Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, d2(x[1])]))
        .with_third(move |x| Tensor3::from_fn(2, |i, j, k| if i + j + k == 3 { d3(x[1]) } else { 0.0 }));
    ProblemBuilder::new("ridge2d", slab(2), f)
        .description("f = -x1 - x2^2/2 - |x2|^3/3 on [0,1] x [-1,1], g = 1")
        .build()
}

pub fn gauss3d() -> Result<ProblemSpec> {
    let a = Matrix::from_row_slice(3, 3, &[1.0, 0.3, 0.0, 0.3, 1.5, 0.2, 0.0, 0.2, 2.0]);
    ProblemBuilder::new("gauss3d", BoxDomain::cube(3, -1.0, 1.0)?, ScalarField::neg_quadratic(a, vec![0.0; 3]))
        .description("f = -x^T A x/2 on [-1,1]^3, A = [[1,.3,0],[.3,1.5,.2],[0,.2,2]], g = 1")
        .build()
}

pub fn boundary3d() -> Result<ProblemSpec> {
    ProblemBuilder::new("boundary3d", slab(3), poly(3, &[(-1.0, &[1, 0, 0]), (-0.5, &[0, 2, 0]), (-0.5, &[0, 0, 2])]))
        .description("f = -x1 - (x2^2 + x3^2)/2 on [0,1] x [-1,1]^2, g = 1")
        .exact(ExactIntegral::new("(1 - e^{-N})/N * (sqrt(2 pi/N) erf(sqrt(N/2)))^2", |n| {
            ln_exp_segment(n) + 2.0 * ln_gauss_segment(n)
        }))
        .build()
}
