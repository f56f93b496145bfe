//! Gradients, Hessians and third-derivative tensors, analytic when the field
//! provides them and second-order finite differences otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_symmetric, symmetric_eigenvalues, Matrix, Tensor3, Vector};
use crate::problem::{BoxDomain, ScalarField};

/// Third-tensor differences use a step this many times the base step.
pub const THIRD_STEP_RATIO: f64 = 10.0;

/// Default base step relative to the shortest box edge.
pub const DEFAULT_RELATIVE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct DerivativeBundle {
    pub gradient: Vector,
    pub hessian: Matrix,
    pub third: Tensor3,
    pub fd_step: f64,
    pub source: DerivativeSource,
}

/// Evaluation context: a field, a base step and optionally the region whose
/// faces switch stencils to one-sided.
#[derive(Clone, Copy)]
pub struct Differentiator<'a> {
    field: &'a ScalarField,
    step: f64,
    region: Option<&'a BoxDomain>,
}

impl<'a> Differentiator<'a> {
    pub fn new(field: &'a ScalarField, step: f64, region: Option<&'a BoxDomain>) -> Result<Self> {
        let max = region.map_or(f64::INFINITY, |r| 0.1 * r.min_edge());
        if !(step.is_finite() && step > 0.0 && step <= max) {
            return Err(Error::Step { step, max });
        }
        Ok(Differentiator { field, step, region })
    }

    /// Default step for `region`: `1e-4` times its shortest edge.
    pub fn for_region(field: &'a ScalarField, region: &'a BoxDomain) -> Self {
        Differentiator {
            field,
            step: DEFAULT_RELATIVE_STEP * region.min_edge(),
            region: Some(region),
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let v = self.field.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(x.to_vec()))
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vector> {
        if let Some(g) = self.field.analytic_gradient(x) {
            return finite_vec(g, x);
        }
        let m = x.len();
        let mut out = Vector::zeros(m);
        for axis in 0..m {
            let d = self.axis_difference(x, axis, self.step, |p| Ok(vec![self.value(p)?]))?;
            out[axis] = d[0];
        }
        Ok(out)
    }

    pub fn hessian(&self, x: &[f64]) -> Result<Matrix> {
        if let Some(h) = self.field.analytic_hessian(x) {
            return finite_mat(h, x);
        }
        let m = x.len();
        let mut out = Matrix::zeros(m, m);
        for axis in 0..m {
            let col = self.axis_difference(x, axis, self.step, |p| {
                Ok(self.gradient(p)?.iter().copied().collect())
            })?;
            for (i, v) in col.into_iter().enumerate() {
                out[(i, axis)] = v;
            }
        }
        Ok((&out + out.transpose()) * 0.5)
    }

    pub fn third(&self, x: &[f64]) -> Result<Tensor3> {
        if let Some(t) = self.field.analytic_third(x) {
            if t.entries().iter().all(|v| v.is_finite()) {
                return Ok(t);
            }
            return Err(Error::Evaluation(x.to_vec()));
        }
        let m = x.len();
        let mut out = Tensor3::zeros(m);
        for axis in 0..m {
            let slab = self.axis_difference(x, axis, THIRD_STEP_RATIO * self.step, |p| {
                Ok(self.hessian(p)?.iter().copied().collect())
            })?;
            // nalgebra storage is column-major: entry (i, j) sits at j*m + i
            for j in 0..m {
                for i in 0..m {
                    out.set(i, j, axis, slab[j * m + i]);
                }
            }
        }
        Ok(out.symmetrized())
    }

    pub fn bundle(&self, x: &[f64]) -> Result<DerivativeBundle> {
        let source = if self.field.has_all_derivatives() {
            DerivativeSource::Analytic
        } else {
            DerivativeSource::FiniteDifference
        };
        Ok(DerivativeBundle {
            gradient: self.gradient(x)?,
            hessian: self.hessian(x)?,
            third: self.third(x)?,
            fd_step: self.step,
            source,
        })
    }

    /// Second-order difference of a vector-valued map along `axis`: central
    /// where both neighbours are inside the region, one-sided otherwise.
    fn axis_difference(
        &self,
        x: &[f64],
        axis: usize,
        h: f64,
        eval: impl Fn(&[f64]) -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let (room_below, room_above) = match self.region {
            Some(r) => (x[axis] - h >= r.lower()[axis], x[axis] + h <= r.upper()[axis]),
            None => (true, true),
        };
        let at = |offset: f64| -> Result<Vec<f64>> {
            let mut p = x.to_vec();
            p[axis] += offset;
            eval(&p)
        };
        let combine = |terms: &[(f64, Vec<f64>)], scale: f64| -> Vec<f64> {
            let n = terms[0].1.len();
            (0..n).map(|i| terms.iter().map(|(c, v)| c * v[i]).sum::<f64>() / scale).collect()
        };
        if room_below && room_above || !room_below && !room_above {
            let (p, q) = (at(h)?, at(-h)?);
            Ok(combine(&[(1.0, p), (-1.0, q)], 2.0 * h))
        } else if !room_below {
            let (a, b, c) = (at(0.0)?, at(h)?, at(2.0 * h)?);
            Ok(combine(&[(-3.0, a), (4.0, b), (-1.0, c)], 2.0 * h))
        } else {
            let (a, b, c) = (at(0.0)?, at(-h)?, at(-2.0 * h)?);
            Ok(combine(&[(3.0, a), (-4.0, b), (1.0, c)], 2.0 * h))
        }
    }
}

fn finite_vec(v: Vector, x: &[f64]) -> Result<Vector> {
    if v.iter().all(|a| a.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Evaluation(x.to_vec()))
    }
}

fn finite_mat(h: Matrix, x: &[f64]) -> Result<Matrix> {
    if h.iter().all(|a| a.is_finite()) {
        Ok(h)
    } else {
        Err(Error::Evaluation(x.to_vec()))
    }
}

/// Derivative bundle at `x` with central differences everywhere (no region).
pub fn bundle_at(field: &ScalarField, x: &[f64], fd_step: f64) -> Result<DerivativeBundle> {
    Differentiator::new(field, fd_step, None)?.bundle(x)
}

/// As [`bundle_at`], switching to one-sided stencils near the faces of `region`.
pub fn bundle_in(field: &ScalarField, x: &[f64], fd_step: f64, region: &BoxDomain) -> Result<DerivativeBundle> {
    Differentiator::new(field, fd_step, Some(region))?.bundle(x)
}

/// Spectral norm of a symmetric matrix.
pub fn operator_norm_hessian(h: &Matrix) -> Result<f64> {
    check_symmetric(h, 1e-10)?;
    Ok(symmetric_eigenvalues(h).iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

/// Smallest absolute eigenvalue of a symmetric matrix; `+inf` for the empty matrix.
pub fn min_singular_value(h: &Matrix) -> f64 {
    symmetric_eigenvalues(h).iter().fold(f64::INFINITY, |a, v| a.min(v.abs()))
}

/// Frobenius norm, an upper bound on `sup_{|u|=1} |t(u,u,u)|`.
pub fn third_tensor_norm_bound(t: &Tensor3) -> f64 {
    t.frobenius_norm()
}

/// Bound on the cubic Taylor term `|t(v,v,v)|` for `|v| <= radius`.
pub fn taylor_cubic_bound(t: &Tensor3, radius: f64) -> f64 {
    third_tensor_norm_bound(t) * radius.powi(3)
}
