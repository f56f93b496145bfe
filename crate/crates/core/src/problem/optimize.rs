//! Projected Newton ascent on a box, used to locate maximizers.

use crate::derivatives::Differentiator;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::problem::{BoxDomain, ScalarField};

#[derive(Debug, Clone)]
pub struct LocalMax {
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient: Vector,
    pub iterations: usize,
}

const MAX_ITER: usize = 200;

/// Maximizes `field` over `region` (local frame) starting from `start`.
/// Coordinates listed in `fixed` keep their starting value.
pub fn maximize_in_box(field: &ScalarField, region: &BoxDomain, start: &[f64], fixed: &[usize]) -> Result<LocalMax> {
    let diff = Differentiator::for_region(field, region);
    let m = start.len();
    let mut x = start.to_vec();
    region.clamp_local(&mut x);
    for &i in fixed {
        x[i] = start[i];
    }
    let mut fx = diff.value(&x)?;
    let mut iterations = 0;
    loop {
        let g = diff.gradient(&x)?;
        let h = diff.hessian(&x)?;
        let free: Vec<usize> = (0..m)
            .filter(|i| !fixed.contains(i))
            .filter(|&i| {
                let at_lo = x[i] <= region.lower()[i] && g[i] < 0.0;
                let at_hi = x[i] >= region.upper()[i] && g[i] > 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        if free.is_empty() || iterations >= MAX_ITER {
            return Ok(LocalMax { point: x, value: fx, gradient: g, iterations });
        }
        let gf = Vector::from_fn(free.len(), |a, _| g[free[a]]);
        if gf.amax() == 0.0 {
            return Ok(LocalMax { point: x, value: fx, gradient: g, iterations });
        }
        let neg_h = Matrix::from_fn(free.len(), free.len(), |a, b| -h[(free[a], free[b])]);
        let dir = match neg_h.clone().cholesky() {
            Some(c) => c.solve(&gf),
            None => {
                // not locally concave: scaled gradient step
                let scale = neg_h.amax().max(1.0);
                &gf / scale
            }
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand = x.clone();
            for (a, &i) in free.iter().enumerate() {
                cand[i] += t * dir[a];
            }
            region.clamp_local(&mut cand);
            let fc = diff.value(&cand)?;
            if fc > fx {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((cand, fc)) => {
                let moved = cand.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                x = cand;
                fx = fc;
                let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if moved <= 1e-15 * scale {
                    let gradient = diff.gradient(&x)?;
                    return Ok(LocalMax { point: x, value: fx, gradient, iterations });
                }
            }
            None => return Ok(LocalMax { point: x, value: fx, gradient: g, iterations }),
        }
    }
}

/// Maximizer of `field` with the listed coordinates fixed, and a check that
/// the result is still a finite point.
pub fn refine_maximizer(field: &ScalarField, region: &BoxDomain, start: &[f64], fixed: &[usize]) -> Result<Vec<f64>> {
    let r = maximize_in_box(field, region, start, fixed)?;
    if r.point.iter().all(|v| v.is_finite()) {
        Ok(r.point)
    } else {
        Err(Error::Evaluation(r.point))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_shifted_quadratic_maximum() {
        let f = ScalarField::new(1, |x| -0.5 * x[0] * x[0] + 0.01 * x[0]);
        let region = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        let r = maximize_in_box(&f, &region, &[0.5], &[]).unwrap();
        assert!((r.point[0] - 0.01).abs() < 1e-10, "{:?}", r.point);
    }

    #[test]
    fn projection_stops_on_face() {
        let f = ScalarField::new(2, |x| -x[0] - 0.5 * (x[1] - 0.2).powi(2));
        let region = BoxDomain::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let r = maximize_in_box(&f, &region, &[0.6, 0.9], &[]).unwrap();
        assert_eq!(r.point[0], 0.0);
        assert!((r.point[1] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn fixed_coordinates_stay_put() {
        let f = ScalarField::new(2, |x| -(x[0] - 0.3).powi(2) - (x[1] - 0.1).powi(2));
        let region = BoxDomain::cube(2, -1.0, 1.0).unwrap();
        let r = maximize_in_box(&f, &region, &[0.0, 0.0], &[0]).unwrap();
        assert_eq!(r.point[0], 0.0);
        assert!((r.point[1] - 0.1).abs() < 1e-8);
    }
}
