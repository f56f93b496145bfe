//! One-sample Kolmogorov-Smirnov tests of `Y(N)` marginals against the limit law.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use super::{FluctuationModel, SampleBatch};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::special::normal_cdf;

pub const MIN_KS_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    StandardNormal,
    UnitExponential,
}

impl Law {
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Law::StandardNormal => normal_cdf(x),
            Law::UnitExponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KsMarginal {
    /// Coordinate index; for Gaussian coordinates this is the index after whitening.
    pub axis: usize,
    pub law: Law,
    pub statistic: f64,
    /// `√count · statistic`.
    pub scaled: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KsReport {
    pub count: usize,
    pub marginals: Vec<KsMarginal>,
}

impl KsReport {
    pub fn max_statistic(&self) -> f64 {
        self.marginals.iter().map(|m| m.statistic).fold(0.0, f64::max)
    }

    pub fn max_scaled(&self) -> f64 {
        self.marginals.iter().map(|m| m.scaled).fold(0.0, f64::max)
    }
}

/// `sup_x |F_n(x) − F(x)|`.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Lower Cholesky factor of the model covariance.
fn covariance_factor(model: &FluctuationModel) -> Result<Matrix> {
    if model.covariance.nrows() == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    model
        .covariance
        .clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Precondition("covariance is not positive definite".into()))
}

/// KS statistics of `Y` vectors against `model`: unit-rate exponential for
/// `rate · Y` on the boundary axis, standard normal for each whitened
/// Gaussian coordinate `L^{-1} Ŷ`.
pub fn ks_against_model(ys: &[Vec<f64>], model: &FluctuationModel) -> Result<KsReport> {
    if ys.len() < MIN_KS_SAMPLES {
        return Err(Error::InsufficientSamples(ys.len()));
    }
    let count = ys.len();
    let sq = (count as f64).sqrt();
    let mut marginals = Vec::new();
    let mut push = |axis: usize, law: Law, values: Vec<f64>| {
        let d = ks_statistic(&values, |x| law.cdf(x));
        marginals.push(KsMarginal {
            axis,
            law,
            statistic: d,
            scaled: sq * d,
            p_value: kolmogorov_survival(sq * d),
        });
    };
    if let (Some(face), Some(rate)) = (model.boundary, model.rate) {
        push(face.axis, Law::UnitExponential, ys.iter().map(|y| rate * y[face.axis]).collect());
    }
    let axes = model.gaussian_axes();
    if !axes.is_empty() {
        let l = covariance_factor(model)?;
        let whitened: Vec<Vector> = ys
            .iter()
            .map(|y| {
                let v = Vector::from_iterator(axes.len(), axes.iter().map(|&a| y[a]));
                l.solve_lower_triangular(&v).expect("Cholesky factor is invertible")
            })
            .collect();
        for j in 0..axes.len() {
            push(axes[j], Law::StandardNormal, whitened.iter().map(|w| w[j]).collect());
        }
    }
    Ok(KsReport { count, marginals })
}

/// Transforms a batch to `Y(N)` and tests it against `model`.
pub fn empirical_limit_test(batch: &SampleBatch, model: &FluctuationModel) -> Result<KsReport> {
    if batch.points.len() < MIN_KS_SAMPLES {
        return Err(Error::InsufficientSamples(batch.points.len()));
    }
    let ys: Vec<Vec<f64>> = batch.points.iter().map(|p| model.to_y(batch.n, p)).collect();
    ks_against_model(&ys, model)
}

/// Exact draws of `Y` from the limit law.
pub fn limit_samples(model: &FluctuationModel, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let l = covariance_factor(model)?;
    let axes = model.gaussian_axes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let mut y = vec![0.0; model.dim()];
            let z = Vector::from_fn(axes.len(), |_, _| StandardNormal.sample(&mut rng));
            let g = &l * z;
            for (j, &a) in axes.iter().enumerate() {
                y[a] = g[j];
            }
            if let (Some(face), Some(rate)) = (model.boundary, model.rate) {
                let e: f64 = Exp1.sample(&mut rng);
                y[face.axis] = e / rate;
            }
            y
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::estimate_constants;
    use crate::gibbs::{sample, GibbsMeasure};
    use crate::problem::catalog;

    #[test]
    fn kolmogorov_quantiles() {
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 5e-4);
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 5e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn statistic_of_uniform_grid() {
        let v: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_statistic(&v, |x| x.clamp(0.0, 1.0)) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn exact_limit_sampler_passes() {
        for name in ["gauss1d", "exp1d", "coupled2d", "mixed2d", "boundary3d"] {
            let model = FluctuationModel::from_spec(&catalog::by_name(name).unwrap()).unwrap();
            let ys = limit_samples(&model, 20_000, 17).unwrap();
            let r = ks_against_model(&ys, &model).unwrap();
            assert!(r.max_scaled() <= 1.63, "{name}: {:?}", r.marginals);
        }
    }

    #[test]
    fn too_few_samples() {
        let model = FluctuationModel::from_spec(&catalog::gauss1d().unwrap()).unwrap();
        let ys = limit_samples(&model, 50, 1).unwrap();
        assert!(matches!(ks_against_model(&ys, &model), Err(Error::InsufficientSamples(50))));
    }

    #[test]
    fn gibbs_draws_match_limit() {
        let spec = catalog::mixed2d().unwrap();
        let c = estimate_constants(&spec, 32, &[400], 1.1).unwrap();
        let g = GibbsMeasure::new(&spec, 400, 1e-12).unwrap();
        let b = sample(&g, &c, 20_000, 2).unwrap();
        let r = empirical_limit_test(&b, &FluctuationModel::from_spec(&spec).unwrap()).unwrap();
        assert_eq!(r.marginals.len(), 2);
        assert!(r.max_statistic() <= 0.02, "{:?}", r.marginals);
    }
}
