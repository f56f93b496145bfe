//! Exact rejection sampling from `P_N`.
//!
//! The envelope comes from the certified constants. With `d = x − x*(N)`,
//! `u` the inward distance to the binding face and `v` the tangential part,
//!
//! * interior: `f* − f(x) ≥ ½ F'(2)_Ω |d|²` on all of `Ω`,
//! * boundary: `f* − f(x) ≥ ½ F'(1)_Ω u + ½ F'(2)_Ω |v|²` on all of `Ω`,
//!
//! so `e^{N(f − f*)}` is dominated by an unnormalized Gaussian (times an
//! exponential on the boundary axis) whose precision does not exceed these
//! rates. Proposals outside `Ω` are rejected.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::GibbsMeasure;
use crate::constants::{tangent_hessian, ConstantsReport};
use crate::derivatives::Differentiator;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix, Vector};

/// Acceptance rates below this abort sampling.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub struct SamplerOptions {
    pub workers: usize,
    /// Covariance inflation of the Gaussian proposal relative to the Laplace covariance.
    pub inflation: f64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            workers: 8,
            inflation: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleBatch {
    #[serde(rename = "N")]
    pub n: u64,
    pub seed: u64,
    pub workers: usize,
    pub count: usize,
    pub proposals: u64,
    pub acceptance_rate: f64,
    /// Draws in the world frame.
    #[serde(skip)]
    pub points: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
}

impl SampleBatch {
    /// Writes one row per draw with columns `x1..xm`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        let m = self.mean.len();
        w.write_record((1..=m).map(|i| format!("x{i}"))).map_err(csv_error)?;
        for p in &self.points {
            w.write_record(p.iter().map(|v| format!("{v:e}"))).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fraction of draws inside a local-frame box of the measure's domain.
    pub fn fraction_in(&self, measure: &GibbsMeasure, b: &crate::problem::BoxDomain) -> f64 {
        let domain = measure.spec().domain();
        let hits = self.points.iter().filter(|p| b.contains_local(&domain.to_local(p), 0.0)).count();
        hits as f64 / self.points.len() as f64
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Proposal `x = c + s_a E/(N a) e_a + L v` with `E ~ Exp(1)`, `v ~ N(0, I)`
/// on the Gaussian axes; the log of its unnormalized density at the draw is
/// `−E − |v|²/2`.
struct Proposal {
    center: Vec<f64>,
    gaussian_axes: Vec<usize>,
    /// Maps standard normals to offsets on the Gaussian axes.
    factor: Matrix,
    boundary: Option<(usize, f64, f64)>,
}

impl Proposal {
    fn draw(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
        let mut x = self.center.clone();
        let k = self.gaussian_axes.len();
        let z = Vector::from_fn(k, |_, _| StandardNormal.sample(rng));
        let off = &self.factor * &z;
        for (j, &a) in self.gaussian_axes.iter().enumerate() {
            x[a] += off[j];
        }
        let mut log_q = -0.5 * z.norm_squared();
        if let Some((axis, sign, rate)) = self.boundary {
            let e: f64 = Exp1.sample(rng);
            x[axis] += sign * e / rate;
            log_q -= e;
        }
        (x, log_q)
    }
}

/// Gaussian proposal factor: precision `N P` with `P = (−H)/inflation`,
/// shrunk so its largest eigenvalue is at most `cap`.
fn gaussian_factor(h: &Matrix, n: f64, inflation: f64, cap: f64) -> Result<Matrix> {
    if h.nrows() == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let mut p = -h / inflation;
    let top = symmetric_eigenvalues(&p).into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) || !(cap > 0.0) {
        return Err(Error::Envelope(0.0));
    }
    if top > cap {
        p *= cap / top;
    }
    p *= n;
    let chol = p.cholesky().ok_or(Error::Envelope(0.0))?;
    // x = L^{-T} z has precision L L^T
    let lt_inv = chol.l().transpose().try_inverse().ok_or(Error::Envelope(0.0))?;
    Ok(lt_inv)
}

/// Draws `count` points from `P_N` with the default options.
pub fn sample(measure: &GibbsMeasure, consts: &ConstantsReport, count: usize, seed: u64) -> Result<SampleBatch> {
    sample_with(measure, consts, count, seed, &SamplerOptions::default())
}

pub fn sample_with(
    measure: &GibbsMeasure,
    consts: &ConstantsReport,
    count: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::Precondition("sample count must be positive".into()));
    }
    let spec = measure.spec();
    let n = measure.n();
    if spec.has_perturbation() && !consts.n_sweep.contains(&n) {
        return Err(Error::Precondition(format!("N = {n} is outside the sweep the constants certify")));
    }
    let nf = n as f64;
    let domain = spec.local_domain();
    let info = spec.maximum();
    let f = spec.local_f(n);
    let center = spec.x_star_in_neighborhood(n)?;
    let f_star = f.eval(&center);
    let h = tangent_hessian(&Differentiator::for_region(&f, &domain).hessian(&center)?, info.boundary_axis());
    let factor = gaussian_factor(&h, nf, opts.inflation, consts.f2_prime_omega)?;
    let boundary = match info.boundary {
        Some(face) => {
            let a = consts.f1_prime_omega.ok_or(Error::MissingConstant("F1_prime_Omega"))?;
            Some((face.axis, face.inward_sign(), 0.5 * a * nf))
        }
        None => None,
    };
    let proposal = Proposal {
        center,
        gaussian_axes: (0..spec.dimension()).filter(|&a| Some(a) != info.boundary_axis()).collect(),
        factor,
        boundary,
    };

    let workers = opts.workers.max(1);
    let chunks: Vec<usize> = (0..workers).map(|w| count / workers + usize::from(w < count % workers)).collect();
    let results = chunks
        .par_iter()
        .enumerate()
        .map(|(w, &want)| -> Result<(Vec<Vec<f64>>, u64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(w as u64);
            let mut out = Vec::with_capacity(want);
            let mut tried = 0u64;
            let limit = (want as f64 / MIN_ACCEPTANCE) as u64 + 100_000;
            while out.len() < want {
                if tried >= limit {
                    return Err(Error::Envelope(out.len() as f64 / tried as f64));
                }
                tried += 1;
                let (x, log_q) = proposal.draw(&mut rng);
                if !domain.contains_local(&x, 0.0) {
                    continue;
                }
                let log_accept = nf * (f.eval(&x) - f_star) - log_q;
                if log_accept > 1e-9 {
                    return Err(Error::assumption(
                        "rejection envelope",
                        format!("target exceeds the envelope by e^{log_accept:e} at {x:?}"),
                    ));
                }
                if rng.random::<f64>().ln() < log_accept {
                    out.push(x);
                }
            }
            Ok((out, tried))
        })
        .collect::<Result<Vec<_>>>()?;
    let proposals: u64 = results.iter().map(|r| r.1).sum();
    let acceptance_rate = count as f64 / proposals as f64;
    if acceptance_rate < MIN_ACCEPTANCE {
        return Err(Error::Envelope(acceptance_rate));
    }
    let world = spec.domain();
    let points: Vec<Vec<f64>> = results.into_iter().flat_map(|r| r.0).map(|u| world.to_world(&u)).collect();
    let m = spec.dimension();
    let mean: Vec<f64> = (0..m).map(|a| points.iter().map(|p| p[a]).sum::<f64>() / count as f64).collect();
    let std_dev = (0..m)
        .map(|a| {
            let v = points.iter().map(|p| (p[a] - mean[a]).powi(2)).sum::<f64>() / (count.max(2) - 1) as f64;
            v.sqrt()
        })
        .collect();
    Ok(SampleBatch {
        n,
        seed,
        workers,
        count,
        proposals,
        acceptance_rate,
        points,
        mean,
        std_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::estimate_constants;
    use crate::problem::{catalog, BoxDomain};

    fn setup(name: &str, n: u64) -> (GibbsMeasure, ConstantsReport) {
        let spec = catalog::by_name(name).unwrap();
        let c = estimate_constants(&spec, 32, &[n], 1.1).unwrap();
        (GibbsMeasure::new(&spec, n, 1e-12).unwrap(), c)
    }

    #[test]
    fn gauss1d_mean() {
        let (g, c) = setup("gauss1d", 100);
        let b = sample(&g, &c, 100_000, 7).unwrap();
        assert!(b.mean[0].abs() <= 4.0 * 10f64.powf(-3.5));
        assert!((b.std_dev[0] - 0.1).abs() < 0.002);
    }

    #[test]
    fn exp1d_moments() {
        let (g, c) = setup("exp1d", 100);
        let b = sample(&g, &c, 100_000, 11).unwrap();
        assert!(b.points.iter().all(|p| p[0] >= 0.0));
        assert!((100.0 * b.mean[0] - 1.0).abs() <= 4.0 / (100_000f64).sqrt());
    }

    #[test]
    fn deterministic_per_seed() {
        let (g, c) = setup("mixed2d", 64);
        let a = sample(&g, &c, 2_000, 3).unwrap();
        let b = sample(&g, &c, 2_000, 3).unwrap();
        assert_eq!(a.points, b.points);
        let d = sample(&g, &c, 2_000, 4).unwrap();
        assert_ne!(a.points, d.points);
    }

    #[test]
    fn box_frequencies_match_quadrature() {
        use rand::Rng;
        let (g, c) = setup("coupled2d", 64);
        let count = 40_000;
        let b = sample(&g, &c, count, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let lo: Vec<f64> = (0..2).map(|_| rng.random_range(-0.4..0.1)).collect();
            let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.05..0.4)).collect();
            let bx = BoxDomain::new(lo, hi).unwrap();
            let p = g.measure_of(&bx).unwrap();
            let q = b.fraction_in(&g, &bx);
            let se = (p * (1.0 - p) / count as f64).sqrt().max(1e-4);
            assert!((p - q).abs() <= 5.0 * se, "box {bx:?}: quadrature {p}, sampler {q}");
        }
    }

    #[test]
    fn csv_export() {
        let (g, c) = setup("mixed2d", 64);
        let b = sample(&g, &c, 10, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("draws.csv");
        b.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("x1,x2\n"));
        assert_eq!(text.lines().count(), 11);
    }
}
