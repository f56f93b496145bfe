//! Reference integration of `∫ w(x) e^{N f(x,N) + t·x} dx` over boxes.
//!
//! Values are carried as `scaled * e^{log_scale}` where `log_scale` is the
//! exponent at its maximizer over the region, so peaked integrands at large
//! `N` neither overflow nor lose relative accuracy. The mesh is a tensor
//! product of panels graded geometrically away from that maximizer; each
//! cell is integrated with order-`q` and order-`2q` Gauss-Legendre rules and
//! the worst cells are bisected until the summed discrepancy is below `tol`.

use rayon::prelude::*;
use serde::Serialize;

use crate::derivatives::Differentiator;
use crate::error::{Error, Result};
use crate::problem::optimize::maximize_in_box;
use crate::problem::{BoxDomain, ProblemSpec, ScalarField};
use crate::special::{ln_gamma, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    /// The integral equals `scaled * exp(log_scale)`.
    pub log_scale: f64,
    pub scaled: f64,
    /// Error estimate on `scaled`.
    pub scaled_error: f64,
    pub evaluations: u64,
    pub converged: bool,
}

impl OracleValue {
    /// The integral itself (may overflow or underflow when `log_scale` is large).
    pub fn value(&self) -> f64 {
        self.scaled * self.log_scale.exp()
    }

    pub fn abs_error_estimate(&self) -> f64 {
        self.scaled_error * self.log_scale.exp()
    }

    /// `ln |value|`.
    pub fn ln_abs(&self) -> f64 {
        self.scaled.abs().ln() + self.log_scale
    }

    /// Error estimate relative to `|value|`.
    pub fn relative_error(&self) -> f64 {
        self.scaled_error / self.scaled.abs()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Absolute tolerance on the scaled value.
    pub tol: f64,
    /// Low Gauss order per cell; the high rule uses twice as many nodes.
    /// `None` picks 16 for `m <= 2`, 8 for `m = 3`, 6 for `m = 4`.
    pub order: Option<usize>,
    pub max_cells: usize,
    pub max_rounds: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            tol: 1e-12,
            order: None,
            max_cells: 400_000,
            max_rounds: 40,
        }
    }
}

impl OracleOptions {
    pub fn with_tol(tol: f64) -> Self {
        OracleOptions {
            tol,
            ..OracleOptions::default()
        }
    }

    fn order_for(&self, m: usize) -> usize {
        self.order.unwrap_or(match m {
            1 | 2 => 16,
            3 => 8,
            _ => 6,
        })
    }
}

/// What to integrate, in the local frame of the problem's box.
pub struct Integrand<'a> {
    /// Exponent field `f`; the integrand carries `e^{n f}`.
    pub f: &'a ScalarField,
    pub n: f64,
    /// Linear tilt `t` added to the exponent; empty for none.
    pub tilt: &'a [f64],
    pub weight: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub region: &'a BoxDomain,
    /// Starting point for locating the exponent's maximizer over `region`.
    pub hint: &'a [f64],
}

#[derive(Debug, Clone)]
struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct CellEstimate {
    value: f64,
    error: f64,
}

struct Kernel<'a> {
    f: &'a ScalarField,
    n: f64,
    tilt: &'a [f64],
    weight: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    shift: f64,
    low: GaussLegendre,
    high: GaussLegendre,
}

impl Kernel<'_> {
    fn exponent(&self, x: &[f64]) -> f64 {
        let t: f64 = self.tilt.iter().zip(x).map(|(a, b)| a * b).sum();
        self.n * self.f.eval(x) + t
    }

    fn integrand(&self, x: &[f64]) -> f64 {
        let w = (self.weight)(x);
        if w == 0.0 {
            return 0.0;
        }
        w * (self.exponent(x) - self.shift).exp()
    }

    fn rule(&self, cell: &Cell, rule: &GaussLegendre) -> Result<f64> {
        let m = cell.lo.len();
        let q = rule.nodes.len();
        let mids: Vec<f64> = (0..m).map(|a| 0.5 * (cell.lo[a] + cell.hi[a])).collect();
        let halves: Vec<f64> = (0..m).map(|a| 0.5 * (cell.hi[a] - cell.lo[a])).collect();
        let jac: f64 = halves.iter().product();
        let mut idx = vec![0usize; m];
        let mut x = vec![0.0; m];
        let mut acc = 0.0;
        loop {
            let mut w = jac;
            for a in 0..m {
                x[a] = mids[a] + halves[a] * rule.nodes[idx[a]];
                w *= rule.weights[idx[a]];
            }
            let v = self.integrand(&x);
            if !v.is_finite() {
                return Err(Error::Evaluation(x));
            }
            acc += w * v;
            let mut a = m;
            loop {
                if a == 0 {
                    return Ok(acc);
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < q {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    fn estimate(&self, cell: &Cell) -> Result<CellEstimate> {
        let lo = self.rule(cell, &self.low)?;
        let hi = self.rule(cell, &self.high)?;
        Ok(CellEstimate {
            value: hi,
            error: (hi - lo).abs(),
        })
    }

    fn evaluations_per_cell(&self, m: usize) -> u64 {
        (self.low.nodes.len().pow(m as u32) + self.high.nodes.len().pow(m as u32)) as u64
    }
}

/// Breakpoints on `[lo, hi]` graded geometrically away from `c` at scale `s`.
fn graded_breaks(lo: f64, hi: f64, c: f64, s: f64) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    if c > lo && c < hi {
        pts.push(c);
    }
    let mut d = 0.5 * s;
    while d < hi - lo {
        for p in [c - d, c + d] {
            if p > lo && p < hi {
                pts.push(p);
            }
        }
        d *= 2.0;
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (hi - lo));
    pts
}

fn split(cell: &Cell) -> Vec<Cell> {
    let m = cell.lo.len();
    let mid: Vec<f64> = (0..m).map(|a| 0.5 * (cell.lo[a] + cell.hi[a])).collect();
    (0..1usize << m)
        .map(|mask| {
            let mut lo = cell.lo.clone();
            let mut hi = cell.hi.clone();
            for a in 0..m {
                if mask >> a & 1 == 1 {
                    lo[a] = mid[a];
                } else {
                    hi[a] = mid[a];
                }
            }
            Cell { lo, hi }
        })
        .collect()
}

/// Integrates `weight · e^{n f + tilt·x}` over `region`.
pub fn integrate_exponential(integrand: &Integrand<'_>, opts: &OracleOptions) -> Result<OracleValue> {
    let region = integrand.region;
    let m = region.dim();
    if opts.tol < 1e-14 || !opts.tol.is_finite() {
        return Err(Error::Precondition(format!("tolerance {} below 1e-14", opts.tol)));
    }
    if m > 4 {
        return Err(Error::Precondition(format!("dimension {m} > 4")));
    }
    let phi = if integrand.tilt.iter().any(|&t| t != 0.0) {
        integrand
            .f
            .linear_combination(integrand.n, &ScalarField::linear(integrand.tilt.to_vec()), 1.0)
    } else {
        integrand.f.linear_combination(integrand.n, &ScalarField::zero(m), 0.0)
    };
    let mut start = integrand.hint.to_vec();
    region.clamp_local(&mut start);
    let peak = maximize_in_box(&phi, region, &start, &[])?;
    let c = peak.point;
    let diff = Differentiator::for_region(&phi, region);
    let grad = diff.gradient(&c)?;
    let hess = diff.hessian(&c)?;

    let breaks: Vec<Vec<f64>> = (0..m)
        .map(|a| {
            let (lo, hi) = (region.lower()[a], region.upper()[a]);
            let edge = hi - lo;
            let on_face = c[a] <= lo || c[a] >= hi;
            let mut s = f64::INFINITY;
            if on_face && grad[a].abs() > 0.0 {
                s = s.min(1.0 / grad[a].abs());
            }
            if hess[(a, a)] < 0.0 {
                s = s.min(1.0 / (-hess[(a, a)]).sqrt());
            }
            let s = if s.is_finite() { s.min(0.25 * edge) } else { 0.125 * edge };
            graded_breaks(lo, hi, c[a], s.max(1e-12 * edge))
        })
        .collect();

    let mut cells = Vec::new();
    let mut idx = vec![0usize; m];
    'outer: loop {
        cells.push(Cell {
            lo: (0..m).map(|a| breaks[a][idx[a]]).collect(),
            hi: (0..m).map(|a| breaks[a][idx[a] + 1]).collect(),
        });
        let mut a = m;
        loop {
            if a == 0 {
                break 'outer;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] + 1 < breaks[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }

    let q = opts.order_for(m);
    let kernel = Kernel {
        f: integrand.f,
        n: integrand.n,
        tilt: integrand.tilt,
        weight: integrand.weight,
        shift: peak.value,
        low: GaussLegendre::new(q),
        high: GaussLegendre::new(2 * q),
    };
    let per_cell = kernel.evaluations_per_cell(m);
    let mut estimates: Vec<CellEstimate> = cells.par_iter().map(|c| kernel.estimate(c)).collect::<Result<_>>()?;
    let mut evaluations = per_cell * cells.len() as u64;

    let total = |est: &[CellEstimate]| -> (f64, f64) {
        est.iter().fold((0.0, 0.0), |(v, e), c| (v + c.value, e + c.error))
    };
    let mut rounds = 0;
    loop {
        let (value, error) = total(&estimates);
        if error <= opts.tol {
            return Ok(OracleValue {
                log_scale: peak.value,
                scaled: value,
                scaled_error: error,
                evaluations,
                converged: true,
            });
        }
        if rounds >= opts.max_rounds || cells.len() >= opts.max_cells {
            return Err(Error::Budget {
                estimate: value * peak.value.exp(),
                error: error * peak.value.exp(),
            });
        }
        rounds += 1;
        // split the largest-error cells until the rest fit in half the budget
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by(|&i, &j| estimates[j].error.total_cmp(&estimates[i].error).then(i.cmp(&j)));
        let mut remaining = error;
        let mut chosen = Vec::new();
        for &i in &order {
            if remaining <= 0.5 * opts.tol {
                break;
            }
            remaining -= estimates[i].error;
            chosen.push(i);
        }
        chosen.sort_unstable();
        let children: Vec<Cell> = chosen.iter().flat_map(|&i| split(&cells[i])).collect();
        let child_est: Vec<CellEstimate> = children.par_iter().map(|c| kernel.estimate(c)).collect::<Result<_>>()?;
        evaluations += per_cell * children.len() as u64;
        let mut keep_cells = Vec::with_capacity(cells.len() + children.len());
        let mut keep_est = Vec::with_capacity(cells.len() + children.len());
        let mut ci = 0;
        for (i, (cell, est)) in cells.into_iter().zip(estimates).enumerate() {
            if ci < chosen.len() && chosen[ci] == i {
                ci += 1;
            } else {
                keep_cells.push(cell);
                keep_est.push(est);
            }
        }
        keep_cells.extend(children);
        keep_est.extend(child_est);
        cells = keep_cells;
        estimates = keep_est;
    }
}

/// `∫_Ω w e^{N f(x,N)} dx` with `w` defaulting to `g` (both in the local frame).
pub fn integrate(spec: &ProblemSpec, weight: Option<&ScalarField>, n: u64, tol: f64) -> Result<OracleValue> {
    integrate_with(spec, weight, &[], None, n, &OracleOptions::with_tol(tol))
}

/// General form: optional weight, linear tilt `t` and sub-box of the domain
/// (all in the local frame).
pub fn integrate_with(
    spec: &ProblemSpec,
    weight: Option<&ScalarField>,
    tilt: &[f64],
    region: Option<&BoxDomain>,
    n: u64,
    opts: &OracleOptions,
) -> Result<OracleValue> {
    let domain = spec.local_domain();
    let region = match region {
        Some(r) => {
            if !domain.contains_box(r, 1e-12) {
                return Err(Error::Domain("integration region escapes the domain".into()));
            }
            r.clone()
        }
        None => domain,
    };
    let f = spec.local_f(n);
    let w = weight.unwrap_or(spec.local_g());
    let wf = |x: &[f64]| w.eval(x);
    let hint = spec.x_star_at(n)?;
    integrate_exponential(
        &Integrand {
            f: &f,
            n: n as f64,
            tilt,
            weight: &wf,
            region: &region,
            hint: &hint,
        },
        opts,
    )
}

/// `∫_{|x| >= R} |x|^k e^{-a N |x|^2} dx` over `R^m` by radial reduction.
/// `tol` is relative to the result.
pub fn tail_integral(m: usize, k: u32, a: f64, n: f64, r: f64, tol: f64) -> Result<OracleValue> {
    if m == 0 || !(a > 0.0) || !(n >= 1.0) || !(r >= 0.0) {
        return Err(Error::Domain(format!("tail integral needs m >= 1, a > 0, N >= 1, R >= 0 (m={m}, a={a}, N={n}, R={r})")));
    }
    let b = a * n;
    let p = (k as usize + m - 1) as f64;
    let r_peak = (p / (2.0 * b)).sqrt().max(r);
    let top = if p == 0.0 { -b * r_peak * r_peak } else { p * r_peak.ln() - b * r_peak * r_peak };
    // exponent relative to its maximum, as a function of the offset u = t - r_peak
    let drop = |u: f64| -> f64 {
        let lin = if p == 0.0 { 0.0 } else { p * (u / r_peak).ln_1p() };
        lin - b * u * (2.0 * r_peak + u)
    };
    let slope = 2.0 * b * r_peak - if r_peak > 0.0 { p / r_peak } else { 0.0 };
    let s = (1.0 / (2.0 * b).sqrt()).min(if slope > 0.0 { 1.0 / slope } else { f64::INFINITY });
    let mut end = s;
    while drop(end) > -800.0 {
        end *= 2.0;
    }
    let start = r - r_peak;
    let mut breaks = vec![start, end];
    let mut d = 0.5 * s;
    while d < end {
        breaks.push(d);
        if -d > start {
            breaks.push(-d);
        }
        d *= 2.0;
    }
    if start < 0.0 {
        breaks.push(0.0);
    }
    breaks.sort_by(|x, y| x.total_cmp(y));
    breaks.dedup();
    let f = |u: f64| if r_peak + u <= 0.0 && p > 0.0 { 0.0 } else { drop(u).exp() };
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0u64;
    for w in breaks.windows(2) {
        let (v, e) = crate::special::adaptive_gauss_legendre(f, w[0], w[1], 0.1 * tol * s);
        value += v;
        error += e;
        evaluations += 45;
    }
    let ln_area = std::f64::consts::LN_2 + 0.5 * m as f64 * std::f64::consts::PI.ln() - ln_gamma(0.5 * m as f64);
    let converged = error <= tol * value.abs();
    Ok(OracleValue {
        log_scale: top + ln_area,
        scaled: value,
        scaled_error: error,
        evaluations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::catalog;
    use std::f64::consts::PI;

    /// Maclaurin series of erf, independent of the library implementation.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            term *= -x * x / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn exp1d_matches_closed_form() {
        let spec = catalog::exp1d().unwrap();
        let v = integrate(&spec, None, 10, 1e-12).unwrap();
        assert!(v.converged);
        let exact = (1.0 - (-10f64).exp()) / 10.0;
        assert!((v.value() - exact).abs() < 1e-12, "{} vs {exact}", v.value());
    }

    #[test]
    fn gauss1d_matches_erf_series() {
        let spec = catalog::gauss1d().unwrap();
        let v = integrate(&spec, None, 4, 1e-12).unwrap();
        let exact = (2.0 * PI / 4.0).sqrt() * erf_series(2f64.sqrt());
        assert!((v.value() - exact).abs() < 1e-12);
    }

    #[test]
    fn mixed2d_factorizes() {
        let spec = catalog::mixed2d().unwrap();
        let tol = 1e-12;
        let v = integrate(&spec, None, 100, tol).unwrap();
        let e = integrate(&catalog::exp1d().unwrap(), None, 100, tol).unwrap();
        let g = integrate(&catalog::gauss1d().unwrap(), None, 100, tol).unwrap();
        assert!((v.value() - e.value() * g.value()).abs() < 2.0 * tol);
    }

    #[test]
    fn large_n_stays_in_log_space() {
        let spec = catalog::gauss2d().unwrap();
        let v = integrate(&spec, None, 1_000_000, 1e-12).unwrap();
        assert!((v.value() / (2.0 * PI / 1e6) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tail_integral_examples() {
        let t = tail_integral(1, 0, 1.0, 4.0, 1.0, 1e-12).unwrap();
        let exact = (PI / 4.0).sqrt() * crate::special::erfc(2.0);
        assert!((t.value() / exact - 1.0).abs() < 1e-10, "{} {exact}", t.value());
        let full = tail_integral(2, 0, 1.5, 3.0, 0.0, 1e-12).unwrap();
        assert!((full.value() / (PI / 4.5) - 1.0).abs() < 1e-10);
        let second = tail_integral(1, 2, 1.0, 2.0, 0.0, 1e-12).unwrap();
        assert!((second.value() / (PI.sqrt() / (2.0 * 2f64.powf(1.5))) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tail_integral_far_out_does_not_underflow() {
        let t = tail_integral(3, 3, 4.0, 1e4, 2.0, 1e-12).unwrap();
        assert!(t.scaled > 0.0 && t.log_scale < -1.5e5);
    }

    #[test]
    fn graded_breaks_are_sorted_and_cover() {
        let b = graded_breaks(-1.0, 1.0, 0.0, 0.1);
        assert_eq!(b[0], -1.0);
        assert_eq!(*b.last().unwrap(), 1.0);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert!(b.contains(&0.0));
    }
}
