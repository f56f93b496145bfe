//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line. With `ACCEPTANCE_STRICT=1` the process
//! exits nonzero if any criterion fails; otherwise it only reports, so the
//! remaining test targets still run under `cargo test`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use laplace_cert::constants::{audit_constants, estimate_constants};
use laplace_cert::gibbs::{
    empirical_limit_test, fluctuation_sweep, lln_sweep, maximum_drift_check, preposition1_check, sample, FluctuationModel,
    GibbsMeasure,
};
use laplace_cert::laplace::{approximate, ln_gaussian_tail_bound, RadiusMode, Theorem};
use laplace_cert::problem::{catalog, EpsilonSchedule, MaximumKind};
use laplace_cert::quadrature::{integrate, tail_integral};

const SWEEP: [u64; 4] = [25, 100, 400, 1600];
const ORACLE_TOL: f64 = 1e-11;

type Outcome = (bool, String);

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn enclosure_soundness() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut checked = 0;
    for spec in catalog::catalog() {
        let consts = match estimate_constants(&spec, 32, &SWEEP, 1.1) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("{}: constants {e}", spec.name()));
                continue;
            }
        };
        for n in SWEEP {
            let res = approximate(&spec, &consts, n).and_then(|r| integrate(&spec, None, n, ORACLE_TOL).map(|o| (r, o)));
            match res {
                Ok((r, o)) => {
                    let expected = match (spec.maximum().kind, spec.dimension()) {
                        (MaximumKind::InteriorA, _) => Theorem::T2,
                        (MaximumKind::BoundaryB, 1) => Theorem::T1,
                        _ => Theorem::T3,
                    };
                    checked += 1;
                    if r.theorem != expected || !r.encloses(&o) {
                        failures.push(format!("{} N={n}: rel err {:.3e} vs rel remainder {:.3e}", spec.name(), r.relative_error(&o), r.relative_remainder()));
                    }
                }
                Err(e) => failures.push(format!("{} N={n}: {e}", spec.name())),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs <= 60.0;
    (ok, format!("{checked} (problem, N) pairs enclosed in {secs:.1}s; failures: {failures:?}"))
}

fn closed_form_exactness() -> Outcome {
    let spec = catalog::exp1d().unwrap();
    let consts = estimate_constants(&spec, 64, &SWEEP, 1.1).unwrap();
    let mut deviations = Vec::new();
    let mut bounded = true;
    for n in SWEEP {
        let r = approximate(&spec, &consts, n).unwrap();
        let nf = n as f64;
        let tail = (-nf).exp() / nf;
        // exact = 1/N - e^{-N}/N with 1/N carried as q + rem, so that
        // leading - exact = (leading - q) - rem + e^{-N}/N loses nothing
        let q = 1.0 / nf;
        let rem = (-q).mul_add(nf, 1.0) / nf;
        let abs_err = ((r.leading - q) - rem) + tail;
        deviations.push((n, (abs_err / tail - 1.0).abs()));
        bounded &= abs_err.abs() <= r.remainder_magnitude;
    }
    let worst = deviations.iter().map(|d| d.1).fold(0.0, f64::max);
    (
        worst <= 1e-10 && bounded,
        format!(
            "relative deviation of |leading - exact| from e^-N/N per N: {:?}; error <= remainder on sweep: {bounded}",
            deviations.iter().map(|(n, d)| format!("{n}:{d:.1e}")).collect::<Vec<_>>()
        ),
    )
}

fn rate_recovery() -> Outcome {
    let sweep = [25u64, 100, 400, 1600, 6400];
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["cusp1d", "ridge2d"] {
        let spec = catalog::by_name(name).unwrap();
        let consts = estimate_constants(&spec, 32, &sweep, 1.1).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for n in sweep {
            let r = approximate(&spec, &consts, n).unwrap();
            let o = integrate(&spec, None, n, 1e-13).unwrap();
            xs.push((n as f64).ln());
            ys.push(r.relative_error(&o).ln());
        }
        let s = slope(&xs, &ys);
        ok &= (s + 0.5).abs() <= 0.2;
        parts.push(format!("{name} slope {s:.3}"));
    }
    (ok, parts.join(", "))
}

fn tail_lemma_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240501);
    let mut violations = Vec::new();
    for _ in 0..50 {
        let m = rng.random_range(1..=3usize);
        let k = rng.random_range(0..=3u32);
        let a = rng.random_range(0.5..4.0);
        let n = 10f64.powf(rng.random_range(0.0..4.0));
        let r = rng.random_range(0.2..2.0);
        let bound = ln_gaussian_tail_bound(m, k, a, n, RadiusMode::Fixed(r)).unwrap();
        let oracle = tail_integral(m, k, a, n, r, 1e-10).unwrap().ln_abs();
        if bound < oracle {
            violations.push(format!("(m={m},k={k},a={a:.2},N={n:.0},R={r:.2}): ln bound {bound:.2} < ln tail {oracle:.2}"));
        }
    }
    let mut worst_mode: f64 = 0.0;
    for _ in 0..50 {
        let m = rng.random_range(1..=3usize);
        let k = rng.random_range(0..=3u32);
        let a = rng.random_range(0.5..4.0);
        let n = 10f64.powf(rng.random_range(0.0..4.0));
        let cube = ln_gaussian_tail_bound(m, k, a, n, RadiusMode::CubeRootN).unwrap();
        let fixed = ln_gaussian_tail_bound(m, k, a, n, RadiusMode::Fixed(n.powf(-1.0 / 3.0))).unwrap();
        worst_mode = worst_mode.max((fixed - cube).exp_m1().abs());
    }
    let ok = violations.is_empty() && worst_mode <= 1e-12;
    (
        ok,
        format!(
            "{} of 50 tuples violate dominance; radius modes agree to {worst_mode:.1e}; first violations: {:?}",
            violations.len(),
            violations.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn lln() -> Outcome {
    let sweep = [25u64, 100, 400, 1600, 6400];
    let plain = lln_sweep(&catalog::gauss1d().unwrap(), &[0.5], &sweep, 1e-13).unwrap();
    let ratios = plain.ratios_per_16x();
    let decay_ok = !ratios.is_empty() && ratios.iter().all(|(_, r)| *r <= 0.6);
    let drift = lln_sweep(&catalog::drift1d().unwrap(), &[0.5], &sweep, 1e-13).unwrap();
    let track = drift.max_tracking_ratio();
    (
        decay_ok && track <= 3.0,
        format!(
            "eps=0 per-16x ratios {:?}; eps=N^-3/4 max residual/max(N^-1/2, eps) = {track:.3}",
            ratios.iter().map(|(_, r)| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn fluctuations_interior() -> Outcome {
    let spec = catalog::gauss1d().unwrap();
    let g = GibbsMeasure::new(&spec, 400, 1e-13).unwrap();
    let m = g.mgf_y(&[1.0]).unwrap();
    let dev = (m.mgf_value - 0.5f64.exp()).abs();
    let consts = estimate_constants(&spec, 64, &[400], 1.1).unwrap();
    let batch = sample(&g, &consts, 100_000, 1234).unwrap();
    let ks = empirical_limit_test(&batch, &FluctuationModel::from_spec(&spec).unwrap()).unwrap();
    let d = ks.max_statistic();
    (dev <= 0.06 && d <= 0.02, format!("|M_Y(1) - e^(1/2)| = {dev:.2e}; KS = {d:.4}"))
}

fn fluctuations_boundary() -> Outcome {
    let spec = catalog::exp1d().unwrap();
    let g = GibbsMeasure::new(&spec, 400, 1e-13).unwrap();
    let m = g.mgf_y(&[0.5]).unwrap();
    let dev = (m.mgf_value - 2.0).abs();
    let consts = estimate_constants(&spec, 64, &[400], 1.1).unwrap();
    let batch = sample(&g, &consts, 100_000, 1234).unwrap();
    let d_exp = empirical_limit_test(&batch, &FluctuationModel::from_spec(&spec).unwrap()).unwrap().max_statistic();

    let mixed = catalog::mixed2d().unwrap();
    let gm = GibbsMeasure::new(&mixed, 400, 1e-12).unwrap();
    let mc = estimate_constants(&mixed, 64, &[400], 1.1).unwrap();
    let mb = sample(&gm, &mc, 100_000, 1234).unwrap();
    let report = empirical_limit_test(&mb, &FluctuationModel::from_spec(&mixed).unwrap()).unwrap();
    let d_tan = report
        .marginals
        .iter()
        .filter(|k| k.axis != 0)
        .map(|k| k.statistic)
        .fold(0.0, f64::max);
    (
        dev <= 0.06 && d_exp <= 0.02 && d_tan <= 0.02,
        format!("|M_Y(0.5) - 2| = {dev:.2e}; KS exp1d N X1 vs Exp(1) = {d_exp:.4}; KS mixed2d tangent = {d_tan:.4}"),
    )
}

fn drift() -> Outcome {
    let spec = catalog::gauss1d_perturbed("gauss1d_shift", EpsilonSchedule::power(1.0, 1.0)).unwrap();
    let consts = estimate_constants(&spec, 64, &SWEEP, 1.1).unwrap();
    let rows = maximum_drift_check(&spec, &consts, &SWEEP).unwrap();
    let worst = rows.iter().map(|r| (r.x_star_n[0] - 1.0 / r.n as f64).abs()).fold(0.0, f64::max);
    let bounded = rows.iter().all(|r| r.ok);
    (worst <= 1e-8 && bounded, format!("max |x*(N) - 1/N| = {worst:.1e}; drift within bound: {bounded}"))
}

fn preposition() -> Outcome {
    let gauss = catalog::gauss1d().unwrap();
    let gc = estimate_constants(&gauss, 64, &SWEEP, 1.1).unwrap();
    let g = preposition1_check(&gauss, &gc, &[1.0], &SWEEP).unwrap();
    let exact = g.rows.iter().map(|r| r.shift_residual).fold(0.0, f64::max);
    let quartic = catalog::quartic1d().unwrap();
    let qc = estimate_constants(&quartic, 64, &SWEEP, 1.1).unwrap();
    let q = preposition1_check(&quartic, &qc, &[1.0], &SWEEP).unwrap();
    let stats = |f: fn(&laplace_cert::gibbs::PrepositionRow) -> f64| q.rows.iter().map(|r| format!("{:.3e}", f(r))).collect::<Vec<_>>();
    (
        exact <= 1e-8 && q.shift_bounded && q.value_bounded && q.det_bounded,
        format!(
            "gauss1d shift residual {exact:.1e}; quartic1d stats shift {:?} value {:?} det {:?}",
            stats(|r| r.shift_stat),
            stats(|r| r.value_stat),
            stats(|r| r.det_stat)
        ),
    )
}

fn hypothesis_violation() -> Outcome {
    let sweep = [100u64, 400, 1600, 6400];
    let bad = catalog::gauss1d_perturbed("gauss1d_slow", EpsilonSchedule::power(1.0, 0.25)).unwrap();
    let s = fluctuation_sweep(&bad, &[0.5], &sweep, 1e-13).unwrap();
    let control = fluctuation_sweep(&catalog::drift1d().unwrap(), &[0.5], &sweep, 1e-13).unwrap();
    let ok = s.hypothesis_violated && s.non_decay_detected && !control.hypothesis_violated && !control.non_decay_detected;
    let res = |sw: &laplace_cert::gibbs::MgfSweep| sw.rows.iter().map(|r| format!("{:.3e}", r.residual)).collect::<Vec<_>>();
    (
        ok,
        format!(
            "eps=N^-1/4 flag {} (residuals {:?}); eps=N^-3/4 flag {} (residuals {:?})",
            s.hypothesis_violated && s.non_decay_detected,
            res(&s),
            control.hypothesis_violated || control.non_decay_detected,
            res(&control)
        ),
    )
}

fn constants_soundness() -> Outcome {
    let mut failures = Vec::new();
    for spec in catalog::catalog() {
        let res = estimate_constants(&spec, 64, &SWEEP, 1.1).and_then(|c| audit_constants(&c, &spec, 1000, 7));
        match res {
            Ok(a) if a.passed() => {}
            Ok(a) => failures.push(format!("{}: {:?}", spec.name(), a.violations.iter().take(3).collect::<Vec<_>>())),
            Err(e) => failures.push(format!("{}: {e}", spec.name())),
        }
    }
    (failures.is_empty(), format!("{} catalog problems audited; failures: {failures:?}", catalog::names().len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("enclosure soundness", enclosure_soundness),
        ("closed-form exactness", closed_form_exactness),
        ("rate recovery", rate_recovery),
        ("tail-lemma dominance", tail_lemma_dominance),
        ("law of large numbers", lln),
        ("interior fluctuations", fluctuations_interior),
        ("boundary fluctuations", fluctuations_boundary),
        ("maximum drift", drift),
        ("tilted-maximum estimates", preposition),
        ("hypothesis-violation detection", hypothesis_violation),
        ("constants soundness", constants_soundness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match std::panic::catch_unwind(check) {
            Ok(r) => r,
            Err(p) => (false, format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {name} ({:.1}s): {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
