//! Pass/fail line per acceptance criterion; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use dyadic_sobolev::algebra::{polarization_gap, square, square_coefficient_gap};
use dyadic_sobolev::counterexamples::{divergence_experiment, CounterexampleSpec, Family};
use dyadic_sobolev::embeddings::{
    gns_ratio, local_ensemble, morrey_sample, run_check, CalibrationFixture, Check, Distribution,
    EnsembleSpec, LOCAL_INTERVAL,
};
use dyadic_sobolev::norms::{
    bmo_norm, hs_seminorm, hs_seminorm_sq_of_step, linf_norm, truncated_hs_bound,
};
use dyadic_sobolev::operators::reconstruction_residual;
use dyadic_sobolev::series::{weighted_haar_sum, weighted_indicator_sum};
use dyadic_sobolev::{DyadicInterval, FractionalParameter, HaarSeries, StepFunction};

const SEED: u64 = 1;
const COUNT: usize = 1000;

type Outcome = Result<(bool, String), dyadic_sobolev::Error>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn p(s: f64) -> FractionalParameter {
    FractionalParameter::new(s).expect("valid s")
}

fn iv(k: i32, n: i64) -> DyadicInterval {
    DyadicInterval::new(k, n).expect("valid interval")
}

fn ensemble() -> Vec<HaarSeries> {
    EnsembleSpec::new(SEED, COUNT).generate().expect("ensemble")
}

/// Uniform, lacunary and single-interval draws together.
fn mixed_ensemble() -> Vec<HaarSeries> {
    let mut all = Vec::new();
    for d in [
        Distribution::Uniform,
        Distribution::LacunaryTower,
        Distribution::SingleInterval,
    ] {
        all.extend(
            EnsembleSpec::new(SEED, COUNT)
                .with_distribution(d)
                .generate()
                .expect("ensemble"),
        );
    }
    all
}

fn fixture() -> CalibrationFixture {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/calibration.json");
    let text = std::fs::read_to_string(path).expect("calibration fixture");
    serde_json::from_str(&text).expect("calibration fixture parses")
}

fn reconstruction() -> Outcome {
    let mut worst = 0.0f64;
    for f in ensemble() {
        let sup = linf_norm(&f.to_step()?);
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            worst = worst.max(reconstruction_residual(&f, p(s))? / (1.0 + sup));
        }
    }
    Ok((
        worst <= 1e-12,
        format!("max residual/(1+sup|f|) = {worst:e}, tolerance 1e-12"),
    ))
}

fn closed_form_sums() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut worst_exact = 0.0f64;
    let cases = [
        (iv(0, 0), 0.3),
        (iv(-4, 5), 0.3125 + 0.01),
        (iv(3, -2), -11.0),
    ];
    for (interval, x) in cases {
        for s in [0.25, 0.5, 0.75, 1.0] {
            let errors = |sum: &dyn Fn(u32) -> (f64, f64)| -> Vec<f64> {
                (5..=20)
                    .map(|d| {
                        let (t, c) = sum(d);
                        c - t
                    })
                    .collect()
            };
            let ind = errors(&|d| {
                let w = weighted_indicator_sum(&interval, s, x, d).unwrap();
                (w.truncated, w.closed_form)
            });
            let haar = errors(&|d| {
                let w = weighted_haar_sum(&interval, s, x, d).unwrap();
                (w.truncated, w.closed_form)
            });
            let expected = 2f64.powf(-s);
            for e in [&ind, &haar] {
                for w in e.windows(2) {
                    worst_ratio = worst_ratio.max((w[1] / w[0] / expected - 1.0).abs());
                }
            }
            if s == 1.0 {
                for d in 5..=20u32 {
                    let w = weighted_indicator_sum(&interval, s, x, d)?;
                    let predicted = w.closed_form * 2f64.powi(-(d as i32 + 1));
                    worst_exact = worst_exact
                        .max(((w.closed_form - w.truncated) - predicted).abs() / w.closed_form);
                    let w = weighted_haar_sum(&interval, s, x, d)?;
                    let predicted = w.closed_form * 2f64.powi(-(d as i32));
                    worst_exact = worst_exact.max(
                        ((w.closed_form - w.truncated) - predicted).abs() / w.closed_form.abs(),
                    );
                }
            }
        }
    }
    Ok((
        worst_ratio <= 0.05 && worst_exact <= 1e-12,
        format!("geometric ratio max rel. error {worst_ratio:e} (tol 0.05), s=1 error formula {worst_exact:e} (tol 1e-12)"),
    ))
}

fn norm_equivalence() -> Outcome {
    let mut violations = 0;
    let samples = ensemble();
    for f in &samples {
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let e = truncated_hs_bound(f, p(s));
            violations += usize::from(!(e.lower_ok && e.upper_ok));
        }
    }
    Ok((
        violations == 0,
        format!(
            "{violations} violations over {} series x 5 s",
            samples.len()
        ),
    ))
}

fn square_coefficients() -> Outcome {
    let samples = ensemble();
    let (mut dual, mut polar) = (0.0f64, 0.0f64);
    for (n, f) in samples.iter().enumerate() {
        let (_, a) = square(f)?;
        dual = dual.max(square_coefficient_gap(f, &a)?.0);
        polar = polar.max(polarization_gap(f, &samples[(n + 1) % samples.len()])?);
    }
    Ok((
        dual <= 1e-10 && polar <= 1e-10,
        format!("dual-route gap {dual:e}, polarization gap {polar:e}, tolerance 1e-10"),
    ))
}

fn morrey() -> Outcome {
    let samples = mixed_ensemble();
    let mut violations = 0;
    let mut pieces = 0;
    for f in &samples {
        pieces += f.to_step()?.pieces().len();
        for s in [0.6, 0.75, 0.9] {
            violations += usize::from(!morrey_sample(f, p(s))?.pass);
        }
    }
    Ok((
        violations == 0,
        format!(
            "{violations} violations, {} samples, {pieces} pieces x 3 s",
            samples.len()
        ),
    ))
}

fn bmo() -> Outcome {
    let samples = mixed_ensemble();
    let violations = samples
        .iter()
        .map(|f| Ok(bmo_norm(f)? > hs_seminorm(f, p(0.5))))
        .collect::<Result<Vec<_>, dyadic_sobolev::Error>>()?
        .into_iter()
        .filter(|&v| v)
        .count();
    Ok((
        violations == 0,
        format!("{violations} violations over {} samples", samples.len()),
    ))
}

fn gns(cal: &CalibrationFixture) -> Outcome {
    let mut dilation = 0.0f64;
    for s in [0.1, 0.25, 0.4] {
        let base = gns_ratio(&HaarSeries::single(iv(0, 0), 1.0), p(s))?;
        for k in -20..=20 {
            let r = gns_ratio(&HaarSeries::single(iv(k, 1), -0.3), p(s))?;
            dilation = dilation.max((r / base - 1.0).abs());
        }
    }
    let samples = ensemble();
    let mut detail = format!("dilation spread {dilation:e} (tol 1e-10)");
    let mut ok = dilation <= 1e-10;
    for s in [0.1, 0.25, 0.4] {
        let check = Check::Gns { s, bound: None }.calibrated(&cal.entries);
        let v = run_check(&check, &samples)?;
        ok &= v.pass && v.constant.is_some();
        detail += &format!(
            "; s={s} sup {:.4} <= {:.4}",
            v.sup_ratio,
            v.constant.unwrap_or(f64::NAN)
        );
    }
    Ok((ok, detail))
}

fn lowreg() -> Outcome {
    let spec = CounterexampleSpec {
        family: Family::LowReg,
        s: 0.25,
        alpha: 0.3,
    };
    let r = divergence_experiment(&spec, &(8..=24).collect::<Vec<_>>())?;
    let inc = r.increments.as_ref().expect("lowreg has increments");
    let slope_ok = r.relative_error <= 0.15;
    Ok((
        slope_ok && inc.pass,
        format!(
            "slope {:.4} [{:.4}, {:.4}] vs {:.1}, rel. error {:.3} (tol 0.15); increment ratio max rel. error {:.4} vs {:.4} (tol 0.05); verdict {}",
            r.fit.slope,
            r.fit.slope_ci_low,
            r.fit.slope_ci_high,
            r.predicted_slope,
            r.relative_error,
            inc.max_relative_error,
            inc.expected_ratio,
            r.verdict.label()
        ),
    ))
}

fn critical() -> Outcome {
    let spec = CounterexampleSpec {
        family: Family::Critical,
        s: 0.5,
        alpha: 1.25,
    };
    let r = divergence_experiment(&spec, &[64, 128, 256, 512])?;
    let conv = r.convergence.as_ref().expect("critical has convergence");
    Ok((
        r.relative_error <= 0.20 && conv.pass,
        format!(
            "power {:.4} [{:.4}, {:.4}] vs {:.1}, rel. error {:.3} (tol 0.20); tail bounds hold: {}; verdict {}",
            r.fit.slope,
            r.fit.slope_ci_low,
            r.fit.slope_ci_high,
            r.predicted_slope,
            r.relative_error,
            conv.pass,
            r.verdict.label()
        ),
    ))
}

fn algebra(cal: &CalibrationFixture) -> Outcome {
    let samples = ensemble();
    let inside = local_ensemble(SEED, COUNT).generate()?;
    let mut ok = true;
    let mut detail = String::new();
    for s in [0.6, 0.75, 0.9] {
        let check = Check::Algebra { s, bound: None }.calibrated(&cal.entries);
        let v = run_check(&check, &samples)?;
        let local = Check::LocalSquare {
            s,
            interval: LOCAL_INTERVAL,
            bound: None,
        }
        .calibrated(&cal.entries);
        let l = run_check(&local, &inside)?;
        ok &= v.pass && l.pass && v.constant.is_some() && l.constant.is_some();
        detail += &format!(
            "s={s} algebra sup {:.4} <= {:.4}, local sup {:.4} <= {:.4}; ",
            v.sup_ratio,
            v.constant.unwrap_or(f64::NAN),
            l.sup_ratio,
            l.constant.unwrap_or(f64::NAN)
        );
    }
    Ok((ok, detail.trim_end_matches("; ").to_string()))
}

fn indicator_seminorm() -> Outcome {
    let g = StepFunction::indicator(DyadicInterval::UNIT);
    let mut worst = 0.0f64;
    for s in [0.25, 0.5, 0.75] {
        let exact = 1.0 / (2f64.powf(2.0 * s + 1.0) - 1.0);
        let oracle: f64 = (1..=50)
            .map(|n| 2f64.powf(-(n as f64) * (2.0 * s + 1.0)))
            .sum();
        let pipeline = hs_seminorm_sq_of_step(&g, p(s), 0)?.total();
        worst = worst
            .max((pipeline / oracle - 1.0).abs())
            .max((pipeline / exact - 1.0).abs());
    }
    Ok((
        worst <= 1e-12,
        format!("max rel. error {worst:e} against oracle and 1/(2^(2s+1)-1), tolerance 1e-12"),
    ))
}

fn main() -> ExitCode {
    let cal = fixture();
    let criteria: Vec<Criterion> = vec![
        ("reconstruction identity", Box::new(reconstruction)),
        ("closed-form weighted sums", Box::new(closed_form_sums)),
        ("norm equivalence", Box::new(norm_equivalence)),
        ("square-coefficient formula", Box::new(square_coefficients)),
        ("Morrey with exact constant", Box::new(morrey)),
        ("BMO with constant 1", Box::new(bmo)),
        ("GNS dilation and calibration", Box::new(|| gns(&cal))),
        ("low-regularity counterexample", Box::new(lowreg)),
        ("critical counterexample", Box::new(critical)),
        ("high-regularity algebra", Box::new(|| algebra(&cal))),
        ("indicator seminorm", Box::new(indicator_seminorm)),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {} {name}: {detail} ({:.2}s)",
            n + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
