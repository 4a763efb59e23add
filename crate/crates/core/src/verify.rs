//! Seeded residual sweeps over the exact identities, the operator round
//! trip and the square-coefficient formula.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{polarization_gap, square, square_coefficient_gap, COEFFICIENT_TOLERANCE};
use crate::dyadic::DyadicInterval;
use crate::embeddings::EnsembleSpec;
use crate::error::{invalid, Result};
use crate::math;
use crate::norms::{l2_norm, l2_norm_of_step, linf_norm, truncated_hs_bound};
use crate::operators::{reconstruction_residual, FractionalParameter};
use crate::series::{telescope_residual, weighted_haar_sum, weighted_indicator_sum, HaarSeries};

pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Smoothness values every sweep runs at.
pub const SWEEP_S: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    Operators,
    AlgebraCoefficients,
}

impl Suite {
    pub const ALL: [Suite; 3] = [
        Suite::Identities,
        Suite::Operators,
        Suite::AlgebraCoefficients,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Operators => "operators",
            Suite::AlgebraCoefficients => "algebra-coefficients",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| invalid("suite ∈ {identities, operators, algebra-coefficients}", s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualCheck {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<ResidualCheck>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.max_residual)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub count: usize,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.suites.iter().all(|s| s.pass())
    }
}

pub const VERIFY_COLUMNS: [&str; 6] = [
    "suite",
    "check",
    "samples",
    "max_residual",
    "tolerance",
    "pass",
];

impl VerifyReport {
    pub fn csv_records(&self) -> Vec<[String; 6]> {
        use alloc::string::ToString;
        self.suites
            .iter()
            .flat_map(|s| {
                s.checks.iter().map(move |c| {
                    [
                        String::from(s.suite.name()),
                        c.name.clone(),
                        c.samples.to_string(),
                        math::format_float(c.max_residual),
                        math::format_float(c.tolerance),
                        c.pass.to_string(),
                    ]
                })
            })
            .collect()
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    samples: usize,
    max: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            samples: 0,
            max: 0.0,
        }
    }

    fn record(&mut self, r: f64) {
        self.samples += 1;
        // NaN must fail
        if !(r <= self.max) {
            self.max = r;
        }
    }

    fn finish(self) -> ResidualCheck {
        ResidualCheck {
            name: String::from(self.name),
            samples: self.samples,
            max_residual: self.max,
            tolerance: self.tolerance,
            pass: self.max <= self.tolerance,
        }
    }
}

/// The ensemble every suite draws from.
pub fn verification_ensemble(seed: u64, count: usize) -> Result<Vec<HaarSeries>> {
    EnsembleSpec::new(seed, count).generate()
}

pub fn run_suites(suites: &[Suite], seed: u64, count: usize) -> Result<VerifyReport> {
    let samples = verification_ensemble(seed, count)?;
    let mut sorted = suites.to_vec();
    sorted.sort();
    sorted.dedup();
    let suites = sorted
        .into_iter()
        .map(|suite| {
            // auxiliary draws get their own stream so suites stay independent
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            rng.set_stream(suite as u64);
            let checks = match suite {
                Suite::Identities => identities(&samples, &mut rng)?,
                Suite::Operators => operators(&samples)?,
                Suite::AlgebraCoefficients => algebra_coefficients(&samples)?,
            };
            Ok(SuiteReport { suite, checks })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport {
        seed,
        count,
        suites,
    })
}

fn pick(f: &HaarSeries, rng: &mut ChaCha8Rng) -> DyadicInterval {
    let n = rng.gen_range(0..f.len());
    f.intervals().nth(n).expect("in range")
}

fn point_in(i: &DyadicInterval, rng: &mut ChaCha8Rng) -> f64 {
    // 30 random bits below the left end keep x exactly representable
    let offset = rng.gen_range(0u64..1 << 30) as f64 / (1u64 << 30) as f64;
    i.left().to_f64() + offset * i.measure()
}

fn identities(samples: &[HaarSeries], rng: &mut ChaCha8Rng) -> Result<Vec<ResidualCheck>> {
    let mut parseval = Tally::new("parseval", IDENTITY_TOLERANCE);
    let mut averages = Tally::new("average_from_coefficients", IDENTITY_TOLERANCE);
    let mut telescope = Tally::new("telescoping_averages", IDENTITY_TOLERANCE);
    let mut indicator = Tally::new("weighted_indicator_error", IDENTITY_TOLERANCE);
    let mut haar = Tally::new("weighted_haar_error", IDENTITY_TOLERANCE);
    let mut lower = Tally::new("norm_equivalence_lower", 0.0);
    let mut upper = Tally::new("norm_equivalence_upper", 0.0);
    for f in samples {
        let step = f.to_step()?;
        let scale = 1.0 + linf_norm(&step);
        let l2 = l2_norm(f);
        parseval.record((l2_norm_of_step(&step) - l2).abs() / (1.0 + l2));

        let i = pick(f, rng);
        averages.record((f.average(&i) - step.average(&i)).abs() / scale);
        let k = rng.gen_range(1..=10);
        telescope.record(telescope_residual(f, &i, k)?.abs() / scale);

        let s = [0.25, 0.5, 1.0][rng.gen_range(0..3)];
        let depth = rng.gen_range(5..=40);
        let x = point_in(&i, rng);
        let w = weighted_indicator_sum(&i, s, x, depth)?;
        let predicted = w.closed_form * math::exp2(-((depth + 1) as f64) * s);
        indicator.record((w.closed_form - w.truncated - predicted).abs() / w.closed_form);
        let w = weighted_haar_sum(&i, s, x, depth)?;
        let predicted = w.closed_form * math::exp2(-(depth as f64) * s);
        haar.record((w.closed_form - w.truncated - predicted).abs() / w.closed_form.abs());

        for s in SWEEP_S {
            let e = truncated_hs_bound(f, FractionalParameter::new(s)?);
            lower.record(((0.5 * e.hs_norm_sq - e.small_scale_sq) / e.hs_norm_sq).max(0.0));
            upper.record(((e.small_scale_sq - e.hs_norm_sq) / e.hs_norm_sq).max(0.0));
        }
    }
    Ok(
        [parseval, averages, telescope, indicator, haar, lower, upper]
            .into_iter()
            .map(Tally::finish)
            .collect(),
    )
}

fn operators(samples: &[HaarSeries]) -> Result<Vec<ResidualCheck>> {
    let mut t = Tally::new("reconstruction", IDENTITY_TOLERANCE);
    for f in samples {
        let scale = 1.0 + linf_norm(&f.to_step()?);
        for s in SWEEP_S {
            t.record(reconstruction_residual(f, FractionalParameter::new(s)?)? / scale);
        }
    }
    Ok(alloc::vec![t.finish()])
}

fn algebra_coefficients(samples: &[HaarSeries]) -> Result<Vec<ResidualCheck>> {
    let mut dual = Tally::new("square_coefficient_dual_route", COEFFICIENT_TOLERANCE);
    let mut polar = Tally::new("polarization", COEFFICIENT_TOLERANCE);
    for (n, f) in samples.iter().enumerate() {
        let (_, a) = square(f)?;
        dual.record(square_coefficient_gap(f, &a)?.0);
        let g = &samples[(n + 1) % samples.len()];
        polar.record(polarization_gap(f, g)?);
    }
    Ok(alloc::vec![dual.finish(), polar.finish()])
}

/// Oracle check that `x` lies in `i`; used by the tests below.
#[cfg(test)]
fn inside(i: &DyadicInterval, x: f64) -> bool {
    crate::dyadic::DyadicPoint::from_f64(x).is_some_and(|p| i.contains_point(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        let msg = "bogus".parse::<Suite>().unwrap_err().to_string();
        assert!(msg.contains("identities"), "{msg}");
    }

    #[test]
    fn points_land_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (k, n) in [(-8, -3), (0, 0), (6, 2), (-30, 17)] {
            let i = DyadicInterval::new(k, n).unwrap();
            for _ in 0..50 {
                assert!(inside(&i, point_in(&i, &mut rng)));
            }
        }
    }

    #[test]
    fn all_suites_pass_on_a_small_ensemble() {
        let r = run_suites(&Suite::ALL, 1, 40).unwrap();
        assert_eq!(r.suites.len(), 3);
        for s in &r.suites {
            for c in &s.checks {
                assert!(c.pass, "{} {}: {}", s.suite, c.name, c.max_residual);
                assert!(c.samples >= 40);
            }
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_suites(&[Suite::Identities], 5, 20).unwrap();
        let b = run_suites(&[Suite::Identities], 5, 20).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nan_residual_fails() {
        let mut t = Tally::new("x", 1.0);
        t.record(0.5);
        t.record(f64::NAN);
        assert!(!t.finish().pass);
    }
}
