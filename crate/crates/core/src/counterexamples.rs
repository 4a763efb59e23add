//! The low-regularity and critical counterexample towers.
//!
//! Both families are built on the tower `I^(k)`: `I^(0) = [-1, 0)`, each
//! `I^(k+1)` the right child of `I^(k)`, and `I^(k)` for `k < 0` the
//! `|k|`-fold ancestor of `I^(0)`. Since every stored coefficient lives on
//! the tower, every nonzero Haar coefficient of `f²` does too, and the
//! square can be handled in coefficient space at any truncation level.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::algebra::square_hs_norm;
use crate::dyadic::DyadicInterval;
use crate::error::{invalid, Result};
use crate::fit::{ols, LinearFit};
use crate::math::{self, CompensatedSum, PlainSum};
use crate::norms::hs_norm;
use crate::operators::FractionalParameter;
use crate::series::HaarSeries;

/// Deepest tower level representable as a step function.
pub const MAX_STEP_LEVEL: u32 = (-crate::K_MIN - 1) as u32;
/// Deepest truncation of the critical family.
pub const MAX_CRITICAL_LEVEL: u32 = 4096;

pub const SLOPE_TOLERANCE_LOWREG: f64 = 0.15;
pub const POWER_TOLERANCE_CRITICAL: f64 = 0.20;
pub const INCREMENT_RATIO_TOLERANCE: f64 = 0.05;

/// Tower position `k`; `|I^(k)| = 2^{-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TowerIndex(pub i64);

impl TowerIndex {
    pub fn interval(self) -> Result<DyadicInterval> {
        let scale = -self.0;
        let scale = i32::try_from(scale).unwrap_or(i32::MAX);
        DyadicInterval::new(scale, -1)
    }

    pub fn measure(self) -> f64 {
        math::exp2(-(self.0 as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    LowReg,
    Critical,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::LowReg => "lowreg",
            Family::Critical => "critical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub family: Family,
    pub s: f64,
    pub alpha: f64,
}

impl CounterexampleSpec {
    /// Checks the family's hypotheses, naming the violated one.
    pub fn validate(&self) -> Result<()> {
        let (s, a) = (self.s, self.alpha);
        let got = || format!("s = {s}, α = {a}");
        match self.family {
            Family::LowReg => {
                if !(s > 0.0 && s < 0.5) {
                    return Err(invalid("0 < s < 1/2", got()));
                }
                if !(s < a && a < s / 2.0 + 0.25) {
                    return Err(invalid("s < α < s/2 + 1/4", got()));
                }
            }
            Family::Critical => {
                if s != 0.5 {
                    return Err(invalid("s = 1/2", got()));
                }
                if !(a > 1.0 && a <= 1.5) {
                    return Err(invalid("1 < α ≤ 3/2", got()));
                }
            }
        }
        Ok(())
    }

    pub fn max_level(&self) -> u32 {
        match self.family {
            Family::LowReg => MAX_STEP_LEVEL,
            Family::Critical => MAX_CRITICAL_LEVEL,
        }
    }

    pub fn first_level(&self) -> u32 {
        match self.family {
            Family::LowReg => 0,
            Family::Critical => 1,
        }
    }

    pub fn tower(&self, n: u32) -> Result<TowerSeries> {
        match self.family {
            Family::LowReg => TowerSeries::lowreg(self.alpha, n),
            Family::Critical => TowerSeries::critical(self.alpha, n),
        }
    }

    /// Exponent the family's divergence is compared against: per-level
    /// `2s - 4α + 1` for LowReg, power `3 - 2α` of `N` for Critical.
    pub fn predicted_rate(&self) -> f64 {
        match self.family {
            Family::LowReg => 2.0 * self.s - 4.0 * self.alpha + 1.0,
            Family::Critical => 3.0 - 2.0 * self.alpha,
        }
    }
}

/// `Σ_{k=0}^{N} |I^(k)|^α h_{I^(k)}`.
pub fn lowreg_function(alpha: f64, n: u32) -> Result<HaarSeries> {
    TowerSeries::lowreg(alpha, n)?.to_series()
}

/// `Σ_{k=1}^{N} 2^{-k/2} k^{-α/2} h_{I^(k)}`.
pub fn critical_function(alpha: f64, n: u32) -> Result<HaarSeries> {
    if n > MAX_STEP_LEVEL {
        return Err(invalid("N ≤ 59 for an explicit series", n));
    }
    TowerSeries::critical(alpha, n)?.to_series()
}

/// A series supported on consecutive tower levels `first..=last`, stored
/// through the scaled coefficients `c_k = 2^{k/2} (f, h_{I^(k)})`, which
/// are also the jumps of `f` across the tower.
#[derive(Debug, Clone, PartialEq)]
pub struct TowerSeries {
    first: i64,
    scaled: Vec<f64>,
}

impl TowerSeries {
    pub fn lowreg(alpha: f64, n: u32) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(invalid("α > 0", alpha));
        }
        if n > MAX_STEP_LEVEL {
            return Err(invalid("N ≤ 59", n));
        }
        let scaled = (0..=n)
            .map(|k| math::exp2(f64::from(k) * (0.5 - alpha)))
            .collect();
        Ok(Self { first: 0, scaled })
    }

    pub fn critical(alpha: f64, n: u32) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(invalid("α > 1", alpha));
        }
        if !(1..=MAX_CRITICAL_LEVEL).contains(&n) {
            return Err(invalid("1 ≤ N ≤ 4096", n));
        }
        let scaled = (1..=n)
            .map(|k| math::powf(f64::from(k), -alpha / 2.0))
            .collect();
        Ok(Self { first: 1, scaled })
    }

    pub fn first(&self) -> i64 {
        self.first
    }

    pub fn last(&self) -> i64 {
        self.first + self.scaled.len() as i64 - 1
    }

    fn levels(&self) -> impl DoubleEndedIterator<Item = (i64, f64)> + '_ {
        self.scaled
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.first + i as i64, *c))
    }

    /// `(f, h_{I^(k)})`.
    pub fn coefficient(&self, k: i64) -> f64 {
        if k < self.first || k > self.last() {
            return 0.0;
        }
        self.scaled[(k - self.first) as usize] * math::exp2(-(k as f64) / 2.0)
    }

    pub fn to_series(&self) -> Result<HaarSeries> {
        let mut out = HaarSeries::new();
        for (k, _) in self.levels() {
            out.insert(TowerIndex(k).interval()?, self.coefficient(k));
        }
        Ok(out)
    }

    /// `Σ_k 2^{2ks} (f, h_{I^(k)})²`.
    pub fn hs_seminorm_sq(&self, s: f64) -> f64 {
        self.levels()
            .rev()
            .map(|(k, c)| c * c * math::exp2((k as f64) * (2.0 * s - 1.0)))
            .plain_sum()
    }

    pub fn l2_sq(&self) -> f64 {
        self.levels()
            .rev()
            .map(|(k, c)| c * c * math::exp2(-(k as f64)))
            .plain_sum()
    }

    pub fn hs_norm(&self, s: f64) -> f64 {
        math::sqrt(self.hs_seminorm_sq(s) + self.l2_sq())
    }

    /// `(f², h_{I^(n)})`: `2^{n/2} ∫f²` above the tower top, and
    /// `2^{-n/2} [Σ_{k>n} 2^{n-k} c_k² + 2 c_n Σ_{m<n} c_m]` on it.
    pub fn square_coefficient(&self, n: i64) -> f64 {
        if n > self.last() {
            return 0.0;
        }
        if n < self.first {
            return math::exp2(n as f64 / 2.0) * self.l2_sq();
        }
        let (below, prefix) = self.square_parts();
        let i = (n - self.first) as usize;
        math::exp2(-(n as f64) / 2.0) * (below[i] + 2.0 * self.scaled[i] * prefix[i])
    }

    /// `(S_n, P_n)` for every tower level.
    fn square_parts(&self) -> (Vec<f64>, Vec<f64>) {
        let len = self.scaled.len();
        let mut below = alloc::vec![0.0; len];
        for i in (0..len.saturating_sub(1)).rev() {
            let c = self.scaled[i + 1];
            below[i] = 0.5 * (c * c + below[i + 1]);
        }
        let mut prefix = Vec::with_capacity(len);
        let mut acc = CompensatedSum::new();
        for c in &self.scaled {
            prefix.push(acc.value());
            acc.add(*c);
        }
        (below, prefix)
    }

    /// `Ḣ^s(f²)²` and `‖f²‖²_{L²}` in coefficient space.
    pub fn square_norms(&self, s: f64) -> SquareNorms {
        let (below, prefix) = self.square_parts();
        let mut terms = Vec::with_capacity(self.scaled.len());
        for (i, (n, c)) in self.levels().enumerate() {
            let w = math::exp2((n as f64) * (s - 0.5)) * (below[i] + 2.0 * c * prefix[i]);
            terms.push(w * w);
        }
        // ancestors of I^(first): hull measure 2^{-first}
        let m = self.l2_sq();
        let e = 2.0 * s + 1.0;
        let r = math::exp2(-e);
        let tail = m * m * math::exp2((self.first as f64) * e) * r / (1.0 - r);
        let finite: f64 = terms.iter().rev().copied().plain_sum();
        // f² on the left halves L_m and on I^(last+1)
        let mut l4 = CompensatedSum::new();
        for (i, (n, c)) in self.levels().enumerate() {
            let v = prefix[i] - c;
            l4.add(v * v * v * v * math::exp2(-(n as f64) - 1.0));
        }
        let last = self.levels().next_back();
        if let Some((n, c)) = last {
            let v = prefix[prefix.len() - 1] + c;
            l4.add(v * v * v * v * math::exp2(-(n as f64) - 1.0));
        }
        SquareNorms {
            hs_seminorm_sq: finite + tail,
            l2_sq: l4.value(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareNorms {
    pub hs_seminorm_sq: f64,
    pub l2_sq: f64,
}

/// `(f_N², h_{I^(n)})` for the low-regularity family, summed term by term:
/// `2^{n/2} Σ_{k=0}^{N} 2^{-2αk}` for `n < 0`, and
/// `2^{n/2} Σ_{k=n+1}^{N} 2^{-2αk} + 2·2^{-nα} Σ_{m=0}^{n-1} 2^{-m(α-1/2)}`
/// for `0 ≤ n ≤ N`; zero above `N`.
pub fn lowreg_square_coeff_closed(alpha: f64, n: i64, big_n: u32) -> f64 {
    let big_n = i64::from(big_n);
    if n > big_n {
        return 0.0;
    }
    let a2 = |k: i64| math::exp2(-2.0 * alpha * k as f64);
    let half = math::exp2(n as f64 / 2.0);
    if n < 0 {
        return half * math::sum((0..=big_n).rev().map(a2));
    }
    let below = math::sum((n + 1..=big_n).rev().map(a2));
    let prefix = math::sum((0..n).map(|m| math::exp2(-(m as f64) * (alpha - 0.5))));
    half * below + 2.0 * math::exp2(-(n as f64) * alpha) * prefix
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Explicit series through the step-function product pipeline.
    Step,
    /// Coefficient space on the tower.
    Tower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    #[serde(rename = "N")]
    pub n: u32,
    pub h_s_norm_f: f64,
    pub hs_seminorm_sq_f2: f64,
    #[serde(rename = "log2_N")]
    pub log2_n: f64,
    pub log2_hs_seminorm_sq_f2: f64,
    /// `‖f_N‖_{H^s} − ‖f_{N−1}‖_{H^s}`.
    pub norm_increment: f64,
    pub route: Route,
}

/// Per-level shrink factor of the norm increments between consecutive `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementCheck {
    pub expected_ratio: f64,
    pub ratios: Vec<f64>,
    pub max_relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    #[serde(rename = "N")]
    pub n: u32,
    /// `‖f_M − f_N‖²_{H^s} = ‖f_M‖² − ‖f_N‖²` at the reference level `M`.
    pub tail: f64,
    /// Lower estimate of `Σ_{k>N} k^{-α}`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub reference_n: u32,
    pub tails: Vec<TailBound>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// Growth at the predicted rate and every side check passed.
    Diverges,
    /// Strict growth, but the fitted rate or a side check is off.
    DivergesRateMismatch,
    NoDivergence,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Diverges => "DIVERGES",
            Verdict::DivergesRateMismatch => "DIVERGES_RATE_MISMATCH",
            Verdict::NoDivergence => "NO_DIVERGENCE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub family: Family,
    pub s: f64,
    pub alpha: f64,
    pub rows: Vec<ExperimentRow>,
    /// `"N"` or `"log2_N"`; the fit's y axis is always
    /// `log2_hs_seminorm_sq_f2`.
    pub x_axis: &'static str,
    pub fit: LinearFit,
    pub predicted_slope: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub increments: Option<IncrementCheck>,
    pub convergence: Option<ConvergenceCheck>,
    pub verdict: Verdict,
}

/// Lower estimate of `Σ_{k>N} k^{-α}`: explicit terms up to `N + 2^16`,
/// then `∫_{K+1}^∞ x^{-α} dx`.
pub fn power_tail_lower_bound(alpha: f64, n: u32) -> f64 {
    let k_max = u64::from(n) + (1 << 16);
    let explicit = math::sum(
        (u64::from(n) + 1..=k_max)
            .rev()
            .map(|k| math::powf(k as f64, -alpha)),
    );
    explicit + math::powf((k_max + 1) as f64, 1.0 - alpha) / (alpha - 1.0)
}

pub fn divergence_experiment(
    spec: &CounterexampleSpec,
    levels: &[u32],
) -> Result<ExperimentReport> {
    spec.validate()?;
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    if levels.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("distinct N values", format!("{levels:?}")));
    }
    if levels.len() < 2 {
        return Err(invalid("at least two N values", levels.len()));
    }
    let (lo, hi) = (spec.first_level(), spec.max_level());
    if let Some(bad) = levels.iter().find(|n| **n < lo.max(1) || **n > hi) {
        return Err(invalid(
            if spec.family == Family::LowReg {
                "1 ≤ N ≤ 59"
            } else {
                "1 ≤ N ≤ 4096"
            },
            bad,
        ));
    }
    let s = FractionalParameter::new(spec.s)?;
    let mut rows = Vec::with_capacity(levels.len());
    for &n in &levels {
        let tower = spec.tower(n)?;
        let previous = spec.tower(n - 1).ok();
        let (h_s_norm_f, hs_seminorm_sq_f2, route) = if n <= MAX_STEP_LEVEL {
            let f = tower.to_series()?;
            let sq = square_hs_norm(&f, s)?;
            let semi = sq.report.hs_seminorm;
            (hs_norm(&f, s), semi * semi, Route::Step)
        } else {
            (
                tower.hs_norm(spec.s),
                tower.square_norms(spec.s).hs_seminorm_sq,
                Route::Tower,
            )
        };
        let norm_increment = match previous {
            Some(p) => tower.hs_norm(spec.s) - p.hs_norm(spec.s),
            None => tower.hs_norm(spec.s),
        };
        rows.push(ExperimentRow {
            n,
            h_s_norm_f,
            hs_seminorm_sq_f2,
            log2_n: math::log2(f64::from(n)),
            log2_hs_seminorm_sq_f2: math::log2(hs_seminorm_sq_f2),
            norm_increment,
            route,
        });
    }
    let ys: Vec<f64> = rows.iter().map(|r| r.log2_hs_seminorm_sq_f2).collect();
    let (x_axis, xs): (&'static str, Vec<f64>) = match spec.family {
        Family::LowReg => ("N", rows.iter().map(|r| f64::from(r.n)).collect()),
        Family::Critical => ("log2_N", rows.iter().map(|r| r.log2_n).collect()),
    };
    let fit = ols(&xs, &ys)?;
    let predicted_slope = spec.predicted_rate();
    let relative_error = math::abs(fit.slope / predicted_slope - 1.0);
    let tolerance = match spec.family {
        Family::LowReg => SLOPE_TOLERANCE_LOWREG,
        Family::Critical => POWER_TOLERANCE_CRITICAL,
    };
    let increments = (spec.family == Family::LowReg).then(|| increment_check(spec, &rows));
    let convergence = match spec.family {
        Family::Critical => Some(convergence_check(spec, &levels)?),
        Family::LowReg => None,
    };
    let grows = rows
        .windows(2)
        .all(|w| w[1].hs_seminorm_sq_f2 > w[0].hs_seminorm_sq_f2)
        && fit.slope > 0.0;
    let side_ok =
        increments.as_ref().is_none_or(|c| c.pass) && convergence.as_ref().is_none_or(|c| c.pass);
    let verdict = if !grows {
        Verdict::NoDivergence
    } else if relative_error <= tolerance && side_ok {
        Verdict::Diverges
    } else {
        Verdict::DivergesRateMismatch
    };
    Ok(ExperimentReport {
        family: spec.family,
        s: spec.s,
        alpha: spec.alpha,
        rows,
        x_axis,
        fit,
        predicted_slope,
        relative_error,
        tolerance,
        increments,
        convergence,
        verdict,
    })
}

fn increment_check(spec: &CounterexampleSpec, rows: &[ExperimentRow]) -> IncrementCheck {
    let expected_ratio = math::exp2(2.0 * (spec.s - spec.alpha));
    let ratios: Vec<f64> = rows
        .windows(2)
        .map(|w| {
            let steps = f64::from(w[1].n - w[0].n);
            math::powf(w[1].norm_increment / w[0].norm_increment, 1.0 / steps)
        })
        .collect();
    let max_relative_error = ratios
        .iter()
        .map(|r| math::abs(r / expected_ratio - 1.0))
        .fold(0.0, f64::max);
    IncrementCheck {
        expected_ratio,
        ratios,
        max_relative_error,
        tolerance: INCREMENT_RATIO_TOLERANCE,
        pass: max_relative_error <= INCREMENT_RATIO_TOLERANCE,
    }
}

fn convergence_check(spec: &CounterexampleSpec, levels: &[u32]) -> Result<ConvergenceCheck> {
    let reference_n = MAX_CRITICAL_LEVEL;
    let reference = spec.tower(reference_n)?;
    let total = reference.hs_seminorm_sq(spec.s) + reference.l2_sq();
    let mut tails = Vec::with_capacity(levels.len());
    for &n in levels {
        let t = spec.tower(n)?;
        let tail = total - (t.hs_seminorm_sq(spec.s) + t.l2_sq());
        tails.push(TailBound {
            n,
            tail,
            bound: power_tail_lower_bound(spec.alpha, n),
        });
    }
    let pass = tails.iter().all(|t| t.tail >= 0.0 && t.tail <= t.bound)
        && tails.windows(2).all(|w| w[1].tail <= w[0].tail);
    Ok(ConvergenceCheck {
        reference_n,
        tails,
        pass,
    })
}

/// Column order of [`ExperimentReport::csv_records`].
pub const EXPERIMENT_COLUMNS: [&str; 10] = [
    "N",
    "h_s_norm_f",
    "hs_seminorm_sq_f2",
    "log2_N",
    "log2_hs_seminorm_sq_f2",
    "fitted_slope",
    "slope_ci_low",
    "slope_ci_high",
    "predicted_slope",
    "verdict",
];

impl ExperimentReport {
    /// One row per `N`; the fit columns repeat on every row.
    pub fn csv_records(&self) -> Vec<[alloc::string::String; 10]> {
        use alloc::string::ToString;
        self.rows
            .iter()
            .map(|r| {
                [
                    r.n.to_string(),
                    math::format_float(r.h_s_norm_f),
                    math::format_float(r.hs_seminorm_sq_f2),
                    math::format_float(r.log2_n),
                    math::format_float(r.log2_hs_seminorm_sq_f2),
                    math::format_float(self.fit.slope),
                    math::format_float(self.fit.slope_ci_low),
                    math::format_float(self.fit.slope_ci_high),
                    math::format_float(self.predicted_slope),
                    self.verdict.label().to_string(),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::square;
    use crate::norms::{hs_seminorm_sq, l2_norm};
    use alloc::string::ToString;

    fn p(s: f64) -> FractionalParameter {
        FractionalParameter::new(s).unwrap()
    }

    #[test]
    fn tower_intervals() {
        assert_eq!(
            TowerIndex(0).interval().unwrap(),
            DyadicInterval::new(0, -1).unwrap()
        );
        let i3 = TowerIndex(3).interval().unwrap();
        assert_eq!(i3.measure(), 0.125);
        assert_eq!(i3.left().to_f64(), -0.125);
        for k in -5..10 {
            let outer = TowerIndex(k).interval().unwrap();
            let (_, plus) = outer.children().unwrap();
            for j in k + 1..12 {
                assert!(plus.contains(&TowerIndex(j).interval().unwrap()));
            }
        }
        assert!(TowerIndex(61).interval().is_err());
    }

    #[test]
    fn validation_names_the_constraint() {
        let bad = CounterexampleSpec {
            family: Family::LowReg,
            s: 0.25,
            alpha: 0.5,
        };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("s < α < s/2 + 1/4"), "{msg}");
        let bad = CounterexampleSpec {
            family: Family::LowReg,
            s: 0.6,
            alpha: 0.61,
        };
        assert!(bad
            .validate()
            .unwrap_err()
            .to_string()
            .contains("0 < s < 1/2"));
        let bad = CounterexampleSpec {
            family: Family::Critical,
            s: 0.4,
            alpha: 1.25,
        };
        assert!(bad.validate().unwrap_err().to_string().contains("s = 1/2"));
        let bad = CounterexampleSpec {
            family: Family::Critical,
            s: 0.5,
            alpha: 1.6,
        };
        assert!(bad
            .validate()
            .unwrap_err()
            .to_string()
            .contains("1 < α ≤ 3/2"));
        let ok = CounterexampleSpec {
            family: Family::Critical,
            s: 0.5,
            alpha: 1.5,
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn family_examples() {
        let f = lowreg_function(0.77, 0).unwrap();
        assert_eq!(
            f,
            HaarSeries::single(DyadicInterval::new(0, -1).unwrap(), 1.0)
        );
        let f = lowreg_function(0.3, 2).unwrap();
        for k in 0..=2 {
            let c = f.get(&TowerIndex(k).interval().unwrap());
            assert!((c - 2f64.powf(-0.3 * k as f64)).abs() < 1e-15);
        }
        assert_eq!(f.len(), 3);
        let g = critical_function(1.25, 1).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g.get(&TowerIndex(1).interval().unwrap()) - 2f64.powf(-0.5)).abs() < 1e-16);
        assert!(lowreg_function(0.3, 60).is_err());
        assert!(critical_function(1.25, 60).is_err());
        assert!(TowerSeries::critical(1.25, 4096).is_ok());
        assert!(TowerSeries::critical(1.25, 4097).is_err());
    }

    #[test]
    fn seminorm_closed_forms() {
        for n in [0u32, 1, 5, 20] {
            let f = lowreg_function(0.3, n).unwrap();
            let oracle: f64 = (0..=n)
                .map(|k| 2f64.powf(2.0 * k as f64 * (0.25 - 0.3)))
                .sum();
            assert!((hs_seminorm_sq(&f, p(0.25)) - oracle).abs() < 1e-13);
        }
        for n in [1u32, 7, 30] {
            let f = critical_function(1.25, n).unwrap();
            let semi: f64 = (1..=n).map(|k| (k as f64).powf(-1.25)).sum();
            let l2: f64 = (1..=n)
                .map(|k| 2f64.powf(-(k as f64)) * (k as f64).powf(-1.25))
                .sum();
            assert!((hs_seminorm_sq(&f, p(0.5)) - semi).abs() < 1e-13);
            assert!((l2_norm(&f).powi(2) - l2).abs() < 1e-14);
        }
    }

    #[test]
    fn norm_increments_are_exact() {
        let s = 0.25;
        let alpha = 0.3;
        for n in 0..40u32 {
            let a = TowerSeries::lowreg(alpha, n).unwrap();
            let b = TowerSeries::lowreg(alpha, n + 1).unwrap();
            let inc = b.hs_norm(s).powi(2) - a.hs_norm(s).powi(2);
            let m = f64::from(n + 1);
            let exact = (1.0 + 2f64.powf(2.0 * m * s)) * 2f64.powf(-2.0 * m * alpha);
            assert!((inc - exact).abs() <= 1e-12 * exact.max(1e-3), "n={n}");
        }
    }

    #[test]
    fn closed_coefficients_match_pipeline() {
        for alpha in [0.28, 0.3, 0.35] {
            for big_n in [0u32, 1, 5, 12, 20] {
                let f = lowreg_function(alpha, big_n).unwrap();
                let (_, a) = square(&f).unwrap();
                let tower = TowerSeries::lowreg(alpha, big_n).unwrap();
                for n in -12i64..=12 {
                    let k = TowerIndex(n).interval().unwrap();
                    let pipeline = a.coefficient(&k);
                    let closed = lowreg_square_coeff_closed(alpha, n, big_n);
                    assert!(
                        (pipeline - closed).abs() < 1e-10,
                        "α={alpha} N={big_n} n={n}"
                    );
                    assert!((tower.square_coefficient(n) - pipeline).abs() < 1e-10);
                    if n < 0 {
                        assert!(pipeline > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn negative_level_coefficient_starts_at_k_zero() {
        // the k = 0 term 2^{n/2}·1 belongs to the sum; N = 59 leaves a
        // tail of about 3e-11
        let limit = 2f64.powf(-0.5) / (1.0 - 2f64.powf(-0.6));
        let closed = lowreg_square_coeff_closed(0.3, -1, 59);
        assert!((closed - limit).abs() < 1e-10);
        let f = lowreg_function(0.3, 59).unwrap();
        let (_, a) = square(&f).unwrap();
        let pipeline = a.coefficient(&TowerIndex(-1).interval().unwrap());
        assert!((pipeline - closed).abs() < 1e-12);
        assert_eq!(lowreg_square_coeff_closed(0.3, 0, 0), 0.0);
        assert_eq!(lowreg_square_coeff_closed(0.3, 4, 3), 0.0);
    }

    #[test]
    fn tower_route_matches_step_route() {
        let cases = [
            (TowerSeries::lowreg(0.3, 16).unwrap(), 0.25),
            (TowerSeries::lowreg(0.35, 40).unwrap(), 0.4),
            (TowerSeries::critical(1.25, 30).unwrap(), 0.5),
            (TowerSeries::critical(1.5, 59).unwrap(), 0.5),
        ];
        for (t, s) in cases {
            let f = t.to_series().unwrap();
            let sq = square_hs_norm(&f, p(s)).unwrap();
            let norms = t.square_norms(s);
            let semi = sq.report.hs_seminorm.powi(2);
            assert!((norms.hs_seminorm_sq - semi).abs() <= 1e-12 * semi);
            let l2 = sq.report.l2.powi(2);
            assert!((norms.l2_sq - l2).abs() <= 1e-12 * l2);
            assert!((t.hs_norm(s) - hs_norm(&f, p(s))).abs() <= 1e-13 * t.hs_norm(s));
        }
    }

    #[test]
    fn square_seminorm_increases() {
        let mut prev = 0.0;
        for n in 1..40 {
            let v = TowerSeries::lowreg(0.3, n)
                .unwrap()
                .square_norms(0.25)
                .hs_seminorm_sq;
            assert!(v > prev);
            prev = v;
        }
        let mut prev = 0.0;
        for n in (1..2000).step_by(37) {
            let v = TowerSeries::critical(1.25, n)
                .unwrap()
                .square_norms(0.5)
                .hs_seminorm_sq;
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn power_tail_bound_brackets_the_sum() {
        // Σ_{k>N} k^{-2} = ψ'(N+1); at N = 0 it is π²/6
        let b = power_tail_lower_bound(2.0, 0);
        let exact = core::f64::consts::PI.powi(2) / 6.0;
        assert!(b <= exact && exact - b < 1e-9);
    }

    #[test]
    fn experiment_rejects_bad_input() {
        let spec = CounterexampleSpec {
            family: Family::LowReg,
            s: 0.25,
            alpha: 0.5,
        };
        let msg = divergence_experiment(&spec, &[8, 12])
            .unwrap_err()
            .to_string();
        assert!(msg.contains("s < α < s/2 + 1/4"));
        let spec = CounterexampleSpec {
            family: Family::LowReg,
            s: 0.25,
            alpha: 0.3,
        };
        assert!(divergence_experiment(&spec, &[8]).is_err());
        assert!(divergence_experiment(&spec, &[8, 8]).is_err());
        assert!(divergence_experiment(&spec, &[8, 60]).is_err());
    }

    #[test]
    fn experiment_rows_are_consistent() {
        let spec = CounterexampleSpec {
            family: Family::LowReg,
            s: 0.25,
            alpha: 0.3,
        };
        let r = divergence_experiment(&spec, &[24, 8, 16]).unwrap();
        let ns: Vec<u32> = r.rows.iter().map(|r| r.n).collect();
        assert_eq!(ns, [8, 16, 24]);
        assert!(r.rows.iter().all(|r| r.route == Route::Step));
        assert!(r.verdict != Verdict::NoDivergence);
        let inc = r.increments.as_ref().unwrap();
        assert_eq!(inc.ratios.len(), 2);
    }
}
