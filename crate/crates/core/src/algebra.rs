//! Pointwise products and the Haar coefficients of squares.

use alloc::collections::BTreeSet;
use alloc::string::ToString;

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicInterval;
use crate::error::{invalid, Error, Result};
use crate::math::{measure_pow, PlainSum};
use crate::norms::{hs_seminorm_sq, NormReport};
use crate::operators::FractionalParameter;
use crate::series::{HaarSeries, StepAnalysis, StepFunction};

/// Agreement required between the formula and the product pipeline.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-10;

/// Ancestor levels summed in the validation copy of each tail.
pub const REPORT_TAIL_DEPTH: u32 = 64;

pub fn multiply(g1: &StepFunction, g2: &StepFunction) -> Result<StepFunction> {
    g1.multiply(g2)
}

/// `(f², h_K) = Σ_{I⊊K} (f, h_I)² h_K(I) + 2 (f, h_K) ⟨f⟩_K`.
pub fn square_haar_coefficient(f: &HaarSeries, k: &DyadicInterval) -> f64 {
    let descendants: f64 = f
        .iter()
        .filter(|(i, _)| i.scale() < k.scale() && k.contains(i))
        .map(|(i, c)| c * c * k.haar_sign_on(&i) * k.haar_amplitude())
        .plain_sum();
    let own = f.get(k);
    if own == 0.0 {
        descendants
    } else {
        descendants + 2.0 * own * f.average(k)
    }
}

/// The two sums of the square-coefficient formula, over every interval
/// inside a tree hull of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDecomposition {
    /// `Σ_{I⊊K} (f, h_I)² h_K(I)`.
    pub square_series_part: HaarSeries,
    /// `2 (f, h_K) ⟨f⟩_K`.
    pub average_part: HaarSeries,
    /// `∫ f²` over each tree, indexed by [`crate::Tree::slot`].
    pub tree_integrals: [f64; 2],
}

impl ProductDecomposition {
    pub fn of(f: &HaarSeries) -> Result<Self> {
        let hulls = f.hulls()?;
        let mut square_series_part = HaarSeries::new();
        let mut average_part = HaarSeries::new();
        let mut tree_integrals = [0.0; 2];
        for (i, c) in f.iter() {
            let slot = i.tree().slot();
            let hull = hulls[slot].expect("stored interval has a hull");
            let c2 = c * c;
            tree_integrals[slot] += c2;
            let mut cur = i;
            while cur != hull {
                let k = cur.parent()?;
                square_series_part.accumulate(k, c2 * k.haar_sign_on(&i) * k.haar_amplitude());
                cur = k;
            }
            average_part.insert(i, 2.0 * c * f.average(&i));
        }
        Ok(Self {
            square_series_part,
            average_part,
            tree_integrals,
        })
    }

    pub fn coefficient(&self, k: &DyadicInterval) -> f64 {
        self.square_series_part.get(k) + self.average_part.get(k)
    }

    pub fn intervals(&self) -> BTreeSet<DyadicInterval> {
        self.square_series_part
            .intervals()
            .chain(self.average_part.intervals())
            .collect()
    }
}

/// `f²` as a step function together with its Haar data.
pub fn square(f: &HaarSeries) -> Result<(StepFunction, StepAnalysis)> {
    let g = f.to_step()?;
    let sq = g.multiply(&g)?;
    let a = sq.analyze()?;
    Ok((sq, a))
}

/// Largest `|formula - pipeline| / (1 + |pipeline|)` over every interval
/// carrying a nonzero coefficient on either route.
pub fn square_coefficient_gap(
    f: &HaarSeries,
    a: &StepAnalysis,
) -> Result<(f64, Option<DyadicInterval>)> {
    let d = ProductDecomposition::of(f)?;
    let mut keys = d.intervals();
    keys.extend(a.series.intervals());
    let mut worst = (0.0, None);
    for k in keys {
        let formula = d.coefficient(&k);
        let pipeline = a.coefficient(&k);
        let gap = (formula - pipeline).abs() / (1.0 + pipeline.abs());
        if gap > worst.0 {
            worst = (gap, Some(k));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareNorm {
    /// `‖f²‖²_{H^s}`.
    pub hs_norm_sq: f64,
    pub report: NormReport,
    /// Worst relative disagreement between the two coefficient routes.
    pub coefficient_gap: f64,
}

/// `‖f²‖²_{H^s}` via the product pipeline, cross-checked coefficient by
/// coefficient against the square formula.
pub fn square_hs_norm(f: &HaarSeries, s: FractionalParameter) -> Result<SquareNorm> {
    let (sq, a) = square(f)?;
    let (gap, at) = square_coefficient_gap(f, &a)?;
    if gap > COEFFICIENT_TOLERANCE {
        let k = at.expect("a positive gap has a location");
        return Err(Error::CoefficientMismatch {
            at: k.to_string(),
            pipeline: a.coefficient(&k),
            formula: square_haar_coefficient(f, &k),
        });
    }
    let report = NormReport::of_analysis(&sq, &a, s, REPORT_TAIL_DEPTH)?;
    Ok(SquareNorm {
        hs_norm_sq: report.hs_norm * report.hs_norm,
        report,
        coefficient_gap: gap,
    })
}

/// Both sides of the local square estimate on `I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEstimate {
    /// `Σ_{J⊆I} |J|^{-2s} (f², h_J)²`.
    pub lhs: f64,
    /// `|I|^{2s-1} ‖f‖²_{Ḣ^s} Σ_{J⊆I} |J|^{-2s} (f, h_J)²`.
    pub rhs_factor: f64,
}

impl LocalEstimate {
    pub fn ratio(&self) -> Option<f64> {
        (self.rhs_factor > 0.0).then(|| self.lhs / self.rhs_factor)
    }
}

pub fn local_square_estimate(
    f: &HaarSeries,
    s: FractionalParameter,
    interval: &DyadicInterval,
) -> Result<LocalEstimate> {
    if !(s.value() > 0.5) {
        return Err(invalid("1/2 < s < 1", s.value()));
    }
    let (_, a) = square(f)?;
    Ok(local_estimate_from(f, &a, s, interval))
}

pub(crate) fn local_estimate_from(
    f: &HaarSeries,
    a: &StepAnalysis,
    s: FractionalParameter,
    interval: &DyadicInterval,
) -> LocalEstimate {
    let w = -2.0 * s.value();
    let mut lhs: f64 = a
        .series
        .iter()
        .filter(|(j, _)| interval.contains(j))
        .map(|(j, c)| c * c * measure_pow(j.scale(), w))
        .plain_sum();
    // ancestors of the square's hull that still lie inside I
    let t = a.tree(interval.tree());
    if let Some(hull) = t.hull {
        if interval.scale() > hull.scale() && interval.contains(&hull) {
            for j in 1..=(interval.scale() - hull.scale()) as u32 {
                let c = t.tail_coefficient(j);
                lhs += c * c * measure_pow(hull.scale() + j as i32, w);
            }
        }
    }
    let local: f64 = f
        .iter()
        .filter(|(j, _)| interval.contains(j))
        .map(|(j, c)| c * c * measure_pow(j.scale(), w))
        .plain_sum();
    let rhs_factor =
        measure_pow(interval.scale(), 2.0 * s.value() - 1.0) * hs_seminorm_sq(f, s) * local;
    LocalEstimate { lhs, rhs_factor }
}

/// Largest gap between `(fg, h_K)` from the product pipeline and
/// `½[((f+g)², h_K) - (f², h_K) - (g², h_K)]`, relative to `1 + |(fg, h_K)|`.
pub fn polarization_gap(f: &HaarSeries, g: &HaarSeries) -> Result<f64> {
    let (sf, sg) = (f.to_step()?, g.to_step()?);
    let fg = sf.multiply(&sg)?.analyze()?;
    let (_, sum_sq) = square(&f.add(g))?;
    let (_, f_sq) = square(f)?;
    let (_, g_sq) = square(g)?;
    let mut keys: BTreeSet<DyadicInterval> = fg.series.intervals().collect();
    for a in [&sum_sq, &f_sq, &g_sq] {
        keys.extend(a.series.intervals());
        for t in &a.trees {
            // a few levels of each closed-form tail
            if let Some(h) = t.hull {
                let mut cur = h;
                for _ in 0..4 {
                    match cur.parent() {
                        Ok(p) => {
                            keys.insert(p);
                            cur = p;
                        }
                        Err(_) => break,
                    }
                }
            }
        }
    }
    let mut worst = 0.0f64;
    for k in keys {
        let direct = fg.coefficient(&k);
        let polar = 0.5 * (sum_sq.coefficient(&k) - f_sq.coefficient(&k) - g_sq.coefficient(&k));
        worst = worst.max((direct - polar).abs() / (1.0 + direct.abs()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{l2_norm, l2_norm_of_step};
    use core::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
    use proptest::prelude::*;

    fn iv(k: i32, n: i64) -> DyadicInterval {
        DyadicInterval::new(k, n).unwrap()
    }

    fn p(s: f64) -> FractionalParameter {
        FractionalParameter::new(s).unwrap()
    }

    fn series(terms: &[(i32, i64, f64)]) -> HaarSeries {
        terms.iter().map(|&(k, n, v)| (iv(k, n), v)).collect()
    }

    /// `∫ f² h_K` by integrating the squared step function over the halves.
    fn integrated(f: &HaarSeries, k: &DyadicInterval) -> f64 {
        let g = f.to_step().unwrap();
        let sq = g.multiply(&g).unwrap();
        let (l, r) = k.children().unwrap();
        k.haar_amplitude() * (sq.integral_over(&r) - sq.integral_over(&l))
    }

    #[test]
    fn multiply_examples() {
        let h = series(&[(0, 0, 1.0)]).to_step().unwrap();
        let hh = multiply(&h, &h).unwrap();
        assert_eq!(
            hh,
            StepFunction::from_pieces([(iv(-1, 0), 1.0), (iv(-1, 1), 1.0)]).unwrap()
        );
        assert!(hh
            .sub(&StepFunction::indicator(DyadicInterval::UNIT))
            .unwrap()
            .is_empty());
        assert!(multiply(&h, &StepFunction::new()).unwrap().is_empty());
        assert!(multiply(&h, &StepFunction::indicator(iv(0, -3)))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn square_coefficient_examples() {
        let f = series(&[(0, 0, 1.0)]);
        assert!((square_haar_coefficient(&f, &iv(1, 0)) + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((integrated(&f, &iv(1, 0)) + FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(square_haar_coefficient(&f, &iv(0, 0)), 0.0);
        assert_eq!(integrated(&f, &iv(0, 0)), 0.0);
        let f = series(&[(1, 0, 1.0), (0, 0, 1.0)]);
        assert!((square_haar_coefficient(&f, &iv(0, 0)) + SQRT_2).abs() < 1e-15);
        assert!((integrated(&f, &iv(0, 0)) + SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn square_norm_of_unit_haar() {
        for s in [0.25, 0.5, 0.75] {
            let r = square_hs_norm(&series(&[(0, 0, 1.0)]), p(s)).unwrap();
            let semi = 1.0 / (2f64.powf(2.0 * s + 1.0) - 1.0);
            assert!((r.report.hs_seminorm.powi(2) - semi).abs() < 1e-14);
            assert_eq!(r.report.l2, 1.0);
            assert!((r.hs_norm_sq - (1.0 + semi)).abs() < 1e-14);
        }
        let r = square_hs_norm(&HaarSeries::new(), p(0.6)).unwrap();
        assert_eq!(r.hs_norm_sq, 0.0);
    }

    #[test]
    fn local_estimate_examples() {
        assert!(local_square_estimate(&HaarSeries::new(), p(0.75), &DyadicInterval::UNIT).is_ok());
        let z = local_square_estimate(&HaarSeries::new(), p(0.75), &DyadicInterval::UNIT).unwrap();
        assert_eq!((z.lhs, z.rhs_factor), (0.0, 0.0));
        assert!(local_square_estimate(&HaarSeries::new(), p(0.5), &DyadicInterval::UNIT).is_err());
        assert!(local_square_estimate(&HaarSeries::new(), p(0.3), &DyadicInterval::UNIT).is_err());
        for i in [iv(0, 0), iv(-3, 5), iv(2, -1)] {
            let f = HaarSeries::single(i, 1.0);
            let e = local_square_estimate(&f, p(0.75), &i).unwrap();
            let m = i.measure();
            let expected = m.powf(0.5) * m.powf(-1.5) * m.powf(-1.5);
            assert!((e.rhs_factor - expected).abs() <= 1e-14 * expected);
            // f² = |I|^{-1} 1_I has no coefficients inside I
            assert_eq!(e.lhs, 0.0);
        }
    }

    #[test]
    fn local_lhs_matches_integration() {
        let f = series(&[(0, 0, 1.0), (-1, 1, 0.5), (-3, 2, -0.7)]);
        let i = iv(2, 0);
        let e = local_square_estimate(&f, p(0.6), &i).unwrap();
        let mut oracle = 0.0;
        for k in -6..=2 {
            for n in 0..(1i64 << (2 - k)) {
                let j = iv(k, n);
                oracle += j.measure().powf(-1.2) * integrated(&f, &j).powi(2);
            }
        }
        assert!((e.lhs - oracle).abs() <= 1e-12 * oracle);
    }

    fn random_series() -> impl Strategy<Value = HaarSeries> {
        proptest::collection::vec((-10i32..=6, -40i64..40, -1.0f64..1.0), 0..12)
            .prop_map(|t| t.into_iter().map(|(k, n, v)| (iv(k, n), v)).collect())
    }

    proptest! {
        #[test]
        fn decomposition_matches_pipeline(f in random_series()) {
            let (_, a) = square(&f).unwrap();
            let (gap, _) = square_coefficient_gap(&f, &a).unwrap();
            prop_assert!(gap <= COEFFICIENT_TOLERANCE);
            for k in a.series.intervals() {
                let g = square_haar_coefficient(&f, &k);
                prop_assert!((g - a.coefficient(&k)).abs() <= 1e-10 * (1.0 + g.abs()));
            }
        }

        #[test]
        fn polarization_holds(f in random_series(), g in random_series()) {
            prop_assert!(polarization_gap(&f, &g).unwrap() <= 1e-10);
        }

        #[test]
        fn square_integral_is_l2(f in random_series()) {
            let (sq, a) = square(&f).unwrap();
            let l2 = l2_norm(&f);
            prop_assert!((sq.integral() - l2 * l2).abs() <= 1e-12 * (l2 * l2).max(1e-300));
            let total = a.trees[0].integral + a.trees[1].integral;
            prop_assert!((total - l2 * l2).abs() <= 1e-12 * (l2 * l2).max(1e-300));
            let d = ProductDecomposition::of(&f).unwrap();
            prop_assert!((d.tree_integrals[0] + d.tree_integrals[1] - l2 * l2).abs() <= 1e-12 * (l2 * l2).max(1e-300));
            let l2_sq = l2_norm_of_step(&f.to_step().unwrap());
            prop_assert!((l2_sq - l2).abs() <= 1e-12 * l2.max(1e-300));
        }

        #[test]
        fn square_support_inside_support(f in random_series(), x in -50.0f64..50.0) {
            let (sq, _) = square(&f).unwrap();
            if f.to_step().unwrap().value_at(x) == 0.0 {
                prop_assert_eq!(sq.value_at(x), 0.0);
            }
        }
    }
}
