//! L², Ḣ^s, H^s, L^q, L^∞ and dyadic BMO norms.
//!
//! Sums of nonnegative terms are plain left-to-right sums in ascending
//! measure. Rounding is monotone, so an inequality that holds term by term
//! between two such sums also holds between their computed values; the
//! BMO embedding check relies on this.

use alloc::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicInterval;
use crate::error::{invalid, Result};
use crate::math::{self, measure_pow, PlainSum};
use crate::operators::FractionalParameter;
use crate::series::{HaarSeries, StepAnalysis, StepFunction};

/// `‖f‖_{L²}` by Parseval.
pub fn l2_norm(f: &HaarSeries) -> f64 {
    math::sqrt(f.iter().map(|(_, c)| c * c).plain_sum())
}

/// `‖g‖_{L²}` by direct piecewise integration.
pub fn l2_norm_of_step(g: &StepFunction) -> f64 {
    math::sqrt(
        g.pieces()
            .iter()
            .map(|(p, v)| v * v * p.measure())
            .plain_sum(),
    )
}

/// `Σ |I|^{-2s} (f, h_I)²`.
pub fn hs_seminorm_sq(f: &HaarSeries, s: FractionalParameter) -> f64 {
    let w = -2.0 * s.value();
    f.iter()
        .map(|(i, c)| c * c * measure_pow(i.scale(), w))
        .plain_sum()
}

/// `‖f‖_{Ḣ^s} = ‖D^s f‖_{L²}`.
pub fn hs_seminorm(f: &HaarSeries, s: FractionalParameter) -> f64 {
    math::sqrt(hs_seminorm_sq(f, s))
}

/// `‖f‖_{H^s} = (‖f‖²_{Ḣ^s} + ‖f‖²_{L²})^{1/2}`.
pub fn hs_norm(f: &HaarSeries, s: FractionalParameter) -> f64 {
    let l2 = l2_norm(f);
    math::sqrt(hs_seminorm_sq(f, s) + l2 * l2)
}

/// Ḣ^s seminorm² of a step function, split into the coefficients inside
/// the tree hulls and the closed-form sum over all strict ancestors of the
/// hulls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSeminorm {
    pub finite_part: f64,
    pub tail_closed_form: f64,
    /// The ancestor sum truncated after `depth` levels, for validation.
    pub tail_truncated: f64,
    pub depth: u32,
}

impl StepSeminorm {
    pub fn total(&self) -> f64 {
        self.finite_part + self.tail_closed_form
    }
}

pub fn hs_seminorm_sq_of_step(
    g: &StepFunction,
    s: FractionalParameter,
    depth: u32,
) -> Result<StepSeminorm> {
    Ok(seminorm_sq_of_analysis(&g.analyze()?, s, depth))
}

pub fn seminorm_sq_of_analysis(
    a: &StepAnalysis,
    s: FractionalParameter,
    depth: u32,
) -> StepSeminorm {
    let finite_part = hs_seminorm_sq(&a.series, s);
    let e = 2.0 * s.value() + 1.0;
    let r = math::exp2(-e);
    let mut tail_closed_form = 0.0;
    let mut tail_truncated = 0.0;
    for t in &a.trees {
        let Some(hull) = t.hull else { continue };
        let m2 = t.integral * t.integral;
        if m2 == 0.0 {
            continue;
        }
        tail_closed_form += m2 * measure_pow(hull.scale(), -e) * r / (1.0 - r);
        tail_truncated += (1..=depth)
            .rev()
            .map(|j| {
                let c = t.tail_coefficient(j);
                c * c * measure_pow(hull.scale() + j as i32, -2.0 * s.value())
            })
            .plain_sum();
    }
    StepSeminorm {
        finite_part,
        tail_closed_form,
        tail_truncated,
        depth,
    }
}

/// Both sides of the small-interval norm equivalence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEquivalence {
    /// `‖f‖²_{L²} + Σ_{|I|<1} |I|^{-2s} (f, h_I)²`.
    pub small_scale_sq: f64,
    pub hs_norm_sq: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

pub fn truncated_hs_bound(f: &HaarSeries, s: FractionalParameter) -> NormEquivalence {
    let w = -2.0 * s.value();
    let l2_sq: f64 = f.iter().map(|(_, c)| c * c).plain_sum();
    let small: f64 = f
        .iter()
        .filter(|(i, _)| i.scale() < 0)
        .map(|(i, c)| c * c * measure_pow(i.scale(), w))
        .plain_sum();
    let small_scale_sq = l2_sq + small;
    let hs_norm_sq = hs_seminorm_sq(f, s) + l2_sq;
    NormEquivalence {
        small_scale_sq,
        hs_norm_sq,
        lower_ok: 0.5 * hs_norm_sq <= small_scale_sq,
        upper_ok: small_scale_sq <= hs_norm_sq,
    }
}

/// `(Σ |v|^q |P|)^{1/q}` over the pieces, for `q ≥ 1`.
pub fn lq_norm(g: &StepFunction, q: f64) -> Result<f64> {
    if !(q >= 1.0) || q.is_infinite() {
        return Err(invalid("q >= 1", q));
    }
    let top = linf_norm(g);
    if top == 0.0 {
        return Ok(0.0);
    }
    let mut acc = math::CompensatedSum::new();
    for (p, v) in g.pieces() {
        acc.add(math::powf(math::abs(*v) / top, q) * p.measure());
    }
    Ok(top * math::powf(acc.value(), 1.0 / q))
}

/// Largest absolute piece value.
pub fn linf_norm(g: &StepFunction) -> f64 {
    g.pieces()
        .iter()
        .map(|(_, v)| math::abs(*v))
        .fold(0.0, f64::max)
}

/// `sup_I ((1/|I|) Σ_{J⊆I} (f, h_J)²)^{1/2}`.
///
/// Candidates are the stored intervals and their ancestors up to their
/// tree hull; above the hull the inner sum is fixed while `1/|I|` halves.
pub fn bmo_norm(f: &HaarSeries) -> Result<f64> {
    let hulls = f.hulls()?;
    let mut energy: BTreeMap<DyadicInterval, f64> = BTreeMap::new();
    for (j, c) in f.iter() {
        let hull = hulls[j.tree().slot()].expect("tree of a stored interval has a hull");
        let c2 = c * c;
        let mut cur = j;
        loop {
            *energy.entry(cur).or_insert(0.0) += c2 * measure_pow(cur.scale(), -1.0);
            if cur == hull {
                break;
            }
            cur = cur.parent()?;
        }
    }
    Ok(math::sqrt(energy.values().copied().fold(0.0, f64::max)))
}

/// BMO functional of a step function, including the intervals above each
/// tree hull, whose coefficients are `± |K|^{-1/2} M`.
pub fn bmo_norm_of_step(g: &StepFunction) -> Result<f64> {
    bmo_of_analysis(&g.analyze()?)
}

fn bmo_of_analysis(a: &StepAnalysis) -> Result<f64> {
    let mut best = bmo_norm(&a.series)?;
    best *= best;
    for t in &a.trees {
        let Some(hull) = t.hull else { continue };
        let inside: f64 = a
            .series
            .iter()
            .filter(|(i, _)| hull.contains(i))
            .map(|(_, c)| c * c)
            .plain_sum();
        best = best.max(inside * measure_pow(hull.scale(), -1.0));
        let mut energy = inside;
        let mut prev = f64::NEG_INFINITY;
        for j in 1..=(2 * (crate::K_MAX - crate::K_MIN) as u32) {
            let c = t.tail_coefficient(j);
            energy += c * c;
            let value = energy * measure_pow(hull.scale() + j as i32, -1.0);
            best = best.max(value);
            // increments shrink once the quotient starts to fall
            if value < prev {
                break;
            }
            prev = value;
        }
    }
    Ok(math::sqrt(best))
}

/// Sizes of the truncated and closed-form pieces that went into a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Ancestor levels summed for the validation copy of the tail.
    pub depth: u32,
    pub finite_part: f64,
    pub tail_closed_form: f64,
    pub tail_truncated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub s: f64,
    pub l2: f64,
    pub hs_seminorm: f64,
    pub hs_norm: f64,
    pub linf: f64,
    /// `L^q` norm at `q = 2/(1-2s)`, only for `s < 1/2`.
    pub lq: Option<f64>,
    pub bmo: f64,
    pub truncation: Truncation,
}

/// CSV header matching [`NormReport::csv_record`].
pub const NORM_REPORT_COLUMNS: [&str; 11] = [
    "s",
    "l2",
    "hs_seminorm",
    "hs_norm",
    "linf",
    "lq",
    "bmo",
    "depth",
    "finite_part",
    "tail_closed_form",
    "tail_truncated",
];

impl NormReport {
    pub fn of_series(f: &HaarSeries, s: FractionalParameter) -> Result<Self> {
        let step = f.to_step()?;
        let l2 = l2_norm(f);
        let semi_sq = hs_seminorm_sq(f, s);
        Ok(Self {
            s: s.value(),
            l2,
            hs_seminorm: math::sqrt(semi_sq),
            hs_norm: math::sqrt(semi_sq + l2 * l2),
            linf: linf_norm(&step),
            lq: s.q().map(|q| lq_norm(&step, q)).transpose()?,
            bmo: bmo_norm(f)?,
            truncation: Truncation {
                depth: 0,
                finite_part: semi_sq,
                tail_closed_form: 0.0,
                tail_truncated: 0.0,
            },
        })
    }

    pub fn of_step(g: &StepFunction, s: FractionalParameter, depth: u32) -> Result<Self> {
        Self::of_analysis(g, &g.analyze()?, s, depth)
    }

    /// Report for `g` reusing its [`StepFunction::analyze`] output.
    pub fn of_analysis(
        g: &StepFunction,
        a: &StepAnalysis,
        s: FractionalParameter,
        depth: u32,
    ) -> Result<Self> {
        let semi = seminorm_sq_of_analysis(a, s, depth);
        let l2 = l2_norm_of_step(g);
        Ok(Self {
            s: s.value(),
            l2,
            hs_seminorm: math::sqrt(semi.total()),
            hs_norm: math::sqrt(semi.total() + l2 * l2),
            linf: linf_norm(g),
            lq: s.q().map(|q| lq_norm(g, q)).transpose()?,
            bmo: bmo_of_analysis(a)?,
            truncation: Truncation {
                depth,
                finite_part: semi.finite_part,
                tail_closed_form: semi.tail_closed_form,
                tail_truncated: semi.tail_truncated,
            },
        })
    }

    /// One CSV row, in [`NORM_REPORT_COLUMNS`] order. A missing `lq` is an
    /// empty field.
    pub fn csv_record(&self) -> [alloc::string::String; 11] {
        use alloc::string::ToString;
        let t = &self.truncation;
        [
            math::format_float(self.s),
            math::format_float(self.l2),
            math::format_float(self.hs_seminorm),
            math::format_float(self.hs_norm),
            math::format_float(self.linf),
            self.lq.map(math::format_float).unwrap_or_default(),
            math::format_float(self.bmo),
            t.depth.to_string(),
            math::format_float(t.finite_part),
            math::format_float(t.tail_closed_form),
            math::format_float(t.tail_truncated),
        ]
    }
}
