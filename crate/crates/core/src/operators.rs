//! Dyadic fractional derivative `D^s` and fractional integral `T_s`.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicInterval;
use crate::error::{invalid, Result};
use crate::math::{self, measure_pow};
use crate::norms::linf_norm;
use crate::series::{HaarSeries, StepFunction};

/// Smoothness parameter `0 < s < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalParameter(f64);

impl FractionalParameter {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s < 1.0 {
            Ok(Self(s))
        } else {
            Err(invalid("0 < s < 1", s))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Sobolev exponent `q = 2 / (1 - 2s)`, only for `s < 1/2`.
    pub fn q(self) -> Option<f64> {
        (self.0 < 0.5).then(|| 2.0 / (1.0 - 2.0 * self.0))
    }

    /// `2^s - 1`.
    pub fn gap(self) -> f64 {
        math::exp2(self.0) - 1.0
    }
}

impl TryFrom<f64> for FractionalParameter {
    type Error = crate::Error;
    fn try_from(s: f64) -> Result<Self> {
        Self::new(s)
    }
}

impl From<FractionalParameter> for f64 {
    fn from(s: FractionalParameter) -> f64 {
        s.0
    }
}

/// `D^s f = Σ |I|^{-s} (f, h_I) h_I`.
pub fn frac_derivative(f: &HaarSeries, s: FractionalParameter) -> HaarSeries {
    f.map(|i, c| measure_pow(i.scale(), -s.0) * c)
}

/// Coefficient-wise inverse of [`frac_derivative`].
pub fn inverse_frac_derivative(f: &HaarSeries, s: FractionalParameter) -> HaarSeries {
    f.map(|i, c| measure_pow(i.scale(), s.0) * c)
}

/// `T_s g = (2^s - 1)^{-1} Σ |J|^s (g, h_J) h_J` on the finite Haar span.
pub fn t_s_closed(g: &HaarSeries, s: FractionalParameter) -> HaarSeries {
    let gap = s.gap();
    g.map(|i, c| measure_pow(i.scale(), s.0) * c / gap)
}

/// The defining series `Σ_I |I|^s ⟨g⟩_I 1_I`, restricted to intervals at
/// most `depth` levels below the finest stored interval.
///
/// Below a point where no stored Haar function changes sign the averages are
/// constant, so each such cell collapses to a finite geometric sum.
pub fn t_s_truncated(g: &HaarSeries, s: FractionalParameter, depth: u32) -> Result<StepFunction> {
    let (Some(finest), Some(top)) = (g.min_scale(), g.max_scale()) else {
        return Ok(StepFunction::new());
    };
    let cutoff = i64::from(finest) - i64::from(depth);
    let mut marked = BTreeSet::new();
    for i in g.intervals() {
        let mut cur = i;
        while marked.insert(cur) && cur.scale() < top {
            cur = cur.parent()?;
        }
    }
    let ratio = math::exp2(-s.0);
    let walk = Walk {
        g,
        s: s.0,
        ratio,
        cutoff,
        marked: &marked,
    };
    let mut pieces = Vec::new();
    for root in marked.iter().filter(|i| i.scale() == top) {
        walk.visit(*root, 0.0, 0.0, &mut pieces)?;
    }
    StepFunction::from_pieces(pieces)
}

struct Walk<'a> {
    g: &'a HaarSeries,
    s: f64,
    ratio: f64,
    cutoff: i64,
    marked: &'a BTreeSet<DyadicInterval>,
}

impl Walk<'_> {
    fn visit(
        &self,
        node: DyadicInterval,
        acc: f64,
        avg: f64,
        out: &mut Vec<(DyadicInterval, f64)>,
    ) -> Result<()> {
        let weight = measure_pow(node.scale(), self.s);
        if !self.marked.contains(&node) {
            // levels node.scale down to cutoff, all with average `avg`
            let levels = i64::from(node.scale()) - self.cutoff + 1;
            let value = if levels <= 0 || avg == 0.0 {
                acc
            } else {
                let tail = math::powf(self.ratio, levels as f64);
                acc + avg * weight * (1.0 - tail) / (1.0 - self.ratio)
            };
            if value != 0.0 {
                out.push((node, value));
            }
            return Ok(());
        }
        let acc = acc + weight * avg;
        let step = self.g.get(&node) * node.haar_amplitude();
        let (left, right) = node.children()?;
        self.visit(left, acc, avg - step, out)?;
        self.visit(right, acc, avg + step, out)
    }
}

/// `sup |(2^s - 1) T_s D^s f - f|`.
pub fn reconstruction_residual(f: &HaarSeries, s: FractionalParameter) -> Result<f64> {
    let rebuilt = t_s_closed(&frac_derivative(f, s), s).scaled(s.gap());
    Ok(linf_norm(&rebuilt.sub(f).to_step()?))
}
