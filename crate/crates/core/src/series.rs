//! Finite Haar expansions, dyadic step functions and the conversions between
//! them.
//!
//! A [`HaarSeries`] is a finite linear combination of Haar functions and is
//! therefore mean-zero on each tree of the grid. Products and indicators
//! leave that span; they are held as [`StepFunction`]s, and [`analyze`]
//! recovers their Haar data as the finitely many coefficients inside each
//! tree's hull plus the tree integral, which determines every coefficient
//! above the hull in closed form.
//!
//! [`analyze`]: StepFunction::analyze

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dyadic::{DyadicInterval, DyadicPoint, Tree};
use crate::error::{invalid, Error, Result};
use crate::math::{self, measure_pow, CompensatedSum, PlainSum};

/// Finite map from dyadic intervals to Haar coefficients `(f, h_I)`.
///
/// Zero coefficients are never stored. Iteration is in ascending measure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HaarSeries {
    coefficients: BTreeMap<DyadicInterval, f64>,
}

impl HaarSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single Haar function `value · h_I`.
    pub fn single(interval: DyadicInterval, value: f64) -> Self {
        let mut s = Self::new();
        s.insert(interval, value);
        s
    }

    /// Sets a coefficient, removing it if `value` is zero.
    pub fn insert(&mut self, interval: DyadicInterval, value: f64) {
        if value == 0.0 {
            self.coefficients.remove(&interval);
        } else {
            self.coefficients.insert(interval, value);
        }
    }

    /// Adds to a coefficient.
    pub fn accumulate(&mut self, interval: DyadicInterval, value: f64) {
        let v = self.get(&interval) + value;
        self.insert(interval, v);
    }

    pub fn get(&self, interval: &DyadicInterval) -> f64 {
        self.coefficients.get(interval).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (DyadicInterval, f64)> + '_ {
        self.coefficients.iter().map(|(i, v)| (*i, *v))
    }

    pub fn intervals(&self) -> impl Iterator<Item = DyadicInterval> + '_ {
        self.coefficients.keys().copied()
    }

    pub fn min_scale(&self) -> Option<i32> {
        self.coefficients.keys().next().map(|i| i.scale())
    }

    pub fn max_scale(&self) -> Option<i32> {
        self.coefficients.keys().next_back().map(|i| i.scale())
    }

    /// Coefficient-wise map; zeros produced by `f` are dropped.
    pub fn map(&self, mut f: impl FnMut(DyadicInterval, f64) -> f64) -> Self {
        let mut out = Self::new();
        for (i, v) in self.iter() {
            out.insert(i, f(i, v));
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|_, v| c * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, v) in other.iter() {
            out.accumulate(i, v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// `f(x) = Σ (f, h_I) h_I(x)`.
    pub fn evaluate(&self, x: f64) -> f64 {
        math::sum(self.iter().map(|(i, v)| v * i.haar_value_at(x)))
    }

    /// Smallest dyadic interval containing every stored interval of each
    /// tree, indexed by [`Tree::slot`].
    pub fn hulls(&self) -> Result<[Option<DyadicInterval>; 2]> {
        let mut hulls: [Option<DyadicInterval>; 2] = [None, None];
        for i in self.intervals() {
            let slot = &mut hulls[i.tree().slot()];
            *slot = Some(match *slot {
                None => i,
                Some(h) => h
                    .common_ancestor(&i)?
                    .expect("intervals of one tree share ancestors"),
            });
        }
        Ok(hulls)
    }

    /// `⟨f⟩_I = Σ_{J ⊋ I} (f, h_J) h_J(I)`, over stored strict ancestors.
    pub fn average(&self, interval: &DyadicInterval) -> f64 {
        let Some(top) = self.max_scale() else {
            return 0.0;
        };
        let mut acc = CompensatedSum::new();
        let mut j = 1;
        while interval.scale() + (j as i32) <= top {
            let anc = interval
                .ancestor(j)
                .expect("ancestor below the largest stored scale");
            let c = self.get(&anc);
            if c != 0.0 {
                acc.add(c * anc.haar_sign_on(interval) * anc.haar_amplitude());
            }
            j += 1;
        }
        acc.value()
    }

    /// The same function as a step function. Pieces are the maximal dyadic
    /// intervals on which no stored Haar function changes sign.
    pub fn to_step(&self) -> Result<StepFunction> {
        let Some(top) = self.max_scale() else {
            return Ok(StepFunction::new());
        };
        // intervals containing at least one stored interval, up to `top`
        let mut marked = BTreeSet::new();
        for i in self.intervals() {
            let mut cur = i;
            while marked.insert(cur) && cur.scale() < top {
                cur = cur.parent()?;
            }
        }
        let roots: Vec<_> = marked
            .iter()
            .filter(|i| i.scale() == top)
            .copied()
            .collect();
        let mut pieces = Vec::new();
        for root in roots {
            self.emit_pieces(root, 0.0, &marked, &mut pieces)?;
        }
        Ok(StepFunction { pieces })
    }

    fn emit_pieces(
        &self,
        node: DyadicInterval,
        acc: f64,
        marked: &BTreeSet<DyadicInterval>,
        out: &mut Vec<(DyadicInterval, f64)>,
    ) -> Result<()> {
        if !marked.contains(&node) {
            if acc != 0.0 {
                out.push((node, acc));
            }
            return Ok(());
        }
        let step = self.get(&node) * node.haar_amplitude();
        let (left, right) = node.children()?;
        self.emit_pieces(left, acc - step, marked, out)?;
        self.emit_pieces(right, acc + step, marked, out)
    }
}

impl FromIterator<(DyadicInterval, f64)> for HaarSeries {
    /// Repeated intervals are summed.
    fn from_iter<T: IntoIterator<Item = (DyadicInterval, f64)>>(iter: T) -> Self {
        let mut s = Self::new();
        for (i, v) in iter {
            s.accumulate(i, v);
        }
        s
    }
}

#[derive(Serialize, Deserialize)]
struct RawCoefficient {
    scale: i64,
    index: i64,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeries {
    coefficients: Vec<RawCoefficient>,
}

impl Serialize for HaarSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        RawSeries {
            coefficients: self
                .iter()
                .map(|(i, value)| RawCoefficient {
                    scale: i64::from(i.scale()),
                    index: i.index(),
                    value,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HaarSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let raw = RawSeries::deserialize(deserializer)?;
        let mut out = Self::new();
        for (pos, c) in raw.coefficients.into_iter().enumerate() {
            let scale = i32::try_from(c.scale).unwrap_or(i32::MAX);
            let interval = DyadicInterval::new(scale, c.index)
                .map_err(|e| D::Error::custom(format!("coefficients[{pos}].scale: {e}")))?;
            if !c.value.is_finite() {
                return Err(D::Error::custom(format!(
                    "coefficients[{pos}].value: non-finite"
                )));
            }
            if out.coefficients.contains_key(&interval) {
                return Err(D::Error::custom(format!(
                    "coefficients[{pos}]: duplicate interval {interval}"
                )));
            }
            out.insert(interval, c.value);
        }
        Ok(out)
    }
}

/// Compactly supported dyadic step function.
///
/// Stored as disjoint dyadic pieces with nonzero values, sorted left to
/// right; the function vanishes off the pieces. Pieces may have different
/// scales, so multi-scale functions stay small.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepFunction {
    pieces: Vec<(DyadicInterval, f64)>,
}

/// Largest expansion accepted when writing the base-scale JSON form.
pub const MAX_BASE_PIECES: u128 = 1 << 22;

enum Cover<'a> {
    Const(f64),
    Pieces(&'a [(DyadicInterval, f64)]),
}

fn cover<'a>(region: &DyadicInterval, pieces: &'a [(DyadicInterval, f64)]) -> Cover<'a> {
    match pieces {
        [] => Cover::Const(0.0),
        [(p, v)] if p == region => Cover::Const(*v),
        _ => Cover::Pieces(pieces),
    }
}

fn split_cover<'a>(
    c: &Cover<'a>,
    left: &DyadicInterval,
    right: &DyadicInterval,
) -> (Cover<'a>, Cover<'a>) {
    match c {
        Cover::Const(v) => (Cover::Const(*v), Cover::Const(*v)),
        Cover::Pieces(s) => {
            let mid = right.left();
            let k = s.partition_point(|(p, _)| p.left() < mid);
            (cover(left, &s[..k]), cover(right, &s[k..]))
        }
    }
}

impl StepFunction {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from arbitrary-order disjoint pieces; zero values are dropped.
    pub fn from_pieces(pieces: impl IntoIterator<Item = (DyadicInterval, f64)>) -> Result<Self> {
        let mut pieces: Vec<_> = pieces.into_iter().collect();
        for (p, v) in &pieces {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    at: p.to_string(),
                    value: *v,
                });
            }
        }
        pieces.retain(|(_, v)| *v != 0.0);
        pieces.sort_by(|a, b| a.0.cmp_position(&b.0));
        for w in pieces.windows(2) {
            if !w[0].0.ends_before(&w[1].0) {
                return Err(Error::OverlappingPieces {
                    first: w[0].0.to_string(),
                    second: w[1].0.to_string(),
                });
            }
        }
        Ok(Self { pieces })
    }

    /// Pieces given by index at a common base scale.
    pub fn from_base_scale(
        base_scale: i32,
        pieces: impl IntoIterator<Item = (i64, f64)>,
    ) -> Result<Self> {
        let pieces = pieces
            .into_iter()
            .map(|(n, v)| Ok((DyadicInterval::new(base_scale, n)?, v)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_pieces(pieces)
    }

    /// `1_I`.
    pub fn indicator(interval: DyadicInterval) -> Self {
        Self {
            pieces: alloc::vec![(interval, 1.0)],
        }
    }

    pub fn pieces(&self) -> &[(DyadicInterval, f64)] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Finest piece scale.
    pub fn base_scale(&self) -> Option<i32> {
        self.pieces.iter().map(|(p, _)| p.scale()).min()
    }

    pub fn value_at(&self, x: f64) -> f64 {
        let Some(x) = DyadicPoint::from_f64(x) else {
            return 0.0;
        };
        let k = self.pieces.partition_point(|(p, _)| p.right() <= x);
        match self.pieces.get(k) {
            Some((p, v)) if p.contains_point(x) => *v,
            _ => 0.0,
        }
    }

    pub fn integral(&self) -> f64 {
        math::sum(self.pieces.iter().map(|(p, v)| v * p.measure()))
    }

    /// `∫_I g dx`, exact up to the final compensated sum.
    pub fn integral_over(&self, interval: &DyadicInterval) -> f64 {
        let start = self
            .pieces
            .partition_point(|(p, _)| p.ends_before(interval));
        let end = interval.right();
        let mut acc = CompensatedSum::new();
        for (p, v) in &self.pieces[start..] {
            if p.left() >= end {
                break;
            }
            if interval.contains(p) {
                acc.add(v * p.measure());
            } else if p.contains(interval) {
                acc.add(v * interval.measure());
            }
        }
        acc.value()
    }

    pub fn average(&self, interval: &DyadicInterval) -> f64 {
        self.integral_over(interval) / interval.measure()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|(p, v)| (*p, c * v))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        }
    }

    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|(p, v)| (*p, f(*v)))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        }
    }

    /// Pointwise `op(self, other)` on the common refinement. `op(0, 0)` must
    /// be zero.
    pub fn combine(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let (a, b) = (&self.pieces[..], &other.pieces[..]);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() || j < b.len() {
            let root = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => {
                    if x.0.cmp_position(&y.0) != Ordering::Greater {
                        x.0
                    } else {
                        y.0
                    }
                }
                (Some(x), None) => x.0,
                (None, Some(y)) => y.0,
                (None, None) => unreachable!(),
            };
            let i_end = i + a[i..].iter().take_while(|(p, _)| root.contains(p)).count();
            let j_end = j + b[j..].iter().take_while(|(p, _)| root.contains(p)).count();
            merge_region(
                root,
                cover(&root, &a[i..i_end]),
                cover(&root, &b[j..j_end]),
                &op,
                &mut out,
            )?;
            i = i_end;
            j = j_end;
        }
        Ok(Self { pieces: out })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |x, y| x - y)
    }

    /// Pointwise product.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.combine(other, |x, y| x * y)
    }

    /// Pieces of one tree, as a contiguous slice.
    pub fn tree_pieces(&self, tree: Tree) -> &[(DyadicInterval, f64)] {
        let split = self
            .pieces
            .partition_point(|(p, _)| p.tree() == Tree::Negative);
        match tree {
            Tree::Negative => &self.pieces[..split],
            Tree::Positive => &self.pieces[split..],
        }
    }

    /// Haar data: all coefficients `(g, h_K)` with `K` inside a tree hull,
    /// plus each tree's hull and integral.
    pub fn analyze(&self) -> Result<StepAnalysis> {
        let mut series = HaarSeries::new();
        let mut trees = [
            TreeSummary::empty(Tree::Negative),
            TreeSummary::empty(Tree::Positive),
        ];
        for tree in Tree::BOTH {
            let pieces = self.tree_pieces(tree);
            let (Some(first), Some(last)) = (pieces.first(), pieces.last()) else {
                continue;
            };
            let hull = first
                .0
                .common_ancestor(&last.0)?
                .expect("pieces of one tree share ancestors");
            let mut by_scale: BTreeMap<i32, Vec<(i64, f64)>> = BTreeMap::new();
            for (p, v) in pieces {
                by_scale
                    .entry(p.scale())
                    .or_default()
                    .push((p.index(), v * p.measure()));
            }
            let mut scale = *by_scale.keys().next().expect("nonempty");
            let mut level: BTreeMap<i64, f64> = BTreeMap::new();
            loop {
                if let Some(new) = by_scale.remove(&scale) {
                    level.extend(new);
                }
                if scale == hull.scale() {
                    break;
                }
                let mut next: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
                for (n, integral) in level {
                    let halves = next.entry(n.div_euclid(2)).or_insert((0.0, 0.0));
                    if n & 1 == 1 {
                        halves.1 = integral;
                    } else {
                        halves.0 = integral;
                    }
                }
                scale += 1;
                level = BTreeMap::new();
                for (n, (minus, plus)) in next {
                    let k = DyadicInterval::new(scale, n)?;
                    series.insert(k, k.haar_amplitude() * (plus - minus));
                    level.insert(n, minus + plus);
                }
            }
            let integral = level.values().copied().plain_sum();
            trees[tree.slot()] = TreeSummary {
                tree,
                hull: Some(hull),
                integral,
            };
        }
        Ok(StepAnalysis { series, trees })
    }

    /// Base-scale form `(k_min, [(index, value)])`, as used by the JSON
    /// schema. Fails if the expansion exceeds [`MAX_BASE_PIECES`].
    pub fn to_base_scale(&self) -> Result<(i32, Vec<(i64, f64)>)> {
        let Some(base) = self.base_scale() else {
            return Ok((0, Vec::new()));
        };
        let total: u128 = self
            .pieces
            .iter()
            .map(|(p, _)| 1u128 << (p.scale() - base))
            .sum();
        if total > MAX_BASE_PIECES {
            return Err(Error::TooManyPieces {
                pieces: total,
                limit: MAX_BASE_PIECES,
            });
        }
        let mut out = Vec::with_capacity(total as usize);
        for (p, v) in &self.pieces {
            let count = 1i64 << (p.scale() - base);
            let start = p.index() * count;
            out.extend((start..start + count).map(|n| (n, *v)));
        }
        Ok((base, out))
    }
}

fn merge_region(
    region: DyadicInterval,
    a: Cover<'_>,
    b: Cover<'_>,
    op: &impl Fn(f64, f64) -> f64,
    out: &mut Vec<(DyadicInterval, f64)>,
) -> Result<()> {
    if let (Cover::Const(x), Cover::Const(y)) = (&a, &b) {
        let v = op(*x, *y);
        if v != 0.0 {
            out.push((region, v));
        }
        return Ok(());
    }
    let (left, right) = region.children()?;
    let (al, ar) = split_cover(&a, &left, &right);
    let (bl, br) = split_cover(&b, &left, &right);
    merge_region(left, al, bl, op, out)?;
    merge_region(right, ar, br, op, out)
}

#[derive(Serialize, Deserialize)]
struct RawPiece {
    index: i64,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    base_scale: i64,
    pieces: Vec<RawPiece>,
}

impl Serialize for StepFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        let (base, pieces) = self.to_base_scale().map_err(S::Error::custom)?;
        RawStep {
            base_scale: i64::from(base),
            pieces: pieces
                .into_iter()
                .map(|(index, value)| RawPiece { index, value })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StepFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let raw = RawStep::deserialize(deserializer)?;
        let base = i32::try_from(raw.base_scale).unwrap_or(i32::MAX);
        let mut seen = BTreeSet::new();
        for (pos, p) in raw.pieces.iter().enumerate() {
            if !seen.insert(p.index) {
                return Err(D::Error::custom(format!(
                    "pieces[{pos}]: duplicate index {}",
                    p.index
                )));
            }
        }
        Self::from_base_scale(base, raw.pieces.into_iter().map(|p| (p.index, p.value)))
            .map_err(|e| D::Error::custom(format!("base_scale/pieces: {e}")))
    }
}

/// Hull and integral of one tree's part of a step function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub tree: Tree,
    pub hull: Option<DyadicInterval>,
    pub integral: f64,
}

impl TreeSummary {
    fn empty(tree: Tree) -> Self {
        Self {
            tree,
            hull: None,
            integral: 0.0,
        }
    }

    /// `(g, h_K)` for the `j`-th ancestor `K` of the hull, `j ≥ 1`, in closed
    /// form `± |K|^{-1/2} M`. Works past the scale clamp.
    pub fn tail_coefficient(&self, j: u32) -> f64 {
        let Some(hull) = self.hull else {
            return 0.0;
        };
        let half = if j > 64 {
            if hull.index() < 0 {
                -1
            } else {
                0
            }
        } else {
            hull.index() >> (j - 1)
        };
        let sign = if half & 1 == 1 { 1.0 } else { -1.0 };
        sign * self.integral * measure_pow(hull.scale() + j as i32, -0.5)
    }
}

/// Output of [`StepFunction::analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepAnalysis {
    /// Coefficients for intervals inside or equal to a tree hull.
    pub series: HaarSeries,
    /// Indexed by [`Tree::slot`].
    pub trees: [TreeSummary; 2],
}

impl StepAnalysis {
    pub fn tree(&self, tree: Tree) -> &TreeSummary {
        &self.trees[tree.slot()]
    }

    /// `(g, h_K)` for any dyadic `K`.
    pub fn coefficient(&self, k: &DyadicInterval) -> f64 {
        let t = self.tree(k.tree());
        match t.hull {
            Some(h) if k.scale() > h.scale() && k.contains(&h) => {
                t.tail_coefficient((k.scale() - h.scale()) as u32)
            }
            _ => self.series.get(k),
        }
    }
}

/// A truncated dyadic sum next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSum {
    pub truncated: f64,
    pub closed_form: f64,
}

fn check_positive(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(invalid("s > 0", s))
    }
}

/// `Σ_{j=0}^{depth} Σ_{J ∈ D_j(I)} |J|^s 1_J(x)` and its limit
/// `|I|^s 1_I(x) / (1 - 2^{-s})`.
pub fn weighted_indicator_sum(
    interval: &DyadicInterval,
    s: f64,
    x: f64,
    depth: u32,
) -> Result<WeightedSum> {
    check_positive(s)?;
    let point = DyadicPoint::from_f64(x);
    let Some(point) = point.filter(|p| interval.contains_point(*p)) else {
        return Ok(WeightedSum {
            truncated: 0.0,
            closed_form: 0.0,
        });
    };
    let mut acc = CompensatedSum::new();
    for j in (0..=depth).rev() {
        let cell = DyadicInterval::containing(point, interval.scale() - j as i32)?;
        acc.add(measure_pow(cell.scale(), s));
    }
    Ok(WeightedSum {
        truncated: acc.value(),
        closed_form: measure_pow(interval.scale(), s) / (1.0 - math::exp2(-s)),
    })
}

/// `Σ_{J ⊊ I, |J| ≥ 2^{-depth}|I|} |J|^s h_I(J) 1_J(x)` and its limit
/// `|I|^s h_I(x) / (2^s - 1)`.
pub fn weighted_haar_sum(
    interval: &DyadicInterval,
    s: f64,
    x: f64,
    depth: u32,
) -> Result<WeightedSum> {
    check_positive(s)?;
    let point = DyadicPoint::from_f64(x);
    let Some(point) = point.filter(|p| interval.contains_point(*p)) else {
        return Ok(WeightedSum {
            truncated: 0.0,
            closed_form: 0.0,
        });
    };
    let h = interval.haar_value_at_point(point);
    let mut acc = CompensatedSum::new();
    for j in (1..=depth).rev() {
        let cell = DyadicInterval::containing(point, interval.scale() - j as i32)?;
        acc.add(measure_pow(cell.scale(), s) * interval.haar_constant_on(&cell)?);
    }
    Ok(WeightedSum {
        truncated: acc.value(),
        closed_form: measure_pow(interval.scale(), s) * h / (math::exp2(s) - 1.0),
    })
}

/// `⟨f⟩_I - ⟨f⟩_{I_(k)} - Σ_{I ⊊ J ⊆ I_(k)} (f, h_J) h_J(I)`, with both
/// averages integrated from the step form. Zero up to rounding.
pub fn telescope_residual(f: &HaarSeries, interval: &DyadicInterval, k: u32) -> Result<f64> {
    let step = f.to_step()?;
    let top = interval.ancestor(k)?;
    let mut acc = CompensatedSum::new();
    acc.add(step.average(interval));
    acc.add(-step.average(&top));
    for j in 1..=k {
        let anc = interval.ancestor(j)?;
        acc.add(-f.get(&anc) * anc.haar_constant_on(interval)?);
    }
    Ok(acc.value())
}
