//! The standard dyadic grid: intervals `[n 2^k, (n + 1) 2^k)`, their
//! genealogy and the Haar function attached to each of them.
//!
//! All arithmetic is on integers. Points are dyadic rationals, which covers
//! every finite `f64`, so membership tests are exact.

use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{measure_pow, pow2i};

/// Smallest supported scale (interval length `2^K_MIN`).
pub const K_MIN: i32 = -60;
/// Largest supported scale.
pub const K_MAX: i32 = 60;

fn check_scale(scale: i64) -> Result<i32> {
    if (i64::from(K_MIN)..=i64::from(K_MAX)).contains(&scale) {
        Ok(scale as i32)
    } else {
        Err(Error::ScaleOutOfRange { scale })
    }
}

/// `⌊n / 2^d⌋`.
fn floor_shift(n: i64, d: u32) -> i64 {
    if d >= 64 {
        if n < 0 {
            -1
        } else {
            0
        }
    } else {
        n >> d
    }
}

/// Compares `m1 2^e1` with `m2 2^e2` exactly.
fn cmp_dyadic(m1: i64, e1: i32, m2: i64, e2: i32) -> Ordering {
    if e1 < e2 {
        return cmp_dyadic(m2, e2, m1, e1).reverse();
    }
    if m1 == 0 {
        return 0.cmp(&m2);
    }
    let d = (i64::from(e1) - i64::from(e2)) as u64;
    if d >= 64 {
        // |m1| 2^d >= 2^64 > |m2|
        return if m1 > 0 {
            Ordering::Greater
        } else {
            Ordering::Less
        };
    }
    ((m1 as i128) << d).cmp(&(m2 as i128))
}

/// An exact dyadic rational `mantissa · 2^exponent`.
///
/// Canonical form has an odd mantissa, or mantissa and exponent both zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicPoint {
    mantissa: i64,
    exponent: i32,
}

impl DyadicPoint {
    pub fn new(mantissa: i64, exponent: i32) -> Self {
        if mantissa == 0 {
            return Self {
                mantissa: 0,
                exponent: 0,
            };
        }
        let tz = mantissa.trailing_zeros();
        Self {
            mantissa: mantissa >> tz,
            exponent: exponent + tz as i32,
        }
    }

    /// Exact conversion; `None` for NaN and infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::new(0, 0));
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let fraction = (bits & ((1u64 << 52) - 1)) as i64;
        let (m, e) = if biased == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1i64 << 52), biased - 1075)
        };
        Some(Self::new(if negative { -m } else { m }, e))
    }

    pub fn mantissa(&self) -> i64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    pub fn to_f64(&self) -> f64 {
        self.mantissa as f64 * crate::math::exp2(f64::from(self.exponent))
    }
}

impl Ord for DyadicPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_dyadic(self.mantissa, self.exponent, other.mantissa, other.exponent)
    }
}

impl PartialOrd for DyadicPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One of the two halves of the standard grid. Intervals in different trees
/// never share an ancestor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tree {
    /// Intervals inside `(-∞, 0)`.
    Negative,
    /// Intervals inside `[0, ∞)`.
    Positive,
}

impl Tree {
    pub const BOTH: [Tree; 2] = [Tree::Negative, Tree::Positive];

    pub fn slot(self) -> usize {
        match self {
            Tree::Negative => 0,
            Tree::Positive => 1,
        }
    }
}

/// How two dyadic intervals sit relative to each other. Partial overlap is
/// impossible on a dyadic grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Disjoint,
    Equal,
    /// The first interval strictly contains the second.
    Contains,
    /// The first interval is strictly contained in the second.
    ContainedBy,
}

/// The interval `[index · 2^scale, (index + 1) · 2^scale)`.
///
/// The derived ordering is by scale, then index, i.e. ascending measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct DyadicInterval {
    scale: i32,
    index: i64,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    scale: i64,
    index: i64,
}

impl TryFrom<RawInterval> for DyadicInterval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self> {
        Ok(Self {
            scale: check_scale(raw.scale)?,
            index: raw.index,
        })
    }
}

impl From<DyadicInterval> for RawInterval {
    fn from(i: DyadicInterval) -> Self {
        Self {
            scale: i64::from(i.scale),
            index: i.index,
        }
    }
}

impl DyadicInterval {
    pub fn new(scale: i32, index: i64) -> Result<Self> {
        Ok(Self {
            scale: check_scale(i64::from(scale))?,
            index,
        })
    }

    /// `[0, 1)`.
    pub const UNIT: Self = Self { scale: 0, index: 0 };

    pub fn scale(&self) -> i32 {
        self.scale
    }

    pub fn index(&self) -> i64 {
        self.index
    }

    /// Lebesgue measure `2^scale`, exact.
    pub fn measure(&self) -> f64 {
        pow2i(self.scale)
    }

    pub fn left(&self) -> DyadicPoint {
        DyadicPoint::new(self.index, self.scale)
    }

    /// Right endpoint (excluded from the interval).
    pub fn right(&self) -> DyadicPoint {
        match self.index.checked_add(1) {
            Some(n) => DyadicPoint::new(n, self.scale),
            None => DyadicPoint::new(1, 63 + self.scale),
        }
    }

    pub fn tree(&self) -> Tree {
        if self.index < 0 {
            Tree::Negative
        } else {
            Tree::Positive
        }
    }

    pub fn parent(&self) -> Result<Self> {
        Ok(Self {
            scale: check_scale(i64::from(self.scale) + 1)?,
            index: self.index.div_euclid(2),
        })
    }

    /// `(I_-, I_+)`: left and right halves.
    pub fn children(&self) -> Result<(Self, Self)> {
        let scale = check_scale(i64::from(self.scale) - 1)?;
        let left = self
            .index
            .checked_mul(2)
            .ok_or(Error::IndexOverflow { scale })?;
        Ok((
            Self { scale, index: left },
            Self {
                scale,
                index: left + 1,
            },
        ))
    }

    /// The `j`-th ancestor; `ancestor(0)` is the interval itself.
    pub fn ancestor(&self, j: u32) -> Result<Self> {
        Ok(Self {
            scale: check_scale(i64::from(self.scale) + i64::from(j))?,
            index: floor_shift(self.index, j),
        })
    }

    /// The ancestor (or self) at the given coarser scale.
    pub fn ancestor_at(&self, scale: i32) -> Result<Self> {
        if scale < self.scale {
            return Err(Error::ScaleOutOfRange {
                scale: i64::from(scale),
            });
        }
        self.ancestor((scale - self.scale) as u32)
    }

    /// `J ⊆ I`.
    pub fn contains(&self, other: &Self) -> bool {
        other.scale <= self.scale
            && floor_shift(other.index, (self.scale - other.scale) as u32) == self.index
    }

    pub fn relation(&self, other: &Self) -> Relation {
        match self.scale.cmp(&other.scale) {
            Ordering::Equal if self.index == other.index => Relation::Equal,
            Ordering::Greater if self.contains(other) => Relation::Contains,
            Ordering::Less if other.contains(self) => Relation::ContainedBy,
            _ => Relation::Disjoint,
        }
    }

    /// The interval of the given scale that contains `x`.
    pub fn containing(x: DyadicPoint, scale: i32) -> Result<Self> {
        let scale = check_scale(i64::from(scale))?;
        let index = index_at(x, i64::from(scale)).ok_or(Error::IndexOverflow { scale })?;
        Ok(Self { scale, index })
    }

    pub fn contains_point(&self, x: DyadicPoint) -> bool {
        matches!(Self::containing(x, self.scale), Ok(j) if j.index == self.index)
    }

    /// `h_I(x)`: `+|I|^{-1/2}` on the right half, `-|I|^{-1/2}` on the left
    /// half, zero elsewhere. Non-finite `x` lies outside every interval.
    pub fn haar_value_at(&self, x: f64) -> f64 {
        DyadicPoint::from_f64(x).map_or(0.0, |p| self.haar_value_at_point(p))
    }

    pub fn haar_value_at_point(&self, x: DyadicPoint) -> f64 {
        match index_at(x, i64::from(self.scale) - 1) {
            Some(half) if floor_shift(half, 1) == self.index => {
                if half & 1 == 1 {
                    self.haar_amplitude()
                } else {
                    -self.haar_amplitude()
                }
            }
            _ => 0.0,
        }
    }

    /// `|I|^{-1/2}`.
    pub fn haar_amplitude(&self) -> f64 {
        measure_pow(self.scale, -0.5)
    }

    /// `h_I(J)`, the constant value of `h_I` on a strict subinterval `J`.
    pub fn haar_constant_on(&self, inner: &Self) -> Result<f64> {
        if inner.scale >= self.scale || !self.contains(inner) {
            return Err(Error::NotStrictSubinterval {
                inner: inner.to_string(),
                outer: self.to_string(),
            });
        }
        Ok(self.haar_sign_on(inner) * self.haar_amplitude())
    }

    /// `+1` if `inner ⊆ I_+`, `-1` if `inner ⊆ I_-`. Caller guarantees
    /// `inner ⊊ self`.
    pub(crate) fn haar_sign_on(&self, inner: &Self) -> f64 {
        let half = floor_shift(inner.index, (self.scale - 1 - inner.scale) as u32);
        if half & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Smallest interval containing both, if they share a tree.
    pub fn common_ancestor(&self, other: &Self) -> Result<Option<Self>> {
        if self.tree() != other.tree() {
            return Ok(None);
        }
        let scale = self.scale.max(other.scale);
        let mut a = self.ancestor_at(scale)?;
        let mut b = other.ancestor_at(scale)?;
        while a != b {
            a = a.parent()?;
            b = b.parent()?;
        }
        Ok(Some(a))
    }

    /// Left-to-right ordering; nested intervals with a shared left endpoint
    /// put the larger first.
    pub fn cmp_position(&self, other: &Self) -> Ordering {
        cmp_dyadic(self.index, self.scale, other.index, other.scale)
            .then(other.scale.cmp(&self.scale))
    }

    /// Whether `self` ends at or before `other` starts.
    pub(crate) fn ends_before(&self, other: &Self) -> bool {
        self.right() <= other.left()
    }
}

/// `⌊x / 2^scale⌋`, or `None` when it leaves the `i64` range.
fn index_at(x: DyadicPoint, scale: i64) -> Option<i64> {
    let d = i64::from(x.exponent) - scale;
    if d >= 0 {
        if x.mantissa == 0 {
            Some(0)
        } else if d >= 64 {
            None
        } else {
            i64::try_from((x.mantissa as i128) << d).ok()
        }
    } else {
        Some(floor_shift(x.mantissa, (-d).min(64) as u32))
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.scale, self.index)
    }
}

impl FromStr for DyadicInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter {
            constraint: "interval text of the form \"scale:index\"",
            got: String::from(s),
        };
        let (k, n) = s.split_once(':').ok_or_else(bad)?;
        let k: i64 = k.trim().parse().map_err(|_| bad())?;
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        Ok(Self {
            scale: check_scale(k)?,
            index: n,
        })
    }
}
