//! Randomized checks of the Morrey, BMO and Gagliardo–Nirenberg–Sobolev
//! embeddings and of the high-regularity algebra bounds.
//!
//! Morrey and BMO come with explicit constants and are hard checks. The
//! other inequalities hide their constants, so they are compared against a
//! calibrated bound when one is supplied.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{local_estimate_from, square, square_hs_norm};
use crate::dyadic::DyadicInterval;
use crate::error::{invalid, Result};
use crate::math;
use crate::norms::{bmo_norm, hs_norm, hs_seminorm, l2_norm, linf_norm, lq_norm};
use crate::operators::FractionalParameter;
use crate::series::HaarSeries;

/// Margin applied to observed sup ratios when freezing a calibration.
pub const CALIBRATION_MARGIN: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// `sparsity` terms at random scales below a random coarse interval,
    /// values uniform in `[-1, 1]`.
    Uniform,
    /// A right-child chain below a random coarse interval with
    /// coefficients `± |J|^β`, one `β ∈ [0.3, 0.7]` per sample.
    LacunaryTower,
    /// One random interval with a value of size in `[0.1, 1]`.
    SingleInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub seed: u64,
    pub count: usize,
    /// `(k_lo, k_hi)`: coefficient scales, with coarse intervals at `k_hi`.
    pub scale_range: (i32, i32),
    /// Indices of the coarse interval at `k_hi`.
    pub index_range: (i64, i64),
    pub distribution: Distribution,
    /// Terms per function.
    pub sparsity: usize,
}

impl EnsembleSpec {
    pub fn new(seed: u64, count: usize) -> Self {
        Self {
            seed,
            count,
            scale_range: (-8, 6),
            index_range: (-4, 3),
            distribution: Distribution::Uniform,
            sparsity: 12,
        }
    }

    pub fn with_scales(mut self, lo: i32, hi: i32) -> Self {
        self.scale_range = (lo, hi);
        self
    }

    pub fn with_indices(mut self, lo: i64, hi: i64) -> Self {
        self.index_range = (lo, hi);
        self
    }

    pub fn with_distribution(mut self, d: Distribution) -> Self {
        self.distribution = d;
        self
    }

    pub fn with_sparsity(mut self, sparsity: usize) -> Self {
        self.sparsity = sparsity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale_range;
        if !(crate::K_MIN < lo && lo <= hi && hi <= crate::K_MAX) {
            return Err(invalid(
                "K_MIN < k_lo ≤ k_hi ≤ K_MAX",
                alloc::format!("({lo}, {hi})"),
            ));
        }
        if self.index_range.0 > self.index_range.1 {
            return Err(invalid(
                "index_lo ≤ index_hi",
                alloc::format!("{:?}", self.index_range),
            ));
        }
        DyadicInterval::new(hi, self.index_range.0)?;
        DyadicInterval::new(hi, self.index_range.1)?;
        if self.sparsity == 0 {
            return Err(invalid("sparsity ≥ 1", 0));
        }
        Ok(())
    }

    /// The ensemble; identical specs give identical samples.
    pub fn generate(&self) -> Result<Vec<HaarSeries>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count).map(|_| self.sample(&mut rng)).collect()
    }

    fn coarse(&self, rng: &mut ChaCha8Rng) -> Result<DyadicInterval> {
        let n = rng.gen_range(self.index_range.0..=self.index_range.1);
        DyadicInterval::new(self.scale_range.1, n)
    }

    fn descend(rng: &mut ChaCha8Rng, from: DyadicInterval, levels: u32) -> Result<DyadicInterval> {
        let mut cur = from;
        for _ in 0..levels {
            let (l, r) = cur.children()?;
            cur = if rng.gen::<bool>() { r } else { l };
        }
        Ok(cur)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<HaarSeries> {
        let (lo, hi) = self.scale_range;
        let depth = (hi - lo) as u32;
        let mut f = HaarSeries::new();
        match self.distribution {
            Distribution::Uniform => {
                let top = self.coarse(rng)?;
                for _ in 0..self.sparsity {
                    let levels = rng.gen_range(0..=depth);
                    let j = Self::descend(rng, top, levels)?;
                    f.insert(j, rng.gen_range(-1.0..=1.0));
                }
            }
            Distribution::LacunaryTower => {
                let beta: f64 = rng.gen_range(0.3..=0.7);
                let mut j = self.coarse(rng)?;
                let len = self.sparsity.min(depth as usize + 1);
                for step in 0..len {
                    if step > 0 {
                        j = j.children()?.1;
                    }
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    f.insert(j, sign * math::powf(j.measure(), beta));
                }
            }
            Distribution::SingleInterval => {
                let top = self.coarse(rng)?;
                let levels = rng.gen_range(0..=depth);
                let j = Self::descend(rng, top, levels)?;
                let size: f64 = rng.gen_range(0.1..=1.0);
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                f.insert(j, sign * size);
            }
        }
        Ok(f)
    }
}

/// `(1 - 2^{1-2s})^{-1/2}`, for `s > 1/2`.
pub fn morrey_constant(s: FractionalParameter) -> f64 {
    1.0 / math::sqrt(1.0 - math::exp2(1.0 - 2.0 * s.value()))
}

fn require_above_half(s: FractionalParameter) -> Result<()> {
    if s.value() > 0.5 {
        Ok(())
    } else {
        Err(invalid("s > 1/2", s.value()))
    }
}

fn require_below_half(s: FractionalParameter) -> Result<()> {
    if s.value() < 0.5 {
        Ok(())
    } else {
        Err(invalid("0 < s < 1/2", s.value()))
    }
}

/// One sample's Morrey margins. For every piece value `v` with scale-0 cell
/// `I_x` the chain is `|v| ≤ |⟨f⟩_{I_x}| + |v - ⟨f⟩_{I_x}|` with
/// `|⟨f⟩_{I_x}| ≤ ‖f‖_{L²}` and `|v - ⟨f⟩_{I_x}| ≤ C ‖f‖_{Ḣ^s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorreySample {
    pub sup: f64,
    pub bound: f64,
    /// Largest `|⟨f⟩_{I_x}| / ‖f‖_{L²}` over pieces.
    pub average_leg: f64,
    /// Largest `|v - ⟨f⟩_{I_x}| / (C ‖f‖_{Ḣ^s})` over pieces.
    pub oscillation_leg: f64,
    pub pass: bool,
}

pub fn morrey_sample(f: &HaarSeries, s: FractionalParameter) -> Result<MorreySample> {
    require_above_half(s)?;
    let step = f.to_step()?;
    let c = morrey_constant(s);
    let l2 = l2_norm(f);
    let hs = hs_seminorm(f, s);
    let bound = l2 + c * hs;
    let mut pass = true;
    let (mut average_leg, mut oscillation_leg) = (0.0f64, 0.0f64);
    for (piece, v) in step.pieces() {
        let cell = if piece.scale() <= 0 {
            piece.ancestor_at(0)?
        } else {
            DyadicInterval::containing(piece.left(), 0)?
        };
        let avg = f.average(&cell);
        let osc = math::abs(v - avg);
        pass &= math::abs(*v) <= bound && math::abs(avg) <= l2 && osc <= c * hs;
        average_leg = average_leg.max(ratio(math::abs(avg), l2));
        oscillation_leg = oscillation_leg.max(ratio(osc, c * hs));
    }
    Ok(MorreySample {
        sup: linf_norm(&step),
        bound,
        average_leg,
        oscillation_leg,
        pass,
    })
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `‖f‖_{L^q} / ‖f‖_{Ḣ^s}` with `q = 2/(1-2s)`.
pub fn gns_ratio(f: &HaarSeries, s: FractionalParameter) -> Result<f64> {
    require_below_half(s)?;
    if f.is_empty() {
        return Err(invalid("f ≠ 0", "f = 0"));
    }
    let q = s.q().expect("s < 1/2");
    Ok(lq_norm(&f.to_step()?, q)? / hs_seminorm(f, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Check {
    /// `sup|f| ≤ ‖f‖_{L²} + (1 - 2^{1-2s})^{-1/2} ‖f‖_{Ḣ^s}`, `s > 1/2`.
    Morrey { s: f64 },
    /// `bmo(f) ≤ ‖f‖_{Ḣ^{1/2}}`.
    Bmo,
    /// `‖f‖_{L^q} / ‖f‖_{Ḣ^s}`, `s < 1/2`.
    Gns { s: f64, bound: Option<f64> },
    /// `‖f²‖_{H^s} / ‖f‖²_{H^s}`, `s > 1/2`.
    Algebra { s: f64, bound: Option<f64> },
    /// Local square estimate on a fixed interval, `s > 1/2`.
    LocalSquare {
        s: f64,
        interval: DyadicInterval,
        bound: Option<f64>,
    },
}

impl Check {
    pub fn id(&self) -> &'static str {
        match self {
            Check::Morrey { .. } => "morrey",
            Check::Bmo => "bmo",
            Check::Gns { .. } => "gns",
            Check::Algebra { .. } => "algebra",
            Check::LocalSquare { .. } => "local_square",
        }
    }

    pub fn s(&self) -> Option<f64> {
        match *self {
            Check::Morrey { s } | Check::Gns { s, .. } | Check::Algebra { s, .. } => Some(s),
            Check::LocalSquare { s, .. } => Some(s),
            Check::Bmo => None,
        }
    }

    /// Rejects parameters outside the inequality's range.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Check::Morrey { s } | Check::Algebra { s, .. } | Check::LocalSquare { s, .. } => {
                require_above_half(FractionalParameter::new(s)?)
            }
            Check::Gns { s, .. } => require_below_half(FractionalParameter::new(s)?),
            Check::Bmo => Ok(()),
        }
    }

    fn bound(&self) -> Option<f64> {
        match *self {
            Check::Morrey { .. } | Check::Bmo => Some(1.0),
            Check::Gns { bound, .. } | Check::Algebra { bound, .. } => bound,
            Check::LocalSquare { bound, .. } => bound,
        }
    }

    fn with_bound(self, b: f64) -> Self {
        match self {
            Check::Gns { s, .. } => Check::Gns { s, bound: Some(b) },
            Check::Algebra { s, .. } => Check::Algebra { s, bound: Some(b) },
            Check::LocalSquare { s, interval, .. } => Check::LocalSquare {
                s,
                interval,
                bound: Some(b),
            },
            other => other,
        }
    }

    /// The sample's ratio and whether it satisfies the check. `None` means
    /// the sample says nothing (zero denominator).
    fn evaluate(&self, f: &HaarSeries) -> Result<Option<(f64, bool)>> {
        let bound = self.bound();
        let within = |r: f64| bound.is_none_or(|b| r <= b);
        Ok(match *self {
            Check::Morrey { s } => {
                let m = morrey_sample(f, FractionalParameter::new(s)?)?;
                Some((ratio(m.sup, m.bound), m.pass))
            }
            Check::Bmo => {
                let b = bmo_norm(f)?;
                let h = hs_seminorm(f, FractionalParameter::new(0.5)?);
                Some((ratio(b, h), b <= h))
            }
            Check::Gns { s, .. } => {
                if f.is_empty() {
                    None
                } else {
                    let r = gns_ratio(f, FractionalParameter::new(s)?)?;
                    Some((r, within(r)))
                }
            }
            Check::Algebra { s, .. } => {
                let s = FractionalParameter::new(s)?;
                let n = hs_norm(f, s);
                if n == 0.0 {
                    None
                } else {
                    let unit = f.scaled(1.0 / n);
                    let sq = square_hs_norm(&unit, s)?;
                    let r = math::sqrt(sq.hs_norm_sq) / (hs_norm(&unit, s) * hs_norm(&unit, s));
                    Some((r, within(r)))
                }
            }
            Check::LocalSquare { s, interval, .. } => {
                let s = FractionalParameter::new(s)?;
                let (_, a) = square(f)?;
                let e = local_estimate_from(f, &a, s, &interval);
                e.ratio().map(|r| (r, within(r)))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    Explicit,
    Calibrated,
    /// No bound supplied; the verdict only records the sup ratio.
    Uncalibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub sample: usize,
    pub ratio: f64,
    pub series: HaarSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVerdict {
    pub inequality: String,
    pub s: Option<f64>,
    pub samples: usize,
    /// Per sample, `None` where the ratio is undefined.
    pub ratios: Vec<Option<f64>>,
    pub sup_ratio: f64,
    /// Bound on the ratio: 1 for explicit-constant inequalities, the
    /// calibrated value otherwise.
    pub constant: Option<f64>,
    pub constant_kind: ConstantKind,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

pub fn run_check(check: &Check, samples: &[HaarSeries]) -> Result<EmbeddingVerdict> {
    check.validate()?;
    let mut ratios = Vec::with_capacity(samples.len());
    let mut violations = Vec::new();
    let mut sup_ratio = 0.0f64;
    for (i, f) in samples.iter().enumerate() {
        let outcome = check.evaluate(f)?;
        if let Some((r, ok)) = outcome {
            sup_ratio = sup_ratio.max(r);
            if !ok {
                violations.push(Violation {
                    sample: i,
                    ratio: r,
                    series: f.clone(),
                });
            }
        }
        ratios.push(outcome.map(|(r, _)| r));
    }
    let constant_kind = match check {
        Check::Morrey { .. } | Check::Bmo => ConstantKind::Explicit,
        _ if check.bound().is_some() => ConstantKind::Calibrated,
        _ => ConstantKind::Uncalibrated,
    };
    Ok(EmbeddingVerdict {
        inequality: String::from(check.id()),
        s: check.s(),
        samples: samples.len(),
        ratios,
        sup_ratio,
        constant: check.bound(),
        constant_kind,
        pass: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub spec: EnsembleSpec,
    pub verdicts: Vec<EmbeddingVerdict>,
}

impl EnsembleReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

pub fn run_ensemble(spec: &EnsembleSpec, checks: &[Check]) -> Result<EnsembleReport> {
    for c in checks {
        c.validate()?;
    }
    let samples = if checks.is_empty() {
        Vec::new()
    } else {
        spec.generate()?
    };
    let verdicts = checks
        .iter()
        .map(|c| run_check(c, &samples))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleReport {
        spec: *spec,
        verdicts,
    })
}

/// CSV header matching [`EmbeddingVerdict::csv_record`].
pub const VERDICT_COLUMNS: [&str; 8] = [
    "inequality",
    "s",
    "samples",
    "sup_ratio",
    "constant",
    "constant_kind",
    "violations",
    "pass",
];

impl EmbeddingVerdict {
    pub fn csv_record(&self) -> [String; 8] {
        use alloc::string::ToString;
        [
            self.inequality.clone(),
            self.s.map(math::format_float).unwrap_or_default(),
            self.samples.to_string(),
            math::format_float(self.sup_ratio),
            self.constant.map(math::format_float).unwrap_or_default(),
            String::from(match self.constant_kind {
                ConstantKind::Explicit => "explicit",
                ConstantKind::Calibrated => "calibrated",
                ConstantKind::Uncalibrated => "uncalibrated",
            }),
            self.violations.len().to_string(),
            self.pass.to_string(),
        ]
    }
}

/// One frozen bound: observed sup ratio times [`CALIBRATION_MARGIN`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub check: Check,
    pub ensemble: EnsembleSpec,
    pub observed_sup: f64,
    pub bound: f64,
}

/// The stored calibration: how it was produced and the frozen bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFixture {
    pub margin: f64,
    pub seed: u64,
    pub count: usize,
    pub entries: Vec<CalibrationEntry>,
}

impl CalibrationFixture {
    pub fn generate(seed: u64, count: usize) -> Result<Self> {
        Ok(Self {
            margin: CALIBRATION_MARGIN,
            seed,
            count,
            entries: calibrate(&calibration_plan(seed, count))?,
        })
    }
}

/// The interval the local square estimate is calibrated on.
pub const LOCAL_INTERVAL: DyadicInterval = DyadicInterval::UNIT;

/// Functions supported in [`LOCAL_INTERVAL`], down to scale -10.
pub fn local_ensemble(seed: u64, count: usize) -> EnsembleSpec {
    EnsembleSpec::new(seed, count)
        .with_scales(-10, 0)
        .with_indices(0, 0)
}

/// The implicit-constant checks and the ensembles they are calibrated on.
pub fn calibration_plan(seed: u64, count: usize) -> Vec<(Check, EnsembleSpec)> {
    let mut plan = Vec::new();
    for s in [0.1, 0.25, 0.4] {
        plan.push((
            Check::Gns { s, bound: None },
            EnsembleSpec::new(seed, count),
        ));
    }
    for s in [0.6, 0.75, 0.9] {
        plan.push((
            Check::Algebra { s, bound: None },
            EnsembleSpec::new(seed, count),
        ));
    }
    for s in [0.6, 0.75, 0.9] {
        let check = Check::LocalSquare {
            s,
            interval: LOCAL_INTERVAL,
            bound: None,
        };
        plan.push((check, local_ensemble(seed, count)));
    }
    plan
}

pub fn calibrate(plan: &[(Check, EnsembleSpec)]) -> Result<Vec<CalibrationEntry>> {
    plan.iter()
        .map(|(c, spec)| {
            let v = run_check(c, &spec.generate()?)?;
            let bound = v.sup_ratio * CALIBRATION_MARGIN;
            Ok(CalibrationEntry {
                check: c.with_bound(bound),
                ensemble: *spec,
                observed_sup: v.sup_ratio,
                bound,
            })
        })
        .collect()
}

impl Check {
    /// Same inequality and parameters, ignoring any bound.
    pub fn same_as(&self, other: &Check) -> bool {
        self.without_bound() == other.without_bound()
    }

    fn without_bound(&self) -> Check {
        match *self {
            Check::Gns { s, .. } => Check::Gns { s, bound: None },
            Check::Algebra { s, .. } => Check::Algebra { s, bound: None },
            Check::LocalSquare { s, interval, .. } => Check::LocalSquare {
                s,
                interval,
                bound: None,
            },
            other => other,
        }
    }

    /// This check with its bound taken from `entries`, if one matches.
    pub fn calibrated(&self, entries: &[CalibrationEntry]) -> Check {
        entries
            .iter()
            .find(|e| e.check.same_as(self))
            .map_or(*self, |e| self.with_bound(e.bound))
    }
}
