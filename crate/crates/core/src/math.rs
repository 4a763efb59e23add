//! Float helpers shared by the whole crate.

/// `2^k` for an integer exponent, exact over the normal range.
pub fn pow2i(k: i32) -> f64 {
    if (-1022..=1023).contains(&k) {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        libm::exp2(f64::from(k))
    }
}

pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub fn exp2(x: f64) -> f64 {
    libm::exp2(x)
}

pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `|I|^p` for an interval of length `2^scale`.
/// Exact for integer and half-integer exponents `scale · p`.
pub fn measure_pow(scale: i32, p: f64) -> f64 {
    let e = f64::from(scale) * p;
    let twice = 2.0 * e;
    if twice == libm::round(twice) && twice.abs() < 4000.0 {
        let t = twice as i32;
        if t % 2 == 0 {
            return pow2i(t / 2);
        }
        return pow2i(t.div_euclid(2)) * core::f64::consts::SQRT_2;
    }
    libm::exp2(e)
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if abs(self.sum) >= abs(x) {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        acc.extend(iter);
        acc
    }
}

/// Shortest round-trip text for `x`, in exponent form outside
/// `[1e-5, 1e16)`. Negative zero prints as `0`.
pub fn format_float(x: f64) -> alloc::string::String {
    let a = abs(x);
    if x == 0.0 {
        alloc::string::String::from("0")
    } else if (1e-5..1e16).contains(&a) || !x.is_finite() {
        alloc::format!("{x}")
    } else {
        alloc::format!("{x:e}")
    }
}

/// Left-to-right summation from `+0.0`; std's `sum` starts from `-0.0`.
pub trait PlainSum: Iterator<Item = f64> + Sized {
    fn plain_sum(self) -> f64 {
        self.fold(0.0, |acc, x| acc + x)
    }
}

impl<I: Iterator<Item = f64>> PlainSum for I {}

/// Compensated sum of an iterator.
pub fn sum(iter: impl IntoIterator<Item = f64>) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}
