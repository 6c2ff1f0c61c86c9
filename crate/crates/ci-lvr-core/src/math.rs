//! Thin `libm` wrappers plus compensated-summation helpers.
//!
//! Everything routes through `libm` so results are identical with and
//! without the `std` feature.

pub use libm::{cos, exp, expm1, fabs, log as ln, log1p as ln_1p, sqrt};

/// `x^y` for `x > 0` computed as `exp(y·ln x)`, which keeps negative
/// non-integer exponents well defined.
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    exp(y * ln(x))
}

pub const TWO_PI: f64 = core::f64::consts::TAU;

/// Neumaier-compensated running sum. Reductions built on it are
/// order-dependent only at the level of the compensation term, i.e. far
/// below the tolerances used anywhere in this crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn sum(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.total()
}

pub fn mean(xs: &[f64]) -> f64 {
    sum(xs) / xs.len() as f64
}

/// Unbiased (n−1) sample variance.
pub fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    for &x in xs {
        let d = x - mean;
        acc.add(d * d);
    }
    acc.total() / (xs.len() - 1) as f64
}

/// Mean of |x − center|.
pub fn mean_abs_dev(xs: &[f64], center: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add((x - center).abs());
    }
    acc.total() / xs.len() as f64
}

/// Mean of (x − center)²; the second moment about an arbitrary center.
pub fn mean_sq_dev(xs: &[f64], center: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        let d = x - center;
        acc.add(d * d);
    }
    acc.total() / xs.len() as f64
}
