//! Scalar abstractions shared by every numeric module.
//!
//! Floating-point math (channels, rates, quadrature, energy) is generic over
//! [`Real`], implemented for `f32` and `f64`. Insertion-loss bookkeeping is
//! generic over [`LossScalar`], which additionally admits the exact rational
//! type [`Exact`] so switch-fabric tables can be compared without rounding.

use std::fmt::Debug;

use nalgebra::RealField;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Exact rational scalar used for loss tables and rank-set probabilities.
pub type Exact = Ratio<i64>;

/// Floating point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Converts a `T` value into `f64`.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Decibels to linear power ratio, `10^(db/10)`.
#[inline]
pub fn db_to_linear<T: Real>(db: T) -> T {
    real::<T>(10.0).powf(db / real(10.0))
}

/// Linear power ratio to decibels.
#[inline]
pub fn linear_to_db<T: Real>(lin: T) -> T {
    real::<T>(10.0) * lin.log10()
}

/// dBm to watts.
#[inline]
pub fn dbm_to_watts<T: Real>(dbm: T) -> T {
    db_to_linear(dbm - real(30.0))
}

/// Scalar used to accumulate insertion losses in dB.
///
/// Only addition, integer scaling and ordering are needed, so exact
/// rationals qualify alongside floats.
pub trait LossScalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    /// Closest representable value of a dB figure read from a catalog.
    fn from_db(db: f64) -> Option<Self>;

    fn to_db(self) -> f64;

    /// Two losses closer than this are treated as equal when ranking designs.
    fn tie_tolerance() -> Self;

    fn from_count(count: u32) -> Self;
}

impl LossScalar for f64 {
    fn from_db(db: f64) -> Option<Self> {
        db.is_finite().then_some(db)
    }
    fn to_db(self) -> f64 {
        self
    }
    fn tie_tolerance() -> Self {
        1e-9
    }
    fn from_count(count: u32) -> Self {
        f64::from(count)
    }
}

impl LossScalar for f32 {
    fn from_db(db: f64) -> Option<Self> {
        db.is_finite().then_some(db as f32)
    }
    fn to_db(self) -> f64 {
        f64::from(self)
    }
    fn tie_tolerance() -> Self {
        1e-4
    }
    fn from_count(count: u32) -> Self {
        count as f32
    }
}

impl LossScalar for Exact {
    fn from_db(db: f64) -> Option<Self> {
        if !db.is_finite() {
            return None;
        }
        // Catalog values are quoted to a few decimals; recover the intended
        // fraction instead of the binary expansion of the float.
        let scaled = (db * 1e6).round();
        if scaled.abs() > 9.0e15 {
            return None;
        }
        Some(Ratio::new(scaled as i64, 1_000_000))
    }
    fn to_db(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn tie_tolerance() -> Self {
        Ratio::from_integer(0)
    }
    fn from_count(count: u32) -> Self {
        Ratio::from_integer(i64::from(count))
    }
}

/// Neumaier-compensated running sum; the order of `add` calls is the only
/// thing that determines the result.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanStderr {
    /// Two-pass estimate over `samples` in the given order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, count };
        }
        let mut acc = CompensatedSum::default();
        samples.iter().for_each(|&x| acc.add(x));
        let mean = acc.value() / count as f64;
        if count == 1 {
            return Self { mean, stderr: 0.0, count };
        }
        let mut sq = CompensatedSum::default();
        samples.iter().for_each(|&x| sq.add((x - mean) * (x - mean)));
        let var = sq.value() / (count - 1) as f64;
        Self { mean, stderr: (var / count as f64).sqrt(), count }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_conversions() {
        assert!((db_to_linear(10.0_f64) - 10.0).abs() < 1e-12);
        assert!((db_to_linear(0.5_f64) - 1.122_018_454).abs() < 1e-9);
        assert!((linear_to_db(100.0_f64) - 20.0).abs() < 1e-12);
        assert!((dbm_to_watts(46.0_f64) - 39.810_717_055).abs() < 1e-8);
        assert!((db_to_linear(3.0_f32) - 1.995_262).abs() < 1e-5);
    }

    #[test]
    fn exact_losses_from_catalog_decimals() {
        assert_eq!(Exact::from_db(0.45).unwrap(), Ratio::new(9, 20));
        assert_eq!(Exact::from_db(0.25).unwrap(), Ratio::new(1, 4));
        assert!(Exact::from_db(f64::NAN).is_none());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::default();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-15).abs() < 1e-30);
    }

    #[test]
    fn mean_stderr_matches_closed_form() {
        let s = MeanStderr::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        // sample variance 5/3, stderr sqrt(5/12)
        assert!((s.stderr - (5.0_f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanStderr::from_samples(&[7.0]).stderr, 0.0);
    }
}
