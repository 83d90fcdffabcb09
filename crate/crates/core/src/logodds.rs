//! Fixed-point natural logarithms.
//!
//! Scores are products of up to `m + 1` probability ratios. They are carried as
//! sums of logarithms quantised to multiples of 2^-44, so sums are exact integer
//! additions: a score reached by a one-bit incremental update, by joining partial
//! products, or by a full rescan is bit-for-bit the same value. The quantisation
//! error is below 3e-14 per factor.

use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

const SCALE: f64 = (1u64 << 44) as f64;

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct LogOdds(i64);

impl LogOdds {
    pub const ZERO: LogOdds = LogOdds(0);

    /// Quantises a natural logarithm. Panics on non-finite or absurdly large input.
    pub fn from_ln(x: f64) -> Self {
        assert!(x.is_finite() && x.abs() < 1e5, "log value {x} out of range");
        LogOdds((x * SCALE).round() as i64)
    }

    pub fn ln(self) -> f64 {
        self.0 as f64 / SCALE
    }

    pub fn raw(self) -> i64 {
        self.0
    }

    /// Splits the value into `parts` pieces that sum back exactly; the remainder goes to the first piece.
    pub fn split(self, parts: usize) -> Vec<LogOdds> {
        let parts_i = parts as i64;
        let base = self.0.div_euclid(parts_i);
        let rem = self.0 - base * parts_i;
        (0..parts)
            .map(|p| LogOdds(if p == 0 { base + rem } else { base }))
            .collect()
    }
}

/// `1 / (1 + e^{-u})`, evaluated without overflow for any `u`.
#[inline]
pub fn logistic(u: LogOdds) -> f64 {
    let x = u.ln();
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Add for LogOdds {
    type Output = LogOdds;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        LogOdds(self.0 + rhs.0)
    }
}

impl Sub for LogOdds {
    type Output = LogOdds;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        LogOdds(self.0 - rhs.0)
    }
}

impl AddAssign for LogOdds {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl SubAssign for LogOdds {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.0 -= rhs.0;
    }
}

impl Neg for LogOdds {
    type Output = LogOdds;
    #[inline]
    fn neg(self) -> Self {
        LogOdds(-self.0)
    }
}

impl Sum for LogOdds {
    fn sum<I: Iterator<Item = LogOdds>>(iter: I) -> Self {
        iter.fold(LogOdds::ZERO, Add::add)
    }
}
