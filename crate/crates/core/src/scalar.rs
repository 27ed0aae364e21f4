//! Probability scalars.
//!
//! Distributions and distances are generic over [`Probability`], implemented
//! for `f32`, `f64` and the exact rationals [`Rational64`] / [`Rational128`].
//! Dyadic probabilities (flat sources over `2^k` strings, uniform seeds) stay
//! exact under the rational types, which makes them useful as oracles for
//! the floating-point paths.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub type Rational64 = Ratio<i64>;
pub type Rational128 = Ratio<i128>;

pub trait Probability:
    Copy + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Absolute tolerance used when checking that weights sum to one.
    fn tolerance() -> Self;

    fn ratio(num: u64, den: u64) -> Self {
        Self::from_u64(num).expect("numerator fits") / Self::from_u64(den).expect("denominator fits")
    }

    /// `2^-bits`.
    fn pow2_inv(bits: u32) -> Self {
        let mut v = Self::one();
        let half = Self::ratio(1, 2);
        for _ in 0..bits {
            v = v * half;
        }
        v
    }

    fn half() -> Self {
        Self::ratio(1, 2)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Parses `"a/b"` or a decimal literal.
    fn parse_prob(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let a: u64 = a.trim().parse().ok()?;
            let b: u64 = b.trim().parse().ok()?;
            if b == 0 {
                return None;
            }
            Some(Self::ratio(a, b))
        } else {
            Self::from_f64(s.parse::<f64>().ok()?)
        }
    }

    fn approx_eq(self, other: Self) -> bool {
        (self - other).abs() <= Self::tolerance()
    }
}

impl Probability for f64 {
    fn tolerance() -> Self {
        2f64.powi(-40)
    }
    fn pow2_inv(bits: u32) -> Self {
        2f64.powi(-(bits as i32))
    }
}

impl Probability for f32 {
    fn tolerance() -> Self {
        1e-5
    }
    fn pow2_inv(bits: u32) -> Self {
        2f32.powi(-(bits as i32))
    }
}

impl Probability for Rational64 {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }
    fn pow2_inv(bits: u32) -> Self {
        assert!(bits < 63, "2^-{bits} does not fit a 64-bit rational");
        Ratio::new(1, 1i64 << bits)
    }
}

impl Probability for Rational128 {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }
    fn pow2_inv(bits: u32) -> Self {
        assert!(bits < 127, "2^-{bits} does not fit a 128-bit rational");
        Ratio::new(1, 1i128 << bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_inv_agrees_across_scalars() {
        for bits in 0..20 {
            let f = <f64 as Probability>::pow2_inv(bits);
            let r = <Rational128 as Probability>::pow2_inv(bits);
            assert_eq!(r.to_f64().unwrap(), f);
        }
    }

    #[test]
    fn parse_rational_and_decimal() {
        assert_eq!(Rational64::parse_prob("1/4"), Some(Ratio::new(1, 4)));
        assert_eq!(f64::parse_prob("0.25"), Some(0.25));
        assert_eq!(f64::parse_prob("3/4"), Some(0.75));
        assert_eq!(f64::parse_prob("1/0"), None);
    }
}
