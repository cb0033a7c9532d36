//! Exact scalar abstraction.
//!
//! Every time instant, work amount and rate in the crate is a value of some
//! [`Scalar`]. The simulator decides events by exact equality (a job emits
//! when `y = alpha * p`, a level merge happens when two progress values meet),
//! so only exact rational types implement the trait. Any `num_rational::Ratio`
//! over a signed integer qualifies; [`crate::Rational`] (arbitrary precision)
//! is the default used throughout the CLI.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num + Signed + Clone + Ord + Debug + Display + Send + Sync + 'static
{
    fn from_int(v: i64) -> Self;

    /// `num / den`; panics on a zero denominator.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Parses `"num/den"` or a bare integer.
    fn parse_ratio(s: &str) -> Option<Self>;

    /// Canonical `"num/den"` form; integers keep the `/1`.
    fn to_ratio_string(&self) -> String;

    fn floor_int(&self) -> Self;

    fn to_i64(&self) -> Option<i64>;

    /// Numerator and denominator in lowest terms, if both fit in `i64`.
    fn to_i64_pair(&self) -> Option<(i64, i64)>;

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl<I> Scalar for Ratio<I>
where
    I: Integer
        + Signed
        + Clone
        + Debug
        + Display
        + FromStr
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static,
{
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(I::from_i64(v).expect("integer out of range for scalar"))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Ratio::new(
            I::from_i64(num).expect("integer out of range for scalar"),
            I::from_i64(den).expect("integer out of range for scalar"),
        )
    }

    fn to_f64(&self) -> f64 {
        let n = self.numer().to_f64().unwrap_or(f64::NAN);
        let d = self.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    }

    fn parse_ratio(s: &str) -> Option<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: I = n.trim().parse().ok()?;
                let d: I = d.trim().parse().ok()?;
                if d.is_zero() {
                    return None;
                }
                Some(Ratio::new(n, d))
            }
            None => s.parse::<I>().ok().map(Ratio::from_integer),
        }
    }

    fn to_ratio_string(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn floor_int(&self) -> Self {
        self.floor()
    }

    fn to_i64(&self) -> Option<i64> {
        if self.denom().is_one() {
            self.numer().to_i64()
        } else {
            None
        }
    }

    fn to_i64_pair(&self) -> Option<(i64, i64)> {
        Some((self.numer().to_i64()?, self.denom().to_i64()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn parse_and_format() {
        let x = Rational::parse_ratio("6/4").unwrap();
        assert_eq!(x.to_ratio_string(), "3/2");
        assert_eq!(Rational::parse_ratio("8").unwrap().to_ratio_string(), "8/1");
        assert_eq!(Rational::parse_ratio(" -3 / 9 ").unwrap(), Rational::from_ratio(-1, 3));
        assert!(Rational::parse_ratio("1/0").is_none());
        assert!(Rational::parse_ratio("1.5").is_none());
    }

    #[test]
    fn small_ratio_agrees() {
        let a = Ratio::<i64>::parse_ratio("7/21").unwrap();
        assert_eq!(a.to_ratio_string(), "1/3");
        assert_eq!(a.floor_int(), Ratio::from_int(0));
        assert!((Scalar::to_f64(&a) - 1.0 / 3.0).abs() < 1e-12);
    }
}
