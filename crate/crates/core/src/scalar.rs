//! Scalar abstraction so the combinatorial kernels run on floats or exact rationals.
//!
//! The incentive checks, the similarity order, and the two-player closed forms are
//! all rational-arithmetic computations once the pivotal probabilities are given.
//! Keeping them generic lets boundary cases be resolved exactly with [`Exact`]
//! while everyday work stays on `f64`.

use num::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Exact rational scalar. Order and validation tolerances are zero, so every
/// comparison is sharp.
pub type Exact = BigRational;

pub trait Scalar: Clone + PartialOrd + Num + Signed + std::fmt::Debug + 'static {
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;

    /// Slack allowed when checking that masses form a distribution.
    fn validation_tol() -> Self;

    /// Slack allowed in order comparisons and incentive constraints.
    fn order_tol() -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn validation_tol() -> Self {
        1e-12
    }

    fn order_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn validation_tol() -> Self {
        1e-5
    }

    fn order_tol() -> Self {
        1e-4
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn validation_tol() -> Self {
        num_traits::Zero::zero()
    }

    fn order_tol() -> Self {
        num_traits::Zero::zero()
    }
}

/// Closest rational to a float, for promoting `f64` data into exact mode.
/// Finite floats are dyadic rationals, so this is lossless.
pub fn exact_from_f64(x: f64) -> Option<Exact> {
    BigRational::from_f64(x)
}

/// Parses a decimal literal such as `0.25`, `-3`, or `1.2e-3` into an exact rational.
pub fn exact_from_decimal(s: &str) -> Option<Exact> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().ok()?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    let neg = int_part.starts_with('-');
    let int_digits = int_part.trim_start_matches(['-', '+']);
    if !int_digits.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
        || (int_digits.is_empty() && frac_part.is_empty())
    {
        return None;
    }
    let digits = format!("{int_digits}{frac_part}");
    let numer: num::BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i64;
    let ten = num::BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num::pow::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num::pow::pow(ten, (-scale) as usize))
    };
    Some(if neg { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(
            exact_from_decimal("0.25").unwrap(),
            Exact::from_ratio(1, 4)
        );
        assert_eq!(
            exact_from_decimal("1.2e-3").unwrap(),
            Exact::from_ratio(3, 2500)
        );
        assert_eq!(exact_from_decimal("-3").unwrap(), Exact::from_ratio(-3, 1));
        assert_eq!(exact_from_decimal("0.009").unwrap(), Exact::from_ratio(9, 1000));
        assert!(exact_from_decimal("abc").is_none());
    }

    #[test]
    fn float_promotion_is_lossless() {
        let x = 0.1f64;
        let r = exact_from_f64(x).unwrap();
        assert_eq!(Scalar::to_f64(&r), x);
    }
}
