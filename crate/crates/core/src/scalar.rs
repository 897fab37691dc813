//! Scalar abstraction shared by the probability and weight computations.
//!
//! Combinatorial quantities (STS weights, reception probabilities, message
//! charges, throughputs) are computed once over big integers and then handed
//! to a [`Scalar`]. [`Rational`](crate::Rational) keeps them exact so that
//! identities such as `sum of charges == round count` can be checked with
//! `==`; `f64`/`f32` are for plotting and Monte-Carlo comparisons.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

pub trait Scalar: Num + Clone + PartialOrd + Debug + Display {
    /// `num / den`; `den` must be nonzero.
    fn from_ratio(num: BigInt, den: BigInt) -> Self;

    fn from_count(n: u64) -> Self {
        Self::from_ratio(BigInt::from(n), BigInt::from(1u8))
    }

    fn approx(&self) -> f64;
}

impl Scalar for BigRational {
    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        BigRational::new(num, den)
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        BigRational::new(num, den).to_f64().unwrap_or(f64::NAN)
    }

    fn approx(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        BigRational::new(num, den).to_f32().unwrap_or(f32::NAN)
    }

    fn approx(&self) -> f64 {
        f64::from(*self)
    }
}

/// `n` choose `k` over big integers (zero when `k > n`).
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::from(0u8);
    }
    let k = k.min(n - k);
    let mut acc = BigInt::from(1u8);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::from(1u8), |acc, i| acc * i)
}

/// `ceil(log2(n))` for `n >= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    assert!(n >= 1, "ceil_log2 of zero");
    if n == 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Exact `a/b` as a [`BigRational`].
pub fn ratio(a: u64, b: u64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2), BigInt::from(6));
        assert_eq!(binomial(9, 3), BigInt::from(84));
        assert_eq!(binomial(3, 5), BigInt::from(0));
        assert_eq!(binomial(10, 0), BigInt::from(1));
    }

    #[test]
    fn binomial_large_no_overflow() {
        // Pascal's rule at n = 1024.
        assert_eq!(
            binomial(1024, 512),
            binomial(1023, 511) + binomial(1023, 512)
        );
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(32), 5);
        assert_eq!(ceil_log2(33), 6);
        assert_eq!(ceil_log2(320), 9);
    }

    #[test]
    fn scalar_conversions_agree() {
        let r: BigRational = Scalar::from_ratio(BigInt::from(2), BigInt::from(3));
        let f: f64 = Scalar::from_ratio(BigInt::from(2), BigInt::from(3));
        let g: f32 = Scalar::from_ratio(BigInt::from(2), BigInt::from(3));
        assert!((r.approx() - f).abs() < 1e-15);
        assert!((f64::from(g) - f).abs() < 1e-7);
    }
}
