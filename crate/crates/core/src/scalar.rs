//! Scalar abstractions shared by the numeric modules.
//!
//! Bessel evaluation and log-space weights are written against [`Real`]
//! (`f32` or `f64`). Combinatorial weights of currents and loop
//! configurations are products of rationals whenever the inverse
//! temperature is rational, so those routines are written against
//! [`Weight`], which is implemented by the floats and by exact
//! [`BigRational`](num_rational::BigRational).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating-point scalar used for transcendental evaluations.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field-like scalar used for weights that are exact products of rationals.
pub trait Weight: Clone + Num + PartialOrd + Debug + Send + Sync {
    fn from_ratio(num: u64, den: u64) -> Self;
    /// Converts a coupling or inverse temperature given as `f64`.
    ///
    /// For exact scalars the conversion is exact for every finite float.
    fn from_real(x: f64) -> Self;
    fn approx_f64(&self) -> f64;

    fn from_count(n: u64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn powu(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            exp >>= 1;
        }
        acc
    }
}

impl Weight for f64 {
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn approx_f64(&self) -> f64 {
        *self
    }
}

impl Weight for f32 {
    fn from_ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }
    fn from_real(x: f64) -> Self {
        x as f32
    }
    fn approx_f64(&self) -> f64 {
        *self as f64
    }
}

impl Weight for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_real(x: f64) -> Self {
        BigRational::from_float(x).expect("finite real")
    }
    fn approx_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// `n!` in the weight scalar.
pub fn factorial<W: Weight>(n: u32) -> W {
    (1..=n as u64).fold(W::one(), |acc, k| acc * W::from_count(k))
}

/// `ln n!`, exact summation for small `n` and Stirling's series beyond.
pub fn ln_factorial<T: Real>(n: u64) -> T {
    if n < 64 {
        let mut acc = T::zero();
        for k in 2..=n {
            acc = acc + T::from_u64(k).unwrap().ln();
        }
        return acc;
    }
    let x = T::from_u64(n).unwrap() + T::one();
    ln_gamma_large(x)
}

/// Stirling series for `ln Γ(x)`, accurate to double precision for `x ≥ 64`.
fn ln_gamma_large<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    let ln_2pi = T::lit(1.837_877_066_409_345_5);
    let inv = x.recip();
    let inv2 = inv * inv;
    let series = inv
        * (T::lit(1.0 / 12.0)
            - inv2 * (T::lit(1.0 / 360.0) - inv2 * (T::lit(1.0 / 1260.0) - inv2 * T::lit(1.0 / 1680.0))));
    (x - half) * x.ln() - x + half * ln_2pi + series
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_matches_exact_sum_across_switch() {
        for n in [0u64, 1, 5, 63, 64, 65, 100, 170] {
            let exact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
            let got: f64 = ln_factorial(n);
            assert!((got - exact).abs() <= 1e-12 * exact.max(1.0), "n={n}: {got} vs {exact}");
        }
    }

    #[test]
    fn factorial_exact_and_float_agree() {
        let exact: BigRational = factorial(20);
        let float: f64 = factorial(20);
        assert_eq!(exact.approx_f64(), float);
        assert_eq!(float, 2_432_902_008_176_640_000.0);
    }

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let mut s = CompensatedSum::<f64>::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn rational_from_real_is_exact() {
        let half = BigRational::from_real(0.5);
        assert_eq!(half, BigRational::from_ratio(1, 2));
        assert_eq!(BigRational::from_ratio(3, 4).powu(3), BigRational::from_ratio(27, 64));
    }
}
