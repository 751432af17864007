//! Exact modelled time.
//!
//! Every Hockney parameter is an `f64`, i.e. a dyadic rational, and every cost
//! formula only adds, multiplies and halves such values with integers. Keeping
//! times as `mantissa * 2^exp` makes the simulated and closed-form routes agree
//! exactly instead of to within rounding.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Mul};

use num_bigint::{BigInt, Sign};
use num_traits::{ToPrimitive, Zero};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ModelTime {
    mantissa: BigInt,
    exp: i64,
}

impl ModelTime {
    pub fn zero() -> Self {
        Self {
            mantissa: BigInt::zero(),
            exp: 0,
        }
    }

    fn normalized(mantissa: BigInt, exp: i64) -> Self {
        if mantissa.is_zero() {
            return Self::zero();
        }
        let tz = mantissa.trailing_zeros().unwrap_or(0);
        Self {
            mantissa: mantissa >> tz,
            exp: exp + tz as i64,
        }
    }

    /// Exact value of a finite `f64`.
    pub fn from_f64(value: f64) -> Self {
        assert!(value.is_finite(), "model time must be finite, got {value}");
        if value == 0.0 {
            return Self::zero();
        }
        let bits = value.to_bits();
        let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if raw_exp == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), raw_exp - 1075)
        };
        Self::normalized(BigInt::from(mantissa) * sign, exp)
    }

    pub fn from_int(value: u64) -> Self {
        Self::normalized(BigInt::from(value), 0)
    }

    /// `self / 2`, exact.
    pub fn halved(&self) -> Self {
        if self.mantissa.is_zero() {
            return Self::zero();
        }
        Self {
            mantissa: self.mantissa.clone(),
            exp: self.exp - 1,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    /// Nearest `f64` (ties to even), barring results in the subnormal range.
    pub fn to_f64(&self) -> f64 {
        if self.mantissa.is_zero() {
            return 0.0;
        }
        let magnitude = self.mantissa.magnitude();
        let shift = magnitude.bits().saturating_sub(64);
        let head = (magnitude >> shift).to_u64().expect("at most 64 bits");
        // Fold the discarded tail into a sticky bit; u64 -> f64 then rounds correctly.
        let sticky = u64::from(shift > 0 && magnitude.trailing_zeros().unwrap_or(0) < shift);
        let value = scale((head | sticky) as f64, self.exp + shift as i64);
        if self.mantissa.sign() == Sign::Minus {
            -value
        } else {
            value
        }
    }
}

fn scale(mut value: f64, mut exp: i64) -> f64 {
    while exp > 1000 {
        value *= 2f64.powi(1000);
        exp -= 1000;
    }
    while exp < -1000 {
        value *= 2f64.powi(-1000);
        exp += 1000;
    }
    value * 2f64.powi(exp as i32)
}

impl Default for ModelTime {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for &ModelTime {
    type Output = ModelTime;

    fn add(self, rhs: &ModelTime) -> ModelTime {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let exp = self.exp.min(rhs.exp);
        let a = &self.mantissa << (self.exp - exp) as u64;
        let b = &rhs.mantissa << (rhs.exp - exp) as u64;
        ModelTime::normalized(a + b, exp)
    }
}

impl Add for ModelTime {
    type Output = ModelTime;

    fn add(self, rhs: ModelTime) -> ModelTime {
        &self + &rhs
    }
}

impl Mul for &ModelTime {
    type Output = ModelTime;

    fn mul(self, rhs: &ModelTime) -> ModelTime {
        ModelTime::normalized(&self.mantissa * &rhs.mantissa, self.exp + rhs.exp)
    }
}

impl Mul<u64> for &ModelTime {
    type Output = ModelTime;

    fn mul(self, rhs: u64) -> ModelTime {
        ModelTime::normalized(&self.mantissa * BigInt::from(rhs), self.exp)
    }
}

impl Sum for ModelTime {
    fn sum<I: Iterator<Item = ModelTime>>(iter: I) -> Self {
        iter.fold(ModelTime::zero(), |acc, t| &acc + &t)
    }
}

impl<'a> Sum<&'a ModelTime> for ModelTime {
    fn sum<I: Iterator<Item = &'a ModelTime>>(iter: I) -> Self {
        iter.fold(ModelTime::zero(), |acc, t| &acc + t)
    }
}

impl Ord for ModelTime {
    fn cmp(&self, other: &Self) -> Ordering {
        let exp = self.exp.min(other.exp);
        let a = &self.mantissa << (self.exp - exp) as u64;
        let b = &other.mantissa << (other.exp - exp) as u64;
        a.cmp(&b)
    }
}

impl PartialOrd for ModelTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ModelTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}*2^{})", self.to_f64(), self.mantissa, self.exp)
    }
}

impl fmt::Display for ModelTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}
