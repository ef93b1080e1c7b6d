//! The exact rational scalar path.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{rational_valuation, PAdic, PivotQuality, Ring, Scalar, Val};
use crate::error::{Error, Result};

/// Exact rational scalars.
pub type Rat = BigRational;

impl Ring for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn from_rational_like(&self, q: &BigRational) -> Self {
        q.clone()
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn try_inverse(&self) -> Result<Self> {
        if self.is_zero() {
            Err(Error::NonUnit {
                annihilator: "1".into(),
            })
        } else {
            Ok(self.recip())
        }
    }
    fn valuation(&self, p: u32) -> Val {
        rational_valuation(self, p)
    }
    fn is_unit(&self) -> bool {
        !self.is_zero()
    }
    fn from_int_like(&self, n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}

impl Scalar for BigRational {
    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }
    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }
    fn from_padic(x: &PAdic) -> Option<Self> {
        x.exact_value().cloned()
    }
    fn to_padic(&self, _p: u32, _prec: u32) -> PAdic {
        PAdic::Exact(self.clone())
    }
    fn pivot_quality(&self, _p: u32) -> PivotQuality {
        if self.is_zero() {
            PivotQuality::Zero
        } else {
            PivotQuality::Pivot {
                score: (self.numer().bits() + self.denom().bits()) as i64,
                ambiguous: false,
            }
        }
    }
}
