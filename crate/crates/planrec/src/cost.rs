//! Exact action and plan costs.
//!
//! Costs are rationals rather than floats so that the recognition verdict,
//! an equality test between two optimal costs, cannot be corrupted by
//! rounding. Zero costs are first-class: compiled library problems set
//! every action cost to zero and the planner must cope.

use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative exact cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cost(Rational64);

impl Cost {
    pub const ZERO: Cost = Cost(Rational64::new_raw(0, 1));
    pub const ONE: Cost = Cost(Rational64::new_raw(1, 1));

    pub fn from_int(n: i64) -> Cost {
        Cost(Rational64::from_integer(n))
    }

    pub fn new(numer: i64, denom: i64) -> Cost {
        Cost(Rational64::new(numer, denom))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn as_rational(&self) -> Rational64 {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, Add::add)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

// Wire format: plain JSON numbers. Integers are exact; fractional inputs go
// through the closest-rational approximation of the printed decimal.
impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            serializer.serialize_i64(*self.0.numer())
        } else {
            serializer.serialize_f64(self.to_f64())
        }
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Cost, D::Error> {
        let v = serde_json::Number::deserialize(deserializer)?;
        if let Some(n) = v.as_i64() {
            return Ok(Cost::from_int(n));
        }
        let f = v
            .as_f64()
            .ok_or_else(|| D::Error::custom("cost out of range"))?;
        Rational64::approximate_float(f)
            .map(Cost)
            .ok_or_else(|| D::Error::custom("cost not representable as a rational"))
    }
}

/// A cost extended with infinity, used for heuristic values of states from
/// which the goal is unreachable in the delete relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtCost {
    Finite(Cost),
    Infinite,
}

impl ExtCost {
    pub const ZERO: ExtCost = ExtCost::Finite(Cost::ZERO);

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtCost::Finite(_))
    }

    pub fn finite(&self) -> Option<Cost> {
        match self {
            ExtCost::Finite(c) => Some(*c),
            ExtCost::Infinite => None,
        }
    }
}

impl Add for ExtCost {
    type Output = ExtCost;
    fn add(self, rhs: ExtCost) -> ExtCost {
        match (self, rhs) {
            (ExtCost::Finite(a), ExtCost::Finite(b)) => ExtCost::Finite(a + b),
            _ => ExtCost::Infinite,
        }
    }
}

impl Add<Cost> for ExtCost {
    type Output = ExtCost;
    fn add(self, rhs: Cost) -> ExtCost {
        self + ExtCost::Finite(rhs)
    }
}

impl From<Cost> for ExtCost {
    fn from(c: Cost) -> ExtCost {
        ExtCost::Finite(c)
    }
}

impl fmt::Display for ExtCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtCost::Finite(c) => c.fmt(f),
            ExtCost::Infinite => write!(f, "inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_exact() {
        assert!(Cost::new(1, 3) < Cost::new(1, 2));
        assert_eq!(Cost::new(2, 6), Cost::new(1, 3));
        assert_eq!(Cost::new(1, 3) + Cost::new(2, 3), Cost::ONE);
    }

    #[test]
    fn ext_cost_absorbs_infinity() {
        assert_eq!(ExtCost::Infinite + Cost::ONE, ExtCost::Infinite);
        assert!(ExtCost::Finite(Cost::from_int(1_000_000)) < ExtCost::Infinite);
    }

    #[test]
    fn json_round_trip_integer() {
        let c: Cost = serde_json::from_str("3").unwrap();
        assert_eq!(c, Cost::from_int(3));
        assert_eq!(serde_json::to_string(&c).unwrap(), "3");
    }
}
