//! Extended-real values.
//!
//! Optimal values of player problems live in `[-inf, +inf]`: an
//! infeasible problem has value `+inf` (an infimum over an empty set)
//! and an unbounded one `-inf`. These are tagged values, not sentinel
//! floats, so arithmetic that would be meaningless (`+inf + -inf`)
//! fails loudly instead of producing a quiet NaN.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Panics on `Finite(NaN)`; construction sites must reject NaN.
    pub fn cmp_total(self, other: ExtReal) -> Ordering {
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a
                .partial_cmp(&b)
                .expect("ExtReal::Finite must not hold NaN"),
        }
    }

    /// Sum with extended-real semantics. `NegInf + PosInf` is an error.
    pub fn add(self, other: ExtReal) -> Result<ExtReal, String> {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
            (NegInf, PosInf) | (PosInf, NegInf) => {
                Err("sum of -inf and +inf is undefined".to_string())
            }
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
        }
    }

    pub fn sub(self, other: ExtReal) -> Result<ExtReal, String> {
        self.add(other.neg())
    }

    pub fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::Finite(v)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => write!(f, "+inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_spans_infinities() {
        assert_eq!(
            ExtReal::NegInf.cmp_total(ExtReal::Finite(-1e300)),
            Ordering::Less
        );
        assert_eq!(
            ExtReal::PosInf.cmp_total(ExtReal::Finite(1e300)),
            Ordering::Greater
        );
        assert_eq!(
            ExtReal::Finite(2.0).cmp_total(ExtReal::Finite(2.0)),
            Ordering::Equal
        );
    }

    #[test]
    fn add_rejects_opposite_infinities() {
        assert!(ExtReal::NegInf.add(ExtReal::PosInf).is_err());
        assert_eq!(
            ExtReal::PosInf.add(ExtReal::Finite(3.0)).unwrap(),
            ExtReal::PosInf
        );
        assert_eq!(
            ExtReal::Finite(1.5).add(ExtReal::Finite(2.5)).unwrap(),
            ExtReal::Finite(4.0)
        );
    }

    #[test]
    fn sub_through_negation() {
        assert_eq!(
            ExtReal::Finite(1.0).sub(ExtReal::NegInf).unwrap(),
            ExtReal::PosInf
        );
        assert!(ExtReal::PosInf.sub(ExtReal::PosInf).is_err());
    }
}
