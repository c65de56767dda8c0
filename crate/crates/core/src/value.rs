//! Scalar-or-vector payload used for random-variable values, increments and
//! selected points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real scalar or a real vector. Vector payloads carry their own length so
/// arity checks stay explicit at the call site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Value {
    pub fn scalar(x: f64) -> Self {
        Value::Scalar(x)
    }

    pub fn vector(v: Vec<f64>) -> Self {
        Value::Vector(v)
    }

    /// Number of coordinates: 1 for scalars, the length for vectors.
    pub fn dim(&self) -> usize {
        match self {
            Value::Scalar(_) => 1,
            Value::Vector(v) => v.len(),
        }
    }

    pub fn as_scalar(&self) -> Result<f64> {
        match self {
            Value::Scalar(x) => Ok(*x),
            Value::Vector(v) => Err(Error::ArityMismatch {
                expected: 1,
                got: v.len(),
            }),
        }
    }

    /// View the payload as a coordinate slice regardless of kind.
    pub fn coords(&self) -> &[f64] {
        match self {
            Value::Scalar(x) => std::slice::from_ref(x),
            Value::Vector(v) => v.as_slice(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    /// Bit-exact equality, the comparison used for level sets and atoms.
    pub fn bits_eq(&self, other: &Value) -> bool {
        let a = self.coords();
        let b = other.coords();
        a.len() == b.len()
            && matches!(self, Value::Scalar(_)) == matches!(other, Value::Scalar(_))
            && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
    }

    /// Bit pattern of the payload, usable as an exact grouping key.
    pub fn bit_key(&self) -> Vec<u64> {
        self.coords().iter().map(|c| c.to_bits()).collect()
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Scalar(x)
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::Vector(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coords_view() {
        assert_eq!(Value::scalar(2.0).coords(), &[2.0]);
        assert_eq!(Value::vector(vec![1.0, 2.0]).coords(), &[1.0, 2.0]);
        assert_eq!(Value::vector(vec![1.0, 2.0]).dim(), 2);
    }

    #[test]
    fn bit_equality_distinguishes_zero_signs() {
        assert!(Value::scalar(1.5).bits_eq(&Value::scalar(1.5)));
        assert!(!Value::scalar(0.0).bits_eq(&Value::scalar(-0.0)));
        assert!(!Value::scalar(1.0).bits_eq(&Value::vector(vec![1.0])));
    }

    #[test]
    fn scalar_extraction() {
        assert_eq!(Value::scalar(3.0).as_scalar().unwrap(), 3.0);
        assert!(Value::vector(vec![1.0, 2.0]).as_scalar().is_err());
    }
}
