// SPDX-License-Identifier: Apache-2.0

//! Runtime scalars and the semantics of every [`Opcode`].
//!
//! Integer arithmetic wraps (two's complement); float arithmetic is plain
//! IEEE-754 binary64 with no reassociation. The interpreter and the
//! circuit simulator both evaluate operators through [`eval`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::typeinfer::{LatticeType, Opcode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value")]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
}

impl Value {
    pub fn ty(self) -> LatticeType {
        match self {
            Value::Bool(_) => LatticeType::Bool,
            Value::Int(_) => LatticeType::Int64,
            Value::Float(_) => LatticeType::Float64,
        }
    }

    /// Bit pattern as an unsigned integer of the type's width.
    pub fn to_bits(self) -> u64 {
        match self {
            Value::Bool(b) => b as u64,
            Value::Int(i) => i as u64,
            Value::Float(f) => f.to_bits(),
        }
    }

    /// Exact equality; floats compare by bit pattern.
    pub fn bit_eq(self, other: Value) -> bool {
        self.ty() == other.ty() && self.to_bits() == other.to_bits()
    }

    /// Equality for differential checks: exact for integers and booleans,
    /// relative tolerance `rel` for floats.
    pub fn approx_eq(self, other: Value, rel: f64) -> bool {
        match (self, other) {
            (Value::Float(a), Value::Float(b)) => {
                if a == b || (a.is_nan() && b.is_nan()) {
                    true
                } else {
                    (a - b).abs() <= rel * a.abs().max(b.abs())
                }
            }
            _ => self.bit_eq(other),
        }
    }

    /// Parses `text` as a value of type `ty`.
    pub fn parse_as(text: &str, ty: LatticeType) -> Result<Value, String> {
        let text = text.trim();
        let bad = || format!("`{text}` is not a valid {ty}");
        match ty {
            LatticeType::Int64 => text.parse().map(Value::Int).map_err(|_| bad()),
            LatticeType::Float64 => text.parse().map(Value::Float).map_err(|_| bad()),
            LatticeType::Bool => text.parse().map(Value::Bool).map_err(|_| bad()),
            _ => Err(format!("cannot parse a value of type {ty}")),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
        }
    }
}

impl FromStr for Value {
    type Err = String;

    /// Infers the type from the literal's shape.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "true" || s == "false" {
            Value::parse_as(s, LatticeType::Bool)
        } else if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
            Value::parse_as(s, LatticeType::Float64)
        } else {
            Value::parse_as(s, LatticeType::Int64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("integer remainder by zero")]
    DivByZero,
    #[error("`{opcode}` applied to operands of the wrong type: {operands:?}")]
    OperandType {
        opcode: Opcode,
        operands: Vec<Value>,
    },
}

pub fn eval(opcode: Opcode, operands: &[Value]) -> Result<Value, EvalError> {
    use Value::{Bool as B, Float as F, Int as I};
    let bad = || EvalError::OperandType {
        opcode,
        operands: operands.to_vec(),
    };
    Ok(match (opcode, operands) {
        (Opcode::AddI64, [I(a), I(b)]) => I(a.wrapping_add(*b)),
        (Opcode::SubI64, [I(a), I(b)]) => I(a.wrapping_sub(*b)),
        (Opcode::MulI64, [I(a), I(b)]) => I(a.wrapping_mul(*b)),
        (Opcode::RemI64, [I(_), I(0)]) => return Err(EvalError::DivByZero),
        (Opcode::RemI64, [I(a), I(b)]) => I(a.wrapping_rem(*b)),
        (Opcode::NegI64, [I(a)]) => I(a.wrapping_neg()),
        (Opcode::CmpI64(k), [I(a), I(b)]) => B(k.holds(a, b)),
        (Opcode::AddF64, [F(a), F(b)]) => F(a + b),
        (Opcode::SubF64, [F(a), F(b)]) => F(a - b),
        (Opcode::MulF64, [F(a), F(b)]) => F(a * b),
        (Opcode::DivF64, [F(a), F(b)]) => F(a / b),
        (Opcode::NegF64, [F(a)]) => F(-a),
        (Opcode::CmpF64(k), [F(a), F(b)]) => B(k.holds(a, b)),
        (Opcode::AndBool, [B(a), B(b)]) => B(*a && *b),
        (Opcode::OrBool, [B(a), B(b)]) => B(*a || *b),
        (Opcode::NotBool, [B(a)]) => B(!a),
        (Opcode::CmpBool(k), [B(a), B(b)]) => B(k.holds(a, b)),
        (Opcode::SiToFp, [I(a)]) => F(*a as f64),
        (Opcode::Select(t), [B(c), a, b]) if a.ty() == t && b.ty() == t => {
            if *c {
                *a
            } else {
                *b
            }
        }
        _ => return Err(bad()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typeinfer::CmpKind;

    #[test]
    fn integer_ops_wrap() {
        assert_eq!(
            eval(Opcode::AddI64, &[Value::Int(i64::MAX), Value::Int(1)]).unwrap(),
            Value::Int(i64::MIN)
        );
        assert_eq!(
            eval(Opcode::MulI64, &[Value::Int(1 << 62), Value::Int(4)]).unwrap(),
            Value::Int(0)
        );
        assert_eq!(
            eval(Opcode::RemI64, &[Value::Int(i64::MIN), Value::Int(-1)]).unwrap(),
            Value::Int(0)
        );
        assert_eq!(
            eval(Opcode::RemI64, &[Value::Int(-7), Value::Int(3)]).unwrap(),
            Value::Int(-1)
        );
        assert_eq!(
            eval(Opcode::RemI64, &[Value::Int(1), Value::Int(0)]),
            Err(EvalError::DivByZero)
        );
    }

    #[test]
    fn comparisons_and_select() {
        assert_eq!(
            eval(
                Opcode::CmpF64(CmpKind::Le),
                &[Value::Float(1.0), Value::Float(1.0)]
            )
            .unwrap(),
            Value::Bool(true)
        );
        assert_eq!(
            eval(
                Opcode::Select(LatticeType::Int64),
                &[Value::Bool(false), Value::Int(1), Value::Int(2)]
            )
            .unwrap(),
            Value::Int(2)
        );
        assert!(eval(Opcode::AddI64, &[Value::Int(1), Value::Float(1.0)]).is_err());
    }

    #[test]
    fn parsing_and_tolerance() {
        assert_eq!("2".parse::<Value>().unwrap(), Value::Int(2));
        assert_eq!("2.5".parse::<Value>().unwrap(), Value::Float(2.5));
        assert_eq!("true".parse::<Value>().unwrap(), Value::Bool(true));
        assert_eq!(
            Value::parse_as("1", LatticeType::Float64).unwrap(),
            Value::Float(1.0)
        );
        assert!(Value::Float(1.0).approx_eq(Value::Float(1.0 + 1e-12), 1e-9));
        assert!(!Value::Float(1.0).approx_eq(Value::Float(1.001), 1e-9));
        assert!(!Value::Int(1).approx_eq(Value::Float(1.0), 1e-9));
    }
}
