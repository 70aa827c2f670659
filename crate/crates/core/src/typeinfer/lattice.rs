// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::frontend::TypeName;

/// Flat type lattice: `Bottom < {Bool, Int64, Float64} < Top`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LatticeType {
    Bottom,
    Bool,
    Int64,
    Float64,
    Top,
}

impl LatticeType {
    pub const CONCRETE: [LatticeType; 3] =
        [LatticeType::Bool, LatticeType::Int64, LatticeType::Float64];
    pub const ALL: [LatticeType; 5] = [
        LatticeType::Bottom,
        LatticeType::Bool,
        LatticeType::Int64,
        LatticeType::Float64,
        LatticeType::Top,
    ];

    /// Number of elements on the longest chain (Bottom, concrete, Top).
    pub const HEIGHT: usize = 3;

    /// Least upper bound. Two different concrete types join to `Top`;
    /// there is no numeric widening at control merges.
    pub fn join(self, other: LatticeType) -> LatticeType {
        use LatticeType::*;
        match (self, other) {
            (Bottom, t) | (t, Bottom) => t,
            (a, b) if a == b => a,
            _ => Top,
        }
    }

    /// Lattice order `self ⊑ other`.
    pub fn le(self, other: LatticeType) -> bool {
        self.join(other) == other
    }

    pub fn is_concrete(self) -> bool {
        matches!(
            self,
            LatticeType::Bool | LatticeType::Int64 | LatticeType::Float64
        )
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, LatticeType::Int64 | LatticeType::Float64)
    }

    /// Hardware data width in bits.
    pub fn width(self) -> u32 {
        match self {
            LatticeType::Bool => 1,
            LatticeType::Int64 | LatticeType::Float64 => 64,
            LatticeType::Bottom | LatticeType::Top => 0,
        }
    }

    /// Short name used in IR dumps and CLI signatures.
    pub fn short_name(self) -> &'static str {
        match self {
            LatticeType::Bottom => "bottom",
            LatticeType::Bool => "bool",
            LatticeType::Int64 => "i64",
            LatticeType::Float64 => "f64",
            LatticeType::Top => "top",
        }
    }
}

impl From<TypeName> for LatticeType {
    fn from(t: TypeName) -> Self {
        match t {
            TypeName::Int64 => LatticeType::Int64,
            TypeName::Float64 => LatticeType::Float64,
            TypeName::Bool => LatticeType::Bool,
        }
    }
}

impl fmt::Display for LatticeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LatticeType::Bottom => "Bottom",
            LatticeType::Bool => "Bool",
            LatticeType::Int64 => "Int64",
            LatticeType::Float64 => "Float64",
            LatticeType::Top => "Top",
        };
        f.write_str(s)
    }
}

impl FromStr for LatticeType {
    type Err = String;

    /// Accepts `i64`/`Int64`, `f64`/`Float64` and `bool`/`Bool`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "i64" | "Int64" | "int" => Ok(LatticeType::Int64),
            "f64" | "Float64" | "float" => Ok(LatticeType::Float64),
            "bool" | "Bool" => Ok(LatticeType::Bool),
            other => Err(format!(
                "unknown type `{other}` (expected i64, f64 or bool)"
            )),
        }
    }
}

/// Parses a comma-separated signature such as `i64,f64`.
pub fn parse_signature(text: &str) -> Result<Vec<LatticeType>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(str::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn any_type() -> impl Strategy<Value = LatticeType> {
        prop::sample::select(LatticeType::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn join_is_a_semilattice(a in any_type(), b in any_type(), c in any_type()) {
            prop_assert_eq!(a.join(a), a);
            prop_assert_eq!(a.join(b), b.join(a));
            prop_assert_eq!(a.join(b).join(c), a.join(b.join(c)));
            prop_assert!(a.le(a.join(b)));
            prop_assert!(LatticeType::Bottom.le(a));
            prop_assert!(a.le(LatticeType::Top));
        }
    }

    #[test]
    fn distinct_concrete_types_join_to_top() {
        for a in LatticeType::CONCRETE {
            for b in LatticeType::CONCRETE {
                let expected = if a == b { a } else { LatticeType::Top };
                assert_eq!(a.join(b), expected);
            }
        }
    }

    #[test]
    fn signatures() {
        assert_eq!(
            parse_signature("i64, f64,bool").unwrap(),
            vec![LatticeType::Int64, LatticeType::Float64, LatticeType::Bool]
        );
        assert!(parse_signature("i32").is_err());
        assert!(parse_signature("").unwrap().is_empty());
    }
}
