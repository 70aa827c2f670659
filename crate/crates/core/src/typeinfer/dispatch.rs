// SPDX-License-Identifier: Apache-2.0

//! Operator method selection.
//!
//! Every source operator is resolved to a typed hardware operation by
//! looking at the concrete types of all of its operands. Mixed
//! `Int64`/`Float64` operands promote the integer side through an explicit
//! `sitofp` conversion; `/` always produces `Float64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::LatticeType;
use crate::frontend::{BinOp, UnOp};

use LatticeType::{Bool, Float64, Int64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpKind {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpKind {
    pub const ALL: [CmpKind; 6] = [
        CmpKind::Lt,
        CmpKind::Le,
        CmpKind::Gt,
        CmpKind::Ge,
        CmpKind::Eq,
        CmpKind::Ne,
    ];

    fn name(self) -> &'static str {
        match self {
            CmpKind::Lt => "lt",
            CmpKind::Le => "le",
            CmpKind::Gt => "gt",
            CmpKind::Ge => "ge",
            CmpKind::Eq => "eq",
            CmpKind::Ne => "ne",
        }
    }

    fn from_binop(op: BinOp) -> Option<CmpKind> {
        Some(match op {
            BinOp::Lt => CmpKind::Lt,
            BinOp::Le => CmpKind::Le,
            BinOp::Gt => CmpKind::Gt,
            BinOp::Ge => CmpKind::Ge,
            BinOp::Eq => CmpKind::Eq,
            BinOp::Ne => CmpKind::Ne,
            _ => return None,
        })
    }

    pub fn holds<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            CmpKind::Lt => a < b,
            CmpKind::Le => a <= b,
            CmpKind::Gt => a > b,
            CmpKind::Ge => a >= b,
            CmpKind::Eq => a == b,
            CmpKind::Ne => a != b,
        }
    }
}

/// A typed hardware operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Opcode {
    AddI64,
    SubI64,
    MulI64,
    RemI64,
    NegI64,
    CmpI64(CmpKind),
    AddF64,
    SubF64,
    MulF64,
    DivF64,
    NegF64,
    CmpF64(CmpKind),
    AndBool,
    OrBool,
    NotBool,
    CmpBool(CmpKind),
    SiToFp,
    /// `select(cond, a, b)` over values of the given type.
    Select(LatticeType),
}

impl Opcode {
    /// Every opcode the compiler can produce.
    pub fn all() -> Vec<Opcode> {
        let mut v = vec![
            Opcode::AddI64,
            Opcode::SubI64,
            Opcode::MulI64,
            Opcode::RemI64,
            Opcode::NegI64,
        ];
        v.extend(CmpKind::ALL.map(Opcode::CmpI64));
        v.extend([
            Opcode::AddF64,
            Opcode::SubF64,
            Opcode::MulF64,
            Opcode::DivF64,
            Opcode::NegF64,
        ]);
        v.extend(CmpKind::ALL.map(Opcode::CmpF64));
        v.extend([Opcode::AndBool, Opcode::OrBool, Opcode::NotBool]);
        v.extend([CmpKind::Eq, CmpKind::Ne].map(Opcode::CmpBool));
        v.push(Opcode::SiToFp);
        v.extend(LatticeType::CONCRETE.map(Opcode::Select));
        v
    }

    pub fn name(self) -> String {
        match self {
            Opcode::AddI64 => "add_i64".into(),
            Opcode::SubI64 => "sub_i64".into(),
            Opcode::MulI64 => "mul_i64".into(),
            Opcode::RemI64 => "srem_i64".into(),
            Opcode::NegI64 => "neg_i64".into(),
            Opcode::CmpI64(k) => format!("cmp_{}_i64", k.name()),
            Opcode::AddF64 => "fadd_f64".into(),
            Opcode::SubF64 => "fsub_f64".into(),
            Opcode::MulF64 => "fmul_f64".into(),
            Opcode::DivF64 => "fdiv_f64".into(),
            Opcode::NegF64 => "fneg_f64".into(),
            Opcode::CmpF64(k) => format!("fcmp_{}_f64", k.name()),
            Opcode::AndBool => "and_bool".into(),
            Opcode::OrBool => "or_bool".into(),
            Opcode::NotBool => "not_bool".into(),
            Opcode::CmpBool(k) => format!("cmp_{}_bool", k.name()),
            Opcode::SiToFp => "sitofp".into(),
            Opcode::Select(t) => format!("select_{}", t.short_name()),
        }
    }

    pub fn operand_types(self) -> Vec<LatticeType> {
        match self {
            Opcode::AddI64
            | Opcode::SubI64
            | Opcode::MulI64
            | Opcode::RemI64
            | Opcode::CmpI64(_) => {
                vec![Int64, Int64]
            }
            Opcode::NegI64 | Opcode::SiToFp => vec![Int64],
            Opcode::AddF64
            | Opcode::SubF64
            | Opcode::MulF64
            | Opcode::DivF64
            | Opcode::CmpF64(_) => {
                vec![Float64, Float64]
            }
            Opcode::NegF64 => vec![Float64],
            Opcode::AndBool | Opcode::OrBool | Opcode::CmpBool(_) => vec![Bool, Bool],
            Opcode::NotBool => vec![Bool],
            Opcode::Select(t) => vec![Bool, t, t],
        }
    }

    pub fn result_type(self) -> LatticeType {
        match self {
            Opcode::AddI64 | Opcode::SubI64 | Opcode::MulI64 | Opcode::RemI64 | Opcode::NegI64 => {
                Int64
            }
            Opcode::AddF64
            | Opcode::SubF64
            | Opcode::MulF64
            | Opcode::DivF64
            | Opcode::NegF64
            | Opcode::SiToFp => Float64,
            Opcode::CmpI64(_)
            | Opcode::CmpF64(_)
            | Opcode::CmpBool(_)
            | Opcode::AndBool
            | Opcode::OrBool
            | Opcode::NotBool => Bool,
            Opcode::Select(t) => t,
        }
    }

    /// False for operations that can trap at run time (integer remainder
    /// by zero); such operations must not be executed speculatively.
    pub fn is_speculatable(self) -> bool {
        !matches!(self, Opcode::RemI64)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Opcode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Opcode::all()
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| format!("unknown opcode `{s}`"))
    }
}

impl From<Opcode> for String {
    fn from(op: Opcode) -> String {
        op.name()
    }
}

impl TryFrom<String> for Opcode {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A resolved method: which hardware operation implements `symbol` for
/// the given operand types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorImpl {
    pub symbol: &'static str,
    pub operand_types: Vec<LatticeType>,
    pub result_type: LatticeType,
    pub opcode: Opcode,
}

impl OperatorImpl {
    pub fn new(symbol: &'static str, opcode: Opcode) -> Self {
        OperatorImpl {
            symbol,
            operand_types: opcode.operand_types(),
            result_type: opcode.result_type(),
            opcode,
        }
    }

    pub fn sitofp() -> Self {
        OperatorImpl::new("convert", Opcode::SiToFp)
    }
}

/// Outcome of dispatch: the operation plus, per operand, the conversion
/// to apply before it (if any).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dispatch {
    pub imp: OperatorImpl,
    pub conversions: Vec<Option<OperatorImpl>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no method matching {symbol}({})", operand_types.iter().map(|t| format!("::{t}")).collect::<Vec<_>>().join(", "))]
pub struct NoMethodError {
    pub symbol: &'static str,
    pub operand_types: Vec<LatticeType>,
}

/// Source-level operator symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Binary(BinOp),
    Unary(UnOp),
}

impl Symbol {
    pub fn as_str(self) -> &'static str {
        match self {
            Symbol::Binary(op) => op.symbol(),
            Symbol::Unary(op) => op.symbol(),
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Symbol::Binary(_) => 2,
            Symbol::Unary(_) => 1,
        }
    }

    pub fn all() -> Vec<Symbol> {
        let mut v: Vec<Symbol> = BinOp::ALL.iter().map(|op| Symbol::Binary(*op)).collect();
        v.push(Symbol::Unary(UnOp::Neg));
        v.push(Symbol::Unary(UnOp::Not));
        v
    }
}

pub fn dispatch(symbol: Symbol, operand_types: &[LatticeType]) -> Result<Dispatch, NoMethodError> {
    let no_method = || NoMethodError {
        symbol: symbol.as_str(),
        operand_types: operand_types.to_vec(),
    };
    if operand_types.len() != symbol.arity() || !operand_types.iter().all(|t| t.is_concrete()) {
        return Err(no_method());
    }
    let sym = symbol.as_str();
    let plain = |op: Opcode| Dispatch {
        imp: OperatorImpl::new(sym, op),
        conversions: vec![None; operand_types.len()],
    };
    // Float operation with every Int64 operand converted.
    let promoted = |op: Opcode| Dispatch {
        imp: OperatorImpl::new(sym, op),
        conversions: operand_types
            .iter()
            .map(|t| (*t == Int64).then(OperatorImpl::sitofp))
            .collect(),
    };

    match symbol {
        Symbol::Unary(UnOp::Neg) => match operand_types[0] {
            Int64 => Ok(plain(Opcode::NegI64)),
            Float64 => Ok(plain(Opcode::NegF64)),
            _ => Err(no_method()),
        },
        Symbol::Unary(UnOp::Not) => match operand_types[0] {
            Bool => Ok(plain(Opcode::NotBool)),
            _ => Err(no_method()),
        },
        Symbol::Binary(op) => {
            let (a, b) = (operand_types[0], operand_types[1]);
            let both_int = a == Int64 && b == Int64;
            let both_numeric = a.is_numeric() && b.is_numeric();
            match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul if both_int => Ok(plain(match op {
                    BinOp::Add => Opcode::AddI64,
                    BinOp::Sub => Opcode::SubI64,
                    _ => Opcode::MulI64,
                })),
                BinOp::Add | BinOp::Sub | BinOp::Mul if both_numeric => Ok(promoted(match op {
                    BinOp::Add => Opcode::AddF64,
                    BinOp::Sub => Opcode::SubF64,
                    _ => Opcode::MulF64,
                })),
                BinOp::Div if both_numeric => Ok(promoted(Opcode::DivF64)),
                BinOp::Rem if both_int => Ok(plain(Opcode::RemI64)),
                BinOp::And if a == Bool && b == Bool => Ok(plain(Opcode::AndBool)),
                BinOp::Or if a == Bool && b == Bool => Ok(plain(Opcode::OrBool)),
                _ if op.is_comparison() => {
                    let kind = CmpKind::from_binop(op).expect("comparison");
                    if both_int {
                        Ok(plain(Opcode::CmpI64(kind)))
                    } else if both_numeric {
                        Ok(promoted(Opcode::CmpF64(kind)))
                    } else if a == Bool && b == Bool && matches!(kind, CmpKind::Eq | CmpKind::Ne) {
                        Ok(plain(Opcode::CmpBool(kind)))
                    } else {
                        Err(no_method())
                    }
                }
                _ => Err(no_method()),
            }
        }
    }
}

/// Tab-separated listing of every (symbol, concrete operand types) pair and
/// its resolution.
pub fn dispatch_table() -> String {
    let mut out = String::from("symbol\toperands\topcode\tresult\tconversions\n");
    for symbol in Symbol::all() {
        let combos: Vec<Vec<LatticeType>> = if symbol.arity() == 1 {
            LatticeType::CONCRETE.iter().map(|t| vec![*t]).collect()
        } else {
            LatticeType::CONCRETE
                .iter()
                .flat_map(|a| LatticeType::CONCRETE.iter().map(move |b| vec![*a, *b]))
                .collect()
        };
        for operands in combos {
            let ops = operands
                .iter()
                .map(|t| t.short_name())
                .collect::<Vec<_>>()
                .join(",");
            match dispatch(symbol, &operands) {
                Ok(d) => {
                    let conv = d
                        .conversions
                        .iter()
                        .map(|c| {
                            c.as_ref()
                                .map(|c| c.opcode.name())
                                .unwrap_or_else(|| "-".into())
                        })
                        .collect::<Vec<_>>()
                        .join(",");
                    out.push_str(&format!(
                        "{}\t{}\t{}\t{}\t{}\n",
                        symbol.as_str(),
                        ops,
                        d.imp.opcode,
                        d.imp.result_type.short_name(),
                        conv
                    ));
                }
                Err(_) => out.push_str(&format!("{}\t{}\tno_method\t-\t-\n", symbol.as_str(), ops)),
            }
        }
    }
    out
}
