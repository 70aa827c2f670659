// SPDX-License-Identifier: Apache-2.0

//! Type lattice, operator dispatch and data-flow type inference.

pub mod dispatch;
pub mod infer;
pub mod lattice;

pub use dispatch::{
    dispatch, dispatch_table, CmpKind, Dispatch, NoMethodError, Opcode, OperatorImpl, Symbol,
};
pub use infer::{
    infer, infer_with, resolve_signature, InferOptions, InferStats, Instability, TExpr, TExprKind,
    TStmt, TStmtKind, TypeError, TypedFunction, WorklistOrder,
};
pub use lattice::{parse_signature, LatticeType};
