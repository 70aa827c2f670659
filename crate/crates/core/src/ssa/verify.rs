// SPDX-License-Identifier: Apache-2.0

//! Structural well-formedness checks for SSA functions.

use std::collections::HashMap;
use std::fmt;

use super::analysis::{dominates, immediate_dominators, predecessors, reachable};
use super::{BlockId, InstrOp, SsaFunction, Terminator, ValueId};
use crate::typeinfer::LatticeType;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EntryHasPredecessors,
    BadBlockId {
        at: usize,
        id: BlockId,
    },
    UnknownTarget {
        from: BlockId,
        target: BlockId,
    },
    Unreachable(BlockId),
    DuplicateDef(ValueId),
    UnknownValue {
        block: BlockId,
        value: ValueId,
    },
    NotDominated {
        block: BlockId,
        value: ValueId,
    },
    ArgCount {
        from: BlockId,
        target: BlockId,
        expected: usize,
        found: usize,
    },
    ArgType {
        from: BlockId,
        target: BlockId,
        index: usize,
    },
    CondNotBool(BlockId),
    OperandTypes {
        block: BlockId,
        result: ValueId,
    },
    ReturnType(BlockId),
    NonConcreteType(ValueId),
    ParamsMismatch,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EntryHasPredecessors => write!(f, "entry block has predecessors"),
            BadBlockId { at, id } => write!(f, "block at index {at} is labelled {id}"),
            UnknownTarget { from, target } => write!(f, "{from} jumps to missing block {target}"),
            Unreachable(b) => write!(f, "{b} is unreachable"),
            DuplicateDef(v) => write!(f, "{v} is defined more than once"),
            UnknownValue { block, value } => write!(f, "{block} uses undefined {value}"),
            NotDominated { block, value } => {
                write!(
                    f,
                    "use of {value} in {block} is not dominated by its definition"
                )
            }
            ArgCount {
                from,
                target,
                expected,
                found,
            } => write!(
                f,
                "edge {from} -> {target} passes {found} arguments, expected {expected}"
            ),
            ArgType {
                from,
                target,
                index,
            } => {
                write!(
                    f,
                    "edge {from} -> {target} argument {index} has the wrong type"
                )
            }
            CondNotBool(b) => write!(f, "branch condition in {b} is not Bool"),
            OperandTypes { block, result } => {
                write!(
                    f,
                    "operands of {result} in {block} do not match its operator"
                )
            }
            ReturnType(b) => write!(f, "return in {b} does not match the function's return type"),
            NonConcreteType(v) => write!(f, "{v} has a non-concrete type"),
            ParamsMismatch => write!(f, "function params differ from entry block params"),
        }
    }
}

/// Returns every violation found; an empty list means the function is
/// well formed.
pub fn verify(f: &SsaFunction) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = f.blocks.len();
    for (i, b) in f.blocks.iter().enumerate() {
        if b.id.index() != i {
            out.push(Violation::BadBlockId { at: i, id: b.id });
        }
        for s in b.terminator.successors() {
            if s.index() >= n {
                out.push(Violation::UnknownTarget {
                    from: b.id,
                    target: s,
                });
            }
        }
    }
    if !out.is_empty() || f.entry.index() >= n {
        return out;
    }
    if f.params != f.block(f.entry).params {
        out.push(Violation::ParamsMismatch);
    }
    let preds = predecessors(f);
    if !preds[f.entry.index()].is_empty() {
        out.push(Violation::EntryHasPredecessors);
    }
    let live = reachable(f);
    for b in &f.blocks {
        if !live[b.id.index()] {
            out.push(Violation::Unreachable(b.id));
        }
    }

    // Definitions: value -> (block, position); params sit at position 0,
    // instruction k at position k + 1.
    let mut defs: HashMap<ValueId, (BlockId, usize)> = HashMap::new();
    let mut define = |v: ValueId, at: (BlockId, usize), out: &mut Vec<Violation>| {
        if defs.insert(v, at).is_some() {
            out.push(Violation::DuplicateDef(v));
        }
    };
    for b in &f.blocks {
        for (v, _) in &b.params {
            define(*v, (b.id, 0), &mut out);
        }
        for (k, ins) in b.instrs.iter().enumerate() {
            define(ins.result, (b.id, k + 1), &mut out);
        }
    }
    for v in defs.keys() {
        if !f.value_type(*v).is_concrete() {
            out.push(Violation::NonConcreteType(*v));
        }
    }

    let idom = immediate_dominators(f);
    let check_use =
        |block: BlockId, pos: usize, v: ValueId, out: &mut Vec<Violation>| match defs.get(&v) {
            None => out.push(Violation::UnknownValue { block, value: v }),
            Some((db, dp)) => {
                let ok = if *db == block {
                    *dp < pos
                } else {
                    dominates(&idom, *db, block)
                };
                if !ok && live[block.index()] {
                    out.push(Violation::NotDominated { block, value: v });
                }
            }
        };

    for b in &f.blocks {
        for (k, ins) in b.instrs.iter().enumerate() {
            for o in &ins.operands {
                check_use(b.id, k + 1, *o, &mut out);
            }
            let tys: Vec<LatticeType> = ins.operands.iter().map(|o| f.value_type(*o)).collect();
            let result_ty = f.value_type(ins.result);
            let ok = match &ins.op {
                InstrOp::Operator(imp) => imp.operand_types == tys && imp.result_type == result_ty,
                InstrOp::Const(v) => tys.is_empty() && v.ty() == result_ty,
                InstrOp::Select(t) => tys == [LatticeType::Bool, *t, *t] && result_ty == *t,
            };
            if !ok {
                out.push(Violation::OperandTypes {
                    block: b.id,
                    result: ins.result,
                });
            }
        }
        let end = b.instrs.len() + 1;
        for v in b.terminator.uses() {
            check_use(b.id, end, v, &mut out);
        }
        match &b.terminator {
            Terminator::CondGoto { cond, .. } if f.value_type(*cond) != LatticeType::Bool => {
                out.push(Violation::CondNotBool(b.id));
            }
            Terminator::Return(v) if f.value_type(*v) != f.return_type => {
                out.push(Violation::ReturnType(b.id));
            }
            _ => {}
        }
        for t in b.terminator.targets() {
            let params = &f.block(t.block).params;
            if params.len() != t.args.len() {
                out.push(Violation::ArgCount {
                    from: b.id,
                    target: t.block,
                    expected: params.len(),
                    found: t.args.len(),
                });
                continue;
            }
            for (index, (a, (_, pty))) in t.args.iter().zip(params).enumerate() {
                if f.value_type(*a) != *pty {
                    out.push(Violation::ArgType {
                        from: b.id,
                        target: t.block,
                        index,
                    });
                }
            }
        }
    }
    out
}
