// SPDX-License-Identifier: Apache-2.0

//! If-conversion: replaces small forward branches with `select`.
//!
//! Handled shapes, for a block `P` ending in `condgoto c, T, E`:
//! - diamond: `T` and `E` both jump to the same join `J`;
//! - triangle: one arm jumps straight to the other target;
//! - return diamond: both arms return.
//!
//! An arm qualifies when `P` is its only incoming edge and every
//! instruction in it is safe to execute unconditionally. Nothing is
//! converted when the join is `P` itself or dominates `P` (loop edges).

use std::collections::HashMap;

use super::analysis::{dominates, immediate_dominators, predecessors};
use super::{Block, BlockId, Instr, InstrOp, SsaFunction, Target, Terminator, ValueId};

/// Runs to a fixpoint. Returns whether anything changed.
pub fn if_convert(f: &mut SsaFunction) -> bool {
    let mut changed = false;
    f.canonicalize();
    while convert_one(f) {
        f.canonicalize();
        changed = true;
    }
    changed
}

fn is_arm(f: &SsaFunction, preds: &[Vec<(BlockId, usize)>], p: BlockId, x: BlockId) -> bool {
    x != p
        && x != f.entry
        && preds[x.index()].len() == 1
        && preds[x.index()][0].0 == p
        && f.block(x).instrs.iter().all(|i| match &i.op {
            InstrOp::Operator(imp) => imp.opcode.is_speculatable(),
            InstrOp::Const(_) | InstrOp::Select(_) => true,
        })
}

enum Shape {
    Diamond {
        join: BlockId,
    },
    /// `arm_is_then` tells which side is hoisted; the other side is the join.
    Triangle {
        arm_is_then: bool,
    },
    Returns,
}

fn convert_one(f: &mut SsaFunction) -> bool {
    let preds = predecessors(f);
    let idom = immediate_dominators(f);
    for pi in 0..f.blocks.len() {
        let p = BlockId(pi as u32);
        let Terminator::CondGoto {
            then_target,
            else_target,
            ..
        } = &f.block(p).terminator
        else {
            continue;
        };
        let (t, e) = (then_target.block, else_target.block);
        if t == e {
            continue;
        }
        let t_arm = is_arm(f, &preds, p, t);
        let e_arm = is_arm(f, &preds, p, e);
        let join_ok = |j: BlockId| j != p && j != t && j != e && !dominates(&idom, j, p);
        let shape = match (&f.block(t).terminator, &f.block(e).terminator) {
            (Terminator::Goto(tj), Terminator::Goto(ej))
                if t_arm && e_arm && tj.block == ej.block && join_ok(tj.block) =>
            {
                Some(Shape::Diamond { join: tj.block })
            }
            (Terminator::Return(_), Terminator::Return(_)) if t_arm && e_arm => {
                Some(Shape::Returns)
            }
            (Terminator::Goto(tj), _)
                if t_arm && tj.block == e && e != p && e != f.entry && !dominates(&idom, e, p) =>
            {
                Some(Shape::Triangle { arm_is_then: true })
            }
            (_, Terminator::Goto(ej))
                if e_arm && ej.block == t && t != p && t != f.entry && !dominates(&idom, t, p) =>
            {
                Some(Shape::Triangle { arm_is_then: false })
            }
            _ => None,
        };
        if let Some(shape) = shape {
            apply(f, p, shape);
            return true;
        }
    }
    false
}

/// Moves an arm's instructions into `p`, substituting its parameters by
/// the edge arguments. The arm is left empty and unreachable.
fn hoist(f: &mut SsaFunction, p: BlockId, arm: BlockId, edge_args: &[ValueId]) -> Terminator {
    let taken = std::mem::replace(
        f.block_mut(arm),
        Block {
            id: arm,
            params: Vec::new(),
            instrs: Vec::new(),
            terminator: Terminator::Goto(Target::new(arm, Vec::new())),
        },
    );
    let map: HashMap<ValueId, ValueId> = taken
        .params
        .iter()
        .map(|(v, _)| *v)
        .zip(edge_args.iter().copied())
        .collect();
    f.block_mut(p).instrs.extend(taken.instrs);
    let mut term = taken.terminator;
    f.replace_uses(&map);
    term.map_values(&|v| map.get(&v).copied().unwrap_or(v));
    term
}

fn select(f: &mut SsaFunction, p: BlockId, cond: ValueId, a: ValueId, b: ValueId) -> ValueId {
    if a == b {
        return a;
    }
    let ty = f.value_type(a);
    let result = f.new_value(ty);
    f.block_mut(p).instrs.push(Instr {
        result,
        op: InstrOp::Select(ty),
        operands: vec![cond, a, b],
    });
    result
}

fn apply(f: &mut SsaFunction, p: BlockId, shape: Shape) {
    let Terminator::CondGoto {
        cond,
        then_target,
        else_target,
    } = f.block(p).terminator.clone()
    else {
        unreachable!("checked by convert_one");
    };
    let new_term = match shape {
        Shape::Diamond { join } => {
            let Terminator::Goto(tj) = hoist(f, p, then_target.block, &then_target.args) else {
                unreachable!()
            };
            let Terminator::Goto(ej) = hoist(f, p, else_target.block, &else_target.args) else {
                unreachable!()
            };
            let args = tj
                .args
                .iter()
                .zip(&ej.args)
                .map(|(a, b)| select(f, p, cond, *a, *b))
                .collect();
            Terminator::Goto(Target::new(join, args))
        }
        Shape::Triangle { arm_is_then } => {
            let (arm, direct) = if arm_is_then {
                (then_target, else_target)
            } else {
                (else_target, then_target)
            };
            let Terminator::Goto(via_arm) = hoist(f, p, arm.block, &arm.args) else {
                unreachable!()
            };
            let args = via_arm
                .args
                .iter()
                .zip(&direct.args)
                .map(|(a, d)| {
                    if arm_is_then {
                        select(f, p, cond, *a, *d)
                    } else {
                        select(f, p, cond, *d, *a)
                    }
                })
                .collect();
            Terminator::Goto(Target::new(direct.block, args))
        }
        Shape::Returns => {
            let Terminator::Return(a) = hoist(f, p, then_target.block, &then_target.args) else {
                unreachable!()
            };
            let Terminator::Return(b) = hoist(f, p, else_target.block, &else_target.args) else {
                unreachable!()
            };
            Terminator::Return(select(f, p, cond, a, b))
        }
    };
    f.block_mut(p).terminator = new_term;
}
