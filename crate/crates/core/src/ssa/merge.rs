// SPDX-License-Identifier: Apache-2.0

//! Straight-line block merging and forwarding-block removal.

use std::collections::HashMap;

use super::analysis::predecessors;
use super::{BlockId, SsaFunction, Terminator};

/// Runs to a fixpoint. Returns whether anything changed.
///
/// - A block ending in `goto B` absorbs `B` when that edge is `B`'s only
///   incoming edge; `B`'s parameters are replaced by the edge arguments.
/// - A parameterless block with no instructions that just jumps on is
///   bypassed by retargeting its predecessors.
/// - Unreachable blocks are dropped.
pub fn merge_blocks(f: &mut SsaFunction) -> bool {
    let before = f.clone();
    f.canonicalize();
    while merge_one(f) || bypass_one(f) {
        f.canonicalize();
    }
    *f != before
}

fn merge_one(f: &mut SsaFunction) -> bool {
    let preds = predecessors(f);
    for a in 0..f.blocks.len() {
        let Terminator::Goto(t) = &f.blocks[a].terminator else {
            continue;
        };
        let b = t.block;
        if b.index() == a || b == f.entry || preds[b.index()].len() != 1 {
            continue;
        }
        let args = t.args.clone();
        let absorbed = std::mem::replace(
            &mut f.blocks[b.index()],
            super::Block {
                id: b,
                params: Vec::new(),
                instrs: Vec::new(),
                // Left unreachable; dropped by the next canonicalize.
                terminator: Terminator::Goto(super::Target::new(b, Vec::new())),
            },
        );
        let map: HashMap<_, _> = absorbed.params.iter().map(|(p, _)| *p).zip(args).collect();
        let host = &mut f.blocks[a];
        host.instrs.extend(absorbed.instrs);
        host.terminator = absorbed.terminator;
        f.replace_uses(&map);
        return true;
    }
    false
}

fn bypass_one(f: &mut SsaFunction) -> bool {
    for i in 0..f.blocks.len() {
        let b = &f.blocks[i];
        let id = BlockId(i as u32);
        if id == f.entry || !b.params.is_empty() || !b.instrs.is_empty() {
            continue;
        }
        let Terminator::Goto(next) = &b.terminator else {
            continue;
        };
        if next.block == id {
            continue;
        }
        let next = next.clone();
        let mut changed = false;
        for blk in &mut f.blocks {
            if blk.id == id {
                continue;
            }
            for t in blk.terminator.targets_mut() {
                if t.block == id {
                    *t = next.clone();
                    changed = true;
                }
            }
        }
        if changed {
            return true;
        }
    }
    false
}
