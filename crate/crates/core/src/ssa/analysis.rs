// SPDX-License-Identifier: Apache-2.0

//! CFG queries: predecessors, reverse postorder, dominators, liveness.

use std::collections::{BTreeSet, HashMap};

use super::{BlockId, SsaFunction, ValueId};

fn valid(f: &SsaFunction, b: BlockId) -> bool {
    b.index() < f.blocks.len()
}

/// Predecessor edges per block: `(pred, edge index in pred's terminator)`.
/// A `CondGoto` with both arms to the same block contributes two edges.
pub fn predecessors(f: &SsaFunction) -> Vec<Vec<(BlockId, usize)>> {
    let mut preds = vec![Vec::new(); f.blocks.len()];
    for (i, b) in f.blocks.iter().enumerate() {
        for (e, s) in b.terminator.successors().into_iter().enumerate() {
            if valid(f, s) {
                preds[s.index()].push((BlockId(i as u32), e));
            }
        }
    }
    preds
}

/// Reachable blocks in reverse postorder from the entry. Successors are
/// explored last-to-first so the `then` side precedes the `else` side.
pub fn reverse_postorder(f: &SsaFunction) -> Vec<BlockId> {
    let n = f.blocks.len();
    if !valid(f, f.entry) {
        return Vec::new();
    }
    let mut visited = vec![false; n];
    let mut post = Vec::with_capacity(n);
    // Iterative DFS: (block, successors still to visit).
    let mut stack: Vec<(BlockId, Vec<BlockId>)> = Vec::new();
    visited[f.entry.index()] = true;
    stack.push((f.entry, f.block(f.entry).terminator.successors()));
    while let Some((_, succs)) = stack.last_mut() {
        match succs.pop() {
            Some(s) => {
                if valid(f, s) && !visited[s.index()] {
                    visited[s.index()] = true;
                    let next = f.block(s).terminator.successors();
                    stack.push((s, next));
                }
            }
            None => {
                let (b, _) = stack.pop().expect("non-empty");
                post.push(b);
            }
        }
    }
    post.reverse();
    post
}

pub fn reachable(f: &SsaFunction) -> Vec<bool> {
    let mut r = vec![false; f.blocks.len()];
    for b in reverse_postorder(f) {
        r[b.index()] = true;
    }
    r
}

/// Immediate dominators of reachable blocks (the entry maps to itself);
/// `None` for unreachable blocks.
pub fn immediate_dominators(f: &SsaFunction) -> Vec<Option<BlockId>> {
    let rpo = reverse_postorder(f);
    let mut order = vec![usize::MAX; f.blocks.len()];
    for (i, b) in rpo.iter().enumerate() {
        order[b.index()] = i;
    }
    let preds = predecessors(f);
    let mut idom: Vec<Option<BlockId>> = vec![None; f.blocks.len()];
    if rpo.is_empty() {
        return idom;
    }
    idom[f.entry.index()] = Some(f.entry);
    let intersect = |idom: &[Option<BlockId>], mut a: BlockId, mut b: BlockId| {
        while a != b {
            while order[a.index()] > order[b.index()] {
                a = idom[a.index()].expect("processed");
            }
            while order[b.index()] > order[a.index()] {
                b = idom[b.index()].expect("processed");
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for b in rpo.iter().skip(1) {
            let mut new_idom: Option<BlockId> = None;
            for (p, _) in &preds[b.index()] {
                if idom[p.index()].is_none() {
                    continue;
                }
                new_idom = Some(match new_idom {
                    None => *p,
                    Some(cur) => intersect(&idom, *p, cur),
                });
            }
            if new_idom.is_some() && idom[b.index()] != new_idom {
                idom[b.index()] = new_idom;
                changed = true;
            }
        }
    }
    idom
}

/// `a` dominates `b` (reflexive).
pub fn dominates(idom: &[Option<BlockId>], a: BlockId, b: BlockId) -> bool {
    let mut cur = b;
    loop {
        if cur == a {
            return true;
        }
        match idom.get(cur.index()).copied().flatten() {
            Some(next) if next != cur => cur = next,
            _ => return false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Liveness {
    pub live_in: Vec<BTreeSet<ValueId>>,
    pub live_out: Vec<BTreeSet<ValueId>>,
}

/// Values live on entry to / exit from each block. Block parameters are
/// definitions of their block, so they never appear in that block's
/// `live_in`; edge arguments count as uses in the predecessor.
pub fn liveness(f: &SsaFunction) -> Liveness {
    let n = f.blocks.len();
    let mut uses: Vec<BTreeSet<ValueId>> = vec![BTreeSet::new(); n];
    let mut defs: Vec<BTreeSet<ValueId>> = vec![BTreeSet::new(); n];
    for (i, b) in f.blocks.iter().enumerate() {
        let d = &mut defs[i];
        d.extend(b.params.iter().map(|(v, _)| *v));
        for ins in &b.instrs {
            for o in &ins.operands {
                if !d.contains(o) {
                    uses[i].insert(*o);
                }
            }
            d.insert(ins.result);
        }
        for o in b.terminator.uses() {
            if !d.contains(&o) {
                uses[i].insert(o);
            }
        }
    }
    let mut live_in = uses.clone();
    let mut live_out: Vec<BTreeSet<ValueId>> = vec![BTreeSet::new(); n];
    let order: Vec<BlockId> = reverse_postorder(f).into_iter().rev().collect();
    let mut changed = true;
    while changed {
        changed = false;
        for b in &order {
            let i = b.index();
            let mut out = BTreeSet::new();
            for s in f.blocks[i].terminator.successors() {
                if valid(f, s) {
                    out.extend(live_in[s.index()].iter().copied());
                }
            }
            let mut inn = uses[i].clone();
            inn.extend(out.difference(&defs[i]).copied());
            if out != live_out[i] || inn != live_in[i] {
                live_out[i] = out;
                live_in[i] = inn;
                changed = true;
            }
        }
    }
    Liveness { live_in, live_out }
}

/// Block in which each value is defined.
pub fn definition_blocks(f: &SsaFunction) -> HashMap<ValueId, BlockId> {
    let mut out = HashMap::new();
    for b in &f.blocks {
        for (v, _) in &b.params {
            out.insert(*v, b.id);
        }
        for i in &b.instrs {
            out.insert(i.result, b.id);
        }
    }
    out
}
