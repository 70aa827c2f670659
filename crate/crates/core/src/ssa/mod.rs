// SPDX-License-Identifier: Apache-2.0

//! SSA control-flow graph with block parameters.
//!
//! Block parameters take the place of phi nodes: a `goto b2(v4, v7)`
//! binds `v4` and `v7` to the parameters of `b2`. The entry block's
//! parameters are the function arguments.

pub mod analysis;
pub mod if_convert;
pub mod lower;
pub mod merge;
pub mod print;
pub mod verify;

use std::collections::HashMap;
use std::fmt;

use crate::typeinfer::{LatticeType, OperatorImpl};
use crate::value::Value;

pub use if_convert::if_convert;
pub use lower::{lower, LowerError};
pub use merge::merge_blocks;
pub use print::print_function;
pub use verify::{verify, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub u32);

impl ValueId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstrOp {
    Operator(OperatorImpl),
    Const(Value),
    /// `select(cond, a, b)`; both arms share the result type.
    Select(LatticeType),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instr {
    pub result: ValueId,
    pub op: InstrOp,
    pub operands: Vec<ValueId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub block: BlockId,
    pub args: Vec<ValueId>,
}

impl Target {
    pub fn new(block: BlockId, args: Vec<ValueId>) -> Self {
        Target { block, args }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terminator {
    Goto(Target),
    CondGoto {
        cond: ValueId,
        then_target: Target,
        else_target: Target,
    },
    Return(ValueId),
}

impl Terminator {
    pub fn targets(&self) -> Vec<&Target> {
        match self {
            Terminator::Goto(t) => vec![t],
            Terminator::CondGoto {
                then_target,
                else_target,
                ..
            } => vec![then_target, else_target],
            Terminator::Return(_) => vec![],
        }
    }

    pub fn targets_mut(&mut self) -> Vec<&mut Target> {
        match self {
            Terminator::Goto(t) => vec![t],
            Terminator::CondGoto {
                then_target,
                else_target,
                ..
            } => vec![then_target, else_target],
            Terminator::Return(_) => vec![],
        }
    }

    pub fn successors(&self) -> Vec<BlockId> {
        self.targets().iter().map(|t| t.block).collect()
    }

    /// Every value read by the terminator, including edge arguments.
    pub fn uses(&self) -> Vec<ValueId> {
        let mut out = Vec::new();
        match self {
            Terminator::Goto(t) => out.extend(&t.args),
            Terminator::CondGoto {
                cond,
                then_target,
                else_target,
            } => {
                out.push(*cond);
                out.extend(&then_target.args);
                out.extend(&else_target.args);
            }
            Terminator::Return(v) => out.push(*v),
        }
        out
    }

    fn map_values(&mut self, f: &impl Fn(ValueId) -> ValueId) {
        match self {
            Terminator::Goto(t) => t.args.iter_mut().for_each(|a| *a = f(*a)),
            Terminator::CondGoto {
                cond,
                then_target,
                else_target,
            } => {
                *cond = f(*cond);
                then_target.args.iter_mut().for_each(|a| *a = f(*a));
                else_target.args.iter_mut().for_each(|a| *a = f(*a));
            }
            Terminator::Return(v) => *v = f(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub id: BlockId,
    pub params: Vec<(ValueId, LatticeType)>,
    pub instrs: Vec<Instr>,
    pub terminator: Terminator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsaFunction {
    pub name: String,
    pub entry: BlockId,
    pub blocks: Vec<Block>,
    /// Function arguments; identical to the entry block's parameters.
    pub params: Vec<(ValueId, LatticeType)>,
    pub return_type: LatticeType,
    /// Type of every value id, indexed by id.
    pub value_types: Vec<LatticeType>,
}

/// Per-function block statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStats {
    pub blocks: usize,
    pub instrs_per_block: Vec<usize>,
}

pub fn block_stats(f: &SsaFunction) -> BlockStats {
    BlockStats {
        blocks: f.blocks.len(),
        instrs_per_block: f.blocks.iter().map(|b| b.instrs.len()).collect(),
    }
}

impl SsaFunction {
    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id.index()]
    }

    pub fn block_mut(&mut self, id: BlockId) -> &mut Block {
        &mut self.blocks[id.index()]
    }

    pub fn value_type(&self, v: ValueId) -> LatticeType {
        self.value_types
            .get(v.index())
            .copied()
            .unwrap_or(LatticeType::Bottom)
    }

    pub fn new_value(&mut self, ty: LatticeType) -> ValueId {
        self.value_types.push(ty);
        ValueId(self.value_types.len() as u32 - 1)
    }

    /// Rewrites every use of a value (operands and terminator arguments).
    pub fn replace_uses(&mut self, map: &HashMap<ValueId, ValueId>) {
        if map.is_empty() {
            return;
        }
        let resolve = |mut v: ValueId| {
            // Substitutions may chain when several merges happen in one pass.
            while let Some(next) = map.get(&v) {
                v = *next;
            }
            v
        };
        for b in &mut self.blocks {
            for i in &mut b.instrs {
                i.operands.iter_mut().for_each(|o| *o = resolve(*o));
            }
            b.terminator.map_values(&resolve);
        }
    }

    /// Drops unreachable blocks and renumbers blocks (reverse postorder
    /// from the entry) and values (definition order) densely. The result
    /// depends only on the function's structure, which makes pass output
    /// comparable.
    pub fn canonicalize(&mut self) {
        let order = analysis::reverse_postorder(self);
        let mut block_map: HashMap<BlockId, BlockId> = HashMap::new();
        for (i, b) in order.iter().enumerate() {
            block_map.insert(*b, BlockId(i as u32));
        }
        let mut old_blocks: Vec<Option<Block>> = std::mem::take(&mut self.blocks)
            .into_iter()
            .map(Some)
            .collect();
        let mut blocks: Vec<Block> = order
            .iter()
            .map(|b| old_blocks[b.index()].take().expect("block visited once"))
            .collect();

        let mut value_map: HashMap<ValueId, ValueId> = HashMap::new();
        let mut types = Vec::new();
        let mut define = |v: ValueId, ty: LatticeType, map: &mut HashMap<ValueId, ValueId>| {
            let new = ValueId(types.len() as u32);
            types.push(ty);
            map.insert(v, new);
            new
        };
        for b in &mut blocks {
            b.id = block_map[&b.id];
            for (v, ty) in &mut b.params {
                *v = define(*v, *ty, &mut value_map);
            }
            for i in &mut b.instrs {
                let ty = self
                    .value_types
                    .get(i.result.index())
                    .copied()
                    .unwrap_or(LatticeType::Bottom);
                i.result = define(i.result, ty, &mut value_map);
            }
        }
        let rename = |v: ValueId| value_map.get(&v).copied().unwrap_or(v);
        for b in &mut blocks {
            for i in &mut b.instrs {
                i.operands.iter_mut().for_each(|o| *o = rename(*o));
            }
            b.terminator.map_values(&rename);
            for t in b.terminator.targets_mut() {
                t.block = block_map[&t.block];
            }
        }
        self.entry = BlockId(0);
        self.params = blocks.first().map(|b| b.params.clone()).unwrap_or_default();
        self.blocks = blocks;
        self.value_types = types;
    }
}

/// One step of the optimization pipeline, for `--dump-ir` style traces.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: &'static str,
    pub blocks: usize,
    pub changed: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("SSA invalid after {stage}: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct PassError {
    pub stage: &'static str,
    pub violations: Vec<Violation>,
}

/// Alternates if-conversion and block merging until neither changes the
/// function, verifying after every stage.
pub fn optimize(f: &SsaFunction) -> Result<(SsaFunction, Vec<StageRecord>), PassError> {
    let mut f = f.clone();
    let mut trace = Vec::new();
    let check = |f: &SsaFunction, stage| {
        let violations = verify(f);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(PassError { stage, violations })
        }
    };
    check(&f, "lower")?;
    trace.push(StageRecord {
        stage: "lower",
        blocks: f.blocks.len(),
        changed: false,
    });
    loop {
        let a = if_convert(&mut f);
        check(&f, "if_convert")?;
        trace.push(StageRecord {
            stage: "if_convert",
            blocks: f.blocks.len(),
            changed: a,
        });
        let b = merge_blocks(&mut f);
        check(&f, "merge_blocks")?;
        trace.push(StageRecord {
            stage: "merge_blocks",
            blocks: f.blocks.len(),
            changed: b,
        });
        if !a && !b {
            return Ok((f, trace));
        }
    }
}
