// SPDX-License-Identifier: Apache-2.0

//! Structured lowering from the typed syntax tree to SSA.
//!
//! Shapes produced:
//! - `if c1 A elseif c2 B else C end`: the current block tests `c1`, a
//!   fresh block tests `c2`, one block per arm, and a join block only if
//!   some arm falls through.
//! - `while c B end`: the current block jumps to a header (parameters are
//!   the variables assigned in the loop), the header tests `c`, then a
//!   body block and an exit block.
//!
//! Join and header parameters are only created for variables whose
//! incoming values differ.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Block, BlockId, Instr, InstrOp, SsaFunction, Target, Terminator, ValueId};
use crate::frontend::Pos;
use crate::typeinfer::{LatticeType, TExpr, TExprKind, TStmt, TStmtKind, TypedFunction};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LowerError {
    #[error("{pos}: refusing to lower non-concrete type ({detail})")]
    Unstable { pos: Pos, detail: String },
    #[error("internal lowering error: {0}")]
    Internal(String),
}

type Env = BTreeMap<String, ValueId>;

struct Builder {
    func: SsaFunction,
    terms: Vec<Option<Terminator>>,
    cur: BlockId,
}

enum Flow {
    FallsThrough,
    Returned,
}

/// Where an incoming edge to a join block sits, so its arguments can be
/// filled in once the join's parameters are known.
#[derive(Clone, Copy)]
enum EdgeSlot {
    Goto,
    Else,
}

pub fn lower(t: &TypedFunction) -> Result<SsaFunction, LowerError> {
    if !t.type_stable {
        let detail = t
            .instabilities
            .first()
            .map(|i| (i.pos, i.detail.clone()))
            .unwrap_or_default();
        return Err(LowerError::Unstable {
            pos: detail.0,
            detail: detail.1,
        });
    }
    let mut b = Builder {
        func: SsaFunction {
            name: t.name.clone(),
            entry: BlockId(0),
            blocks: Vec::new(),
            params: Vec::new(),
            return_type: t.return_type,
            value_types: Vec::new(),
        },
        terms: Vec::new(),
        cur: BlockId(0),
    };
    let entry = b.new_block();
    let mut env = Env::new();
    for (name, ty) in &t.params {
        let v = b.add_param(entry, *ty);
        env.insert(name.clone(), v);
    }
    b.func.params = b.func.block(entry).params.clone();
    b.cur = entry;
    match b.block(&t.body, &mut env)? {
        Flow::Returned => {}
        Flow::FallsThrough => {
            return Err(LowerError::Internal(format!(
                "`{}` falls off its end",
                t.name
            )))
        }
    }
    let mut func = b.finish()?;
    func.canonicalize();
    Ok(func)
}

impl Builder {
    fn new_block(&mut self) -> BlockId {
        let id = BlockId(self.func.blocks.len() as u32);
        self.func.blocks.push(Block {
            id,
            params: Vec::new(),
            instrs: Vec::new(),
            terminator: Terminator::Return(ValueId(u32::MAX)),
        });
        self.terms.push(None);
        id
    }

    fn add_param(&mut self, block: BlockId, ty: LatticeType) -> ValueId {
        let v = self.func.new_value(ty);
        self.func.block_mut(block).params.push((v, ty));
        v
    }

    fn emit(&mut self, op: InstrOp, operands: Vec<ValueId>, ty: LatticeType) -> ValueId {
        let result = self.func.new_value(ty);
        let cur = self.cur;
        self.func.block_mut(cur).instrs.push(Instr {
            result,
            op,
            operands,
        });
        result
    }

    fn terminate(&mut self, block: BlockId, term: Terminator) {
        self.terms[block.index()] = Some(term);
    }

    fn finish(mut self) -> Result<SsaFunction, LowerError> {
        for (i, t) in self.terms.into_iter().enumerate() {
            match t {
                Some(t) => self.func.blocks[i].terminator = t,
                None => {
                    return Err(LowerError::Internal(format!(
                        "block b{i} has no terminator"
                    )))
                }
            }
        }
        Ok(self.func)
    }

    fn block(&mut self, stmts: &[TStmt], env: &mut Env) -> Result<Flow, LowerError> {
        for stmt in stmts {
            if let Flow::Returned = self.stmt(stmt, env)? {
                return Ok(Flow::Returned);
            }
        }
        Ok(Flow::FallsThrough)
    }

    fn stmt(&mut self, stmt: &TStmt, env: &mut Env) -> Result<Flow, LowerError> {
        match &stmt.kind {
            TStmtKind::Assign { target, value } => {
                let v = self.expr(value, env)?;
                env.insert(target.clone(), v);
                Ok(Flow::FallsThrough)
            }
            TStmtKind::Return(e) => {
                let v = self.expr(e, env)?;
                self.terminate(self.cur, Terminator::Return(v));
                Ok(Flow::Returned)
            }
            TStmtKind::If { arms, else_body } => self.lower_if(arms, else_body.as_deref(), env),
            TStmtKind::While { cond, body } => self.lower_while(cond, body, env),
        }
    }

    fn lower_if(
        &mut self,
        arms: &[(TExpr, Vec<TStmt>)],
        else_body: Option<&[TStmt]>,
        env: &mut Env,
    ) -> Result<Flow, LowerError> {
        let mut join: Option<BlockId> = None;
        let mut incoming: Vec<(BlockId, EdgeSlot, Env)> = Vec::new();
        for (i, (cond, body)) in arms.iter().enumerate() {
            let c = self.expr(cond, env)?;
            let test_block = self.cur;
            let then_block = self.new_block();
            let has_more = i + 1 < arms.len() || else_body.is_some();
            let else_block = if has_more {
                self.new_block()
            } else {
                *join.get_or_insert_with(|| self.new_block())
            };
            self.terminate(
                test_block,
                Terminator::CondGoto {
                    cond: c,
                    then_target: Target::new(then_block, vec![]),
                    else_target: Target::new(else_block, vec![]),
                },
            );
            if !has_more {
                incoming.push((test_block, EdgeSlot::Else, env.clone()));
            }

            self.cur = then_block;
            let mut arm_env = env.clone();
            if let Flow::FallsThrough = self.block(body, &mut arm_env)? {
                let j = *join.get_or_insert_with(|| self.new_block());
                self.terminate(self.cur, Terminator::Goto(Target::new(j, vec![])));
                incoming.push((self.cur, EdgeSlot::Goto, arm_env));
            }
            self.cur = else_block;
        }
        if let Some(body) = else_body {
            let mut arm_env = env.clone();
            if let Flow::FallsThrough = self.block(body, &mut arm_env)? {
                let j = *join.get_or_insert_with(|| self.new_block());
                self.terminate(self.cur, Terminator::Goto(Target::new(j, vec![])));
                incoming.push((self.cur, EdgeSlot::Goto, arm_env));
            }
        }
        let Some(join) = join else {
            return Ok(Flow::Returned);
        };
        *env = self.bind_join(join, &incoming);
        self.cur = join;
        Ok(Flow::FallsThrough)
    }

    /// Creates the join block's parameters and fills in edge arguments.
    /// Variables not defined on every incoming edge are dropped.
    fn bind_join(&mut self, join: BlockId, incoming: &[(BlockId, EdgeSlot, Env)]) -> Env {
        let mut out = Env::new();
        let mut args: Vec<Vec<ValueId>> = vec![Vec::new(); incoming.len()];
        let (_, _, first) = &incoming[0];
        for (name, v0) in first {
            let values: Option<Vec<ValueId>> = incoming
                .iter()
                .map(|(_, _, e)| e.get(name).copied())
                .collect();
            let Some(values) = values else { continue };
            if values.iter().all(|v| v == v0) {
                out.insert(name.clone(), *v0);
            } else {
                let ty = self.func.value_type(*v0);
                let p = self.add_param(join, ty);
                out.insert(name.clone(), p);
                for (a, v) in args.iter_mut().zip(values) {
                    a.push(v);
                }
            }
        }
        for ((pred, slot, _), a) in incoming.iter().zip(args) {
            let term = self.terms[pred.index()].as_mut().expect("edge terminator");
            match (slot, term) {
                (EdgeSlot::Goto, Terminator::Goto(t)) => t.args = a,
                (EdgeSlot::Else, Terminator::CondGoto { else_target, .. }) => else_target.args = a,
                _ => unreachable!("edge slot matches terminator shape"),
            }
        }
        out
    }

    fn lower_while(
        &mut self,
        cond: &TExpr,
        body: &[TStmt],
        env: &mut Env,
    ) -> Result<Flow, LowerError> {
        let assigned = assigned_in(body);
        let carried: Vec<String> = env
            .keys()
            .filter(|k| assigned.contains(k.as_str()))
            .cloned()
            .collect();
        let header = self.new_block();
        let mut header_env = env.clone();
        let mut entry_args = Vec::new();
        for name in &carried {
            let v = env[name];
            entry_args.push(v);
            let p = self.add_param(header, self.func.value_type(v));
            header_env.insert(name.clone(), p);
        }
        self.terminate(self.cur, Terminator::Goto(Target::new(header, entry_args)));

        self.cur = header;
        let c = self.expr(cond, &header_env)?;
        let body_block = self.new_block();
        let exit_block = self.new_block();
        self.terminate(
            header,
            Terminator::CondGoto {
                cond: c,
                then_target: Target::new(body_block, vec![]),
                else_target: Target::new(exit_block, vec![]),
            },
        );

        self.cur = body_block;
        let mut body_env = header_env.clone();
        if let Flow::FallsThrough = self.block(body, &mut body_env)? {
            let back_args = carried.iter().map(|n| body_env[n]).collect();
            self.terminate(self.cur, Terminator::Goto(Target::new(header, back_args)));
        }
        self.cur = exit_block;
        *env = header_env;
        Ok(Flow::FallsThrough)
    }

    fn expr(&mut self, e: &TExpr, env: &Env) -> Result<ValueId, LowerError> {
        if !e.ty.is_concrete() {
            return Err(LowerError::Unstable {
                pos: e.pos,
                detail: format!("expression typed {}", e.ty),
            });
        }
        Ok(match &e.kind {
            TExprKind::Int(v) => self.emit(InstrOp::Const(Value::Int(*v)), vec![], e.ty),
            TExprKind::Float(v) => self.emit(InstrOp::Const(Value::Float(*v)), vec![], e.ty),
            TExprKind::Bool(v) => self.emit(InstrOp::Const(Value::Bool(*v)), vec![], e.ty),
            TExprKind::Var(name) => *env
                .get(name)
                .ok_or_else(|| LowerError::Internal(format!("{}: unbound `{name}`", e.pos)))?,
            TExprKind::Unary { imp, operand } | TExprKind::Convert { imp, operand } => {
                let o = self.expr(operand, env)?;
                self.emit(InstrOp::Operator(imp.clone()), vec![o], e.ty)
            }
            TExprKind::Binary { imp, lhs, rhs } => {
                let l = self.expr(lhs, env)?;
                let r = self.expr(rhs, env)?;
                self.emit(InstrOp::Operator(imp.clone()), vec![l, r], e.ty)
            }
            TExprKind::Unresolved { symbol, .. } => {
                return Err(LowerError::Unstable {
                    pos: e.pos,
                    detail: format!("unresolved `{symbol}`"),
                })
            }
        })
    }
}

fn assigned_in(body: &[TStmt]) -> std::collections::BTreeSet<String> {
    let mut out = std::collections::BTreeSet::new();
    fn walk(body: &[TStmt], out: &mut std::collections::BTreeSet<String>) {
        for s in body {
            match &s.kind {
                TStmtKind::Assign { target, .. } => {
                    out.insert(target.clone());
                }
                TStmtKind::If { arms, else_body } => {
                    for (_, b) in arms {
                        walk(b, out);
                    }
                    if let Some(b) = else_body {
                        walk(b, out);
                    }
                }
                TStmtKind::While { body, .. } => walk(body, out),
                TStmtKind::Return(_) => {}
            }
        }
    }
    walk(body, &mut out);
    out
}
