// SPDX-License-Identifier: Apache-2.0

//! Reference interpreters.
//!
//! [`interpret`] executes SSA directly and is the oracle the circuit
//! simulator is checked against. [`interpret_ast`] executes source with
//! dynamic types, which also covers functions that inference marks as
//! unstable.

use std::collections::HashMap;

use thiserror::Error;

use crate::frontend::{Expr, ExprKind, FunctionDef, Pos, Stmt, StmtKind};
use crate::ssa::{InstrOp, SsaFunction, Terminator, ValueId};
use crate::typeinfer::{dispatch, LatticeType, NoMethodError, Opcode, Symbol};
use crate::value::{eval, EvalError, Value};

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(u64),
    #[error("integer remainder by zero")]
    DivByZero,
    #[error("expected {expected} arguments, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("argument {index} should be {expected}, got {found}")]
    ArgType {
        index: usize,
        expected: LatticeType,
        found: LatticeType,
    },
    #[error("{pos}: {source}")]
    NoMethod { pos: Pos, source: NoMethodError },
    #[error("{pos}: condition is {found}, expected Bool")]
    NonBoolCondition { pos: Pos, found: LatticeType },
    #[error("{pos}: `{name}` is not defined")]
    UndefinedVar { pos: Pos, name: String },
    #[error("{0}")]
    Eval(EvalError),
    #[error("use of undefined {0}")]
    UnknownValue(ValueId),
}

impl From<EvalError> for InterpError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::DivByZero => InterpError::DivByZero,
            other => InterpError::Eval(other),
        }
    }
}

/// Result of a successful run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub value: Value,
    pub steps: u64,
}

struct Fuel {
    used: u64,
    limit: u64,
}

impl Fuel {
    fn burn(&mut self) -> Result<(), InterpError> {
        if self.used >= self.limit {
            return Err(InterpError::FuelExhausted(self.used));
        }
        self.used += 1;
        Ok(())
    }
}

fn check_args(expected: &[LatticeType], args: &[Value]) -> Result<(), InterpError> {
    if expected.len() != args.len() {
        return Err(InterpError::Arity {
            expected: expected.len(),
            found: args.len(),
        });
    }
    for (index, (t, a)) in expected.iter().zip(args).enumerate() {
        if a.ty() != *t {
            return Err(InterpError::ArgType {
                index,
                expected: *t,
                found: a.ty(),
            });
        }
    }
    Ok(())
}

/// Runs an SSA function. Every instruction and every terminator costs one
/// unit of fuel.
pub fn interpret(f: &SsaFunction, args: &[Value], fuel: u64) -> Result<Outcome, InterpError> {
    let tys: Vec<LatticeType> = f.params.iter().map(|(_, t)| *t).collect();
    check_args(&tys, args)?;
    let mut fuel = Fuel {
        used: 0,
        limit: fuel,
    };
    let mut env: Vec<Option<Value>> = vec![None; f.value_types.len()];
    let get = |env: &[Option<Value>], v: ValueId| {
        env.get(v.index())
            .copied()
            .flatten()
            .ok_or(InterpError::UnknownValue(v))
    };
    let mut block = f.entry;
    let mut incoming: Vec<Value> = args.to_vec();
    loop {
        let b = f.block(block);
        for ((p, _), v) in b.params.iter().zip(&incoming) {
            env[p.index()] = Some(*v);
        }
        for ins in &b.instrs {
            fuel.burn()?;
            let ops = ins
                .operands
                .iter()
                .map(|o| get(&env, *o))
                .collect::<Result<Vec<_>, _>>()?;
            let v = match &ins.op {
                InstrOp::Const(c) => *c,
                InstrOp::Operator(imp) => eval(imp.opcode, &ops)?,
                InstrOp::Select(t) => eval(Opcode::Select(*t), &ops)?,
            };
            env[ins.result.index()] = Some(v);
        }
        fuel.burn()?;
        let next = match &b.terminator {
            Terminator::Return(v) => {
                return Ok(Outcome {
                    value: get(&env, *v)?,
                    steps: fuel.used,
                })
            }
            Terminator::Goto(t) => t,
            Terminator::CondGoto {
                cond,
                then_target,
                else_target,
            } => match get(&env, *cond)? {
                Value::Bool(true) => then_target,
                Value::Bool(false) => else_target,
                other => {
                    return Err(InterpError::Eval(EvalError::OperandType {
                        opcode: Opcode::NotBool,
                        operands: vec![other],
                    }))
                }
            },
        };
        incoming = next
            .args
            .iter()
            .map(|a| get(&env, *a))
            .collect::<Result<Vec<_>, _>>()?;
        block = next.block;
    }
}

enum Flow {
    Next,
    Return(Value),
}

/// Runs a source function with dynamic types. Each statement and each
/// loop or branch test costs one unit of fuel. `&&` and `||` evaluate
/// both operands.
pub fn interpret_ast(f: &FunctionDef, args: &[Value], fuel: u64) -> Result<Outcome, InterpError> {
    if f.params.len() != args.len() {
        return Err(InterpError::Arity {
            expected: f.params.len(),
            found: args.len(),
        });
    }
    for (index, (p, a)) in f.params.iter().zip(args).enumerate() {
        if let Some(t) = p.ty {
            let t = LatticeType::from(t);
            if a.ty() != t {
                return Err(InterpError::ArgType {
                    index,
                    expected: t,
                    found: a.ty(),
                });
            }
        }
    }
    let mut env: HashMap<String, Value> = f
        .params
        .iter()
        .map(|p| p.name.clone())
        .zip(args.iter().copied())
        .collect();
    let mut fuel = Fuel {
        used: 0,
        limit: fuel,
    };
    match exec_block(&f.body, &mut env, &mut fuel)? {
        Flow::Return(value) => Ok(Outcome {
            value,
            steps: fuel.used,
        }),
        // The parser guarantees every path returns.
        Flow::Next => unreachable!("function body falls through"),
    }
}

fn exec_block(
    body: &[Stmt],
    env: &mut HashMap<String, Value>,
    fuel: &mut Fuel,
) -> Result<Flow, InterpError> {
    for s in body {
        fuel.burn()?;
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let v = eval_expr(value, env)?;
                env.insert(target.clone(), v);
            }
            StmtKind::Return(e) => return Ok(Flow::Return(eval_expr(e, env)?)),
            StmtKind::If {
                cond,
                then_body,
                elifs,
                else_body,
            } => {
                let mut taken = None;
                for (c, b) in
                    std::iter::once((cond, then_body)).chain(elifs.iter().map(|(c, b)| (c, b)))
                {
                    if truth(c, env)? {
                        taken = Some(b);
                        break;
                    }
                    fuel.burn()?;
                }
                let body = taken.or(else_body.as_ref());
                if let Some(b) = body {
                    if let Flow::Return(v) = exec_block(b, env, fuel)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::While { cond, body } => {
                while truth(cond, env)? {
                    if let Flow::Return(v) = exec_block(body, env, fuel)? {
                        return Ok(Flow::Return(v));
                    }
                    fuel.burn()?;
                }
            }
        }
    }
    Ok(Flow::Next)
}

fn truth(e: &Expr, env: &HashMap<String, Value>) -> Result<bool, InterpError> {
    match eval_expr(e, env)? {
        Value::Bool(b) => Ok(b),
        other => Err(InterpError::NonBoolCondition {
            pos: e.pos,
            found: other.ty(),
        }),
    }
}

fn apply(symbol: Symbol, pos: Pos, operands: Vec<Value>) -> Result<Value, InterpError> {
    let tys: Vec<LatticeType> = operands.iter().map(|v| v.ty()).collect();
    let d = dispatch(symbol, &tys).map_err(|source| InterpError::NoMethod { pos, source })?;
    let mut converted = Vec::with_capacity(operands.len());
    for (v, conv) in operands.into_iter().zip(&d.conversions) {
        converted.push(match conv {
            Some(c) => eval(c.opcode, &[v])?,
            None => v,
        });
    }
    Ok(eval(d.imp.opcode, &converted)?)
}

fn eval_expr(e: &Expr, env: &HashMap<String, Value>) -> Result<Value, InterpError> {
    match &e.kind {
        ExprKind::Int(i) => Ok(Value::Int(*i)),
        ExprKind::Float(x) => Ok(Value::Float(x.0)),
        ExprKind::Bool(b) => Ok(Value::Bool(*b)),
        ExprKind::Var(name) => env
            .get(name)
            .copied()
            .ok_or_else(|| InterpError::UndefinedVar {
                pos: e.pos,
                name: name.clone(),
            }),
        ExprKind::Unary(op, a) => {
            let a = eval_expr(a, env)?;
            apply(Symbol::Unary(*op), e.pos, vec![a])
        }
        ExprKind::Binary(op, a, b) => {
            let a = eval_expr(a, env)?;
            let b = eval_expr(b, env)?;
            apply(Symbol::Binary(*op), e.pos, vec![a, b])
        }
    }
}
