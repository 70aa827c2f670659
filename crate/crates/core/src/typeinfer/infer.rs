// SPDX-License-Identifier: Apache-2.0

//! Forward data-flow type inference.
//!
//! The function body is flattened into a statement graph (assignments,
//! branch tests and returns). A worklist iterates variable environments
//! over that graph to the least fixpoint; at merge points each variable's
//! type is the lattice join of the incoming types. A final pass walks the
//! syntax tree with the fixpoint environments, resolves every operator
//! through [`dispatch`] and reports errors.

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use super::dispatch::{dispatch, NoMethodError, OperatorImpl, Symbol};
use super::LatticeType;
use crate::frontend::{Expr, ExprKind, FunctionDef, Pos, Stmt, StmtKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("{pos}: {source}")]
    NoMethod {
        pos: Pos,
        #[source]
        source: NoMethodError,
    },
    #[error("{pos}: {message}")]
    Mismatch { pos: Pos, message: String },
    #[error("{pos}: type instability: {detail}")]
    Unstable { pos: Pos, detail: String },
    #[error("{pos}: `{name}` is not defined on every path reaching this use")]
    UndefinedVar { pos: Pos, name: String },
    #[error("{pos}: signature: {message}")]
    Signature { pos: Pos, message: String },
}

impl TypeError {
    pub fn pos(&self) -> Pos {
        match self {
            TypeError::NoMethod { pos, .. }
            | TypeError::Mismatch { pos, .. }
            | TypeError::Unstable { pos, .. }
            | TypeError::UndefinedVar { pos, .. }
            | TypeError::Signature { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: LatticeType,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    Var(String),
    Unary {
        imp: OperatorImpl,
        operand: Box<TExpr>,
    },
    Binary {
        imp: OperatorImpl,
        lhs: Box<TExpr>,
        rhs: Box<TExpr>,
    },
    /// Explicit promotion inserted by dispatch (`sitofp`).
    Convert {
        imp: OperatorImpl,
        operand: Box<TExpr>,
    },
    /// Only produced in lenient mode for operations whose operands are not
    /// concrete; never lowered.
    Unresolved {
        symbol: &'static str,
        operands: Vec<TExpr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TStmt {
    pub kind: TStmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TStmtKind {
    Assign {
        target: String,
        value: TExpr,
    },
    /// `arms` holds the `if` arm followed by every `elseif` arm.
    If {
        arms: Vec<(TExpr, Vec<TStmt>)>,
        else_body: Option<Vec<TStmt>>,
    },
    While {
        cond: TExpr,
        body: Vec<TStmt>,
    },
    Return(TExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instability {
    pub pos: Pos,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedFunction {
    pub name: String,
    pub params: Vec<(String, LatticeType)>,
    pub body: Vec<TStmt>,
    pub return_type: LatticeType,
    /// True iff no variable or expression is typed `Top`.
    pub type_stable: bool,
    pub instabilities: Vec<Instability>,
    pub stats: InferStats,
}

/// Fixpoint bookkeeping, exposed for convergence checks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InferStats {
    /// Worklist pops until the fixpoint was reached.
    pub visits: usize,
    /// Per statement-graph node, how many times its input environment grew.
    pub node_updates: Vec<usize>,
    /// Distinct variable names in the function.
    pub var_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WorklistOrder {
    /// Nodes seeded in program order, processed first-in first-out.
    #[default]
    Forward,
    /// Nodes seeded in reverse program order, processed last-in first-out.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InferOptions {
    /// Reject any `Top`-typed value instead of recording it.
    pub strict: bool,
    pub order: WorklistOrder,
}

impl Default for InferOptions {
    fn default() -> Self {
        InferOptions {
            strict: true,
            order: WorklistOrder::Forward,
        }
    }
}

/// Checks the entry signature against the parameter list and annotations.
/// With `sig == None` every parameter must be annotated.
pub fn resolve_signature(
    f: &FunctionDef,
    sig: Option<&[LatticeType]>,
) -> Result<Vec<LatticeType>, TypeError> {
    let sig_error = |pos: Pos, message: String| TypeError::Signature { pos, message };
    match sig {
        Some(sig) => {
            if sig.len() != f.params.len() {
                return Err(sig_error(
                    f.pos,
                    format!(
                        "`{}` takes {} parameter(s) but the signature has {}",
                        f.name,
                        f.params.len(),
                        sig.len()
                    ),
                ));
            }
            for (p, t) in f.params.iter().zip(sig) {
                if !t.is_concrete() {
                    return Err(sig_error(
                        p.pos,
                        format!("`{}` must have a concrete type, got {t}", p.name),
                    ));
                }
                if let Some(ann) = p.ty {
                    if LatticeType::from(ann) != *t {
                        return Err(sig_error(
                            p.pos,
                            format!(
                                "`{}` is annotated {} but the signature says {t}",
                                p.name,
                                ann.as_str()
                            ),
                        ));
                    }
                }
            }
            Ok(sig.to_vec())
        }
        None => f
            .params
            .iter()
            .map(|p| {
                p.ty.map(LatticeType::from).ok_or_else(|| {
                    sig_error(
                        p.pos,
                        format!("`{}` has no annotation and no signature was given", p.name),
                    )
                })
            })
            .collect(),
    }
}

pub fn infer(f: &FunctionDef, entry_sig: &[LatticeType]) -> Result<TypedFunction, TypeError> {
    infer_with(f, entry_sig, InferOptions::default())
}

pub fn infer_with(
    f: &FunctionDef,
    entry_sig: &[LatticeType],
    options: InferOptions,
) -> Result<TypedFunction, TypeError> {
    let sig = resolve_signature(f, Some(entry_sig))?;
    let graph = StmtGraph::build(f);
    let mut entry_env = Env::new();
    for (p, t) in f.params.iter().zip(&sig) {
        entry_env.insert(
            p.name.clone(),
            VarState {
                ty: *t,
                maybe_undef: false,
            },
        );
    }
    let (states, mut stats) = graph.fixpoint(&entry_env, options.order);
    stats.var_count = count_vars(f);

    let mut annotator = Annotator {
        graph: &graph,
        states: &states,
        strict: options.strict,
        instabilities: Vec::new(),
        return_type: LatticeType::Bottom,
    };
    // Variables that are Top anywhere make the function unstable even if
    // they are never read afterwards.
    for (node, state) in states.iter().enumerate() {
        if let Some(env) = state {
            for (name, vs) in env {
                if vs.ty == LatticeType::Top {
                    annotator.unstable(
                        graph.nodes[node].pos,
                        format!("variable `{name}` has conflicting types at a merge"),
                    )?;
                }
            }
        }
    }
    let body = annotator.block(&f.body)?;
    let return_type = annotator.return_type;
    if return_type == LatticeType::Top {
        annotator.unstable(
            f.pos,
            format!("`{}` returns values of different types", f.name),
        )?;
    }
    let instabilities = dedup(annotator.instabilities);
    Ok(TypedFunction {
        name: f.name.clone(),
        params: f.params.iter().map(|p| p.name.clone()).zip(sig).collect(),
        body,
        return_type,
        type_stable: instabilities.is_empty(),
        instabilities,
        stats,
    })
}

fn dedup(mut v: Vec<Instability>) -> Vec<Instability> {
    let mut seen = std::collections::HashSet::new();
    v.retain(|i| seen.insert((i.pos, i.detail.clone())));
    v
}

fn count_vars(f: &FunctionDef) -> usize {
    let mut names: std::collections::BTreeSet<String> =
        f.params.iter().map(|p| p.name.clone()).collect();
    names.extend(crate::frontend::assigned_vars(&f.body));
    names.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct VarState {
    ty: LatticeType,
    /// Some path reaching this point does not assign the variable.
    maybe_undef: bool,
}

type Env = BTreeMap<String, VarState>;

fn join_env(a: &Env, b: &Env) -> Env {
    let mut out = Env::new();
    for (name, va) in a {
        let v = match b.get(name) {
            Some(vb) => VarState {
                ty: va.ty.join(vb.ty),
                maybe_undef: va.maybe_undef || vb.maybe_undef,
            },
            None => VarState {
                ty: va.ty,
                maybe_undef: true,
            },
        };
        out.insert(name.clone(), v);
    }
    for (name, vb) in b {
        out.entry(name.clone()).or_insert(VarState {
            ty: vb.ty,
            maybe_undef: true,
        });
    }
    out
}

#[derive(Debug)]
enum NodeKind<'a> {
    Assign { target: &'a str, value: &'a Expr },
    Test,
    Return,
}

#[derive(Debug)]
struct Node<'a> {
    kind: NodeKind<'a>,
    pos: Pos,
    succs: Vec<usize>,
}

/// One node per assignment, branch test and return; edges follow control
/// flow. The first node is the function entry.
struct StmtGraph<'a> {
    nodes: Vec<Node<'a>>,
    preds: Vec<Vec<usize>>,
    entry: Option<usize>,
    /// Node of each statement (tests for `if`/`while`) keyed by address.
    stmt_node: HashMap<*const Stmt, usize>,
    /// Test nodes of `elseif` conditions keyed by expression address.
    elif_node: HashMap<*const Expr, usize>,
}

impl<'a> StmtGraph<'a> {
    fn build(f: &'a FunctionDef) -> Self {
        let mut g = StmtGraph {
            nodes: Vec::new(),
            preds: Vec::new(),
            entry: None,
            stmt_node: HashMap::new(),
            elif_node: HashMap::new(),
        };
        g.entry = g.block(&f.body, None);
        // Open successors only remain where control falls off the end of
        // the function, which the parser already rejects.
        for n in &mut g.nodes {
            n.succs.retain(|s| *s != usize::MAX);
        }
        g.preds = vec![Vec::new(); g.nodes.len()];
        for (i, n) in g.nodes.iter().enumerate() {
            for s in &n.succs {
                g.preds[*s].push(i);
            }
        }
        g
    }

    fn add(&mut self, kind: NodeKind<'a>, pos: Pos, succs: Vec<usize>) -> usize {
        self.nodes.push(Node { kind, pos, succs });
        self.nodes.len() - 1
    }

    /// Builds `stmts` so that falling off the end continues at `next`;
    /// returns the first node executed.
    fn block(&mut self, stmts: &'a [Stmt], next: Option<usize>) -> Option<usize> {
        // Statements are created front to back so node ids follow program
        // order; successors are patched once the continuation is known.
        let mut first = None;
        let mut pending: Vec<(usize, usize)> = Vec::new(); // (node, succ slot) to patch
        for stmt in stmts {
            let (entry, exits) = self.stmt(stmt);
            if first.is_none() {
                first = Some(entry);
            }
            for (node, slot) in pending.drain(..) {
                self.nodes[node].succs[slot] = entry;
            }
            pending = exits;
        }
        if let Some(n) = next {
            for (node, slot) in pending {
                self.nodes[node].succs[slot] = n;
            }
        }
        first.or(next)
    }

    /// Returns the statement's first node and the (node, slot) successor
    /// placeholders that continue after it.
    fn stmt(&mut self, stmt: &'a Stmt) -> (usize, Vec<(usize, usize)>) {
        const HOLE: usize = usize::MAX;
        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let n = self.add(NodeKind::Assign { target, value }, stmt.pos, vec![HOLE]);
                self.stmt_node.insert(stmt, n);
                (n, vec![(n, 0)])
            }
            StmtKind::Return(_) => {
                let n = self.add(NodeKind::Return, stmt.pos, vec![]);
                self.stmt_node.insert(stmt, n);
                (n, vec![])
            }
            StmtKind::While { body, .. } => {
                let test = self.add(NodeKind::Test, stmt.pos, vec![HOLE, HOLE]);
                self.stmt_node.insert(stmt, test);
                let body_entry = self.block(body, Some(test)).unwrap_or(test);
                self.nodes[test].succs[0] = body_entry;
                (test, vec![(test, 1)])
            }
            StmtKind::If {
                then_body,
                elifs,
                else_body,
                ..
            } => {
                let mut exits = Vec::new();
                let test = self.add(NodeKind::Test, stmt.pos, vec![HOLE, HOLE]);
                self.stmt_node.insert(stmt, test);
                let mut arms: Vec<(usize, &'a [Stmt])> = vec![(test, then_body.as_slice())];
                for (c, b) in elifs {
                    let t = self.add(NodeKind::Test, c.pos, vec![HOLE, HOLE]);
                    self.elif_node.insert(c, t);
                    arms.push((t, b.as_slice()));
                }
                for (i, (t, body)) in arms.iter().enumerate() {
                    let (entry, arm_exits) = self.sub_block(body);
                    match entry {
                        Some(e) => self.nodes[*t].succs[0] = e,
                        None => exits.push((*t, 0)),
                    }
                    exits.extend(arm_exits);
                    if let Some((next_test, _)) = arms.get(i + 1) {
                        self.nodes[*t].succs[1] = *next_test;
                    }
                }
                let last_test = arms.last().expect("if arm").0;
                match else_body {
                    Some(b) => {
                        let (entry, arm_exits) = self.sub_block(b);
                        match entry {
                            Some(e) => self.nodes[last_test].succs[1] = e,
                            None => exits.push((last_test, 1)),
                        }
                        exits.extend(arm_exits);
                    }
                    None => exits.push((last_test, 1)),
                }
                (test, exits)
            }
        }
    }

    /// Like [`Self::block`] but leaves the fall-through placeholders open.
    fn sub_block(&mut self, stmts: &'a [Stmt]) -> (Option<usize>, Vec<(usize, usize)>) {
        let mut first = None;
        let mut pending: Vec<(usize, usize)> = Vec::new();
        for stmt in stmts {
            let (entry, exits) = self.stmt(stmt);
            if first.is_none() {
                first = Some(entry);
            }
            for (node, slot) in pending.drain(..) {
                self.nodes[node].succs[slot] = entry;
            }
            pending = exits;
        }
        (first, pending)
    }

    fn transfer(&self, node: usize, input: &Env) -> Env {
        match &self.nodes[node].kind {
            NodeKind::Assign { target, value } => {
                let mut out = input.clone();
                out.insert(
                    target.to_string(),
                    VarState {
                        ty: flow_type(value, input),
                        maybe_undef: false,
                    },
                );
                out
            }
            NodeKind::Test | NodeKind::Return => input.clone(),
        }
    }

    /// Iterates input environments to the least fixpoint. `None` marks a
    /// node not (yet) reached.
    fn fixpoint(&self, entry_env: &Env, order: WorklistOrder) -> (Vec<Option<Env>>, InferStats) {
        let n = self.nodes.len();
        let mut input: Vec<Option<Env>> = vec![None; n];
        let mut output: Vec<Option<Env>> = vec![None; n];
        let mut stats = InferStats {
            node_updates: vec![0; n],
            ..InferStats::default()
        };
        let mut queued = vec![true; n];
        let mut worklist: VecDeque<usize> = match order {
            WorklistOrder::Forward => (0..n).collect(),
            WorklistOrder::Reverse => (0..n).rev().collect(),
        };
        let pop = |wl: &mut VecDeque<usize>| match order {
            WorklistOrder::Forward => wl.pop_front(),
            WorklistOrder::Reverse => wl.pop_back(),
        };
        while let Some(node) = pop(&mut worklist) {
            queued[node] = false;
            stats.visits += 1;
            let mut new_in: Option<Env> = if Some(node) == self.entry {
                Some(entry_env.clone())
            } else {
                None
            };
            for p in &self.preds[node] {
                if let Some(out) = &output[*p] {
                    new_in = Some(match new_in {
                        Some(acc) => join_env(&acc, out),
                        None => out.clone(),
                    });
                }
            }
            if new_in.is_none() || new_in == input[node] {
                continue;
            }
            stats.node_updates[node] += 1;
            let out = self.transfer(node, new_in.as_ref().expect("reached"));
            input[node] = new_in;
            if output[node].as_ref() != Some(&out) {
                output[node] = Some(out);
                for s in &self.nodes[node].succs {
                    if !queued[*s] {
                        queued[*s] = true;
                        worklist.push_back(*s);
                    }
                }
            }
        }
        (input, stats)
    }
}

/// Expression type during the fixpoint: never fails, unknown operands
/// give `Bottom` and unresolvable ones `Top`.
fn flow_type(e: &Expr, env: &Env) -> LatticeType {
    match &e.kind {
        ExprKind::Int(_) => LatticeType::Int64,
        ExprKind::Float(_) => LatticeType::Float64,
        ExprKind::Bool(_) => LatticeType::Bool,
        ExprKind::Var(name) => match env.get(name) {
            Some(v) => v.ty,
            None => LatticeType::Bottom,
        },
        ExprKind::Unary(op, operand) => {
            operator_flow_type(Symbol::Unary(*op), &[flow_type(operand, env)])
        }
        ExprKind::Binary(op, lhs, rhs) => operator_flow_type(
            Symbol::Binary(*op),
            &[flow_type(lhs, env), flow_type(rhs, env)],
        ),
    }
}

fn operator_flow_type(symbol: Symbol, operands: &[LatticeType]) -> LatticeType {
    if operands.contains(&LatticeType::Bottom) {
        LatticeType::Bottom
    } else {
        dispatch(symbol, operands)
            .map(|d| d.imp.result_type)
            .unwrap_or(LatticeType::Top)
    }
}

struct Annotator<'g, 'a> {
    graph: &'g StmtGraph<'a>,
    states: &'g [Option<Env>],
    strict: bool,
    instabilities: Vec<Instability>,
    return_type: LatticeType,
}

impl Annotator<'_, '_> {
    fn unstable(&mut self, pos: Pos, detail: String) -> Result<(), TypeError> {
        if self.strict {
            Err(TypeError::Unstable { pos, detail })
        } else {
            self.instabilities.push(Instability { pos, detail });
            Ok(())
        }
    }

    fn env_at(&self, node: usize) -> &Env {
        // Every statement is reachable once the parser has rejected code
        // after unconditional returns.
        self.states[node]
            .as_ref()
            .expect("statement graph node reached by the fixpoint")
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Vec<TStmt>, TypeError> {
        stmts.iter().map(|s| self.stmt(s)).collect()
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<TStmt, TypeError> {
        let node = self.graph.stmt_node[&(stmt as *const Stmt)];
        let kind = match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let env = self.env_at(node).clone();
                TStmtKind::Assign {
                    target: target.clone(),
                    value: self.expr(value, &env)?,
                }
            }
            StmtKind::Return(e) => {
                let env = self.env_at(node).clone();
                let value = self.expr(e, &env)?;
                self.return_type = self.return_type.join(value.ty);
                TStmtKind::Return(value)
            }
            StmtKind::While { cond, body } => {
                let env = self.env_at(node).clone();
                let cond = self.condition(cond, &env)?;
                TStmtKind::While {
                    cond,
                    body: self.block(body)?,
                }
            }
            StmtKind::If {
                cond,
                then_body,
                elifs,
                else_body,
            } => {
                let env = self.env_at(node).clone();
                let mut arms = vec![(self.condition(cond, &env)?, self.block(then_body)?)];
                for (c, b) in elifs {
                    let n = self.graph.elif_node[&(c as *const Expr)];
                    let env = self.env_at(n).clone();
                    arms.push((self.condition(c, &env)?, self.block(b)?));
                }
                let else_body = match else_body {
                    Some(b) => Some(self.block(b)?),
                    None => None,
                };
                TStmtKind::If { arms, else_body }
            }
        };
        Ok(TStmt {
            kind,
            pos: stmt.pos,
        })
    }

    fn condition(&mut self, cond: &Expr, env: &Env) -> Result<TExpr, TypeError> {
        let c = self.expr(cond, env)?;
        match c.ty {
            LatticeType::Bool => {}
            LatticeType::Top => self.unstable(c.pos, "condition type is not concrete".into())?,
            other => {
                return Err(TypeError::Mismatch {
                    pos: c.pos,
                    message: format!("condition must be Bool, found {other}"),
                })
            }
        }
        Ok(c)
    }

    fn expr(&mut self, e: &Expr, env: &Env) -> Result<TExpr, TypeError> {
        let (kind, ty) = match &e.kind {
            ExprKind::Int(v) => (TExprKind::Int(*v), LatticeType::Int64),
            ExprKind::Float(v) => (TExprKind::Float(v.0), LatticeType::Float64),
            ExprKind::Bool(v) => (TExprKind::Bool(*v), LatticeType::Bool),
            ExprKind::Var(name) => match env.get(name) {
                Some(VarState {
                    ty,
                    maybe_undef: false,
                }) => {
                    if *ty == LatticeType::Top {
                        self.unstable(e.pos, format!("`{name}` has no single concrete type here"))?;
                    }
                    (TExprKind::Var(name.clone()), *ty)
                }
                _ => {
                    return Err(TypeError::UndefinedVar {
                        pos: e.pos,
                        name: name.clone(),
                    })
                }
            },
            ExprKind::Unary(op, operand) => {
                let operand = self.expr(operand, env)?;
                return self.apply(Symbol::Unary(*op), vec![operand], e.pos);
            }
            ExprKind::Binary(op, lhs, rhs) => {
                let lhs = self.expr(lhs, env)?;
                let rhs = self.expr(rhs, env)?;
                return self.apply(Symbol::Binary(*op), vec![lhs, rhs], e.pos);
            }
        };
        Ok(TExpr {
            kind,
            ty,
            pos: e.pos,
        })
    }

    fn apply(
        &mut self,
        symbol: Symbol,
        operands: Vec<TExpr>,
        pos: Pos,
    ) -> Result<TExpr, TypeError> {
        let types: Vec<LatticeType> = operands.iter().map(|o| o.ty).collect();
        if types.iter().any(|t| !t.is_concrete()) {
            // Only reachable in lenient mode: Top operands were recorded.
            self.unstable(
                pos,
                format!("operands of `{}` are not concrete", symbol.as_str()),
            )?;
            return Ok(TExpr {
                kind: TExprKind::Unresolved {
                    symbol: symbol.as_str(),
                    operands,
                },
                ty: LatticeType::Top,
                pos,
            });
        }
        let d = dispatch(symbol, &types).map_err(|source| TypeError::NoMethod { pos, source })?;
        let mut converted: Vec<TExpr> = operands
            .into_iter()
            .zip(d.conversions)
            .map(|(o, conv)| match conv {
                Some(imp) => TExpr {
                    ty: imp.result_type,
                    pos: o.pos,
                    kind: TExprKind::Convert {
                        imp,
                        operand: Box::new(o),
                    },
                },
                None => o,
            })
            .collect();
        let ty = d.imp.result_type;
        let kind = match symbol {
            Symbol::Unary(_) => TExprKind::Unary {
                imp: d.imp,
                operand: Box::new(converted.remove(0)),
            },
            Symbol::Binary(_) => {
                let rhs = converted.pop().expect("rhs");
                let lhs = converted.pop().expect("lhs");
                TExprKind::Binary {
                    imp: d.imp,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                }
            }
        };
        Ok(TExpr { kind, ty, pos })
    }
}
