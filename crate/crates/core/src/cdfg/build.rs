// SPDX-License-Identifier: Apache-2.0

//! SSA to elastic CDFG construction.
//!
//! Every block receives a list of slots: its parameters, then its other
//! live-in values in id order, then its control token. A block with one
//! incoming edge simply aliases the slots to what the edge provides. A
//! block with several incoming edges gets one `Mux` per slot, control
//! included, all selected by an index `Merge` fed with a `Const` edge
//! number per incoming control token. The control token is unique, so
//! index tokens never race, and a data token that arrives early (say a
//! back-edge value overtaking a slow initial value) waits at its `Mux`
//! until its turn. A `condgoto` steers every value either successor
//! needs, plus the control token, through its own `Branch`.
//!
//! Wiring goes through nets (a driver plus its consumers) so forks and
//! sinks can be decided once every consumer is known.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{Cdfg, ComponentId, ComponentKind, Endpoint, LatencyConfig};
use crate::ssa::analysis::{liveness, predecessors};
use crate::ssa::{verify, BlockId, InstrOp, SsaFunction, Terminator, ValueId, Violation};
use crate::typeinfer::{LatticeType, Opcode};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("value {0} has non-concrete type {1}")]
    NotTypeStable(ValueId, LatticeType),
    #[error("malformed SSA: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildOptions {
    pub latencies: LatencyConfig,
}

type NetId = usize;

#[derive(Clone, Copy)]
enum Driver {
    Port(Endpoint),
    Alias(NetId),
    Pending,
}

struct Net {
    driver: Driver,
    ty: Option<LatticeType>,
    consumers: Vec<Endpoint>,
}

struct Builder {
    g: Cdfg,
    nets: Vec<Net>,
}

struct Join {
    index: ComponentId,
    index_ty: LatticeType,
    muxes: Vec<ComponentId>,
}

/// Select value that makes a `Mux` with `n` inputs pick input `e`.
fn select_value(n: usize, e: usize) -> Value {
    if n == 2 {
        Value::Bool(e == 0)
    } else {
        Value::Int(e as i64)
    }
}

/// What one block expects on entry, slot by slot.
struct Slots {
    values: Vec<ValueId>,
    /// Net per slot (values first, control last).
    nets: Vec<NetId>,
    /// Index merge and per-slot muxes when the block has several
    /// incoming edges.
    join: Option<Join>,
    /// Number of parameters at the front of `values`.
    n_params: usize,
}

pub fn build_cdfg(f: &SsaFunction, opts: &BuildOptions) -> Result<Cdfg, BuildError> {
    let violations = verify(f);
    if !violations.is_empty() {
        return Err(BuildError::Invalid(violations));
    }
    for (i, t) in f.value_types.iter().enumerate() {
        if !t.is_concrete() {
            return Err(BuildError::NotTypeStable(ValueId(i as u32), *t));
        }
    }
    let mut b = Builder {
        g: Cdfg {
            name: f.name.clone(),
            components: Vec::new(),
            channels: Vec::new(),
            entries: Vec::new(),
            start: 0,
            exit: 0,
        },
        nets: Vec::new(),
    };
    let preds = predecessors(f);
    let live = liveness(f);

    // Entries.
    let mut slots: Vec<Slots> = Vec::with_capacity(f.blocks.len());
    for (i, (v, ty)) in f.params.iter().enumerate() {
        let c =
            b.g.add_component(ComponentKind::Entry { index: Some(i) }, Some(*ty));
        b.g.entries.push(c);
        let _ = v;
    }
    b.g.start =
        b.g.add_component(ComponentKind::Entry { index: None }, None);

    // Slots for every block.
    for blk in &f.blocks {
        let mut values: Vec<ValueId> = blk.params.iter().map(|(v, _)| *v).collect();
        let n_params = values.len();
        let params: BTreeSet<ValueId> = values.iter().copied().collect();
        values.extend(
            live.live_in[blk.id.index()]
                .iter()
                .filter(|v| !params.contains(v)),
        );
        let mut tys: Vec<Option<LatticeType>> =
            values.iter().map(|v| Some(f.value_type(*v))).collect();
        tys.push(None);
        let n_edges = preds[blk.id.index()].len();
        let (nets, join) = if blk.id == f.entry {
            let mut nets: Vec<NetId> =
                b.g.entries
                    .clone()
                    .into_iter()
                    .zip(&tys)
                    .map(|(c, t)| b.net_from(c, 0, *t))
                    .collect();
            nets.push(b.net_from(b.g.start, 0, None));
            (nets, None)
        } else if n_edges >= 2 {
            let index_ty = match select_value(n_edges, 0) {
                Value::Bool(_) => LatticeType::Bool,
                _ => LatticeType::Int64,
            };
            let index =
                b.g.add_component(ComponentKind::Merge { n: n_edges }, Some(index_ty));
            let select = b.net_from(index, 0, Some(index_ty));
            let mut nets = Vec::new();
            let mut muxes = Vec::new();
            for t in &tys {
                let m = b.g.add_component(ComponentKind::Mux { n: n_edges }, *t);
                b.consume(select, m, 0);
                muxes.push(m);
                nets.push(b.net_from(m, 0, *t));
            }
            (
                nets,
                Some(Join {
                    index,
                    index_ty,
                    muxes,
                }),
            )
        } else {
            let nets = tys.iter().map(|t| b.new_net(Driver::Pending, *t)).collect();
            (nets, None)
        };
        slots.push(Slots {
            values,
            nets,
            join,
            n_params,
        });
    }

    // Per-edge providers: (target block, edge index at target) -> nets.
    let mut edge_sources: Vec<Vec<Option<Vec<NetId>>>> =
        preds.iter().map(|p| vec![None; p.len()]).collect();
    let edge_index = |from: BlockId, term_edge: usize, to: BlockId| {
        preds[to.index()]
            .iter()
            .position(|(p, e)| *p == from && *e == term_edge)
            .expect("edge recorded in predecessors")
    };

    let n_returns = f
        .blocks
        .iter()
        .filter(|blk| matches!(blk.terminator, Terminator::Return(_)))
        .count();
    b.g.exit = b.g.add_component(ComponentKind::Exit, Some(f.return_type));
    let exit_merge = if n_returns >= 2 {
        let m =
            b.g.add_component(ComponentKind::Merge { n: n_returns }, Some(f.return_type));
        let out = b.net_from(m, 0, Some(f.return_type));
        b.consume(out, b.g.exit, 0);
        Some(m)
    } else {
        None
    };
    let mut returns_seen = 0;

    for blk in &f.blocks {
        let s = &slots[blk.id.index()];
        let mut env: std::collections::HashMap<ValueId, NetId> = s
            .values
            .iter()
            .copied()
            .zip(s.nets.iter().copied())
            .collect();
        let ctrl = *s.nets.last().expect("control slot");
        for ins in &blk.instrs {
            let ty = f.value_type(ins.result);
            let (kind, inputs) = match &ins.op {
                InstrOp::Const(v) => (ComponentKind::Const { value: *v }, vec![ctrl]),
                InstrOp::Operator(imp) => (
                    ComponentKind::Operator {
                        opcode: imp.opcode,
                        latency: opts.latencies.latency(imp.opcode),
                    },
                    ins.operands.iter().map(|o| env[o]).collect(),
                ),
                InstrOp::Select(t) => (
                    ComponentKind::Operator {
                        opcode: Opcode::Select(*t),
                        latency: opts.latencies.latency(Opcode::Select(*t)),
                    },
                    ins.operands.iter().map(|o| env[o]).collect(),
                ),
            };
            let c = b.g.add_component(kind, Some(ty));
            for (port, n) in inputs.into_iter().enumerate() {
                b.consume(n, c, port);
            }
            env.insert(ins.result, b.net_from(c, 0, Some(ty)));
        }

        // Values the successor expects on edge `t`, slot by slot.
        let wanted = |t: &crate::ssa::Target| -> Vec<ValueId> {
            let ts = &slots[t.block.index()];
            let mut v = t.args.clone();
            v.extend(&ts.values[ts.n_params..]);
            v
        };
        match &blk.terminator {
            Terminator::Return(v) => {
                match exit_merge {
                    Some(m) => b.consume(env[v], m, returns_seen),
                    None => b.consume(env[v], b.g.exit, 0),
                }
                returns_seen += 1;
            }
            Terminator::Goto(t) => {
                let mut nets: Vec<NetId> = wanted(t).iter().map(|v| env[v]).collect();
                nets.push(ctrl);
                let e = edge_index(blk.id, 0, t.block);
                edge_sources[t.block.index()][e] = Some(nets);
            }
            Terminator::CondGoto {
                cond,
                then_target,
                else_target,
            } => {
                let want_t = wanted(then_target);
                let want_e = wanted(else_target);
                let mut steered: Vec<ValueId> = Vec::new();
                for v in want_t.iter().chain(&want_e) {
                    if !steered.contains(v) {
                        steered.push(*v);
                    }
                }
                let cond_net = env[cond];
                let mut outs: std::collections::HashMap<ValueId, (NetId, NetId)> =
                    Default::default();
                for v in &steered {
                    outs.insert(*v, b.branch(env[v], cond_net, Some(f.value_type(*v))));
                }
                let (ctrl_t, ctrl_f) = b.branch(ctrl, cond_net, None);
                for (edge, target, want, side) in [
                    (0, then_target, &want_t, true),
                    (1, else_target, &want_e, false),
                ] {
                    let mut nets: Vec<NetId> = want
                        .iter()
                        .map(|v| if side { outs[v].0 } else { outs[v].1 })
                        .collect();
                    nets.push(if side { ctrl_t } else { ctrl_f });
                    let e = edge_index(blk.id, edge, target.block);
                    edge_sources[target.block.index()][e] = Some(nets);
                }
            }
        }
    }

    // Close edges into their target slots.
    for (bi, s) in slots.iter().enumerate() {
        if BlockId(bi as u32) == f.entry {
            continue;
        }
        for (e, src) in edge_sources[bi].iter().enumerate() {
            let src = src.as_ref().expect("every edge has a provider");
            debug_assert_eq!(src.len(), s.nets.len());
            match &s.join {
                Some(join) => {
                    for (n, m) in src.iter().zip(&join.muxes) {
                        b.consume(*n, *m, 1 + e);
                    }
                    let ctrl = *src.last().expect("control slot");
                    let k = b.g.add_component(
                        ComponentKind::Const {
                            value: select_value(edge_sources[bi].len(), e),
                        },
                        Some(join.index_ty),
                    );
                    b.consume(ctrl, k, 0);
                    let out = b.net_from(k, 0, Some(join.index_ty));
                    b.consume(out, join.index, e);
                }
                None => {
                    for (n, slot) in src.iter().zip(&s.nets) {
                        b.nets[*slot].driver = Driver::Alias(*n);
                    }
                }
            }
        }
    }

    Ok(b.finish())
}

impl Builder {
    fn new_net(&mut self, driver: Driver, ty: Option<LatticeType>) -> NetId {
        self.nets.push(Net {
            driver,
            ty,
            consumers: Vec::new(),
        });
        self.nets.len() - 1
    }

    fn net_from(&mut self, component: ComponentId, port: usize, ty: Option<LatticeType>) -> NetId {
        self.new_net(Driver::Port(Endpoint { component, port }), ty)
    }

    fn consume(&mut self, net: NetId, component: ComponentId, port: usize) {
        self.nets[net].consumers.push(Endpoint { component, port });
    }

    /// Adds a `Branch` steering `data` by `cond`; returns the true and
    /// false output nets.
    fn branch(&mut self, data: NetId, cond: NetId, ty: Option<LatticeType>) -> (NetId, NetId) {
        let c = self.g.add_component(ComponentKind::Branch, ty);
        self.consume(data, c, 0);
        self.consume(cond, c, 1);
        (self.net_from(c, 0, ty), self.net_from(c, 1, ty))
    }

    fn root(&self, mut n: NetId) -> NetId {
        loop {
            match self.nets[n].driver {
                Driver::Alias(next) => n = next,
                _ => return n,
            }
        }
    }

    /// Turns nets into channels: no consumer gets a `Sink`, one consumer
    /// a direct channel, several consumers a `Fork`.
    fn finish(mut self) -> Cdfg {
        let mut grouped: Vec<Vec<Endpoint>> = vec![Vec::new(); self.nets.len()];
        for n in 0..self.nets.len() {
            let r = self.root(n);
            let consumers = std::mem::take(&mut self.nets[n].consumers);
            grouped[r].extend(consumers);
        }
        for (n, consumers) in grouped.into_iter().enumerate() {
            let Driver::Port(src) = self.nets[n].driver else {
                continue;
            };
            let ty = self.nets[n].ty;
            match consumers.len() {
                0 => {
                    let s = self.g.add_component(ComponentKind::Sink, ty);
                    self.g.connect(
                        src,
                        Endpoint {
                            component: s,
                            port: 0,
                        },
                    );
                }
                1 => {
                    self.g.connect(src, consumers[0]);
                }
                k => {
                    let fk = self.g.add_component(ComponentKind::Fork { n: k }, ty);
                    self.g.connect(
                        src,
                        Endpoint {
                            component: fk,
                            port: 0,
                        },
                    );
                    for (i, dst) in consumers.into_iter().enumerate() {
                        self.g.connect(
                            Endpoint {
                                component: fk,
                                port: i,
                            },
                            dst,
                        );
                    }
                }
            }
        }
        self.g
    }
}
