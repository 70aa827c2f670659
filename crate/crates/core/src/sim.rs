// SPDX-License-Identifier: Apache-2.0

//! Cycle-accurate token-flow simulation of an elastic CDFG.
//!
//! A channel holds at most one token; a token moves when its consumer
//! fires. Each cycle runs in three steps:
//!
//! 1. registered components (`Buffer`, pipelined operators, `Entry`,
//!    `Source`) present their stored tokens on empty output channels;
//! 2. combinational components fire in topological order, repeatedly,
//!    until nothing more can fire (each at most once per cycle);
//! 3. registered components accept input tokens, which become visible
//!    no earlier than the next cycle.
//!
//! A component fires only when every input it needs holds a token and
//! every output it writes is empty, so `Fork` replicates only when all of
//! its outputs can accept.

use std::collections::VecDeque;
use std::fmt::Write;

use thiserror::Error;

use crate::cdfg::{check_invariants, Cdfg, CdfgViolation, ChannelId, ComponentId, ComponentKind};
use crate::typeinfer::LatticeType;
use crate::value::{eval, EvalError, Value};

pub const DEFAULT_MAX_CYCLES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Token {
    Ctrl,
    Data(Value),
}

impl Token {
    fn value(self) -> Option<Value> {
        match self {
            Token::Data(v) => Some(v),
            Token::Ctrl => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub cycle: u64,
    pub component: ComponentId,
    pub event: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Value consumed by the Exit, if it fired.
    pub output: Option<Value>,
    /// Cycles until the Exit fired (or until the run stopped).
    pub cycles: u64,
    /// Most channels holding a token at the end of any cycle.
    pub max_occupancy: usize,
    pub deadlock: bool,
    /// Tokens written to / taken from channels over the whole run.
    pub tokens_produced: u64,
    pub tokens_consumed: u64,
    /// Tokens still stored anywhere once the circuit went quiet.
    pub residual_tokens: usize,
    pub trace: Vec<TraceEvent>,
}

impl SimReport {
    /// `cycle,component,event` rows with a header line.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("cycle,component,event\n");
        for e in &self.trace {
            let _ = writeln!(s, "{},{},{}", e.cycle, e.component, e.event);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("deadlock at cycle {} before the exit fired", .0.cycles)]
    Deadlock(Box<SimReport>),
    #[error("no result after {0} cycles")]
    MaxCyclesExceeded(u64),
    #[error("merge {component} saw several valid inputs in cycle {cycle}")]
    MergeConflict { component: ComponentId, cycle: u64 },
    #[error("channel {channel} written while full in cycle {cycle}")]
    ChannelOverflow { channel: ChannelId, cycle: u64 },
    #[error("combinational loop through components {0:?}")]
    CombinationalLoop(Vec<ComponentId>),
    #[error("expected {expected} arguments, got {found}")]
    ArgCount { expected: usize, found: usize },
    #[error("argument {index} should be {expected}, got {found}")]
    ArgType {
        index: usize,
        expected: LatticeType,
        found: LatticeType,
    },
    #[error("component {component}: {error}")]
    Eval {
        component: ComponentId,
        error: EvalError,
    },
    #[error("malformed graph: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Malformed(Vec<CdfgViolation>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub max_cycles: u64,
    pub trace: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_cycles: DEFAULT_MAX_CYCLES,
            trace: false,
        }
    }
}

pub fn simulate(g: &Cdfg, args: &[Value], max_cycles: u64) -> Result<SimReport, SimError> {
    simulate_with(
        g,
        args,
        &SimOptions {
            max_cycles,
            trace: false,
        },
    )
}

/// Per-component runtime state.
enum State {
    None,
    /// Entry/Source: whether the token has been emitted.
    Emitted(bool),
    /// Buffer contents, oldest first.
    Stored(VecDeque<Token>),
    /// Pipelined operator: (cycle the result is ready, result).
    Pipeline(VecDeque<(u64, Value)>),
}

struct Sim<'a> {
    g: &'a Cdfg,
    ins: Vec<Vec<ChannelId>>,
    outs: Vec<Vec<ChannelId>>,
    chans: Vec<Option<Token>>,
    state: Vec<State>,
    args: Vec<Value>,
    cycle: u64,
    report: SimReport,
    trace: bool,
    /// Something moved during the current cycle.
    active: bool,
}

pub fn simulate_with(g: &Cdfg, args: &[Value], opts: &SimOptions) -> Result<SimReport, SimError> {
    let violations = check_invariants(g);
    if !violations.is_empty() {
        return Err(SimError::Malformed(violations));
    }
    if args.len() != g.entries.len() {
        return Err(SimError::ArgCount {
            expected: g.entries.len(),
            found: args.len(),
        });
    }
    for (index, (e, a)) in g.entries.iter().zip(args).enumerate() {
        let expected = g.components[*e].ty.unwrap_or(LatticeType::Bottom);
        if a.ty() != expected {
            return Err(SimError::ArgType {
                index,
                expected,
                found: a.ty(),
            });
        }
    }
    let (ins, outs) = g.port_map();
    let unwrap = |v: Vec<Vec<Option<ChannelId>>>| -> Vec<Vec<ChannelId>> {
        v.into_iter()
            .map(|p| {
                p.into_iter()
                    .map(|c| c.expect("checked port completeness"))
                    .collect()
            })
            .collect()
    };
    let order = combinational_order(g)?;
    let state = g
        .components
        .iter()
        .map(|c| match &c.kind {
            ComponentKind::Entry { .. } | ComponentKind::Source => State::Emitted(false),
            ComponentKind::Buffer { .. } => State::Stored(VecDeque::new()),
            ComponentKind::Operator { latency, .. } if *latency > 0 => {
                State::Pipeline(VecDeque::new())
            }
            _ => State::None,
        })
        .collect();
    let mut sim = Sim {
        g,
        ins: unwrap(ins),
        outs: unwrap(outs),
        chans: vec![None; g.channels.len()],
        state,
        args: args.to_vec(),
        cycle: 0,
        report: SimReport {
            output: None,
            cycles: 0,
            max_occupancy: 0,
            deadlock: false,
            tokens_produced: 0,
            tokens_consumed: 0,
            residual_tokens: 0,
            trace: Vec::new(),
        },
        trace: opts.trace,
        active: false,
    };

    let mut exit_cycle: Option<u64> = None;
    loop {
        if sim.cycle >= opts.max_cycles {
            return Err(SimError::MaxCyclesExceeded(sim.cycle));
        }
        sim.active = false;
        sim.emit_registered()?;
        sim.settle(&order)?;
        sim.latch_registered()?;
        let occupied = sim.chans.iter().filter(|c| c.is_some()).count();
        sim.report.max_occupancy = sim.report.max_occupancy.max(occupied);
        if exit_cycle.is_none() && sim.report.output.is_some() {
            exit_cycle = Some(sim.cycle);
        }
        let counting_down = sim.state.iter().any(|s| match s {
            State::Pipeline(q) => q.iter().any(|(ready, _)| *ready > sim.cycle),
            _ => false,
        });
        let quiet = !sim.active && !counting_down;
        sim.cycle += 1;
        if quiet {
            sim.report.residual_tokens = sim.residual();
            match exit_cycle {
                Some(c) => {
                    sim.report.cycles = c + 1;
                    return Ok(sim.report);
                }
                None => {
                    sim.report.cycles = sim.cycle;
                    sim.report.deadlock = true;
                    return Err(SimError::Deadlock(Box::new(sim.report)));
                }
            }
        }
    }
}

/// Topological order of the combinational components, treating the
/// outputs of registered components as cut points.
fn combinational_order(g: &Cdfg) -> Result<Vec<ComponentId>, SimError> {
    let n = g.components.len();
    let comb: Vec<bool> = g
        .components
        .iter()
        .map(|c| !c.kind.is_sequential())
        .collect();
    let mut indeg = vec![0usize; n];
    let mut succ: Vec<Vec<ComponentId>> = vec![Vec::new(); n];
    for ch in &g.channels {
        let (s, d) = (ch.src.component, ch.dst.component);
        if comb[s] && comb[d] {
            succ[s].push(d);
            indeg[d] += 1;
        }
    }
    let mut queue: VecDeque<ComponentId> = (0..n).filter(|c| comb[*c] && indeg[*c] == 0).collect();
    let mut order = Vec::new();
    while let Some(c) = queue.pop_front() {
        order.push(c);
        for &d in &succ[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                queue.push_back(d);
            }
        }
    }
    let expected = comb.iter().filter(|c| **c).count();
    if order.len() != expected {
        let stuck = (0..n).filter(|c| comb[*c] && indeg[*c] > 0).collect();
        return Err(SimError::CombinationalLoop(stuck));
    }
    Ok(order)
}

impl<'a> Sim<'a> {
    fn log(&mut self, component: ComponentId, event: &'static str) {
        self.active = true;
        if self.trace {
            self.report.trace.push(TraceEvent {
                cycle: self.cycle,
                component,
                event,
            });
        }
    }

    fn put(&mut self, ch: ChannelId, t: Token) -> Result<(), SimError> {
        if self.chans[ch].is_some() {
            return Err(SimError::ChannelOverflow {
                channel: ch,
                cycle: self.cycle,
            });
        }
        self.chans[ch] = Some(t);
        self.report.tokens_produced += 1;
        Ok(())
    }

    fn take(&mut self, ch: ChannelId) -> Token {
        self.report.tokens_consumed += 1;
        self.chans[ch].take().expect("caller checked the channel")
    }

    fn full(&self, ch: ChannelId) -> bool {
        self.chans[ch].is_some()
    }

    fn residual(&self) -> usize {
        let stored: usize = self
            .state
            .iter()
            .map(|s| match s {
                State::Stored(q) => q.len(),
                State::Pipeline(q) => q.len(),
                _ => 0,
            })
            .sum();
        stored + self.chans.iter().filter(|c| c.is_some()).count()
    }

    fn emit_registered(&mut self) -> Result<(), SimError> {
        for id in 0..self.g.components.len() {
            let Some(&out) = self.outs[id].first() else {
                continue;
            };
            if self.full(out) {
                continue;
            }
            let token = match (&self.g.components[id].kind, &mut self.state[id]) {
                (ComponentKind::Entry { index }, State::Emitted(done)) if !*done => {
                    *done = true;
                    Some(match index {
                        Some(i) => Token::Data(self.args[*i]),
                        None => Token::Ctrl,
                    })
                }
                (ComponentKind::Source, State::Emitted(_)) => Some(Token::Ctrl),
                (_, State::Stored(q)) => q.pop_front(),
                (_, State::Pipeline(q)) => match q.front() {
                    Some((ready, _)) if *ready <= self.cycle => {
                        q.pop_front().map(|(_, v)| Token::Data(v))
                    }
                    _ => None,
                },
                _ => None,
            };
            if let Some(t) = token {
                self.put(out, t)?;
                self.log(id, "emit");
            }
        }
        Ok(())
    }

    fn settle(&mut self, order: &[ComponentId]) -> Result<(), SimError> {
        let mut fired = vec![false; self.g.components.len()];
        loop {
            let mut progress = false;
            for &id in order {
                if !fired[id] && self.fire(id)? {
                    fired[id] = true;
                    progress = true;
                }
            }
            if !progress {
                return Ok(());
            }
        }
    }

    fn inputs_ready(&self, id: ComponentId) -> bool {
        self.ins[id].iter().all(|c| self.full(*c))
    }

    fn outputs_free(&self, id: ComponentId) -> bool {
        self.outs[id].iter().all(|c| !self.full(*c))
    }

    fn eval_error(&self, id: ComponentId) -> impl Fn(EvalError) -> SimError {
        move |error| SimError::Eval {
            component: id,
            error,
        }
    }

    /// Fires a combinational component if it can; returns whether it did.
    fn fire(&mut self, id: ComponentId) -> Result<bool, SimError> {
        let kind = self.g.components[id].kind.clone();
        match kind {
            ComponentKind::Exit | ComponentKind::Sink => {
                let ch = self.ins[id][0];
                if !self.full(ch) {
                    return Ok(false);
                }
                let t = self.take(ch);
                if matches!(kind, ComponentKind::Exit) {
                    if self.report.output.is_none() {
                        self.report.output = t.value();
                    }
                    self.log(id, "exit");
                } else {
                    self.log(id, "sink");
                }
                Ok(true)
            }
            ComponentKind::Const { value } => {
                if !self.inputs_ready(id) || !self.outputs_free(id) {
                    return Ok(false);
                }
                self.take(self.ins[id][0]);
                self.put(self.outs[id][0], Token::Data(value))?;
                self.log(id, "fire");
                Ok(true)
            }
            ComponentKind::Operator { opcode, .. } => {
                if !self.inputs_ready(id) || !self.outputs_free(id) {
                    return Ok(false);
                }
                let operands: Vec<Value> = self.ins[id]
                    .clone()
                    .into_iter()
                    .map(|c| self.take(c).value().expect("operator inputs carry data"))
                    .collect();
                let v = eval(opcode, &operands).map_err(self.eval_error(id))?;
                self.put(self.outs[id][0], Token::Data(v))?;
                self.log(id, "fire");
                Ok(true)
            }
            ComponentKind::Fork { .. } => {
                if !self.inputs_ready(id) || !self.outputs_free(id) {
                    return Ok(false);
                }
                let t = self.take(self.ins[id][0]);
                for out in self.outs[id].clone() {
                    self.put(out, t)?;
                }
                self.log(id, "fire");
                Ok(true)
            }
            ComponentKind::Branch => {
                if !self.inputs_ready(id) {
                    return Ok(false);
                }
                let Some(Token::Data(Value::Bool(c))) = self.chans[self.ins[id][1]] else {
                    unreachable!("branch condition is a Bool token")
                };
                let out = self.outs[id][if c { 0 } else { 1 }];
                if self.full(out) {
                    return Ok(false);
                }
                let t = self.take(self.ins[id][0]);
                self.take(self.ins[id][1]);
                self.put(out, t)?;
                self.log(id, "fire");
                Ok(true)
            }
            ComponentKind::Merge { .. } => {
                let valid: Vec<ChannelId> = self.ins[id]
                    .iter()
                    .copied()
                    .filter(|c| self.full(*c))
                    .collect();
                if valid.len() > 1 {
                    return Err(SimError::MergeConflict {
                        component: id,
                        cycle: self.cycle,
                    });
                }
                if valid.is_empty() || !self.outputs_free(id) {
                    return Ok(false);
                }
                let t = self.take(valid[0]);
                self.put(self.outs[id][0], t)?;
                self.log(id, "fire");
                Ok(true)
            }
            ComponentKind::Mux { .. } => {
                let sel_ch = self.ins[id][0];
                let Some(sel) = self.chans[sel_ch] else {
                    return Ok(false);
                };
                let k = match sel.value() {
                    Some(Value::Bool(b)) => usize::from(!b),
                    Some(Value::Int(i)) => i as usize,
                    _ => unreachable!("mux select is Bool or Int64"),
                };
                let Some(&data) = self.ins[id].get(1 + k) else {
                    return Ok(false);
                };
                if !self.full(data) || !self.outputs_free(id) {
                    return Ok(false);
                }
                self.take(sel_ch);
                let t = self.take(data);
                self.put(self.outs[id][0], t)?;
                self.log(id, "fire");
                Ok(true)
            }
            ComponentKind::Entry { .. } | ComponentKind::Source | ComponentKind::Buffer { .. } => {
                Ok(false)
            }
        }
    }

    fn latch_registered(&mut self) -> Result<(), SimError> {
        for id in 0..self.g.components.len() {
            match (&self.g.components[id].kind, &self.state[id]) {
                (ComponentKind::Buffer { capacity }, State::Stored(q)) => {
                    let ch = self.ins[id][0];
                    if q.len() < *capacity && self.full(ch) {
                        let t = self.take(ch);
                        if let State::Stored(q) = &mut self.state[id] {
                            q.push_back(t);
                        }
                        self.log(id, "latch");
                    }
                }
                (ComponentKind::Operator { opcode, latency }, State::Pipeline(q))
                    if q.len() < *latency as usize && self.inputs_ready(id) =>
                {
                    let (opcode, latency) = (*opcode, *latency);
                    let operands: Vec<Value> = self.ins[id]
                        .clone()
                        .into_iter()
                        .map(|c| self.take(c).value().expect("operator inputs carry data"))
                        .collect();
                    let v = eval(opcode, &operands).map_err(self.eval_error(id))?;
                    let ready = self.cycle + latency as u64;
                    if let State::Pipeline(q) = &mut self.state[id] {
                        q.push_back((ready, v));
                    }
                    self.log(id, "latch");
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Cycle count per input vector.
pub fn latency_profile(
    g: &Cdfg,
    inputs: &[Vec<Value>],
    max_cycles: u64,
) -> Result<Vec<(Vec<Value>, u64)>, SimError> {
    inputs
        .iter()
        .map(|args| simulate(g, args, max_cycles).map(|r| (args.clone(), r.cycles)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdfg::{build_cdfg, insert_buffers, BuildOptions};
    use crate::corpus;
    use crate::frontend::parse_source;
    use crate::ssa::{lower, optimize};
    use crate::typeinfer::infer;
    use LatticeType::*;

    fn graph(src: &str, sig: &[LatticeType], opt: bool) -> Cdfg {
        let p = parse_source(src).unwrap();
        let mut f = lower(&infer(&p.functions[0], sig).unwrap()).unwrap();
        if opt {
            f = optimize(&f).unwrap().0;
        }
        insert_buffers(&build_cdfg(&f, &BuildOptions::default()).unwrap())
    }

    #[test]
    fn power_examples() {
        for opt in [false, true] {
            let g = graph(corpus::POWER, &[Int64, Int64], opt);
            let r10 = simulate(&g, &[Value::Int(2), Value::Int(10)], DEFAULT_MAX_CYCLES).unwrap();
            assert_eq!(r10.output, Some(Value::Int(1024)));
            assert!(!r10.deadlock);
            assert_eq!(r10.residual_tokens, 0);
            let r0 = simulate(&g, &[Value::Int(5), Value::Int(0)], DEFAULT_MAX_CYCLES).unwrap();
            assert_eq!(r0.output, Some(Value::Int(1)));
            assert!(r0.cycles < r10.cycles);
        }
    }

    #[test]
    fn add_is_constant_time() {
        let g = graph("function f(a, b) return a + b end", &[Int64, Int64], true);
        let a = simulate(&g, &[Value::Int(1), Value::Int(2)], 100).unwrap();
        let b = simulate(&g, &[Value::Int(-7), Value::Int(99)], 100).unwrap();
        assert_eq!(a.output, Some(Value::Int(3)));
        assert_eq!(a.cycles, b.cycles);
    }

    #[test]
    fn trace_and_errors() {
        let g = graph(corpus::POWER, &[Int64, Int64], true);
        let r = simulate_with(
            &g,
            &[Value::Int(2), Value::Int(3)],
            &SimOptions {
                max_cycles: 1000,
                trace: true,
            },
        )
        .unwrap();
        assert!(r.trace_csv().starts_with("cycle,component,event\n"));
        assert!(r.trace.iter().any(|e| e.event == "exit"));
        assert!(matches!(
            simulate(&g, &[Value::Int(2), Value::Int(1_000_000)], 50),
            Err(SimError::MaxCyclesExceeded(50))
        ));
        assert!(matches!(
            simulate(&g, &[Value::Int(2)], 50),
            Err(SimError::ArgCount { .. })
        ));
        assert!(matches!(
            simulate(&g, &[Value::Int(2), Value::Float(1.0)], 50),
            Err(SimError::ArgType { index: 1, .. })
        ));
    }

    #[test]
    fn unbuffered_loop_is_rejected() {
        let p = parse_source(corpus::POWER).unwrap();
        let f = lower(&infer(&p.functions[0], &[Int64, Int64]).unwrap()).unwrap();
        let g = build_cdfg(&f, &BuildOptions::default()).unwrap();
        assert!(matches!(
            simulate(&g, &[Value::Int(2), Value::Int(3)], 100),
            Err(SimError::Malformed(_))
        ));
    }
}
