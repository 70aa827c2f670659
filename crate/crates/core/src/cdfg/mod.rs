// SPDX-License-Identifier: Apache-2.0

//! Elastic control data-flow graph.
//!
//! Components talk over point-to-point handshaked channels. Every port
//! carries either a typed value (1 bit for `Bool`, 64 bits for numbers)
//! or a 0-bit control token. Fan-out only happens through `Fork`.

mod buffers;
mod build;
mod check;
mod dot;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::typeinfer::{LatticeType, Opcode};
use crate::value::Value;

pub use buffers::insert_buffers;
pub use build::{build_cdfg, BuildError, BuildOptions};
pub use check::{check_invariants, CdfgViolation};
pub use dot::export_dot;

pub type ComponentId = usize;
pub type ChannelId = usize;
/// Per component and port, the attached channel if any.
pub type PortChannels = Vec<Vec<Option<ChannelId>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ComponentKind {
    /// Function argument `index`, or the control start token when `None`.
    Entry {
        index: Option<usize>,
    },
    Exit,
    /// Emits `value` once per control token on its single input.
    Const {
        value: Value,
    },
    Operator {
        opcode: Opcode,
        latency: u32,
    },
    Fork {
        n: usize,
    },
    /// Inputs `[data, cond]`; outputs `[true, false]`.
    Branch,
    Merge {
        n: usize,
    },
    /// Inputs `[select, data_0 .. data_n-1]`.
    Mux {
        n: usize,
    },
    Buffer {
        capacity: usize,
    },
    Source,
    Sink,
}

impl ComponentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ComponentKind::Entry { .. } => "Entry",
            ComponentKind::Exit => "Exit",
            ComponentKind::Const { .. } => "Const",
            ComponentKind::Operator { .. } => "Operator",
            ComponentKind::Fork { .. } => "Fork",
            ComponentKind::Branch => "Branch",
            ComponentKind::Merge { .. } => "Merge",
            ComponentKind::Mux { .. } => "Mux",
            ComponentKind::Buffer { .. } => "Buffer",
            ComponentKind::Source => "Source",
            ComponentKind::Sink => "Sink",
        }
    }

    /// Registered components hold state across clock edges.
    pub fn is_sequential(&self) -> bool {
        match self {
            ComponentKind::Buffer { .. } | ComponentKind::Entry { .. } | ComponentKind::Source => {
                true
            }
            ComponentKind::Operator { latency, .. } => *latency > 0,
            _ => false,
        }
    }
}

/// Low bits of an `Int64` select that a `Mux` with `n > 2` inputs reads.
pub fn select_width(n: usize) -> u32 {
    let mut w = 1;
    while (1usize << w) < n {
        w += 1;
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: ComponentId,
    pub kind: ComponentKind,
    /// Type of the data this component carries or produces; `None` for
    /// control tokens.
    pub ty: Option<LatticeType>,
}

fn width_of(t: Option<LatticeType>) -> u32 {
    t.map_or(0, |t| t.width())
}

impl Component {
    pub fn input_types(&self) -> Vec<Option<LatticeType>> {
        use ComponentKind::*;
        let t = self.ty;
        match &self.kind {
            Entry { .. } | Source => vec![],
            Exit | Buffer { .. } | Sink => vec![t],
            Const { .. } => vec![None],
            Operator { opcode, .. } => opcode.operand_types().into_iter().map(Some).collect(),
            Fork { .. } => vec![t],
            Branch => vec![t, Some(LatticeType::Bool)],
            Merge { n } => vec![t; *n],
            Mux { n } => {
                let sel = if *n <= 2 {
                    Some(LatticeType::Bool)
                } else {
                    Some(LatticeType::Int64)
                };
                std::iter::once(sel)
                    .chain(std::iter::repeat_n(t, *n))
                    .collect()
            }
        }
    }

    pub fn output_types(&self) -> Vec<Option<LatticeType>> {
        use ComponentKind::*;
        let t = self.ty;
        match &self.kind {
            Exit | Sink => vec![],
            Fork { n } => vec![t; *n],
            Branch => vec![t, t],
            _ => vec![t],
        }
    }

    pub fn input_widths(&self) -> Vec<u32> {
        self.input_types().into_iter().map(width_of).collect()
    }

    pub fn output_widths(&self) -> Vec<u32> {
        self.output_types().into_iter().map(width_of).collect()
    }

    /// Data width of the component's main payload.
    pub fn width(&self) -> u32 {
        width_of(self.ty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub component: ComponentId,
    pub port: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub id: ChannelId,
    pub src: Endpoint,
    pub dst: Endpoint,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cdfg {
    pub name: String,
    pub components: Vec<Component>,
    pub channels: Vec<Channel>,
    /// Argument entries in argument order.
    pub entries: Vec<ComponentId>,
    /// Control start entry.
    pub start: ComponentId,
    pub exit: ComponentId,
}

impl Cdfg {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("CDFG serializes")
    }

    pub fn from_json(text: &str) -> Result<Cdfg, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn add_component(&mut self, kind: ComponentKind, ty: Option<LatticeType>) -> ComponentId {
        let id = self.components.len();
        self.components.push(Component { id, kind, ty });
        id
    }

    /// Connects an output port to an input port; the width is taken from
    /// the source port.
    pub fn connect(&mut self, src: Endpoint, dst: Endpoint) -> ChannelId {
        let width = self.components[src.component]
            .output_widths()
            .get(src.port)
            .copied()
            .unwrap_or(0);
        let id = self.channels.len();
        self.channels.push(Channel {
            id,
            src,
            dst,
            width,
        });
        id
    }

    /// Channel ids attached to each component's input and output ports;
    /// `None` marks an unconnected port.
    pub fn port_map(&self) -> (PortChannels, PortChannels) {
        let mut ins: Vec<Vec<Option<ChannelId>>> = self
            .components
            .iter()
            .map(|c| vec![None; c.input_types().len()])
            .collect();
        let mut outs: Vec<Vec<Option<ChannelId>>> = self
            .components
            .iter()
            .map(|c| vec![None; c.output_types().len()])
            .collect();
        for ch in &self.channels {
            if let Some(slot) = ins
                .get_mut(ch.dst.component)
                .and_then(|p| p.get_mut(ch.dst.port))
            {
                *slot = Some(ch.id);
            }
            if let Some(slot) = outs
                .get_mut(ch.src.component)
                .and_then(|p| p.get_mut(ch.src.port))
            {
                *slot = Some(ch.id);
            }
        }
        (ins, outs)
    }
}

/// Component totals; `by_kind` is keyed by kind name so iteration order
/// is stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentStats {
    pub total: usize,
    pub by_kind: BTreeMap<String, usize>,
}

impl fmt::Display for ComponentStats {
    /// `Branch=7,Entry=3,...`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .by_kind
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

pub fn component_stats(g: &Cdfg) -> ComponentStats {
    let mut by_kind = BTreeMap::new();
    for c in &g.components {
        *by_kind.entry(c.kind.name().to_string()).or_insert(0) += 1;
    }
    ComponentStats {
        total: g.components.len(),
        by_kind,
    }
}

/// Operator latencies in cycles, keyed by opcode name, with defaults for
/// anything not overridden.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyConfig {
    pub overrides: BTreeMap<String, u32>,
}

impl LatencyConfig {
    pub fn default_latency(op: Opcode) -> u32 {
        match op {
            Opcode::MulI64 | Opcode::SiToFp | Opcode::CmpF64(_) => 2,
            Opcode::AddF64 | Opcode::SubF64 | Opcode::MulF64 => 4,
            Opcode::DivF64 | Opcode::RemI64 => 8,
            _ => 0,
        }
    }

    pub fn latency(&self, op: Opcode) -> u32 {
        self.overrides
            .get(&op.name())
            .copied()
            .unwrap_or_else(|| Self::default_latency(op))
    }

    /// Parses `name=cycles,...`; names must be known opcodes.
    pub fn parse_overrides(text: &str) -> Result<LatencyConfig, String> {
        let mut cfg = LatencyConfig::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("expected `opcode=cycles`, got `{item}`"))?;
            cfg.set(
                k.trim(),
                v.trim().parse().map_err(|_| format!("bad latency `{v}`"))?,
            )?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, name: &str, cycles: u32) -> Result<(), String> {
        let op: Opcode = name
            .parse()
            .map_err(|_| format!("unknown opcode `{name}`"))?;
        self.overrides.insert(op.name(), cycles);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latency_defaults_and_overrides() {
        let cfg = LatencyConfig::parse_overrides("mul_i64=5, fadd_f64=1").unwrap();
        assert_eq!(cfg.latency(Opcode::MulI64), 5);
        assert_eq!(cfg.latency(Opcode::AddF64), 1);
        assert_eq!(cfg.latency(Opcode::AddI64), 0);
        assert_eq!(cfg.latency(Opcode::DivF64), 8);
        assert_eq!(cfg.latency(Opcode::SiToFp), 2);
        assert!(LatencyConfig::parse_overrides("nope=1").is_err());
        assert!(LatencyConfig::parse_overrides("mul_i64").is_err());
    }

    #[test]
    fn port_widths() {
        let mut g = Cdfg {
            name: "t".into(),
            components: vec![],
            channels: vec![],
            entries: vec![],
            start: 0,
            exit: 0,
        };
        let b = g.add_component(ComponentKind::Branch, Some(LatticeType::Int64));
        assert_eq!(g.components[b].input_widths(), vec![64, 1]);
        assert_eq!(g.components[b].output_widths(), vec![64, 64]);
        let c = g.add_component(
            ComponentKind::Const {
                value: Value::Bool(true),
            },
            Some(LatticeType::Bool),
        );
        assert_eq!(g.components[c].input_widths(), vec![0]);
        assert_eq!(g.components[c].output_widths(), vec![1]);
        let m = g.add_component(ComponentKind::Mux { n: 3 }, Some(LatticeType::Float64));
        assert_eq!(g.components[m].input_widths(), vec![64, 64, 64, 64]);
        let m = g.add_component(ComponentKind::Mux { n: 2 }, None);
        assert_eq!(g.components[m].input_widths(), vec![1, 0, 0]);
        assert_eq!(select_width(2), 1);
        assert_eq!(select_width(5), 3);
    }
}
