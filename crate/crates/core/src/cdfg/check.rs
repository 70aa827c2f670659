// SPDX-License-Identifier: Apache-2.0

//! Structural invariants of an elastic CDFG.

use std::collections::VecDeque;
use std::fmt;

use super::{Cdfg, ChannelId, ComponentId, ComponentKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CdfgViolation {
    BadComponentId {
        at: usize,
        id: ComponentId,
    },
    BadEndpoint {
        channel: ChannelId,
    },
    UnconnectedInput {
        component: ComponentId,
        port: usize,
    },
    UnconnectedOutput {
        component: ComponentId,
        port: usize,
    },
    MultiplyDrivenInput {
        component: ComponentId,
        port: usize,
    },
    /// An output feeding more than one channel without a `Fork`.
    UnforkedFanout {
        component: ComponentId,
        port: usize,
    },
    WidthMismatch {
        channel: ChannelId,
    },
    BadParameter {
        component: ComponentId,
    },
    /// Components left over after peeling every acyclic part of the graph
    /// with buffers removed: they sit on or behind an unbuffered cycle.
    UnbufferedCycle {
        components: Vec<ComponentId>,
    },
    Disconnected {
        component: ComponentId,
    },
    BadInterface,
}

impl fmt::Display for CdfgViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CdfgViolation::*;
        match self {
            BadComponentId { at, id } => write!(f, "component at index {at} has id {id}"),
            BadEndpoint { channel } => write!(f, "channel {channel} references a missing port"),
            UnconnectedInput { component, port } => {
                write!(f, "input {port} of component {component} is unconnected")
            }
            UnconnectedOutput { component, port } => {
                write!(f, "output {port} of component {component} is unconnected")
            }
            MultiplyDrivenInput { component, port } => {
                write!(
                    f,
                    "input {port} of component {component} has several drivers"
                )
            }
            UnforkedFanout { component, port } => {
                write!(
                    f,
                    "output {port} of component {component} fans out without a Fork"
                )
            }
            WidthMismatch { channel } => {
                write!(f, "channel {channel} width differs from its ports")
            }
            BadParameter { component } => {
                write!(f, "component {component} has an invalid parameter")
            }
            UnbufferedCycle { components } => {
                write!(
                    f,
                    "cycle without a Buffer through components {components:?}"
                )
            }
            Disconnected { component } => {
                write!(f, "component {component} is unreachable from every entry")
            }
            BadInterface => write!(f, "entry/exit table does not match the components"),
        }
    }
}

pub fn check_invariants(g: &Cdfg) -> Vec<CdfgViolation> {
    use CdfgViolation::*;
    let mut out = Vec::new();
    let n = g.components.len();
    for (i, c) in g.components.iter().enumerate() {
        if c.id != i {
            out.push(BadComponentId { at: i, id: c.id });
        }
        let ok = match c.kind {
            ComponentKind::Fork { n } | ComponentKind::Merge { n } | ComponentKind::Mux { n } => {
                n >= 2
            }
            ComponentKind::Buffer { capacity } => capacity >= 1,
            _ => true,
        };
        if !ok {
            out.push(BadParameter { component: i });
        }
    }
    let interface_ok = g.exit < n
        && matches!(g.components[g.exit].kind, ComponentKind::Exit)
        && g.start < n
        && matches!(
            g.components[g.start].kind,
            ComponentKind::Entry { index: None }
        )
        && g.entries.iter().enumerate().all(|(i, e)| {
            *e < n && g.components[*e].kind == ComponentKind::Entry { index: Some(i) }
        });
    if !interface_ok {
        out.push(BadInterface);
    }

    let mut in_count: Vec<Vec<usize>> = g
        .components
        .iter()
        .map(|c| vec![0; c.input_types().len()])
        .collect();
    let mut out_count: Vec<Vec<usize>> = g
        .components
        .iter()
        .map(|c| vec![0; c.output_types().len()])
        .collect();
    for ch in &g.channels {
        let (s, d) = (ch.src, ch.dst);
        if s.component >= n
            || d.component >= n
            || s.port >= out_count[s.component].len()
            || d.port >= in_count[d.component].len()
        {
            out.push(BadEndpoint { channel: ch.id });
            continue;
        }
        out_count[s.component][s.port] += 1;
        in_count[d.component][d.port] += 1;
        let sw = g.components[s.component].output_widths()[s.port];
        let dw = g.components[d.component].input_widths()[d.port];
        if sw != ch.width || dw != ch.width {
            out.push(WidthMismatch { channel: ch.id });
        }
    }
    for (c, ports) in in_count.iter().enumerate() {
        for (port, k) in ports.iter().enumerate() {
            match k {
                0 => out.push(UnconnectedInput { component: c, port }),
                1 => {}
                _ => out.push(MultiplyDrivenInput { component: c, port }),
            }
        }
    }
    for (c, ports) in out_count.iter().enumerate() {
        for (port, k) in ports.iter().enumerate() {
            match k {
                0 => out.push(UnconnectedOutput { component: c, port }),
                1 => {}
                _ => out.push(UnforkedFanout { component: c, port }),
            }
        }
    }
    if out.iter().any(|v| matches!(v, BadEndpoint { .. })) {
        return out;
    }

    // Every component must be reachable from an entry (or a source).
    // The control start of a single-block function feeds nothing but a
    // Sink, so weak connectivity of the whole graph is not required.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for ch in &g.channels {
        adj[ch.src.component].push(ch.dst.component);
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = g
        .components
        .iter()
        .filter(|c| matches!(c.kind, ComponentKind::Entry { .. } | ComponentKind::Source))
        .map(|c| c.id)
        .collect();
    for c in &queue {
        seen[*c] = true;
    }
    while let Some(c) = queue.pop_front() {
        for &d in &adj[c] {
            if !seen[d] {
                seen[d] = true;
                queue.push_back(d);
            }
        }
    }
    for (c, s) in seen.iter().enumerate() {
        if !s {
            out.push(Disconnected { component: c });
        }
    }

    // Buffer-free subgraph must be acyclic (Kahn).
    let is_buffer = |c: usize| matches!(g.components[c].kind, ComponentKind::Buffer { .. });
    let mut indeg = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for ch in &g.channels {
        let (s, d) = (ch.src.component, ch.dst.component);
        if is_buffer(s) || is_buffer(d) {
            continue;
        }
        succ[s].push(d);
        indeg[d] += 1;
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|c| indeg[*c] == 0).collect();
    let mut removed = 0;
    while let Some(c) = queue.pop_front() {
        removed += 1;
        for &d in &succ[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                queue.push_back(d);
            }
        }
    }
    if removed < n {
        out.push(UnbufferedCycle {
            components: (0..n).filter(|c| indeg[*c] > 0).collect(),
        });
    }
    out
}
