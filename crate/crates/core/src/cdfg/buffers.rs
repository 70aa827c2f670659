// SPDX-License-Identifier: Apache-2.0

//! Buffer placement on cycles.

use super::{Cdfg, ChannelId, ComponentKind, Endpoint};

/// Places a capacity-1 `Buffer` on every back-edge found by depth-first
/// search from the entries (then from any component not yet reached).
/// Existing buffers already break the cycles through them, so their
/// outputs are not followed and the pass is idempotent.
pub fn insert_buffers(g: &Cdfg) -> Cdfg {
    let mut g = g.clone();
    let n = g.components.len();
    let mut out_edges: Vec<Vec<(usize, ChannelId)>> = vec![Vec::new(); n];
    for ch in &g.channels {
        if matches!(
            g.components[ch.src.component].kind,
            ComponentKind::Buffer { .. }
        ) {
            continue;
        }
        out_edges[ch.src.component].push((ch.src.port, ch.id));
    }
    for e in &mut out_edges {
        e.sort();
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; n];
    let mut back_edges: Vec<ChannelId> = Vec::new();
    let mut roots: Vec<usize> = g
        .components
        .iter()
        .filter(|c| matches!(c.kind, ComponentKind::Entry { .. } | ComponentKind::Source))
        .map(|c| c.id)
        .collect();
    roots.extend(0..n);
    for root in roots {
        if mark[root] != Mark::White {
            continue;
        }
        mark[root] = Mark::Grey;
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some((node, next)) = stack.last_mut() {
            let node = *node;
            if let Some(&(_, ch)) = out_edges[node].get(*next) {
                *next += 1;
                let dst = g.channels[ch].dst.component;
                match mark[dst] {
                    Mark::White => {
                        mark[dst] = Mark::Grey;
                        stack.push((dst, 0));
                    }
                    Mark::Grey => back_edges.push(ch),
                    Mark::Black => {}
                }
            } else {
                mark[node] = Mark::Black;
                stack.pop();
            }
        }
    }

    back_edges.sort();
    for ch in back_edges {
        let src = g.channels[ch].src;
        let ty = g.components[src.component].output_types()[src.port];
        let buf = g.add_component(ComponentKind::Buffer { capacity: 1 }, ty);
        let dst = std::mem::replace(
            &mut g.channels[ch].dst,
            Endpoint {
                component: buf,
                port: 0,
            },
        );
        g.connect(
            Endpoint {
                component: buf,
                port: 0,
            },
            dst,
        );
    }
    g
}
