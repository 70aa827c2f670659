// SPDX-License-Identifier: Apache-2.0

//! Structural netlist checks over the emitted text.
//!
//! This is a line scanner for the layout produced by this crate, not a
//! VHDL parser: it reads entity port clauses from the library and the
//! top entity, signal declarations and port maps from the top file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::HdlBundle;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LintViolation {
    UndefinedEntity {
        instance: String,
        entity: String,
    },
    MissingPorts {
        instance: String,
        ports: Vec<String>,
    },
    UnknownPorts {
        instance: String,
        ports: Vec<String>,
    },
    UndeclaredSignal {
        instance: String,
        signal: String,
    },
    Undriven(String),
    MultiplyDriven(String),
    Unread(String),
    ClockNotConnected {
        instance: String,
    },
    DuplicateEntity(String),
    MissingTopEntity(String),
}

impl fmt::Display for LintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use LintViolation::*;
        match self {
            UndefinedEntity { instance, entity } => {
                write!(f, "{instance}: entity {entity} is not defined")
            }
            MissingPorts { instance, ports } => {
                write!(f, "{instance}: unmapped ports {}", ports.join(", "))
            }
            UnknownPorts { instance, ports } => {
                write!(f, "{instance}: unknown ports {}", ports.join(", "))
            }
            UndeclaredSignal { instance, signal } => {
                write!(f, "{instance}: signal {signal} is not declared")
            }
            Undriven(s) => write!(f, "signal {s} is never driven"),
            MultiplyDriven(s) => write!(f, "signal {s} has several drivers"),
            Unread(s) => write!(f, "signal {s} is never read"),
            ClockNotConnected { instance } => write!(f, "{instance}: clk/rst not connected"),
            DuplicateEntity(e) => write!(f, "entity {e} is defined more than once"),
            MissingTopEntity(e) => write!(f, "top entity {e} is not declared"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    In,
    Out,
}

/// Port clauses of every `entity ... is` block in `text`.
fn entities(text: &str) -> (BTreeMap<String, BTreeMap<String, Dir>>, Vec<String>) {
    let mut out: BTreeMap<String, BTreeMap<String, Dir>> = BTreeMap::new();
    let mut dups = Vec::new();
    let mut current: Option<String> = None;
    let mut in_ports = false;
    for line in text.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("entity ") {
            if let Some(name) = rest.strip_suffix(" is") {
                if out.insert(name.to_string(), BTreeMap::new()).is_some() {
                    dups.push(name.to_string());
                }
                current = Some(name.to_string());
                in_ports = false;
                continue;
            }
        }
        let Some(name) = &current else { continue };
        if t == "port (" {
            in_ports = true;
        } else if t == ");" || t.starts_with("end entity") {
            in_ports = false;
            if t.starts_with("end entity") {
                current = None;
            }
        } else if in_ports {
            if let Some((port, rest)) = t.split_once(':') {
                let dir = match rest.split_whitespace().next() {
                    Some("in") => Dir::In,
                    Some("out") => Dir::Out,
                    _ => continue,
                };
                out.get_mut(name)
                    .expect("current entity")
                    .insert(port.trim().to_string(), dir);
            }
        }
    }
    (out, dups)
}

struct Instance {
    label: String,
    entity: String,
    map: Vec<(String, String)>,
}

fn instances(top: &str) -> (BTreeSet<String>, Vec<Instance>) {
    let mut signals = BTreeSet::new();
    let mut insts: Vec<Instance> = Vec::new();
    let mut in_map = false;
    for line in top.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("signal ") {
            if let Some((name, _)) = rest.split_once(':') {
                signals.insert(name.trim().to_string());
            }
        } else if let Some((label, rest)) = t.split_once(" : entity work.") {
            insts.push(Instance {
                label: label.trim().to_string(),
                entity: rest.trim().to_string(),
                map: Vec::new(),
            });
        } else if t == "port map (" {
            in_map = true;
        } else if t == ");" {
            in_map = false;
        } else if in_map {
            if let (Some(inst), Some((formal, actual))) = (insts.last_mut(), t.split_once("=>")) {
                inst.map.push((
                    formal.trim().to_string(),
                    actual.trim().trim_end_matches(',').trim().to_string(),
                ));
            }
        }
    }
    (signals, insts)
}

/// Returns every violation found; empty means the bundle is clean.
pub fn lint_netlist(b: &HdlBundle) -> Vec<LintViolation> {
    use LintViolation::*;
    let mut out = Vec::new();
    let (lib, dups) = entities(&b.library.contents);
    out.extend(dups.into_iter().map(DuplicateEntity));
    let (tops, _) = entities(&b.top.contents);
    let Some(top_ports) = tops.get(&b.top_entity) else {
        out.push(MissingTopEntity(b.top_entity.clone()));
        return out;
    };
    let (signals, insts) = instances(&b.top.contents);

    // Drivers and readers per net (internal signals and top-level ports).
    let mut drivers: BTreeMap<String, usize> = BTreeMap::new();
    let mut readers: BTreeMap<String, usize> = BTreeMap::new();
    for s in &signals {
        drivers.insert(s.clone(), 0);
        readers.insert(s.clone(), 0);
    }
    for (p, dir) in top_ports {
        if p == "clk" || p == "rst" {
            continue;
        }
        // Top inputs are driven from outside; top outputs are read outside.
        match dir {
            Dir::In => {
                drivers.insert(p.clone(), 1);
                readers.insert(p.clone(), 0);
            }
            Dir::Out => {
                drivers.insert(p.clone(), 0);
                readers.insert(p.clone(), 1);
            }
        }
    }

    for inst in &insts {
        let Some(ports) = lib.get(&inst.entity) else {
            out.push(UndefinedEntity {
                instance: inst.label.clone(),
                entity: inst.entity.clone(),
            });
            continue;
        };
        let formals: BTreeSet<&str> = inst.map.iter().map(|(f, _)| f.as_str()).collect();
        let missing: Vec<String> = ports
            .keys()
            .filter(|p| !formals.contains(p.as_str()))
            .cloned()
            .collect();
        let unknown: Vec<String> = formals
            .iter()
            .filter(|f| !ports.contains_key(**f))
            .map(|f| f.to_string())
            .collect();
        if !missing.is_empty() {
            out.push(MissingPorts {
                instance: inst.label.clone(),
                ports: missing,
            });
        }
        if !unknown.is_empty() {
            out.push(UnknownPorts {
                instance: inst.label.clone(),
                ports: unknown,
            });
        }
        if ports.contains_key("clk") {
            let wired = |p: &str| inst.map.iter().any(|(f, a)| f == p && a == p);
            if !wired("clk") || !wired("rst") {
                out.push(ClockNotConnected {
                    instance: inst.label.clone(),
                });
            }
        }
        for (formal, actual) in &inst.map {
            if formal == "clk" || formal == "rst" {
                continue;
            }
            let Some(dir) = ports.get(formal) else {
                continue;
            };
            if !drivers.contains_key(actual) {
                out.push(UndeclaredSignal {
                    instance: inst.label.clone(),
                    signal: actual.clone(),
                });
                continue;
            }
            match dir {
                Dir::Out => *drivers.get_mut(actual).expect("known net") += 1,
                Dir::In => *readers.get_mut(actual).expect("known net") += 1,
            }
        }
    }
    for (net, d) in &drivers {
        match d {
            0 => out.push(Undriven(net.clone())),
            1 => {}
            _ => out.push(MultiplyDriven(net.clone())),
        }
        if readers[net] == 0 {
            out.push(Unread(net.clone()));
        }
    }
    out
}
