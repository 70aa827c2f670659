// SPDX-License-Identifier: Apache-2.0

//! VHDL-2008 netlist emission.
//!
//! A bundle is a component library (one entity per used specialization
//! of kind, width, arity and latency), a top-level netlist that
//! instantiates one entity per CDFG component and a JSON manifest.
//!
//! Every channel becomes `ch_<id>_data` (omitted for control channels),
//! `ch_<id>_valid` and `ch_<id>_ready`; a token moves on a rising clock
//! edge where both valid and ready are high.

mod lint;
mod templates;

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::cdfg::{component_stats, Cdfg, Component, ComponentKind};

pub use lint::{lint_netlist, LintViolation};
use templates::{entity_for, EntityDef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HdlFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HdlBundle {
    pub top_entity: String,
    pub library: HdlFile,
    pub top: HdlFile,
    pub manifest: HdlFile,
}

impl HdlBundle {
    pub fn files(&self) -> [&HdlFile; 3] {
        [&self.library, &self.top, &self.manifest]
    }

    /// Writes every file into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &std::path::Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for f in self.files() {
            std::fs::write(dir.join(&f.name), &f.contents)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("no template for component {id} ({kind})")]
    NoTemplate { id: usize, kind: String },
    #[error("`{0}` is not a valid VHDL identifier stem")]
    BadName(String),
}

#[derive(Serialize)]
struct Manifest<'a> {
    top: &'a str,
    files: Vec<&'a str>,
    total_components: usize,
    components: &'a BTreeMap<String, usize>,
    library_entities: Vec<&'a str>,
}

fn vector(width: u32) -> String {
    format!("std_logic_vector({} downto 0)", width - 1)
}

fn instance_name(c: &Component) -> String {
    format!("cmp_{}_{}", c.id, c.kind.name().to_ascii_lowercase())
}

pub fn emit_vhdl(g: &Cdfg) -> Result<HdlBundle, EmitError> {
    if g.name.is_empty()
        || !g
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
        || !g.name.starts_with(|c: char| c.is_ascii_alphabetic())
    {
        return Err(EmitError::BadName(g.name.clone()));
    }
    let mut entities: BTreeMap<String, EntityDef> = BTreeMap::new();
    let mut per_component: Vec<EntityDef> = Vec::with_capacity(g.components.len());
    for c in &g.components {
        let e = entity_for(c).ok_or_else(|| EmitError::NoTemplate {
            id: c.id,
            kind: c.kind.name().into(),
        })?;
        entities.entry(e.name.clone()).or_insert_with(|| e.clone());
        per_component.push(e);
    }

    let lib_name = format!("{}_lib.vhd", g.name);
    let top_name = format!("{}_top.vhd", g.name);
    let top_entity = format!("{}_top", g.name);

    let mut lib = String::new();
    let _ = writeln!(lib, "-- Component library for {}.", g.name);
    lib.push('\n');
    lib.push_str(templates::SUPPORT_PACKAGE);
    for e in entities.values() {
        lib.push('\n');
        lib.push_str(&e.text);
    }

    let top = emit_top(g, &top_entity, &per_component);

    let stats = component_stats(g);
    let manifest = Manifest {
        top: &top_entity,
        files: vec![&lib_name, &top_name],
        total_components: stats.total,
        components: &stats.by_kind,
        library_entities: entities.keys().map(String::as_str).collect(),
    };
    let mut manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest_text.push('\n');

    Ok(HdlBundle {
        top_entity,
        library: HdlFile {
            name: lib_name,
            contents: lib,
        },
        top: HdlFile {
            name: top_name,
            contents: top,
        },
        manifest: HdlFile {
            name: "manifest.json".into(),
            contents: manifest_text,
        },
    })
}

fn emit_top(g: &Cdfg, top_entity: &str, defs: &[EntityDef]) -> String {
    let (ins, outs) = g.port_map();
    let mut s = String::new();
    let _ = writeln!(s, "-- Top-level netlist for {}.", g.name);
    s.push('\n');
    s.push_str("library ieee;\nuse ieee.std_logic_1164.all;\n\n");
    let _ = writeln!(s, "entity {top_entity} is");
    let mut ports = vec![
        "clk : in std_logic".to_string(),
        "rst : in std_logic".to_string(),
    ];
    for (i, e) in g.entries.iter().enumerate() {
        let w = g.components[*e].width();
        if w > 0 {
            ports.push(format!("arg{i}_data : in {}", vector(w)));
        }
        ports.push(format!("arg{i}_valid : in std_logic"));
        ports.push(format!("arg{i}_ready : out std_logic"));
    }
    let rw = g.components[g.exit].width();
    if rw > 0 {
        ports.push(format!("result_data : out {}", vector(rw)));
    }
    ports.push("result_valid : out std_logic".into());
    ports.push("result_ready : in std_logic".into());
    s.push_str("  port (\n");
    s.push_str(
        &ports
            .iter()
            .map(|p| format!("    {p}"))
            .collect::<Vec<_>>()
            .join(";\n"),
    );
    s.push_str("\n  );\nend entity;\n\n");

    let _ = writeln!(s, "architecture netlist of {top_entity} is");
    for ch in &g.channels {
        if ch.width > 0 {
            let _ = writeln!(s, "  signal ch_{}_data : {};", ch.id, vector(ch.width));
        }
        let _ = writeln!(s, "  signal ch_{}_valid : std_logic;", ch.id);
        let _ = writeln!(s, "  signal ch_{}_ready : std_logic;", ch.id);
    }
    s.push_str("begin\n");
    for (c, def) in g.components.iter().zip(defs) {
        let mut map: Vec<(String, String)> = Vec::new();
        if def.clocked {
            map.push(("clk".into(), "clk".into()));
            map.push(("rst".into(), "rst".into()));
        }
        let mut wire = |port: &str, width: u32, actual: &str| {
            if width > 0 {
                map.push((format!("{port}_data"), format!("{actual}_data")));
            }
            map.push((format!("{port}_valid"), format!("{actual}_valid")));
            map.push((format!("{port}_ready"), format!("{actual}_ready")));
        };
        match c.kind {
            ComponentKind::Entry { index: Some(i) } => wire("ext", c.width(), &format!("arg{i}")),
            ComponentKind::Exit => wire("ext", c.width(), "result"),
            _ => {}
        }
        for (port, ch) in ins[c.id].iter().enumerate() {
            let ch = ch.expect("port-complete graph");
            wire(
                &format!("in{port}"),
                g.channels[ch].width,
                &format!("ch_{ch}"),
            );
        }
        for (port, ch) in outs[c.id].iter().enumerate() {
            let ch = ch.expect("port-complete graph");
            wire(
                &format!("out{port}"),
                g.channels[ch].width,
                &format!("ch_{ch}"),
            );
        }
        let _ = writeln!(s, "  {} : entity work.{}", instance_name(c), def.name);
        if let Some(generics) = templates::generic_map(c) {
            let _ = writeln!(s, "    generic map ({generics})");
        }
        s.push_str("    port map (\n");
        s.push_str(
            &map.iter()
                .map(|(f, a)| format!("      {f} => {a}"))
                .collect::<Vec<_>>()
                .join(",\n"),
        );
        s.push_str("\n    );\n");
    }
    s.push_str("end architecture;\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdfg::{build_cdfg, insert_buffers, BuildOptions};
    use crate::corpus;
    use crate::frontend::parse_source;
    use crate::ssa::{lower, optimize};
    use crate::typeinfer::{infer, LatticeType::*};

    fn graph(src: &str, sig: &[crate::typeinfer::LatticeType]) -> Cdfg {
        let p = parse_source(src).unwrap();
        let f = optimize(&lower(&infer(&p.functions[0], sig).unwrap()).unwrap())
            .unwrap()
            .0;
        insert_buffers(&build_cdfg(&f, &BuildOptions::default()).unwrap())
    }

    #[test]
    fn minimal_graph_instantiates_every_component() {
        let g = graph("function add(a, b) return a + b end", &[Int64, Int64]);
        let b = emit_vhdl(&g).unwrap();
        assert_eq!(b.top.contents.matches(": entity work.").count(), 6);
        assert_eq!(lint_netlist(&b), vec![]);
        assert_eq!(b, emit_vhdl(&g).unwrap());
        assert!(b
            .top
            .contents
            .contains("arg1_data : in std_logic_vector(63 downto 0)"));
        assert!(!b.top.contents.contains('\r'));
    }

    #[test]
    fn power_bundle_lints_clean() {
        let g = graph(corpus::POWER, &[Int64, Int64]);
        let b = emit_vhdl(&g).unwrap();
        assert_eq!(lint_netlist(&b), vec![]);
        assert!(b.library.contents.contains("entity hls_buffer_w64 is"));
        assert!(b.library.contents.contains("entity hls_op_mul_i64_l2 is"));
    }
}
