// SPDX-License-Identifier: Apache-2.0

//! HDL bundles and IR listings against checked-in golden files.
//! Run with `UPDATE_GOLDEN=1` to rewrite the goldens after an intended
//! change.

mod common;

use common::{compiled, golden_path, PROGRAMS};
use mjl_core::cdfg::component_stats;
use mjl_core::emit::{emit_vhdl, lint_netlist};
use mjl_core::ssa::print_function;

fn check_golden(program: &str, file: &str, actual: &str) {
    let path = golden_path(program, file);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1)", path.display()));
    assert!(
        expected == actual,
        "{} differs from the emitted text",
        path.display()
    );
}

#[test]
fn bundles_match_goldens() {
    for (name, src) in PROGRAMS {
        let c = compiled(name, src, true);
        let b = emit_vhdl(&c.cdfg).unwrap();
        for f in b.files() {
            check_golden(name, &f.name, &f.contents);
        }
    }
}

#[test]
fn ir_listings_match_goldens() {
    for (name, src) in PROGRAMS {
        let c = compiled(name, src, true);
        check_golden(name, "ir_lowered.txt", &print_function(&c.unoptimized));
        check_golden(name, "ir_optimized.txt", &print_function(&c.optimized));
    }
}

#[test]
fn bundles_are_byte_identical_across_runs() {
    for (name, src) in PROGRAMS {
        for optimize in [true, false] {
            let a = emit_vhdl(&compiled(name, src, optimize).cdfg).unwrap();
            let b = emit_vhdl(&compiled(name, src, optimize).cdfg).unwrap();
            for (x, y) in a.files().iter().zip(b.files()) {
                assert_eq!(
                    x.contents.as_bytes(),
                    y.contents.as_bytes(),
                    "{name}: {}",
                    x.name
                );
            }
        }
    }
}

#[test]
fn bundles_lint_clean_and_instantiate_every_component() {
    for (name, src) in PROGRAMS {
        for optimize in [true, false] {
            let c = compiled(name, src, optimize);
            let b = emit_vhdl(&c.cdfg).unwrap();
            assert_eq!(lint_netlist(&b), vec![], "{name}");
            let total = component_stats(&c.cdfg).total;
            assert_eq!(
                b.top.contents.matches(" : entity work.").count(),
                total,
                "{name}"
            );
            let manifest: serde_json::Value = serde_json::from_str(&b.manifest.contents).unwrap();
            assert_eq!(manifest["total_components"], total);
            assert_eq!(manifest["top"], b.top_entity.as_str());
            for e in manifest["library_entities"].as_array().unwrap() {
                let decl = format!("entity {} is", e.as_str().unwrap());
                assert!(b.library.contents.contains(&decl), "{name}: {decl}");
            }
        }
    }
}

#[test]
fn written_bundle_matches_memory() {
    let c = compiled("power", common::PROGRAMS[1].1, true);
    let b = emit_vhdl(&c.cdfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    b.write_to(dir.path()).unwrap();
    for f in b.files() {
        assert_eq!(
            std::fs::read_to_string(dir.path().join(&f.name)).unwrap(),
            f.contents
        );
    }
}
