// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use mjl_core::cdfg::{Cdfg, ComponentKind};
use mjl_core::corpus;
use mjl_core::frontend::parse_source;
use mjl_core::pipeline::{compile, corpus_signature, Compiled, PipelineConfig};
use mjl_core::ssa::{lower, SsaFunction};
use mjl_core::typeinfer::infer;
use mjl_core::value::Value;
use proptest::prelude::*;

/// The three benchmark programs: (name, source).
pub const PROGRAMS: [(&str, &str); 3] = [
    ("if_else", corpus::IF_ELSE),
    ("power", corpus::POWER),
    ("newton_raphson", corpus::NEWTON_RAPHSON),
];

pub fn lowered(name: &str, src: &str) -> SsaFunction {
    let p = parse_source(src).unwrap();
    lower(&infer(&p.functions[0], &corpus_signature(name).unwrap()).unwrap()).unwrap()
}

pub fn compiled(name: &str, src: &str, optimize: bool) -> Compiled {
    let cfg = PipelineConfig {
        signature: corpus_signature(name),
        optimize,
        ..PipelineConfig::default()
    };
    compile(src, &cfg).unwrap()
}

/// Argument tuples for each benchmark.
pub fn sweep(name: &str) -> Vec<Vec<Value>> {
    match name {
        "if_else" => (-5..=5)
            .flat_map(|a| (-5..=5).map(move |b| vec![Value::Int(a), Value::Int(b)]))
            .collect(),
        "power" => (-3..=3)
            .flat_map(|x| (0..=12).map(move |n| vec![Value::Int(x), Value::Int(n)]))
            .collect(),
        _ => [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|x| vec![Value::Float(*x)])
            .collect(),
    }
}

// Random structured integer programs over parameters `a`, `b`.

#[derive(Debug, Clone)]
enum E {
    Var(u8),
    Lit(i8),
    Bin(&'static str, Box<E>, Box<E>),
}

#[derive(Debug, Clone)]
enum S {
    Assign(u8, E),
    If(E, &'static str, E, Vec<S>, Vec<S>),
    /// `if l1 < r1 ... elseif l2 > r2 ... else ... end`
    If3(E, E, E, E, Vec<S>, Vec<S>, Vec<S>),
    Loop(u8, Vec<S>),
    Return(E),
}

const VARS: [&str; 4] = ["a", "b", "x", "y"];

fn expr() -> impl Strategy<Value = E> {
    let leaf = prop_oneof![(0u8..4).prop_map(E::Var), any::<i8>().prop_map(E::Lit)];
    leaf.prop_recursive(3, 8, 2, |inner| {
        (
            prop::sample::select(vec!["+", "-", "*"]),
            inner.clone(),
            inner,
        )
            .prop_map(|(op, l, r)| E::Bin(op, Box::new(l), Box::new(r)))
    })
}

fn stmts(depth: u32) -> BoxedStrategy<Vec<S>> {
    let simple = prop_oneof![
        4 => ((0u8..4), expr()).prop_map(|(v, e)| S::Assign(v, e)),
        1 => expr().prop_map(S::Return),
    ];
    if depth == 0 {
        return prop::collection::vec(simple, 1..3).boxed();
    }
    let cmp = prop::sample::select(vec!["<", "<=", ">", "==", "!="]);
    let nested = prop_oneof![
        4 => simple,
        2 => (expr(), cmp, expr(), stmts(depth - 1), stmts(depth - 1))
            .prop_map(|(l, c, r, t, e)| S::If(l, c, r, t, e)),
        1 => ((1u8..4), stmts(depth - 1)).prop_map(|(n, b)| S::Loop(n, b)),
        1 => (expr(), expr(), expr(), expr(), stmts(depth - 1), stmts(depth - 1), stmts(depth - 1))
            .prop_map(|(a, b, c, d, t, m, e)| S::If3(a, b, c, d, t, m, e)),
    ];
    prop::collection::vec(nested, 1..4).boxed()
}

fn render_e(e: &E) -> String {
    match e {
        E::Var(v) => VARS[*v as usize].into(),
        E::Lit(n) => format!("({n})"),
        E::Bin(op, l, r) => format!("({} {op} {})", render_e(l), render_e(r)),
    }
}

fn render(body: &[S], out: &mut String, loops: &mut usize) {
    for s in body {
        match s {
            S::Assign(v, e) => out.push_str(&format!("{} = {}\n", VARS[*v as usize], render_e(e))),
            S::Return(e) => out.push_str(&format!("return {}\n", render_e(e))),
            S::If(l, c, r, t, e) => {
                out.push_str(&format!("if {} {c} {}\n", render_e(l), render_e(r)));
                render(t, out, loops);
                if !e.is_empty() {
                    out.push_str("else\n");
                    render(e, out, loops);
                }
                out.push_str("end\n");
            }
            S::If3(l1, r1, l2, r2, t, m, e) => {
                out.push_str(&format!("if {} < {}\n", render_e(l1), render_e(r1)));
                render(t, out, loops);
                out.push_str(&format!("elseif {} > {}\n", render_e(l2), render_e(r2)));
                render(m, out, loops);
                out.push_str("else\n");
                render(e, out, loops);
                out.push_str("end\n");
            }
            S::Loop(n, b) => {
                let i = format!("i{loops}");
                *loops += 1;
                out.push_str(&format!("{i} = 0\nwhile {i} < {n}\n"));
                render(b, out, loops);
                out.push_str(&format!("{i} = {i} + 1\nend\n"));
            }
        }
    }
}

/// Source text with every statement after a `return` in the same list
/// dropped, so the program has no unreachable code.
fn program_text(body: &[S]) -> String {
    fn trim(body: &[S]) -> Vec<S> {
        let mut out = Vec::new();
        for s in body {
            let s = match s {
                S::If(l, c, r, t, e) => S::If(l.clone(), c, r.clone(), trim(t), trim(e)),
                S::Loop(n, b) => S::Loop(*n, trim(b)),
                S::If3(a, b, c, d, t, m, e) => S::If3(
                    a.clone(),
                    b.clone(),
                    c.clone(),
                    d.clone(),
                    trim(t),
                    trim(m),
                    trim(e),
                ),
                other => other.clone(),
            };
            let stop = matches!(s, S::Return(_));
            out.push(s);
            if stop {
                break;
            }
        }
        out
    }
    let mut text = String::from("function r(a, b)\nx = a\ny = b\n");
    let mut loops = 0;
    let body = trim(body);
    render(&body, &mut text, &mut loops);
    if !matches!(body.last(), Some(S::Return(_))) {
        text.push_str("return x + y\n");
    }
    text.push_str("end\n");
    text
}

/// Source of a random integer function `r(a, b)`.
pub fn random_program() -> impl Strategy<Value = String> {
    stmts(2).prop_map(|b| program_text(&b))
}

/// Expected dispatch for every operator over the 3×3 grid of concrete
/// operand types, written out by hand from the language rules.
/// Cell syntax: `-` no method, `op` plain, `op<` / `op>` / `op<>` with the
/// left / right / both operands converted by sitofp. Rows and columns are
/// ordered bool, i64, f64.
const BINARY_GRIDS: &[(&str, [[&str; 3]; 3])] = &[
    (
        "+",
        [
            ["-", "-", "-"],
            ["-", "add_i64", "fadd_f64<"],
            ["-", "fadd_f64>", "fadd_f64"],
        ],
    ),
    (
        "-",
        [
            ["-", "-", "-"],
            ["-", "sub_i64", "fsub_f64<"],
            ["-", "fsub_f64>", "fsub_f64"],
        ],
    ),
    (
        "*",
        [
            ["-", "-", "-"],
            ["-", "mul_i64", "fmul_f64<"],
            ["-", "fmul_f64>", "fmul_f64"],
        ],
    ),
    (
        "/",
        [
            ["-", "-", "-"],
            ["-", "fdiv_f64<>", "fdiv_f64<"],
            ["-", "fdiv_f64>", "fdiv_f64"],
        ],
    ),
    (
        "%",
        [["-", "-", "-"], ["-", "srem_i64", "-"], ["-", "-", "-"]],
    ),
    (
        "<",
        [
            ["-", "-", "-"],
            ["-", "cmp_lt_i64", "fcmp_lt_f64<"],
            ["-", "fcmp_lt_f64>", "fcmp_lt_f64"],
        ],
    ),
    (
        "<=",
        [
            ["-", "-", "-"],
            ["-", "cmp_le_i64", "fcmp_le_f64<"],
            ["-", "fcmp_le_f64>", "fcmp_le_f64"],
        ],
    ),
    (
        ">",
        [
            ["-", "-", "-"],
            ["-", "cmp_gt_i64", "fcmp_gt_f64<"],
            ["-", "fcmp_gt_f64>", "fcmp_gt_f64"],
        ],
    ),
    (
        ">=",
        [
            ["-", "-", "-"],
            ["-", "cmp_ge_i64", "fcmp_ge_f64<"],
            ["-", "fcmp_ge_f64>", "fcmp_ge_f64"],
        ],
    ),
    (
        "==",
        [
            ["cmp_eq_bool", "-", "-"],
            ["-", "cmp_eq_i64", "fcmp_eq_f64<"],
            ["-", "fcmp_eq_f64>", "fcmp_eq_f64"],
        ],
    ),
    (
        "!=",
        [
            ["cmp_ne_bool", "-", "-"],
            ["-", "cmp_ne_i64", "fcmp_ne_f64<"],
            ["-", "fcmp_ne_f64>", "fcmp_ne_f64"],
        ],
    ),
    (
        "&&",
        [["and_bool", "-", "-"], ["-", "-", "-"], ["-", "-", "-"]],
    ),
    (
        "||",
        [["or_bool", "-", "-"], ["-", "-", "-"], ["-", "-", "-"]],
    ),
];

const UNARY_ROWS: &[(&str, [&str; 3])] = &[
    ("-", ["-", "neg_i64", "fneg_f64"]),
    ("!", ["not_bool", "-", "-"]),
];

const TYPES: [&str; 3] = ["bool", "i64", "f64"];

fn result_of(opcode: &str) -> &'static str {
    if opcode.contains("cmp") || opcode.ends_with("_bool") {
        "bool"
    } else if opcode.ends_with("_f64") {
        "f64"
    } else {
        "i64"
    }
}

fn expected_row(symbol: &str, operands: &[&str], cell: &str) -> String {
    if cell == "-" {
        return format!("{symbol}\t{}\tno_method\t-\t-", operands.join(","));
    }
    let op = cell.trim_end_matches(['<', '>']);
    let marks = &cell[op.len()..];
    let conv: Vec<&str> = match (operands.len(), marks) {
        (1, _) => vec!["-"],
        (_, "<") => vec!["sitofp", "-"],
        (_, ">") => vec!["-", "sitofp"],
        (_, "<>") => vec!["sitofp", "sitofp"],
        _ => vec!["-", "-"],
    };
    format!(
        "{symbol}\t{}\t{op}\t{}\t{}",
        operands.join(","),
        result_of(op),
        conv.join(",")
    )
}

/// The full dispatch table the compiler must print, one line per row.
pub fn expected_dispatch_table() -> Vec<String> {
    let mut expected = vec!["symbol\toperands\topcode\tresult\tconversions".to_string()];
    for (sym, grid) in BINARY_GRIDS {
        for (i, a) in TYPES.iter().enumerate() {
            for (j, b) in TYPES.iter().enumerate() {
                expected.push(expected_row(sym, &[a, b], grid[i][j]));
            }
        }
    }
    for (sym, row) in UNARY_ROWS {
        for (i, a) in TYPES.iter().enumerate() {
            expected.push(expected_row(sym, &[a], row[i]));
        }
    }
    expected
}

/// Every elementary cycle of the directed graph, each as its node list
/// starting at the smallest node. Plain backtracking search rooted at each
/// node over nodes no smaller than the root.
pub fn elementary_cycles(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(s, d) in edges {
        adj[s].insert(d);
    }
    fn walk(
        root: usize,
        at: usize,
        adj: &[BTreeSet<usize>],
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        for &d in &adj[at] {
            if d == root {
                out.push(path.clone());
            } else if d > root && !on_path[d] {
                on_path[d] = true;
                path.push(d);
                walk(root, d, adj, path, on_path, out);
                path.pop();
                on_path[d] = false;
            }
        }
        assert!(out.len() < 1_000_000, "cycle enumeration blew up");
    }
    let mut out = Vec::new();
    for root in 0..n {
        let mut on_path = vec![false; n];
        on_path[root] = true;
        walk(root, root, &adj, &mut vec![root], &mut on_path, &mut out);
    }
    out
}

pub fn edges(g: &Cdfg) -> Vec<(usize, usize)> {
    g.channels
        .iter()
        .map(|c| (c.src.component, c.dst.component))
        .collect()
}

pub fn is_buffer(g: &Cdfg, c: usize) -> bool {
    matches!(g.components[c].kind, ComponentKind::Buffer { .. })
}

pub fn unbuffered_cycles(g: &Cdfg) -> Vec<Vec<usize>> {
    elementary_cycles(g.components.len(), &edges(g))
        .into_iter()
        .filter(|c| !c.iter().any(|n| is_buffer(g, *n)))
        .collect()
}

pub fn golden_path(program: &str, file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(program)
        .join(file)
}
