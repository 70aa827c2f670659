// SPDX-License-Identifier: Apache-2.0

//! Pretty-printer producing source text that re-parses to an equal tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(program: &SourceProgram) -> String {
    let mut out = String::new();
    for (i, f) in program.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_function_into(f, &mut out);
    }
    out
}

pub fn print_function(f: &FunctionDef) -> String {
    let mut out = String::new();
    print_function_into(f, &mut out);
    out
}

fn print_function_into(f: &FunctionDef, out: &mut String) {
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| match p.ty {
            Some(t) => format!("{}::{}", p.name, t.as_str()),
            None => p.name.clone(),
        })
        .collect();
    let _ = writeln!(out, "function {}({})", f.name, params.join(", "));
    print_block(&f.body, 1, out);
    out.push_str("end\n");
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn print_block(body: &[Stmt], level: usize, out: &mut String) {
    for stmt in body {
        indent(level, out);
        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let _ = writeln!(out, "{} = {}", target, print_expr(value));
            }
            StmtKind::Return(e) => {
                let _ = writeln!(out, "return {}", print_expr(e));
            }
            StmtKind::While { cond, body } => {
                let _ = writeln!(out, "while {}", print_expr(cond));
                print_block(body, level + 1, out);
                indent(level, out);
                out.push_str("end\n");
            }
            StmtKind::If {
                cond,
                then_body,
                elifs,
                else_body,
            } => {
                let _ = writeln!(out, "if {}", print_expr(cond));
                print_block(then_body, level + 1, out);
                for (c, b) in elifs {
                    indent(level, out);
                    let _ = writeln!(out, "elseif {}", print_expr(c));
                    print_block(b, level + 1, out);
                }
                if let Some(b) = else_body {
                    indent(level, out);
                    out.push_str("else\n");
                    print_block(b, level + 1, out);
                }
                indent(level, out);
                out.push_str("end\n");
            }
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Float(FloatLit(v)) => {
            let _ = write!(out, "{v:?}");
        }
        ExprKind::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Unary(op, operand) => {
            out.push_str(op.symbol());
            let wrap = matches!(operand.kind, ExprKind::Binary(..));
            write_wrapped(operand, wrap, out);
        }
        ExprKind::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            let child_prec = |c: &Expr| match &c.kind {
                ExprKind::Binary(o, _, _) => Some(o.precedence()),
                _ => None,
            };
            write_wrapped(lhs, child_prec(lhs).is_some_and(|p| p < prec), out);
            let _ = write!(out, " {} ", op.symbol());
            write_wrapped(rhs, child_prec(rhs).is_some_and(|p| p <= prec), out);
        }
    }
}

fn write_wrapped(e: &Expr, wrap: bool, out: &mut String) {
    if wrap {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}
