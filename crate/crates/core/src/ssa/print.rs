// SPDX-License-Identifier: Apache-2.0

//! Textual SSA form.
//!
//! ```text
//! function power(v0: i64, v1: i64) -> i64
//! b0(v0: i64, v1: i64):
//!   v2 = const 1
//!   goto b1(v2, v1)
//! ```

use std::fmt::Write;

use super::{InstrOp, SsaFunction, Target, Terminator};

fn target(t: &Target) -> String {
    let args: Vec<String> = t.args.iter().map(|a| a.to_string()).collect();
    format!("{}({})", t.block, args.join(", "))
}

pub fn print_function(f: &SsaFunction) -> String {
    let mut s = String::new();
    let params: Vec<String> = f
        .params
        .iter()
        .map(|(v, t)| format!("{v}: {}", t.short_name()))
        .collect();
    let _ = writeln!(
        s,
        "function {}({}) -> {}",
        f.name,
        params.join(", "),
        f.return_type.short_name()
    );
    for b in &f.blocks {
        let params: Vec<String> = b
            .params
            .iter()
            .map(|(v, t)| format!("{v}: {}", t.short_name()))
            .collect();
        let _ = writeln!(s, "{}({}):", b.id, params.join(", "));
        for i in &b.instrs {
            let ops: Vec<String> = i.operands.iter().map(|o| o.to_string()).collect();
            let rhs = match &i.op {
                InstrOp::Const(v) => format!("const {v}"),
                InstrOp::Operator(imp) => format!("{} {}", imp.opcode.name(), ops.join(", ")),
                InstrOp::Select(t) => format!("select_{} {}", t.short_name(), ops.join(", ")),
            };
            let _ = writeln!(s, "  {} = {}", i.result, rhs);
        }
        let term = match &b.terminator {
            Terminator::Goto(t) => format!("goto {}", target(t)),
            Terminator::CondGoto {
                cond,
                then_target,
                else_target,
            } => format!(
                "condgoto {cond}, {}, {}",
                target(then_target),
                target(else_target)
            ),
            Terminator::Return(v) => format!("return {v}"),
        };
        let _ = writeln!(s, "  {term}");
    }
    s
}
