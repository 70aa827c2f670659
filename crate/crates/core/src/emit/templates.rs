// SPDX-License-Identifier: Apache-2.0

//! Entity templates for the component library.

use std::fmt::Write;

use crate::cdfg::{select_width, Component, ComponentKind};
use crate::typeinfer::{CmpKind, LatticeType, Opcode};
use crate::value::Value;

pub const SUPPORT_PACKAGE: &str = "\
library ieee;
use ieee.std_logic_1164.all;
use ieee.numeric_std.all;
use ieee.float_pkg.all;

package hls_support is
  function b2v(b : boolean) return std_logic_vector;
  function f64(v : std_logic_vector(63 downto 0)) return float64;
  function slv64(f : float64) return std_logic_vector;
end package;

package body hls_support is
  function b2v(b : boolean) return std_logic_vector is
  begin
    if b then
      return \"1\";
    end if;
    return \"0\";
  end function;

  function f64(v : std_logic_vector(63 downto 0)) return float64 is
  begin
    return to_float(v, 11, 52);
  end function;

  function slv64(f : float64) return std_logic_vector is
  begin
    return to_slv(f);
  end function;
end package body;
";

const CONTEXT: &str = "\
library ieee;
use ieee.std_logic_1164.all;
use ieee.numeric_std.all;
use ieee.float_pkg.all;
use work.hls_support.all;
";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityDef {
    pub name: String,
    pub clocked: bool,
    pub text: String,
}

struct Port {
    name: String,
    width: u32,
}

fn port(name: impl Into<String>, width: u32) -> Port {
    Port {
        name: name.into(),
        width,
    }
}

fn vector(width: u32) -> String {
    format!("std_logic_vector({} downto 0)", width - 1)
}

/// Entity declaration plus architecture.
fn entity(
    name: &str,
    clocked: bool,
    generics: &[String],
    inputs: &[Port],
    outputs: &[Port],
    body_decls: &str,
    body: &str,
) -> EntityDef {
    let mut ports = Vec::new();
    if clocked {
        ports.push("clk : in std_logic".to_string());
        ports.push("rst : in std_logic".to_string());
    }
    for p in inputs {
        if p.width > 0 {
            ports.push(format!("{}_data : in {}", p.name, vector(p.width)));
        }
        ports.push(format!("{}_valid : in std_logic", p.name));
        ports.push(format!("{}_ready : out std_logic", p.name));
    }
    for p in outputs {
        if p.width > 0 {
            ports.push(format!("{}_data : out {}", p.name, vector(p.width)));
        }
        ports.push(format!("{}_valid : out std_logic", p.name));
        ports.push(format!("{}_ready : in std_logic", p.name));
    }
    let mut s = String::new();
    s.push_str(CONTEXT);
    s.push('\n');
    let _ = writeln!(s, "entity {name} is");
    if !generics.is_empty() {
        s.push_str("  generic (\n");
        s.push_str(
            &generics
                .iter()
                .map(|g| format!("    {g}"))
                .collect::<Vec<_>>()
                .join(";\n"),
        );
        s.push_str("\n  );\n");
    }
    s.push_str("  port (\n");
    s.push_str(
        &ports
            .iter()
            .map(|p| format!("    {p}"))
            .collect::<Vec<_>>()
            .join(";\n"),
    );
    s.push_str("\n  );\nend entity;\n\n");
    let _ = writeln!(s, "architecture rtl of {name} is");
    s.push_str(body_decls);
    s.push_str("begin\n");
    s.push_str(body);
    s.push_str("end architecture;\n");
    EntityDef {
        name: name.to_string(),
        clocked,
        text: s,
    }
}

fn and_all(terms: &[String]) -> String {
    if terms.is_empty() {
        "'1'".into()
    } else {
        terms.join(" and ")
    }
}

fn vhdl_cmp(k: CmpKind) -> &'static str {
    match k {
        CmpKind::Lt => "<",
        CmpKind::Le => "<=",
        CmpKind::Gt => ">",
        CmpKind::Ge => ">=",
        CmpKind::Eq => "=",
        CmpKind::Ne => "/=",
    }
}

/// Result expression of an operator over `in<k>_data`.
fn op_expr(op: Opcode) -> String {
    let (a, b, c) = ("in0_data", "in1_data", "in2_data");
    let si = |x: &str| format!("signed({x})");
    match op {
        Opcode::AddI64 => format!("std_logic_vector({} + {})", si(a), si(b)),
        Opcode::SubI64 => format!("std_logic_vector({} - {})", si(a), si(b)),
        Opcode::MulI64 => format!("std_logic_vector(resize({} * {}, 64))", si(a), si(b)),
        Opcode::RemI64 => format!(
            "(others => '0') when {} = 0 else std_logic_vector({} rem {})",
            si(b),
            si(a),
            si(b)
        ),
        Opcode::NegI64 => format!("std_logic_vector(-{})", si(a)),
        Opcode::CmpI64(k) => format!("b2v({} {} {})", si(a), vhdl_cmp(k), si(b)),
        Opcode::AddF64 => format!("slv64(f64({a}) + f64({b}))"),
        Opcode::SubF64 => format!("slv64(f64({a}) - f64({b}))"),
        Opcode::MulF64 => format!("slv64(f64({a}) * f64({b}))"),
        Opcode::DivF64 => format!("slv64(f64({a}) / f64({b}))"),
        Opcode::NegF64 => format!("slv64(-f64({a}))"),
        Opcode::CmpF64(k) => format!("b2v(f64({a}) {} f64({b}))", vhdl_cmp(k)),
        Opcode::AndBool => format!("{a} and {b}"),
        Opcode::OrBool => format!("{a} or {b}"),
        Opcode::NotBool => format!("not {a}"),
        Opcode::CmpBool(k) => format!("b2v({a} {} {b})", vhdl_cmp(k)),
        Opcode::SiToFp => format!("slv64(to_float({}, 11, 52))", si(a)),
        Opcode::Select(_) => format!("{b} when {a}(0) = '1' else {c}"),
    }
}

fn operator(op: Opcode, latency: u32) -> EntityDef {
    let name = if latency == 0 {
        format!("hls_op_{}", op.name())
    } else {
        format!("hls_op_{}_l{latency}", op.name())
    };
    let inputs: Vec<Port> = op
        .operand_types()
        .iter()
        .enumerate()
        .map(|(i, t)| port(format!("in{i}"), t.width()))
        .collect();
    let w = op.result_type().width();
    let valids: Vec<String> = (0..inputs.len()).map(|i| format!("in{i}_valid")).collect();
    let mut decls = String::from("  signal all_valid : std_logic;\n");
    let mut body = format!("  all_valid <= {};\n", and_all(&valids));
    if latency == 0 {
        for i in 0..inputs.len() {
            let _ = writeln!(body, "  in{i}_ready <= out0_ready and all_valid;");
        }
        body.push_str("  out0_valid <= all_valid;\n");
        let _ = writeln!(body, "  out0_data <= {};", op_expr(op));
        return entity(
            &name,
            false,
            &[],
            &inputs,
            &[port("out0", w)],
            &decls,
            &body,
        );
    }
    let last = latency - 1;
    let _ = writeln!(
        decls,
        "  type stage_data is array (0 to {last}) of {};",
        vector(w)
    );
    decls.push_str("  signal sd : stage_data;\n");
    let _ = writeln!(decls, "  signal sv : std_logic_vector(0 to {last});");
    decls.push_str("  signal enable : std_logic;\n");
    let _ = writeln!(decls, "  signal result : {};", vector(w));
    let _ = writeln!(body, "  enable <= not (sv({last}) and not out0_ready);");
    for i in 0..inputs.len() {
        let _ = writeln!(body, "  in{i}_ready <= enable and all_valid;");
    }
    let _ = writeln!(body, "  result <= {};", op_expr(op));
    let _ = writeln!(body, "  out0_data <= sd({last});");
    let _ = writeln!(body, "  out0_valid <= sv({last});");
    body.push_str("  process (clk)\n  begin\n    if rising_edge(clk) then\n");
    body.push_str("      if rst = '1' then\n        sv <= (others => '0');\n");
    body.push_str("      elsif enable = '1' then\n");
    body.push_str("        sv(0) <= all_valid;\n        sd(0) <= result;\n");
    if latency > 1 {
        let _ = writeln!(body, "        for i in 1 to {last} loop");
        body.push_str(
            "          sv(i) <= sv(i - 1);\n          sd(i) <= sd(i - 1);\n        end loop;\n",
        );
    }
    body.push_str("      end if;\n    end if;\n  end process;\n");
    entity(&name, true, &[], &inputs, &[port("out0", w)], &decls, &body)
}

fn passthrough(name: &str, w: u32, input: &str, output: &str) -> EntityDef {
    let mut body = String::new();
    if w > 0 {
        let _ = writeln!(body, "  {output}_data <= {input}_data;");
    }
    let _ = writeln!(body, "  {output}_valid <= {input}_valid;");
    let _ = writeln!(body, "  {input}_ready <= {output}_ready;");
    entity(
        name,
        false,
        &[],
        &[port(input, w)],
        &[port(output, w)],
        "",
        &body,
    )
}

fn fork(n: usize, w: u32) -> EntityDef {
    let outs: Vec<Port> = (0..n).map(|i| port(format!("out{i}"), w)).collect();
    let readies: Vec<String> = (0..n).map(|i| format!("out{i}_ready")).collect();
    let mut body = String::new();
    let _ = writeln!(body, "  in0_ready <= {};", and_all(&readies));
    for i in 0..n {
        let others: Vec<String> = (0..n)
            .filter(|j| *j != i)
            .map(|j| format!("out{j}_ready"))
            .collect();
        let _ = writeln!(
            body,
            "  out{i}_valid <= in0_valid and {};",
            and_all(&others)
        );
        if w > 0 {
            let _ = writeln!(body, "  out{i}_data <= in0_data;");
        }
    }
    entity(
        &format!("hls_fork_n{n}_w{w}"),
        false,
        &[],
        &[port("in0", w)],
        &outs,
        "",
        &body,
    )
}

fn branch(w: u32) -> EntityDef {
    let mut body = String::new();
    let decls = "  signal sel_ready : std_logic;\n";
    body.push_str("  out0_valid <= in0_valid and in1_valid and in1_data(0);\n");
    body.push_str("  out1_valid <= in0_valid and in1_valid and not in1_data(0);\n");
    body.push_str("  sel_ready <= out0_ready when in1_data(0) = '1' else out1_ready;\n");
    body.push_str("  in0_ready <= in1_valid and sel_ready;\n");
    body.push_str("  in1_ready <= in0_valid and sel_ready;\n");
    if w > 0 {
        body.push_str("  out0_data <= in0_data;\n  out1_data <= in0_data;\n");
    }
    entity(
        &format!("hls_branch_w{w}"),
        false,
        &[],
        &[port("in0", w), port("in1", 1)],
        &[port("out0", w), port("out1", w)],
        decls,
        &body,
    )
}

fn merge(n: usize, w: u32) -> EntityDef {
    let ins: Vec<Port> = (0..n).map(|i| port(format!("in{i}"), w)).collect();
    let valids: Vec<String> = (0..n).map(|i| format!("in{i}_valid")).collect();
    let mut body = String::new();
    let _ = writeln!(body, "  out0_valid <= {};", valids.join(" or "));
    for i in 0..n {
        let _ = writeln!(body, "  in{i}_ready <= out0_ready;");
    }
    if w > 0 {
        let mut expr = String::new();
        for i in 0..n - 1 {
            let _ = write!(expr, "in{i}_data when in{i}_valid = '1' else ");
        }
        let _ = write!(expr, "in{}_data", n - 1);
        let _ = writeln!(body, "  out0_data <= {expr};");
    }
    entity(
        &format!("hls_merge_n{n}_w{w}"),
        false,
        &[],
        &ins,
        &[port("out0", w)],
        "",
        &body,
    )
}

fn mux(n: usize, w: u32) -> EntityDef {
    let mut ins = vec![port("in0", if n == 2 { 1 } else { 64 })];
    ins.extend((0..n).map(|i| port(format!("in{}", i + 1), w)));
    let decls = "  signal sel : natural;\n  signal chosen_valid : std_logic;\n";
    let mut body = String::new();
    if n == 2 {
        body.push_str("  sel <= 0 when in0_data(0) = '1' else 1;\n");
    } else {
        let _ = writeln!(
            body,
            "  sel <= to_integer(unsigned(in0_data({} downto 0)));",
            select_width(n) - 1
        );
    }
    let mut valid = String::new();
    for i in 0..n {
        let _ = write!(valid, "in{}_valid when sel = {i} else ", i + 1);
    }
    valid.push_str("'0'");
    let _ = writeln!(body, "  chosen_valid <= {valid};");
    body.push_str("  out0_valid <= in0_valid and chosen_valid;\n");
    body.push_str("  in0_ready <= chosen_valid and out0_ready;\n");
    for i in 0..n {
        let _ = writeln!(
            body,
            "  in{}_ready <= in0_valid and out0_ready when sel = {i} else '0';",
            i + 1
        );
    }
    if w > 0 {
        let mut data = String::new();
        for i in 0..n - 1 {
            let _ = write!(data, "in{}_data when sel = {i} else ", i + 1);
        }
        let _ = write!(data, "in{n}_data");
        let _ = writeln!(body, "  out0_data <= {data};");
    }
    entity(
        &format!("hls_mux_n{n}_w{w}"),
        false,
        &[],
        &ins,
        &[port("out0", w)],
        decls,
        &body,
    )
}

fn buffer(w: u32) -> EntityDef {
    let mut decls = String::new();
    if w > 0 {
        let _ = writeln!(
            decls,
            "  type data_array is array (0 to DEPTH) of {};",
            vector(w)
        );
        decls.push_str("  signal d : data_array;\n");
    }
    decls.push_str("  signal v : std_logic_vector(0 to DEPTH);\n");
    decls.push_str("  signal r : std_logic_vector(0 to DEPTH);\n");
    let mut body = String::new();
    if w > 0 {
        body.push_str("  d(0) <= in0_data;\n");
    }
    body.push_str("  v(0) <= in0_valid;\n  in0_ready <= r(0);\n");
    body.push_str("  stages : for i in 0 to DEPTH - 1 generate\n");
    body.push_str("    signal full : std_logic;\n");
    if w > 0 {
        let _ = writeln!(body, "    signal reg : {};", vector(w));
    }
    body.push_str("  begin\n");
    body.push_str("    r(i) <= not full;\n    v(i + 1) <= full;\n");
    if w > 0 {
        body.push_str("    d(i + 1) <= reg;\n");
    }
    body.push_str("    process (clk)\n    begin\n      if rising_edge(clk) then\n");
    body.push_str("        if rst = '1' then\n          full <= '0';\n");
    body.push_str("        elsif full = '0' then\n");
    body.push_str("          if v(i) = '1' then\n            full <= '1';\n");
    if w > 0 {
        body.push_str("            reg <= d(i);\n");
    }
    body.push_str("          end if;\n");
    body.push_str("        elsif r(i + 1) = '1' then\n          full <= '0';\n        end if;\n");
    body.push_str("      end if;\n    end process;\n  end generate;\n");
    if w > 0 {
        body.push_str("  out0_data <= d(DEPTH);\n");
    }
    body.push_str("  out0_valid <= v(DEPTH);\n  r(DEPTH) <= out0_ready;\n");
    entity(
        &format!("hls_buffer_w{w}"),
        true,
        &["DEPTH : positive := 1".to_string()],
        &[port("in0", w)],
        &[port("out0", w)],
        &decls,
        &body,
    )
}

fn start() -> EntityDef {
    let decls = "  signal pending : std_logic;\n";
    let body = "\
  out0_valid <= pending;
  process (clk)
  begin
    if rising_edge(clk) then
      if rst = '1' then
        pending <= '1';
      elsif out0_ready = '1' then
        pending <= '0';
      end if;
    end if;
  end process;
";
    entity("hls_start", true, &[], &[], &[port("out0", 0)], decls, body)
}

/// Library entity implementing `c`.
pub fn entity_for(c: &Component) -> Option<EntityDef> {
    let w = c.width();
    Some(match &c.kind {
        ComponentKind::Entry { index: None } => start(),
        ComponentKind::Entry { index: Some(_) } => {
            passthrough(&format!("hls_entry_w{w}"), w, "ext", "out0")
        }
        ComponentKind::Exit => passthrough(&format!("hls_exit_w{w}"), w, "in0", "ext"),
        ComponentKind::Const { .. } => {
            let body =
                "  out0_data <= VALUE;\n  out0_valid <= in0_valid;\n  in0_ready <= out0_ready;\n";
            entity(
                &format!("hls_const_w{w}"),
                false,
                &[format!("VALUE : {}", vector(w))],
                &[port("in0", 0)],
                &[port("out0", w)],
                "",
                body,
            )
        }
        ComponentKind::Operator { opcode, latency } => operator(*opcode, *latency),
        ComponentKind::Fork { n } if *n >= 2 => fork(*n, w),
        ComponentKind::Branch => branch(w),
        ComponentKind::Merge { n } if *n >= 2 => merge(*n, w),
        ComponentKind::Mux { n } if *n >= 2 => mux(*n, w),
        ComponentKind::Buffer { capacity } if *capacity >= 1 => buffer(w),
        ComponentKind::Source => entity(
            "hls_source",
            false,
            &[],
            &[],
            &[port("out0", 0)],
            "",
            "  out0_valid <= '1';\n",
        ),
        ComponentKind::Sink => entity(
            &format!("hls_sink_w{w}"),
            false,
            &[],
            &[port("in0", w)],
            &[],
            "",
            "  in0_ready <= '1';\n",
        ),
        _ => return None,
    })
}

fn literal(v: Value) -> String {
    match v.ty() {
        LatticeType::Bool => format!("\"{}\"", v.to_bits()),
        _ => format!("x\"{:016X}\"", v.to_bits()),
    }
}

/// `generic map` contents for an instance, if the entity has generics.
pub fn generic_map(c: &Component) -> Option<String> {
    match &c.kind {
        ComponentKind::Const { value } => Some(format!("VALUE => {}", literal(*value))),
        ComponentKind::Buffer { capacity } => Some(format!("DEPTH => {capacity}")),
        _ => None,
    }
}
