// SPDX-License-Identifier: Apache-2.0

//! End-to-end driver: source text to buffered CDFG, HDL, simulation and
//! differential sweeps.

use std::fmt;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::cdfg::{
    build_cdfg, component_stats, insert_buffers, BuildOptions, Cdfg, ComponentStats, LatencyConfig,
};
use crate::emit::{emit_vhdl, lint_netlist, HdlBundle};
use crate::frontend::{parse_source, FunctionDef, Pos, SourceProgram};
use crate::interp::{interpret, interpret_ast, InterpError, DEFAULT_FUEL};
use crate::sim::{simulate_with, SimError, SimOptions, SimReport, DEFAULT_MAX_CYCLES};
use crate::ssa::{self, optimize, SsaFunction, StageRecord};
use crate::typeinfer::{
    infer_with, parse_signature, resolve_signature, InferOptions, LatticeType, TypedFunction,
};
use crate::value::{EvalError, Value};

/// Relative tolerance for comparing float results of the simulator and
/// the interpreter.
pub const FLOAT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Parse,
    Typeinfer,
    Lower,
    Passes,
    Cdfg,
    Sim,
    Interp,
    Emit,
    Io,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Parse => "parse",
            Stage::Typeinfer => "typeinfer",
            Stage::Lower => "lower",
            Stage::Passes => "passes",
            Stage::Cdfg => "cdfg",
            Stage::Sim => "sim",
            Stage::Interp => "interp",
            Stage::Emit => "emit",
            Stage::Io => "io",
        })
    }
}

/// A stage-tagged failure, displayed as `error[stage]: line:col: message`.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct Error {
    pub stage: Stage,
    pub pos: Option<Pos>,
    pub message: String,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: ", self.stage)?;
        if let Some(p) = self.pos {
            write!(f, "{p}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl Error {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        Error {
            stage,
            pos: None,
            message: message.into(),
        }
    }

    fn at(stage: Stage, pos: Pos, message: impl Into<String>) -> Self {
        Error {
            stage,
            pos: Some(pos),
            message: message.into(),
        }
    }
}

/// Strips a leading `line:col: ` that error messages already carry so it
/// is not printed twice.
fn strip_pos(msg: String, pos: Pos) -> String {
    let prefix = format!("{pos}: ");
    msg.strip_prefix(&prefix).map(str::to_string).unwrap_or(msg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub func: Option<String>,
    pub signature: Option<Vec<LatticeType>>,
    pub optimize: bool,
    pub strict: bool,
    pub latencies: LatencyConfig,
    pub out_dir: PathBuf,
    pub max_cycles: u64,
    pub fuel: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            func: None,
            signature: None,
            optimize: true,
            strict: true,
            latencies: LatencyConfig::default(),
            out_dir: PathBuf::from("out"),
            max_cycles: DEFAULT_MAX_CYCLES,
            fuel: DEFAULT_FUEL,
        }
    }
}

/// Optional TOML configuration; any field may be omitted.
///
/// ```toml
/// sig = "i64,i64"
/// optimize = true
/// strict = true
/// max_cycles = 100000
/// fuel = 1000000
/// out = "out"
///
/// [latency]
/// mul_i64 = 3
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub func: Option<String>,
    pub sig: Option<String>,
    pub optimize: Option<bool>,
    pub strict: Option<bool>,
    pub max_cycles: Option<u64>,
    pub fuel: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub latency: std::collections::BTreeMap<String, u32>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<FileConfig, Error> {
        toml::from_str(text).map_err(|e| Error::new(Stage::Config, e.to_string()))
    }

    /// Applies the file's settings on top of `cfg`.
    pub fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), Error> {
        if let Some(f) = &self.func {
            cfg.func = Some(f.clone());
        }
        if let Some(s) = &self.sig {
            cfg.signature = Some(parse_signature(s).map_err(|e| Error::new(Stage::Config, e))?);
        }
        if let Some(v) = self.optimize {
            cfg.optimize = v;
        }
        if let Some(v) = self.strict {
            cfg.strict = v;
        }
        if let Some(v) = self.max_cycles {
            cfg.max_cycles = v;
        }
        if let Some(v) = self.fuel {
            cfg.fuel = v;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        for (k, v) in &self.latency {
            cfg.latencies
                .set(k, *v)
                .map_err(|e| Error::new(Stage::Config, e))?;
        }
        Ok(())
    }
}

pub fn parse_program(source: &str) -> Result<SourceProgram, Error> {
    parse_source(source).map_err(|e| {
        let pos = e.pos();
        Error::at(Stage::Parse, pos, strip_pos(e.to_string(), pos))
    })
}

/// The function named `name`, or the first one.
pub fn select_function<'a>(
    p: &'a SourceProgram,
    name: Option<&str>,
) -> Result<&'a FunctionDef, Error> {
    match name {
        Some(n) => p
            .function(n)
            .ok_or_else(|| Error::new(Stage::Config, format!("no function named `{n}`"))),
        None => p
            .functions
            .first()
            .ok_or_else(|| Error::new(Stage::Parse, "no functions")),
    }
}

pub fn type_function(f: &FunctionDef, cfg: &PipelineConfig) -> Result<TypedFunction, Error> {
    let terr = |e: crate::typeinfer::TypeError| {
        let pos = e.pos();
        Error::at(Stage::Typeinfer, pos, strip_pos(e.to_string(), pos))
    };
    let sig = resolve_signature(f, cfg.signature.as_deref()).map_err(terr)?;
    infer_with(
        f,
        &sig,
        InferOptions {
            strict: cfg.strict,
            ..InferOptions::default()
        },
    )
    .map_err(terr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub typed: TypedFunction,
    pub unoptimized: SsaFunction,
    pub optimized: SsaFunction,
    pub pass_trace: Vec<StageRecord>,
    /// Whichever of the two SSA forms the graph was built from.
    pub used_optimized: bool,
    pub cdfg: Cdfg,
    pub stats: ComponentStats,
}

impl Compiled {
    pub fn ssa(&self) -> &SsaFunction {
        if self.used_optimized {
            &self.optimized
        } else {
            &self.unoptimized
        }
    }
}

/// Parse, infer, lower, optimize, build and buffer.
pub fn compile(source: &str, cfg: &PipelineConfig) -> Result<Compiled, Error> {
    let program = parse_program(source)?;
    let f = select_function(&program, cfg.func.as_deref())?;
    let typed = type_function(f, cfg)?;
    let unoptimized = ssa::lower(&typed).map_err(|e| match e {
        ssa::LowerError::Unstable { pos, .. } => {
            Error::at(Stage::Lower, pos, strip_pos(e.to_string(), pos))
        }
        other => Error::new(Stage::Lower, other.to_string()),
    })?;
    let (optimized, pass_trace) =
        optimize(&unoptimized).map_err(|e| Error::new(Stage::Passes, e.to_string()))?;
    let chosen = if cfg.optimize {
        &optimized
    } else {
        &unoptimized
    };
    let raw = build_cdfg(
        chosen,
        &BuildOptions {
            latencies: cfg.latencies.clone(),
        },
    )
    .map_err(|e| Error::new(Stage::Cdfg, e.to_string()))?;
    let cdfg = insert_buffers(&raw);
    let violations = crate::cdfg::check_invariants(&cdfg);
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::new(Stage::Cdfg, msg.join("; ")));
    }
    let stats = component_stats(&cdfg);
    Ok(Compiled {
        typed,
        unoptimized,
        optimized,
        pass_trace,
        used_optimized: cfg.optimize,
        cdfg,
        stats,
    })
}

/// Emits HDL and refuses bundles that fail the netlist lint.
pub fn emit(c: &Compiled) -> Result<HdlBundle, Error> {
    let b = emit_vhdl(&c.cdfg).map_err(|e| Error::new(Stage::Emit, e.to_string()))?;
    let v = lint_netlist(&b);
    if !v.is_empty() {
        let msg: Vec<String> = v.iter().map(|v| v.to_string()).collect();
        return Err(Error::new(Stage::Emit, format!("lint: {}", msg.join("; "))));
    }
    Ok(b)
}

/// Parses comma-separated argument values against a signature.
pub fn parse_args(text: &str, sig: &[LatticeType]) -> Result<Vec<Value>, Error> {
    let items: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.len() != sig.len() {
        return Err(Error::new(
            Stage::Config,
            format!("expected {} arguments, got {}", sig.len(), items.len()),
        ));
    }
    items
        .iter()
        .zip(sig)
        .map(|(s, t)| Value::parse_as(s, *t).map_err(|e| Error::new(Stage::Config, e)))
        .collect()
}

pub fn simulate_compiled(
    c: &Compiled,
    args: &[Value],
    cfg: &PipelineConfig,
    trace: bool,
) -> Result<SimReport, Error> {
    simulate_with(
        &c.cdfg,
        args,
        &SimOptions {
            max_cycles: cfg.max_cycles,
            trace,
        },
    )
    .map_err(|e| Error::new(Stage::Sim, e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub value: Value,
    pub steps: u64,
    /// The source-level interpreter was used because the function is not
    /// type-stable.
    pub dynamic: bool,
}

/// Interprets the function: the SSA interpreter when it lowers, the
/// dynamically typed source interpreter in lenient mode otherwise.
pub fn run_interpreter(
    source: &str,
    cfg: &PipelineConfig,
    args_text: &str,
) -> Result<RunOutcome, Error> {
    let program = parse_program(source)?;
    let f = select_function(&program, cfg.func.as_deref())?;
    let typed = type_function(f, cfg)?;
    let sig: Vec<LatticeType> = typed.params.iter().map(|(_, t)| *t).collect();
    let args = parse_args(args_text, &sig)?;
    let ierr = |e: InterpError| Error::new(Stage::Interp, e.to_string());
    if !typed.type_stable {
        let o = interpret_ast(f, &args, cfg.fuel).map_err(ierr)?;
        return Ok(RunOutcome {
            value: o.value,
            steps: o.steps,
            dynamic: true,
        });
    }
    let lowered = ssa::lower(&typed).map_err(|e| Error::new(Stage::Lower, e.to_string()))?;
    let f = if cfg.optimize {
        optimize(&lowered)
            .map_err(|e| Error::new(Stage::Passes, e.to_string()))?
            .0
    } else {
        lowered
    };
    let o = interpret(&f, &args, cfg.fuel).map_err(ierr)?;
    Ok(RunOutcome {
        value: o.value,
        steps: o.steps,
        dynamic: false,
    })
}

/// Parses a sweep: one comma-separated domain per parameter, each either
/// an inclusive integer range `a..b` or alternatives `v1|v2|...`. Returns
/// the cartesian product in lexicographic order. An empty text yields no
/// cases.
pub fn parse_sweep(text: &str, sig: &[LatticeType]) -> Result<Vec<Vec<Value>>, Error> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let domains: Vec<&str> = text.split(',').map(str::trim).collect();
    if domains.len() != sig.len() {
        return Err(Error::new(
            Stage::Config,
            format!(
                "sweep has {} domains, signature has {}",
                domains.len(),
                sig.len()
            ),
        ));
    }
    let mut values: Vec<Vec<Value>> = Vec::new();
    for (d, t) in domains.iter().zip(sig) {
        let vals = if let Some((a, b)) = d.split_once("..") {
            if *t != LatticeType::Int64 {
                return Err(Error::new(
                    Stage::Config,
                    format!("range `{d}` needs an i64 parameter"),
                ));
            }
            let bad = || Error::new(Stage::Config, format!("bad range `{d}`"));
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            (a..=b).map(Value::Int).collect()
        } else {
            d.split('|')
                .map(|s| Value::parse_as(s, *t).map_err(|e| Error::new(Stage::Config, e)))
                .collect::<Result<Vec<_>, _>>()?
        };
        values.push(vals);
    }
    let mut cases: Vec<Vec<Value>> = vec![Vec::new()];
    for dom in &values {
        let mut next = Vec::with_capacity(cases.len() * dom.len());
        for c in &cases {
            for v in dom {
                let mut c = c.clone();
                c.push(*v);
                next.push(c);
            }
        }
        cases = next;
    }
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub args: Vec<Value>,
    pub interpreter: String,
    pub simulator: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiffSummary {
    pub cases: usize,
    pub matches: usize,
    pub mismatches: Vec<Mismatch>,
    pub deadlocks: usize,
    pub merge_conflicts: usize,
}

impl DiffSummary {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.matches == self.cases
    }
}

/// Runs the SSA interpreter and the simulator on every case, in parallel.
/// Results agree when both produce values that are equal (floats within
/// [`FLOAT_REL_TOL`]) or both hit an integer remainder by zero.
pub fn diff(c: &Compiled, cases: &[Vec<Value>], cfg: &PipelineConfig) -> DiffSummary {
    let results: Vec<(bool, Option<Mismatch>, bool, bool)> = cases
        .par_iter()
        .map(|args| {
            let i = interpret(c.ssa(), args, cfg.fuel);
            let s = simulate_with(
                &c.cdfg,
                args,
                &SimOptions {
                    max_cycles: cfg.max_cycles,
                    trace: false,
                },
            );
            let deadlock = matches!(s, Err(SimError::Deadlock(_)));
            let conflict = matches!(s, Err(SimError::MergeConflict { .. }));
            let agree = match (&i, &s) {
                (Ok(a), Ok(b)) => b
                    .output
                    .is_some_and(|v| a.value.approx_eq(v, FLOAT_REL_TOL)),
                (
                    Err(InterpError::DivByZero),
                    Err(SimError::Eval {
                        error: EvalError::DivByZero,
                        ..
                    }),
                ) => true,
                _ => false,
            };
            let mismatch = (!agree).then(|| Mismatch {
                args: args.clone(),
                interpreter: match &i {
                    Ok(o) => o.value.to_string(),
                    Err(e) => format!("error: {e}"),
                },
                simulator: match &s {
                    Ok(r) => r.output.map_or("no output".into(), |v| v.to_string()),
                    Err(e) => format!("error: {e}"),
                },
            });
            (agree, mismatch, deadlock, conflict)
        })
        .collect();
    let mut summary = DiffSummary {
        cases: cases.len(),
        ..DiffSummary::default()
    };
    for (agree, mismatch, deadlock, conflict) in results {
        summary.matches += agree as usize;
        summary.mismatches.extend(mismatch);
        summary.deadlocks += deadlock as usize;
        summary.merge_conflicts += conflict as usize;
    }
    summary
}

/// Externally reported reference figures for the bundled programs:
/// (component total, blocks for the Julia flow, blocks for a C++ flow).
pub fn reference_figures(program: &str) -> Option<(usize, usize, usize)> {
    match program {
        "if_else" => Some((41, 5, 3)),
        "power" => Some((61, 4, 4)),
        "newton_raphson" => Some((225, 10, 6)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub program: String,
    pub bb_unopt: usize,
    pub bb_opt: usize,
    pub stats: ComponentStats,
}

impl StatsRow {
    pub fn new(program: &str, c: &Compiled) -> Self {
        StatsRow {
            program: program.to_string(),
            bb_unopt: c.unoptimized.blocks.len(),
            bb_opt: c.optimized.blocks.len(),
            stats: c.stats.clone(),
        }
    }
}

pub const STATS_HEADER: &str =
    "program\tbb_unopt\tbb_opt\tcomponents_total\tcomponents_by_kind\tref_components\tref_bb_julia\tref_bb_cpp";

/// Tab-separated report, one row per program.
pub fn stats_tsv(rows: &[StatsRow]) -> String {
    let mut s = String::from(STATS_HEADER);
    s.push('\n');
    for r in rows {
        let refs = match reference_figures(&r.program) {
            Some((c, j, k)) => format!("{c}\t{j}\t{k}"),
            None => "-\t-\t-".into(),
        };
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.program, r.bb_unopt, r.bb_opt, r.stats.total, r.stats, refs
        ));
    }
    s
}

/// Default signature for the bundled programs.
pub fn corpus_signature(program: &str) -> Option<Vec<LatticeType>> {
    use LatticeType::*;
    match program {
        "if_else" | "power" => Some(vec![Int64, Int64]),
        "newton_raphson" | "newton_raphson_loose" => Some(vec![Float64]),
        _ => None,
    }
}
