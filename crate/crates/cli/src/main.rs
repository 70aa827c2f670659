// SPDX-License-Identifier: Apache-2.0

//! `mjl`: command-line driver for the synthesis flow.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mjl_core::cdfg::{export_dot, LatencyConfig};
use mjl_core::corpus;
use mjl_core::pipeline::{
    self, compile, corpus_signature, diff, emit, parse_args, parse_sweep, run_interpreter,
    simulate_compiled, stats_tsv, Compiled, Error, FileConfig, PipelineConfig, Stage, StatsRow,
};
use mjl_core::ssa::print_function;
use mjl_core::typeinfer::{dispatch::dispatch_table, parse_signature, LatticeType};

#[derive(Parser)]
#[command(
    name = "mjl",
    version,
    about = "High-level synthesis of a small dynamically typed language"
)]
struct Cli {
    /// Print the operator dispatch table as TSV and exit.
    #[arg(long)]
    dump_dispatch: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Compile to a VHDL bundle, DOT graph and stats report.
    Compile(Common),
    /// Simulate the dataflow circuit on one argument tuple.
    Sim(Common),
    /// Run the interpreter on one argument tuple.
    Run(Common),
    /// Compare interpreter and simulator over a sweep of arguments.
    Diff(Common),
    /// Print the block and component report as TSV.
    Stats(StatsArgs),
    /// Print the SSA form.
    DumpIr(Common),
    /// Print the buffered CDFG as JSON.
    DumpCdfg(Common),
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// Entry signature, e.g. `i64,i64` or `f64`.
    #[arg(long)]
    sig: Option<String>,
    /// Function to compile (defaults to the first one).
    #[arg(long)]
    func: Option<String>,
    /// Skip the CFG optimization passes.
    #[arg(long)]
    no_opt: bool,
    /// Reject Top-typed values (default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Report Top-typed values as warnings.
    #[arg(long)]
    lenient: bool,
    #[arg(long, value_name = "N")]
    max_cycles: Option<u64>,
    #[arg(long, value_name = "N")]
    fuel: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Latency overrides, e.g. `mul_i64=3,fadd=2`.
    #[arg(long, value_name = "K=V,...")]
    latency: Option<String>,
    /// TOML configuration file; flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Common {
    file: PathBuf,
    #[command(flatten)]
    flags: Flags,
    /// Argument values, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    args: Option<String>,
    /// Sweep domains per parameter: `a..b` or `v1|v2`, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    /// Print the SSA form as well.
    #[arg(long)]
    dump_ir: bool,
    /// Print the CDFG JSON as well.
    #[arg(long)]
    dump_cdfg: bool,
    /// Write a simulation trace as CSV.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Programs to report; the bundled corpus when empty.
    files: Vec<PathBuf>,
    #[command(flatten)]
    flags: Flags,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::new(Stage::Io, format!("{}: {e}", path.display()))
}

fn config(flags: &Flags) -> Result<PipelineConfig, Error> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        FileConfig::parse(&text)?.apply(&mut cfg)?;
    }
    if let Some(f) = &flags.func {
        cfg.func = Some(f.clone());
    }
    if let Some(s) = &flags.sig {
        cfg.signature = Some(parse_signature(s).map_err(|e| Error::new(Stage::Config, e))?);
    }
    if flags.no_opt {
        cfg.optimize = false;
    }
    if flags.strict {
        cfg.strict = true;
    }
    if flags.lenient {
        cfg.strict = false;
    }
    if let Some(n) = flags.max_cycles {
        cfg.max_cycles = n;
    }
    if let Some(n) = flags.fuel {
        cfg.fuel = n;
    }
    if let Some(d) = &flags.out {
        cfg.out_dir = d.clone();
    }
    if let Some(l) = &flags.latency {
        let o = LatencyConfig::parse_overrides(l).map_err(|e| Error::new(Stage::Config, e))?;
        for (k, v) in o.overrides {
            cfg.latencies
                .set(&k, v)
                .map_err(|e| Error::new(Stage::Config, e))?;
        }
    }
    Ok(cfg)
}

fn load(c: &Common) -> Result<(String, PipelineConfig), Error> {
    let mut cfg = config(&c.flags)?;
    cfg.input = Some(c.file.clone());
    let src = fs::read_to_string(&c.file).map_err(|e| io_err(&c.file, e))?;
    Ok((src, cfg))
}

fn signature(c: &Compiled) -> Vec<LatticeType> {
    c.typed.params.iter().map(|(_, t)| *t).collect()
}

fn program_name(path: &Path, c: &Compiled) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| c.typed.name.clone())
}

fn print_dumps(c: &Common, compiled: &Compiled) {
    if c.dump_ir {
        print!("{}", print_function(compiled.ssa()));
    }
    if c.dump_cdfg {
        println!("{}", compiled.cdfg.to_json());
    }
}

fn cmd_compile(c: &Common) -> Result<(), Error> {
    let (src, cfg) = load(c)?;
    let compiled = compile(&src, &cfg)?;
    print_dumps(c, &compiled);
    let bundle = emit(&compiled)?;
    let out = &cfg.out_dir;
    bundle.write_to(out).map_err(|e| io_err(out, e))?;
    let dot = out.join(format!("{}.dot", compiled.cdfg.name));
    fs::write(&dot, export_dot(&compiled.cdfg)).map_err(|e| io_err(&dot, e))?;
    let tsv = stats_tsv(&[StatsRow::new(&program_name(&c.file, &compiled), &compiled)]);
    let stats = out.join("stats.tsv");
    fs::write(&stats, &tsv).map_err(|e| io_err(&stats, e))?;
    print!("{tsv}");
    Ok(())
}

fn cmd_sim(c: &Common) -> Result<(), Error> {
    let (src, cfg) = load(c)?;
    let compiled = compile(&src, &cfg)?;
    print_dumps(c, &compiled);
    let text = c
        .args
        .as_deref()
        .ok_or_else(|| Error::new(Stage::Config, "--args is required"))?;
    let args = parse_args(text, &signature(&compiled))?;
    let report = simulate_compiled(&compiled, &args, &cfg, c.trace.is_some())?;
    if let Some(path) = &c.trace {
        fs::write(path, report.trace_csv()).map_err(|e| io_err(path, e))?;
    }
    match report.output {
        Some(v) => println!("{v}"),
        None => return Err(Error::new(Stage::Sim, "no result produced")),
    }
    eprintln!(
        "cycles: {}, max occupancy: {}, residual tokens: {}",
        report.cycles, report.max_occupancy, report.residual_tokens
    );
    Ok(())
}

fn cmd_run(c: &Common) -> Result<(), Error> {
    let (src, cfg) = load(c)?;
    let text = c
        .args
        .as_deref()
        .ok_or_else(|| Error::new(Stage::Config, "--args is required"))?;
    let o = run_interpreter(&src, &cfg, text)?;
    println!("{}", o.value);
    eprintln!(
        "steps: {}{}",
        o.steps,
        if o.dynamic { " (dynamic)" } else { "" }
    );
    Ok(())
}

fn cmd_diff(c: &Common) -> Result<bool, Error> {
    let (src, cfg) = load(c)?;
    let compiled = compile(&src, &cfg)?;
    let cases = parse_sweep(c.sweep.as_deref().unwrap_or(""), &signature(&compiled))?;
    if cases.is_empty() {
        eprintln!("warning: empty sweep, nothing compared");
    }
    let s = diff(&compiled, &cases, &cfg);
    for m in &s.mismatches {
        let args: Vec<String> = m.args.iter().map(|v| v.to_string()).collect();
        println!(
            "mismatch ({}): interpreter {} simulator {}",
            args.join(", "),
            m.interpreter,
            m.simulator
        );
    }
    println!(
        "{}/{} match, {} deadlocks, {} merge conflicts",
        s.matches, s.cases, s.deadlocks, s.merge_conflicts
    );
    Ok(s.passed())
}

fn cmd_stats(a: &StatsArgs) -> Result<(), Error> {
    let base = config(&a.flags)?;
    let mut rows = Vec::new();
    if a.files.is_empty() {
        for (name, src) in corpus::ALL
            .iter()
            .filter(|(n, _)| pipeline::reference_figures(n).is_some())
        {
            let cfg = PipelineConfig {
                signature: corpus_signature(name),
                ..base.clone()
            };
            rows.push(StatsRow::new(name, &compile(src, &cfg)?));
        }
    } else {
        for path in &a.files {
            let src = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let compiled = compile(&src, &base)?;
            rows.push(StatsRow::new(&program_name(path, &compiled), &compiled));
        }
    }
    print!("{}", stats_tsv(&rows));
    Ok(())
}

fn cmd_dump_ir(c: &Common) -> Result<(), Error> {
    let (src, cfg) = load(c)?;
    let compiled = compile(&src, &cfg)?;
    print!("{}", print_function(compiled.ssa()));
    Ok(())
}

fn cmd_dump_cdfg(c: &Common) -> Result<(), Error> {
    let (src, cfg) = load(c)?;
    let compiled = compile(&src, &cfg)?;
    println!("{}", compiled.cdfg.to_json());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.dump_dispatch {
        print!("{}", dispatch_table());
        if cli.command.is_none() {
            return ExitCode::SUCCESS;
        }
    }
    let Some(command) = cli.command else {
        eprintln!("error[config]: no subcommand given (see --help)");
        return ExitCode::from(2);
    };
    let result = match &command {
        Command::Compile(c) => cmd_compile(c).map(|_| true),
        Command::Sim(c) => cmd_sim(c).map(|_| true),
        Command::Run(c) => cmd_run(c).map(|_| true),
        Command::Diff(c) => cmd_diff(c),
        Command::Stats(a) => cmd_stats(a).map(|_| true),
        Command::DumpIr(c) => cmd_dump_ir(c).map(|_| true),
        Command::DumpCdfg(c) => cmd_dump_cdfg(c).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
