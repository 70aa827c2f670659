// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria 1 to 8, one PASS/FAIL line each.
//!
//! Lines go straight to stdout so they show up without `--nocapture`.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::{
    compiled, expected_dispatch_table, golden_path, lowered, sweep, unbuffered_cycles, PROGRAMS,
};
use mjl_core::cdfg::{check_invariants, component_stats, CdfgViolation, ComponentKind, Endpoint};
use mjl_core::emit::{emit_vhdl, lint_netlist};
use mjl_core::frontend::parse_source;
use mjl_core::interp::{interpret, DEFAULT_FUEL};
use mjl_core::pipeline::{compile, diff, stats_tsv, DiffSummary, PipelineConfig, StatsRow};
use mjl_core::ssa::{if_convert, merge_blocks, optimize, print_function, verify, SsaFunction};
use mjl_core::typeinfer::dispatch::dispatch_table;
use mjl_core::typeinfer::{infer, infer_with, InferOptions, LatticeType, TypeError, WorklistOrder};
use mjl_core::value::Value;

use std::f64::consts::SQRT_2;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Sweep summaries for every program on the optimized and the lowered IR.
fn run_sweeps() -> (Vec<(String, DiffSummary)>, Duration) {
    let started = Instant::now();
    let mut out = Vec::new();
    for optimize in [true, false] {
        for (name, src) in PROGRAMS {
            let c = compiled(name, src, optimize);
            let s = diff(&c, &sweep(name), &PipelineConfig::default());
            out.push((
                format!("{name}/{}", if optimize { "opt" } else { "lowered" }),
                s,
            ));
        }
    }
    (out, started.elapsed())
}

fn criterion_1(sweeps: &[(String, DiffSummary)], elapsed: Duration) -> Outcome {
    let expected_cases = [121, 91, 4];
    for (i, (label, s)) in sweeps.iter().enumerate() {
        ensure(s.cases == expected_cases[i % 3], || {
            format!("{label}: {} cases", s.cases)
        })?;
        ensure(s.passed(), || {
            format!(
                "{label}: {} mismatches, first {:?}",
                s.mismatches.len(),
                s.mismatches.first()
            )
        })?;
    }
    for optimize in [true, false] {
        let c = compiled("newton_raphson", PROGRAMS[2].1, optimize);
        for args in sweep("newton_raphson") {
            let r = mjl_core::sim::simulate(&c.cdfg, &args, mjl_core::sim::DEFAULT_MAX_CYCLES)
                .map_err(|e| e.to_string())?;
            let Some(Value::Float(x)) = r.output else {
                return Err(format!("newton {args:?}: {:?}", r.output));
            };
            ensure((x - SQRT_2).abs() < 1e-6, || {
                format!("newton {args:?} -> {x}")
            })?;
        }
    }
    ensure(elapsed < Duration::from_secs(10), || {
        format!("sweeps took {elapsed:?}")
    })?;
    Ok(format!(
        "121/91/4 cases match on both IR levels in {:.2?}",
        elapsed
    ))
}

fn criterion_2() -> Outcome {
    let mut counts = Vec::new();
    for (name, src) in PROGRAMS {
        let f = lowered(name, src);
        let o = optimize(&f).map_err(|e| e.to_string())?.0;
        counts.push((f.blocks.len(), o.blocks.len()));
    }
    let [(ie, ie_o), (pw, pw_o), (nr, nr_o)] = [counts[0], counts[1], counts[2]];
    ensure(ie == 5 && pw == 4 && (7..=12).contains(&nr), || {
        format!("lowered {ie}/{pw}/{nr}")
    })?;
    ensure(ie_o <= 3 && pw_o == 4 && nr_o <= 8, || {
        format!("optimized {ie_o}/{pw_o}/{nr_o}")
    })?;
    Ok(format!(
        "lowered {ie}/{pw}/{nr}, optimized {ie_o}/{pw_o}/{nr_o}"
    ))
}

fn criterion_3() -> Outcome {
    let rows: Vec<StatsRow> = PROGRAMS
        .iter()
        .map(|(n, s)| StatsRow::new(n, &compiled(n, s, true)))
        .collect();
    let again: Vec<StatsRow> = PROGRAMS
        .iter()
        .map(|(n, s)| StatsRow::new(n, &compiled(n, s, true)))
        .collect();
    let tsv = stats_tsv(&rows);
    ensure(tsv == stats_tsv(&again), || {
        "stats differ between runs".into()
    })?;
    let lines: Vec<&str> = tsv.lines().collect();
    ensure(
        lines[0].starts_with("program\tbb_unopt\tbb_opt\tcomponents_total\tcomponents_by_kind"),
        || lines[0].into(),
    )?;
    for (line, reference) in lines[1..].iter().zip(["41", "61", "225"]) {
        let cols: Vec<&str> = line.split('\t').collect();
        ensure(cols[5] == reference, || format!("reference column: {line}"))?;
        ensure(cols[3].parse::<usize>().is_ok_and(|t| t > 0), || {
            format!("zero total: {line}")
        })?;
    }
    let cfg = PipelineConfig {
        signature: Some(vec![LatticeType::Int64, LatticeType::Int64]),
        ..PipelineConfig::default()
    };
    let minimal =
        compile("function add(a, b) return a + b end", &cfg).map_err(|e| e.to_string())?;
    ensure(rows[1].stats.total > minimal.stats.total, || {
        "power is not larger than a+b".into()
    })?;
    let totals: Vec<String> = rows.iter().map(|r| r.stats.total.to_string()).collect();
    Ok(format!(
        "totals {} against 41/61/225, a+b graph {}",
        totals.join("/"),
        minimal.stats.total
    ))
}

fn criterion_4() -> Outcome {
    let mut graphs = 0;
    for (name, src) in PROGRAMS {
        for optimize in [true, false] {
            let g = compiled(name, src, optimize).cdfg;
            let v = check_invariants(&g);
            ensure(v.is_empty(), || format!("{name}: {v:?}"))?;
            let cycles = unbuffered_cycles(&g);
            ensure(cycles.is_empty(), || {
                format!("{name}: unbuffered cycle {:?}", cycles[0])
            })?;
            graphs += 1;
        }
    }
    // Negative fixtures on the power graph.
    let g = compiled("power", PROGRAMS[1].1, true).cdfg;
    let mut caught = 0;
    let mut expect =
        |h: &mjl_core::cdfg::Cdfg, what: &str, pred: &dyn Fn(&CdfgViolation) -> bool| {
            let v = check_invariants(h);
            ensure(v.iter().any(pred), || {
                format!("fixture `{what}` not caught: {v:?}")
            })?;
            caught += 1;
            Ok::<(), String>(())
        };
    let mut h = g.clone();
    h.channels.pop();
    expect(&h, "dropped channel", &|x| {
        matches!(x, CdfgViolation::UnconnectedInput { .. })
    })?;
    let mut h = g.clone();
    let ch = h.channels[0].clone();
    h.connect(ch.src, ch.dst);
    expect(&h, "fanout without fork", &|x| {
        matches!(x, CdfgViolation::UnforkedFanout { .. })
    })?;
    let mut h = g.clone();
    h.channels[1].width = 7;
    expect(&h, "width", &|x| {
        matches!(x, CdfgViolation::WidthMismatch { .. })
    })?;
    let mut h = g.clone();
    for c in &mut h.components {
        if matches!(c.kind, ComponentKind::Buffer { .. }) {
            c.kind = ComponentKind::Merge { n: 1 };
        }
    }
    expect(&h, "buffers removed", &|x| {
        matches!(x, CdfgViolation::UnbufferedCycle { .. })
    })?;
    ensure(!unbuffered_cycles(&h).is_empty(), || {
        "oracle sees no cycle without buffers".into()
    })?;
    let mut h = g.clone();
    let f = h
        .components
        .iter()
        .position(|c| matches!(c.kind, ComponentKind::Fork { .. }))
        .unwrap();
    h.components[f].kind = ComponentKind::Fork { n: 1 };
    expect(&h, "fork arity", &|x| {
        matches!(x, CdfgViolation::BadParameter { .. })
    })?;
    let mut h = g.clone();
    h.channels[0].src = Endpoint {
        component: 0,
        port: 9,
    };
    expect(&h, "bad endpoint", &|x| {
        matches!(x, CdfgViolation::BadEndpoint { .. })
    })?;
    Ok(format!(
        "{graphs} graphs clean, {caught} negative fixtures caught"
    ))
}

fn criterion_5(sweeps: &[(String, DiffSummary)]) -> Outcome {
    let deadlocks: usize = sweeps.iter().map(|(_, s)| s.deadlocks).sum();
    let conflicts: usize = sweeps.iter().map(|(_, s)| s.merge_conflicts).sum();
    let cases: usize = sweeps.iter().map(|(_, s)| s.cases).sum();
    ensure(deadlocks == 0 && conflicts == 0, || {
        format!("{deadlocks} deadlocks, {conflicts} merge conflicts")
    })?;
    Ok(format!(
        "0 deadlocks and 0 merge conflicts over {cases} runs"
    ))
}

fn results(f: &SsaFunction, cases: &[Vec<Value>]) -> Vec<String> {
    cases
        .iter()
        .map(|a| match interpret(f, a, DEFAULT_FUEL) {
            Ok(o) => format!("{:?}", o.value),
            Err(e) => format!("error {e}"),
        })
        .collect()
}

fn criterion_6() -> Outcome {
    type Pass = fn(&mut SsaFunction) -> bool;
    let passes: [(&str, Pass); 2] = [("if_convert", if_convert), ("merge_blocks", merge_blocks)];
    for (name, src) in PROGRAMS {
        let base = lowered(name, src);
        ensure(verify(&base).is_empty(), || {
            format!("{name}: lowering fails verify")
        })?;
        let cases = sweep(name);
        let expected = results(&base, &cases);
        for (pass_name, pass) in passes {
            let mut f = base.clone();
            pass(&mut f);
            ensure(verify(&f).is_empty(), || {
                format!("{name}/{pass_name}: verify")
            })?;
            ensure(results(&f, &cases) == expected, || {
                format!("{name}/{pass_name}: results changed")
            })?;
            let once = f.clone();
            ensure(!pass(&mut f) && f == once, || {
                format!("{name}/{pass_name}: not idempotent")
            })?;
        }
        let (opt, trace) = optimize(&base).map_err(|e| e.to_string())?;
        ensure(trace.len() >= 3, || format!("{name}: short trace"))?;
        ensure(results(&opt, &cases) == expected, || {
            format!("{name}: optimize changed results")
        })?;
        ensure(optimize(&opt).map_err(|e| e.to_string())?.0 == opt, || {
            format!("{name}: optimize not idempotent")
        })?;
    }
    Ok("both passes idempotent, results equal on full sweeps, verify clean at every stage".into())
}

fn criterion_7() -> Outcome {
    let mut files = 0;
    for (name, src) in PROGRAMS {
        let c = compiled(name, src, true);
        let a = emit_vhdl(&c.cdfg).map_err(|e| e.to_string())?;
        let b = emit_vhdl(&compiled(name, src, true).cdfg).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{name}: bundles differ between runs"))?;
        let lint = lint_netlist(&a);
        ensure(lint.is_empty(), || format!("{name}: lint {lint:?}"))?;
        let total = component_stats(&c.cdfg).total;
        let instances = a.top.contents.matches(" : entity work.").count();
        ensure(instances == total, || {
            format!("{name}: {instances} instances, {total} components")
        })?;
        for f in a.files() {
            let path = golden_path(name, &f.name);
            let golden =
                std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            ensure(golden == f.contents, || {
                format!("{} differs", path.display())
            })?;
            files += 1;
        }
        let ir = std::fs::read_to_string(golden_path(name, "ir_optimized.txt"))
            .map_err(|e| e.to_string())?;
        ensure(ir == print_function(&c.optimized), || {
            format!("{name}: IR golden differs")
        })?;
    }
    Ok(format!(
        "{files} bundle files match goldens, lint clean, instances equal totals"
    ))
}

fn criterion_8() -> Outcome {
    for (name, src) in PROGRAMS {
        let p = parse_source(src).map_err(|e| e.to_string())?;
        let sig = mjl_core::pipeline::corpus_signature(name).unwrap();
        let t = infer(&p.functions[0], &sig).map_err(|e| e.to_string())?;
        ensure(t.type_stable, || format!("{name} unstable"))?;
        let r = infer_with(
            &p.functions[0],
            &sig,
            InferOptions {
                strict: true,
                order: WorklistOrder::Reverse,
            },
        )
        .map_err(|e| e.to_string())?;
        ensure(r.body == t.body, || format!("{name}: order dependent"))?;
    }
    let mixed = "function f(c::Bool)\n if c\n x = 1\n else\n x = 2.5\n end\n return x\nend";
    let p = parse_source(mixed).map_err(|e| e.to_string())?;
    let strict = infer(&p.functions[0], &[LatticeType::Bool]);
    ensure(matches!(strict, Err(TypeError::Unstable { .. })), || {
        format!("strict accepted the join: {strict:?}")
    })?;
    let lenient = infer_with(
        &p.functions[0],
        &[LatticeType::Bool],
        InferOptions {
            strict: false,
            order: WorklistOrder::Forward,
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(lenient.return_type == LatticeType::Top, || {
        format!("join gave {}", lenient.return_type)
    })?;
    let expected = expected_dispatch_table();
    let actual: Vec<String> = dispatch_table().lines().map(str::to_string).collect();
    ensure(expected == actual, || {
        "promotion table differs from the hand-written grid".into()
    })?;
    Ok(format!(
        "corpus stable, mixed join is Top and rejected, {} dispatch rows match",
        actual.len() - 1
    ))
}

#[test]
fn acceptance() {
    let (sweeps, elapsed) = run_sweeps();
    let outcomes: Vec<(&str, Outcome)> = vec![
        ("differential correctness", criterion_1(&sweeps, elapsed)),
        ("basic-block counts", criterion_2()),
        ("component report", criterion_3()),
        ("structural invariants", criterion_4()),
        ("deadlock freedom", criterion_5(&sweeps)),
        ("pass soundness", criterion_6()),
        ("emission stability", criterion_7()),
        ("type inference", criterion_8()),
    ];
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (i, (title, outcome)) in outcomes.iter().enumerate() {
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(i + 1);
                ("FAIL", d)
            }
        };
        let _ = writeln!(out, "criterion {}: {status} {title}: {detail}", i + 1);
    }
    drop(out);
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
