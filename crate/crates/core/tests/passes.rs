// SPDX-License-Identifier: Apache-2.0

//! Soundness and idempotence of the CFG passes.

mod common;

use common::{lowered, random_program, sweep, PROGRAMS};
use mjl_core::frontend::parse_source;
use mjl_core::interp::{interpret, interpret_ast, DEFAULT_FUEL};
use mjl_core::ssa::{if_convert, lower, merge_blocks, optimize, verify, SsaFunction};
use mjl_core::typeinfer::{infer, LatticeType};
use mjl_core::value::Value;
use proptest::prelude::*;

fn results(f: &SsaFunction, cases: &[Vec<Value>]) -> Vec<String> {
    cases
        .iter()
        .map(|a| match interpret(f, a, DEFAULT_FUEL) {
            Ok(o) => format!("{:?}", o.value),
            Err(e) => format!("error {e}"),
        })
        .collect()
}

type Pass = fn(&mut SsaFunction) -> bool;
const PASSES: [(&str, Pass); 2] = [("if_convert", if_convert), ("merge_blocks", merge_blocks)];

#[test]
fn each_pass_preserves_semantics_and_is_idempotent() {
    for (name, src) in PROGRAMS {
        let base = lowered(name, src);
        assert_eq!(verify(&base), vec![], "{name}: lowering");
        let cases = sweep(name);
        let expected = results(&base, &cases);
        for (pass_name, pass) in PASSES {
            let mut f = base.clone();
            pass(&mut f);
            assert_eq!(verify(&f), vec![], "{name}/{pass_name}");
            assert_eq!(results(&f, &cases), expected, "{name}/{pass_name}");
            let once = f.clone();
            assert!(
                !pass(&mut f),
                "{name}/{pass_name}: second run reported a change"
            );
            assert_eq!(
                f, once,
                "{name}/{pass_name}: second run changed the function"
            );
        }
    }
}

#[test]
fn optimize_reaches_a_fixpoint_of_both_passes() {
    for (name, src) in PROGRAMS {
        let base = lowered(name, src);
        let (opt, trace) = optimize(&base).unwrap();
        assert_eq!(trace[0].stage, "lower");
        assert!(trace.iter().all(|r| r.blocks >= 1));
        assert_eq!(verify(&opt), vec![]);
        assert_eq!(
            results(&opt, &sweep(name)),
            results(&base, &sweep(name)),
            "{name}"
        );
        for (pass_name, pass) in PASSES {
            let mut f = opt.clone();
            assert!(
                !pass(&mut f),
                "{name}: {pass_name} still applies after optimize"
            );
            assert_eq!(f, opt);
        }
        assert_eq!(
            optimize(&opt).unwrap().0,
            opt,
            "{name}: optimize is not idempotent"
        );
    }
}

#[test]
fn pass_order_does_not_change_results() {
    for (name, src) in PROGRAMS {
        let base = lowered(name, src);
        let mut f = base.clone();
        loop {
            let m = merge_blocks(&mut f);
            let c = if_convert(&mut f);
            assert_eq!(verify(&f), vec![]);
            if !m && !c {
                break;
            }
        }
        assert_eq!(results(&f, &sweep(name)), results(&base, &sweep(name)));
    }
}

#[test]
fn corpus_block_counts() {
    let counts: Vec<(usize, usize)> = PROGRAMS
        .iter()
        .map(|(n, s)| {
            let f = lowered(n, s);
            (f.blocks.len(), optimize(&f).unwrap().0.blocks.len())
        })
        .collect();
    assert_eq!(counts[0].0, 5);
    assert!(counts[0].1 <= 3);
    assert_eq!(counts[1], (4, 4));
    assert!((7..=12).contains(&counts[2].0));
    assert!(counts[2].1 <= 8);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn random_programs_survive_the_passes(src in random_program(), a in -20i64..20, b in -20i64..20) {
        // Code after an `if` whose arms all return is rejected as unreachable.
        let parsed = parse_source(&src);
        prop_assume!(parsed.is_ok());
        let p = parsed.unwrap();
        let t = infer(&p.functions[0], &[LatticeType::Int64, LatticeType::Int64]).unwrap();
        let base = lower(&t).unwrap();
        prop_assert_eq!(verify(&base), vec![]);
        let (opt, _) = optimize(&base).unwrap();
        prop_assert!(opt.blocks.len() <= base.blocks.len());
        let args = [Value::Int(a), Value::Int(b)];
        let reference = interpret_ast(&p.functions[0], &args, DEFAULT_FUEL).unwrap().value;
        prop_assert_eq!(interpret(&base, &args, DEFAULT_FUEL).unwrap().value, reference);
        prop_assert_eq!(interpret(&opt, &args, DEFAULT_FUEL).unwrap().value, reference);
    }
}
