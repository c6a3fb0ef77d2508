mod common;

use std::collections::{HashMap, HashSet};

use common::*;
use proptest::prelude::*;
use termsat_core::{
    parse_theory, prove_equal, rewrite_fixpoint, EGraph, RewriteStatus, SaturationParams, Scheduler,
};

const OPS: &[&str] = &["+", "*", "/", "<<"];
const LEAVES: &[&str] = &["a", "b", "0", "1", "2"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fixpoint_results_are_provable(x in arb_term(OPS, LEAVES, 4)) {
        let th = arith();
        let out = rewrite_fixpoint(&x, &th, 100);
        prop_assume!(out.status == RewriteStatus::Fixpoint);
        let p = SaturationParams {
            iter_limit: out.steps + 1,
            node_limit: 100_000,
            scheduler: Scheduler::Simple,
            ..Default::default()
        };
        let mut g: EGraph = EGraph::default();
        let outcome = prove_equal(&mut g, &th, &p, &x, &out.result).unwrap();
        prop_assert!(outcome.is_equal(), "{} ->* {} not proven: {:?}", x, out.result, outcome.report().stop_reason);
    }

    #[test]
    fn steps_preserve_values(x in arb_term(OPS, LEAVES, 4), va in -4i64..4, vb in -4i64..4) {
        let out = rewrite_fixpoint(&x, &arith(), 100);
        let env = HashMap::from([("a", va), ("b", vb)]);
        for step in &out.trace {
            if let (Some(l), Some(r)) = (eval(&step.before, &env), eval(&step.after, &env)) {
                prop_assert_eq!(l, r, "rule {} at {:?}", step.rule, step.path);
            }
            prop_assert_eq!(step.before.replace_at(&step.path, step.after.at(&step.path).unwrap().clone()).unwrap(), step.after.clone());
        }
    }

    #[test]
    fn cycles_really_repeat(x in arb_term(&["+", "*"], &["a", "b", "c"], 3)) {
        let th = parse_theory("theory c\nrule comm: (+ ?a ?b) == (+ ?b ?a)\nrule assoc: (* ?a (* ?b ?c)) == (* (* ?a ?b) ?c)\n").unwrap();
        let out = rewrite_fixpoint(&x, &th, 500);
        if out.status == RewriteStatus::CycleDetected {
            let mut seen = HashSet::from([x.to_string()]);
            let repeated = out.trace.iter().any(|s| !seen.insert(s.after.to_string()));
            prop_assert!(repeated);
        }
        if let Some(last) = out.trace.last() {
            prop_assert_eq!(&last.after, &out.result);
        }
    }
}

#[test]
fn doubling_classic_run() {
    let out = rewrite_fixpoint(&t("(/ (* a 2) 2)"), &arith(), 100);
    assert_eq!(out.result, t("a"));
    assert_eq!(out.status, RewriteStatus::Fixpoint);
    let rules: Vec<&str> = out.trace.iter().map(|s| s.rule.as_str()).collect();
    assert_eq!(rules, ["div-canon", "div-same", "mul-one"]);
}
