mod common;

use std::collections::HashMap;
use std::ops::ControlFlow;

use common::*;
use proptest::prelude::*;
use termsat_core::rules::{check_guard_eclass, class_literal, Rhs};
use termsat_core::{
    ematch_all, extract_best, parse_theory, run_saturation, run_saturation_with, ConstFoldValue,
    CostFunction, EGraph, ENode, SaturationParams, Scheduler, StopReason, Term, Theory,
};

type G = EGraph;

const OPS: &[&str] = &["+", "*", "/", "<<"];
const LEAVES: &[&str] = &["a", "b", "0", "1", "2"];

fn theory_with_comm() -> Theory {
    let mut text = String::from(ARITH);
    text.push_str("rule comm-add: (+ ?a ?b) => (+ ?b ?a)\nrule comm-mul: (* ?a ?b) => (* ?b ?a)\n");
    parse_theory(&text).unwrap()
}

fn small_params() -> SaturationParams {
    SaturationParams {
        iter_limit: 6,
        node_limit: 2_000,
        ..Default::default()
    }
}

/// Saturation with every match list computed from a frozen copy of the
/// graph before any write of the iteration.
fn reference_run(g: &mut EGraph, th: &Theory, iters: usize) {
    let rules = th.directed_rules();
    for _ in 0..iters {
        let snapshot = g.clone();
        let mut todo = Vec::new();
        for rule in &rules {
            for m in ematch_all(&snapshot, &rule.lhs).unwrap() {
                if !rule
                    .guards
                    .iter()
                    .all(|gd| check_guard_eclass(gd, &m, &snapshot).unwrap())
                {
                    continue;
                }
                match &rule.rhs {
                    Rhs::Pattern(p) => todo.push((m.clone(), Some(p.clone()), None)),
                    Rhs::Fold(d) => {
                        let args: Option<Vec<_>> = d
                            .args
                            .iter()
                            .map(|v| class_literal(&snapshot, m.get(v).unwrap()))
                            .collect();
                        if let Some(lit) = args.and_then(|a| d.op.eval(&a)) {
                            todo.push((m.clone(), None, Some(lit)));
                        }
                    }
                }
            }
        }
        let before = g.version();
        for (m, pat, lit) in todo {
            let id = match (pat, lit) {
                (Some(p), _) => g.add_instance(&p, &|v| m.get(v)).unwrap().unwrap(),
                (None, Some(l)) => g.add(ENode::leaf(l)).unwrap(),
                _ => unreachable!(),
            };
            g.union(m.root, id).unwrap();
        }
        g.rebuild().unwrap();
        if g.version() == before {
            break;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_come_from_the_iteration_snapshot(x in arb_term(OPS, LEAVES, 3), y in arb_term(OPS, LEAVES, 3)) {
        let th = theory_with_comm();
        let mut g = G::default();
        g.add_term(&x).unwrap();
        g.add_term(&y).unwrap();
        g.rebuild().unwrap();
        let mut reference = g.clone();
        let p = SaturationParams { iter_limit: 3, scheduler: Scheduler::Simple, ..Default::default() };
        run_saturation(&mut g, &th, &p).unwrap();
        reference_run(&mut reference, &th, 3);
        prop_assert_eq!(g.dump_dot().unwrap(), reference.dump_dot().unwrap());
    }

    #[test]
    fn saturated_means_one_more_iteration_changes_nothing(x in arb_term(OPS, LEAVES, 4)) {
        let th = arith();
        let mut g = G::default();
        g.add_term(&x).unwrap();
        let r = run_saturation(&mut g, &th, &small_params()).unwrap();
        prop_assume!(r.stop_reason == StopReason::Saturated);
        let last = r.per_iteration.last().unwrap();
        prop_assert!(!last.changed);
        let v = g.version();
        let again = run_saturation(&mut g, &th, &SaturationParams { iter_limit: 1, ..small_params() }).unwrap();
        prop_assert_eq!(again.stop_reason, StopReason::Saturated);
        prop_assert_eq!(g.version(), v);
    }

    #[test]
    fn memberships_only_grow(x in arb_term(OPS, LEAVES, 3)) {
        let th = theory_with_comm();
        let mut g = G::default();
        g.add_term(&x).unwrap();
        let mut snapshots = Vec::new();
        run_saturation_with(&mut g, &th, &small_params(), |g, _| {
            snapshots.push(g.clone());
            ControlFlow::Continue(())
        }).unwrap();
        for pair in snapshots.windows(2) {
            let (old, new) = (&pair[0], &pair[1]);
            let Some(terms) = represented(old, 3, 20_000) else { continue };
            for set in terms.values().filter(|s| !s.is_empty()) {
                let mut classes = set.iter().map(|t| new.lookup_term(t));
                let first = classes.next().flatten();
                prop_assert!(first.is_some());
                for c in classes {
                    prop_assert_eq!(c, first);
                }
            }
        }
    }

    #[test]
    fn runs_are_deterministic(x in arb_term(OPS, LEAVES, 4)) {
        let th = theory_with_comm();
        let mut g1 = G::default();
        g1.add_term(&x).unwrap();
        let mut g2 = g1.clone();
        let r1 = run_saturation(&mut g1, &th, &small_params()).unwrap();
        let r2 = run_saturation(&mut g2, &th, &small_params()).unwrap();
        prop_assert_eq!(untimed(r1), untimed(r2));
        prop_assert_eq!(g1.dump_dot().unwrap(), g2.dump_dot().unwrap());
    }

    #[test]
    fn simple_scheduler_ignores_match_volume(x in arb_term(OPS, LEAVES, 3)) {
        let th = theory_with_comm();
        let base = SaturationParams { scheduler: Scheduler::Simple, ..small_params() };
        let mut g1 = G::default();
        g1.add_term(&x).unwrap();
        let mut g2 = g1.clone();
        let r1 = run_saturation(&mut g1, &th, &base).unwrap();
        let r2 = run_saturation(&mut g2, &th, &SaturationParams { match_limit: 1, ban_length: 9, ..base }).unwrap();
        prop_assert_eq!(untimed(r1), untimed(r2));
    }

    #[test]
    fn merged_inputs_agree_on_valuations(
        x in arb_term(OPS, LEAVES, 3),
        y in arb_term(OPS, LEAVES, 3),
        va in -5i64..5,
        vb in -5i64..5,
    ) {
        let th = arith();
        let mut g = G::default();
        let (cx, cy) = (g.add_term(&x).unwrap(), g.add_term(&y).unwrap());
        run_saturation(&mut g, &th, &small_params()).unwrap();
        let env = HashMap::from([("a", va), ("b", vb)]);
        if g.find(cx) == g.find(cy) {
            if let (Some(l), Some(r)) = (eval(&x, &env), eval(&y, &env)) {
                prop_assert_eq!(l, r, "{} and {} merged", x, y);
            }
        }
    }

    #[test]
    fn ground_terms_fold_completely(x in arb_term(&["+", "-", "*"], &["-3", "-1", "0", "1", "2", "3"], 4)) {
        let th = parse_theory(FOLDS).unwrap();
        let mut g = G::default();
        let root = g.add_term(&x).unwrap();
        let r = run_saturation(&mut g, &th, &small_params()).unwrap();
        prop_assert_eq!(r.stop_reason, StopReason::Saturated);
        let env = HashMap::new();
        for id in g.class_ids() {
            let ConstFoldValue::Known(v) = g[id].data.clone() else {
                return Err(TestCaseError::fail(format!("class {id:?} not folded")));
            };
            let (best, _) = extract_best(&g, id, &CostFunction::AstSize).unwrap();
            prop_assert_eq!(Some(v.as_int().unwrap()), eval(&best, &env));
        }
        let value = eval(&x, &env).unwrap();
        prop_assert_eq!(extract_best(&g, root, &CostFunction::AstSize).unwrap().0, Term::leaf(value));
    }
}
