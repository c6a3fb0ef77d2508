//! Classic destructive rewriting to a fixpoint.
//!
//! Strategy: positions are visited in pre-order (outermost, leftmost
//! first); at the first position where some rule applies, the first such
//! rule in theory order fires. Bidirectional rules contribute both
//! directions, forward first.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::pattern::{check_guard_term, instantiate, match_term, TermSubst};
use crate::rules::{DirectedRule, Rhs, Theory};
use crate::term::{Atom, Term};

pub const DEFAULT_STEP_LIMIT: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RewriteStatus {
    /// No rule applies anywhere.
    Fixpoint,
    /// The step budget ran out.
    StepLimit,
    /// A term seen before came back.
    CycleDetected,
}

impl std::fmt::Display for RewriteStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One rewrite: `rule` fired at `path`, turning `before` into `after`
/// (whole terms).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub rule: String,
    pub path: Vec<usize>,
    pub before: Term,
    pub after: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RewriteOutcome {
    pub result: Term,
    pub status: RewriteStatus,
    pub steps: usize,
    pub trace: Vec<TraceStep>,
}

fn apply_rule(rule: &DirectedRule, t: &Term) -> Option<Term> {
    let subst = match_term(&rule.lhs, t)?;
    for g in &rule.guards {
        if !check_guard_term(g, &subst).ok()? {
            return None;
        }
    }
    match &rule.rhs {
        Rhs::Pattern(p) => instantiate(p, &subst).ok(),
        Rhs::Fold(d) => {
            let args: Vec<Atom> = d
                .args
                .iter()
                .map(|v| leaf_of(&subst, v))
                .collect::<Option<_>>()?;
            d.op.eval(&args).map(Term::Leaf)
        }
    }
}

fn leaf_of(subst: &TermSubst, v: &crate::pattern::Var) -> Option<Atom> {
    match subst.get(v)? {
        Term::Leaf(a) => Some(a.clone()),
        Term::Apply { .. } => None,
    }
}

fn step(t: &Term, rules: &[DirectedRule]) -> Option<TraceStep> {
    for (path, sub) in t.positions() {
        for rule in rules {
            if let Some(new_sub) = apply_rule(rule, sub) {
                let after = t
                    .replace_at(&path, new_sub)
                    .expect("path comes from positions()");
                return Some(TraceStep {
                    rule: rule.name.clone(),
                    path,
                    before: t.clone(),
                    after,
                });
            }
        }
    }
    None
}

/// Performs one rewrite step, or returns `None` at a fixpoint.
pub fn rewrite_once(t: &Term, theory: &Theory) -> Option<TraceStep> {
    step(t, &theory.directed_rules())
}

/// Rewrites until no rule applies, a term repeats, or `step_limit` steps
/// have been taken.
pub fn rewrite_fixpoint(t: &Term, theory: &Theory, step_limit: usize) -> RewriteOutcome {
    let rules = theory.directed_rules();
    let mut seen: HashSet<String> = HashSet::from([t.to_string()]);
    let mut current = t.clone();
    let mut trace = Vec::new();
    let status = loop {
        let Some(s) = step(&current, &rules) else {
            break RewriteStatus::Fixpoint;
        };
        if trace.len() == step_limit {
            break RewriteStatus::StepLimit;
        }
        current = s.after.clone();
        trace.push(s);
        if !seen.insert(current.to_string()) {
            break RewriteStatus::CycleDetected;
        }
    };
    RewriteOutcome {
        result: current,
        status,
        steps: trace.len(),
        trace,
    }
}

/// Counts, per rule name, how often it fired in `trace`.
pub fn rule_counts(trace: &[TraceStep]) -> BTreeMap<&str, usize> {
    let mut out = BTreeMap::new();
    for s in trace {
        *out.entry(s.rule.as_str()).or_default() += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_theory;
    use crate::term::parse_term;

    const ARITH: &str = "theory arith
rule div-canon: (/ (* ?x ?y) ?z) => (* ?x (/ ?y ?z))
rule div-same:  (/ ?x ?x) => 1 if nonzero(?x)
rule mul-one:   (* ?x 1) => ?x
rule mul2-shift:(* ?x 2) => (<< ?x 1)
rule fold-div:  (/ ?a ?b) => fold(/, ?a, ?b) if is_int(?a) && is_int(?b)
";

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn single_step_to_fixpoint() {
        let th = parse_theory(ARITH).unwrap();
        let out = rewrite_fixpoint(&t("(* a 1)"), &th, 100);
        assert_eq!(out.result, t("a"));
        assert_eq!(out.status, RewriteStatus::Fixpoint);
        assert_eq!(out.steps, 1);
        assert_eq!(out.trace[0].rule, "mul-one");
        assert_eq!(out.trace[0].path, Vec::<usize>::new());
    }

    #[test]
    fn doubling_commits_to_the_first_rule() {
        let th = parse_theory(ARITH).unwrap();
        let out = rewrite_fixpoint(&t("(/ (* a 2) 2)"), &th, 100);
        // div-canon fires at the root, then div-same on (/ 2 2), then mul-one.
        assert_eq!(out.trace[0].after, t("(* a (/ 2 2))"));
        assert_eq!(out.status, RewriteStatus::Fixpoint);
        assert_eq!(out.result, t("a"));
    }

    #[test]
    fn nested_redex_takes_outermost_first() {
        let th = parse_theory("theory m\nrule mul-one: (* ?x 1) => ?x\n").unwrap();
        let s = rewrite_once(&t("(* (* c 1) 1)"), &th).unwrap();
        assert_eq!(s.after, t("(* c 1)"));
        assert_eq!(s.path, Vec::<usize>::new());
    }

    #[test]
    fn commutativity_cycles() {
        let th = parse_theory("theory c\nrule comm: (+ ?a ?b) == (+ ?b ?a)\n").unwrap();
        let out = rewrite_fixpoint(&t("(+ x y)"), &th, 100);
        assert_eq!(out.status, RewriteStatus::CycleDetected);
        assert_eq!(out.steps, 2);
        assert_eq!(out.result, t("(+ x y)"));
    }

    #[test]
    fn step_limit() {
        let th = parse_theory("theory g\nrule grow: (s ?x) => (s (s ?x))\n").unwrap();
        let out = rewrite_fixpoint(&t("(s z)"), &th, 5);
        assert_eq!(out.status, RewriteStatus::StepLimit);
        assert_eq!(out.steps, 5);
        assert_eq!(out.result.depth(), 7);
    }

    #[test]
    fn folds_need_literal_leaves() {
        let th = parse_theory("theory f\nrule add: (+ ?a ?b) => fold(+, ?a, ?b)\n").unwrap();
        let out = rewrite_fixpoint(&t("(+ (+ 1 2) (+ x 1))"), &th, 10);
        assert_eq!(out.result, t("(+ 3 (+ x 1))"));
        assert_eq!(out.status, RewriteStatus::Fixpoint);
        let out = rewrite_fixpoint(&t("(+ 9223372036854775807 1)"), &th, 10);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn guards_block_rewrites() {
        let th = parse_theory(ARITH).unwrap();
        assert!(rewrite_once(&t("(/ a a)"), &th).is_none());
        assert!(rewrite_once(&t("(/ 0 0)"), &th).is_none());
        assert_eq!(rewrite_once(&t("(/ 3 3)"), &th).unwrap().after, t("1"));
    }

    #[test]
    fn counts_and_trace_serialize() {
        let th = parse_theory(ARITH).unwrap();
        let out = rewrite_fixpoint(&t("(/ (* a 2) 2)"), &th, 100);
        let counts = rule_counts(&out.trace);
        assert_eq!(counts.values().sum::<usize>(), out.steps);
        let s = &out.trace[0];
        assert_eq!(s.before, t("(/ (* a 2) 2)"));
    }
}
