#![allow(dead_code)]

use std::collections::HashMap;

use proptest::prelude::*;
use termsat_core::{parse_theory, Atom, SaturationReport, Term, Theory};

pub const ARITH: &str = "theory arith
rule div-canon: (/ (* ?x ?y) ?z) => (* ?x (/ ?y ?z))
rule div-same:  (/ ?x ?x) => 1 if nonzero(?x)
rule mul-one:   (* ?x 1) => ?x
rule mul2-shift:(* ?x 2) => (<< ?x 1)
rule fold-div:  (/ ?a ?b) => fold(/, ?a, ?b) if is_int(?a) && is_int(?b)
";

pub const FOLDS: &str = "theory folds
rule add: (+ ?a ?b) => fold(+, ?a, ?b)
rule sub: (- ?a ?b) => fold(-, ?a, ?b)
rule mul: (* ?a ?b) => fold(*, ?a, ?b)
";

pub fn arith() -> Theory {
    parse_theory(ARITH).unwrap()
}

pub fn t(s: &str) -> Term {
    s.parse().unwrap()
}

/// Binary terms over `ops` with leaves drawn from `leaves`.
pub fn arb_term(
    ops: &'static [&'static str],
    leaves: &'static [&'static str],
    depth: u32,
) -> BoxedStrategy<Term> {
    let leaf = prop::sample::select(leaves).prop_map(t);
    leaf.prop_recursive(depth, 64, 2, move |inner| {
        (prop::sample::select(ops), inner.clone(), inner)
            .prop_map(|(op, l, r)| Term::apply(op, vec![l, r]))
    })
    .boxed()
}

/// Integer evaluation: checked arithmetic, exact division, shifts in 0..64.
/// `None` when undefined.
pub fn eval(term: &Term, env: &HashMap<&str, i64>) -> Option<i64> {
    match term {
        Term::Leaf(Atom::Int(n)) => Some(*n),
        Term::Leaf(Atom::Symbol(s)) => env.get(s.as_str()).copied(),
        Term::Leaf(_) => None,
        Term::Apply { op, args } => {
            let vals: Option<Vec<i128>> =
                args.iter().map(|a| eval(a, env).map(i128::from)).collect();
            let vals = vals?;
            let r: i128 = match (op.as_str(), vals.as_slice()) {
                ("+", [x, y]) => x + y,
                ("-", [x, y]) => x - y,
                ("*", [x, y]) => x * y,
                ("/", [x, y]) => {
                    if *y == 0 || x % y != 0 {
                        return None;
                    }
                    x / y
                }
                ("<<", [x, y]) => {
                    if !(0..64).contains(y) {
                        return None;
                    }
                    x.checked_mul(1i128 << y)?
                }
                _ => return None,
            };
            i64::try_from(r).ok()
        }
    }
}

/// The report with wall-clock fields zeroed.
pub fn untimed(mut r: SaturationReport) -> SaturationReport {
    r.time_ms = 0.0;
    for it in &mut r.per_iteration {
        it.time_ms = 0.0;
    }
    r
}

/// Every term of depth at most `depth` represented by each class, or `None`
/// once more than `cap` terms have been produced.
pub fn represented<A: termsat_core::Analysis>(
    g: &termsat_core::EGraph<A>,
    depth: usize,
    cap: usize,
) -> Option<HashMap<termsat_core::EClassId, std::collections::HashSet<Term>>> {
    use std::collections::HashSet;
    let ids = g.class_ids();
    let mut sets: HashMap<_, HashSet<Term>> = ids.iter().map(|&id| (id, HashSet::new())).collect();
    for _ in 0..depth {
        let mut next = sets.clone();
        let mut total = 0;
        for &id in &ids {
            for node in g[id].nodes() {
                let mut combos: Vec<Vec<Term>> = vec![Vec::new()];
                for c in &node.children {
                    let options = &sets[&g.find(*c)];
                    let mut grown = Vec::new();
                    for prefix in &combos {
                        for o in options {
                            let mut p = prefix.clone();
                            p.push(o.clone());
                            grown.push(p);
                            if grown.len() > cap {
                                return None;
                            }
                        }
                    }
                    combos = grown;
                }
                for args in combos {
                    next.get_mut(&id).unwrap().insert(node.to_term(args));
                }
            }
            total += next[&id].len();
            if total > cap {
                return None;
            }
        }
        sets = next;
    }
    Some(sets)
}
