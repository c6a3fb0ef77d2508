//! Shared inputs for the benchmarks.

use termsat_core::{parse_theory, Term, Theory};

pub const ARITH: &str = include_str!("../../../theories/arith.mt");
pub const RING: &str = include_str!("../../../theories/ring.mt");

pub fn theory(text: &str) -> Theory {
    parse_theory(text).expect("bundled theory parses")
}

/// `(* (+ x0 x1) (+ x2 x3) ...)`-style products of sums with `width` factors.
pub fn product_of_sums(width: usize) -> Term {
    let sum = |i: usize| {
        Term::apply(
            "+",
            vec![Term::sym(&format!("x{i}")), Term::sym(&format!("y{i}"))],
        )
    };
    (1..width).fold(sum(0), |acc, i| Term::apply("*", vec![acc, sum(i)]))
}

/// A left-leaning chain `(* (* (* a 2) 2) 2)` of `n` doublings, divided back.
pub fn doubling_chain(n: usize) -> Term {
    let two = || Term::leaf(2);
    let mut t = Term::sym("a");
    for _ in 0..n {
        t = Term::apply("*", vec![t, two()]);
    }
    for _ in 0..n {
        t = Term::apply("/", vec![t, two()]);
    }
    t
}
