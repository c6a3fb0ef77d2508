//! Term rewriting with two engines: classic fixpoint rewriting over trees,
//! and equality saturation over an e-graph followed by cost-based
//! extraction.
//!
//! ```
//! use termsat_core::{extract_best, parse_term, run_saturation, CostFunction, EGraph, SaturationParams, Theory};
//!
//! let theory = Theory::parse("theory t\nrule mul-one: (* ?x 1) => ?x\n").unwrap();
//! let mut g: EGraph = EGraph::default();
//! let root = g.add_term(&parse_term("(* (* a 1) 1)").unwrap()).unwrap();
//! run_saturation(&mut g, &theory, &SaturationParams::default()).unwrap();
//! let (best, _) = extract_best(&g, root, &CostFunction::AstSize).unwrap();
//! assert_eq!(best.to_string(), "a");
//! ```

pub mod analysis;
pub mod classic;
pub mod egraph;
pub mod ematch;
pub mod extract;
pub mod pattern;
pub mod rules;
pub mod saturate;
pub mod term;

pub use analysis::{Analysis, AnalysisConflict, ConstFoldValue, ConstantFold, NoAnalysis};
pub use classic::{rewrite_fixpoint, rewrite_once, RewriteOutcome, RewriteStatus, TraceStep};
pub use egraph::{EClass, EClassId, EGraph, EGraphError, ENode};
pub use ematch::{ematch, ematch_all, EMatchSubst};
pub use extract::{
    extract_analysis, extract_best, term_cost, Cost, CostFunction, ExtractError, Extraction,
    OpWeights,
};
pub use pattern::{instantiate, match_term, parse_pattern, Guard, Pattern, Predicate, Var};
pub use rules::{parse_theory, FoldOp, Rule, RuleKind, Theory, TheoryError};
pub use saturate::{
    prove_equal, run_saturation, run_saturation_with, ProofOutcome, SaturateError,
    SaturationParams, SaturationReport, Scheduler, StopReason,
};
pub use term::{parse_term, print_term, Atom, ParseError, Symbol, Term};
