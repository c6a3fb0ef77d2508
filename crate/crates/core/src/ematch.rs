//! Backtracking e-matching.
//!
//! A pattern variable binds a whole e-class; an operator or literal
//! pattern must be matched by some e-node of the class, recursing into the
//! node's child classes. Every pattern level consumes one e-node level, so
//! matching terminates on cyclic graphs without a visited set.

use std::collections::{BTreeMap, HashSet};

use crate::analysis::Analysis;
use crate::egraph::{EClassId, EGraph, EGraphError, ENode};
use crate::pattern::{Pattern, Var};

/// A match: the class the pattern root matched and the class bound to each
/// variable. All ids are canonical when produced.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EMatchSubst {
    pub root: EClassId,
    pub bindings: BTreeMap<Var, EClassId>,
}

impl EMatchSubst {
    pub fn new(root: EClassId, bindings: BTreeMap<Var, EClassId>) -> Self {
        EMatchSubst { root, bindings }
    }

    pub fn get(&self, var: &Var) -> Option<EClassId> {
        self.bindings.get(var).copied()
    }
}

type Bindings = BTreeMap<Var, EClassId>;

/// All matches of `pattern` rooted at class `root`, ordered by e-node
/// insertion index and then by child order.
pub fn ematch<A: Analysis>(
    graph: &EGraph<A>,
    pattern: &Pattern,
    root: EClassId,
) -> Result<Vec<EMatchSubst>, EGraphError> {
    graph.ensure_clean()?;
    let root = graph.try_find(root)?;
    let mut found = Vec::new();
    match_class(graph, pattern, root, Bindings::new(), &mut found);
    let mut seen = HashSet::with_capacity(found.len());
    Ok(found
        .into_iter()
        .filter(|b| seen.insert(b.clone()))
        .map(|bindings| EMatchSubst { root, bindings })
        .collect())
}

/// [`ematch`] over every canonical class in ascending id order.
pub fn ematch_all<A: Analysis>(
    graph: &EGraph<A>,
    pattern: &Pattern,
) -> Result<Vec<EMatchSubst>, EGraphError> {
    graph.ensure_clean()?;
    let mut out = Vec::new();
    for id in graph.class_ids() {
        out.extend(ematch(graph, pattern, id)?);
    }
    Ok(out)
}

fn match_class<A: Analysis>(
    graph: &EGraph<A>,
    pattern: &Pattern,
    class: EClassId,
    bindings: Bindings,
    out: &mut Vec<Bindings>,
) {
    match pattern {
        Pattern::Var(v) => match bindings.get(v) {
            Some(&bound) if bound != class => {}
            Some(_) => out.push(bindings),
            None => {
                let mut b = bindings;
                b.insert(v.clone(), class);
                out.push(b);
            }
        },
        Pattern::Lit(atom) => {
            if graph.lookup(&ENode::leaf(atom.clone())) == Some(class) {
                out.push(bindings);
            }
        }
        Pattern::Apply { op, args } => {
            for node in graph[class].nodes() {
                if node.symbol() != Some(op) || node.children.len() != args.len() {
                    continue;
                }
                let mut partial = vec![bindings.clone()];
                for (arg, &child) in args.iter().zip(&node.children) {
                    let mut next = Vec::new();
                    for b in partial {
                        match_class(graph, arg, child, b, &mut next);
                    }
                    partial = next;
                    if partial.is_empty() {
                        break;
                    }
                }
                out.extend(partial);
            }
        }
    }
}
