//! E-class analyses over a join-semilattice.
//!
//! An [`Analysis`] attaches a value to every e-class. `make` computes the
//! value of a single e-node from its children's values, `join` combines the
//! values of merged classes, and `modify` may edit the graph once a class's
//! value has settled (it runs during [`EGraph::rebuild`]).

use std::fmt;

use crate::egraph::{EClassId, EGraph, EGraphError, ENode};
use crate::rules::FoldOp;
use crate::term::Atom;

/// Two analysis values that cannot be joined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisConflict {
    pub left: String,
    pub right: String,
}

pub trait Analysis: Sized {
    type Data: Clone + fmt::Debug + PartialEq;

    fn make(egraph: &EGraph<Self>, enode: &ENode) -> Self::Data;

    /// Least upper bound. Must be commutative, associative and idempotent.
    fn join(a: &Self::Data, b: &Self::Data) -> Result<Self::Data, AnalysisConflict>;

    fn modify(_egraph: &mut EGraph<Self>, _id: EClassId) -> Result<(), EGraphError> {
        Ok(())
    }

    /// The literal this value pins the class to, if any. Guards read it.
    fn constant(_data: &Self::Data) -> Option<&Atom> {
        None
    }
}

/// The trivial analysis.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoAnalysis;

impl Analysis for NoAnalysis {
    type Data = ();

    fn make(_: &EGraph<Self>, _: &ENode) {}

    fn join(_: &(), _: &()) -> Result<(), AnalysisConflict> {
        Ok(())
    }
}

/// Value of the constant-folding lattice: `Unknown ⊑ Known(v)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstFoldValue {
    Unknown,
    /// Always an integer or boolean literal.
    Known(Atom),
}

impl ConstFoldValue {
    pub fn known(&self) -> Option<&Atom> {
        match self {
            ConstFoldValue::Known(a) => Some(a),
            ConstFoldValue::Unknown => None,
        }
    }

    pub fn join(&self, other: &ConstFoldValue) -> Result<ConstFoldValue, AnalysisConflict> {
        match (self, other) {
            (ConstFoldValue::Unknown, x) | (x, ConstFoldValue::Unknown) => Ok(x.clone()),
            (ConstFoldValue::Known(a), ConstFoldValue::Known(b)) if a == b => Ok(self.clone()),
            (ConstFoldValue::Known(a), ConstFoldValue::Known(b)) => Err(AnalysisConflict {
                left: a.to_string(),
                right: b.to_string(),
            }),
        }
    }
}

impl fmt::Display for ConstFoldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstFoldValue::Unknown => f.write_str("unknown"),
            ConstFoldValue::Known(a) => write!(f, "{a}"),
        }
    }
}

/// Constant folding over integer and boolean literals.
///
/// Operator nodes whose name is a fold operator (`+`, `*`, `<<`, `and`, ...)
/// and whose children are all known are evaluated with the same exact
/// semantics as dynamic rule right-hand sides. `modify` then adds the
/// literal leaf to the class, so a class of `(+ 2 3)` also holds `5`.
#[derive(Debug, Default, Clone, Copy)]
pub struct ConstantFold;

impl Analysis for ConstantFold {
    type Data = ConstFoldValue;

    fn make(egraph: &EGraph<Self>, enode: &ENode) -> ConstFoldValue {
        analysis_make(egraph, enode)
    }

    fn join(a: &ConstFoldValue, b: &ConstFoldValue) -> Result<ConstFoldValue, AnalysisConflict> {
        a.join(b)
    }

    fn modify(egraph: &mut EGraph<Self>, id: EClassId) -> Result<(), EGraphError> {
        analysis_modify(egraph, id)
    }

    fn constant(data: &ConstFoldValue) -> Option<&Atom> {
        data.known()
    }
}

/// Constant value of a single e-node.
pub fn analysis_make(egraph: &EGraph<ConstantFold>, enode: &ENode) -> ConstFoldValue {
    if enode.is_leaf() {
        return match &enode.op {
            atom @ (Atom::Int(_) | Atom::Bool(_)) => ConstFoldValue::Known(atom.clone()),
            _ => ConstFoldValue::Unknown,
        };
    }
    let Some(op) = enode.symbol().and_then(|s| FoldOp::from_name(s.as_str())) else {
        return ConstFoldValue::Unknown;
    };
    if op.arity() != enode.children.len() {
        return ConstFoldValue::Unknown;
    }
    let mut args = Vec::with_capacity(enode.children.len());
    for &c in &enode.children {
        match &egraph[c].data {
            ConstFoldValue::Known(a) => args.push(a.clone()),
            ConstFoldValue::Unknown => return ConstFoldValue::Unknown,
        }
    }
    match op.eval(&args) {
        Some(a) => ConstFoldValue::Known(a),
        None => ConstFoldValue::Unknown,
    }
}

pub fn analysis_join(
    a: &ConstFoldValue,
    b: &ConstFoldValue,
) -> Result<ConstFoldValue, AnalysisConflict> {
    a.join(b)
}

/// Adds the known literal of class `id` as a leaf of that class.
pub fn analysis_modify(egraph: &mut EGraph<ConstantFold>, id: EClassId) -> Result<(), EGraphError> {
    let id = egraph.try_find(id)?;
    let ConstFoldValue::Known(atom) = egraph[id].data.clone() else {
        return Ok(());
    };
    if egraph[id].has_leaf(&atom) {
        return Ok(());
    }
    let leaf = egraph.add_unlimited(ENode::leaf(atom));
    egraph.union(id, leaf)?;
    Ok(())
}
