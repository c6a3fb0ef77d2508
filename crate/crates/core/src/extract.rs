//! Cost-based extraction of a best term per e-class.
//!
//! Costs are exact rationals. Best costs are found by relaxing every class
//! to a fixpoint in ascending id order; among equal-cost e-nodes the one
//! inserted first wins, so extraction is deterministic.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

use crate::analysis::Analysis;
use crate::egraph::{EClassId, EGraph, EGraphError, ENode};
use crate::term::{Atom, Term};

pub type Cost = Ratio<i64>;

/// Per-operator weights; unlisted operators weigh 1. Leaves are keyed by
/// their printed form (`a`, `2`, `true`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpWeights {
    weights: BTreeMap<String, Cost>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("weights line {line}: {message}")]
pub struct WeightsError {
    pub line: usize,
    pub message: String,
}

impl OpWeights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, op: &str, weight: Cost) {
        self.weights.insert(op.to_string(), weight);
    }

    pub fn weight(&self, op: &str) -> Cost {
        self.weights
            .get(op)
            .copied()
            .unwrap_or_else(|| Cost::from_integer(1))
    }

    /// Parses lines of `<op> <weight>`. Weights are non-negative integers,
    /// decimals (`0.5`) or fractions (`3/2`); `#` starts a comment.
    pub fn parse(text: &str) -> Result<OpWeights, WeightsError> {
        let mut out = OpWeights::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| WeightsError {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [op, w] = fields[..] else {
                return Err(err(format!("expected `<op> <weight>`, found {line:?}")));
            };
            let weight = parse_weight(w).ok_or_else(|| err(format!("bad weight {w:?}")))?;
            if out.weights.insert(op.to_string(), weight).is_some() {
                return Err(err(format!("operator {op} listed twice")));
            }
        }
        Ok(out)
    }
}

fn parse_weight(s: &str) -> Option<Cost> {
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if let Some((n, d)) = s.split_once('/') {
        if !digits(n) || !digits(d) {
            return None;
        }
        let d: i64 = d.parse().ok()?;
        return (d != 0)
            .then(|| Some(Cost::new(n.parse().ok()?, d)))
            .flatten();
    }
    if let Some((int, frac)) = s.split_once('.') {
        if !digits(int) || !digits(frac) || frac.len() > 9 {
            return None;
        }
        let scale = 10i64.pow(frac.len() as u32);
        let n = int
            .parse::<i64>()
            .ok()?
            .checked_mul(scale)?
            .checked_add(frac.parse().ok()?)?;
        return Some(Cost::new(n, scale));
    }
    digits(s)
        .then(|| s.parse().ok().map(Cost::from_integer))
        .flatten()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CostFunction {
    /// Number of nodes.
    AstSize,
    /// Height of the tree; a leaf has depth 1.
    AstDepth,
    /// Sum of operator weights.
    OpWeights(OpWeights),
}

impl CostFunction {
    /// Cost of an e-node given the costs of its children.
    pub fn node_cost(&self, op: &Atom, child_costs: &[Cost]) -> Cost {
        let one = Cost::from_integer(1);
        match self {
            CostFunction::AstSize => child_costs.iter().fold(one, |acc, c| acc + c),
            CostFunction::AstDepth => one + child_costs.iter().copied().max().unwrap_or_default(),
            CostFunction::OpWeights(w) => child_costs
                .iter()
                .fold(w.weight(&op.to_string()), |acc, c| acc + c),
        }
    }

    /// Cost of a concrete term.
    pub fn term_cost(&self, term: &Term) -> Cost {
        match term {
            Term::Leaf(a) => self.node_cost(a, &[]),
            Term::Apply { op, args } => {
                let costs: Vec<Cost> = args.iter().map(|a| self.term_cost(a)).collect();
                self.node_cost(&Atom::Symbol(op.clone()), &costs)
            }
        }
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFunction::AstSize => f.write_str("ast-size"),
            CostFunction::AstDepth => f.write_str("ast-depth"),
            CostFunction::OpWeights(_) => f.write_str("op-weights"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Graph(#[from] EGraphError),
    #[error("e-class {0:?} represents no finite term")]
    Unextractable(EClassId),
}

/// Best e-node and cost for every extractable class, keyed by canonical id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Extraction {
    best: BTreeMap<EClassId, (ENode, Cost)>,
}

impl Extraction {
    pub fn len(&self) -> usize {
        self.best.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best.is_empty()
    }

    /// Entries in ascending class order.
    pub fn iter(&self) -> impl Iterator<Item = (EClassId, &ENode, Cost)> + '_ {
        self.best.iter().map(|(&id, (n, c))| (id, n, *c))
    }

    pub fn get<A: Analysis>(&self, graph: &EGraph<A>, id: EClassId) -> Option<&(ENode, Cost)> {
        self.best.get(&graph.find(id))
    }

    pub fn cost<A: Analysis>(&self, graph: &EGraph<A>, id: EClassId) -> Option<Cost> {
        self.get(graph, id).map(|(_, c)| *c)
    }

    /// Rebuilds the best term of class `id` top-down.
    pub fn term<A: Analysis>(&self, graph: &EGraph<A>, id: EClassId) -> Result<Term, ExtractError> {
        let id = graph.try_find(id)?;
        let mut memo = HashMap::new();
        self.build(graph, id, &mut memo)
    }

    fn build<A: Analysis>(
        &self,
        graph: &EGraph<A>,
        id: EClassId,
        memo: &mut HashMap<EClassId, Term>,
    ) -> Result<Term, ExtractError> {
        if let Some(t) = memo.get(&id) {
            return Ok(t.clone());
        }
        let (node, _) = self.best.get(&id).ok_or(ExtractError::Unextractable(id))?;
        let mut args = Vec::with_capacity(node.children.len());
        for &c in &node.children {
            args.push(self.build(graph, graph.find(c), memo)?);
        }
        let t = node.to_term(args);
        memo.insert(id, t.clone());
        Ok(t)
    }
}

/// Computes the best e-node of every class. Classes with no finite term
/// (every node sits on a cycle) are left out.
pub fn extract_analysis<A: Analysis>(
    graph: &EGraph<A>,
    cost: &CostFunction,
) -> Result<Extraction, EGraphError> {
    graph.ensure_clean()?;
    let ids = graph.class_ids();
    // (cost, insertion stamp, node) of the current best per class.
    let mut best: HashMap<EClassId, (Cost, u32, ENode)> = HashMap::new();
    let mut changed = true;
    while changed {
        changed = false;
        for &id in &ids {
            for (stamp, node) in graph[id].indexed_nodes() {
                let child_costs: Option<Vec<Cost>> = node
                    .children
                    .iter()
                    .map(|c| best.get(&graph.find(*c)).map(|b| b.0))
                    .collect();
                let Some(child_costs) = child_costs else {
                    continue;
                };
                let c = cost.node_cost(&node.op, &child_costs);
                let better = match best.get(&id) {
                    None => true,
                    Some((bc, bs, _)) => c < *bc || (c == *bc && stamp < *bs),
                };
                if better {
                    best.insert(id, (c, stamp, node.clone()));
                    changed = true;
                }
            }
        }
    }
    Ok(Extraction {
        best: best
            .into_iter()
            .map(|(id, (c, _, n))| (id, (n, c)))
            .collect(),
    })
}

/// Best term of the class `root` and its cost.
pub fn extract_best<A: Analysis>(
    graph: &EGraph<A>,
    root: EClassId,
    cost: &CostFunction,
) -> Result<(Term, Cost), ExtractError> {
    let root = graph.try_find(root)?;
    let ex = extract_analysis(graph, cost)?;
    let c = ex
        .cost(graph, root)
        .ok_or(ExtractError::Unextractable(root))?;
    Ok((ex.term(graph, root)?, c))
}

pub fn term_cost(term: &Term, cost: &CostFunction) -> Cost {
    cost.term_cost(term)
}
