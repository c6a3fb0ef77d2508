//! Hashconsed e-graph with union-find and deferred rebuilding.
//!
//! [`EGraph::add`] and [`EGraph::union`] only do local work. A union may
//! break congruence (two parents with now-equal children living in different
//! classes) and leave stale entries in the hashcons; the graph is then
//! *dirty* until [`EGraph::rebuild`] restores the invariants:
//!
//! 1. every canonical e-node is stored exactly once, in the class the
//!    hashcons maps it to;
//! 2. congruent e-nodes live in the same class;
//! 3. class analysis data is the join of `make` over the class's nodes.
//!
//! Read-only consumers (e-matching, extraction, DOT export) require a clean
//! graph.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Index;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{Analysis, ConstantFold};
use crate::pattern::{Pattern, Var};
use crate::term::{Atom, Symbol, Term};

/// Identifier of an e-class. Ids are dense and allocated in insertion order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EClassId(u32);

impl EClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for EClassId {
    fn from(i: usize) -> Self {
        EClassId(u32::try_from(i).expect("e-class id overflow"))
    }
}

impl fmt::Debug for EClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for EClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An operator over e-class children, or a leaf atom when `children` is
/// empty. Operators of non-leaf nodes are always symbols.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ENode {
    pub op: Atom,
    pub children: Vec<EClassId>,
}

impl ENode {
    pub fn leaf(atom: Atom) -> ENode {
        ENode {
            op: atom,
            children: Vec::new(),
        }
    }

    pub fn new(op: Symbol, children: Vec<EClassId>) -> ENode {
        ENode {
            op: Atom::Symbol(op),
            children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// The operator name when this is a symbol-headed node.
    pub fn symbol(&self) -> Option<&Symbol> {
        match &self.op {
            Atom::Symbol(s) => Some(s),
            _ => None,
        }
    }

    /// Rebuilds a term from this node given one term per child.
    pub fn to_term(&self, args: Vec<Term>) -> Term {
        match (&self.op, args.is_empty()) {
            (atom, true) => Term::Leaf(atom.clone()),
            (Atom::Symbol(op), false) => Term::Apply {
                op: op.clone(),
                args,
            },
            (other, false) => unreachable!("non-symbol operator {other} with children"),
        }
    }
}

impl fmt::Debug for ENode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.children.is_empty() {
            return write!(f, "{}", self.op);
        }
        write!(f, "({}", self.op)?;
        for c in &self.children {
            write!(f, " {c:?}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EGraphError {
    #[error("invalid e-class id {0:?}")]
    InvalidId(EClassId),
    #[error("e-node limit of {limit} reached")]
    Capacity { limit: usize },
    #[error("e-graph has pending repairs; call rebuild first")]
    Dirty,
    #[error("analysis inconsistency in e-class {class:?}: {left} and {right} were proven equal")]
    Inconsistent {
        class: EClassId,
        left: String,
        right: String,
    },
}

#[derive(Clone, Debug)]
struct UnionFind {
    parents: Vec<EClassId>,
    sizes: Vec<u32>,
}

impl UnionFind {
    fn make_set(&mut self) -> EClassId {
        let id = EClassId::from(self.parents.len());
        self.parents.push(id);
        self.sizes.push(1);
        id
    }

    fn find(&self, mut id: EClassId) -> EClassId {
        while self.parents[id.index()] != id {
            id = self.parents[id.index()];
        }
        id
    }

    fn find_mut(&mut self, id: EClassId) -> EClassId {
        let root = self.find(id);
        let mut cur = id;
        while cur != root {
            let next = self.parents[cur.index()];
            self.parents[cur.index()] = root;
            cur = next;
        }
        root
    }

    /// Larger set wins; on equal sizes the smaller id stays canonical.
    fn pick_root(&self, a: EClassId, b: EClassId) -> (EClassId, EClassId) {
        let (sa, sb) = (self.sizes[a.index()], self.sizes[b.index()]);
        if sa > sb || (sa == sb && a < b) {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn link(&mut self, root: EClassId, child: EClassId) {
        self.parents[child.index()] = root;
        self.sizes[root.index()] += self.sizes[child.index()];
    }
}

/// An equivalence class of e-nodes.
#[derive(Clone, Debug)]
pub struct EClass<D> {
    pub id: EClassId,
    /// `(insertion index, node)` kept in insertion order.
    nodes: Vec<(u32, ENode)>,
    /// Occurrences of this class as a child: `(parent node, parent class)`.
    /// May hold stale entries while the graph is dirty.
    parents: Vec<(ENode, EClassId)>,
    pub data: D,
}

impl<D> EClass<D> {
    /// Nodes in insertion order.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &ENode> + '_ {
        self.nodes.iter().map(|(_, n)| n)
    }

    /// Nodes paired with their global insertion index.
    pub fn indexed_nodes(&self) -> impl ExactSizeIterator<Item = (u32, &ENode)> + '_ {
        self.nodes.iter().map(|(i, n)| (*i, n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parents(&self) -> impl Iterator<Item = &(ENode, EClassId)> + '_ {
        self.parents.iter()
    }

    /// Whether the class holds the leaf node for `atom`.
    pub fn has_leaf(&self, atom: &Atom) -> bool {
        self.nodes().any(|n| n.is_leaf() && &n.op == atom)
    }
}

/// The e-graph. `A` is the single e-class analysis attached to it.
pub struct EGraph<A: Analysis = ConstantFold> {
    pub analysis: A,
    unionfind: UnionFind,
    hashcons: HashMap<ENode, EClassId>,
    classes: Vec<Option<EClass<A::Data>>>,
    pending: Vec<(ENode, EClassId)>,
    analysis_pending: Vec<(ENode, EClassId)>,
    modify_pending: Vec<EClassId>,
    dirty: bool,
    next_stamp: u32,
    node_count: usize,
    node_limit: Option<usize>,
    version: u64,
}

impl<A: Analysis + Default> Default for EGraph<A> {
    fn default() -> Self {
        EGraph::new(A::default())
    }
}

impl<A: Analysis + Clone> Clone for EGraph<A> {
    fn clone(&self) -> Self {
        EGraph {
            analysis: self.analysis.clone(),
            unionfind: self.unionfind.clone(),
            hashcons: self.hashcons.clone(),
            classes: self.classes.clone(),
            pending: self.pending.clone(),
            analysis_pending: self.analysis_pending.clone(),
            modify_pending: self.modify_pending.clone(),
            dirty: self.dirty,
            next_stamp: self.next_stamp,
            node_count: self.node_count,
            node_limit: self.node_limit,
            version: self.version,
        }
    }
}

impl<A: Analysis> fmt::Debug for EGraph<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for class in self.classes() {
            m.entry(&class.id, &class.nodes().collect::<Vec<_>>());
        }
        m.finish()
    }
}

impl<A: Analysis> Index<EClassId> for EGraph<A> {
    type Output = EClass<A::Data>;

    /// Looks up the canonical class of `id`. Panics on an invalid id.
    fn index(&self, id: EClassId) -> &Self::Output {
        let id = self.find(id);
        self.classes[id.index()]
            .as_ref()
            .expect("canonical class missing")
    }
}

impl<A: Analysis> EGraph<A> {
    pub fn new(analysis: A) -> Self {
        EGraph {
            analysis,
            unionfind: UnionFind {
                parents: Vec::new(),
                sizes: Vec::new(),
            },
            hashcons: HashMap::new(),
            classes: Vec::new(),
            pending: Vec::new(),
            analysis_pending: Vec::new(),
            modify_pending: Vec::new(),
            dirty: false,
            next_stamp: 0,
            node_count: 0,
            node_limit: None,
            version: 0,
        }
    }

    /// Caps the number of stored e-nodes; `add` fails with
    /// [`EGraphError::Capacity`] once reached.
    pub fn with_node_limit(mut self, limit: usize) -> Self {
        self.node_limit = Some(limit);
        self
    }

    pub fn set_node_limit(&mut self, limit: Option<usize>) {
        self.node_limit = limit;
    }

    pub fn node_limit(&self) -> Option<usize> {
        self.node_limit
    }

    /// Number of stored e-nodes (exact when clean).
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of canonical e-classes.
    pub fn class_count(&self) -> usize {
        self.classes.iter().filter(|c| c.is_some()).count()
    }

    /// Number of ids ever allocated.
    pub fn id_count(&self) -> usize {
        self.unionfind.parents.len()
    }

    /// Counter bumped by every new e-node and every effective union.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn is_clean(&self) -> bool {
        !self.dirty && self.pending.is_empty() && self.analysis_pending.is_empty()
    }

    pub(crate) fn ensure_clean(&self) -> Result<(), EGraphError> {
        if self.is_clean() {
            Ok(())
        } else {
            Err(EGraphError::Dirty)
        }
    }

    fn check_id(&self, id: EClassId) -> Result<(), EGraphError> {
        if id.index() < self.unionfind.parents.len() {
            Ok(())
        } else {
            Err(EGraphError::InvalidId(id))
        }
    }

    /// Canonical representative of `id`. Panics on an invalid id; see
    /// [`EGraph::try_find`].
    pub fn find(&self, id: EClassId) -> EClassId {
        self.unionfind.find(id)
    }

    pub fn try_find(&self, id: EClassId) -> Result<EClassId, EGraphError> {
        self.check_id(id)?;
        Ok(self.unionfind.find(id))
    }

    fn find_mut(&mut self, id: EClassId) -> EClassId {
        self.unionfind.find_mut(id)
    }

    /// Maps every child through `find`.
    pub fn canonicalize(&self, node: &ENode) -> ENode {
        ENode {
            op: node.op.clone(),
            children: node.children.iter().map(|&c| self.find(c)).collect(),
        }
    }

    /// Canonical classes in ascending id order.
    pub fn classes(&self) -> impl Iterator<Item = &EClass<A::Data>> + '_ {
        self.classes.iter().flatten()
    }

    pub fn class_ids(&self) -> Vec<EClassId> {
        self.classes().map(|c| c.id).collect()
    }

    pub fn class(&self, id: EClassId) -> Result<&EClass<A::Data>, EGraphError> {
        let id = self.try_find(id)?;
        Ok(self.classes[id.index()]
            .as_ref()
            .expect("canonical class missing"))
    }

    fn class_mut(&mut self, id: EClassId) -> &mut EClass<A::Data> {
        let id = self.find(id);
        self.classes[id.index()]
            .as_mut()
            .expect("canonical class missing")
    }

    /// Class holding `node` (after canonicalization), if any.
    pub fn lookup(&self, node: &ENode) -> Option<EClassId> {
        self.hashcons
            .get(&self.canonicalize(node))
            .map(|&id| self.find(id))
    }

    /// Class representing `term`, if every subterm is already present.
    pub fn lookup_term(&self, term: &Term) -> Option<EClassId> {
        match term {
            Term::Leaf(a) => self.lookup(&ENode::leaf(a.clone())),
            Term::Apply { op, args } => {
                let children = args
                    .iter()
                    .map(|a| self.lookup_term(a))
                    .collect::<Option<Vec<_>>>()?;
                self.lookup(&ENode::new(op.clone(), children))
            }
        }
    }

    /// Hashconses `node`, creating a fresh class if it is new.
    pub fn add(&mut self, node: ENode) -> Result<EClassId, EGraphError> {
        for &c in &node.children {
            self.check_id(c)?;
        }
        let node = self.canonicalize(&node);
        if let Some(&id) = self.hashcons.get(&node) {
            return Ok(self.find(id));
        }
        if let Some(limit) = self.node_limit {
            if self.node_count >= limit {
                return Err(EGraphError::Capacity { limit });
            }
        }
        Ok(self.insert_new(node))
    }

    /// Adds a node bypassing the node limit. Used by analysis hooks, which
    /// must not fail half-way through a rebuild.
    pub(crate) fn add_unlimited(&mut self, node: ENode) -> EClassId {
        let node = self.canonicalize(&node);
        match self.hashcons.get(&node) {
            Some(&id) => self.find(id),
            None => self.insert_new(node),
        }
    }

    fn insert_new(&mut self, node: ENode) -> EClassId {
        let id = self.unionfind.make_set();
        let data = A::make(self, &node);
        let mut seen = HashSet::new();
        for &child in &node.children {
            if seen.insert(child) {
                self.class_mut(child).parents.push((node.clone(), id));
            }
        }
        let stamp = self.next_stamp;
        self.next_stamp += 1;
        self.classes.push(Some(EClass {
            id,
            nodes: vec![(stamp, node.clone())],
            parents: Vec::new(),
            data,
        }));
        self.hashcons.insert(node, id);
        self.node_count += 1;
        self.version += 1;
        self.modify_pending.push(id);
        id
    }

    /// Adds `term` bottom-up and returns its class.
    pub fn add_term(&mut self, term: &Term) -> Result<EClassId, EGraphError> {
        match term {
            Term::Leaf(a) => self.add(ENode::leaf(a.clone())),
            Term::Apply { op, args } => {
                let mut children = Vec::with_capacity(args.len());
                for a in args {
                    children.push(self.add_term(a)?);
                }
                self.add(ENode::new(op.clone(), children))
            }
        }
    }

    /// Adds the instance of `pattern` under `bindings`, with variables
    /// standing for existing classes.
    pub fn add_instance(
        &mut self,
        pattern: &Pattern,
        bindings: &dyn Fn(&Var) -> Option<EClassId>,
    ) -> Result<Option<EClassId>, EGraphError> {
        Ok(match pattern {
            Pattern::Var(v) => bindings(v).map(|id| self.find(id)),
            Pattern::Lit(a) => Some(self.add(ENode::leaf(a.clone()))?),
            Pattern::Apply { op, args } => {
                let mut children = Vec::with_capacity(args.len());
                for a in args {
                    match self.add_instance(a, bindings)? {
                        Some(c) => children.push(c),
                        None => return Ok(None),
                    }
                }
                Some(self.add(ENode::new(op.clone(), children))?)
            }
        })
    }

    /// Merges the classes of `a` and `b` and returns the new canonical id.
    ///
    /// Congruence is not restored until [`EGraph::rebuild`].
    pub fn union(&mut self, a: EClassId, b: EClassId) -> Result<EClassId, EGraphError> {
        self.check_id(a)?;
        self.check_id(b)?;
        let (a, b) = (self.find_mut(a), self.find_mut(b));
        if a == b {
            return Ok(a);
        }
        let (root, child) = self.unionfind.pick_root(a, b);

        let joined = {
            let (rc, cc) = (&self[root].data, &self[child].data);
            A::join(rc, cc).map_err(|conflict| EGraphError::Inconsistent {
                class: root,
                left: conflict.left,
                right: conflict.right,
            })?
        };

        let child_class = self.classes[child.index()]
            .take()
            .expect("canonical class missing");
        self.unionfind.link(root, child);

        if joined != child_class.data {
            self.analysis_pending
                .extend(child_class.parents.iter().cloned());
        }
        self.pending.extend(child_class.parents.iter().cloned());

        let root_class = self.classes[root.index()]
            .as_mut()
            .expect("canonical class missing");
        if joined != root_class.data {
            self.analysis_pending
                .extend(root_class.parents.iter().cloned());
        }
        root_class.data = joined;
        root_class.nodes.extend(child_class.nodes);
        root_class.parents.extend(child_class.parents);

        self.modify_pending.push(root);
        self.dirty = true;
        self.version += 1;
        Ok(root)
    }

    /// Alias of [`EGraph::union`].
    pub fn merge(&mut self, a: EClassId, b: EClassId) -> Result<EClassId, EGraphError> {
        self.union(a, b)
    }

    /// Queues the analysis `modify` hook for `id`; it runs in the next
    /// [`EGraph::rebuild`].
    pub fn request_modify(&mut self, id: EClassId) -> Result<(), EGraphError> {
        self.check_id(id)?;
        self.modify_pending.push(id);
        Ok(())
    }

    /// Runs the analysis `modify` hook on `id` right away. The graph may be
    /// dirty afterwards.
    pub fn apply_modify(&mut self, id: EClassId) -> Result<(), EGraphError> {
        let id = self.try_find(id)?;
        A::modify(self, id)
    }

    /// Restores the hashcons, congruence and analysis invariants.
    ///
    /// Returns the number of unions performed while repairing.
    pub fn rebuild(&mut self) -> Result<usize, EGraphError> {
        let before = self.version;
        loop {
            while let Some((node, class)) = self.pending.pop() {
                let node = self.canonicalize(&node);
                let class = self.find_mut(class);
                if let Some(old) = self.hashcons.insert(node, class) {
                    self.union(old, class)?;
                }
            }

            while let Some((node, class)) = self.analysis_pending.pop() {
                let class = self.find_mut(class);
                let node_data = A::make(self, &self.canonicalize(&node));
                let current = &self[class].data;
                let joined =
                    A::join(current, &node_data).map_err(|conflict| EGraphError::Inconsistent {
                        class,
                        left: conflict.left,
                        right: conflict.right,
                    })?;
                if &joined != current {
                    let c = self.class_mut(class);
                    c.data = joined;
                    let parents = c.parents.clone();
                    self.analysis_pending.extend(parents);
                    self.modify_pending.push(class);
                }
            }

            if !self.pending.is_empty() || !self.analysis_pending.is_empty() {
                continue;
            }
            if self.modify_pending.is_empty() {
                break;
            }
            let mut ids: Vec<EClassId> = self
                .modify_pending
                .drain(..)
                .map(|id| self.unionfind.find(id))
                .collect();
            ids.sort_unstable();
            ids.dedup();
            for id in ids {
                let id = self.find(id);
                A::modify(self, id)?;
            }
        }
        self.rebuild_classes();
        self.dirty = false;
        Ok((self.version - before) as usize)
    }

    /// Canonicalizes and deduplicates node and parent lists, then rebuilds
    /// the hashcons from scratch.
    fn rebuild_classes(&mut self) {
        let uf = &self.unionfind;
        let canon = |n: &ENode| ENode {
            op: n.op.clone(),
            children: n.children.iter().map(|&c| uf.find(c)).collect(),
        };
        self.hashcons.clear();
        let mut count = 0;
        for class in self.classes.iter_mut().flatten() {
            let mut nodes: Vec<(u32, ENode)> =
                class.nodes.iter().map(|(s, n)| (*s, canon(n))).collect();
            nodes.sort_by_key(|(s, _)| *s);
            let mut seen = HashSet::with_capacity(nodes.len());
            nodes.retain(|(_, n)| seen.insert(n.clone()));
            for (_, n) in &nodes {
                self.hashcons.insert(n.clone(), class.id);
            }
            count += nodes.len();
            class.nodes = nodes;

            let mut seen = HashSet::with_capacity(class.parents.len());
            class.parents = class
                .parents
                .iter()
                .map(|(n, p)| (canon(n), uf.find(*p)))
                .filter(|entry| seen.insert(entry.clone()))
                .collect();
        }
        self.node_count = count;
    }

    /// Full-scan check of the clean-state invariants. Intended for tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !self.is_clean() {
            return Err("graph is dirty".into());
        }
        for id in 0..self.id_count() {
            let id = EClassId::from(id);
            let r = self.find(id);
            if self.find(r) != r {
                return Err(format!("find not idempotent at {id:?}"));
            }
            if self.classes[r.index()].is_none() {
                return Err(format!("canonical id {r:?} has no class"));
            }
        }
        let mut owner: HashMap<ENode, EClassId> = HashMap::new();
        let mut total = 0;
        for class in self.classes() {
            if class.is_empty() {
                return Err(format!("class {:?} is empty", class.id));
            }
            for node in class.nodes() {
                total += 1;
                if &self.canonicalize(node) != node {
                    return Err(format!("non-canonical node {node:?} in {:?}", class.id));
                }
                if let Some(prev) = owner.insert(node.clone(), class.id) {
                    return Err(format!(
                        "node {node:?} stored in both {prev:?} and {:?}",
                        class.id
                    ));
                }
                match self.hashcons.get(node) {
                    Some(&h) if self.find(h) == class.id => {}
                    other => {
                        return Err(format!(
                            "hashcons maps {node:?} to {other:?}, expected {:?}",
                            class.id
                        ))
                    }
                }
                for &c in &node.children {
                    let child = &self[c];
                    if !child
                        .parents
                        .iter()
                        .any(|(n, p)| n == node && *p == class.id)
                    {
                        return Err(format!("{:?} missing parent entry for {node:?}", child.id));
                    }
                }
            }
            let mut expected: Option<A::Data> = None;
            for node in class.nodes() {
                let made = A::make(self, node);
                expected = Some(match expected {
                    None => made,
                    Some(acc) => A::join(&acc, &made)
                        .map_err(|c| format!("conflict: {} vs {}", c.left, c.right))?,
                });
            }
            if expected.as_ref() != Some(&class.data) {
                return Err(format!(
                    "analysis of {:?} is {:?}, recomputed {:?}",
                    class.id, class.data, expected
                ));
            }
        }
        if total != self.node_count {
            return Err(format!(
                "node count {} but {} stored",
                self.node_count, total
            ));
        }
        if self.hashcons.len() != total {
            return Err(format!(
                "hashcons has {} entries for {} nodes",
                self.hashcons.len(),
                total
            ));
        }
        Ok(())
    }

    /// Graphviz rendering: one dotted cluster per class, one record node
    /// per e-node, edges from child ports to the child's cluster.
    pub fn dump_dot(&self) -> Result<String, EGraphError> {
        use std::fmt::Write;
        self.ensure_clean()?;
        let mut out = String::new();
        out.push_str(
            "digraph egraph {\n  compound=true\n  clusterrank=local\n  node [shape=record]\n",
        );
        for class in self.classes() {
            let _ = writeln!(
                out,
                "  subgraph cluster_{} {{\n    style=dotted\n    label=\"{}\"",
                class.id, class.id
            );
            for (i, node) in class.nodes().enumerate() {
                let op = dot_escape(&node.op.to_string());
                let label = if node.is_leaf() {
                    op
                } else {
                    let ports: Vec<String> = (0..node.children.len())
                        .map(|p| format!("<c{p}>"))
                        .collect();
                    format!("{{{op}|{{{}}}}}", ports.join("|"))
                };
                let _ = writeln!(out, "    n{}_{} [label=\"{}\"]", class.id, i, label);
            }
            out.push_str("  }\n");
        }
        for class in self.classes() {
            for (i, node) in class.nodes().enumerate() {
                for (p, &child) in node.children.iter().enumerate() {
                    let child = self.find(child);
                    let _ = writeln!(
                        out,
                        "  n{}_{}:c{} -> n{}_0 [lhead=cluster_{}]",
                        class.id, i, p, child, child
                    );
                }
            }
        }
        out.push_str("}\n");
        Ok(out)
    }
}

fn dot_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if matches!(c, '{' | '}' | '|' | '<' | '>' | '"' | '\\' | ' ') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}
