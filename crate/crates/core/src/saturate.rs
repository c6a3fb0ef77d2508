//! The equality saturation loop.
//!
//! Each iteration has a read phase, where every active rule is e-matched
//! against the graph as it stood when the iteration began (guards and folds
//! are evaluated there too), followed by a write phase that instantiates
//! the right-hand sides and unions them with the matched classes, and
//! finally a rebuild. The loop stops when an iteration changes nothing or a
//! limit is hit.

use std::ops::ControlFlow;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::Analysis;
use crate::egraph::{EClassId, EGraph, EGraphError, ENode};
use crate::ematch::{ematch_all, EMatchSubst};
use crate::rules::{check_guard_eclass, class_literal, DirectedRule, Rhs, Theory};
use crate::term::{Atom, Term};

pub const DEFAULT_ITER_LIMIT: usize = 30;
pub const DEFAULT_NODE_LIMIT: usize = 10_000;
pub const DEFAULT_TIME_LIMIT_MS: u64 = 5_000;
pub const DEFAULT_MATCH_LIMIT: usize = 1_000;
pub const DEFAULT_BAN_LENGTH: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheduler {
    /// Every rule runs every iteration.
    Simple,
    /// A rule producing more than `match_limit` matches in one iteration
    /// has them dropped and sits out the next `ban_length` iterations.
    Backoff,
}

impl std::str::FromStr for Scheduler {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simple" => Ok(Scheduler::Simple),
            "backoff" => Ok(Scheduler::Backoff),
            other => Err(format!(
                "unknown scheduler {other:?} (expected simple or backoff)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SaturationParams {
    pub iter_limit: usize,
    pub node_limit: usize,
    pub time_limit_ms: u64,
    pub scheduler: Scheduler,
    pub match_limit: usize,
    pub ban_length: usize,
}

impl Default for SaturationParams {
    fn default() -> Self {
        SaturationParams {
            iter_limit: DEFAULT_ITER_LIMIT,
            node_limit: DEFAULT_NODE_LIMIT,
            time_limit_ms: DEFAULT_TIME_LIMIT_MS,
            scheduler: Scheduler::Backoff,
            match_limit: DEFAULT_MATCH_LIMIT,
            ban_length: DEFAULT_BAN_LENGTH,
        }
    }
}

impl SaturationParams {
    pub fn validate(&self) -> Result<(), SaturateError> {
        let checks = [
            ("iter_limit", self.iter_limit as u64),
            ("node_limit", self.node_limit as u64),
            ("time_limit_ms", self.time_limit_ms),
            ("match_limit", self.match_limit as u64),
            ("ban_length", self.ban_length as u64),
        ];
        match checks.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(SaturateError::InvalidParams(format!(
                "{name} must be at least 1"
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Saturated,
    IterLimit,
    NodeLimit,
    TimeLimit,
    /// The per-iteration hook asked to stop.
    Halted,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Per-rule counters. `matches` counts e-matches found, `applied` the
/// right-hand sides instantiated and unioned, `filtered` the matches
/// dropped by a failed guard or an undefined fold.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RuleStats {
    pub name: String,
    pub matches: usize,
    pub applied: usize,
    pub filtered: usize,
    /// Whether the rule was banned (in iteration stats) or the number of
    /// iterations it spent banned (in totals).
    pub banned: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub rules: Vec<RuleStats>,
    pub enodes: usize,
    pub eclasses: usize,
    pub changed: bool,
    pub time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaturationReport {
    pub version: u32,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub enodes: usize,
    pub eclasses: usize,
    pub time_ms: f64,
    pub rules: Vec<RuleStats>,
    pub per_iteration: Vec<IterationStats>,
}

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SaturateError {
    #[error(transparent)]
    Graph(#[from] EGraphError),
    #[error("invalid saturation parameters: {0}")]
    InvalidParams(String),
}

enum Action {
    Pattern(EMatchSubst),
    Literal(EClassId, Atom),
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Saturates `graph` under `theory`.
pub fn run_saturation<A: Analysis>(
    graph: &mut EGraph<A>,
    theory: &Theory,
    params: &SaturationParams,
) -> Result<SaturationReport, SaturateError> {
    run_saturation_with(graph, theory, params, |_, _| ControlFlow::Continue(()))
}

/// Like [`run_saturation`], calling `hook` at every iteration boundary
/// (with 0 before the first iteration) on a clean graph. Breaking from the
/// hook stops the run with [`StopReason::Halted`].
pub fn run_saturation_with<A, F>(
    graph: &mut EGraph<A>,
    theory: &Theory,
    params: &SaturationParams,
    hook: F,
) -> Result<SaturationReport, SaturateError>
where
    A: Analysis,
    F: FnMut(&EGraph<A>, usize) -> ControlFlow<()>,
{
    params.validate()?;
    graph.ensure_clean()?;
    let saved = graph.node_limit();
    graph.set_node_limit(Some(params.node_limit));
    let result = saturate(graph, &theory.directed_rules(), params, hook);
    graph.set_node_limit(saved);
    result
}

fn saturate<A, F>(
    graph: &mut EGraph<A>,
    rules: &[DirectedRule],
    params: &SaturationParams,
    mut hook: F,
) -> Result<SaturationReport, SaturateError>
where
    A: Analysis,
    F: FnMut(&EGraph<A>, usize) -> ControlFlow<()>,
{
    let start = Instant::now();
    graph.rebuild()?;

    let blank_stats = || -> Vec<RuleStats> {
        rules
            .iter()
            .map(|r| RuleStats {
                name: r.name.clone(),
                ..Default::default()
            })
            .collect()
    };
    let mut totals = blank_stats();
    let mut per_iteration = Vec::new();
    let mut banned_until = vec![0usize; rules.len()];
    let backoff = params.scheduler == Scheduler::Backoff;
    let mut verifying = false;

    let stop_reason = 'run: {
        if hook(graph, 0).is_break() {
            break 'run StopReason::Halted;
        }
        loop {
            let iteration = per_iteration.len() + 1;
            let iter_start = Instant::now();
            let version_before = graph.version();
            let mut stats = blank_stats();
            let mut throttled = false;

            // Read phase: everything is computed against the same snapshot.
            let mut actions: Vec<(usize, Action)> = Vec::new();
            for (ri, rule) in rules.iter().enumerate() {
                if backoff && !verifying && banned_until[ri] >= iteration {
                    stats[ri].banned = 1;
                    throttled = true;
                    continue;
                }
                let matches = ematch_all(graph, &rule.lhs)?;
                stats[ri].matches = matches.len();
                if backoff && !verifying && matches.len() > params.match_limit {
                    banned_until[ri] = iteration + params.ban_length;
                    stats[ri].banned = 1;
                    throttled = true;
                    continue;
                }
                for m in matches {
                    let mut pass = true;
                    for g in &rule.guards {
                        if !check_guard_eclass(g, &m, graph)
                            .expect("rule guards are validated against the lhs")
                        {
                            pass = false;
                            break;
                        }
                    }
                    if !pass {
                        stats[ri].filtered += 1;
                        continue;
                    }
                    match &rule.rhs {
                        Rhs::Pattern(_) => actions.push((ri, Action::Pattern(m))),
                        Rhs::Fold(d) => {
                            let args: Option<Vec<Atom>> = d
                                .args
                                .iter()
                                .map(|v| m.get(v).and_then(|id| class_literal(graph, id)))
                                .collect();
                            match args.and_then(|a| d.op.eval(&a)) {
                                Some(atom) => actions.push((ri, Action::Literal(m.root, atom))),
                                None => stats[ri].filtered += 1,
                            }
                        }
                    }
                }
            }

            // Write phase.
            let mut out_of_nodes = false;
            for (ri, action) in actions {
                let (root, added) = match (&action, &rules[ri].rhs) {
                    (Action::Pattern(m), Rhs::Pattern(rhs)) => (
                        m.root,
                        graph
                            .add_instance(rhs, &|v| m.get(v))
                            .map(|id| id.expect("rhs vars bound by lhs")),
                    ),
                    (Action::Literal(root, atom), _) => {
                        (*root, graph.add(ENode::leaf(atom.clone())))
                    }
                    _ => unreachable!("action kind follows the rule's rhs"),
                };
                match added {
                    Ok(id) => {
                        graph.union(root, id)?;
                        stats[ri].applied += 1;
                    }
                    Err(EGraphError::Capacity { .. }) => {
                        out_of_nodes = true;
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            graph.rebuild()?;

            let changed = graph.version() != version_before;
            for (total, s) in totals.iter_mut().zip(&stats) {
                total.matches += s.matches;
                total.applied += s.applied;
                total.filtered += s.filtered;
                total.banned += s.banned;
            }
            per_iteration.push(IterationStats {
                iteration,
                rules: stats,
                enodes: graph.node_count(),
                eclasses: graph.class_count(),
                changed,
                time_ms: millis(iter_start),
            });

            if hook(graph, iteration).is_break() {
                break 'run StopReason::Halted;
            }
            if out_of_nodes {
                break 'run StopReason::NodeLimit;
            }
            if changed {
                verifying = false;
            } else if throttled {
                // Banned rules might still have work; rerun with everything on.
                verifying = true;
                banned_until.fill(0);
            } else {
                break 'run StopReason::Saturated;
            }
            if graph.node_count() > params.node_limit {
                break 'run StopReason::NodeLimit;
            }
            if iteration >= params.iter_limit {
                break 'run StopReason::IterLimit;
            }
            if start.elapsed().as_millis() >= u128::from(params.time_limit_ms) {
                break 'run StopReason::TimeLimit;
            }
        }
    };

    // Give the analysis a last look at every class.
    for id in graph.class_ids() {
        graph.apply_modify(id)?;
    }
    graph.rebuild()?;

    Ok(SaturationReport {
        version: REPORT_VERSION,
        stop_reason,
        iterations: per_iteration.len(),
        enodes: graph.node_count(),
        eclasses: graph.class_count(),
        time_ms: millis(start),
        rules: totals,
        per_iteration,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProofOutcome {
    /// The terms landed in one class; the report's stop reason is `Halted`
    /// unless they were equal before any rewriting.
    Equal(SaturationReport),
    /// No equality found before the run stopped. A `Saturated` run only
    /// shows the terms are not equal under this theory.
    Unknown(SaturationReport),
}

impl ProofOutcome {
    pub fn is_equal(&self) -> bool {
        matches!(self, ProofOutcome::Equal(_))
    }

    pub fn report(&self) -> &SaturationReport {
        match self {
            ProofOutcome::Equal(r) | ProofOutcome::Unknown(r) => r,
        }
    }
}

/// Adds both terms and saturates, stopping as soon as they are equal.
pub fn prove_equal<A: Analysis>(
    graph: &mut EGraph<A>,
    theory: &Theory,
    params: &SaturationParams,
    lhs: &Term,
    rhs: &Term,
) -> Result<ProofOutcome, SaturateError> {
    params.validate()?;
    let a = graph.add_term(lhs)?;
    let b = graph.add_term(rhs)?;
    graph.rebuild()?;
    let report = run_saturation_with(graph, theory, params, |g, _| {
        if g.find(a) == g.find(b) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    if graph.find(a) == graph.find(b) {
        Ok(ProofOutcome::Equal(report))
    } else {
        Ok(ProofOutcome::Unknown(report))
    }
}
