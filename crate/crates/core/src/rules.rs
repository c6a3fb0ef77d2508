//! Rewrite rules, theories and the theory file format.
//!
//! ```text
//! theory arith
//! rule div-canon: (/ (* ?x ?y) ?z) => (* ?x (/ ?y ?z))
//! rule div-same:  (/ ?x ?x) => 1 if nonzero(?x)
//! rule comm:      (+ ?a ?b) == (+ ?b ?a)
//! rule fold-div:  (/ ?a ?b) => fold(/, ?a, ?b) if is_int(?a) && is_int(?b)
//! ```
//!
//! `=>` is a directed rule, `==` a bidirectional one (executed as the two
//! directed rules left-to-right then right-to-left). A `fold(...)` right-hand
//! side computes a literal from the bound literals at rewrite time.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::analysis::Analysis;
use crate::egraph::{EClassId, EGraph};
use crate::ematch::EMatchSubst;
use crate::pattern::{
    is_nonzero_literal, is_zero_literal, pattern_from_sexp, Guard, Pattern, PatternError,
    Predicate, Var,
};
use crate::term::{read_sexp, skip_trivia, Atom, ParseError, Term};

/// The closed vocabulary of foldable operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FoldOp {
    Add,
    Sub,
    Mul,
    Div,
    Shl,
    Shr,
    Neg,
    And,
    Or,
    Not,
    Lt,
    Le,
    Eq,
}

impl FoldOp {
    pub const ALL: [FoldOp; 13] = [
        FoldOp::Add,
        FoldOp::Sub,
        FoldOp::Mul,
        FoldOp::Div,
        FoldOp::Shl,
        FoldOp::Shr,
        FoldOp::Neg,
        FoldOp::And,
        FoldOp::Or,
        FoldOp::Not,
        FoldOp::Lt,
        FoldOp::Le,
        FoldOp::Eq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FoldOp::Add => "+",
            FoldOp::Sub => "-",
            FoldOp::Mul => "*",
            FoldOp::Div => "/",
            FoldOp::Shl => "<<",
            FoldOp::Shr => ">>",
            FoldOp::Neg => "neg",
            FoldOp::And => "and",
            FoldOp::Or => "or",
            FoldOp::Not => "not",
            FoldOp::Lt => "<",
            FoldOp::Le => "<=",
            FoldOp::Eq => "==",
        }
    }

    pub fn from_name(name: &str) -> Option<FoldOp> {
        FoldOp::ALL.into_iter().find(|op| op.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            FoldOp::Neg | FoldOp::Not => 1,
            _ => 2,
        }
    }

    /// Exact evaluation. `None` whenever the result is undefined or not
    /// representable: overflow, inexact or zero division, shift outside
    /// `0..=63`, or operands of the wrong kind.
    pub fn eval(self, args: &[Atom]) -> Option<Atom> {
        use Atom::{Bool, Int};
        if args.len() != self.arity() {
            return None;
        }
        Some(match (self, args) {
            (FoldOp::Add, [Int(a), Int(b)]) => Int(a.checked_add(*b)?),
            (FoldOp::Sub, [Int(a), Int(b)]) => Int(a.checked_sub(*b)?),
            (FoldOp::Mul, [Int(a), Int(b)]) => Int(a.checked_mul(*b)?),
            (FoldOp::Div, [Int(a), Int(b)]) => {
                if *b == 0 || a.checked_rem(*b)? != 0 {
                    return None;
                }
                Int(a.checked_div(*b)?)
            }
            (FoldOp::Shl, [Int(a), Int(s)]) => {
                if !(0..=63).contains(s) {
                    return None;
                }
                Int(i64::try_from(i128::from(*a) << s).ok()?)
            }
            (FoldOp::Shr, [Int(a), Int(s)]) => {
                if !(0..=63).contains(s) {
                    return None;
                }
                Int(a >> s)
            }
            (FoldOp::Neg, [Int(a)]) => Int(a.checked_neg()?),
            (FoldOp::And, [Bool(a), Bool(b)]) => Bool(*a && *b),
            (FoldOp::Or, [Bool(a), Bool(b)]) => Bool(*a || *b),
            (FoldOp::Not, [Bool(a)]) => Bool(!a),
            (FoldOp::Lt, [Int(a), Int(b)]) => Bool(a < b),
            (FoldOp::Le, [Int(a), Int(b)]) => Bool(a <= b),
            (FoldOp::Eq, [Int(a), Int(b)]) => Bool(a == b),
            (FoldOp::Eq, [Bool(a), Bool(b)]) => Bool(a == b),
            _ => return None,
        })
    }
}

/// A computed right-hand side, `fold(op, ?a[, ?b])`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DynamicRhs {
    pub op: FoldOp,
    pub args: Vec<Var>,
}

impl fmt::Display for DynamicRhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fold({}", self.op.name())?;
        for a in &self.args {
            write!(f, ", {a}")?;
        }
        write!(f, ")")
    }
}

/// Folds `d` over literal bindings. `None` means "do not rewrite".
pub fn eval_dynamic(d: &DynamicRhs, bindings: &BTreeMap<Var, Atom>) -> Option<Term> {
    let args = d
        .args
        .iter()
        .map(|v| bindings.get(v).cloned())
        .collect::<Option<Vec<_>>>()?;
    d.op.eval(&args).map(Term::Leaf)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Directed,
    Bidirectional,
    Dynamic,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rhs {
    Pattern(Pattern),
    Fold(DynamicRhs),
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Pattern(p) => write!(f, "{p}"),
            Rhs::Fold(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub name: String,
    pub kind: RuleKind,
    pub lhs: Pattern,
    pub rhs: Rhs,
    pub guards: Vec<Guard>,
}

/// A single executable direction of a [`Rule`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedRule {
    pub name: String,
    pub lhs: Pattern,
    pub rhs: Rhs,
    pub guards: Vec<Guard>,
}

fn is_rule_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl Rule {
    /// Builds and validates a rule.
    pub fn new(
        name: &str,
        kind: RuleKind,
        lhs: Pattern,
        rhs: Rhs,
        guards: Vec<Guard>,
    ) -> Result<Rule, RuleError> {
        let rule = Rule {
            name: name.to_owned(),
            kind,
            lhs,
            rhs,
            guards,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        if !is_rule_name(&self.name) {
            return Err(RuleError::BadName(self.name.clone()));
        }
        let lhs_vars = self.lhs.var_set();
        let unbound = |v: &Var| RuleError::UnboundVar {
            rule: self.name.clone(),
            var: v.clone(),
        };
        match (&self.kind, &self.rhs) {
            (RuleKind::Directed, Rhs::Pattern(rhs)) => {
                if let Some(v) = rhs.vars().iter().find(|v| !lhs_vars.contains(v)) {
                    return Err(unbound(v));
                }
            }
            (RuleKind::Bidirectional, Rhs::Pattern(rhs)) => {
                let rhs_vars = rhs.var_set();
                if let Some(v) = rhs_vars.symmetric_difference(&lhs_vars).next() {
                    return Err(unbound(v));
                }
            }
            (RuleKind::Dynamic, Rhs::Fold(d)) => {
                if d.args.len() != d.op.arity() {
                    return Err(RuleError::FoldArity {
                        op: d.op.name(),
                        found: d.args.len(),
                    });
                }
                if let Some(v) = d.args.iter().find(|v| !lhs_vars.contains(v)) {
                    return Err(unbound(v));
                }
            }
            _ => return Err(RuleError::KindMismatch(self.name.clone())),
        }
        for g in &self.guards {
            if g.args.len() != g.pred.arity() {
                return Err(RuleError::GuardArity {
                    pred: g.pred.name(),
                    found: g.args.len(),
                });
            }
            if let Some(v) = g.args.iter().find(|v| !lhs_vars.contains(v)) {
                return Err(unbound(v));
            }
        }
        Ok(())
    }

    /// The executable directions, forward first.
    pub fn directions(&self) -> Vec<DirectedRule> {
        let forward = DirectedRule {
            name: self.name.clone(),
            lhs: self.lhs.clone(),
            rhs: self.rhs.clone(),
            guards: self.guards.clone(),
        };
        match (&self.kind, &self.rhs) {
            (RuleKind::Bidirectional, Rhs::Pattern(rhs)) => vec![
                forward,
                DirectedRule {
                    name: format!("{}<-", self.name),
                    lhs: rhs.clone(),
                    rhs: Rhs::Pattern(self.lhs.clone()),
                    guards: self.guards.clone(),
                },
            ],
            _ => vec![forward],
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.kind {
            RuleKind::Bidirectional => "==",
            _ => "=>",
        };
        write!(f, "rule {}: {} {arrow} {}", self.name, self.lhs, self.rhs)?;
        for (i, g) in self.guards.iter().enumerate() {
            write!(f, "{}{g}", if i == 0 { " if " } else { " && " })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Theory {
    pub name: String,
    pub rules: Vec<Rule>,
}

impl Theory {
    pub fn new(name: &str) -> Theory {
        Theory {
            name: name.to_owned(),
            rules: Vec::new(),
        }
    }

    /// Appends a rule, rejecting duplicate names.
    pub fn push(&mut self, rule: Rule) -> Result<(), RuleError> {
        if self.rules.iter().any(|r| r.name == rule.name) {
            return Err(RuleError::Duplicate(rule.name));
        }
        rule.validate()?;
        self.rules.push(rule);
        Ok(())
    }

    /// All executable directed rules in theory order.
    pub fn directed_rules(&self) -> Vec<DirectedRule> {
        self.rules.iter().flat_map(Rule::directions).collect()
    }

    pub fn parse(input: &str) -> Result<Theory, TheoryError> {
        parse_theory(input)
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "theory {}", self.name)?;
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("illegal rule name {0:?}")]
    BadName(String),
    #[error("duplicate rule name {0:?}")]
    Duplicate(String),
    #[error("rule {rule}: variable {var} is not bound on both sides")]
    UnboundVar { rule: String, var: Var },
    #[error("fold({op}, ...) takes a different number of arguments than {found}")]
    FoldArity { op: &'static str, found: usize },
    #[error("guard {pred} takes a different number of arguments than {found}")]
    GuardArity { pred: &'static str, found: usize },
    #[error("rule {0}: fold right-hand sides require `=>`")]
    KindMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("theory line {line}: {kind}")]
pub struct TheoryError {
    pub line: usize,
    pub kind: TheoryErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryErrorKind {
    #[error("{0}")]
    Syntax(#[from] ParseError),
    #[error("{0}")]
    Rule(#[from] RuleError),
    #[error("expected `theory <name>` before any rule")]
    MissingHeader,
    #[error("duplicate `theory` header")]
    DuplicateHeader,
    #[error("unknown guard predicate {0:?}")]
    UnknownGuard(String),
    #[error("unknown fold operator {0:?}")]
    UnknownFold(String),
    #[error("{0}")]
    Malformed(String),
}

fn malformed(msg: impl Into<String>) -> TheoryErrorKind {
    TheoryErrorKind::Malformed(msg.into())
}

/// Parses the line-oriented theory format.
pub fn parse_theory(input: &str) -> Result<Theory, TheoryError> {
    let mut theory: Option<Theory> = None;
    for (idx, raw) in input.lines().enumerate() {
        let line = idx + 1;
        let err = |kind: TheoryErrorKind| TheoryError { line, kind };
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let (keyword, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        match keyword {
            "theory" => {
                if theory.is_some() {
                    return Err(err(TheoryErrorKind::DuplicateHeader));
                }
                let name = rest.trim();
                if !is_rule_name(name) {
                    return Err(err(malformed(format!("illegal theory name {name:?}"))));
                }
                theory = Some(Theory::new(name));
            }
            "rule" => {
                let th = theory
                    .as_mut()
                    .ok_or_else(|| err(TheoryErrorKind::MissingHeader))?;
                let rule = parse_rule_body(rest).map_err(err)?;
                th.push(rule).map_err(|e| err(e.into()))?;
            }
            other => return Err(err(malformed(format!("unexpected `{other}`")))),
        }
    }
    theory.ok_or(TheoryError {
        line: input.lines().count().max(1),
        kind: TheoryErrorKind::MissingHeader,
    })
}

fn parse_rule_body(text: &str) -> Result<Rule, TheoryErrorKind> {
    let (name, body) = text
        .split_once(':')
        .ok_or_else(|| malformed("expected `<name>:`"))?;
    let name = name.trim();

    let (lhs, end) = read_sexp(body, 0)?;
    let lhs = pattern_from_sexp(&lhs)?;
    let rest = &body[skip_trivia(body, end)..];
    let (bidirectional, rest) = if let Some(r) = rest.strip_prefix("=>") {
        (false, r)
    } else if let Some(r) = rest.strip_prefix("==") {
        (true, r)
    } else {
        return Err(malformed("expected `=>` or `==` after the left-hand side"));
    };

    let rest = rest.trim_start();
    let (rhs, rest) = if let Some(args) = rest.strip_prefix("fold(") {
        let close = args
            .find(')')
            .ok_or_else(|| malformed("unclosed `fold(`"))?;
        (Rhs::Fold(parse_fold(&args[..close])?), &args[close + 1..])
    } else {
        let (rhs, end) = read_sexp(rest, 0)?;
        (Rhs::Pattern(pattern_from_sexp(&rhs)?), &rest[end..])
    };

    let rest = rest.trim();
    let guards = if rest.is_empty() {
        Vec::new()
    } else if let Some(g) = rest
        .strip_prefix("if")
        .filter(|g| g.starts_with(char::is_whitespace))
    {
        g.split("&&").map(parse_guard).collect::<Result<_, _>>()?
    } else {
        return Err(malformed(format!("unexpected trailing text {rest:?}")));
    };

    let kind = match (&rhs, bidirectional) {
        (Rhs::Fold(_), false) => RuleKind::Dynamic,
        (Rhs::Fold(_), true) => return Err(RuleError::KindMismatch(name.to_owned()).into()),
        (Rhs::Pattern(_), false) => RuleKind::Directed,
        (Rhs::Pattern(_), true) => RuleKind::Bidirectional,
    };
    Ok(Rule::new(name, kind, lhs, rhs, guards)?)
}

fn parse_var(text: &str) -> Result<Var, TheoryErrorKind> {
    let text = text.trim();
    match text.strip_prefix('?') {
        Some(name)
            if !name.is_empty()
                && !name.contains(|c: char| c.is_whitespace() || "()?,".contains(c)) =>
        {
            Ok(Var::new(name))
        }
        _ => Err(malformed(format!(
            "expected a pattern variable, found {text:?}"
        ))),
    }
}

fn parse_fold(inner: &str) -> Result<DynamicRhs, TheoryErrorKind> {
    let mut parts = inner.split(',');
    let op_name = parts.next().unwrap_or("").trim();
    let op = FoldOp::from_name(op_name)
        .ok_or_else(|| TheoryErrorKind::UnknownFold(op_name.to_owned()))?;
    let args = parts.map(parse_var).collect::<Result<Vec<_>, _>>()?;
    if args.len() != op.arity() {
        return Err(RuleError::FoldArity {
            op: op.name(),
            found: args.len(),
        }
        .into());
    }
    Ok(DynamicRhs { op, args })
}

fn parse_guard(text: &str) -> Result<Guard, TheoryErrorKind> {
    let text = text.trim();
    let (name, args) = text
        .strip_suffix(')')
        .and_then(|t| t.split_once('('))
        .ok_or_else(|| malformed(format!("malformed guard {text:?}")))?;
    let name = name.trim();
    let pred =
        Predicate::from_name(name).ok_or_else(|| TheoryErrorKind::UnknownGuard(name.to_owned()))?;
    let args = args
        .split(',')
        .map(parse_var)
        .collect::<Result<Vec<_>, _>>()?;
    if args.len() != pred.arity() {
        return Err(RuleError::GuardArity {
            pred: pred.name(),
            found: args.len(),
        }
        .into());
    }
    Ok(Guard { pred, args })
}

/// The literal a class is pinned to: the analysis constant if the analysis
/// provides one, otherwise a literal leaf stored in the class.
pub fn class_literal<A: Analysis>(graph: &EGraph<A>, id: EClassId) -> Option<Atom> {
    let class = &graph[id];
    if let Some(a) = A::constant(&class.data) {
        return Some(a.clone());
    }
    class
        .nodes()
        .find(|n| n.is_leaf() && n.op.is_literal())
        .map(|n| n.op.clone())
}

/// Evaluates a guard on an e-match. Knowledge comes from the class, so a
/// class without a known literal fails every literal test.
pub fn check_guard_eclass<A: Analysis>(
    guard: &Guard,
    subst: &EMatchSubst,
    graph: &EGraph<A>,
) -> Result<bool, PatternError> {
    let arg = |i: usize| -> Result<EClassId, PatternError> {
        let v = &guard.args[i];
        subst.get(v).ok_or_else(|| PatternError::Unbound(v.clone()))
    };
    let first = arg(0)?;
    if guard.pred == Predicate::Eq {
        return Ok(graph.find(first) == graph.find(arg(1)?));
    }
    if guard.pred == Predicate::IsSym {
        return Ok(graph[first]
            .nodes()
            .any(|n| n.is_leaf() && !n.op.is_literal()));
    }
    let lit = class_literal(graph, first);
    Ok(match guard.pred {
        Predicate::IsInt => matches!(lit, Some(Atom::Int(_))),
        Predicate::IsBool => matches!(lit, Some(Atom::Bool(_))),
        Predicate::IsLit => lit.is_some(),
        Predicate::Nonzero => is_nonzero_literal(lit.as_ref()),
        Predicate::IsZero => is_zero_literal(lit.as_ref()),
        Predicate::IsSym | Predicate::Eq => unreachable!(),
    })
}
