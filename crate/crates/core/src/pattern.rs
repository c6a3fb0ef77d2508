//! Rule templates: patterns with `?variables`, guards, and matching against
//! concrete terms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::term::{
    classify_token, list_head, read_single, Atom, ParseError, ParseErrorKind, Sexp, Symbol, Term,
    Token,
};

/// A pattern variable, written `?name` in source. Stored without the `?`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(String);

impl Var {
    pub fn new(name: &str) -> Var {
        let name = name.strip_prefix('?').unwrap_or(name);
        assert!(!name.is_empty(), "empty pattern variable name");
        Var(name.to_owned())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    Var(Var),
    Lit(Atom),
    Apply { op: Symbol, args: Vec<Pattern> },
}

impl Pattern {
    /// Distinct variables in first-occurrence (pre-order) order.
    pub fn vars(&self) -> Vec<Var> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.collect_vars(&mut seen, &mut out);
        out
    }

    fn collect_vars(&self, seen: &mut BTreeSet<Var>, out: &mut Vec<Var>) {
        match self {
            Pattern::Var(v) => {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
            Pattern::Lit(_) => {}
            Pattern::Apply { args, .. } => args.iter().for_each(|a| a.collect_vars(seen, out)),
        }
    }

    pub fn var_set(&self) -> BTreeSet<Var> {
        self.vars().into_iter().collect()
    }

    pub fn depth(&self) -> usize {
        match self {
            Pattern::Var(_) | Pattern::Lit(_) => 1,
            Pattern::Apply { args, .. } => 1 + args.iter().map(Pattern::depth).max().unwrap_or(0),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(v) => write!(f, "{v}"),
            Pattern::Lit(a) => write!(f, "{a}"),
            Pattern::Apply { op, args } => {
                write!(f, "({op}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl std::str::FromStr for Pattern {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_pattern(s)
    }
}

impl From<&Term> for Pattern {
    fn from(t: &Term) -> Self {
        match t {
            Term::Leaf(a) => Pattern::Lit(a.clone()),
            Term::Apply { op, args } => Pattern::Apply {
                op: op.clone(),
                args: args.iter().map(Pattern::from).collect(),
            },
        }
    }
}

pub(crate) fn pattern_from_sexp(sexp: &Sexp<'_>) -> Result<Pattern, ParseError> {
    match sexp {
        Sexp::Atom { text, offset } => Ok(match classify_token(text, *offset)? {
            Token::Atom(a) => Pattern::Lit(a),
            Token::Var(v) => Pattern::Var(Var(v)),
        }),
        Sexp::List { items, offset } => {
            let (op, op_offset) = list_head(items, *offset)?;
            let args = items[1..]
                .iter()
                .map(pattern_from_sexp)
                .collect::<Result<_, _>>()?;
            match classify_token(op, op_offset)? {
                Token::Atom(Atom::Symbol(op)) => Ok(Pattern::Apply { op, args }),
                _ => Err(ParseError::new(
                    op_offset,
                    ParseErrorKind::BadOperator(op.to_owned()),
                )),
            }
        }
    }
}

pub fn parse_pattern(input: &str) -> Result<Pattern, ParseError> {
    pattern_from_sexp(&read_single(input)?)
}

/// The closed guard vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Predicate {
    IsInt,
    IsBool,
    IsSym,
    IsLit,
    Nonzero,
    IsZero,
    Eq,
}

impl Predicate {
    pub const ALL: [Predicate; 7] = [
        Predicate::IsInt,
        Predicate::IsBool,
        Predicate::IsSym,
        Predicate::IsLit,
        Predicate::Nonzero,
        Predicate::IsZero,
        Predicate::Eq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::IsInt => "is_int",
            Predicate::IsBool => "is_bool",
            Predicate::IsSym => "is_sym",
            Predicate::IsLit => "is_lit",
            Predicate::Nonzero => "nonzero",
            Predicate::IsZero => "is_zero",
            Predicate::Eq => "eq",
        }
    }

    pub fn from_name(name: &str) -> Option<Predicate> {
        Predicate::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Predicate::Eq => 2,
            _ => 1,
        }
    }
}

/// A predicate applied to pattern variables, e.g. `nonzero(?x)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Guard {
    pub pred: Predicate,
    pub args: Vec<Var>,
}

impl Guard {
    /// Panics if the argument count does not match the predicate.
    pub fn new(pred: Predicate, args: Vec<Var>) -> Guard {
        assert_eq!(args.len(), pred.arity(), "wrong arity for {}", pred.name());
        Guard { pred, args }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred.name())?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("unbound pattern variable {0}")]
    Unbound(Var),
}

/// Binding of pattern variables to concrete subterms.
pub type TermSubst = BTreeMap<Var, Term>;

/// Matches `pattern` against the whole of `term`.
///
/// Repeated variables must bind structurally equal subterms. Guards are not
/// consulted here.
pub fn match_term(pattern: &Pattern, term: &Term) -> Option<TermSubst> {
    let mut subst = TermSubst::new();
    match_into(pattern, term, &mut subst).then_some(subst)
}

fn match_into(pattern: &Pattern, term: &Term, subst: &mut TermSubst) -> bool {
    match (pattern, term) {
        (Pattern::Var(v), _) => match subst.get(v) {
            Some(bound) => bound == term,
            None => {
                subst.insert(v.clone(), term.clone());
                true
            }
        },
        (Pattern::Lit(a), Term::Leaf(b)) => a == b,
        (
            Pattern::Apply {
                op: po,
                args: pargs,
            },
            Term::Apply { op, args },
        ) => {
            po == op
                && pargs.len() == args.len()
                && pargs.iter().zip(args).all(|(p, t)| match_into(p, t, subst))
        }
        _ => false,
    }
}

/// Builds the term obtained by replacing each variable of `pattern` with its
/// binding.
pub fn instantiate(pattern: &Pattern, subst: &TermSubst) -> Result<Term, PatternError> {
    Ok(match pattern {
        Pattern::Var(v) => subst
            .get(v)
            .cloned()
            .ok_or_else(|| PatternError::Unbound(v.clone()))?,
        Pattern::Lit(a) => Term::Leaf(a.clone()),
        Pattern::Apply { op, args } => Term::Apply {
            op: op.clone(),
            args: args
                .iter()
                .map(|a| instantiate(a, subst))
                .collect::<Result<_, _>>()?,
        },
    })
}

/// Evaluates a guard against concrete bindings.
///
/// Kind tests look at the bound term's leaf; an application is never a
/// literal, so `nonzero` of a symbol or compound term is false.
pub fn check_guard_term(guard: &Guard, subst: &TermSubst) -> Result<bool, PatternError> {
    let arg = |i: usize| -> Result<&Term, PatternError> {
        let v = &guard.args[i];
        subst.get(v).ok_or_else(|| PatternError::Unbound(v.clone()))
    };
    let first = arg(0)?;
    let leaf = match first {
        Term::Leaf(a) => Some(a),
        Term::Apply { .. } => None,
    };
    Ok(match guard.pred {
        Predicate::IsInt => matches!(leaf, Some(Atom::Int(_))),
        Predicate::IsBool => matches!(leaf, Some(Atom::Bool(_))),
        Predicate::IsSym => matches!(leaf, Some(Atom::Symbol(_))),
        Predicate::IsLit => leaf.is_some_and(Atom::is_literal),
        Predicate::Nonzero => is_nonzero_literal(leaf),
        Predicate::IsZero => is_zero_literal(leaf),
        Predicate::Eq => first == arg(1)?,
    })
}

pub(crate) fn is_nonzero_literal(atom: Option<&Atom>) -> bool {
    match atom {
        Some(Atom::Int(i)) => *i != 0,
        Some(Atom::Float(x)) => *x != 0.0,
        _ => false,
    }
}

pub(crate) fn is_zero_literal(atom: Option<&Atom>) -> bool {
    match atom {
        Some(Atom::Int(i)) => *i == 0,
        Some(Atom::Float(x)) => *x == 0.0,
        _ => false,
    }
}
