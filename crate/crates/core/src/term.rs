//! Concrete expression trees and their s-expression syntax.
//!
//! A [`Term`] is either a leaf [`Atom`] or an operator applied to one or
//! more arguments. The textual form is a plain s-expression:
//!
//! ```text
//! a            ; symbol
//! 42  -7       ; 64-bit integers
//! true false   ; booleans
//! 1.5  2e10    ; floats (must contain `.` or an exponent)
//! (/ (* a 2) 2)
//! ```
//!
//! `#` starts a comment that runs to the end of the line.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

/// An interned-by-value symbol name.
///
/// Names are nonempty, contain no whitespace, parentheses or `#`, and do not
/// start with `?` or a digit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    /// Builds a symbol, returning `None` if `name` is not a legal symbol name.
    pub fn new(name: &str) -> Option<Symbol> {
        if is_symbol_name(name) {
            Some(Symbol(Arc::from(name)))
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn is_symbol_name(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    if first == '?' || first.is_ascii_digit() {
        return false;
    }
    if name == "true" || name == "false" {
        return false;
    }
    // `-5` style tokens are numbers, never symbols.
    if first == '-' && name[1..].starts_with(|c: char| c.is_ascii_digit()) {
        return false;
    }
    !name
        .chars()
        .any(|c| c.is_whitespace() || c == '(' || c == ')' || c == '#')
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A leaf value.
///
/// Floats compare and hash by their bit pattern, so `-0.0 != 0.0` and a
/// `NaN` equals itself.
#[derive(Clone, Debug)]
pub enum Atom {
    Symbol(Symbol),
    Int(i64),
    Bool(bool),
    Float(f64),
}

impl Atom {
    /// Shorthand for a symbol atom. Panics on an illegal name.
    pub fn sym(name: &str) -> Atom {
        Atom::Symbol(Symbol::new(name).unwrap_or_else(|| panic!("illegal symbol name {name:?}")))
    }

    pub fn is_literal(&self) -> bool {
        !matches!(self, Atom::Symbol(_))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Atom::Int(i) => Some(*i),
            _ => None,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            Atom::Symbol(_) => 0,
            Atom::Int(_) => 1,
            Atom::Bool(_) => 2,
            Atom::Float(_) => 3,
        }
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Atom::Symbol(a), Atom::Symbol(b)) => a == b,
            (Atom::Int(a), Atom::Int(b)) => a == b,
            (Atom::Bool(a), Atom::Bool(b)) => a == b,
            (Atom::Float(a), Atom::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for Atom {}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.tag().hash(state);
        match self {
            Atom::Symbol(s) => s.hash(state),
            Atom::Int(i) => i.hash(state),
            Atom::Bool(b) => b.hash(state),
            Atom::Float(x) => x.to_bits().hash(state),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Symbol(s) => write!(f, "{s}"),
            Atom::Int(i) => write!(f, "{i}"),
            Atom::Bool(b) => write!(f, "{b}"),
            // Debug formatting always keeps a `.` or an exponent, so the
            // printed form reparses as a float.
            Atom::Float(x) => write!(f, "{x:?}"),
        }
    }
}

impl From<i64> for Atom {
    fn from(value: i64) -> Self {
        Atom::Int(value)
    }
}

impl From<bool> for Atom {
    fn from(value: bool) -> Self {
        Atom::Bool(value)
    }
}

/// A concrete expression tree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Leaf(Atom),
    Apply { op: Symbol, args: Vec<Term> },
}

impl Term {
    pub fn leaf(atom: impl Into<Atom>) -> Term {
        Term::Leaf(atom.into())
    }

    pub fn sym(name: &str) -> Term {
        Term::Leaf(Atom::sym(name))
    }

    /// Builds an application. Panics if `args` is empty or `op` is not a
    /// legal symbol name.
    pub fn apply(op: &str, args: Vec<Term>) -> Term {
        assert!(!args.is_empty(), "applications need at least one argument");
        let op = Symbol::new(op).unwrap_or_else(|| panic!("illegal operator name {op:?}"));
        Term::Apply { op, args }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Term::Leaf(_) => 1,
            Term::Apply { args, .. } => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// Longest root-to-leaf path, counted in nodes.
    pub fn depth(&self) -> usize {
        match self {
            Term::Leaf(_) => 1,
            Term::Apply { args, .. } => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    /// The subterm at `path` (a list of argument indices), if it exists.
    pub fn at(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            match cur {
                Term::Apply { args, .. } => cur = args.get(i)?,
                Term::Leaf(_) => return None,
            }
        }
        Some(cur)
    }

    /// Returns a copy of `self` with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &[usize], replacement: Term) -> Option<Term> {
        match path.split_first() {
            None => Some(replacement),
            Some((&i, rest)) => match self {
                Term::Apply { op, args } => {
                    let child = args.get(i)?.replace_at(rest, replacement)?;
                    let mut args = args.clone();
                    args[i] = child;
                    Some(Term::Apply {
                        op: op.clone(),
                        args,
                    })
                }
                Term::Leaf(_) => None,
            },
        }
    }

    /// Pre-order list of `(path, subterm)` pairs, root first.
    pub fn positions(&self) -> Vec<(Vec<usize>, &Term)> {
        let mut out = Vec::new();
        let mut stack = vec![(Vec::new(), self)];
        while let Some((path, t)) = stack.pop() {
            if let Term::Apply { args, .. } = t {
                for (i, a) in args.iter().enumerate().rev() {
                    let mut p = path.clone();
                    p.push(i);
                    stack.push((p, a));
                }
            }
            out.push((path, t));
        }
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Leaf(a) => write!(f, "{a}"),
            Term::Apply { op, args } => {
                write!(f, "({op}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl std::str::FromStr for Term {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_term(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("unbalanced `)`")]
    UnbalancedClose,
    #[error("unclosed `(`")]
    UnclosedOpen,
    #[error("empty application `()`")]
    EmptyApplication,
    #[error("application with no arguments")]
    NoArguments,
    #[error("operator must be a symbol, found {0:?}")]
    BadOperator(String),
    #[error("trailing input")]
    TrailingInput,
    #[error("malformed literal {0:?}")]
    MalformedLiteral(String),
    #[error("pattern variable {0:?} not allowed here")]
    UnexpectedVariable(String),
}

impl ParseError {
    pub(crate) fn new(offset: usize, kind: ParseErrorKind) -> Self {
        ParseError { offset, kind }
    }
}

/// Raw s-expression with byte offsets, shared by the term and pattern readers.
#[derive(Debug, Clone)]
pub(crate) enum Sexp<'a> {
    Atom { text: &'a str, offset: usize },
    List { items: Vec<Sexp<'a>>, offset: usize },
}

fn is_delimiter(c: u8) -> bool {
    c.is_ascii_whitespace() || c == b'(' || c == b')' || c == b'#'
}

/// Advances past whitespace and `#` comments.
pub(crate) fn skip_trivia(input: &str, mut pos: usize) -> usize {
    let bytes = input.as_bytes();
    while pos < bytes.len() {
        match bytes[pos] {
            b'#' => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => pos += 1,
            _ => break,
        }
    }
    pos
}

/// Reads one s-expression starting at `pos`; returns it and the offset just
/// past its end.
pub(crate) fn read_sexp(input: &str, pos: usize) -> Result<(Sexp<'_>, usize), ParseError> {
    let bytes = input.as_bytes();
    let pos = skip_trivia(input, pos);
    match bytes.get(pos) {
        None => Err(ParseError::new(pos, ParseErrorKind::UnexpectedEof)),
        Some(b')') => Err(ParseError::new(pos, ParseErrorKind::UnbalancedClose)),
        Some(b'(') => {
            let open = pos;
            let mut items = Vec::new();
            let mut cur = pos + 1;
            loop {
                cur = skip_trivia(input, cur);
                match bytes.get(cur) {
                    None => return Err(ParseError::new(open, ParseErrorKind::UnclosedOpen)),
                    Some(b')') => {
                        return Ok((
                            Sexp::List {
                                items,
                                offset: open,
                            },
                            cur + 1,
                        ));
                    }
                    Some(_) => {
                        let (item, next) = read_sexp(input, cur)?;
                        items.push(item);
                        cur = next;
                    }
                }
            }
        }
        Some(_) => {
            let mut end = pos;
            while end < bytes.len() && !is_delimiter(bytes[end]) {
                end += 1;
            }
            Ok((
                Sexp::Atom {
                    text: &input[pos..end],
                    offset: pos,
                },
                end,
            ))
        }
    }
}

/// Reads exactly one s-expression spanning the whole input.
pub(crate) fn read_single(input: &str) -> Result<Sexp<'_>, ParseError> {
    let (sexp, end) = read_sexp(input, 0)?;
    let rest = skip_trivia(input, end);
    if rest < input.len() {
        let kind = if input.as_bytes()[rest] == b')' {
            ParseErrorKind::UnbalancedClose
        } else {
            ParseErrorKind::TrailingInput
        };
        return Err(ParseError::new(rest, kind));
    }
    Ok(sexp)
}

/// An atom-position token: either a concrete atom or a `?var`.
pub(crate) enum Token {
    Atom(Atom),
    Var(String),
}

pub(crate) fn classify_token(text: &str, offset: usize) -> Result<Token, ParseError> {
    let malformed = || ParseError::new(offset, ParseErrorKind::MalformedLiteral(text.to_owned()));
    if let Some(name) = text.strip_prefix('?') {
        if name.is_empty() || name.starts_with('?') {
            return Err(malformed());
        }
        return Ok(Token::Var(name.to_owned()));
    }
    match text {
        "true" => return Ok(Token::Atom(Atom::Bool(true))),
        "false" => return Ok(Token::Atom(Atom::Bool(false))),
        _ => {}
    }
    let digits = text.strip_prefix('-').unwrap_or(text);
    if digits.starts_with(|c: char| c.is_ascii_digit()) {
        if digits.bytes().all(|b| b.is_ascii_digit()) {
            return text
                .parse::<i64>()
                .map(|i| Token::Atom(Atom::Int(i)))
                .map_err(|_| malformed());
        }
        if text.contains(['.', 'e', 'E']) {
            return match text.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Token::Atom(Atom::Float(x))),
                _ => Err(malformed()),
            };
        }
        return Err(malformed());
    }
    Symbol::new(text)
        .map(|s| Token::Atom(Atom::Symbol(s)))
        .ok_or_else(malformed)
}

fn term_from_sexp(sexp: &Sexp<'_>) -> Result<Term, ParseError> {
    match sexp {
        Sexp::Atom { text, offset } => match classify_token(text, *offset)? {
            Token::Atom(a) => Ok(Term::Leaf(a)),
            Token::Var(_) => Err(ParseError::new(
                *offset,
                ParseErrorKind::UnexpectedVariable((*text).to_owned()),
            )),
        },
        Sexp::List { items, offset } => {
            let (op, op_offset) = list_head(items, *offset)?;
            let args = items[1..]
                .iter()
                .map(term_from_sexp)
                .collect::<Result<_, _>>()?;
            match classify_token(op, op_offset)? {
                Token::Atom(Atom::Symbol(op)) => Ok(Term::Apply { op, args }),
                _ => Err(ParseError::new(
                    op_offset,
                    ParseErrorKind::BadOperator(op.to_owned()),
                )),
            }
        }
    }
}

/// Validates the shape of an application list and returns its head token.
pub(crate) fn list_head<'a>(
    items: &[Sexp<'a>],
    offset: usize,
) -> Result<(&'a str, usize), ParseError> {
    match items.first() {
        None => Err(ParseError::new(offset, ParseErrorKind::EmptyApplication)),
        Some(Sexp::List { offset: o, .. }) => Err(ParseError::new(
            *o,
            ParseErrorKind::BadOperator("(...)".into()),
        )),
        Some(Sexp::Atom { text, offset: o }) => {
            if items.len() < 2 {
                return Err(ParseError::new(offset, ParseErrorKind::NoArguments));
            }
            Ok((text, *o))
        }
    }
}

/// Parses a single term from `input`.
pub fn parse_term(input: &str) -> Result<Term, ParseError> {
    term_from_sexp(&read_single(input)?)
}

/// Canonical printed form: single spaces, no extra whitespace.
pub fn print_term(t: &Term) -> String {
    t.to_string()
}

pub fn term_size(t: &Term) -> usize {
    t.size()
}

pub fn term_depth(t: &Term) -> usize {
    t.depth()
}
