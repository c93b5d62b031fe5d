//! R-style model formulas: `y ~ a + b + a:b`, with `*` expanding to all
//! main effects and interactions of its operands.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! formula := ident "~" expr
//! expr    := term ("+" term)*
//! term    := factor ((":" | "*") factor)*      left to right
//! factor  := ident | "(" expr ")"
//! ident   := [A-Za-z_][A-Za-z0-9_.]*
//! ```

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// One right-hand-side term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Main(String),
    /// Sorted, distinct variable names; at least two.
    Interaction(Vec<String>),
}

impl Term {
    /// Builds a term from a variable set: a singleton gives a main effect.
    pub fn from_vars<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = vars.into_iter().map(Into::into).collect();
        assert!(!set.is_empty(), "a term needs at least one variable");
        if set.len() == 1 {
            Term::Main(set.into_iter().next().unwrap())
        } else {
            Term::Interaction(set.into_iter().collect())
        }
    }

    pub fn variables(&self) -> Vec<&str> {
        match self {
            Term::Main(v) => vec![v.as_str()],
            Term::Interaction(vs) => vs.iter().map(String::as_str).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Term::Main(_) => 1,
            Term::Interaction(vs) => vs.len(),
        }
    }

    pub fn contains(&self, var: &str) -> bool {
        self.variables().contains(&var)
    }

    /// Canonical sort key: main effects first, then interactions by arity,
    /// then lexicographically by variable list.
    fn key(&self) -> (usize, Vec<&str>) {
        (self.arity(), self.variables())
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.variables().join(":"))
    }
}

/// Canonical parsed formula: response plus a sorted, duplicate-free term list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelFormula {
    response: String,
    terms: Vec<Term>,
}

impl ModelFormula {
    /// Canonicalizes `terms` (sort + dedup) and checks the invariants.
    pub fn new(response: impl Into<String>, terms: impl IntoIterator<Item = Term>) -> Result<Self> {
        let response = response.into();
        let set: BTreeSet<Term> = terms.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptyRhs);
        }
        if set.iter().any(|t| t.contains(&response)) {
            return Err(Error::ResponseOnRhs(response));
        }
        Ok(ModelFormula {
            response,
            terms: set.into_iter().collect(),
        })
    }

    pub fn response(&self) -> &str {
        &self.response
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Distinct variables used on the right-hand side, sorted.
    pub fn variables(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.terms.iter().flat_map(Term::variables).collect();
        set.into_iter().collect()
    }

    /// Deterministic rendering; `parse(f.canonical_string()) == f`.
    pub fn canonical_string(&self) -> String {
        let rhs: Vec<String> = self.terms.iter().map(Term::to_string).collect();
        format!("{} ~ {}", self.response, rhs.join(" + "))
    }

    /// The formula with `terms` removed. `None` when nothing would remain
    /// (intercept-only model).
    pub fn without(&self, drop: &[Term]) -> Option<ModelFormula> {
        let kept: Vec<Term> = self
            .terms
            .iter()
            .filter(|t| !drop.contains(t))
            .cloned()
            .collect();
        if kept.is_empty() {
            None
        } else {
            Some(ModelFormula {
                response: self.response.clone(),
                terms: kept,
            })
        }
    }
}

impl fmt::Display for ModelFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

impl std::str::FromStr for ModelFormula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Ident(&'a str),
    Tilde,
    Plus,
    Colon,
    Star,
    LParen,
    RParen,
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Tilde => "'~'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Colon => "':'".into(),
            Tok::Star => "'*'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok<'_>, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let tok = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'~' => Tok::Tilde,
            b'+' => Tok::Plus,
            b':' => Tok::Colon,
            b'*' => Tok::Star,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b if b.is_ascii_alphabetic() || b == b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.')
                {
                    i += 1;
                }
                out.push((Tok::Ident(&text[start..i]), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: i,
                    message: format!("unexpected character '{ch}'"),
                });
            }
        };
        out.push((tok, i));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

/// A parsed sub-expression: a set of variable sets (monomials).
type Monomials = BTreeSet<BTreeSet<String>>;

struct Parser<'a> {
    toks: Vec<(Tok<'a>, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Tok<'a> {
        self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok<'a> {
        let t = self.peek();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> Error {
        Error::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {}", self.peek().describe()),
        }
    }

    fn expr(&mut self) -> Result<Monomials> {
        let mut acc = self.term()?;
        while self.peek() == Tok::Plus {
            self.bump();
            acc.extend(self.term()?);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Monomials> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Tok::Colon => {
                    self.bump();
                    let rhs = self.factor()?;
                    acc = cross(&acc, &rhs);
                }
                Tok::Star => {
                    self.bump();
                    let rhs = self.factor()?;
                    let prod = cross(&acc, &rhs);
                    acc.extend(rhs);
                    acc.extend(prod);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Monomials> {
        match self.peek() {
            Tok::Ident(name) => {
                self.bump();
                Ok(BTreeSet::from([BTreeSet::from([name.to_owned()])]))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if self.peek() != Tok::RParen {
                    return Err(self.unexpected("')'"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.unexpected("a variable or '('")),
        }
    }
}

fn cross(a: &Monomials, b: &Monomials) -> Monomials {
    let mut out = Monomials::new();
    for x in a {
        for y in b {
            out.insert(x.union(y).cloned().collect());
        }
    }
    out
}

/// Parses and canonicalizes a formula string.
pub fn parse(text: &str) -> Result<ModelFormula> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let response = match p.peek() {
        Tok::Ident(name) => {
            p.bump();
            name.to_owned()
        }
        _ => return Err(p.unexpected("response variable")),
    };
    if p.peek() != Tok::Tilde {
        return Err(p.unexpected("'~'"));
    }
    p.bump();
    if p.peek() == Tok::End {
        return Err(Error::EmptyRhs);
    }
    let monomials = p.expr()?;
    if p.peek() != Tok::End {
        return Err(p.unexpected("'+', ':', '*' or end of input"));
    }
    ModelFormula::new(response, monomials.into_iter().map(Term::from_vars))
}
