//! Terms and triples, the atomic units of the knowledge graph.
//!
//! A [`Term`] is either an identifier (a node or predicate name) or a typed
//! literal. Terms render to and parse from the token syntax shared by every
//! text format in this crate:
//!
//! ```text
//! ElizaBryan          identifier
//! "Eliza Bryan"       string literal
//! 2016^^int           integer literal
//! 4.5^^dec            decimal literal
//! true^^bool          boolean literal
//! ```

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::text::{Lexer, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("malformed term: {0}")]
    Malformed(String),
    #[error("literal {0} cannot appear in {1} position")]
    LiteralPosition(String, &'static str),
}

/// The literal kinds a term can carry, plus `Id` for identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Id,
    Str,
    Int,
    Dec,
    Bool,
}

impl TermKind {
    /// Literal kind names as written in ontology ranges (`str`, `int`, `dec`, `bool`).
    pub fn from_literal_name(name: &str) -> Option<TermKind> {
        match name {
            "str" => Some(TermKind::Str),
            "int" => Some(TermKind::Int),
            "dec" => Some(TermKind::Dec),
            "bool" => Some(TermKind::Bool),
            _ => None,
        }
    }

    pub fn literal_name(self) -> &'static str {
        match self {
            TermKind::Id => "id",
            TermKind::Str => "str",
            TermKind::Int => "int",
            TermKind::Dec => "dec",
            TermKind::Bool => "bool",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Id(Arc<str>),
    Str(Arc<str>),
    Int(i64),
    Dec(OrderedFloat<f64>),
    Bool(bool),
}

impl Term {
    /// Builds an identifier, rejecting empty names and names that would not
    /// survive a round trip through the text formats.
    pub fn id(name: impl AsRef<str>) -> Result<Term, TermError> {
        let name = name.as_ref();
        if !is_valid_identifier(name) {
            return Err(TermError::Malformed(format!("invalid identifier {name:?}")));
        }
        Ok(Term::Id(Arc::from(name)))
    }

    /// Identifier constructor for names known to be valid (fixtures, constants).
    ///
    /// Panics on an invalid identifier.
    pub fn iri(name: &str) -> Term {
        Term::id(name).expect("valid identifier")
    }

    pub fn string(value: impl AsRef<str>) -> Term {
        Term::Str(Arc::from(value.as_ref()))
    }

    pub fn int(value: i64) -> Term {
        Term::Int(value)
    }

    pub fn dec(value: f64) -> Result<Term, TermError> {
        if !value.is_finite() {
            return Err(TermError::Malformed(format!("non-finite decimal {value}")));
        }
        // -0.0 and 0.0 must compare equal as graph nodes
        let value = if value == 0.0 { 0.0 } else { value };
        Ok(Term::Dec(OrderedFloat(value)))
    }

    pub fn boolean(value: bool) -> Term {
        Term::Bool(value)
    }

    pub fn kind(&self) -> TermKind {
        match self {
            Term::Id(_) => TermKind::Id,
            Term::Str(_) => TermKind::Str,
            Term::Int(_) => TermKind::Int,
            Term::Dec(_) => TermKind::Dec,
            Term::Bool(_) => TermKind::Bool,
        }
    }

    pub fn is_id(&self) -> bool {
        matches!(self, Term::Id(_))
    }

    pub fn is_literal(&self) -> bool {
        !self.is_id()
    }

    pub fn as_id(&self) -> Option<&str> {
        match self {
            Term::Id(s) => Some(s),
            _ => None,
        }
    }

    /// Numeric view of integer and decimal literals.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Term::Int(i) => Some(*i as f64),
            Term::Dec(d) => Some(d.0),
            _ => None,
        }
    }

    /// Human-facing rendering without literal type suffixes or quotes.
    pub fn plain(&self) -> String {
        match self {
            Term::Id(s) | Term::Str(s) => s.to_string(),
            Term::Int(i) => i.to_string(),
            Term::Dec(d) => format_decimal(d.0),
            Term::Bool(b) => b.to_string(),
        }
    }

    /// Parses one token of the shared text syntax.
    pub fn from_token(token: &Token) -> Result<Term, TermError> {
        if token.quoted {
            return Ok(Term::string(&token.text));
        }
        parse_bare(&token.text)
    }
}

fn is_valid_identifier(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('?')
        && !name.contains("^^")
        && !name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '"' | '{' | '}' | '#'))
}

fn parse_bare(text: &str) -> Result<Term, TermError> {
    let Some((value, kind)) = text.rsplit_once("^^") else {
        return Term::id(text);
    };
    let bad = || TermError::Malformed(format!("bad {kind} literal {text:?}"));
    match kind {
        "int" => value.parse::<i64>().map(Term::Int).map_err(|_| bad()),
        "dec" => {
            let v = value.parse::<f64>().map_err(|_| bad())?;
            Term::dec(v)
        }
        "bool" => match value {
            "true" => Ok(Term::Bool(true)),
            "false" => Ok(Term::Bool(false)),
            _ => Err(bad()),
        },
        _ => Err(TermError::Malformed(format!("unknown literal kind in {text:?}"))),
    }
}

/// Shortest round-tripping decimal text, always with a fractional part or exponent.
pub(crate) fn format_decimal(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Id(s) => f.write_str(s),
            Term::Str(s) => f.write_str(&escape_string(s)),
            Term::Int(i) => write!(f, "{i}^^int"),
            Term::Dec(d) => write!(f, "{}^^dec", format_decimal(d.0)),
            Term::Bool(b) => write!(f, "{b}^^bool"),
        }
    }
}

impl FromStr for Term {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens = Lexer::tokenize_line(s, 1).map_err(|e| TermError::Malformed(e.to_string()))?;
        match tokens.as_slice() {
            [t] => Term::from_token(t),
            _ => Err(TermError::Malformed(format!("expected a single term in {s:?}"))),
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A `(subject, predicate, object)` statement. Subject and predicate are
/// always identifiers; the constructor enforces it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    subject: Term,
    predicate: Term,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Triple, TermError> {
        if subject.is_literal() {
            return Err(TermError::LiteralPosition(subject.to_string(), "subject"));
        }
        if predicate.is_literal() {
            return Err(TermError::LiteralPosition(predicate.to_string(), "predicate"));
        }
        Ok(Triple { subject, predicate, object })
    }

    /// Convenience for identifier-only triples in fixtures and tests.
    pub fn ids(s: &str, p: &str, o: &str) -> Triple {
        Triple {
            subject: Term::iri(s),
            predicate: Term::iri(p),
            object: Term::iri(o),
        }
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Term {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }

    /// Parses a single `<s> <p> <o>` line (no trailing comment handling beyond `#`).
    pub fn parse_line(line: &str, line_no: usize) -> Result<Option<Triple>, crate::text::ParseError> {
        let tokens = Lexer::tokenize_line(line, line_no)?;
        if tokens.is_empty() {
            return Ok(None);
        }
        if tokens.len() != 3 {
            let col = tokens.get(3).map(|t| t.col).unwrap_or(tokens.last().map(|t| t.col).unwrap_or(1));
            return Err(crate::text::ParseError::new(
                line_no,
                col,
                format!("expected 3 terms, found {}", tokens.len()),
            ));
        }
        let term = |t: &Token| {
            Term::from_token(t).map_err(|e| crate::text::ParseError::new(line_no, t.col, e.to_string()))
        };
        let triple = Triple::new(term(&tokens[0])?, term(&tokens[1])?, term(&tokens[2])?)
            .map_err(|e| crate::text::ParseError::new(line_no, tokens[0].col, e.to_string()))?;
        Ok(Some(triple))
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

impl FromStr for Triple {
    type Err = crate::text::ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Triple::parse_line(s, 1)?
            .ok_or_else(|| crate::text::ParseError::new(1, 1, "empty triple".to_string()))
    }
}

impl Serialize for Triple {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Triple {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_tokens_parse() {
        assert_eq!("2016^^int".parse::<Term>().unwrap(), Term::int(2016));
        assert_eq!("4.5^^dec".parse::<Term>().unwrap(), Term::dec(4.5).unwrap());
        assert_eq!("true^^bool".parse::<Term>().unwrap(), Term::boolean(true));
        assert_eq!("\"a b\"".parse::<Term>().unwrap(), Term::string("a b"));
        assert_eq!("Car".parse::<Term>().unwrap(), Term::iri("Car"));
    }

    #[test]
    fn bad_literals_rejected() {
        assert!("x^^int".parse::<Term>().is_err());
        assert!("1^^float".parse::<Term>().is_err());
        assert!("yes^^bool".parse::<Term>().is_err());
        assert!("NaN^^dec".parse::<Term>().is_err());
        assert!(Term::id("").is_err());
        assert!(Term::id("a b").is_err());
    }

    #[test]
    fn literal_subject_is_malformed() {
        let err = Triple::new(Term::int(1), Term::iri("p"), Term::iri("o")).unwrap_err();
        assert!(matches!(err, TermError::LiteralPosition(_, "subject")));
        let err = Triple::new(Term::iri("s"), Term::string("p"), Term::iri("o")).unwrap_err();
        assert!(matches!(err, TermError::LiteralPosition(_, "predicate")));
    }

    #[test]
    fn display_round_trips() {
        for text in ["a", "\"x \\\"y\\\" \\\\ z\"", "-3^^int", "0.1^^dec", "1e300^^dec", "false^^bool"] {
            let t: Term = text.parse().unwrap();
            assert_eq!(t.to_string(), text);
        }
        assert_eq!(Term::dec(4.0).unwrap().to_string(), "4.0^^dec");
        assert_eq!(Term::dec(-0.0).unwrap(), Term::dec(0.0).unwrap());
    }

    #[test]
    fn triple_line_parsing() {
        let t = Triple::parse_line("ElizaBryan joinedIn 2016^^int # since", 1).unwrap().unwrap();
        assert_eq!(t.object(), &Term::int(2016));
        assert!(Triple::parse_line("   # only a comment", 1).unwrap().is_none());
        let err = Triple::parse_line("a b", 7).unwrap_err();
        assert_eq!(err.line, 7);
        assert!(Triple::parse_line("\"lit\" p o", 1).is_err());
    }
}
