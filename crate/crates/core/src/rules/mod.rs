//! Declarative allocation rules: graph patterns with variables, builtin
//! filters, a polarity, a severity, a score and a message template.
//!
//! Rule documents are block-structured text:
//!
//! ```text
//! version 1
//!
//! rule seniority-sufficient {
//!   task-var ?t
//!   resource-var ?r
//!   pattern {
//!     ?t performedBy ?r
//!     ?t partOf ?c
//!     ?c hasLoanGoal ?lg
//!     ?lg hasRiskClass ?rc
//!     ?rc minSeniority ?s2
//!     ?r seniority ?s1
//!   }
//!   filter scaleGreaterEq ?s1 ?s2 Seniority
//!   polarity positive
//!   severity soft
//!   score 2.0
//!   message "Seniority '{s1}' is sufficient for risk class '{rc}' of loan goal '{lg}'"
//! }
//! ```
//!
//! Patterns never contain negated atoms. A rule that detects a violation is
//! written as a `negative` rule whose pattern matches the violation itself.

mod matcher;
mod message;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::Ontology;
use crate::term::Term;
use crate::text::{read_blocks, strip_version, Node, ParseError, Token};

pub use matcher::{evaluate, Matcher};
pub use message::{placeholders, render_message};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("rule {rule} (line {line}): unknown scale {scale}")]
    UnknownScale { rule: String, scale: String, line: usize },
    #[error("rule {rule} (line {line}): focus variable ?{var} does not occur in the pattern")]
    UnboundFocusVariable { rule: String, var: String, line: usize },
    #[error("message placeholder {{{0}}} is not bound")]
    UnboundPlaceholder(String),
    #[error("{0}")]
    Io(String),
}

/// A pattern variable, stored without its leading `?`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Variable(Arc<str>);

impl Variable {
    pub fn new(name: &str) -> Variable {
        Variable(Arc::from(name.trim_start_matches('?')))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

pub type Binding = BTreeMap<Variable, Term>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Var(Variable),
    Const(Term),
}

impl PatternTerm {
    pub fn var(name: &str) -> PatternTerm {
        PatternTerm::Var(Variable::new(name))
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Const(_) => None,
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => v.fmt(f),
            PatternTerm::Const(t) => t.fmt(f),
        }
    }
}

/// One edge of a graph pattern. The predicate is always a constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternAtom {
    pub subject: PatternTerm,
    pub predicate: Term,
    pub object: PatternTerm,
}

impl PatternAtom {
    pub fn new(subject: PatternTerm, predicate: Term, object: PatternTerm) -> PatternAtom {
        PatternAtom { subject, predicate, object }
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.subject.as_var().into_iter().chain(self.object.as_var())
    }
}

impl fmt::Display for PatternAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterOp {
    ScaleGreaterEq,
    ScaleLess,
    Eq,
    Neq,
    NumGreaterEq,
    NumLess,
}

impl FilterOp {
    pub fn name(self) -> &'static str {
        match self {
            FilterOp::ScaleGreaterEq => "scaleGreaterEq",
            FilterOp::ScaleLess => "scaleLess",
            FilterOp::Eq => "eq",
            FilterOp::Neq => "neq",
            FilterOp::NumGreaterEq => "numGreaterEq",
            FilterOp::NumLess => "numLess",
        }
    }

    fn parse(s: &str) -> Option<FilterOp> {
        [
            FilterOp::ScaleGreaterEq,
            FilterOp::ScaleLess,
            FilterOp::Eq,
            FilterOp::Neq,
            FilterOp::NumGreaterEq,
            FilterOp::NumLess,
        ]
        .into_iter()
        .find(|op| op.name() == s)
    }

    pub fn is_scale(self) -> bool {
        matches!(self, FilterOp::ScaleGreaterEq | FilterOp::ScaleLess)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filter {
    pub op: FilterOp,
    pub left: Variable,
    pub right: PatternTerm,
    /// Required for scale comparisons, absent otherwise.
    pub scale: Option<String>,
}

impl Filter {
    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        std::iter::once(&self.left).chain(self.right.as_var())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// A match disqualifies the assignment.
    Hard,
    /// A match contributes the rule's score.
    Soft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    pub task_var: Variable,
    pub resource_var: Variable,
    pub atoms: Vec<PatternAtom>,
    pub filters: Vec<Filter>,
    pub polarity: Polarity,
    pub severity: Severity,
    /// Signed contribution per match; ignored for hard rules.
    pub score: f64,
    pub message: String,
}

impl Rule {
    /// Variables occurring in the pattern, in name order.
    pub fn variables(&self) -> BTreeSet<Variable> {
        self.atoms.iter().flat_map(|a| a.variables().cloned()).collect()
    }

    pub fn is_hard(&self) -> bool {
        self.severity == Severity::Hard
    }

    /// Score contributed per match: zero for hard rules.
    pub fn effective_score(&self) -> f64 {
        match self.severity {
            Severity::Hard => 0.0,
            Severity::Soft => self.score,
        }
    }

    /// Checks the structural invariants. `line` is used for error positions.
    pub fn check(&self, ontology: &Ontology, line: usize) -> Result<(), RuleError> {
        let vars = self.variables();
        let perr = |msg: String| RuleError::Parse(ParseError::new(line, 1, format!("rule {}: {msg}", self.id)));
        for focus in [&self.task_var, &self.resource_var] {
            if !vars.contains(focus) {
                return Err(RuleError::UnboundFocusVariable {
                    rule: self.id.clone(),
                    var: focus.name().to_string(),
                    line,
                });
            }
        }
        if self.severity == Severity::Hard && self.polarity == Polarity::Positive {
            return Err(perr("hard rules must have negative polarity".into()));
        }
        for f in &self.filters {
            if let Some(v) = f.variables().find(|v| !vars.contains(*v)) {
                return Err(perr(format!("filter variable {v} does not occur in the pattern")));
            }
            match (&f.scale, f.op.is_scale()) {
                (Some(s), true) => {
                    if ontology.scale(s).is_none() {
                        return Err(RuleError::UnknownScale { rule: self.id.clone(), scale: s.clone(), line });
                    }
                }
                (None, true) => return Err(perr(format!("{} needs a scale name", f.op.name()))),
                (Some(_), false) => return Err(perr(format!("{} takes no scale", f.op.name()))),
                (None, false) => {}
            }
        }
        if let Some(p) = placeholders(&self.message).into_iter().find(|p| !vars.contains(&Variable::new(p))) {
            return Err(perr(format!("message references unbound {{{p}}}")));
        }
        if !self.score.is_finite() {
            return Err(perr("score must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> RuleSet {
        RuleSet { rules }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rule> {
        self.rules.iter()
    }

    /// A copy without the rule `id`.
    pub fn without(&self, id: &str) -> RuleSet {
        RuleSet { rules: self.rules.iter().filter(|r| r.id != id).cloned().collect() }
    }

    /// A copy with every soft score passed through `f`.
    pub fn map_soft_scores(&self, f: impl Fn(f64) -> f64) -> RuleSet {
        let rules = self
            .rules
            .iter()
            .cloned()
            .map(|mut r| {
                if r.severity == Severity::Soft {
                    r.score = f(r.score);
                }
                r
            })
            .collect();
        RuleSet { rules }
    }

    pub fn load(path: &Path, ontology: &Ontology) -> Result<RuleSet, RuleError> {
        let text = std::fs::read_to_string(path).map_err(|e| RuleError::Io(format!("{}: {e}", path.display())))?;
        parse_rules(&text, ontology)
    }
}

impl<'a> IntoIterator for &'a RuleSet {
    type Item = &'a Rule;
    type IntoIter = std::slice::Iter<'a, Rule>;

    fn into_iter(self) -> Self::IntoIter {
        self.rules.iter()
    }
}

/// Parses a rule document against the ontology that defines its scales.
pub fn parse_rules(text: &str, ontology: &Ontology) -> Result<RuleSet, RuleError> {
    let nodes = strip_version(read_blocks(text)?, FORMAT_VERSION)?;
    let mut rules: Vec<Rule> = Vec::new();
    for node in &nodes {
        if node.keyword() != "rule" {
            return Err(node.error(format!("expected a rule stanza, found {:?}", node.keyword())).into());
        }
        let rule = parse_rule(node)?;
        if rules.iter().any(|r| r.id == rule.id) {
            return Err(node.error(format!("duplicate rule id {}", rule.id)).into());
        }
        rule.check(ontology, node.line)?;
        rules.push(rule);
    }
    Ok(RuleSet { rules })
}

fn variable(line: &Node, tok: &Token) -> Result<Variable, ParseError> {
    if tok.quoted || !tok.text.starts_with('?') || tok.text.len() < 2 {
        return Err(line.error_at(tok, format!("expected a variable like ?x, found {:?}", tok.text)));
    }
    Ok(Variable::new(&tok.text))
}

fn pattern_term(line: &Node, tok: &Token) -> Result<PatternTerm, ParseError> {
    if !tok.quoted && tok.text.starts_with('?') {
        return variable(line, tok).map(PatternTerm::Var);
    }
    Term::from_token(tok).map(PatternTerm::Const).map_err(|e| line.error_at(tok, e.to_string()))
}

fn one(line: &Node) -> Result<&Token, ParseError> {
    match line.args() {
        [a] => Ok(a),
        _ => Err(line.error(format!("{} expects exactly one value", line.keyword()))),
    }
}

fn parse_rule(node: &Node) -> Result<Rule, ParseError> {
    let id = match node.args() {
        [id] if !id.quoted => id.text.clone(),
        _ => return Err(node.error("rule expects exactly one id")),
    };
    let Some(body) = &node.children else {
        return Err(node.error(format!("rule {id} has no body")));
    };
    let mut task_var = None;
    let mut resource_var = None;
    let mut atoms = None;
    let mut filters = Vec::new();
    let mut polarity = None;
    let mut severity = None;
    let mut score = None;
    let mut message = None;
    let mut seen = BTreeSet::new();
    for line in body {
        let key = line.keyword();
        if key != "filter" && !seen.insert(key.to_string()) {
            return Err(line.error(format!("duplicate field {key}")));
        }
        match key {
            "task-var" => task_var = Some(variable(line, one(line)?)?),
            "resource-var" => resource_var = Some(variable(line, one(line)?)?),
            "pattern" => {
                let Some(lines) = &line.children else {
                    return Err(line.error("pattern must open a block"));
                };
                let mut list = Vec::new();
                for l in lines {
                    if l.children.is_some() || l.tokens.len() != 3 {
                        return Err(l.error("pattern lines are `subject predicate object`"));
                    }
                    let p = &l.tokens[1];
                    if !p.quoted && p.text.starts_with('?') {
                        return Err(l.error_at(p, "predicate variables are not supported"));
                    }
                    let predicate = Term::from_token(p).map_err(|e| l.error_at(p, e.to_string()))?;
                    if !predicate.is_id() {
                        return Err(l.error_at(p, "predicate must be an identifier"));
                    }
                    list.push(PatternAtom {
                        subject: pattern_term(l, &l.tokens[0])?,
                        predicate,
                        object: pattern_term(l, &l.tokens[2])?,
                    });
                }
                atoms = Some(list);
            }
            "filter" => {
                let args = line.args();
                if args.len() < 3 || args.len() > 4 {
                    return Err(line.error("filter expects `op ?left right [scale]`"));
                }
                let op = FilterOp::parse(&args[0].text)
                    .ok_or_else(|| line.error_at(&args[0], format!("unknown filter {:?}", args[0].text)))?;
                filters.push(Filter {
                    op,
                    left: variable(line, &args[1])?,
                    right: pattern_term(line, &args[2])?,
                    scale: args.get(3).map(|t| t.text.clone()),
                });
            }
            "polarity" => {
                let t = one(line)?;
                polarity = Some(match t.text.as_str() {
                    "positive" => Polarity::Positive,
                    "negative" => Polarity::Negative,
                    _ => return Err(line.error_at(t, "polarity is positive or negative")),
                });
            }
            "severity" => {
                let t = one(line)?;
                severity = Some(match t.text.as_str() {
                    "hard" => Severity::Hard,
                    "soft" => Severity::Soft,
                    _ => return Err(line.error_at(t, "severity is hard or soft")),
                });
            }
            "score" => {
                let t = one(line)?;
                let v: f64 = t.text.parse().map_err(|_| line.error_at(t, "score must be a number"))?;
                score = Some(v);
            }
            "message" => {
                let t = one(line)?;
                if !t.quoted {
                    return Err(line.error_at(t, "message must be a quoted string"));
                }
                message = Some(t.text.clone());
            }
            other => return Err(line.error(format!("unknown rule field {other:?}"))),
        }
    }
    let missing = |f: &str| node.error(format!("rule {id} is missing {f}"));
    let severity = severity.ok_or_else(|| missing("severity"))?;
    let score = match (score, severity) {
        (Some(s), _) => s,
        (None, Severity::Hard) => 0.0,
        (None, Severity::Soft) => return Err(missing("score")),
    };
    Ok(Rule {
        task_var: task_var.ok_or_else(|| missing("task-var"))?,
        resource_var: resource_var.ok_or_else(|| missing("resource-var"))?,
        atoms: atoms.ok_or_else(|| missing("pattern"))?,
        filters,
        polarity: polarity.ok_or_else(|| missing("polarity"))?,
        severity,
        score,
        message: message.ok_or_else(|| missing("message"))?,
        id,
    })
}

/// Result of one rule matching under one total binding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Match {
    pub rule_id: String,
    pub binding: Binding,
    pub message: String,
}
