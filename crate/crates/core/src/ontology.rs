//! Concept-level knowledge: classes, relations with domain and range, and
//! ordered scales such as seniority ranks.
//!
//! Ontology documents are block-structured text:
//!
//! ```text
//! version 1
//!
//! class Person {
//!   parent Resource
//!   description "a human employee"
//! }
//!
//! relation seniority {
//!   description "has the seniority"
//!   domain Resource
//!   range Seniority
//!   functional
//! }
//!
//! scale Seniority {
//!   levels Low Medium High
//! }
//! ```

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, TripleSource};
use crate::term::{Term, TermKind, Triple};
use crate::text::{read_blocks, strip_version, Node, ParseError};
use crate::vocab;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("duplicate declaration of {0}")]
    Duplicate(String),
    #[error("{context} refers to undeclared class {name}")]
    UnknownClass { name: String, context: String },
    #[error("class hierarchy has a cycle through {0}")]
    Cycle(String),
    #[error("scale {scale} repeats level {level}")]
    DuplicateLevel { scale: String, level: String },
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassDef {
    pub name: String,
    pub description: String,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Range {
    Class(String),
    Literal(TermKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationDef {
    pub name: String,
    pub description: String,
    pub domain: String,
    pub range: Range,
    pub functional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderedScale {
    pub name: String,
    pub description: String,
    levels: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("term is not a level of the scale")]
pub struct NotOnScale;

impl OrderedScale {
    /// Levels are listed lowest first.
    pub fn new(name: impl Into<String>, levels: Vec<Term>) -> Result<OrderedScale, OntologyError> {
        let name = name.into();
        let mut seen = BTreeSet::new();
        for l in &levels {
            if !seen.insert(l) {
                return Err(OntologyError::DuplicateLevel { scale: name, level: l.to_string() });
            }
        }
        Ok(OrderedScale { name, description: String::new(), levels })
    }

    pub fn levels(&self) -> &[Term] {
        &self.levels
    }

    pub fn rank(&self, t: &Term) -> Option<usize> {
        self.levels.iter().position(|l| l == t)
    }

    /// Orders two levels by rank.
    pub fn compare(&self, a: &Term, b: &Term) -> Result<Ordering, NotOnScale> {
        let ra = self.rank(a).ok_or(NotOnScale)?;
        let rb = self.rank(b).ok_or(NotOnScale)?;
        Ok(ra.cmp(&rb))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub triple: Triple,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Triples using undeclared predicates. Allowed, but worth a look.
    pub warnings: Vec<Violation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Ontology {
    classes: BTreeMap<String, ClassDef>,
    relations: BTreeMap<String, RelationDef>,
    scales: BTreeMap<String, OrderedScale>,
}

impl Ontology {
    pub fn new() -> Ontology {
        Ontology::default()
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.values()
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationDef> {
        self.relations.values()
    }

    pub fn scales(&self) -> impl Iterator<Item = &OrderedScale> {
        self.scales.values()
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.get(name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.relations.get(name)
    }

    pub fn scale(&self, name: &str) -> Option<&OrderedScale> {
        self.scales.get(name)
    }

    pub fn is_functional(&self, predicate: &Term) -> bool {
        predicate.as_id().and_then(|p| self.relations.get(p)).is_some_and(|r| r.functional)
    }

    fn type_name_declared(&self, name: &str) -> bool {
        self.classes.contains_key(name) || self.scales.contains_key(name)
    }

    pub fn add_class(&mut self, class: ClassDef) -> Result<(), OntologyError> {
        if self.classes.contains_key(&class.name) {
            return Err(OntologyError::Duplicate(class.name));
        }
        if let Some(parent) = &class.parent {
            if !self.classes.contains_key(parent) {
                return Err(OntologyError::UnknownClass {
                    name: parent.clone(),
                    context: format!("class {}", class.name),
                });
            }
        }
        self.classes.insert(class.name.clone(), class);
        Ok(())
    }

    pub fn add_relation(&mut self, rel: RelationDef) -> Result<(), OntologyError> {
        if self.relations.contains_key(&rel.name) {
            return Err(OntologyError::Duplicate(rel.name));
        }
        let context = format!("relation {}", rel.name);
        if !self.type_name_declared(&rel.domain) {
            return Err(OntologyError::UnknownClass { name: rel.domain.clone(), context });
        }
        if let Range::Class(c) = &rel.range {
            if !self.type_name_declared(c) {
                return Err(OntologyError::UnknownClass { name: c.clone(), context });
            }
        }
        self.relations.insert(rel.name.clone(), rel);
        Ok(())
    }

    pub fn add_scale(&mut self, scale: OrderedScale) -> Result<(), OntologyError> {
        if self.scales.contains_key(&scale.name) {
            return Err(OntologyError::Duplicate(scale.name));
        }
        self.scales.insert(scale.name.clone(), scale);
        Ok(())
    }

    /// The class itself followed by its ancestors, nearest first.
    pub fn ancestors(&self, class: &str) -> Vec<String> {
        let mut out = vec![class.to_string()];
        let mut cur = self.classes.get(class).and_then(|c| c.parent.clone());
        while let Some(name) = cur {
            if out.contains(&name) {
                break;
            }
            cur = self.classes.get(&name).and_then(|c| c.parent.clone());
            out.push(name);
        }
        out
    }

    /// The class itself and every class below it.
    pub fn descendants(&self, class: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::from([class.to_string()]);
        loop {
            let before = out.len();
            for c in self.classes.values() {
                if c.parent.as_ref().is_some_and(|p| out.contains(p)) {
                    out.insert(c.name.clone());
                }
            }
            if out.len() == before {
                return out;
            }
        }
    }

    pub fn has_hierarchy(&self) -> bool {
        self.classes.values().any(|c| c.parent.is_some())
    }

    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        self.ancestors(sub).iter().any(|a| a == sup)
    }

    /// Membership under the subclass closure; scale levels count as
    /// instances of the scale's name.
    pub fn is_instance(&self, g: &impl TripleSource, term: &Term, class: &str) -> bool {
        if self.scales.get(class).is_some_and(|s| s.rank(term).is_some()) {
            return true;
        }
        if !term.is_id() {
            return false;
        }
        g.objects(term, &Term::iri(vocab::TYPE))
            .iter()
            .filter_map(|t| t.as_id())
            .any(|d| self.is_subclass(d, class))
    }

    fn check_acyclic(&self) -> Result<(), OntologyError> {
        for name in self.classes.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = Some(name.clone());
            while let Some(c) = cur {
                if !seen.insert(c.clone()) {
                    return Err(OntologyError::Cycle(c));
                }
                cur = self.classes.get(&c).and_then(|d| d.parent.clone());
            }
        }
        Ok(())
    }

    /// Domain/range and functional-relation checks over a graph.
    pub fn validate(&self, g: &Graph) -> ValidationReport {
        let mut report = ValidationReport::default();
        let builtin = [vocab::TYPE, vocab::LABEL];
        let mut functional_seen: BTreeMap<(Term, Term), usize> = BTreeMap::new();
        for t in g.iter() {
            let pred = t.predicate().as_id().unwrap_or_default();
            let Some(rel) = self.relations.get(pred) else {
                if !builtin.contains(&pred) {
                    report.warnings.push(Violation {
                        triple: t.clone(),
                        reason: format!("undeclared relation {pred}"),
                    });
                }
                continue;
            };
            let mut reasons = Vec::new();
            if !self.is_instance(g, t.subject(), &rel.domain) {
                reasons.push(format!("subject {} is not a {}", t.subject(), rel.domain));
            }
            let range_ok = match &rel.range {
                Range::Class(c) => self.is_instance(g, t.object(), c),
                Range::Literal(kind) => {
                    t.object().kind() == *kind || (*kind == TermKind::Dec && t.object().kind() == TermKind::Int)
                }
            };
            if !range_ok {
                let want = match &rel.range {
                    Range::Class(c) => c.clone(),
                    Range::Literal(k) => format!("{} literal", k.literal_name()),
                };
                reasons.push(format!("object {} is not a {}", t.object(), want));
            }
            if !reasons.is_empty() {
                report.violations.push(Violation { triple: t.clone(), reason: reasons.join("; ") });
            }
            if rel.functional {
                let n = functional_seen.entry((t.subject().clone(), t.predicate().clone())).or_insert(0);
                *n += 1;
                if *n > 1 {
                    report.violations.push(Violation {
                        triple: t.clone(),
                        reason: format!("functional relation {pred} has more than one value for {}", t.subject()),
                    });
                }
            }
        }
        report
    }

    pub fn load(path: &Path) -> Result<Ontology, OntologyError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| OntologyError::Io(path.display().to_string(), e))?;
        Ontology::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Ontology, OntologyError> {
        let nodes = strip_version(read_blocks(text)?, FORMAT_VERSION)?;
        let mut classes = Vec::new();
        let mut relations = Vec::new();
        let mut onto = Ontology::new();
        for node in &nodes {
            let name = || -> Result<String, ParseError> {
                match node.args() {
                    [n] if !n.quoted => Ok(n.text.clone()),
                    _ => Err(node.error(format!("{} expects exactly one name", node.keyword()))),
                }
            };
            match node.keyword() {
                "class" => classes.push((node, parse_class(node, name()?)?)),
                "relation" => relations.push((node, parse_relation(node, name()?)?)),
                "scale" => {
                    let scale = parse_scale(node, name()?)?;
                    onto.add_scale(scale).map_err(|e| node.error(e.to_string()))?;
                }
                other => return Err(node.error(format!("unknown stanza {other:?}")).into()),
            }
        }
        // parents may be declared after their children
        let mut pending = classes;
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for (node, class) in pending {
                let ready = class.parent.as_ref().is_none_or(|p| onto.classes.contains_key(p));
                if ready {
                    onto.add_class(class).map_err(|e| node.error(e.to_string()))?;
                } else {
                    rest.push((node, class));
                }
            }
            if rest.len() == before {
                let (node, class) = &rest[0];
                let parent = class.parent.clone().unwrap_or_default();
                let declared = rest.iter().any(|(_, c)| c.name == parent);
                return Err(if declared {
                    OntologyError::Cycle(class.name.clone())
                } else {
                    node.error(format!("class {} has undeclared parent {parent}", class.name)).into()
                });
            }
            pending = rest;
        }
        onto.check_acyclic()?;
        for (node, rel) in relations {
            onto.add_relation(rel).map_err(|e| node.error(e.to_string()))?;
        }
        Ok(onto)
    }
}

fn single_arg(node: &Node) -> Result<&crate::text::Token, ParseError> {
    match node.args() {
        [a] => Ok(a),
        _ => Err(node.error(format!("{} expects exactly one value", node.keyword()))),
    }
}

fn body(node: &Node) -> &[Node] {
    node.children.as_deref().unwrap_or(&[])
}

fn parse_class(node: &Node, name: String) -> Result<ClassDef, ParseError> {
    let mut class = ClassDef { name, description: String::new(), parent: None };
    for line in body(node) {
        match line.keyword() {
            "description" => class.description = single_arg(line)?.text.clone(),
            "parent" => class.parent = Some(single_arg(line)?.text.clone()),
            other => return Err(line.error(format!("unknown class field {other:?}"))),
        }
    }
    Ok(class)
}

fn parse_relation(node: &Node, name: String) -> Result<RelationDef, ParseError> {
    let mut description = String::new();
    let mut domain = None;
    let mut range = None;
    let mut functional = false;
    for line in body(node) {
        match line.keyword() {
            "description" => description = single_arg(line)?.text.clone(),
            "domain" => domain = Some(single_arg(line)?.text.clone()),
            "range" => {
                let r = &single_arg(line)?.text;
                range = Some(match TermKind::from_literal_name(r) {
                    Some(kind) => Range::Literal(kind),
                    None => Range::Class(r.clone()),
                });
            }
            "functional" => {
                functional = match line.args() {
                    [] => true,
                    [v] if v.text == "true" => true,
                    [v] if v.text == "false" => false,
                    _ => return Err(line.error("functional expects nothing, true or false")),
                }
            }
            other => return Err(line.error(format!("unknown relation field {other:?}"))),
        }
    }
    Ok(RelationDef {
        domain: domain.ok_or_else(|| node.error(format!("relation {name} has no domain")))?,
        range: range.ok_or_else(|| node.error(format!("relation {name} has no range")))?,
        name,
        description,
        functional,
    })
}

fn parse_scale(node: &Node, name: String) -> Result<OrderedScale, ParseError> {
    let mut description = String::new();
    let mut levels = None;
    for line in body(node) {
        match line.keyword() {
            "description" => description = single_arg(line)?.text.clone(),
            "levels" => {
                let terms = line
                    .args()
                    .iter()
                    .map(|t| Term::from_token(t).map_err(|e| line.error_at(t, e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?;
                if terms.is_empty() {
                    return Err(line.error("levels must not be empty"));
                }
                levels = Some(terms);
            }
            other => return Err(line.error(format!("unknown scale field {other:?}"))),
        }
    }
    let levels = levels.ok_or_else(|| node.error(format!("scale {name} has no levels")))?;
    let mut scale = OrderedScale::new(name, levels).map_err(|e| node.error(e.to_string()))?;
    scale.description = description;
    Ok(scale)
}
