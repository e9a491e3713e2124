//! In-memory triple store with subject, predicate and object indexes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{Term, TermError, Triple};
use crate::text::ParseError;
use crate::vocab;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Malformed(#[from] TermError),
    #[error("update is {0}, only accepted updates can be applied")]
    NotAccepted(UpdateStatus),
    #[error("cannot remove missing triple: {0}")]
    MissingRemoval(Triple),
    #[error("triple both added and removed: {0}")]
    Overlap(Triple),
    #[error("invalid status transition {from} -> {to}")]
    InvalidTransition { from: UpdateStatus, to: UpdateStatus },
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Read access to a set of triples. Implemented by [`Graph`] and by
/// [`WithTriple`], the overlay used for hypothetical assignments.
pub trait TripleSource {
    /// All triples matching every bound position, in ascending order.
    fn matching(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<Triple>;

    /// Cheap upper bound on `matching(..).len()`.
    fn count_hint(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> usize;

    fn contains(&self, t: &Triple) -> bool;

    fn objects(&self, s: &Term, p: &Term) -> Vec<Term> {
        self.matching(Some(s), Some(p), None).into_iter().map(|t| t.object().clone()).collect()
    }

    fn subjects(&self, p: &Term, o: &Term) -> Vec<Term> {
        self.matching(None, Some(p), Some(o)).into_iter().map(|t| t.subject().clone()).collect()
    }

    /// First object of `(s, p, _)` in term order.
    fn object(&self, s: &Term, p: &Term) -> Option<Term> {
        self.objects(s, p).into_iter().next()
    }

    /// Display text for a term: its `label` string if present, else its plain value.
    fn label(&self, term: &Term) -> String {
        if term.is_id() {
            if let Some(l) = self.object(term, &Term::iri(vocab::LABEL)) {
                return l.plain();
            }
        }
        term.plain()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    by_subject: HashMap<Term, BTreeSet<Triple>>,
    by_predicate: HashMap<Term, BTreeSet<Triple>>,
    by_object: HashMap<Term, BTreeSet<Triple>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Eq for Graph {}

fn index_insert(index: &mut HashMap<Term, BTreeSet<Triple>>, key: &Term, t: &Triple) {
    index.entry(key.clone()).or_default().insert(t.clone());
}

fn index_remove(index: &mut HashMap<Term, BTreeSet<Triple>>, key: &Term, t: &Triple) {
    if let Some(set) = index.get_mut(key) {
        set.remove(t);
        if set.is_empty() {
            index.remove(key);
        }
    }
}

impl Graph {
    pub fn new() -> Graph {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    /// Inserts a triple; returns `false` if it was already present.
    pub fn insert(&mut self, t: Triple) -> bool {
        if self.triples.contains(&t) {
            return false;
        }
        index_insert(&mut self.by_subject, t.subject(), &t);
        index_insert(&mut self.by_predicate, t.predicate(), &t);
        index_insert(&mut self.by_object, t.object(), &t);
        self.triples.insert(t);
        true
    }

    /// Builds and inserts `(s, p, o)`, failing on literals in subject or predicate position.
    pub fn add(&mut self, s: Term, p: Term, o: Term) -> Result<bool, StoreError> {
        Ok(self.insert(Triple::new(s, p, o)?))
    }

    pub fn remove(&mut self, t: &Triple) -> bool {
        if !self.triples.remove(t) {
            return false;
        }
        index_remove(&mut self.by_subject, t.subject(), t);
        index_remove(&mut self.by_predicate, t.predicate(), t);
        index_remove(&mut self.by_object, t.object(), t);
        true
    }

    /// Removes every `(s, p, _)` triple and returns them.
    pub fn remove_all(&mut self, s: &Term, p: &Term) -> Vec<Triple> {
        let found = self.matching(Some(s), Some(p), None);
        for t in &found {
            self.remove(t);
        }
        found
    }

    /// Replaces every `(s, p, _)` with the single `(s, p, o)`.
    pub fn set(&mut self, s: Term, p: Term, o: Term) -> Result<(), StoreError> {
        let t = Triple::new(s, p, o)?;
        self.remove_all(t.subject(), t.predicate());
        self.insert(t);
        Ok(())
    }

    /// Triples matching every bound position; `None` is a wildcard.
    pub fn lookup(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<Triple> {
        self.matching(s, p, o)
    }

    fn candidate_sets(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
    ) -> Option<Vec<Option<&BTreeSet<Triple>>>> {
        let mut sets = Vec::new();
        if let Some(s) = s {
            sets.push(self.by_subject.get(s));
        }
        if let Some(p) = p {
            sets.push(self.by_predicate.get(p));
        }
        if let Some(o) = o {
            sets.push(self.by_object.get(o));
        }
        if sets.is_empty() {
            None
        } else {
            Some(sets)
        }
    }

    /// Distinct subjects and objects that are identifiers or literals, i.e. every node.
    pub fn nodes(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        for t in &self.triples {
            out.insert(t.subject().clone());
            out.insert(t.object().clone());
        }
        out
    }

    /// Parses the line-based graph format.
    pub fn parse(text: &str) -> Result<Graph, ParseError> {
        let mut g = Graph::new();
        for (idx, line) in text.lines().enumerate() {
            if let Some(t) = Triple::parse_line(line, idx + 1)? {
                g.insert(t);
            }
        }
        Ok(g)
    }

    /// Canonical text form: one triple per line in term order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Graph, StoreError> {
        let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Graph::parse(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        std::fs::write(path, self.to_text()).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Applies an accepted update atomically. Either every removal and
    /// addition takes effect, or the graph is left untouched.
    pub fn apply_update(
        &mut self,
        update: &mut GraphUpdate,
        missing: MissingRemovalPolicy,
    ) -> Result<ApplyReport, StoreError> {
        if update.status != UpdateStatus::Accepted {
            return Err(StoreError::NotAccepted(update.status));
        }
        if let Some(t) = update.additions.iter().find(|t| update.removals.contains(t)) {
            return Err(StoreError::Overlap(t.clone()));
        }
        let missing_removals: Vec<Triple> =
            update.removals.iter().filter(|t| !self.contains(t)).cloned().collect();
        if missing == MissingRemovalPolicy::Reject {
            if let Some(t) = missing_removals.first() {
                return Err(StoreError::MissingRemoval(t.clone()));
            }
        }
        // nothing below can fail
        let mut report = ApplyReport { missing_removals, ..ApplyReport::default() };
        for t in &update.removals {
            if self.remove(t) {
                report.removed += 1;
            }
        }
        for t in &update.additions {
            if self.insert(t.clone()) {
                report.added += 1;
            }
        }
        for t in &report.missing_removals {
            log::warn!("update removal not present in graph: {t}");
        }
        update.status = UpdateStatus::Applied;
        Ok(report)
    }
}

impl TripleSource for Graph {
    fn matching(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<Triple> {
        let keep = |t: &&Triple| {
            s.is_none_or(|s| t.subject() == s)
                && p.is_none_or(|p| t.predicate() == p)
                && o.is_none_or(|o| t.object() == o)
        };
        match self.candidate_sets(s, p, o) {
            None => self.triples.iter().cloned().collect(),
            Some(sets) => {
                let Some(smallest) = sets
                    .into_iter()
                    .map(|s| s.map(|set| set as &BTreeSet<Triple>))
                    .min_by_key(|s| s.map_or(0, |set| set.len()))
                    .flatten()
                else {
                    return Vec::new();
                };
                smallest.iter().filter(keep).cloned().collect()
            }
        }
    }

    fn count_hint(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> usize {
        if let (Some(s), Some(p), Some(o)) = (s, p, o) {
            return match Triple::new(s.clone(), p.clone(), o.clone()) {
                Ok(t) => usize::from(self.triples.contains(&t)),
                Err(_) => 0,
            };
        }
        match self.candidate_sets(s, p, o) {
            None => self.triples.len(),
            Some(sets) => sets.into_iter().map(|s| s.map_or(0, BTreeSet::len)).min().unwrap_or(0),
        }
    }

    fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }
}

/// A graph seen through one extra, uncommitted triple.
pub struct WithTriple<'a> {
    base: &'a Graph,
    extra: Triple,
}

impl<'a> WithTriple<'a> {
    pub fn new(base: &'a Graph, extra: Triple) -> WithTriple<'a> {
        WithTriple { base, extra }
    }

    fn extra_matches(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> bool {
        s.is_none_or(|s| self.extra.subject() == s)
            && p.is_none_or(|p| self.extra.predicate() == p)
            && o.is_none_or(|o| self.extra.object() == o)
            && !self.base.contains(&self.extra)
    }
}

impl TripleSource for WithTriple<'_> {
    fn matching(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<Triple> {
        let mut out = self.base.matching(s, p, o);
        if self.extra_matches(s, p, o) {
            let pos = out.binary_search(&self.extra).unwrap_or_else(|e| e);
            out.insert(pos, self.extra.clone());
        }
        out
    }

    fn count_hint(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> usize {
        self.base.count_hint(s, p, o) + usize::from(self.extra_matches(s, p, o))
    }

    fn contains(&self, t: &Triple) -> bool {
        *t == self.extra || self.base.contains(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingRemovalPolicy {
    #[default]
    Warn,
    Reject,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApplyReport {
    pub added: usize,
    pub removed: usize,
    pub missing_removals: Vec<Triple>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateStatus {
    Proposed,
    Accepted,
    Rejected,
    Applied,
    /// Replaced by an amended proposal.
    Superseded,
}

impl fmt::Display for UpdateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateStatus::Proposed => "proposed",
            UpdateStatus::Accepted => "accepted",
            UpdateStatus::Rejected => "rejected",
            UpdateStatus::Applied => "applied",
            UpdateStatus::Superseded => "superseded",
        })
    }
}

/// A batch of additions and removals with a review status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphUpdate {
    pub additions: Vec<Triple>,
    pub removals: Vec<Triple>,
    pub provenance: String,
    status: UpdateStatus,
}

impl GraphUpdate {
    pub fn new(
        additions: Vec<Triple>,
        removals: Vec<Triple>,
        provenance: impl Into<String>,
    ) -> Result<GraphUpdate, StoreError> {
        if let Some(t) = additions.iter().find(|t| removals.contains(t)) {
            return Err(StoreError::Overlap(t.clone()));
        }
        Ok(GraphUpdate { additions, removals, provenance: provenance.into(), status: UpdateStatus::Proposed })
    }

    pub fn additions(additions: Vec<Triple>, provenance: impl Into<String>) -> GraphUpdate {
        GraphUpdate { additions, removals: Vec::new(), provenance: provenance.into(), status: UpdateStatus::Proposed }
    }

    pub fn status(&self) -> UpdateStatus {
        self.status
    }

    pub fn is_empty(&self) -> bool {
        self.additions.is_empty() && self.removals.is_empty()
    }

    fn transition(&mut self, to: UpdateStatus) -> Result<(), StoreError> {
        if self.status != UpdateStatus::Proposed {
            return Err(StoreError::InvalidTransition { from: self.status, to });
        }
        self.status = to;
        Ok(())
    }

    pub fn accept(&mut self) -> Result<(), StoreError> {
        self.transition(UpdateStatus::Accepted)
    }

    pub fn reject(&mut self) -> Result<(), StoreError> {
        self.transition(UpdateStatus::Rejected)
    }

    pub fn supersede(&mut self) -> Result<(), StoreError> {
        self.transition(UpdateStatus::Superseded)
    }

    /// Records that an accepted update was applied elsewhere, as when
    /// replaying a review journal.
    pub(crate) fn mark_applied(&mut self) -> Result<(), StoreError> {
        if self.status != UpdateStatus::Accepted {
            return Err(StoreError::InvalidTransition { from: self.status, to: UpdateStatus::Applied });
        }
        self.status = UpdateStatus::Applied;
        Ok(())
    }

    /// Adds removals for existing values of `functional` predicates that
    /// this update sets, so applying it replaces rather than duplicates.
    pub fn replacing_functional(mut self, g: &Graph, functional: impl Fn(&Term) -> bool) -> GraphUpdate {
        let mut removals: BTreeSet<Triple> = self.removals.iter().cloned().collect();
        for t in &self.additions {
            if !functional(t.predicate()) {
                continue;
            }
            for old in g.matching(Some(t.subject()), Some(t.predicate()), None) {
                if old != *t && !self.additions.contains(&old) {
                    removals.insert(old);
                }
            }
        }
        self.removals = removals.into_iter().collect();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str, p: &str, o: &str) -> Triple {
        Triple::ids(s, p, o)
    }

    #[test]
    fn add_is_idempotent() {
        let mut g = Graph::new();
        assert!(g.insert(t("ElizaBryan", "position", "Consultant")));
        assert_eq!(g.len(), 1);
        assert!(!g.insert(t("ElizaBryan", "position", "Consultant")));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn lookup_by_subject_sees_literals() {
        let mut g = Graph::new();
        g.insert(t("ElizaBryan", "position", "Consultant"));
        g.add(Term::iri("ElizaBryan"), Term::iri("joinedIn"), Term::int(2016)).unwrap();
        assert_eq!(g.lookup(Some(&Term::iri("ElizaBryan")), None, None).len(), 2);
    }

    #[test]
    fn add_rejects_literal_subject() {
        let mut g = Graph::new();
        let err = g.add(Term::string("x"), Term::iri("p"), Term::iri("o")).unwrap_err();
        assert!(matches!(err, StoreError::Malformed(_)));
        assert!(g.is_empty());
    }

    #[test]
    fn empty_lookup() {
        assert!(Graph::new().lookup(None, None, None).is_empty());
    }

    #[test]
    fn remove_cleans_indexes() {
        let mut g = Graph::new();
        g.insert(t("a", "p", "b"));
        g.remove(&t("a", "p", "b"));
        assert!(g.by_subject.is_empty() && g.by_predicate.is_empty() && g.by_object.is_empty());
        assert_eq!(g.count_hint(Some(&Term::iri("a")), None, None), 0);
    }

    #[test]
    fn apply_requires_accepted() {
        let mut g = Graph::new();
        let mut u = GraphUpdate::additions(vec![t("a", "p", "b")], "test");
        let err = g.apply_update(&mut u, MissingRemovalPolicy::Warn).unwrap_err();
        assert!(matches!(err, StoreError::NotAccepted(UpdateStatus::Proposed)));
        assert!(g.is_empty());
    }

    #[test]
    fn apply_eliza_bryan() {
        let mut g = Graph::new();
        let mut u = GraphUpdate::additions(
            vec![
                t("ElizaBryan", "type", "Person"),
                t("ElizaBryan", "role", "Consultant"),
                t("ElizaBryan", "seniority", "Senior"),
            ],
            "process expert",
        );
        u.accept().unwrap();
        let report = g.apply_update(&mut u, MissingRemovalPolicy::Warn).unwrap();
        assert_eq!(report.added, 3);
        assert_eq!(g.len(), 3);
        assert_eq!(u.status(), UpdateStatus::Applied);
    }

    #[test]
    fn empty_update_leaves_graph() {
        let mut g = Graph::new();
        g.insert(t("a", "p", "b"));
        let before = g.clone();
        let mut u = GraphUpdate::additions(vec![], "noop");
        u.accept().unwrap();
        g.apply_update(&mut u, MissingRemovalPolicy::Warn).unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn missing_removal_policies() {
        let mut g = Graph::new();
        g.insert(t("a", "p", "b"));
        let before = g.clone();
        let mk = || {
            let mut u = GraphUpdate::new(vec![t("c", "p", "d")], vec![t("x", "p", "y")], "t").unwrap();
            u.accept().unwrap();
            u
        };
        let mut u = mk();
        let err = g.apply_update(&mut u, MissingRemovalPolicy::Reject).unwrap_err();
        assert!(matches!(err, StoreError::MissingRemoval(_)));
        assert_eq!(g, before);
        assert_eq!(u.status(), UpdateStatus::Accepted);

        let mut u = mk();
        let report = g.apply_update(&mut u, MissingRemovalPolicy::Warn).unwrap();
        assert_eq!(report.missing_removals, vec![t("x", "p", "y")]);
        assert!(g.contains(&t("c", "p", "d")));
    }

    #[test]
    fn overlapping_update_rejected() {
        assert!(matches!(
            GraphUpdate::new(vec![t("a", "p", "b")], vec![t("a", "p", "b")], "x"),
            Err(StoreError::Overlap(_))
        ));
    }

    #[test]
    fn status_transitions() {
        let mut u = GraphUpdate::additions(vec![], "x");
        u.reject().unwrap();
        assert!(matches!(u.accept(), Err(StoreError::InvalidTransition { .. })));
    }

    #[test]
    fn overlay_sees_extra_triple() {
        let mut g = Graph::new();
        g.insert(t("a", "p", "b"));
        let view = WithTriple::new(&g, t("a", "p", "c"));
        assert_eq!(view.matching(Some(&Term::iri("a")), None, None).len(), 2);
        assert_eq!(view.count_hint(None, Some(&Term::iri("p")), None), 2);
        let dup = WithTriple::new(&g, t("a", "p", "b"));
        assert_eq!(dup.matching(None, None, None).len(), 1);
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn labels_fall_back_to_identifier() {
        let mut g = Graph::new();
        g.add(Term::iri("W_Validate_application"), Term::iri("label"), Term::string("W_Validate application"))
            .unwrap();
        assert_eq!(g.label(&Term::iri("W_Validate_application")), "W_Validate application");
        assert_eq!(g.label(&Term::iri("User_26")), "User_26");
    }

    #[test]
    fn replacing_functional_adds_removals() {
        let mut g = Graph::new();
        g.insert(t("u", "seniority", "Medium"));
        let u = GraphUpdate::additions(vec![t("u", "seniority", "High")], "x")
            .replacing_functional(&g, |p| p.as_id() == Some("seniority"));
        assert_eq!(u.removals, vec![t("u", "seniority", "Medium")]);
    }

    #[test]
    fn canonical_text() {
        let g = Graph::parse("b p \"x\"\n# c\na p 1^^int\na p 1^^int\n").unwrap();
        assert_eq!(g.to_text(), "a p 1^^int\nb p \"x\"\n");
    }
}
