//! Human review of graph updates: render, accept, reject or amend, apply.
//! Every transition is appended to an optional JSONL journal that can be
//! replayed after a restart.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::graph::{ApplyReport, Graph, GraphUpdate, MissingRemovalPolicy, TripleSource, UpdateStatus};
use crate::ontology::Ontology;
use crate::term::{Term, Triple};
use crate::vocab;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateProposal {
    pub id: String,
    pub update: GraphUpdate,
    /// One line per removal then one per addition.
    pub rendering: Vec<String>,
    pub supersedes: Option<String>,
    pub superseded_by: Option<String>,
}

impl UpdateProposal {
    pub fn status(&self) -> UpdateStatus {
        self.update.status()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accept,
    Reject,
    /// Replace the whole update with a corrected one.
    Amend(GraphUpdate),
}

/// "ApplicationType" -> "application type".
fn noun(class: &str) -> String {
    let mut out = String::new();
    for (i, c) in class.chars().enumerate() {
        if c.is_uppercase() && i > 0 {
            out.push(' ');
        }
        if c == '_' {
            out.push(' ');
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

struct Renderer<'a> {
    graph: &'a Graph,
    additions: &'a [Triple],
    ontology: &'a Ontology,
}

impl Renderer<'_> {
    fn objects(&self, s: &Term, p: &str) -> Vec<Term> {
        let p = Term::iri(p);
        let mut out: Vec<Term> = self
            .additions
            .iter()
            .filter(|t| t.subject() == s && *t.predicate() == p)
            .map(|t| t.object().clone())
            .collect();
        out.extend(self.graph.objects(s, &p));
        out
    }

    fn label(&self, t: &Term) -> String {
        if t.is_id() {
            if let Some(l) = self.objects(t, vocab::LABEL).first() {
                return l.plain();
            }
        }
        t.plain()
    }

    /// The deepest declared class of the term, if it has one.
    fn class_of(&self, t: &Term) -> Option<String> {
        self.objects(t, vocab::TYPE)
            .iter()
            .filter_map(|c| c.as_id())
            .map(|c| (self.ontology.ancestors(c).len(), c.to_string()))
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
            .map(|(_, c)| c)
    }

    fn subject(&self, t: &Term) -> String {
        match self.class_of(t) {
            Some(c) => format!("{} '{}'", noun(&c), self.label(t)),
            None => format!("'{}'", self.label(t)),
        }
    }

    fn line(&self, verb: &str, t: &Triple) -> String {
        let p = t.predicate().plain();
        match p.as_str() {
            vocab::TYPE => format!("{verb}: {} '{}'", noun(&t.object().plain()), self.label(t.subject())),
            vocab::LABEL => format!("{verb}: '{}' is labelled '{}'", t.subject().plain(), t.object().plain()),
            _ => {
                let (phrase, caveat) = match self.ontology.relation(&p) {
                    Some(r) if !r.description.is_empty() => (r.description.clone(), ""),
                    Some(_) => (p.clone(), ""),
                    None => (p.clone(), " (undeclared relation)"),
                };
                format!("{verb}: {} {phrase} '{}'{caveat}", self.subject(t.subject()), self.label(t.object()))
            }
        }
    }
}

/// Human-readable lines for an update, phrased with the ontology's class
/// names and relation descriptions.
pub fn render_update(update: &GraphUpdate, ontology: &Ontology, graph: &Graph) -> Vec<String> {
    let r = Renderer { graph, additions: &update.additions, ontology };
    let removals = update.removals.iter().map(|t| r.line("Remove", t));
    removals.chain(update.additions.iter().map(|t| r.line("Add", t))).collect()
}

/// A fresh proposal in `proposed` status.
pub fn propose_update(id: impl Into<String>, update: GraphUpdate, ontology: &Ontology, graph: &Graph) -> UpdateProposal {
    let rendering = render_update(&update, ontology, graph);
    let update = GraphUpdate::new(update.additions, update.removals, update.provenance)
        .expect("a well-formed update stays well-formed");
    UpdateProposal { id: id.into(), update, rendering, supersedes: None, superseded_by: None }
}

/// One journal line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub proposal: String,
    pub event: UpdateStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update: Option<GraphUpdate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rendering: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersedes: Option<String>,
}

/// Proposals by id with their review history.
#[derive(Debug, Default)]
pub struct ProposalBook {
    proposals: BTreeMap<u64, UpdateProposal>,
    next: u64,
    journal: Option<PathBuf>,
}

fn number(id: &str) -> Option<u64> {
    id.strip_prefix('p')?.parse().ok()
}

impl ProposalBook {
    pub fn new() -> ProposalBook {
        ProposalBook { proposals: BTreeMap::new(), next: 1, journal: None }
    }

    /// Opens a journal, replaying it when it exists. New transitions are
    /// appended to it.
    pub fn with_journal(path: &Path) -> Result<ProposalBook, IngestError> {
        let mut book = ProposalBook::new();
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| IngestError::Journal(e.to_string()))?;
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let entry: JournalEntry = serde_json::from_str(line)
                    .map_err(|e| IngestError::Journal(format!("line {}: {e}", i + 1)))?;
                book.replay(entry).map_err(|e| IngestError::Journal(format!("line {}: {e}", i + 1)))?;
            }
        }
        book.journal = Some(path.to_path_buf());
        Ok(book)
    }

    fn replay(&mut self, e: JournalEntry) -> Result<(), IngestError> {
        let n = number(&e.proposal).ok_or_else(|| IngestError::UnknownProposal(e.proposal.clone()))?;
        if e.event == UpdateStatus::Proposed {
            let update = e.update.ok_or_else(|| IngestError::Journal("proposal without update".into()))?;
            if let Some(old) = e.supersedes.as_deref().and_then(number) {
                if let Some(p) = self.proposals.get_mut(&old) {
                    p.superseded_by = Some(e.proposal.clone());
                }
            }
            let p = UpdateProposal {
                id: e.proposal,
                update,
                rendering: e.rendering.unwrap_or_default(),
                supersedes: e.supersedes,
                superseded_by: None,
            };
            self.proposals.insert(n, p);
            self.next = self.next.max(n + 1);
            return Ok(());
        }
        let p = self.proposals.get_mut(&n).ok_or_else(|| IngestError::UnknownProposal(e.proposal.clone()))?;
        match e.event {
            UpdateStatus::Accepted => p.update.accept()?,
            UpdateStatus::Rejected => p.update.reject()?,
            UpdateStatus::Superseded => p.update.supersede()?,
            UpdateStatus::Applied => p.update.mark_applied()?,
            UpdateStatus::Proposed => unreachable!(),
        }
        Ok(())
    }

    fn record(&self, entry: &JournalEntry) -> Result<(), IngestError> {
        let Some(path) = &self.journal else { return Ok(()) };
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| IngestError::Journal(format!("{}: {e}", path.display())))?;
        let line = serde_json::to_string(entry).expect("journal entry serializes");
        writeln!(f, "{line}").map_err(|e| IngestError::Journal(e.to_string()))
    }

    fn transition(&self, id: &str, event: UpdateStatus) -> JournalEntry {
        JournalEntry { proposal: id.into(), event, update: None, rendering: None, supersedes: None }
    }

    pub fn get(&self, id: &str) -> Option<&UpdateProposal> {
        self.proposals.get(&number(id)?)
    }

    pub fn iter(&self) -> impl Iterator<Item = &UpdateProposal> {
        self.proposals.values()
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    fn insert(&mut self, update: GraphUpdate, supersedes: Option<String>, ontology: &Ontology, graph: &Graph) -> Result<String, IngestError> {
        let id = format!("p{}", self.next);
        let mut p = propose_update(id.clone(), update, ontology, graph);
        p.supersedes = supersedes;
        self.record(&JournalEntry {
            proposal: id.clone(),
            event: UpdateStatus::Proposed,
            update: Some(p.update.clone()),
            rendering: Some(p.rendering.clone()),
            supersedes: p.supersedes.clone(),
        })?;
        self.proposals.insert(self.next, p);
        self.next += 1;
        Ok(id)
    }

    /// Renders and stores an update for review. Returns its id.
    pub fn propose(&mut self, update: GraphUpdate, ontology: &Ontology, graph: &Graph) -> Result<String, IngestError> {
        self.insert(update, None, ontology, graph)
    }

    /// Applies a verdict to a proposed update. Returns the id of the
    /// resulting proposal: the same one, or the amendment.
    pub fn review(&mut self, id: &str, verdict: Verdict, ontology: &Ontology, graph: &Graph) -> Result<String, IngestError> {
        let n = number(id).filter(|n| self.proposals.contains_key(n)).ok_or_else(|| IngestError::UnknownProposal(id.into()))?;
        let p = self.proposals.get_mut(&n).expect("checked");
        match verdict {
            Verdict::Accept => {
                p.update.accept()?;
                self.record(&self.transition(id, UpdateStatus::Accepted))?;
                Ok(id.into())
            }
            Verdict::Reject => {
                p.update.reject()?;
                self.record(&self.transition(id, UpdateStatus::Rejected))?;
                Ok(id.into())
            }
            Verdict::Amend(update) => {
                p.update.supersede()?;
                self.record(&self.transition(id, UpdateStatus::Superseded))?;
                let new_id = self.insert(update, Some(id.into()), ontology, graph)?;
                self.proposals.get_mut(&n).expect("checked").superseded_by = Some(new_id.clone());
                Ok(new_id)
            }
        }
    }

    /// Applies an accepted proposal to the graph.
    pub fn apply(&mut self, id: &str, graph: &mut Graph, policy: MissingRemovalPolicy) -> Result<ApplyReport, IngestError> {
        let p = self.proposals.get_mut(&number(id).unwrap_or(0)).ok_or_else(|| IngestError::UnknownProposal(id.into()))?;
        let report = graph.apply_update(&mut p.update, policy)?;
        self.record(&self.transition(id, UpdateStatus::Applied))?;
        Ok(report)
    }
}
