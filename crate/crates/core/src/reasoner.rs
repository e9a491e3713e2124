//! Allocation reasoning: which resources may take a task, how each candidate
//! scores against the rules, and the explained decision.
//!
//! Each candidate is assessed against the graph plus one hypothetical
//! `(task, performedBy, resource)` triple. Hard-rule matches disqualify the
//! candidate; soft-rule matches add their score. Eligible candidates are
//! ranked by score (highest first), ties broken by resource id.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, TripleSource, WithTriple};
use crate::ontology::Ontology;
use crate::rules::{Binding, Matcher, Polarity, RuleSet, Severity};
use crate::term::{Term, Triple};
use crate::vocab;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReasonerError {
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("no eligible resource for {0}")]
    NoEligibleResource(String),
    #[error("{resource} is not eligible for {task}: {}", messages.join("; "))]
    IneligibleSelection { task: String, resource: String, messages: Vec<String> },
}

/// One rule match contributing to an assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub rule: String,
    pub polarity: Polarity,
    pub severity: Severity,
    /// Score this match contributes; zero for hard rules.
    pub score: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub task: Term,
    pub resource: Term,
    /// Soft-rule matches, in rule order.
    pub findings: Vec<Finding>,
    pub hard_violations: Vec<Finding>,
    pub score: f64,
}

impl Assessment {
    pub fn eligible(&self) -> bool {
        self.hard_violations.is_empty()
    }
}

/// Scores compared at this resolution so that re-associated sums of the same
/// findings order identically.
fn score_key(score: f64) -> i64 {
    (score * 1e6).round() as i64
}

fn rank_order(a: &Assessment, b: &Assessment) -> std::cmp::Ordering {
    score_key(b.score).cmp(&score_key(a.score)).then_with(|| a.resource.cmp(&b.resource))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub task: Term,
    /// Permitted and idle resources.
    pub available: BTreeSet<Term>,
    /// Best first.
    pub eligible: Vec<Assessment>,
    /// Disqualified candidates, kept for explanation, in resource order.
    pub ineligible: Vec<Assessment>,
}

impl Ranking {
    /// Eligible candidates in rank order followed by the ineligible ones.
    pub fn all(&self) -> impl Iterator<Item = &Assessment> {
        self.eligible.iter().chain(&self.ineligible)
    }

    pub fn get(&self, resource: &Term) -> Option<&Assessment> {
        self.all().find(|a| &a.resource == resource)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionMode {
    Automatic,
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationDecision {
    pub task: Term,
    pub case: Option<Term>,
    pub activity: Term,
    pub chosen: Term,
    pub mode: DecisionMode,
    pub timestamp: i64,
    /// True when a human picked something other than the top-ranked candidate.
    pub diverged: bool,
    pub available: BTreeSet<Term>,
    pub candidates: Vec<Assessment>,
    pub explanation: String,
}

impl AllocationDecision {
    /// The decision's journal line (JSON, no trailing newline).
    pub fn journal_line(&self) -> String {
        serde_json::to_string(self).expect("decision serializes")
    }
}

#[derive(Debug, Clone)]
pub struct Reasoner {
    ontology: Ontology,
    rules: RuleSet,
}

impl Reasoner {
    pub fn new(ontology: Ontology, rules: RuleSet) -> Reasoner {
        Reasoner { ontology, rules }
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn with_rules(&self, rules: RuleSet) -> Reasoner {
        Reasoner { ontology: self.ontology.clone(), rules }
    }

    fn activity_of(&self, g: &Graph, task: &Term) -> Result<Term, ReasonerError> {
        g.object(task, &Term::iri(vocab::INSTANCE_OF)).ok_or_else(|| ReasonerError::UnknownTask(task.plain()))
    }

    /// Resources permitted for the task's activity, directly or through a
    /// role they hold, that are not currently busy.
    pub fn eligible_resources(&self, g: &Graph, task: &Term) -> Result<BTreeSet<Term>, ReasonerError> {
        let activity = self.activity_of(g, task)?;
        let has_role = Term::iri(vocab::HAS_ROLE);
        let role_class = Term::iri(vocab::CLASS_ROLE);
        let type_pred = Term::iri(vocab::TYPE);
        let busy = Term::iri(vocab::BUSY);
        let mut out = BTreeSet::new();
        for assignee in g.objects(&activity, &Term::iri(vocab::CAN_BE_EXECUTED_BY)) {
            let holders = g.subjects(&has_role, &assignee);
            let typed_role = Triple::new(assignee.clone(), type_pred.clone(), role_class.clone())
                .is_ok_and(|t| g.contains(&t));
            if holders.is_empty() && !typed_role {
                out.insert(assignee);
            } else {
                out.extend(holders);
            }
        }
        out.retain(|r| {
            Triple::new(r.clone(), busy.clone(), Term::boolean(true)).map_or(true, |t| !g.contains(&t))
        });
        Ok(out)
    }

    /// Evaluates every rule for the hypothetical assignment. The graph is
    /// only read; the assignment lives in an overlay.
    pub fn assess(&self, g: &Graph, task: &Term, resource: &Term) -> Assessment {
        let hypothetical = Triple::new(task.clone(), Term::iri(vocab::PERFORMED_BY), resource.clone());
        let mut findings = Vec::new();
        let mut hard_violations = Vec::new();
        if let Ok(extra) = hypothetical {
            let view = WithTriple::new(g, extra);
            let matcher = Matcher::new(&view, &self.ontology);
            for rule in &self.rules {
                let mut seed = Binding::new();
                seed.insert(rule.task_var.clone(), task.clone());
                seed.insert(rule.resource_var.clone(), resource.clone());
                for m in matcher.evaluate(rule, &seed) {
                    let f = Finding {
                        rule: rule.id.clone(),
                        polarity: rule.polarity,
                        severity: rule.severity,
                        score: rule.effective_score(),
                        message: m.message,
                    };
                    match rule.severity {
                        Severity::Hard => hard_violations.push(f),
                        Severity::Soft => findings.push(f),
                    }
                }
            }
        }
        let score = findings.iter().map(|f| f.score).sum();
        Assessment { task: task.clone(), resource: resource.clone(), findings, hard_violations, score }
    }

    /// Assesses every available resource. Never fails for lack of eligible
    /// candidates; see [`Reasoner::rank`] for that.
    pub fn assess_all(&self, g: &Graph, task: &Term) -> Result<Ranking, ReasonerError> {
        let available = self.eligible_resources(g, task)?;
        let (mut eligible, mut ineligible): (Vec<_>, Vec<_>) =
            available.iter().map(|r| self.assess(g, task, r)).partition(Assessment::eligible);
        eligible.sort_by(rank_order);
        ineligible.sort_by(|a, b| a.resource.cmp(&b.resource));
        Ok(Ranking { task: task.clone(), available, eligible, ineligible })
    }

    pub fn rank(&self, g: &Graph, task: &Term) -> Result<Ranking, ReasonerError> {
        let ranking = self.assess_all(g, task)?;
        if ranking.eligible.is_empty() {
            return Err(ReasonerError::NoEligibleResource(task.plain()));
        }
        Ok(ranking)
    }

    pub fn decide_automatic(&self, g: &Graph, task: &Term, timestamp: i64) -> Result<AllocationDecision, ReasonerError> {
        let ranking = self.rank(g, task)?;
        let chosen = ranking.eligible[0].resource.clone();
        Ok(self.decision(g, ranking, chosen, DecisionMode::Automatic, timestamp))
    }

    /// Records a human choice. Soft scores may be overruled; hard
    /// violations may not.
    pub fn decide_human(
        &self,
        g: &Graph,
        task: &Term,
        selection: &Term,
        timestamp: i64,
    ) -> Result<AllocationDecision, ReasonerError> {
        let ranking = self.assess_all(g, task)?;
        let ineligible = |messages| ReasonerError::IneligibleSelection {
            task: task.plain(),
            resource: selection.plain(),
            messages,
        };
        match ranking.get(selection) {
            None => Err(ineligible(vec![format!(
                "{} is not permitted or not available for {}",
                selection.plain(),
                task.plain()
            )])),
            Some(a) if !a.eligible() => {
                Err(ineligible(a.hard_violations.iter().map(|f| f.message.clone()).collect()))
            }
            Some(_) => Ok(self.decision(g, ranking, selection.clone(), DecisionMode::Human, timestamp)),
        }
    }

    fn decision(
        &self,
        g: &Graph,
        ranking: Ranking,
        chosen: Term,
        mode: DecisionMode,
        timestamp: i64,
    ) -> AllocationDecision {
        let task = ranking.task.clone();
        let activity = g.object(&task, &Term::iri(vocab::INSTANCE_OF)).unwrap_or_else(|| task.clone());
        let case = g.object(&task, &Term::iri(vocab::PART_OF));
        let diverged = ranking.eligible.first().is_some_and(|top| top.resource != chosen);
        let chosen_assessment = ranking.get(&chosen).cloned();
        let explanation = explanation_block(g, &task, case.as_ref(), &activity, &ranking.available, &chosen, chosen_assessment.as_ref());
        AllocationDecision {
            candidates: ranking.all().cloned().collect(),
            available: ranking.available,
            task,
            case,
            activity,
            chosen,
            mode,
            timestamp,
            diverged,
            explanation,
        }
    }
}

fn explanation_block(
    g: &Graph,
    task: &Term,
    case: Option<&Term>,
    activity: &Term,
    available: &BTreeSet<Term>,
    chosen: &Term,
    assessment: Option<&Assessment>,
) -> String {
    let mut out = String::new();
    match case {
        Some(c) => writeln!(out, "{} {}: {}", g.label(c), task.plain(), g.label(activity)),
        None => writeln!(out, "{}: {}", task.plain(), g.label(activity)),
    }
    .expect("write to string");
    let names: Vec<String> = available.iter().map(|r| format!("'{}'", r.plain())).collect();
    writeln!(out, "Resources Available: {{{}}}", names.join(", ")).expect("write to string");
    writeln!(out, "Assigning: {} to {} considering the following:", chosen.plain(), task.plain())
        .expect("write to string");
    for f in assessment.map(|a| a.findings.as_slice()).unwrap_or_default() {
        writeln!(out, "    {}", f.message).expect("write to string");
    }
    out
}
