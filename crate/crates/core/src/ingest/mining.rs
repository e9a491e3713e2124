//! Resource behaviour indicators mined from event records.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use super::{EventRecord, IngestError};
use crate::graph::GraphUpdate;
use crate::term::{Term, Triple};
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseAttribute {
    ApplicationType,
    LoanGoal,
}

impl CaseAttribute {
    fn value(self, r: &EventRecord) -> &str {
        match self {
            CaseAttribute::ApplicationType => &r.application_type,
            CaseAttribute::LoanGoal => &r.loan_goal,
        }
    }
}

impl FromStr for CaseAttribute {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ApplicationType" | "application_type" | "application-type" => Ok(CaseAttribute::ApplicationType),
            "LoanGoal" | "loan_goal" | "loan-goal" => Ok(CaseAttribute::LoanGoal),
            other => Err(IngestError::UnknownAttribute(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeniorityConfig {
    /// Scale levels from lowest to highest.
    pub levels: [String; 3],
    /// Quantiles separating the low and high bands.
    pub lower_quantile: f64,
    pub upper_quantile: f64,
}

impl Default for SeniorityConfig {
    fn default() -> Self {
        SeniorityConfig {
            levels: ["Low".into(), "Medium".into(), "High".into()],
            lower_quantile: 1.0 / 3.0,
            upper_quantile: 2.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertiseConfig {
    pub threshold: f64,
    /// Minimum number of tasks on cases with the value.
    pub floor: usize,
}

impl Default for ExpertiseConfig {
    fn default() -> Self {
        ExpertiseConfig { threshold: 0.8, floor: 5 }
    }
}

fn id(name: &str) -> Option<Term> {
    Term::id(name).ok()
}

/// Per resource: the mean of its task count normalised by the maximum and
/// its activity breadth normalised by the number of activities in the log.
pub fn seniority_indicators(records: &[EventRecord]) -> BTreeMap<String, f64> {
    let activities: BTreeSet<&str> = records.iter().map(|r| r.activity.as_str()).collect();
    let mut counts: BTreeMap<&str, (usize, BTreeSet<&str>)> = BTreeMap::new();
    for r in records {
        let e = counts.entry(&r.resource).or_default();
        e.0 += 1;
        e.1.insert(&r.activity);
    }
    let max = counts.values().map(|(n, _)| *n).max().unwrap_or(1) as f64;
    let total = activities.len().max(1) as f64;
    counts
        .into_iter()
        .map(|(r, (n, acts))| (r.to_string(), (n as f64 / max + acts.len() as f64 / total) / 2.0))
        .collect()
}

/// Linear-interpolation quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One `seniority` triple per resource. Below the lower quantile is the
/// lowest level, above the upper quantile the highest, anything between or
/// on a boundary the middle one. A lone resource is the highest level.
pub fn derive_seniority(records: &[EventRecord], config: &SeniorityConfig) -> GraphUpdate {
    let indicators = seniority_indicators(records);
    let mut sorted: Vec<f64> = indicators.values().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let pred = Term::iri(vocab::SENIORITY);
    let mut additions = Vec::new();
    if !sorted.is_empty() {
        let q1 = quantile(&sorted, config.lower_quantile);
        let q2 = quantile(&sorted, config.upper_quantile);
        for (resource, x) in &indicators {
            let level = if indicators.len() == 1 || *x > q2 {
                &config.levels[2]
            } else if *x < q1 {
                &config.levels[0]
            } else {
                &config.levels[1]
            };
            if let (Some(r), Some(l)) = (id(resource), id(level)) {
                additions.push(Triple::new(r, pred.clone(), l).expect("identifier triple"));
            }
        }
    }
    GraphUpdate::additions(additions, format!("mined seniority from {} records", records.len()))
}

/// `expertFor` from a resource to an attribute value when the value's share
/// of the resource's tasks reaches the threshold and its count the floor.
pub fn derive_expertise(
    records: &[EventRecord],
    attribute: CaseAttribute,
    config: ExpertiseConfig,
) -> Result<GraphUpdate, IngestError> {
    if !(config.threshold > 0.0 && config.threshold <= 1.0) {
        return Err(IngestError::InvalidThreshold(config.threshold));
    }
    let mut per_resource: BTreeMap<&str, (usize, BTreeMap<&str, usize>)> = BTreeMap::new();
    for r in records {
        let e = per_resource.entry(&r.resource).or_default();
        e.0 += 1;
        *e.1.entry(attribute.value(r)).or_default() += 1;
    }
    let pred = Term::iri(vocab::EXPERT_FOR);
    let mut additions = Vec::new();
    for (resource, (total, values)) in per_resource {
        for (value, n) in values {
            if n >= config.floor && n as f64 / total as f64 >= config.threshold {
                if let (Some(r), Some(v)) = (id(resource), id(value)) {
                    additions.push(Triple::new(r, pred.clone(), v).expect("identifier triple"));
                }
            }
        }
    }
    Ok(GraphUpdate::additions(additions, format!("mined {attribute:?} expertise from {} records", records.len())))
}

/// `canBeExecutedBy` from each activity to every resource seen executing it.
pub fn derive_permissions(records: &[EventRecord]) -> GraphUpdate {
    let pairs: BTreeSet<(&str, &str)> = records.iter().map(|r| (r.activity.as_str(), r.resource.as_str())).collect();
    let pred = Term::iri(vocab::CAN_BE_EXECUTED_BY);
    let additions = pairs
        .into_iter()
        .filter_map(|(a, r)| Some(Triple::new(id(a)?, pred.clone(), id(r)?).expect("identifier triple")))
        .collect();
    GraphUpdate::additions(additions, format!("mined permissions from {} records", records.len()))
}
