use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::Deserialize;

use super::SimError;

/// Outgoing edge of an activity. `to: None` ends the case.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Branch {
    #[serde(default)]
    pub to: Option<String>,
    #[serde(default = "one")]
    pub p: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ActivitySpec {
    pub id: String,
    /// Uniform duration bounds in seconds, inclusive.
    pub duration: [i64; 2],
    #[serde(default)]
    pub start: bool,
    /// Empty means the activity ends the case.
    #[serde(default)]
    pub next: Vec<Branch>,
}

/// A process model of activities joined by sequence and exclusive-choice edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    activities: BTreeMap<String, ActivitySpec>,
    start: String,
}

const PROBABILITY_TOLERANCE: f64 = 1e-9;

impl ProcessModel {
    pub fn new(specs: Vec<ActivitySpec>) -> Result<ProcessModel, SimError> {
        let invalid = |m: String| SimError::InvalidModel(m);
        let mut activities = BTreeMap::new();
        for spec in specs {
            if spec.duration[0] < 0 || spec.duration[0] > spec.duration[1] {
                return Err(invalid(format!("activity {} has invalid duration bounds", spec.id)));
            }
            if activities.insert(spec.id.clone(), spec.clone()).is_some() {
                return Err(invalid(format!("activity {} declared twice", spec.id)));
            }
        }
        let starts: Vec<&String> = activities.values().filter(|a| a.start).map(|a| &a.id).collect();
        let start = match starts.as_slice() {
            [s] => (*s).clone(),
            _ => return Err(invalid(format!("expected exactly one start activity, found {}", starts.len()))),
        };
        let mut has_end = false;
        for a in activities.values() {
            if a.next.is_empty() {
                has_end = true;
                continue;
            }
            let total: f64 = a.next.iter().map(|b| b.p).sum();
            if a.next.iter().any(|b| !(0.0..=1.0).contains(&b.p)) || (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(invalid(format!("branch probabilities of {} sum to {total}, expected 1", a.id)));
            }
            for b in &a.next {
                match &b.to {
                    None => has_end = true,
                    Some(t) if !activities.contains_key(t) => {
                        return Err(invalid(format!("{} branches to unknown activity {t}", a.id)));
                    }
                    Some(_) => {}
                }
            }
        }
        if !has_end {
            return Err(invalid("model has no end".into()));
        }
        let model = ProcessModel { activities, start };
        let reachable = model.reachable();
        if let Some(a) = model.activities.keys().find(|a| !reachable.contains(*a)) {
            return Err(invalid(format!("activity {a} is unreachable from the start")));
        }
        Ok(model)
    }

    fn reachable(&self) -> BTreeSet<String> {
        let mut seen = BTreeSet::from([self.start.clone()]);
        let mut queue = VecDeque::from([self.start.clone()]);
        while let Some(a) = queue.pop_front() {
            for b in &self.activities[&a].next {
                if let Some(t) = &b.to {
                    if seen.insert(t.clone()) {
                        queue.push_back(t.clone());
                    }
                }
            }
        }
        seen
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn activity(&self, id: &str) -> Option<&ActivitySpec> {
        self.activities.get(id)
    }

    pub fn activities(&self) -> impl Iterator<Item = &ActivitySpec> {
        self.activities.values()
    }

    pub fn sample_duration(&self, id: &str, rng: &mut impl Rng) -> i64 {
        let [lo, hi] = self.activities.get(id).map(|a| a.duration).unwrap_or([0, 0]);
        rng.gen_range(lo..=hi)
    }

    /// Picks the successor of `id`; `None` ends the case.
    pub fn sample_next(&self, id: &str, rng: &mut impl Rng) -> Option<String> {
        let a = self.activities.get(id)?;
        match a.next.as_slice() {
            [] => None,
            [only] => only.to.clone(),
            branches => {
                let x: f64 = rng.gen();
                let mut acc = 0.0;
                for b in branches {
                    acc += b.p;
                    if x < acc {
                        return b.to.clone();
                    }
                }
                branches.last().and_then(|b| b.to.clone())
            }
        }
    }
}
