//! Scenario configuration (TOML) and seeded case generation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::model::{ActivitySpec, ProcessModel};
use super::SimError;
use crate::graph::Graph;
use crate::ontology::Ontology;
use crate::reasoner::Reasoner;
use crate::rules::parse_rules;
use crate::term::Term;
use crate::{demo, LoadError};

/// Knowledge files, relative to the scenario file. When absent the bundled
/// demo knowledge is used.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct KnowledgeFiles {
    pub graph: PathBuf,
    pub ontology: PathBuf,
    pub rules: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AttributeConfig {
    /// Weights per application type identifier.
    pub application_type: BTreeMap<String, f64>,
    /// Weights per loan goal identifier.
    pub loan_goal: BTreeMap<String, f64>,
    /// Uniform bounds for the requested amount.
    pub requested_amount: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HistoryConfig {
    /// Completed tasks of one activity after which a resource is marked as
    /// experienced in it.
    #[serde(default = "default_experience")]
    pub experience_threshold: u32,
}

fn default_experience() -> u32 {
    3
}

impl Default for HistoryConfig {
    fn default() -> Self {
        HistoryConfig { experience_threshold: default_experience() }
    }
}

/// A task already present in the graph that the run starts by enabling.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ResumeTask {
    pub case: String,
    pub task: String,
    pub activity: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub cases: usize,
    pub start_time: i64,
    /// Uniform bounds on seconds between case arrivals.
    pub arrival_interval: [i64; 2],
    #[serde(default)]
    pub files: Option<KnowledgeFiles>,
    pub attributes: AttributeConfig,
    #[serde(default)]
    pub history: HistoryConfig,
    pub activities: Vec<ActivitySpec>,
    #[serde(default)]
    pub resume: Vec<ResumeTask>,
    #[serde(skip)]
    base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseInstance {
    pub id: String,
    pub application_type: Term,
    pub loan_goal: Term,
    pub requested_amount: f64,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, SimError> {
        let s: Scenario = toml::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Scenario(format!("{}: {e}", path.display())))?;
        let mut s = Scenario::parse(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    pub fn demo() -> Scenario {
        Scenario::parse(demo::SCENARIO).expect("bundled scenario is valid")
    }

    fn check(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Scenario(m.to_string()));
        if self.arrival_interval[0] < 0 || self.arrival_interval[0] > self.arrival_interval[1] {
            return bad("arrival_interval must be [min, max] with 0 <= min <= max");
        }
        let [lo, hi] = self.attributes.requested_amount;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad("requested_amount must be [min, max]");
        }
        for (name, dist) in [
            ("application_type", &self.attributes.application_type),
            ("loan_goal", &self.attributes.loan_goal),
        ] {
            if dist.is_empty() || dist.values().any(|w| !w.is_finite() || *w < 0.0) || dist.values().sum::<f64>() <= 0.0 {
                return Err(SimError::Scenario(format!("{name} needs non-negative weights with a positive sum")));
            }
            if let Some(k) = dist.keys().find(|k| Term::id(k).is_err()) {
                return Err(SimError::Scenario(format!("{name} value {k:?} is not an identifier")));
            }
        }
        self.model()?;
        Ok(())
    }

    pub fn model(&self) -> Result<ProcessModel, SimError> {
        ProcessModel::new(self.activities.clone())
    }

    /// Loads the graph and builds the reasoner this scenario runs against.
    pub fn knowledge(&self) -> Result<(Graph, Reasoner), LoadError> {
        let Some(files) = &self.files else {
            let d = demo::load()?;
            return Ok((d.graph, d.reasoner));
        };
        let base = self.base_dir.clone().unwrap_or_default();
        let ontology = Ontology::load(&base.join(&files.ontology))?;
        let rules_path = base.join(&files.rules);
        let rules_text = std::fs::read_to_string(&rules_path)
            .map_err(|e| LoadError::Other(format!("{}: {e}", rules_path.display())))?;
        let rules = parse_rules(&rules_text, &ontology)?;
        let graph = Graph::load(&base.join(&files.graph))?;
        Ok((graph, Reasoner::new(ontology, rules)))
    }
}

fn sample_weighted<'a>(dist: &'a BTreeMap<String, f64>, rng: &mut impl Rng) -> &'a str {
    let total: f64 = dist.values().sum();
    let x = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (k, w) in dist {
        acc += w;
        if x < acc {
            return k;
        }
    }
    dist.iter().rev().find(|(_, w)| **w > 0.0).map(|(k, _)| k.as_str()).unwrap_or_default()
}

/// Draws `count` cases with arrival times. Case ids start at `case-{first}`.
/// Deterministic for a fixed seed.
pub fn generate_cases(
    attributes: &AttributeConfig,
    arrival_interval: [i64; 2],
    start_time: i64,
    count: usize,
    first: u64,
    seed: u64,
) -> Vec<(CaseInstance, i64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = start_time;
    (0..count)
        .map(|i| {
            t += rng.gen_range(arrival_interval[0]..=arrival_interval[1]);
            let application_type = Term::iri(sample_weighted(&attributes.application_type, &mut rng));
            let loan_goal = Term::iri(sample_weighted(&attributes.loan_goal, &mut rng));
            let [lo, hi] = attributes.requested_amount;
            let amount = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            let case = CaseInstance {
                id: format!("case-{}", first + i as u64),
                application_type,
                loan_goal,
                requested_amount: (amount * 100.0).round() / 100.0,
            };
            (case, t)
        })
        .collect()
}
