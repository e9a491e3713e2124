//! The bundled loan-application demo: graph, ontology, rules and scenario.

use crate::graph::Graph;
use crate::ontology::Ontology;
use crate::reasoner::Reasoner;
use crate::rules::parse_rules;
use crate::LoadError;

pub const GRAPH: &str = include_str!("../fixtures/demo/graph.kg");
pub const ONTOLOGY: &str = include_str!("../fixtures/demo/ontology.kgo");
pub const RULES: &str = include_str!("../fixtures/demo/rules.kgr");
pub const SCENARIO: &str = include_str!("../fixtures/demo/scenario.toml");

pub struct Demo {
    pub graph: Graph,
    pub reasoner: Reasoner,
}

pub fn load() -> Result<Demo, LoadError> {
    let ontology = Ontology::parse(ONTOLOGY)?;
    let rules = parse_rules(RULES, &ontology)?;
    let graph = Graph::parse(GRAPH)?;
    Ok(Demo { graph, reasoner: Reasoner::new(ontology, rules) })
}
