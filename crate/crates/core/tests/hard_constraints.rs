mod common;

use kgalloc::demo;
use kgalloc::graph::{Graph, TripleSource};
use kgalloc::ontology::Ontology;
use kgalloc::reasoner::{Reasoner, ReasonerError};
use kgalloc::rules::parse_rules;
use kgalloc::term::{Term, Triple};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_fixtures_respect_hard_rules(seed in any::<u64>()) {
        common::check_hard_fixture(seed).map_err(TestCaseError::fail)?;
    }
}

fn demo_reasoner() -> (Graph, Reasoner) {
    let onto = Ontology::parse(demo::ONTOLOGY).unwrap();
    let rules = parse_rules(demo::RULES, &onto).unwrap();
    (Graph::parse(demo::GRAPH).unwrap(), Reasoner::new(onto, rules))
}

#[test]
fn validator_cannot_assess_fraud_in_the_same_case() {
    let (mut g, reasoner) = demo_reasoner();
    let task = Term::iri("task-7");
    let validator = g.object(&Term::iri("task-6"), &Term::iri("performedBy")).unwrap();
    g.insert(Triple::new(Term::iri("W_Assess_potential_fraud"), Term::iri("canBeExecutedBy"), validator.clone()).unwrap());
    match reasoner.decide_human(&g, &task, &validator, 0) {
        Err(ReasonerError::IneligibleSelection { messages, .. }) => {
            assert!(messages.iter().any(|m| m.contains("separation of concerns")), "{messages:?}");
        }
        other => panic!("expected rejection, got {other:?}"),
    }
    let ranking = reasoner.assess_all(&g, &task).unwrap();
    assert!(ranking.ineligible.iter().any(|a| a.resource == validator));
    assert_ne!(reasoner.decide_automatic(&g, &task, 0).unwrap().chosen, validator);
}

#[test]
fn fixtures_exercise_both_outcomes() {
    use rand::SeedableRng;
    let (mut some_ineligible, mut none_eligible) = (0, 0);
    for seed in 0..200 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let fx = common::random_alloc_fixture(&mut rng, None);
        let r = fx.reasoner.assess_all(&fx.graph, &fx.task).unwrap();
        some_ineligible += usize::from(!r.ineligible.is_empty());
        none_eligible += usize::from(r.eligible.is_empty());
    }
    assert!(some_ineligible >= 30, "{some_ineligible}");
    assert!(none_eligible >= 5, "{none_eligible}");
}
