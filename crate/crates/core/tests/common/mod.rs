//! Independent oracles and fixture generators shared by the integration
//! tests. Nothing here calls the matcher or the reasoner.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use kgalloc::graph::{Graph, TripleSource};
use kgalloc::ontology::{ClassDef, Ontology, OrderedScale};
use kgalloc::reasoner::Reasoner;
use kgalloc::rules::{Binding, Filter, FilterOp, PatternAtom, PatternTerm, Polarity, Rule, RuleSet, Severity, Variable};
use kgalloc::term::{Term, Triple};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn id(s: &str) -> Term {
    Term::iri(s)
}

pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Reflexive-transitive superclasses, from each class's declared parent.
fn superclasses(onto: &Ontology, class: &str) -> BTreeSet<String> {
    let parents: BTreeMap<&str, &str> =
        onto.classes().filter_map(|c| c.parent.as_deref().map(|p| (c.name.as_str(), p))).collect();
    let mut out = BTreeSet::from([class.to_string()]);
    let mut cur = class;
    while let Some(p) = parents.get(cur) {
        if !out.insert(p.to_string()) {
            break;
        }
        cur = p;
    }
    out
}

fn number(t: &Term) -> Option<f64> {
    match t {
        Term::Int(i) => Some(*i as f64),
        Term::Dec(d) => Some(d.into_inner()),
        _ => None,
    }
}

fn atom_holds(g: &Graph, onto: &Ontology, s: &Term, p: &Term, o: &Term, closure: bool) -> bool {
    if closure && p.as_id() == Some("type") {
        if let Some(c) = o.as_id() {
            return g
                .matching(Some(s), Some(p), None)
                .iter()
                .filter_map(|t| t.object().as_id())
                .any(|d| superclasses(onto, d).contains(c));
        }
    }
    Triple::new(s.clone(), p.clone(), o.clone()).is_ok_and(|t| g.contains(&t))
}

fn filter_holds(onto: &Ontology, f: &Filter, b: &Binding) -> bool {
    let l = &b[&f.left];
    let r = match &f.right {
        PatternTerm::Var(v) => &b[v],
        PatternTerm::Const(c) => c,
    };
    let pos = |t: &Term| {
        let scale = onto.scale(f.scale.as_deref()?)?;
        scale.levels().iter().position(|x| x == t)
    };
    match f.op {
        FilterOp::Eq => l == r,
        FilterOp::Neq => l != r,
        FilterOp::ScaleGreaterEq => matches!((pos(l), pos(r)), (Some(a), Some(b)) if a >= b),
        FilterOp::ScaleLess => matches!((pos(l), pos(r)), (Some(a), Some(b)) if a < b),
        FilterOp::NumGreaterEq => matches!((number(l), number(r)), (Some(a), Some(b)) if a >= b),
        FilterOp::NumLess => matches!((number(l), number(r)), (Some(a), Some(b)) if a < b),
    }
}

/// Every total binding extending `seed`, by enumerating candidate values
/// for each free variable and checking ground atoms as they appear.
pub fn oracle_bindings(g: &Graph, onto: &Ontology, rule: &Rule, seed: &Binding) -> BTreeSet<Binding> {
    let closure = onto.classes().any(|c| c.parent.is_some());
    let mut domain: BTreeSet<Term> = BTreeSet::new();
    for t in g.iter() {
        domain.insert(t.subject().clone());
        domain.insert(t.object().clone());
        if t.predicate().as_id() == Some("type") {
            if let Some(d) = t.object().as_id() {
                domain.extend(superclasses(onto, d).iter().map(|c| id(c)));
            }
        }
    }
    let domain: Vec<Term> = domain.into_iter().collect();
    let vars: Vec<Variable> = rule.variables().into_iter().filter(|v| !seed.contains_key(v)).collect();
    let mut out = BTreeSet::new();
    let mut b = seed.clone();
    enumerate(g, onto, rule, closure, &domain, &vars, 0, &mut b, &mut out);
    out
}

fn ground(pt: &PatternTerm, b: &Binding) -> Option<Term> {
    match pt {
        PatternTerm::Const(c) => Some(c.clone()),
        PatternTerm::Var(v) => b.get(v).cloned(),
    }
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    g: &Graph,
    onto: &Ontology,
    rule: &Rule,
    closure: bool,
    domain: &[Term],
    vars: &[Variable],
    i: usize,
    b: &mut Binding,
    out: &mut BTreeSet<Binding>,
) {
    for a in &rule.atoms {
        if let (Some(s), Some(o)) = (ground(&a.subject, b), ground(&a.object, b)) {
            if !atom_holds(g, onto, &s, &a.predicate, &o, closure) {
                return;
            }
        }
    }
    if i == vars.len() {
        if rule.filters.iter().all(|f| filter_holds(onto, f, b)) {
            out.insert(b.clone());
        }
        return;
    }
    for t in domain {
        b.insert(vars[i].clone(), t.clone());
        enumerate(g, onto, rule, closure, domain, vars, i + 1, b, out);
    }
    b.remove(&vars[i]);
}

/// Oracle score and hard-violation flag for a hypothetical assignment.
pub fn oracle_assess(g: &Graph, onto: &Ontology, rules: &RuleSet, task: &Term, resource: &Term) -> (f64, bool) {
    let mut with = g.clone();
    with.insert(Triple::new(task.clone(), id("performedBy"), resource.clone()).unwrap());
    let mut score = 0.0;
    let mut hard = false;
    for r in rules.iter() {
        let seed: Binding = [(r.task_var.clone(), task.clone()), (r.resource_var.clone(), resource.clone())].into();
        let n = oracle_bindings(&with, onto, r, &seed).len();
        match r.severity {
            Severity::Hard => hard |= n > 0,
            Severity::Soft => score += n as f64 * r.score,
        }
    }
    (score, hard)
}

/// A random matcher instance: graph of at most 40 nodes, pattern of 1 to 5
/// atoms with optional filters, and a partial seed binding.
pub struct MatchInstance {
    pub graph: Graph,
    pub ontology: Ontology,
    pub rule: Rule,
    pub seed: Binding,
}

fn class(name: &str, parent: Option<&str>) -> ClassDef {
    ClassDef { name: name.into(), description: String::new(), parent: parent.map(String::from) }
}

pub fn random_match_instance(rng: &mut impl Rng) -> MatchInstance {
    let mut ontology = Ontology::new();
    ontology.add_class(class("C0", None)).unwrap();
    let hierarchy = rng.gen_bool(0.7);
    for i in 1..4 {
        let parent = format!("C{}", rng.gen_range(0..i));
        ontology.add_class(class(&format!("C{i}"), hierarchy.then_some(parent.as_str()))).unwrap();
    }
    let levels: Vec<Term> = ["L0", "L1", "L2"].iter().map(|l| id(l)).collect();
    ontology.add_scale(OrderedScale::new("S", levels.clone()).unwrap()).unwrap();

    let n_nodes = rng.gen_range(2..=8);
    let nodes: Vec<Term> = (0..n_nodes).map(|i| id(&format!("n{i}"))).collect();
    let preds: Vec<Term> = ["p0", "p1", "p2", "rank"].iter().map(|p| id(p)).collect();
    let literals: Vec<Term> = (0..3).map(|i| Term::int(rng.gen_range(0..5) + i)).collect();
    let classes: Vec<Term> = (0..4).map(|i| id(&format!("C{i}"))).collect();

    let mut graph = Graph::new();
    for _ in 0..rng.gen_range(8..=40) {
        let s = nodes.choose(rng).unwrap().clone();
        let t = match rng.gen_range(0..10) {
            0..=1 => Triple::new(s, id("type"), classes.choose(rng).unwrap().clone()),
            2 => Triple::new(s, id("rank"), levels.choose(rng).unwrap().clone()),
            3 => Triple::new(s, id("p2"), literals.choose(rng).unwrap().clone()),
            _ => Triple::new(s, preds[rng.gen_range(0..2)].clone(), nodes.choose(rng).unwrap().clone()),
        };
        graph.insert(t.unwrap());
    }

    let vars: Vec<Variable> = (0..4).map(|i| Variable::new(&format!("v{i}"))).collect();
    let pick_var = |rng: &mut dyn rand::RngCore| PatternTerm::Var(vars[rng.gen_range(0..vars.len())].clone());
    let mut atoms = Vec::new();
    let max_atoms = rng.gen_range(1..=5);
    for _ in 0..rng.gen_range(1..=max_atoms) {
        let subject = if rng.gen_bool(0.8) { pick_var(rng) } else { PatternTerm::Const(nodes.choose(rng).unwrap().clone()) };
        let (predicate, object) = match rng.gen_range(0..10) {
            0..=1 => {
                let o = if rng.gen_bool(0.5) { pick_var(rng) } else { PatternTerm::Const(classes.choose(rng).unwrap().clone()) };
                (id("type"), o)
            }
            2 => (id("rank"), pick_var(rng)),
            3 => (id("p2"), pick_var(rng)),
            _ => {
                let o = if rng.gen_bool(0.8) { pick_var(rng) } else { PatternTerm::Const(nodes.choose(rng).unwrap().clone()) };
                (preds[rng.gen_range(0..2)].clone(), o)
            }
        };
        atoms.push(PatternAtom::new(subject, predicate, object));
    }
    let used: Vec<Variable> = atoms.iter().flat_map(|a| a.variables().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut filters = Vec::new();
    if !used.is_empty() {
        for _ in 0..rng.gen_range(0..=2) {
            let left = used.choose(rng).unwrap().clone();
            let right = if rng.gen_bool(0.6) {
                PatternTerm::Var(used.choose(rng).unwrap().clone())
            } else {
                PatternTerm::Const(match rng.gen_range(0..3) {
                    0 => levels.choose(rng).unwrap().clone(),
                    1 => Term::int(rng.gen_range(0..6)),
                    _ => nodes.choose(rng).unwrap().clone(),
                })
            };
            let op = *[
                FilterOp::Eq,
                FilterOp::Neq,
                FilterOp::ScaleGreaterEq,
                FilterOp::ScaleLess,
                FilterOp::NumGreaterEq,
                FilterOp::NumLess,
            ]
            .choose(rng)
            .unwrap();
            let scale = op.is_scale().then(|| "S".to_string());
            filters.push(Filter { op, left, right, scale });
        }
    }
    let rule = Rule {
        id: "random".into(),
        task_var: vars[0].clone(),
        resource_var: vars[1].clone(),
        atoms,
        filters,
        polarity: Polarity::Positive,
        severity: Severity::Soft,
        score: 1.0,
        message: "m".into(),
    };
    let mut seed = Binding::new();
    for v in &used {
        if rng.gen_bool(0.15) {
            seed.insert(v.clone(), nodes.choose(rng).unwrap().clone());
        }
    }
    MatchInstance { graph, ontology, rule, seed }
}

pub const ALLOC_ONTOLOGY: &str = r#"
class Resource
class Person {
  parent Resource
}
class Task
class Activity
scale Seniority {
  levels Low Medium High
}
"#;

/// Two hard rules (separation of concerns, a blocking flag) and three soft
/// rules with scores that are multiples of 0.25.
pub const ALLOC_RULES: &str = r#"
rule soc {
  task-var ?t
  resource-var ?r
  pattern {
    ?t partOf ?c
    ?t instanceOf ?a
    ?a inGroup ?g
    ?a2 inGroup ?g
    ?t2 instanceOf ?a2
    ?t2 partOf ?c
    ?t2 performedBy ?r
  }
  filter neq ?t ?t2
  polarity negative
  severity hard
  message "separation of concerns with {a2}"
}

rule blocked {
  task-var ?t
  resource-var ?r
  pattern {
    ?t performedBy ?r
    ?r flag blocked
  }
  polarity negative
  severity hard
  message "{r} is blocked"
}

rule senior {
  task-var ?t
  resource-var ?r
  pattern {
    ?t performedBy ?r
    ?t instanceOf ?a
    ?a needs ?n
    ?r seniority ?s
  }
  filter scaleGreaterEq ?s ?n Seniority
  polarity positive
  severity soft
  score 2.0
  message "seniority {s} suffices"
}

rule junior {
  task-var ?t
  resource-var ?r
  pattern {
    ?t performedBy ?r
    ?t instanceOf ?a
    ?a needs ?n
    ?r seniority ?s
  }
  filter scaleLess ?s ?n Seniority
  polarity negative
  severity soft
  score -2.0
  message "seniority {s} is too low"
}

rule experienced {
  task-var ?t
  resource-var ?r
  pattern {
    ?t performedBy ?r
    ?t instanceOf ?a
    ?t2 instanceOf ?a
    ?t2 performedBy ?r
  }
  filter neq ?t ?t2
  polarity positive
  severity soft
  score 0.5
  message "has done {a} before"
}
"#;

pub struct AllocFixture {
    pub graph: Graph,
    pub reasoner: Reasoner,
    pub task: Term,
}

pub fn alloc_ontology() -> Ontology {
    Ontology::parse(ALLOC_ONTOLOGY).unwrap()
}

pub fn alloc_rules(onto: &Ontology) -> RuleSet {
    kgalloc::rules::parse_rules(ALLOC_RULES, onto).unwrap()
}

/// A random allocation problem: one open task `t0` in case `c0`, up to six
/// resources, a random history, random permissions and busy flags.
pub fn random_alloc_fixture(rng: &mut impl Rng, rules: Option<RuleSet>) -> AllocFixture {
    let onto = alloc_ontology();
    let rules = rules.unwrap_or_else(|| alloc_rules(&onto));
    let levels = ["Low", "Medium", "High"];
    let n_res = rng.gen_range(1..=6);
    let resources: Vec<String> = (0..n_res).map(|i| format!("r{i}")).collect();
    let acts: Vec<String> = (0..4).map(|i| format!("a{i}")).collect();
    let mut g = Graph::new();
    let mut add = |s: &str, p: &str, o: Term| {
        g.insert(Triple::new(id(s), id(p), o).unwrap());
    };
    for r in &resources {
        add(r, "type", id(if rng.gen_bool(0.5) { "Person" } else { "Resource" }));
        add(r, "seniority", id(levels.choose(rng).unwrap()));
        if rng.gen_bool(0.2) {
            add(r, "flag", id("blocked"));
        }
        if rng.gen_bool(0.15) {
            add(r, "busy", Term::boolean(true));
        }
    }
    for a in &acts {
        add(a, "type", id("Activity"));
        add(a, "needs", id(levels.choose(rng).unwrap()));
        if rng.gen_bool(0.5) {
            add(a, "inGroup", id("g0"));
        }
    }
    let open_act = acts.choose(rng).unwrap().clone();
    add("t0", "type", id("Task"));
    add("t0", "instanceOf", id(&open_act));
    add("t0", "partOf", id("c0"));
    for r in &resources {
        if rng.gen_bool(0.8) {
            add(&open_act, "canBeExecutedBy", id(r));
        }
    }
    for i in 1..=rng.gen_range(0..=5) {
        let t = format!("t{i}");
        add(&t, "type", id("Task"));
        add(&t, "instanceOf", id(acts.choose(rng).unwrap()));
        add(&t, "partOf", id(if rng.gen_bool(0.7) { "c0" } else { "c1" }));
        add(&t, "performedBy", id(resources.choose(rng).unwrap()));
    }
    AllocFixture { graph: g, reasoner: Reasoner::new(onto, rules), task: id("t0") }
}

/// Permitted, non-busy resources for the fixture's task, read directly.
pub fn oracle_available(g: &Graph, task: &Term) -> BTreeSet<Term> {
    let act = g.object(task, &id("instanceOf")).unwrap();
    g.objects(&act, &id("canBeExecutedBy"))
        .into_iter()
        .filter(|r| !g.contains(&Triple::new(r.clone(), id("busy"), Term::boolean(true)).unwrap()))
        .collect()
}

/// Hard constraints on one random fixture: the available set, the
/// eligibility split, the automatic choice and human overrides all agree
/// with the oracle.
pub fn check_hard_fixture(seed: u64) -> Result<(), String> {
    use kgalloc::reasoner::ReasonerError;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let fx = random_alloc_fixture(&mut rng, None);
    let onto = fx.reasoner.ontology();
    let ranking = fx.reasoner.assess_all(&fx.graph, &fx.task).map_err(|e| e.to_string())?;
    let available = oracle_available(&fx.graph, &fx.task);
    if ranking.available != available {
        return Err(format!("available {:?} != oracle {:?}", ranking.available, available));
    }
    let mut best: Option<f64> = None;
    for r in &available {
        let (score, hard) = oracle_assess(&fx.graph, onto, fx.reasoner.rules(), &fx.task, r);
        let a = ranking.get(r).ok_or("candidate missing from ranking")?;
        if a.eligible() == hard {
            return Err(format!("{r}: eligible={} but oracle hard={hard}", a.eligible()));
        }
        if !hard {
            best = Some(best.map_or(score, |b: f64| b.max(score)));
        }
        let human = fx.reasoner.decide_human(&fx.graph, &fx.task, r, 0);
        match (hard, human) {
            (true, Err(ReasonerError::IneligibleSelection { messages, .. })) if !messages.is_empty() => {}
            (false, Ok(d)) if &d.chosen == r => {}
            (h, other) => return Err(format!("{r}: human override with hard={h} gave {other:?}")),
        }
    }
    match (fx.reasoner.decide_automatic(&fx.graph, &fx.task, 0), best) {
        (Ok(d), Some(b)) => {
            let (score, hard) = oracle_assess(&fx.graph, onto, fx.reasoner.rules(), &fx.task, &d.chosen);
            if hard || (score - b).abs() > 1e-9 {
                return Err(format!("automatic chose {} (score {score}, hard {hard}), best {b}", d.chosen));
            }
        }
        (Err(ReasonerError::NoEligibleResource(_)), None) => {}
        (got, b) => return Err(format!("automatic decision {got:?} with oracle best {b:?}")),
    }
    let outsider = id("nobody");
    if !matches!(
        fx.reasoner.decide_human(&fx.graph, &fx.task, &outsider, 0),
        Err(ReasonerError::IneligibleSelection { .. })
    ) {
        return Err("unavailable resource accepted".into());
    }
    Ok(())
}

/// Score algebra on one random perturbation of the soft-rule scores:
/// additivity against the oracle, per-rule contributions via removal, and
/// ranking invariance under positive scaling.
pub fn check_score_algebra(seed: u64) -> Result<(), String> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let onto = alloc_ontology();
    let rules = RuleSet::new(
        alloc_rules(&onto)
            .iter()
            .cloned()
            .map(|mut r| {
                if r.severity == Severity::Soft {
                    r.score = rng.gen_range(-16i32..=16) as f64 * 0.25;
                }
                r
            })
            .collect(),
    );
    let fx = random_alloc_fixture(&mut rng, Some(rules.clone()));
    let ranking = fx.reasoner.assess_all(&fx.graph, &fx.task).map_err(|e| e.to_string())?;
    for a in ranking.all() {
        let (want, _) = oracle_assess(&fx.graph, &onto, &rules, &fx.task, &a.resource);
        if (a.score - want).abs() > 1e-9 {
            return Err(format!("{}: score {} != oracle {want}", a.resource, a.score));
        }
        let sum: f64 = a.findings.iter().map(|f| f.score).sum();
        if (a.score - sum).abs() > 1e-9 {
            return Err(format!("{}: score {} != sum of findings {sum}", a.resource, a.score));
        }
        for r in rules.iter().filter(|r| r.severity == Severity::Soft) {
            let reduced = fx.reasoner.with_rules(rules.without(&r.id));
            let rest = reduced.assess(&fx.graph, &fx.task, &a.resource).score;
            let single = RuleSet::new(vec![r.clone()]);
            let (contribution, _) = oracle_assess(&fx.graph, &onto, &single, &fx.task, &a.resource);
            if (a.score - rest - contribution).abs() > 1e-9 {
                return Err(format!("{}: removing {} changed score by {} not {contribution}", a.resource, r.id, a.score - rest));
            }
        }
    }
    let order = |rk: &kgalloc::reasoner::Ranking| rk.eligible.iter().map(|a| a.resource.clone()).collect::<Vec<_>>();
    for k in [0.25, 0.5, 1.5, 2.0, 3.0, 10.0] {
        let scaled = fx.reasoner.with_rules(rules.map_soft_scores(|s| s * k));
        let rk = scaled.assess_all(&fx.graph, &fx.task).map_err(|e| e.to_string())?;
        if order(&rk) != order(&ranking) {
            return Err(format!("scaling by {k} reordered {:?} into {:?}", order(&ranking), order(&rk)));
        }
    }
    Ok(())
}

pub fn record(task: usize, resource: &str, activity: &str, app: &str, goal: &str) -> kgalloc::ingest::EventRecord {
    kgalloc::ingest::EventRecord {
        case_id: format!("case-{}", task / 3),
        task_id: format!("task-{task}"),
        activity: activity.into(),
        resource: resource.into(),
        start: task as i64 * 100,
        end: task as i64 * 100 + 50,
        application_type: app.into(),
        loan_goal: goal.into(),
        requested_amount: 1000.0,
    }
}

/// Simulates `cases` demo cases, exports the log as CSV, re-parses it and
/// derives permissions. Returns the edges used by the run that the derived
/// update lacks (empty on success) and the number of used edges.
pub fn mining_closure_gap(cases: usize, seed: u64) -> (Vec<(String, String)>, usize) {
    use kgalloc::sim::{Scenario, Simulator, Until};
    let mut s = Scenario::demo();
    s.cases = cases;
    s.seed = seed;
    let mut sim = Simulator::from_scenario(&s).unwrap();
    sim.run(Until::Exhausted, None).unwrap();
    let csv = kgalloc::eventlog::to_csv_string(sim.event_log());
    let parsed = kgalloc::ingest::parse_event_log(csv.as_bytes()).unwrap();
    let derived: BTreeSet<(String, String)> = kgalloc::ingest::derive_permissions(&parsed.records)
        .additions
        .iter()
        .map(|t| (t.subject().plain(), t.object().plain()))
        .collect();
    let used: BTreeSet<(String, String)> =
        sim.decisions().iter().map(|d| (d.activity.plain(), d.chosen.plain())).collect();
    (used.difference(&derived).cloned().collect(), used.len())
}

/// A log where `User_X` has 9 of 10 tasks on `LimitRaise` and two other
/// resources are spread evenly; returns the expertise edges at `threshold`.
pub fn skewed_expertise(threshold: f64) -> Vec<(String, String)> {
    use kgalloc::ingest::{derive_expertise, CaseAttribute, ExpertiseConfig};
    let mut records = Vec::new();
    let mut n = 0;
    let mut push = |resource: &str, app: &str| {
        n += 1;
        records.push(record(n, resource, "W_Handle_leads", app, "Car"));
    };
    for i in 0..10 {
        push("User_X", if i < 9 { "LimitRaise" } else { "NewCredit" });
    }
    for i in 0..10 {
        push("User_Y", if i % 2 == 0 { "LimitRaise" } else { "NewCredit" });
        push("User_Z", if i % 3 == 0 { "LimitRaise" } else { "NewCredit" });
    }
    let config = ExpertiseConfig { threshold, ..ExpertiseConfig::default() };
    derive_expertise(&records, CaseAttribute::ApplicationType, config)
        .unwrap()
        .additions
        .iter()
        .map(|t| (t.subject().plain(), t.object().plain()))
        .collect()
}
