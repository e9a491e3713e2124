//! Discrete-event simulation of the loan-application process.
//!
//! The simulator owns the graph during a run. Case arrivals, task
//! enablements and completions are processed in `(time, sequence)` order.
//! Every enabled task asks the reasoner for an allocation: automatically, or
//! by parking the task as a pending decision for a human. Tasks with no
//! eligible resource wait and are retried after every completion.

pub mod model;
pub mod scenario;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use model::{ActivitySpec, Branch, ProcessModel};
pub use scenario::{generate_cases, CaseInstance, Scenario};

use crate::eventlog::{EventRow, Lifecycle};
use crate::graph::{Graph, TripleSource};
use crate::reasoner::{AllocationDecision, DecisionMode, Ranking, Reasoner, ReasonerError};
use crate::term::{Term, Triple};
use crate::vocab;

/// Mixed into the scenario seed for the duration and branching stream so it
/// differs from the case-generation stream.
const SIMULATION_STREAM: u64 = 0x5EED_0F51_u64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid process model: {0}")]
    InvalidModel(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("knowledge: {0}")]
    Knowledge(String),
    #[error("unknown decision {0}")]
    UnknownDecision(String),
    #[error("decision {0} was already made")]
    AlreadyDecided(String),
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
    #[error("simulation is paused")]
    Paused,
    #[error("human mode needs a decider")]
    NoDecider,
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskState {
    Enabled,
    PendingDecision,
    Running,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskInstance {
    pub id: String,
    pub case: String,
    pub activity: String,
    pub state: TaskState,
    pub resource: Option<String>,
    pub enabled_at: i64,
    pub started_at: Option<i64>,
    pub completed_at: Option<i64>,
}

impl TaskInstance {
    fn advance(&mut self, to: TaskState) {
        use TaskState::*;
        let ok = matches!(
            (self.state, to),
            (Enabled, PendingDecision) | (PendingDecision, Running) | (Running, Completed) | (PendingDecision, Enabled)
        );
        assert!(ok, "task {} cannot move from {:?} to {:?}", self.id, self.state, to);
        self.state = to;
    }
}

/// A task parked for a human allocation decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PendingDecision {
    pub id: String,
    pub task: String,
    pub case: String,
    pub activity: String,
    pub enabled_at: i64,
}

#[derive(Debug, Clone, PartialEq)]
enum Event {
    Arrival(CaseInstance),
    Enable { case: String, activity: String, task: Option<String> },
    Complete { task: String },
}

#[derive(Debug, Clone)]
struct CaseState {
    instance: CaseInstance,
    last_completed: Option<String>,
}

/// What one step emitted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    pub events: Vec<EventRow>,
    pub decisions: Vec<AllocationDecision>,
    /// Decision ids parked during the step.
    pub parked: Vec<String>,
}

impl StepOutcome {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty() && self.decisions.is_empty() && self.parked.is_empty()
    }

    fn extend(&mut self, other: StepOutcome) {
        self.events.extend(other.events);
        self.decisions.extend(other.decisions);
        self.parked.extend(other.parked);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Until {
    /// Until no event is left.
    Exhausted,
    /// Until the next event would be after this instant.
    Clock(i64),
    /// Until this many cases have completed.
    Cases(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub clock: i64,
    pub cases_generated: usize,
    pub cases_completed: usize,
    pub enabled: usize,
    pub completed: usize,
    pub running: usize,
    pub pending: usize,
    pub waiting: usize,
    /// Tasks that can never get a resource: nothing is left to run.
    pub deadlocked: Vec<String>,
}

/// Picks a resource for a parked task. `None` stops the run.
pub trait Decider {
    fn choose(&mut self, pending: &PendingDecision, ranking: &Ranking) -> Option<Term>;
}

impl<F: FnMut(&PendingDecision, &Ranking) -> Option<Term>> Decider for F {
    fn choose(&mut self, pending: &PendingDecision, ranking: &Ranking) -> Option<Term> {
        self(pending, ranking)
    }
}

pub struct Simulator {
    graph: Graph,
    reasoner: Reasoner,
    model: ProcessModel,
    experience_threshold: u32,
    clock: i64,
    queue: BTreeMap<(i64, u64), Event>,
    seq: u64,
    rng: ChaCha8Rng,
    mode: DecisionMode,
    paused: bool,
    block_all: bool,
    cases: BTreeMap<String, CaseState>,
    cases_generated: usize,
    cases_completed: usize,
    tasks: BTreeMap<String, TaskInstance>,
    task_order: Vec<String>,
    next_task: u64,
    waiting: VecDeque<String>,
    pending: BTreeMap<u64, PendingDecision>,
    next_decision: u64,
    decided: BTreeSet<String>,
    running: BTreeMap<String, String>,
    experience: BTreeMap<(String, String), u32>,
    completed_by: BTreeMap<String, i64>,
    log: Vec<EventRow>,
    decisions: Vec<AllocationDecision>,
}

fn numbered(term: &Term, prefix: &str) -> Option<u64> {
    term.as_id()?.strip_prefix(prefix)?.parse().ok()
}

fn p(name: &str) -> Term {
    Term::iri(name)
}

impl Simulator {
    /// Builds a simulator over the given knowledge. Case ids and task ids
    /// continue after the highest `case-N` / `task-N` already in the graph.
    pub fn new(scenario: &Scenario, graph: Graph, reasoner: Reasoner) -> Result<Simulator, SimError> {
        let model = scenario.model()?;
        let nodes = graph.nodes();
        let first_case = nodes.iter().filter_map(|n| numbered(n, "case-")).max().map_or(1, |m| m + 1);
        let next_task = nodes.iter().filter_map(|n| numbered(n, "task-")).max().map_or(1, |m| m + 1);
        let mut sim = Simulator {
            graph,
            reasoner,
            model,
            experience_threshold: scenario.history.experience_threshold,
            clock: scenario.start_time,
            queue: BTreeMap::new(),
            seq: 0,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed ^ SIMULATION_STREAM),
            mode: DecisionMode::Automatic,
            paused: false,
            block_all: false,
            cases: BTreeMap::new(),
            cases_generated: scenario.cases,
            cases_completed: 0,
            tasks: BTreeMap::new(),
            task_order: Vec::new(),
            next_task,
            waiting: VecDeque::new(),
            pending: BTreeMap::new(),
            next_decision: 1,
            decided: BTreeSet::new(),
            running: BTreeMap::new(),
            experience: BTreeMap::new(),
            completed_by: BTreeMap::new(),
            log: Vec::new(),
            decisions: Vec::new(),
        };
        for r in &scenario.resume {
            if sim.model.activity(&r.activity).is_none() {
                return Err(SimError::Scenario(format!("resumed activity {} is not in the model", r.activity)));
            }
            let event = Event::Enable { case: r.case.clone(), activity: r.activity.clone(), task: Some(r.task.clone()) };
            sim.schedule(scenario.start_time, event);
        }
        let arrivals = generate_cases(
            &scenario.attributes,
            scenario.arrival_interval,
            scenario.start_time,
            scenario.cases,
            first_case,
            scenario.seed,
        );
        for (case, at) in arrivals {
            sim.schedule(at, Event::Arrival(case));
        }
        Ok(sim)
    }

    /// Loads the scenario's knowledge and builds the simulator.
    pub fn from_scenario(scenario: &Scenario) -> Result<Simulator, SimError> {
        let (graph, reasoner) = scenario.knowledge().map_err(|e| SimError::Knowledge(e.to_string()))?;
        Simulator::new(scenario, graph, reasoner)
    }

    fn schedule(&mut self, at: i64, event: Event) {
        self.seq += 1;
        self.queue.insert((at, self.seq), event);
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Mutable graph access, meant for knowledge changes while paused.
    pub fn graph_mut(&mut self) -> &mut Graph {
        &mut self.graph
    }

    pub fn reasoner(&self) -> &Reasoner {
        &self.reasoner
    }

    pub fn set_reasoner(&mut self, reasoner: Reasoner) {
        self.reasoner = reasoner;
    }

    pub fn clock(&self) -> i64 {
        self.clock
    }

    pub fn mode(&self) -> DecisionMode {
        self.mode
    }

    /// Takes effect for the next decision.
    pub fn set_mode(&mut self, mode: DecisionMode) {
        self.mode = mode;
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn pause(&mut self) {
        self.paused = true;
    }

    pub fn resume(&mut self) {
        self.paused = false;
    }

    /// When set, no event is processed while a human decision is pending.
    pub fn set_block_all(&mut self, block: bool) {
        self.block_all = block;
    }

    pub fn event_log(&self) -> &[EventRow] {
        &self.log
    }

    pub fn decisions(&self) -> &[AllocationDecision] {
        &self.decisions
    }

    pub fn tasks(&self) -> impl Iterator<Item = &TaskInstance> {
        self.task_order.iter().map(|id| &self.tasks[id])
    }

    pub fn task(&self, id: &str) -> Option<&TaskInstance> {
        self.tasks.get(id)
    }

    pub fn case(&self, id: &str) -> Option<&CaseInstance> {
        self.cases.get(id).map(|c| &c.instance)
    }

    pub fn pending(&self) -> impl Iterator<Item = &PendingDecision> {
        self.pending.values()
    }

    pub fn pending_decision(&self, id: &str) -> Option<&PendingDecision> {
        self.pending.values().find(|d| d.id == id)
    }

    pub fn waiting(&self) -> impl Iterator<Item = &str> {
        self.waiting.iter().map(String::as_str)
    }

    pub fn has_events(&self) -> bool {
        !self.queue.is_empty()
    }

    pub fn next_event_time(&self) -> Option<i64> {
        self.queue.keys().next().map(|(t, _)| *t)
    }

    pub fn cases_completed(&self) -> usize {
        self.cases_completed
    }

    /// Current assessment of every available resource for a parked task.
    pub fn ranking_for(&self, decision_id: &str) -> Result<Ranking, SimError> {
        let d = self.pending_decision(decision_id).ok_or_else(|| SimError::UnknownDecision(decision_id.into()))?;
        Ok(self.reasoner.assess_all(&self.graph, &p(&d.task))?)
    }

    /// Processes the earliest event. In automatic mode pending decisions are
    /// drained first. Paused or stalled simulators emit nothing.
    pub fn step(&mut self) -> StepOutcome {
        let mut out = StepOutcome::default();
        if self.paused {
            return out;
        }
        if self.mode == DecisionMode::Automatic {
            out.extend(self.drain_pending());
        }
        if self.block_all && !self.pending.is_empty() {
            return out;
        }
        let Some(((at, _), event)) = self.queue.pop_first() else {
            return out;
        };
        self.clock = self.clock.max(at);
        let emitted = match event {
            Event::Arrival(case) => self.arrive(case),
            Event::Enable { case, activity, task } => self.enable(&case, &activity, task),
            Event::Complete { task } => self.complete(&task),
        };
        out.extend(emitted);
        out
    }

    fn drain_pending(&mut self) -> StepOutcome {
        let mut out = StepOutcome::default();
        let parked: Vec<PendingDecision> = std::mem::take(&mut self.pending).into_values().collect();
        for d in parked {
            self.decided.insert(d.id.clone());
            let task = self.tasks.get_mut(&d.task).expect("pending task exists");
            task.advance(TaskState::Enabled);
            out.extend(self.try_allocate(&d.task));
        }
        out
    }

    /// Records a human choice for a parked task and starts it.
    pub fn resolve(&mut self, decision_id: &str, resource: &Term) -> Result<(AllocationDecision, StepOutcome), SimError> {
        if self.decided.contains(decision_id) {
            return Err(SimError::AlreadyDecided(decision_id.into()));
        }
        let (&key, d) = self
            .pending
            .iter()
            .find(|(_, d)| d.id == decision_id)
            .ok_or_else(|| SimError::UnknownDecision(decision_id.into()))?;
        let task = d.task.clone();
        let decision = self.reasoner.decide_human(&self.graph, &p(&task), resource, self.clock)?;
        self.pending.remove(&key);
        self.decided.insert(decision_id.into());
        let out = self.start(&task, decision.clone());
        Ok((decision, out))
    }

    /// Runs until the limit is reached, no event is left, or the decider
    /// declines. Human mode needs a decider.
    pub fn run(&mut self, until: Until, mut decider: Option<&mut dyn Decider>) -> Result<RunReport, SimError> {
        if self.paused {
            return Err(SimError::Paused);
        }
        loop {
            if let Until::Cases(n) = until {
                if self.cases_completed >= n {
                    break;
                }
            }
            if self.mode == DecisionMode::Human && !self.pending.is_empty() {
                let Some(d) = decider.as_deref_mut() else {
                    return Err(SimError::NoDecider);
                };
                let first = self.pending.values().next().cloned().expect("non-empty");
                let ranking = self.ranking_for(&first.id)?;
                let Some(choice) = d.choose(&first, &ranking) else {
                    break;
                };
                self.resolve(&first.id, &choice)?;
                self.check_invariants().map_err(SimError::Invariant)?;
                continue;
            }
            match (until, self.next_event_time()) {
                (_, None) if self.pending.is_empty() || self.mode == DecisionMode::Human => break,
                (Until::Clock(limit), Some(t)) if t > limit => break,
                _ => {}
            }
            self.step();
            self.check_invariants().map_err(SimError::Invariant)?;
        }
        Ok(self.report())
    }

    pub fn report(&self) -> RunReport {
        let count = |s: TaskState| self.tasks.values().filter(|t| t.state == s).count();
        let stuck = self.queue.is_empty() && self.running.is_empty() && self.pending.is_empty();
        RunReport {
            clock: self.clock,
            cases_generated: self.cases_generated,
            cases_completed: self.cases_completed,
            enabled: self.tasks.len(),
            completed: count(TaskState::Completed),
            running: count(TaskState::Running),
            pending: self.pending.len(),
            waiting: self.waiting.len(),
            deadlocked: if stuck { self.waiting.iter().cloned().collect() } else { Vec::new() },
        }
    }

    /// One-to-one allocation, timestamp order, graph/log consistency.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut holders: BTreeMap<&str, &str> = BTreeMap::new();
        for (resource, task) in &self.running {
            let t = &self.tasks[task];
            if t.state != TaskState::Running || t.resource.as_deref() != Some(resource) {
                return Err(format!("{resource} is recorded as running {task}, which is {:?}", t.state));
            }
            if let Some(other) = holders.insert(resource, task) {
                return Err(format!("{resource} runs both {other} and {task}"));
            }
        }
        let running_tasks = self.tasks.values().filter(|t| t.state == TaskState::Running).count();
        if running_tasks != self.running.len() {
            return Err(format!("{running_tasks} running tasks but {} busy resources", self.running.len()));
        }
        if let [.., a, b] = self.log.as_slice() {
            if b.timestamp < a.timestamp {
                return Err(format!("event log goes back in time at {}", b.task_id));
            }
        }
        Ok(())
    }

    /// Checks every completed task against the graph.
    pub fn check_graph_consistency(&self) -> Result<(), String> {
        for t in self.tasks.values().filter(|t| t.state == TaskState::Completed) {
            let task = p(&t.id);
            let resource = t.resource.as_deref().map(p);
            if resource.is_none() || self.graph.object(&task, &p(vocab::PERFORMED_BY)) != resource {
                return Err(format!("{} lacks its performedBy triple", t.id));
            }
            if self.graph.object(&task, &p(vocab::COMPLETED_AT)) != t.completed_at.map(Term::int) {
                return Err(format!("{} lacks its completedAt triple", t.id));
            }
        }
        Ok(())
    }

    fn put(&mut self, s: Term, pred: &str, o: Term) {
        let t = Triple::new(s, p(pred), o).expect("simulator writes identifier subjects");
        self.graph.insert(t);
    }

    fn row(&self, task: &TaskInstance, lifecycle: Lifecycle) -> EventRow {
        let case = &self.cases[&task.case].instance;
        EventRow {
            case_id: task.case.clone(),
            task_id: task.id.clone(),
            activity: task.activity.clone(),
            resource: task.resource.clone().unwrap_or_default(),
            lifecycle,
            timestamp: self.clock,
            application_type: case.application_type.plain(),
            loan_goal: case.loan_goal.plain(),
            requested_amount: case.requested_amount,
        }
    }

    fn emit(&mut self, task: &str, lifecycle: Lifecycle, out: &mut StepOutcome) {
        let row = self.row(&self.tasks[task], lifecycle);
        self.log.push(row.clone());
        out.events.push(row);
    }

    fn arrive(&mut self, case: CaseInstance) -> StepOutcome {
        debug!("case {} arrives at {}", case.id, self.clock);
        let c = p(&case.id);
        self.put(c.clone(), vocab::TYPE, p(vocab::CLASS_CASE));
        self.put(c.clone(), vocab::HAS_APPLICATION_TYPE, case.application_type.clone());
        self.put(c.clone(), vocab::HAS_LOAN_GOAL, case.loan_goal.clone());
        let amount = Term::dec(case.requested_amount).expect("finite amount");
        self.put(c, vocab::REQUESTED_AMOUNT, amount);
        let id = case.id.clone();
        self.cases.insert(id.clone(), CaseState { instance: case, last_completed: None });
        let start = self.model.start().to_string();
        self.enable(&id, &start, None)
    }

    /// Case attributes and history for a case that predates the run.
    fn adopt_case(&mut self, id: &str) {
        if self.cases.contains_key(id) {
            return;
        }
        let c = p(id);
        let attr = |pred: &str| self.graph.object(&c, &p(pred));
        let instance = CaseInstance {
            id: id.to_string(),
            application_type: attr(vocab::HAS_APPLICATION_TYPE).unwrap_or_else(|| Term::string("")),
            loan_goal: attr(vocab::HAS_LOAN_GOAL).unwrap_or_else(|| Term::string("")),
            requested_amount: attr(vocab::REQUESTED_AMOUNT).and_then(|t| t.as_f64()).unwrap_or(0.0),
        };
        let completed_at = p(vocab::COMPLETED_AT);
        let last_completed = self
            .graph
            .subjects(&p(vocab::PART_OF), &c)
            .into_iter()
            .filter_map(|t| self.graph.object(&t, &completed_at).and_then(|v| v.as_f64()).map(|v| (v as i64, t)))
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
            .map(|(_, t)| t.plain());
        self.cases.insert(id.to_string(), CaseState { instance, last_completed });
    }

    fn enable(&mut self, case: &str, activity: &str, task: Option<String>) -> StepOutcome {
        self.adopt_case(case);
        let id = task.unwrap_or_else(|| {
            let id = format!("task-{}", self.next_task);
            self.next_task += 1;
            id
        });
        let t = p(&id);
        self.put(t.clone(), vocab::TYPE, p(vocab::CLASS_TASK));
        self.put(t.clone(), vocab::INSTANCE_OF, p(activity));
        self.put(t.clone(), vocab::PART_OF, p(case));
        self.put(t, vocab::ENABLED_AT, Term::int(self.clock));
        let instance = TaskInstance {
            id: id.clone(),
            case: case.to_string(),
            activity: activity.to_string(),
            state: TaskState::Enabled,
            resource: None,
            enabled_at: self.clock,
            started_at: None,
            completed_at: None,
        };
        self.tasks.insert(id.clone(), instance);
        self.task_order.push(id.clone());
        let mut out = StepOutcome::default();
        self.emit(&id, Lifecycle::Enabled, &mut out);
        out.extend(self.try_allocate(&id));
        out
    }

    /// Allocates or parks an enabled task; queues it when nobody is eligible.
    fn try_allocate(&mut self, task: &str) -> StepOutcome {
        let term = p(task);
        let outcome = match self.mode {
            DecisionMode::Automatic => {
                self.reasoner.decide_automatic(&self.graph, &term, self.clock).map(Some)
            }
            DecisionMode::Human => self.reasoner.rank(&self.graph, &term).map(|_| None),
        };
        match outcome {
            Ok(Some(decision)) => {
                self.tasks.get_mut(task).expect("task exists").advance(TaskState::PendingDecision);
                self.start(task, decision)
            }
            Ok(None) => {
                let t = self.tasks.get_mut(task).expect("task exists");
                t.advance(TaskState::PendingDecision);
                let id = format!("d{}", self.next_decision);
                let d = PendingDecision {
                    id: id.clone(),
                    task: task.to_string(),
                    case: t.case.clone(),
                    activity: t.activity.clone(),
                    enabled_at: t.enabled_at,
                };
                self.pending.insert(self.next_decision, d);
                self.next_decision += 1;
                info!("{task} parked as decision {id}");
                StepOutcome { parked: vec![id], ..StepOutcome::default() }
            }
            Err(e) => {
                debug!("{task} waits: {e}");
                if !self.waiting.iter().any(|w| w == task) {
                    self.waiting.push_back(task.to_string());
                }
                StepOutcome::default()
            }
        }
    }

    fn start(&mut self, task: &str, decision: AllocationDecision) -> StepOutcome {
        let resource = decision.chosen.plain();
        let t = p(task);
        self.put(t.clone(), vocab::PERFORMED_BY, decision.chosen.clone());
        self.put(t, vocab::STARTED_AT, Term::int(self.clock));
        self.put(decision.chosen.clone(), vocab::BUSY, Term::boolean(true));
        let clock = self.clock;
        let instance = self.tasks.get_mut(task).expect("task exists");
        instance.advance(TaskState::Running);
        instance.resource = Some(resource.clone());
        instance.started_at = Some(clock);
        let duration = self.model.sample_duration(&instance.activity, &mut self.rng);
        let previous = self.running.insert(resource.clone(), task.to_string());
        assert!(previous.is_none(), "{resource} allocated twice");
        info!("{task} -> {resource} ({:?})", decision.mode);
        self.schedule(clock + duration, Event::Complete { task: task.to_string() });
        self.decisions.push(decision.clone());
        let mut out = StepOutcome { decisions: vec![decision], ..StepOutcome::default() };
        self.emit(task, Lifecycle::Started, &mut out);
        out
    }

    fn complete(&mut self, task: &str) -> StepOutcome {
        let clock = self.clock;
        let instance = self.tasks.get_mut(task).expect("task exists");
        instance.advance(TaskState::Completed);
        instance.completed_at = Some(clock);
        let resource = instance.resource.clone().expect("running task has a resource");
        let case = instance.case.clone();
        let activity = instance.activity.clone();
        self.running.remove(&resource);
        let (t, r) = (p(task), p(&resource));
        self.put(t.clone(), vocab::COMPLETED_AT, Term::int(clock));
        self.graph.remove_all(&r, &p(vocab::BUSY));
        let previous = self.cases.get_mut(&case).expect("case exists").last_completed.replace(task.to_string());
        if let Some(prev) = previous {
            self.put(p(&prev), vocab::DIRECTLY_FOLLOWED_BY, t);
        }
        self.record_history(&resource, &activity);

        let mut out = StepOutcome::default();
        self.emit(task, Lifecycle::Completed, &mut out);
        match self.model.sample_next(&activity, &mut self.rng) {
            Some(next) => self.schedule(clock, Event::Enable { case, activity: next, task: None }),
            None => {
                self.cases_completed += 1;
                debug!("case {case} completed at {clock}");
            }
        }
        for w in std::mem::take(&mut self.waiting) {
            out.extend(self.try_allocate(&w));
        }
        out
    }

    fn record_history(&mut self, resource: &str, activity: &str) {
        let total = self.completed_by.entry(resource.to_string()).or_insert_with(|| {
            self.graph.object(&p(resource), &p(vocab::COMPLETED_TASKS)).and_then(|v| v.as_f64()).unwrap_or(0.0) as i64
        });
        *total += 1;
        let total = *total;
        self.graph
            .set(p(resource), p(vocab::COMPLETED_TASKS), Term::int(total))
            .expect("identifier subject");
        let n = self.experience.entry((resource.to_string(), activity.to_string())).or_default();
        *n += 1;
        if *n >= self.experience_threshold {
            self.put(p(resource), vocab::EXPERIENCED_IN, p(activity));
        }
    }
}
