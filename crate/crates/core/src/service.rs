//! HTTP API over a running simulation.
//!
//! One engine thread owns the simulator, the graph and the proposal book.
//! Handlers send it closures through a command queue and await the reply,
//! so no handler touches engine state directly. While resumed, the engine
//! advances the simulation by one step per tick.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::oneshot;

use crate::graph::{GraphUpdate, MissingRemovalPolicy, TripleSource};
use crate::ingest::{IngestError, ProposalBook, Verdict};
use crate::reasoner::{Assessment, DecisionMode, ReasonerError};
use crate::sim::{SimError, Simulator, StepOutcome};
use crate::term::{Term, Triple};
use crate::vocab;

/// Payload schema version carried by every response.
pub const API_VERSION: u32 = 1;

const MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub error: String,
    pub messages: Vec<String>,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> ApiError {
        ApiError { status, error: error.into(), messages: Vec::new() }
    }

    fn not_found(what: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, what)
    }

    fn bad_request(what: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, what)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"version": API_VERSION, "error": self.error, "messages": self.messages});
        (self.status, Json(body)).into_response()
    }
}

impl From<SimError> for ApiError {
    fn from(e: SimError) -> ApiError {
        match e {
            SimError::UnknownDecision(_) => ApiError::not_found(e.to_string()),
            SimError::AlreadyDecided(_) => ApiError::new(StatusCode::CONFLICT, e.to_string()),
            SimError::Reasoner(ReasonerError::IneligibleSelection { ref messages, .. }) => ApiError {
                status: StatusCode::CONFLICT,
                error: "ineligible selection".into(),
                messages: messages.clone(),
            },
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.to_string()),
        }
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> ApiError {
        match e {
            IngestError::UnknownProposal(_) => ApiError::not_found(e.to_string()),
            IngestError::Store(_) => ApiError::new(StatusCode::CONFLICT, e.to_string()),
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.to_string()),
        }
    }
}

type Reply = Result<Value, ApiError>;
type Command = Box<dyn FnOnce(&mut Engine) -> Reply + Send>;

/// State owned by the engine thread.
pub struct Engine {
    pub sim: Simulator,
    pub proposals: ProposalBook,
}

/// Cloneable sender side of the engine's command queue.
#[derive(Clone)]
pub struct EngineHandle {
    tx: mpsc::Sender<(Command, oneshot::Sender<Reply>)>,
}

impl EngineHandle {
    /// Starts the engine thread. The simulation starts paused.
    pub fn spawn(mut engine: Engine, tick: Duration) -> EngineHandle {
        let (tx, rx) = mpsc::channel::<(Command, oneshot::Sender<Reply>)>();
        engine.sim.pause();
        thread::Builder::new()
            .name("engine".into())
            .spawn(move || loop {
                let next = if engine.sim.is_paused() {
                    rx.recv().map_err(|_| mpsc::RecvTimeoutError::Disconnected)
                } else {
                    rx.recv_timeout(tick)
                };
                match next {
                    Ok((cmd, reply)) => {
                        let _ = reply.send(cmd(&mut engine));
                    }
                    Err(mpsc::RecvTimeoutError::Timeout) => {
                        engine.sim.step();
                    }
                    Err(mpsc::RecvTimeoutError::Disconnected) => break,
                }
            })
            .expect("spawn engine thread");
        EngineHandle { tx }
    }

    pub async fn call<F>(&self, f: F) -> Reply
    where
        F: FnOnce(&mut Engine) -> Reply + Send + 'static,
    {
        let (reply_tx, reply_rx) = oneshot::channel();
        let gone = || ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "engine stopped");
        self.tx.send((Box::new(f), reply_tx)).map_err(|_| gone())?;
        reply_rx.await.map_err(|_| gone())?
    }
}

fn respond(r: Reply, status: StatusCode) -> Response {
    match r {
        Ok(v) => (status, Json(v)).into_response(),
        Err(e) => e.into_response(),
    }
}

fn state_json(e: &Engine) -> Value {
    let report = e.sim.report();
    json!({
        "version": API_VERSION,
        "clock": e.sim.clock(),
        "mode": e.sim.mode(),
        "paused": e.sim.is_paused(),
        "pending": report.pending,
        "waiting": report.waiting,
        "running": report.running,
        "completedTasks": report.completed,
        "enabledTasks": report.enabled,
        "casesGenerated": report.cases_generated,
        "casesCompleted": report.cases_completed,
        "eventsQueued": e.sim.has_events(),
        "proposals": e.proposals.len(),
    })
}

fn outcome_json(o: &StepOutcome) -> Value {
    json!({"events": o.events, "decisions": o.decisions, "parked": o.parked})
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct CandidateView {
    resource: String,
    score: f64,
    eligible: bool,
    findings: Vec<String>,
    violations: Vec<String>,
}

impl From<&Assessment> for CandidateView {
    fn from(a: &Assessment) -> CandidateView {
        CandidateView {
            resource: a.resource.plain(),
            score: a.score,
            eligible: a.eligible(),
            findings: a.findings.iter().map(|f| f.message.clone()).collect(),
            violations: a.hard_violations.iter().map(|f| f.message.clone()).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct PendingDecisionView {
    id: String,
    task_id: String,
    activity: String,
    activity_label: String,
    case_id: String,
    case_attributes: Value,
    created_at: i64,
    candidates: Vec<CandidateView>,
}

fn decisions_json(e: &Engine) -> Reply {
    let mut views = Vec::new();
    for d in e.sim.pending() {
        let ranking = e.sim.ranking_for(&d.id)?;
        let case_attributes = e.sim.case(&d.case).map_or(Value::Null, |c| {
            json!({
                "applicationType": c.application_type.plain(),
                "loanGoal": c.loan_goal.plain(),
                "requestedAmount": c.requested_amount,
            })
        });
        views.push(PendingDecisionView {
            id: d.id.clone(),
            task_id: d.task.clone(),
            activity: d.activity.clone(),
            activity_label: e.sim.graph().label(&Term::iri(&d.activity)),
            case_id: d.case.clone(),
            case_attributes,
            created_at: d.enabled_at,
            candidates: ranking.all().map(CandidateView::from).collect(),
        });
    }
    Ok(json!({"version": API_VERSION, "decisions": views}))
}

#[derive(Debug, Deserialize)]
struct ControlRequest {
    action: Option<String>,
    mode: Option<String>,
}

fn parse_mode(s: &str) -> Option<DecisionMode> {
    match s {
        "auto" | "automatic" => Some(DecisionMode::Automatic),
        "human" => Some(DecisionMode::Human),
        _ => None,
    }
}

async fn get_state(State(h): State<EngineHandle>) -> Response {
    respond(h.call(|e| Ok(state_json(e))).await, StatusCode::OK)
}

async fn post_control(State(h): State<EngineHandle>, Json(req): Json<ControlRequest>) -> Response {
    let mode = match req.mode.as_deref().map(|m| parse_mode(m).ok_or(m)) {
        Some(Err(m)) => return ApiError::bad_request(format!("unknown mode {m:?}")).into_response(),
        Some(Ok(m)) => Some(m),
        None => None,
    };
    let action = req.action.clone();
    if action.is_none() && mode.is_none() {
        return ApiError::bad_request("expected action or mode").into_response();
    }
    let r = h
        .call(move |e| {
            if let Some(m) = mode {
                e.sim.set_mode(m);
            }
            let mut stepped = None;
            match action.as_deref() {
                None => {}
                Some("pause") => e.sim.pause(),
                Some("resume") => e.sim.resume(),
                Some("step") => {
                    let paused = e.sim.is_paused();
                    e.sim.resume();
                    stepped = Some(e.sim.step());
                    if paused {
                        e.sim.pause();
                    }
                }
                Some(other) => return Err(ApiError::bad_request(format!("unknown action {other:?}"))),
            }
            let mut v = state_json(e);
            if let Some(o) = stepped {
                v["step"] = outcome_json(&o);
            }
            Ok(v)
        })
        .await;
    respond(r, StatusCode::OK)
}

async fn get_decisions(State(h): State<EngineHandle>) -> Response {
    respond(h.call(|e| decisions_json(e)).await, StatusCode::OK)
}

#[derive(Debug, Deserialize)]
struct DecideRequest {
    resource: String,
}

async fn post_decision(State(h): State<EngineHandle>, Path(id): Path<String>, Json(req): Json<DecideRequest>) -> Response {
    let Ok(resource) = Term::id(&req.resource) else {
        return ApiError::bad_request(format!("{:?} is not a resource identifier", req.resource)).into_response();
    };
    let r = h
        .call(move |e| {
            let (decision, outcome) = e.sim.resolve(&id, &resource)?;
            Ok(json!({"version": API_VERSION, "decision": decision, "step": outcome_json(&outcome)}))
        })
        .await;
    respond(r, StatusCode::OK)
}

#[derive(Debug, Deserialize)]
struct ExplanationQuery {
    #[serde(rename = "caseId")]
    case_id: Option<String>,
}

async fn get_explanations(State(h): State<EngineHandle>, Query(q): Query<ExplanationQuery>) -> Response {
    let r = h
        .call(move |e| {
            let items: Vec<Value> = e
                .sim
                .decisions()
                .iter()
                .filter(|d| q.case_id.as_deref().is_none_or(|c| d.case.as_ref().is_some_and(|t| t.plain() == c)))
                .map(|d| {
                    json!({
                        "taskId": d.task.plain(),
                        "caseId": d.case.as_ref().map(Term::plain),
                        "resource": d.chosen.plain(),
                        "mode": d.mode,
                        "timestamp": d.timestamp,
                        "diverged": d.diverged,
                        "explanation": d.explanation,
                    })
                })
                .collect();
            Ok(json!({"version": API_VERSION, "explanations": items}))
        })
        .await;
    respond(r, StatusCode::OK)
}

#[derive(Debug, Deserialize)]
struct UpdateRequest {
    #[serde(default)]
    additions: Vec<String>,
    #[serde(default)]
    removals: Vec<String>,
    #[serde(default)]
    provenance: String,
}

impl UpdateRequest {
    fn to_update(&self) -> Result<GraphUpdate, ApiError> {
        let parse = |lines: &[String]| -> Result<Vec<Triple>, ApiError> {
            lines
                .iter()
                .enumerate()
                .filter_map(|(i, l)| Triple::parse_line(l, i + 1).transpose())
                .collect::<Result<_, _>>()
                .map_err(|e| ApiError::bad_request(e.to_string()))
        };
        GraphUpdate::new(parse(&self.additions)?, parse(&self.removals)?, self.provenance.clone())
            .map_err(|e| ApiError::bad_request(e.to_string()))
    }
}

fn proposal_json(e: &Engine, id: &str) -> Value {
    let p = e.proposals.get(id).expect("proposal exists");
    json!({
        "id": p.id,
        "status": p.status(),
        "rendering": p.rendering,
        "additions": p.update.additions,
        "removals": p.update.removals,
        "provenance": p.update.provenance,
        "supersedes": p.supersedes,
        "supersededBy": p.superseded_by,
    })
}

async fn get_updates(State(h): State<EngineHandle>) -> Response {
    let r = h
        .call(|e| {
            let items: Vec<Value> = e.proposals.iter().map(|p| proposal_json(e, &p.id)).collect();
            Ok(json!({"version": API_VERSION, "proposals": items}))
        })
        .await;
    respond(r, StatusCode::OK)
}

async fn post_update(State(h): State<EngineHandle>, Json(req): Json<UpdateRequest>) -> Response {
    let update = match req.to_update() {
        Ok(u) => u,
        Err(e) => return e.into_response(),
    };
    let r = h
        .call(move |e| {
            let id = e.proposals.propose(update, e.sim.reasoner().ontology(), e.sim.graph())?;
            Ok(json!({"version": API_VERSION, "proposal": proposal_json(e, &id)}))
        })
        .await;
    respond(r, StatusCode::CREATED)
}

#[derive(Debug, Deserialize)]
struct ReviewRequest {
    verdict: String,
    update: Option<UpdateRequest>,
}

async fn post_review(State(h): State<EngineHandle>, Path(id): Path<String>, Json(req): Json<ReviewRequest>) -> Response {
    let verdict = match (req.verdict.as_str(), &req.update) {
        ("accept", _) => Verdict::Accept,
        ("reject", _) => Verdict::Reject,
        ("amend", Some(u)) => match u.to_update() {
            Ok(u) => Verdict::Amend(u),
            Err(e) => return e.into_response(),
        },
        ("amend", None) => return ApiError::bad_request("amend needs an update").into_response(),
        (other, _) => return ApiError::bad_request(format!("unknown verdict {other:?}")).into_response(),
    };
    let accept = verdict == Verdict::Accept;
    let r = h
        .call(move |e| {
            let Engine { sim, proposals } = e;
            let result_id = proposals.review(&id, verdict, sim.reasoner().ontology(), sim.graph())?;
            let mut applied = Value::Null;
            if accept {
                let report = proposals.apply(&result_id, sim.graph_mut(), MissingRemovalPolicy::Warn)?;
                applied = json!({
                    "added": report.added,
                    "removed": report.removed,
                    "missingRemovals": report.missing_removals,
                });
            }
            Ok(json!({"version": API_VERSION, "proposal": proposal_json(e, &result_id), "applied": applied}))
        })
        .await;
    respond(r, StatusCode::OK)
}

#[derive(Debug, Deserialize)]
struct NeighborhoodQuery {
    node: String,
    depth: Option<usize>,
}

async fn get_neighborhood(State(h): State<EngineHandle>, Query(q): Query<NeighborhoodQuery>) -> Response {
    let depth = q.depth.unwrap_or(1).min(MAX_DEPTH);
    let Ok(node) = Term::id(&q.node) else {
        return ApiError::bad_request(format!("{:?} is not a node identifier", q.node)).into_response();
    };
    let r = h
        .call(move |e| {
            let g = e.sim.graph();
            if g.count_hint(Some(&node), None, None) == 0 && g.count_hint(None, None, Some(&node)) == 0 {
                return Err(ApiError::not_found(format!("unknown node {}", node.plain())));
            }
            let mut seen = BTreeSet::from([node.clone()]);
            let mut edges = BTreeSet::new();
            let mut frontier = VecDeque::from([(node.clone(), 0usize)]);
            while let Some((n, d)) = frontier.pop_front() {
                if d == depth {
                    continue;
                }
                let out = g.matching(Some(&n), None, None);
                let inc = g.matching(None, None, Some(&n));
                for t in out.into_iter().chain(inc) {
                    for next in [t.subject(), t.object()] {
                        if next.is_id() && seen.insert(next.clone()) {
                            frontier.push_back((next.clone(), d + 1));
                        }
                    }
                    edges.insert(t);
                }
            }
            let label = Term::iri(vocab::LABEL);
            let nodes: BTreeMap<String, String> =
                seen.iter().filter(|n| n.is_id()).map(|n| (n.plain(), g.label(n))).collect();
            let edges: Vec<Value> = edges
                .iter()
                .filter(|t| *t.predicate() != label)
                .map(|t| json!({"subject": t.subject().to_string(), "predicate": t.predicate().to_string(), "object": t.object().to_string()}))
                .collect();
            let nodes: Vec<Value> = nodes.into_iter().map(|(id, label)| json!({"id": id, "label": label})).collect();
            Ok(json!({"version": API_VERSION, "node": node.plain(), "depth": depth, "nodes": nodes, "edges": edges}))
        })
        .await;
    respond(r, StatusCode::OK)
}

async fn not_found() -> Response {
    ApiError::not_found("no such endpoint").into_response()
}

pub fn router(handle: EngineHandle) -> Router {
    Router::new()
        .route("/state", get(get_state))
        .route("/control", post(post_control))
        .route("/decisions", get(get_decisions))
        .route("/decisions/{id}", post(post_decision))
        .route("/explanations", get(get_explanations))
        .route("/updates", get(get_updates).post(post_update))
        .route("/updates/{id}", post(post_review))
        .route("/graph/neighborhood", get(get_neighborhood))
        .fallback(not_found)
        .with_state(handle)
}

/// Serves the API until the process is stopped.
pub async fn serve(engine: Engine, port: u16, tick: Duration) -> std::io::Result<()> {
    let app = router(EngineHandle::spawn(engine, tick));
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
