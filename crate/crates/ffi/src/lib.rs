//! C ABI for the allocation engine.
//!
//! An engine is an opaque handle holding an ontology, a rule set and a
//! graph. Every fallible call returns a [`KgStatus`]; on failure the
//! message is available from [`kg_engine_last_error`] until the next call on
//! the same handle. Strings returned through `out` pointers are owned by the
//! caller and released with [`kg_string_free`].

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kgalloc::demo;
use kgalloc::graph::Graph;
use kgalloc::ontology::Ontology;
use kgalloc::reasoner::{Reasoner, ReasonerError};
use kgalloc::rules::{parse_rules, RuleSet};
use kgalloc::term::{Term, Triple};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    UnknownTask = 4,
    NoEligibleResource = 5,
    IneligibleSelection = 6,
    Internal = 7,
}

/// Opaque engine handle.
pub struct KgEngine {
    ontology: Ontology,
    rules_text: String,
    reasoner: Reasoner,
    graph: Graph,
    last_error: CString,
}

struct Failure(KgStatus, String);

impl From<ReasonerError> for Failure {
    fn from(e: ReasonerError) -> Failure {
        let status = match e {
            ReasonerError::UnknownTask(_) => KgStatus::UnknownTask,
            ReasonerError::NoEligibleResource(_) => KgStatus::NoEligibleResource,
            ReasonerError::IneligibleSelection { .. } => KgStatus::IneligibleSelection,
        };
        Failure(status, e.to_string())
    }
}

fn parse_error(e: impl std::fmt::Display) -> Failure {
    Failure(KgStatus::ParseError, e.to_string())
}

impl KgEngine {
    fn empty() -> KgEngine {
        KgEngine {
            ontology: Ontology::new(),
            rules_text: String::new(),
            reasoner: Reasoner::new(Ontology::new(), RuleSet::new(Vec::new())),
            graph: Graph::new(),
            last_error: CString::default(),
        }
    }

    fn rebuild(&mut self, ontology: Ontology, rules_text: &str) -> Result<(), Failure> {
        let rules = parse_rules(rules_text, &ontology).map_err(parse_error)?;
        self.reasoner = Reasoner::new(ontology.clone(), rules);
        self.ontology = ontology;
        self.rules_text = rules_text.to_string();
        Ok(())
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(KgStatus::NullArgument, "null string argument".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(KgStatus::InvalidUtf8, e.to_string()))
}

fn term(s: &str) -> Result<Term, Failure> {
    Term::id(s).map_err(parse_error)
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes replaced").into_raw()
}

/// Runs `f` against the handle, recording any error and containing panics.
unsafe fn with_engine(engine: *mut KgEngine, f: impl FnOnce(&mut KgEngine) -> Result<(), Failure>) -> KgStatus {
    let Some(engine) = engine.as_mut() else {
        return KgStatus::NullArgument;
    };
    let result = catch_unwind(AssertUnwindSafe(|| f(engine)))
        .unwrap_or_else(|_| Err(Failure(KgStatus::Internal, "internal error".into())));
    match result {
        Ok(()) => {
            engine.last_error = CString::default();
            KgStatus::Ok
        }
        Err(Failure(status, message)) => {
            engine.last_error = CString::new(message.replace('\0', " ")).unwrap_or_default();
            status
        }
    }
}

unsafe fn write_out(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(KgStatus::NullArgument, "null output pointer".into()));
    }
    *out = to_c(s);
    Ok(())
}

/// A new engine with an empty ontology, no rules and an empty graph.
#[no_mangle]
pub extern "C" fn kg_engine_new() -> *mut KgEngine {
    Box::into_raw(Box::new(KgEngine::empty()))
}

/// A new engine preloaded with the bundled loan-application demo. Returns
/// null if the bundled knowledge fails to load.
#[no_mangle]
pub extern "C" fn kg_engine_new_demo() -> *mut KgEngine {
    let Ok(ontology) = Ontology::parse(demo::ONTOLOGY) else { return ptr::null_mut() };
    let Ok(graph) = Graph::parse(demo::GRAPH) else { return ptr::null_mut() };
    let mut engine = KgEngine::empty();
    if engine.rebuild(ontology, demo::RULES).is_err() {
        return ptr::null_mut();
    }
    engine.graph = graph;
    Box::into_raw(Box::new(engine))
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` must come from `kg_engine_new*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kg_engine_free(engine: *mut KgEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Replaces the ontology. Loaded rules are re-checked against it; on
/// failure nothing changes.
///
/// # Safety
/// `engine` must be a live handle and `text` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kg_engine_load_ontology(engine: *mut KgEngine, text: *const c_char) -> KgStatus {
    with_engine(engine, |e| {
        let ontology = Ontology::parse(c_str(text)?).map_err(parse_error)?;
        let rules = e.rules_text.clone();
        e.rebuild(ontology, &rules)
    })
}

/// Replaces the rule set.
///
/// # Safety
/// `engine` must be a live handle and `text` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kg_engine_load_rules(engine: *mut KgEngine, text: *const c_char) -> KgStatus {
    with_engine(engine, |e| {
        let ontology = e.ontology.clone();
        e.rebuild(ontology, c_str(text)?)
    })
}

/// Replaces the graph with the parsed triples.
///
/// # Safety
/// `engine` must be a live handle and `text` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kg_engine_load_graph(engine: *mut KgEngine, text: *const c_char) -> KgStatus {
    with_engine(engine, |e| {
        e.graph = Graph::parse(c_str(text)?).map_err(parse_error)?;
        Ok(())
    })
}

/// Adds one triple written as a graph-file line, e.g. `task-9 performedBy User_26`.
///
/// # Safety
/// `engine` must be a live handle and `line` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kg_engine_add_triple(engine: *mut KgEngine, line: *const c_char) -> KgStatus {
    with_engine(engine, |e| {
        let t: Triple = c_str(line)?.trim().parse().map_err(parse_error)?;
        e.graph.insert(t);
        Ok(())
    })
}

/// Writes the number of triples in the graph to `out`.
///
/// # Safety
/// `engine` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kg_engine_triple_count(engine: *mut KgEngine, out: *mut usize) -> KgStatus {
    with_engine(engine, |e| {
        if out.is_null() {
            return Err(Failure(KgStatus::NullArgument, "null output pointer".into()));
        }
        *out = e.graph.len();
        Ok(())
    })
}

/// Assesses every available resource for `task` and writes the ranking as
/// JSON to `out`.
///
/// # Safety
/// `engine` must be a live handle, `task` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kg_engine_rank(engine: *mut KgEngine, task: *const c_char, out: *mut *mut c_char) -> KgStatus {
    with_engine(engine, |e| {
        let task = term(c_str(task)?)?;
        let ranking = e.reasoner.assess_all(&e.graph, &task)?;
        write_out(out, serde_json::to_string(&ranking).expect("ranking serializes"))
    })
}

/// Picks the top-ranked eligible resource for `task` and writes the
/// decision as JSON to `out`. The graph is not changed.
///
/// # Safety
/// `engine` must be a live handle, `task` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kg_engine_decide(
    engine: *mut KgEngine,
    task: *const c_char,
    timestamp: i64,
    out: *mut *mut c_char,
) -> KgStatus {
    with_engine(engine, |e| {
        let task = term(c_str(task)?)?;
        let decision = e.reasoner.decide_automatic(&e.graph, &task, timestamp)?;
        write_out(out, decision.journal_line())
    })
}

/// Validates a human choice of `resource` for `task` and writes the
/// decision as JSON to `out`. Hard violations yield
/// `KG_STATUS_INELIGIBLE_SELECTION` with the messages in the last error.
///
/// # Safety
/// `engine` must be a live handle, `task` and `resource` NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kg_engine_decide_human(
    engine: *mut KgEngine,
    task: *const c_char,
    resource: *const c_char,
    timestamp: i64,
    out: *mut *mut c_char,
) -> KgStatus {
    with_engine(engine, |e| {
        let task = term(c_str(task)?)?;
        let resource = term(c_str(resource)?)?;
        match e.reasoner.decide_human(&e.graph, &task, &resource, timestamp) {
            Ok(decision) => write_out(out, decision.journal_line()),
            Err(ReasonerError::IneligibleSelection { messages, .. }) => {
                Err(Failure(KgStatus::IneligibleSelection, messages.join("\n")))
            }
            Err(other) => Err(other.into()),
        }
    })
}

/// The last error message for this handle, or an empty string. Owned by the
/// engine; valid until the next call on it.
///
/// # Safety
/// `engine` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn kg_engine_last_error(engine: *const KgEngine) -> *const c_char {
    match engine.as_ref() {
        Some(e) => e.last_error.as_ptr(),
        None => c"null engine".as_ptr(),
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
