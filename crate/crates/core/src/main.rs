use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use kgalloc::eventlog;
use kgalloc::graph::Graph;
use kgalloc::ingest::{
    derive_expertise, derive_permissions, derive_seniority, parse_event_log, CaseAttribute, ExpertiseConfig,
    ProposalBook, SeniorityConfig,
};
use kgalloc::ontology::Ontology;
use kgalloc::reasoner::{AllocationDecision, DecisionMode, Ranking};
use kgalloc::rules::RuleSet;
use kgalloc::service::{self, Engine};
use kgalloc::sim::{Decider, PendingDecision, Scenario, Simulator, Until};
use kgalloc::term::Term;

#[derive(Parser)]
#[command(name = "kgalloc", version, about = "Explainable knowledge-graph resource allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Human,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Seniority,
    Expertise,
    Permissions,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a graph file, optionally validating it against an ontology.
    LoadGraph {
        path: PathBuf,
        #[arg(long)]
        ontology: Option<PathBuf>,
    },
    /// Parse an ontology file.
    LoadOntology { path: PathBuf },
    /// Parse a rule file against an ontology.
    LoadRules {
        path: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
    },
    /// Mine knowledge from an event log into a reviewable proposal.
    Mine {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum)]
        emit: Emit,
        /// Proposal journal to append to.
        #[arg(long, default_value = "proposals.jsonl")]
        journal: PathBuf,
        /// Case attribute for expertise: application-type or loan-goal.
        #[arg(long, default_value = "application-type")]
        attribute: String,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        #[arg(long, default_value_t = 5)]
        floor: usize,
        /// Scenario whose knowledge is used to phrase the proposal.
        #[arg(long, default_value = "demo")]
        scenario: String,
    },
    /// Run a scenario and write the event log and decision journal.
    Simulate {
        #[arg(long, default_value = "demo", env = "KGALLOC_SCENARIO")]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "auto")]
        mode: Mode,
        #[arg(long)]
        cases: Option<usize>,
        /// Stop before the first event after this epoch second.
        #[arg(long)]
        until: Option<i64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Serve the HTTP API over a scenario.
    Serve {
        #[arg(long, default_value = "demo", env = "KGALLOC_SCENARIO")]
        scenario: String,
        #[arg(long, default_value_t = 8080, env = "KGALLOC_PORT")]
        port: u16,
        /// Stall the whole simulation while any human decision is pending.
        #[arg(long)]
        block_all: bool,
        /// Wall-clock milliseconds between simulation steps while resumed.
        #[arg(long, default_value_t = 200)]
        tick_ms: u64,
        #[arg(long, value_enum, default_value = "human")]
        mode: Mode,
        /// Proposal journal; reviews survive restarts.
        #[arg(long)]
        journal: Option<PathBuf>,
    },
    /// Print decision explanations from a journal.
    Report {
        #[arg(long)]
        journal: PathBuf,
        #[arg(long = "case")]
        case: Option<String>,
    },
}

/// A failure with its process exit code.
struct Failure(u8, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(1, e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(1, format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &[u8]) -> CliResult {
    fs::write(path, contents).map_err(|e| Failure(1, format!("{}: {e}", path.display())))
}

fn load_scenario(name: &str) -> Result<Scenario, Failure> {
    if name == "demo" {
        return Ok(Scenario::demo());
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(Failure(2, format!("scenario not found: {name}")));
    }
    Ok(Scenario::load(path)?)
}

fn load_graph(path: &Path, ontology: Option<&Path>) -> CliResult {
    let g = Graph::parse(&read(path)?).map_err(|e| Failure(1, format!("{}:{e}", path.display())))?;
    println!("{}: {} triples, {} nodes", path.display(), g.len(), g.nodes().len());
    if let Some(o) = ontology {
        let onto = Ontology::parse(&read(o)?)?;
        let report = onto.validate(&g);
        for w in &report.warnings {
            println!("warning: {} ({})", w.triple, w.reason);
        }
        for v in &report.violations {
            println!("violation: {} ({})", v.triple, v.reason);
        }
        if !report.violations.is_empty() {
            return Err(Failure(1, format!("{} violations", report.violations.len())));
        }
    }
    Ok(())
}

fn load_ontology(path: &Path) -> CliResult {
    let o = Ontology::parse(&read(path)?)?;
    println!(
        "{}: {} classes, {} relations, {} scales",
        path.display(),
        o.classes().count(),
        o.relations().count(),
        o.scales().count()
    );
    Ok(())
}

fn load_rules(path: &Path, ontology: &Path) -> CliResult {
    let o = Ontology::parse(&read(ontology)?)?;
    let rules = RuleSet::load(path, &o)?;
    let hard = rules.iter().filter(|r| r.is_hard()).count();
    println!("{}: {} rules ({hard} hard, {} soft)", path.display(), rules.len(), rules.len() - hard);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn mine(
    log: &Path,
    emit: Emit,
    journal: &Path,
    attribute: &str,
    threshold: f64,
    floor: usize,
    scenario: &str,
) -> CliResult {
    let file = fs::File::open(log).map_err(|e| Failure(1, format!("{}: {e}", log.display())))?;
    let parsed = parse_event_log(file)?;
    for r in &parsed.rejects {
        eprintln!("rejected line {}: {}", r.line, r.reason);
    }
    if parsed.records.is_empty() {
        return Err(Failure(1, "no valid task executions in the log".into()));
    }
    let (graph, reasoner) = load_scenario(scenario)?.knowledge()?;
    let ontology = reasoner.ontology();
    let update = match emit {
        Emit::Seniority => derive_seniority(&parsed.records, &SeniorityConfig::default())
            .replacing_functional(&graph, |p| ontology.is_functional(p)),
        Emit::Expertise => {
            let attribute: CaseAttribute = attribute.parse()?;
            derive_expertise(&parsed.records, attribute, ExpertiseConfig { threshold, floor })?
        }
        Emit::Permissions => derive_permissions(&parsed.records),
    };
    let mut book = ProposalBook::with_journal(journal)?;
    let id = book.propose(update, ontology, &graph)?;
    let p = book.get(&id).expect("just proposed");
    println!(
        "{id}: {} records, {} rejects, {} lines -> {}",
        parsed.records.len(),
        parsed.rejects.len(),
        p.rendering.len(),
        journal.display()
    );
    for line in &p.rendering {
        println!("  {line}");
    }
    Ok(())
}

/// Prompts on stdin for each parked decision.
struct Prompt;

impl Decider for Prompt {
    fn choose(&mut self, pending: &PendingDecision, ranking: &Ranking) -> Option<Term> {
        println!("\nDecision {} for {} ({}, {})", pending.id, pending.task, pending.activity, pending.case);
        let candidates: Vec<_> = ranking.all().collect();
        for (i, a) in candidates.iter().enumerate() {
            let flag = if a.eligible() { "" } else { "  [ineligible]" };
            println!("  {}. {} score {:.1}{flag}", i + 1, a.resource.plain(), a.score);
            for f in a.hard_violations.iter().chain(&a.findings) {
                println!("       {}", f.message);
            }
        }
        let stdin = io::stdin();
        loop {
            print!("resource (number or id, empty to stop): ");
            io::stdout().flush().ok()?;
            let mut line = String::new();
            if stdin.lock().read_line(&mut line).ok()? == 0 {
                return None;
            }
            let line = line.trim();
            if line.is_empty() {
                return None;
            }
            let pick = match line.parse::<usize>() {
                Ok(n) if (1..=candidates.len()).contains(&n) => Some(candidates[n - 1]),
                _ => candidates.iter().copied().find(|a| a.resource.plain() == line),
            };
            match pick {
                Some(a) if a.eligible() => return Some(a.resource.clone()),
                Some(a) => println!("{} is ineligible", a.resource.plain()),
                None => println!("no such candidate"),
            }
        }
    }
}

fn journal_text(decisions: &[AllocationDecision]) -> String {
    decisions.iter().map(|d| d.journal_line() + "\n").collect()
}

fn simulate(
    scenario: &str,
    seed: Option<u64>,
    mode: Mode,
    cases: Option<usize>,
    until: Option<i64>,
    out: &Path,
) -> CliResult {
    let mut sc = load_scenario(scenario)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(n) = cases {
        sc.cases = n;
    }
    let mut sim = Simulator::from_scenario(&sc)?;
    let limit = until.map_or(Until::Exhausted, Until::Clock);
    let report = match mode {
        Mode::Auto => sim.run(limit, None)?,
        Mode::Human => {
            sim.set_mode(DecisionMode::Human);
            sim.run(limit, Some(&mut Prompt))?
        }
    };
    fs::create_dir_all(out).map_err(|e| Failure(1, format!("{}: {e}", out.display())))?;
    write(&out.join("events.csv"), eventlog::to_csv_string(sim.event_log()).as_bytes())?;
    write(&out.join("decisions.jsonl"), journal_text(sim.decisions()).as_bytes())?;
    let explanations: String = sim.decisions().iter().map(|d| d.explanation.clone() + "\n").collect();
    write(&out.join("explanations.txt"), explanations.as_bytes())?;
    write(&out.join("graph.kg"), sim.graph().to_text().as_bytes())?;
    println!(
        "{}: {} cases generated, {} completed, {} tasks, {} decisions, {} deadlocked -> {}",
        sc.name,
        report.cases_generated,
        report.cases_completed,
        report.enabled,
        sim.decisions().len(),
        report.deadlocked.len(),
        out.display()
    );
    if !report.deadlocked.is_empty() {
        println!("deadlocked: {}", report.deadlocked.join(", "));
    }
    Ok(())
}

fn serve(scenario: &str, port: u16, block_all: bool, tick_ms: u64, mode: Mode, journal: Option<&Path>) -> CliResult {
    let sc = load_scenario(scenario)?;
    let mut sim = Simulator::from_scenario(&sc)?;
    sim.set_block_all(block_all);
    sim.set_mode(match mode {
        Mode::Auto => DecisionMode::Automatic,
        Mode::Human => DecisionMode::Human,
    });
    let proposals = match journal {
        Some(p) => ProposalBook::with_journal(p)?,
        None => ProposalBook::new(),
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(service::serve(Engine { sim, proposals }, port, Duration::from_millis(tick_ms)))?;
    Ok(())
}

fn report(journal: &Path, case: Option<&str>) -> CliResult {
    let text = read(journal)?;
    let mut shown = 0;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let d: AllocationDecision =
            serde_json::from_str(line).map_err(|e| Failure(1, format!("{}:{}: {e}", journal.display(), i + 1)))?;
        if case.is_some_and(|c| d.case.as_ref().map(Term::plain).as_deref() != Some(c)) {
            continue;
        }
        println!("{}", d.explanation);
        shown += 1;
    }
    if shown == 0 {
        eprintln!("no decisions found");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::LoadGraph { path, ontology } => load_graph(path, ontology.as_deref()),
        Command::LoadOntology { path } => load_ontology(path),
        Command::LoadRules { path, ontology } => load_rules(path, ontology),
        Command::Mine { log, emit, journal, attribute, threshold, floor, scenario } => {
            mine(log, *emit, journal, attribute, *threshold, *floor, scenario)
        }
        Command::Simulate { scenario, seed, mode, cases, until, out } => {
            simulate(scenario, *seed, *mode, *cases, *until, out)
        }
        Command::Serve { scenario, port, block_all, tick_ms, mode, journal } => {
            serve(scenario, *port, *block_all, *tick_ms, *mode, journal.as_deref())
        }
        Command::Report { journal, case } => report(journal, case.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

