use std::fs;
use std::io::Write;
use std::process::{Command, Output, Stdio};

fn kgalloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgalloc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = kgalloc(&["simulate", "--cases", "5", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("0 deadlocked"));
    for f in ["events.csv", "decisions.jsonl", "explanations.txt", "graph.kg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let explanations = fs::read_to_string(out.join("explanations.txt")).unwrap();
    assert!(explanations.starts_with("case-1 task-7"));
}

#[test]
fn unknown_scenario_exits_two() {
    let o = kgalloc(&["simulate", "--scenario", "/nonexistent/s.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("scenario not found"));
}

#[test]
fn loaders_validate_files() {
    let dir = tempfile::tempdir().unwrap();
    let onto = dir.path().join("o.kgo");
    let rules = dir.path().join("r.kgr");
    let graph = dir.path().join("g.kg");
    fs::write(&onto, kgalloc::demo::ONTOLOGY).unwrap();
    fs::write(&rules, kgalloc::demo::RULES).unwrap();
    fs::write(&graph, kgalloc::demo::GRAPH).unwrap();
    let (o, r, g) = (onto.to_str().unwrap(), rules.to_str().unwrap(), graph.to_str().unwrap());
    assert!(kgalloc(&["load-ontology", o]).status.success());
    assert!(kgalloc(&["load-rules", r, "--ontology", o]).status.success());
    assert!(kgalloc(&["load-graph", g, "--ontology", o]).status.success());
    fs::write(&rules, "rule broken {\n  task-var ?t\n}\n").unwrap();
    assert!(!kgalloc(&["load-rules", r, "--ontology", o]).status.success());
}

#[test]
fn mine_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let journal = dir.path().join("proposals.jsonl");
    assert!(kgalloc(&["simulate", "--cases", "20", "--out", out.to_str().unwrap()]).status.success());
    let log = out.join("events.csv");
    let o = kgalloc(&["mine", "--log", log.to_str().unwrap(), "--emit", "seniority", "--journal", journal.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("p1:"));
    assert!(stdout(&o).contains("seniority"));
    let o = kgalloc(&["mine", "--log", log.to_str().unwrap(), "--emit", "permissions", "--journal", journal.to_str().unwrap()]);
    assert!(stdout(&o).starts_with("p2:"));
    assert_eq!(fs::read_to_string(&journal).unwrap().lines().count(), 2);

    let decisions = out.join("decisions.jsonl");
    let o = kgalloc(&["report", "--journal", decisions.to_str().unwrap(), "--case", "case-1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("Assignment conforms separation of concerns with activity 'W_Validate application'"));
    assert!(!text.contains("case-2 "));
}

#[test]
fn human_mode_reads_choices_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut child = Command::new(env!("CARGO_BIN_EXE_kgalloc"))
        .args(["simulate", "--mode", "human", "--cases", "0", "--out", out.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"User_55\nUser_83\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("User_55 is ineligible"));
    let journal = fs::read_to_string(out.join("decisions.jsonl")).unwrap();
    let d: serde_json::Value = serde_json::from_str(journal.lines().next().unwrap()).unwrap();
    assert_eq!(d["chosen"], "User_83");
    assert_eq!(d["mode"], "human");
    assert_eq!(d["diverged"], true);
}
