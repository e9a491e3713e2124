use std::collections::BTreeMap;
use std::io::Read;

use serde::Serialize;

use super::IngestError;
use crate::eventlog::HEADER;

/// One task execution recovered from a `started`/`completed` row pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub case_id: String,
    pub task_id: String,
    pub activity: String,
    pub resource: String,
    pub start: i64,
    pub end: i64,
    pub application_type: String,
    pub loan_goal: String,
    pub requested_amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reject {
    /// 1-based line in the file; 0 when the problem spans rows.
    pub line: u64,
    pub task: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParsedLog {
    pub records: Vec<EventRecord>,
    pub rejects: Vec<Reject>,
}

struct Row {
    line: u64,
    case_id: String,
    task_id: String,
    activity: String,
    resource: String,
    lifecycle: String,
    timestamp: i64,
    application_type: String,
    loan_goal: String,
    requested_amount: f64,
}

fn parse_row(fields: &[&str], line: u64) -> Result<Row, String> {
    let text = |i: usize, name: &str| -> Result<String, String> {
        let v = fields[i].trim();
        if v.is_empty() {
            Err(format!("{name} is empty"))
        } else {
            Ok(v.to_string())
        }
    };
    let lifecycle = text(4, "lifecycle")?;
    if !matches!(lifecycle.as_str(), "enabled" | "started" | "completed") {
        return Err(format!("unknown lifecycle {lifecycle:?}"));
    }
    let resource = fields[3].trim().to_string();
    if resource.is_empty() && lifecycle != "enabled" {
        return Err("resource is empty".into());
    }
    let timestamp = fields[5].trim().parse().map_err(|_| format!("timestamp {:?} is not an integer", fields[5]))?;
    let requested_amount: f64 = fields[8]
        .trim()
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite())
        .ok_or_else(|| format!("requested_amount {:?} is not a number", fields[8]))?;
    Ok(Row {
        line,
        case_id: text(0, "case_id")?,
        task_id: text(1, "task_id")?,
        activity: text(2, "activity")?,
        resource,
        lifecycle,
        timestamp,
        application_type: text(6, "application_type")?,
        loan_goal: text(7, "loan_goal")?,
        requested_amount,
    })
}

/// Parses an event log. Rows that fail validation end up in
/// [`ParsedLog::rejects`]; only a missing header or column is fatal.
pub fn parse_event_log<R: Read>(input: R) -> Result<ParsedLog, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers().map_err(|e| IngestError::Csv(e.to_string()))?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(IngestError::EmptyFile);
    }
    let mut index = [0usize; 9];
    for (slot, name) in index.iter_mut().zip(HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))?;
    }

    let mut out = ParsedLog::default();
    let mut open: BTreeMap<String, Row> = BTreeMap::new();
    for result in reader.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.rejects.push(Reject { line, task: None, reason: e.to_string() });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            out.rejects.push(Reject {
                line,
                task: None,
                reason: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
            continue;
        }
        let fields: Vec<&str> = index.iter().map(|&i| &record[i]).collect();
        let row = match parse_row(&fields, line) {
            Ok(r) => r,
            Err(reason) => {
                out.rejects.push(Reject { line, task: Some(fields[1].to_string()), reason });
                continue;
            }
        };
        let reject = |row: &Row, reason: String| Reject { line: row.line, task: Some(row.task_id.clone()), reason };
        match row.lifecycle.as_str() {
            "started" => {
                if let Some(prev) = open.insert(row.task_id.clone(), row) {
                    out.rejects.push(reject(&prev, "started again before completing".into()));
                }
            }
            "completed" => match open.remove(&row.task_id) {
                None => out.rejects.push(reject(&row, "completed without a started row".into())),
                Some(start) if row.timestamp < start.timestamp => out.rejects.push(reject(
                    &row,
                    format!("end {} is before start {}", row.timestamp, start.timestamp),
                )),
                Some(start) if start.resource != row.resource => out.rejects.push(reject(
                    &row,
                    format!("started by {} but completed by {}", start.resource, row.resource),
                )),
                Some(start) => out.records.push(EventRecord {
                    case_id: row.case_id,
                    task_id: row.task_id,
                    activity: row.activity,
                    resource: row.resource,
                    start: start.timestamp,
                    end: row.timestamp,
                    application_type: row.application_type,
                    loan_goal: row.loan_goal,
                    requested_amount: row.requested_amount,
                }),
            },
            _ => {}
        }
    }
    for row in open.into_values() {
        out.rejects.push(Reject { line: row.line, task: Some(row.task_id), reason: "never completed".into() });
    }
    out.rejects.sort_by_key(|r| r.line);
    Ok(out)
}
