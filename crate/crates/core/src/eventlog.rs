//! Event-log CSV rows shared by the simulator (writer) and the miner (reader).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub const HEADER: [&str; 9] = [
    "case_id",
    "task_id",
    "activity",
    "resource",
    "lifecycle",
    "timestamp",
    "application_type",
    "loan_goal",
    "requested_amount",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lifecycle {
    Enabled,
    Started,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub case_id: String,
    pub task_id: String,
    pub activity: String,
    /// Empty for `enabled` rows.
    pub resource: String,
    pub lifecycle: Lifecycle,
    pub timestamp: i64,
    pub application_type: String,
    pub loan_goal: String,
    #[serde(serialize_with = "two_decimals")]
    pub requested_amount: f64,
}

fn two_decimals<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:.2}"))
}

/// Writes the header and rows. Output is byte-stable for equal input.
pub fn write_csv<W: Write>(out: W, rows: &[EventRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[EventRow]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Reads rows with strict typing. Column order may differ from [`HEADER`].
pub fn read_csv<R: Read>(input: R) -> csv::Result<Vec<EventRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
