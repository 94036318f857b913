//! JSONL trace records: one line per round.
//!
//! Floats serialize through serde_json's shortest round-trip representation,
//! so `parse(write(trace))` reproduces every record exactly.

use serde::{Deserialize, Serialize};

use grasswalk::walk::{RoundRecord, WalkResult};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: usize,
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accepted_from_sample: Option<usize>,
    pub solver_evals: u64,
    #[serde(rename = "x", skip_serializing_if = "Option::is_none", default)]
    pub iterate: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub flags: Vec<String>,
}

fn flag_names(record: &RoundRecord) -> Vec<String> {
    record
        .flags
        .iter()
        .map(|f| {
            serde_json::to_value(f)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default()
        })
        .collect()
}

pub fn trace_records(result: &WalkResult, emit_iterates: bool) -> Vec<TraceRecord> {
    result
        .trace
        .rounds
        .iter()
        .map(|r| TraceRecord {
            round: r.round,
            loss: r.loss,
            accepted_from_sample: r.accepted_from_sample,
            solver_evals: r.solver_evals,
            iterate: emit_iterates.then(|| r.iterate.as_slice().to_vec()),
            flags: flag_names(r),
        })
        .collect()
}

pub fn to_jsonl(records: &[TraceRecord]) -> CliResult<String> {
    let mut out = String::new();
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| CliError::Runtime(format!("serialize trace: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_jsonl(text: &str) -> CliResult<Vec<TraceRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| CliError::Runtime(format!("parse trace: {e}")))
        })
        .collect()
}
