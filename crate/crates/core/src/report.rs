//! Analysis result rows and their CSV/JSON serialization.
//!
//! The CSV header is fixed:
//! `method,scenario,M,load_pct,burst_bytes,traffic_class,flow_id,hops,delay_bound_s,stable,det_margin`
//! and an infeasible bound is written as the literal `INF` (in JSON too).

use crate::baselines::MethodTag;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no rows to emit")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

/// One (sweep point, method, flow) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: MethodTag,
    /// Scenario id 1..=4, or 0 for an ad-hoc analysis run.
    pub scenario: u8,
    #[serde(rename = "M")]
    pub nodes: usize,
    pub load_pct: f64,
    pub burst_bytes: f64,
    pub traffic_class: String,
    pub flow_id: String,
    pub hops: usize,
    /// `None` means the method reported the point infeasible (INF).
    #[serde(with = "inf_repr")]
    pub delay_bound_s: Option<f64>,
    pub stable: bool,
    pub det_margin: Option<f64>,
}

/// Serializes the delay bound as a JSON number, or the string `"INF"` when
/// infeasible.
mod inf_repr {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_str("INF"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Some(x)),
            Raw::Str(s) if s == "INF" => Ok(None),
            Raw::Str(s) => Err(D::Error::custom(format!("expected number or \"INF\", got {s:?}"))),
        }
    }
}

pub const CSV_HEADER: &str =
    "method,scenario,M,load_pct,burst_bytes,traffic_class,flow_id,hops,delay_bound_s,stable,det_margin";

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let delay = match row.delay_bound_s {
            Some(v) => v.to_string(),
            None => "INF".to_string(),
        };
        let det = match row.det_margin {
            Some(v) => v.to_string(),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.method,
            row.scenario,
            row.nodes,
            row.load_pct,
            row.burst_bytes,
            row.traffic_class,
            row.flow_id,
            row.hops,
            delay,
            row.stable,
            det
        ));
    }
    out
}

pub fn to_json(rows: &[ReportRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

pub fn from_json(text: &str) -> serde_json::Result<Vec<ReportRow>> {
    serde_json::from_str(text)
}

pub fn emit_report(rows: &[ReportRow], format: ReportFormat, path: &Path) -> Result<(), ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let text = match format {
        ReportFormat::Csv => to_csv(rows),
        ReportFormat::Json => to_json(rows),
    };
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}
