//! Campaign results and their JSON / CSV renderings.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::Format;
use crate::error::{Error, Result};
use crate::verify::{Verdict, VerificationReport};

/// A case that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub case: Value,
    pub error: String,
    pub message: String,
}

impl Failure {
    pub fn new(case: Value, error: &Error) -> Self {
        Self {
            case,
            error: error.kind().into(),
            message: error.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub equality: usize,
    pub violated: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignResult {
    pub config: Value,
    pub reports: Vec<VerificationReport>,
    pub failures: Vec<Failure>,
    pub summary: Summary,
}

impl CampaignResult {
    pub fn new(
        config: Value,
        outcomes: Vec<std::result::Result<VerificationReport, Failure>>,
    ) -> Self {
        let mut reports = vec![];
        let mut failures = vec![];
        for o in outcomes {
            match o {
                Ok(mut r) => {
                    r.diagnostics.insert("config".into(), config.clone());
                    reports.push(r);
                }
                Err(f) => failures.push(f),
            }
        }
        let mut summary = Summary {
            failed: failures.len(),
            ..Summary::default()
        };
        for r in &reports {
            match r.verdict {
                Verdict::Holds => summary.passed += 1,
                Verdict::Equality => summary.equality += 1,
                Verdict::Violated => summary.violated += 1,
            }
        }
        Self {
            config,
            reports,
            failures,
            summary,
        }
    }

    /// 0 when every check holds, 1 on any violation, 2 when a case could
    /// not be evaluated.
    pub fn exit_code(&self) -> i32 {
        if self.summary.failed > 0 {
            2
        } else if self.summary.violated > 0 {
            1
        } else {
            0
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            Format::Csv => {
                let mut rows: Vec<Value> = self
                    .reports
                    .iter()
                    .map(serde_json::to_value)
                    .collect::<std::result::Result<_, _>>()?;
                rows.extend(self.failures.iter().map(|f| {
                    serde_json::json!({ "check": "failure", "inputs": f.case, "verdict": f.error, "diagnostics": { "message": f.message } })
                }));
                render_csv(&rows)
            }
        }
    }
}

/// Plain records (no verdicts), e.g. body descriptions or rigidity ladders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordSet {
    pub config: Value,
    pub records: Vec<Value>,
}

impl RecordSet {
    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            Format::Csv => render_csv(&self.records),
        }
    }
}

/// Leading CSV columns, when present.
const LEADING: [&str; 8] = [
    "check",
    "verdict",
    "lhs",
    "rhs",
    "gap",
    "tol",
    "timing_ms",
    "inputs",
];

/// One row per record; columns are the union of top-level keys (report
/// fields first), nested values are embedded as JSON.
pub fn render_csv(rows: &[Value]) -> Result<String> {
    let mut columns: Vec<String> = LEADING
        .iter()
        .filter(|c| rows.iter().any(|r| r.get(**c).is_some()))
        .map(|c| c.to_string())
        .collect();
    for row in rows {
        if let Value::Object(map) = row {
            for k in map.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
    }
    let mut w = csv::Writer::from_writer(vec![]);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&columns).map_err(io)?;
    for row in rows {
        let cells = columns.iter().map(|c| match row.get(c) {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(v) => v.to_string(),
        });
        w.write_record(cells).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Writes `text` to `path` through a temporary file in the same directory,
/// so readers never observe a partial report.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}
