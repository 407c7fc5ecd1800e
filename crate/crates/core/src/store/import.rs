//! Traditional-cohort score import.
//!
//! The file is CSV with the header `student_id,pretest,during,posttest,retention`;
//! `retention` may be empty. Every row is validated before anything is stored.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::session::TEST_LENGTH;

pub const TRADITIONAL_HEADER: [&str; 5] = ["student_id", "pretest", "during", "posttest", "retention"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraditionalScoreRow {
    pub student_id: String,
    pub pretest: u32,
    pub during: u32,
    pub posttest: u32,
    pub retention: Option<u32>,
}

/// A problem with one line of the input (header is line 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedImport {
    pub rows: Vec<TraditionalScoreRow>,
    /// Line number of each row, parallel to `rows`.
    pub lines: Vec<u64>,
    pub warnings: Vec<String>,
}

fn parse_score(field: &str, column: &str) -> Result<u32, String> {
    let v: u32 = field
        .trim()
        .parse()
        .map_err(|_| format!("{column} {field:?} is not a whole number"))?;
    if v as usize > TEST_LENGTH {
        return Err(format!("{column} {v} is outside 0..{TEST_LENGTH}"));
    }
    Ok(v)
}

/// Parse and validate the whole file, collecting every row error.
pub fn parse_traditional_csv(text: &str) -> Result<ParsedImport, Vec<RowError>> {
    if text.trim().is_empty() {
        return Ok(ParsedImport { rows: vec![], lines: vec![], warnings: vec!["empty file: nothing imported".into()] });
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| vec![RowError { line: 1, message: e.to_string() }])?
        .clone();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != TRADITIONAL_HEADER {
        return Err(vec![RowError {
            line: 1,
            message: format!("header must be {}, got {}", TRADITIONAL_HEADER.join(","), got.join(",")),
        }]);
    }

    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut errors = Vec::new();
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != TRADITIONAL_HEADER.len() {
            errors.push(RowError { line, message: format!("expected 5 fields, got {}", record.len()) });
            continue;
        }
        let student_id = record[0].trim().to_string();
        if student_id.is_empty() {
            errors.push(RowError { line, message: "student_id is empty".into() });
            continue;
        }
        let parsed = (|| {
            let retention = match record[4].trim() {
                "" => None,
                v => Some(parse_score(v, "retention")?),
            };
            Ok::<_, String>(TraditionalScoreRow {
                student_id: student_id.clone(),
                pretest: parse_score(&record[1], "pretest")?,
                during: parse_score(&record[2], "during")?,
                posttest: parse_score(&record[3], "posttest")?,
                retention,
            })
        })();
        match parsed {
            Ok(row) => {
                if !seen.insert(student_id.clone()) {
                    errors.push(RowError { line, message: format!("duplicate student_id {student_id:?}") });
                    continue;
                }
                rows.push(row);
                lines.push(line);
            }
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let warnings = if rows.is_empty() { vec!["no data rows: nothing imported".into()] } else { vec![] };
    Ok(ParsedImport { rows, lines, warnings })
}

pub fn traditional_csv(rows: &[TraditionalScoreRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRADITIONAL_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.student_id.clone(),
            r.pretest.to_string(),
            r.during.to_string(),
            r.posttest.to_string(),
            r.retention.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
