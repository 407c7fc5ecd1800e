//! Builds the six result tables from per-student scores and renders them as
//! aligned text or CSV.

use serde::Serialize;
use thiserror::Error;
use unicode_width::UnicodeWidthStr;

use super::{
    descriptive, efficiency, independent_t, independent_t_from_summary, paired_t, rating_summary,
    DescriptiveStats, Instrument, StatsError, TTestResult, Tails, TotalSdMethod, ALPHA,
};
use crate::session::{Score, TEST_LENGTH};

pub const TABLE_IDS: [u8; 6] = [1, 2, 3, 4, 5, 6];

const RATING_COLUMNS: [&str; 4] = ["Item", "x̄", "S.D.", "Translation"];
const EFFICIENCY_COLUMNS: [&str; 2] = ["Tests", "Percent"];
const TTEST_COLUMNS: [&str; 7] = ["Test", "S", "N", "x̄", "S.D.", "t", "sig"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("no application-cohort sessions recorded; nothing to analyze")]
    NoAppCohort,
    #[error("table {table} cannot be built: {reason}")]
    Unbuildable { table: u8, reason: String },
    #[error("unknown table {0}; tables are numbered 1 to 6")]
    UnknownTable(u8),
    #[error("table {table}: {source}")]
    Stats { table: u8, source: StatsError },
}

/// Scores and questionnaire answers for one student.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StudentScores {
    pub student_id: String,
    pub pretest: Option<Score>,
    pub during: Option<Score>,
    pub posttest: Option<Score>,
    pub retention: Option<Score>,
    pub satisfaction: Option<[u8; 3]>,
}

/// Everything the report reads.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StudyData {
    pub app: Vec<StudentScores>,
    pub traditional: Vec<StudentScores>,
    pub expert_ratings: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReportOptions {
    pub tails: Tails,
    pub total_sd: TotalSdMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Csv,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Text => "txt",
            TableFormat::Csv => "csv",
        }
    }
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" | "txt" => Ok(TableFormat::Text),
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!("format must be text or csv, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub id: u8,
    pub title: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn render(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Text => self.to_text(),
            TableFormat::Csv => self.to_csv(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.width()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.width());
            }
        }
        let line = |cells: &mut dyn Iterator<Item = &str>| {
            let mut out = String::new();
            for (i, cell) in cells.enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                out.push_str(cell);
                out.push_str(&" ".repeat(widths[i] - cell.width()));
            }
            out.trim_end().to_string()
        };
        let mut out = format!("Table {}. {}\n", self.id, self.title);
        out.push_str(&line(&mut self.columns.iter().copied()));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(&mut row.iter().map(String::as_str)));
            out.push('\n');
        }
        for note in &self.notes {
            out.push_str(note);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tables: Vec<Table>,
    /// `(table id, reason)` for every table that could not be built.
    pub omissions: Vec<(u8, String)>,
    pub footnotes: Vec<String>,
}

impl Report {
    pub fn table(&self, id: u8) -> Result<&Table, ReportError> {
        if !TABLE_IDS.contains(&id) {
            return Err(ReportError::UnknownTable(id));
        }
        if let Some(t) = self.tables.iter().find(|t| t.id == id) {
            return Ok(t);
        }
        let reason = self
            .omissions
            .iter()
            .find(|(t, _)| *t == id)
            .map(|(_, r)| r.clone())
            .unwrap_or_else(|| "no data".into());
        Err(ReportError::Unbuildable { table: id, reason })
    }

    pub fn omission_notices(&self) -> Vec<String> {
        self.omissions.iter().map(|(id, reason)| format!("Table {id} omitted: {reason}")).collect()
    }

    /// Footnotes plus omission notices, one per line.
    pub fn notes_text(&self) -> String {
        let mut out = String::new();
        for line in self.omission_notices().iter().chain(&self.footnotes) {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// Fixed-point formatting with round-half-away-from-zero. Representation
/// noise below 1e-6 of the last digit is discarded before rounding, so 0.125
/// prints as 0.13 at two places.
pub fn format_fixed(x: f64, decimals: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let scale = 10f64.powi(decimals as i32);
    let scaled = x.abs() * scale;
    let cleaned = (scaled * 1e6).round() / 1e6;
    let rounded = (cleaned + 0.5).floor();
    let sign = if x < 0.0 && rounded != 0.0 { "-" } else { "" };
    format!("{sign}{:.*}", decimals, rounded / scale)
}

fn corrects(scores: impl Iterator<Item = Score>) -> Vec<f64> {
    scores.map(|s| f64::from(s.correct)).collect()
}

fn ttest_row(label: &str, stats: &DescriptiveStats) -> Vec<String> {
    vec![
        label.to_string(),
        TEST_LENGTH.to_string(),
        stats.n.to_string(),
        format_fixed(stats.mean, 2),
        format_fixed(stats.sd, 2),
        String::new(),
        String::new(),
    ]
}

fn ttest_table(
    id: u8,
    title: &str,
    labels: [&str; 2],
    samples: [&[f64]; 2],
    test: &TTestResult,
    tails: Tails,
) -> Result<Table, ReportError> {
    let stats_err = |source| ReportError::Stats { table: id, source };
    let first = descriptive(samples[0]).map_err(stats_err)?;
    let second = descriptive(samples[1]).map_err(stats_err)?;
    let mut rows = vec![ttest_row(labels[0], &first), ttest_row(labels[1], &second)];
    let star = if test.significant(tails) { "*" } else { "" };
    rows[0][5] = format!("{}{star}", format_fixed(test.t, 2));
    rows[0][6] = format_fixed(test.p(tails), 4);
    Ok(Table {
        id,
        title: title.to_string(),
        columns: TTEST_COLUMNS.to_vec(),
        rows,
        notes: vec![format!("df = {}", test.df)],
    })
}

fn rating_table(
    id: u8,
    title: &str,
    instrument: Instrument,
    matrix: &[Vec<u8>],
    method: TotalSdMethod,
) -> Result<Table, ReportError> {
    let summary = rating_summary(instrument, matrix, method).map_err(|source| ReportError::Stats { table: id, source })?;
    let mut rows: Vec<Vec<String>> = summary
        .per_item
        .iter()
        .map(|item| {
            vec![
                item.label.to_string(),
                format_fixed(item.stats.mean, 2),
                format_fixed(item.stats.sd, 2),
                item.band.to_string(),
            ]
        })
        .collect();
    rows.push(vec![
        "Total".into(),
        format_fixed(summary.total.mean, 2),
        format_fixed(summary.total.sd, 2),
        summary.total_band.to_string(),
    ]);
    let mut notes = vec![format!("respondents = {}", summary.total.n)];
    if summary.total.sd_undefined {
        notes.push("single respondent: S.D. is undefined and shown as 0".into());
    }
    Ok(Table { id, title: title.to_string(), columns: RATING_COLUMNS.to_vec(), rows, notes })
}

fn unbuildable(table: u8, reason: impl Into<String>) -> ReportError {
    ReportError::Unbuildable { table, reason: reason.into() }
}

fn build_table(id: u8, data: &StudyData, opts: &ReportOptions) -> Result<Table, ReportError> {
    let tails = opts.tails;
    let stats_err = |source| ReportError::Stats { table: id, source };
    match id {
        1 => {
            if data.expert_ratings.is_empty() {
                return Err(unbuildable(1, "no expert ratings recorded"));
            }
            rating_table(1, "Expert evaluation of the application", Instrument::ExpertQuality, &data.expert_ratings, opts.total_sd)
        }
        2 => {
            let during: Vec<Score> = data.app.iter().filter_map(|s| s.during).collect();
            let post: Vec<Score> = data.app.iter().filter_map(|s| s.posttest).collect();
            if during.is_empty() || post.is_empty() {
                return Err(unbuildable(2, "needs completed during-lesson and posttest papers"));
            }
            let eff = efficiency(&during, &post).map_err(stats_err)?;
            Ok(Table {
                id: 2,
                title: "Efficiency of the application (E1/E2)".into(),
                columns: EFFICIENCY_COLUMNS.to_vec(),
                rows: vec![
                    vec!["During lesson (E1)".into(), format_fixed(eff.e1, 2)],
                    vec!["Posttest (E2)".into(), format_fixed(eff.e2, 2)],
                ],
                notes: vec![format!(
                    "E1/E2 = {eff} against the {}/{} standard: {}",
                    eff.standard.0,
                    eff.standard.1,
                    if eff.meets { "meets" } else { "does not meet" }
                )],
            })
        }
        3 => {
            let pairs: Vec<(Score, Score)> =
                data.app.iter().filter_map(|s| Some((s.pretest?, s.posttest?))).collect();
            if pairs.len() < 2 {
                return Err(unbuildable(3, format!("needs at least 2 students with pretest and posttest, have {}", pairs.len())));
            }
            let pre = corrects(pairs.iter().map(|p| p.0));
            let post = corrects(pairs.iter().map(|p| p.1));
            let test = paired_t(&pre, &post).map_err(stats_err)?;
            ttest_table(3, "Achievement before and after the lesson", ["Pretest", "Posttest"], [&pre, &post], &test, tails)
        }
        4 => {
            let app = corrects(data.app.iter().filter_map(|s| s.posttest));
            let lesson = corrects(data.traditional.iter().filter_map(|s| s.posttest));
            if lesson.is_empty() {
                return Err(unbuildable(4, "no traditional-cohort scores imported"));
            }
            if app.len() < 2 || lesson.len() < 2 {
                return Err(unbuildable(4, "each group needs at least 2 posttest scores"));
            }
            let test = independent_t(&app, &lesson).map_err(stats_err)?;
            ttest_table(4, "Achievement of application and traditional lesson", ["Application", "Lesson"], [&app, &lesson], &test, tails)
        }
        5 => {
            let pairs: Vec<(Score, Score)> =
                data.app.iter().filter_map(|s| Some((s.posttest?, s.retention?))).collect();
            if pairs.is_empty() {
                return Err(unbuildable(5, "no retention tests taken yet"));
            }
            if pairs.len() < 2 {
                return Err(unbuildable(5, "needs at least 2 students with posttest and retention"));
            }
            let post = corrects(pairs.iter().map(|p| p.0));
            let later = corrects(pairs.iter().map(|p| p.1));
            let test = paired_t(&post, &later).map_err(stats_err)?;
            ttest_table(5, "Retention two weeks after the posttest", ["Posttest", "After 2 weeks"], [&post, &later], &test, tails)
        }
        6 => {
            let matrix: Vec<Vec<u8>> = data.app.iter().filter_map(|s| s.satisfaction.map(|r| r.to_vec())).collect();
            if matrix.is_empty() {
                return Err(unbuildable(6, "no satisfaction questionnaires submitted"));
            }
            rating_table(6, "Student satisfaction (3-level scale)", Instrument::Satisfaction, &matrix, opts.total_sd)
        }
        other => Err(ReportError::UnknownTable(other)),
    }
}

fn footnotes(opts: &ReportOptions) -> Vec<String> {
    let tails = match opts.tails {
        Tails::One => "upper one-tailed",
        Tails::Two => "two-tailed",
    };
    let total_sd = match opts.total_sd {
        TotalSdMethod::RespondentMean => "the S.D. of each respondent's mean rating",
        TotalSdMethod::ItemMean => "the average of the item S.D.s",
    };
    let reference_t = independent_t_from_summary(
        &DescriptiveStats { n: 400, mean: 53.49, sd: 5.98, sd_undefined: false },
        &DescriptiveStats { n: 400, mean: 41.33, sd: 7.77, sd_undefined: false },
    )
    .map(|r| format_fixed(r.t, 2))
    .unwrap_or_else(|_| "n/a".into());
    vec![
        format!("* significant at alpha = {ALPHA}; sig is the {tails} probability of t."),
        "S is the test length (60 items); S.D. uses the n - 1 denominator.".into(),
        format!("Rating totals: mean of the item means; S.D. is {total_sd}."),
        "E1 is the during-lesson test and E2 the posttest; the end-of-subject test feeds no table.".into(),
        "Table 4 t is Application minus Lesson (pooled variance), positive when the application group scores higher.".into(),
        format!(
            "Reference discrepancy: the reference study prints t = -16.71 for application vs lesson, \
             but its own summary row (means 53.49/41.33, S.D. 5.98/7.77, N 400/400) gives t = {reference_t}."
        ),
        "Reference discrepancy: the reference study's E2 (91.84%) differs from its posttest mean \
         (53.49/60 = 89.15%); E2 here is computed from the posttest paper."
            .into(),
    ]
}

pub fn build_report(data: &StudyData, opts: &ReportOptions) -> Result<Report, ReportError> {
    if data.app.is_empty() {
        return Err(ReportError::NoAppCohort);
    }
    let mut tables = Vec::new();
    let mut omissions = Vec::new();
    for id in TABLE_IDS {
        match build_table(id, data, opts) {
            Ok(t) => tables.push(t),
            Err(e) => omissions.push((id, e.to_string())),
        }
    }
    Ok(Report { tables, omissions, footnotes: footnotes(opts) })
}
