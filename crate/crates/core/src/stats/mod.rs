//! Analyses behind the six result tables: descriptive statistics, E1/E2
//! efficiency, t tests with one-tailed significance, Likert summaries and
//! the report builder.

mod descriptive;
mod efficiency;
mod likert;
pub mod report;
mod tdist;
mod ttest;

use thiserror::Error;

pub use descriptive::{descriptive, mean, DescriptiveStats};
pub use efficiency::{efficiency, EfficiencyResult, EFFICIENCY_STANDARD};
pub use likert::{interpret, rating_summary, Instrument, ItemSummary, RatingSummary, Scale, TotalSdMethod};
pub use report::{build_report, format_fixed, Report, ReportError, ReportOptions, StudyData, Table, TableFormat};
pub use tdist::{ln_gamma, regularized_incomplete_beta, t_critical_upper, t_upper_tail};
pub use ttest::{independent_t, independent_t_from_summary, paired_t, TTestKind, TTestResult, Tails, ALPHA};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("paired samples differ in length: {pre} vs {post}")]
    Pairing { pre: usize, post: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
}
