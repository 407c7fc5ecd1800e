use serde::{Deserialize, Serialize};

use super::{descriptive, t_upper_tail, DescriptiveStats, StatsError};

/// Significance level for every decision in the report.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestKind {
    Paired,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tails {
    #[default]
    One,
    Two,
}

impl std::str::FromStr for Tails {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one" => Ok(Tails::One),
            "two" => Ok(Tails::Two),
            other => Err(format!("tails must be one or two, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: u32,
    /// Upper-tail probability `P(T > t)`.
    pub p_one_tailed: f64,
    pub significant_at_05: bool,
    pub kind: TTestKind,
}

impl TTestResult {
    fn new(t: f64, df: u32, kind: TTestKind) -> Result<Self, StatsError> {
        let p = t_upper_tail(t, df)?;
        Ok(Self { t, df, p_one_tailed: p, significant_at_05: p < ALPHA, kind })
    }

    pub fn p(&self, tails: Tails) -> f64 {
        match tails {
            Tails::One => self.p_one_tailed,
            Tails::Two => (2.0 * self.p_one_tailed.min(1.0 - self.p_one_tailed)).min(1.0),
        }
    }

    pub fn significant(&self, tails: Tails) -> bool {
        self.p(tails) < ALPHA
    }
}

/// `mean / se`, with the zero-spread cases pinned: 0 when the mean is also
/// zero, otherwise an infinite statistic carrying the mean's sign.
fn ratio(mean: f64, se: f64) -> f64 {
    if se > 0.0 {
        mean / se
    } else if mean == 0.0 {
        0.0
    } else {
        mean.signum() * f64::INFINITY
    }
}

/// Paired test on `post - pre`, df = n - 1.
pub fn paired_t(pre: &[f64], post: &[f64]) -> Result<TTestResult, StatsError> {
    if pre.len() != post.len() {
        return Err(StatsError::Pairing { pre: pre.len(), post: post.len() });
    }
    if pre.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: pre.len() });
    }
    let diffs: Vec<f64> = pre.iter().zip(post).map(|(a, b)| b - a).collect();
    let d = descriptive(&diffs)?;
    let t = ratio(d.mean, d.sd / (d.n as f64).sqrt());
    TTestResult::new(t, (d.n - 1) as u32, TTestKind::Paired)
}

/// Pooled-variance two-sample test, positive when `mean(a) > mean(b)`.
pub fn independent_t(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    independent_t_from_summary(&descriptive(a)?, &descriptive(b)?)
}

pub fn independent_t_from_summary(a: &DescriptiveStats, b: &DescriptiveStats) -> Result<TTestResult, StatsError> {
    for s in [a, b] {
        if s.n < 2 {
            return Err(StatsError::TooFew { needed: 2, got: s.n });
        }
    }
    let (na, nb) = (a.n as f64, b.n as f64);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * a.sd.powi(2) + (nb - 1.0) * b.sd.powi(2)) / df;
    let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    TTestResult::new(ratio(a.mean - b.mean, se), (a.n + b.n - 2) as u32, TTestKind::Independent)
}
