use std::fmt;

use serde::Serialize;

use super::StatsError;
use crate::session::{Score, TEST_LENGTH};

/// Both E1 and E2 must reach this percentage.
pub const EFFICIENCY_STANDARD: (f64, f64) = (80.0, 80.0);

/// Process (E1, during-lesson) and product (E2, posttest) efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyResult {
    pub e1: f64,
    pub e2: f64,
    pub standard: (f64, f64),
    pub meets: bool,
}

impl fmt::Display for EfficiencyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", super::format_fixed(self.e1, 2), super::format_fixed(self.e2, 2))
    }
}

fn percent_of_mean(scores: &[Score]) -> Result<f64, StatsError> {
    if scores.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let total: u64 = scores.iter().map(|s| u64::from(s.correct)).sum();
    // Multiply before dividing so exact boundaries such as 48/60 stay exact.
    Ok(total as f64 * 100.0 / (scores.len() * TEST_LENGTH) as f64)
}

pub fn efficiency(during: &[Score], post: &[Score]) -> Result<EfficiencyResult, StatsError> {
    let e1 = percent_of_mean(during)?;
    let e2 = percent_of_mean(post)?;
    let standard = EFFICIENCY_STANDARD;
    Ok(EfficiencyResult { e1, e2, standard, meets: e1 >= standard.0 && e2 >= standard.1 })
}
