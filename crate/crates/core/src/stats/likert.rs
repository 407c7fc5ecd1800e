use serde::{Deserialize, Serialize};

use super::{descriptive, DescriptiveStats, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    FivePoint,
    ThreePoint,
}

impl Scale {
    pub fn max(self) -> u8 {
        match self {
            Scale::FivePoint => 5,
            Scale::ThreePoint => 3,
        }
    }

    /// `(lower edge, label)`, highest band first. Lower edges are inclusive.
    fn bands(self) -> &'static [(f64, &'static str)] {
        match self {
            Scale::FivePoint => &[(4.50, "Highest"), (3.50, "High"), (2.50, "Moderate"), (1.50, "Low"), (1.00, "Lowest")],
            Scale::ThreePoint => &[(2.34, "high"), (1.67, "moderate"), (1.00, "low")],
        }
    }

    pub fn band_labels(self) -> impl Iterator<Item = &'static str> {
        self.bands().iter().map(|(_, label)| *label)
    }
}

/// Verbal band for a mean rating.
pub fn interpret(mean: f64, scale: Scale) -> Result<&'static str, StatsError> {
    if !(1.0..=f64::from(scale.max())).contains(&mean) {
        return Err(StatsError::Domain(format!("mean {mean} is outside the 1..{} scale", scale.max())));
    }
    Ok(scale
        .bands()
        .iter()
        .find(|(edge, _)| mean >= *edge)
        .map(|(_, label)| *label)
        .expect("lowest band starts at the scale minimum"))
}

/// The two rating questionnaires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instrument {
    /// Five-point expert review of the application, six items.
    ExpertQuality,
    /// Three-point student questionnaire, three items.
    Satisfaction,
}

impl Instrument {
    pub fn scale(self) -> Scale {
        match self {
            Instrument::ExpertQuality => Scale::FivePoint,
            Instrument::Satisfaction => Scale::ThreePoint,
        }
    }

    pub fn items(self) -> &'static [&'static str] {
        match self {
            Instrument::ExpertQuality => &[
                "1. Appropriateness of the background color and fonts.",
                "2. Aesthetics of the page compositions.",
                "3. Appropriateness of the animation.",
                "4. Correctness of speech synthesizer.",
                "5. Appropriateness of the audio feedback.",
                "6. Media and content consistency",
            ],
            Instrument::Satisfaction => &[
                "1. The Application has clear audio sound.",
                "2. The Application has pleasant colors.",
                "3. The Application is enjoyable.",
            ],
        }
    }
}

/// How the total row's S.D. is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TotalSdMethod {
    /// Sample S.D. of each respondent's mean rating.
    #[default]
    RespondentMean,
    /// Average of the per-item S.D.s.
    ItemMean,
}

impl std::str::FromStr for TotalSdMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "respondent-mean" => Ok(TotalSdMethod::RespondentMean),
            "item-mean" => Ok(TotalSdMethod::ItemMean),
            other => Err(format!("unknown total S.D. method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemSummary {
    pub label: &'static str,
    pub stats: DescriptiveStats,
    pub band: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingSummary {
    pub instrument: Instrument,
    pub scale: Scale,
    pub per_item: Vec<ItemSummary>,
    pub total: DescriptiveStats,
    pub total_band: &'static str,
    pub total_sd_method: TotalSdMethod,
}

/// Summarize a respondents-by-items rating matrix.
pub fn rating_summary(
    instrument: Instrument,
    matrix: &[Vec<u8>],
    method: TotalSdMethod,
) -> Result<RatingSummary, StatsError> {
    let scale = instrument.scale();
    let labels = instrument.items();
    if matrix.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    for (r, row) in matrix.iter().enumerate() {
        if row.len() != labels.len() {
            return Err(StatsError::Shape(format!(
                "respondent {} has {} ratings, expected {}",
                r + 1,
                row.len(),
                labels.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !(1..=scale.max()).contains(*v)) {
            return Err(StatsError::Domain(format!("rating {v} from respondent {} is off the scale", r + 1)));
        }
    }

    let per_item = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let column: Vec<f64> = matrix.iter().map(|row| f64::from(row[i])).collect();
            let stats = descriptive(&column)?;
            Ok(ItemSummary { label, stats, band: interpret(stats.mean, scale)? })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;

    let item_means: Vec<f64> = per_item.iter().map(|i| i.stats.mean).collect();
    let respondent_means: Vec<f64> = matrix
        .iter()
        .map(|row| row.iter().map(|&v| f64::from(v)).sum::<f64>() / row.len() as f64)
        .collect();
    let by_respondent = descriptive(&respondent_means)?;
    let mean = super::mean(&item_means)?;
    let sd = match method {
        TotalSdMethod::RespondentMean => by_respondent.sd,
        TotalSdMethod::ItemMean => super::mean(&per_item.iter().map(|i| i.stats.sd).collect::<Vec<_>>())?,
    };
    let total = DescriptiveStats { n: matrix.len(), mean, sd, sd_undefined: by_respondent.sd_undefined };
    Ok(RatingSummary {
        instrument,
        scale,
        per_item,
        total,
        total_band: interpret(mean, scale)?,
        total_sd_method: method,
    })
}
