use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::place::{CountResponse, Outcome, PlaceValue};
use crate::session::{Cohort, ItemSource, Phase};

use super::TraditionalScoreRow;

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub timestamp: Timestamp,
    pub session_id: Option<String>,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Event {
    StudentRegistered {
        student_id: String,
    },
    SessionCreated {
        student_id: String,
        cohort: Cohort,
        seed: u64,
    },
    PhaseAdvanced {
        from: Phase,
        to: Phase,
    },
    ItemSelected {
        place: PlaceValue,
    },
    ClickRecorded {
        place: PlaceValue,
        running_count: u32,
    },
    AnswerSubmitted {
        item: ItemSource,
        response: CountResponse,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        submission_id: Option<String>,
        outcome: Outcome,
    },
    SatisfactionSubmitted {
        ratings: [u8; 3],
    },
    ScoresImported {
        rows: Vec<TraditionalScoreRow>,
    },
    ExpertRatingRecorded {
        expert_id: String,
        ratings: Vec<u8>,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::StudentRegistered { .. } => "StudentRegistered",
            Event::SessionCreated { .. } => "SessionCreated",
            Event::PhaseAdvanced { .. } => "PhaseAdvanced",
            Event::ItemSelected { .. } => "ItemSelected",
            Event::ClickRecorded { .. } => "ClickRecorded",
            Event::AnswerSubmitted { .. } => "AnswerSubmitted",
            Event::SatisfactionSubmitted { .. } => "SatisfactionSubmitted",
            Event::ScoresImported { .. } => "ScoresImported",
            Event::ExpertRatingRecorded { .. } => "ExpertRatingRecorded",
        }
    }
}
