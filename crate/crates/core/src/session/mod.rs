//! The study protocol: test battery, practice schedule, and the per-student
//! state machine that walks through the phases in a fixed order.

mod battery;
mod engine;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use battery::{
    build_practice_schedule, build_test, PracticeSchedule, TestPaper, PLACE_COMPOSITION, PRACTICE_PER_PLACE,
    TEST_LENGTH,
};
pub use engine::{
    ActiveItem, CountState, ItemSource, PracticeProgress, ResponseRecord, Score, SessionError, StudySession,
    SubmitResult, RETENTION_DELAY_DAYS, SATISFACTION_ITEMS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    App,
    Traditional,
}

impl std::str::FromStr for Cohort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "app" => Ok(Cohort::App),
            "traditional" => Ok(Cohort::Traditional),
            other => Err(format!("unknown cohort {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pretest,
    AppTraining,
    Practice,
    DuringLessonTest,
    ExtraKnowledge,
    EndOfSubjectTest,
    Satisfaction,
    Posttest,
    RetentionWait,
    RetentionTest,
    Done,
}

impl Phase {
    pub const ORDER: [Phase; 11] = [
        Phase::Pretest,
        Phase::AppTraining,
        Phase::Practice,
        Phase::DuringLessonTest,
        Phase::ExtraKnowledge,
        Phase::EndOfSubjectTest,
        Phase::Satisfaction,
        Phase::Posttest,
        Phase::RetentionWait,
        Phase::RetentionTest,
        Phase::Done,
    ];

    pub fn test_kind(self) -> Option<TestKind> {
        match self {
            Phase::Pretest => Some(TestKind::Pretest),
            Phase::DuringLessonTest => Some(TestKind::DuringLesson),
            Phase::EndOfSubjectTest => Some(TestKind::EndOfSubject),
            Phase::Posttest => Some(TestKind::Posttest),
            Phase::RetentionTest => Some(TestKind::Retention),
            _ => None,
        }
    }

    /// Phases that happen away from the platform for a cohort are skipped.
    pub fn enabled_for(self, cohort: Cohort) -> bool {
        match cohort {
            Cohort::App => true,
            Cohort::Traditional => !matches!(
                self,
                Phase::AppTraining | Phase::Practice | Phase::ExtraKnowledge | Phase::Satisfaction
            ),
        }
    }

    pub fn next_for(self, cohort: Cohort) -> Option<Phase> {
        let pos = Self::ORDER.iter().position(|&p| p == self)?;
        Self::ORDER[pos + 1..].iter().copied().find(|p| p.enabled_for(cohort))
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Pretest => "pretest",
            Phase::AppTraining => "app_training",
            Phase::Practice => "practice",
            Phase::DuringLessonTest => "during_lesson_test",
            Phase::ExtraKnowledge => "extra_knowledge",
            Phase::EndOfSubjectTest => "end_of_subject_test",
            Phase::Satisfaction => "satisfaction",
            Phase::Posttest => "posttest",
            Phase::RetentionWait => "retention_wait",
            Phase::RetentionTest => "retention_test",
            Phase::Done => "done",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The scored 60-item instruments. `EndOfSubject` is administered but feeds
/// no analysis table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Pretest,
    DuringLesson,
    EndOfSubject,
    Posttest,
    Retention,
}

impl TestKind {
    /// The four instruments of the battery (240 items per student).
    pub const BATTERY: [TestKind; 4] =
        [TestKind::Pretest, TestKind::DuringLesson, TestKind::Posttest, TestKind::Retention];

    pub const ALL: [TestKind; 5] = [
        TestKind::Pretest,
        TestKind::DuringLesson,
        TestKind::EndOfSubject,
        TestKind::Posttest,
        TestKind::Retention,
    ];

    /// Stream id mixed into the seed so each kind gets its own paper.
    pub(crate) fn stream(self) -> u64 {
        match self {
            TestKind::Pretest => 1,
            TestKind::DuringLesson => 2,
            TestKind::EndOfSubject => 3,
            TestKind::Posttest => 4,
            TestKind::Retention => 5,
        }
    }

    pub fn phase(self) -> Phase {
        match self {
            TestKind::Pretest => Phase::Pretest,
            TestKind::DuringLesson => Phase::DuringLessonTest,
            TestKind::EndOfSubject => Phase::EndOfSubjectTest,
            TestKind::Posttest => Phase::Posttest,
            TestKind::Retention => Phase::RetentionTest,
        }
    }
}
