use std::collections::BTreeMap;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::battery::{build_practice_schedule, build_test, PracticeSchedule, TestPaper, PRACTICE_PER_PLACE, TEST_LENGTH};
use super::{Cohort, Phase, TestKind};
use crate::clock::Timestamp;
use crate::place::{evaluate_response, all_places, CountResponse, Cue, Outcome, PlaceError, PlaceValue, Question, Verdict};

pub const RETENTION_DELAY_DAYS: i64 = 14;
pub const SATISFACTION_ITEMS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("place {0} is not part of the active item")]
    InvalidPlace(PlaceValue),
    #[error(transparent)]
    Malformed(#[from] PlaceError),
    #[error("{kind:?} paper incomplete: {answered}/{TEST_LENGTH} answered")]
    Incomplete { kind: TestKind, answered: usize },
    #[error("retention test is not due until {due}")]
    NotDue { due: Timestamp },
    #[error("{0}")]
    Validation(String),
}

/// Score on one 60-item paper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub correct: u32,
    pub max: u32,
    pub percent: f64,
}

impl Score {
    pub fn new(correct: u32) -> Self {
        let max = TEST_LENGTH as u32;
        assert!(correct <= max, "score {correct} exceeds {max}");
        Self { correct, max, percent: f64::from(correct) / f64::from(max) * 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ItemSource {
    Test { kind: TestKind, index: usize },
    Practice { place: PlaceValue, index: usize },
    Review { place: PlaceValue, index: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct ActiveItem<'a> {
    pub source: ItemSource,
    pub question: &'a Question,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountState {
    pub place: PlaceValue,
    pub running_count: u32,
    pub cue: Cue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResponseRecord {
    pub question_id: String,
    pub number: u32,
    pub counts: CountResponse,
    pub outcome: Outcome,
    pub at: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PracticeProgress {
    /// Items finished (answered correctly) per place, ones first.
    pub completed: [usize; 7],
    pub attempts: u64,
    pub retries: u64,
    pub review_cursor: [usize; 7],
    pub reviews: u64,
}

impl PracticeProgress {
    pub fn total_completed(&self) -> usize {
        self.completed.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubmitResult {
    pub verdict: Verdict,
    pub item: ItemSource,
    /// The submission id was seen before; nothing new was recorded.
    pub replayed: bool,
}

/// One student's walk through the study protocol.
///
/// Operations validate fully before mutating, so an `Err` leaves the session
/// unchanged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySession {
    pub session_id: String,
    pub student_id: String,
    pub cohort: Cohort,
    pub seed: u64,
    pub created_at: Timestamp,
    pub phase: Phase,
    pub phase_history: Vec<(Phase, Timestamp)>,
    pub posttest_completed_at: Option<Timestamp>,
    pub responses: BTreeMap<TestKind, Vec<ResponseRecord>>,
    pub practice: PracticeProgress,
    pub satisfaction: Option<[u8; SATISFACTION_ITEMS]>,
    pub selected_place: Option<PlaceValue>,
    pub running_counts: BTreeMap<PlaceValue, u32>,
    pub submissions: BTreeMap<String, Verdict>,
    #[serde(skip)]
    papers: Vec<TestPaper>,
    #[serde(skip)]
    schedule: PracticeSchedule,
}

impl StudySession {
    pub fn new(session_id: String, student_id: String, cohort: Cohort, seed: u64, now: Timestamp) -> Self {
        Self {
            session_id,
            student_id,
            cohort,
            seed,
            created_at: now,
            phase: Phase::Pretest,
            phase_history: vec![(Phase::Pretest, now)],
            posttest_completed_at: None,
            responses: BTreeMap::new(),
            practice: PracticeProgress::default(),
            satisfaction: None,
            selected_place: None,
            running_counts: BTreeMap::new(),
            submissions: BTreeMap::new(),
            papers: TestKind::ALL.iter().map(|&k| build_test(k, seed)).collect(),
            schedule: build_practice_schedule(seed),
        }
    }

    pub fn paper(&self, kind: TestKind) -> &TestPaper {
        &self.papers[TestKind::ALL.iter().position(|&k| k == kind).unwrap()]
    }

    pub fn schedule(&self) -> &PracticeSchedule {
        &self.schedule
    }

    pub fn answered(&self, kind: TestKind) -> usize {
        self.responses.get(&kind).map_or(0, Vec::len)
    }

    /// Lowest place whose practice block still has items left.
    fn next_open_block(&self) -> Option<PlaceValue> {
        all_places()
            .iter()
            .copied()
            .find(|p| self.practice.completed[p.power() as usize] < PRACTICE_PER_PLACE)
    }

    pub fn active_item(&self) -> Option<ActiveItem<'_>> {
        if let Some(kind) = self.phase.test_kind() {
            let index = self.answered(kind);
            return self.paper(kind).items.get(index).map(|question| ActiveItem {
                source: ItemSource::Test { kind, index },
                question,
            });
        }
        match self.phase {
            Phase::Practice => {
                let place = self.selected_place.or_else(|| self.next_open_block())?;
                let index = self.practice.completed[place.power() as usize];
                self.schedule.block(place).get(index).map(|question| ActiveItem {
                    source: ItemSource::Practice { place, index },
                    question,
                })
            }
            Phase::ExtraKnowledge => {
                let place = self.selected_place.unwrap_or(PlaceValue::Ones);
                let index = self.practice.review_cursor[place.power() as usize] % PRACTICE_PER_PLACE;
                Some(ActiveItem {
                    source: ItemSource::Review { place, index },
                    question: &self.schedule.block(place)[index],
                })
            }
            _ => None,
        }
    }

    /// Digit-menu selection; only meaningful during practice and review.
    pub fn select_place(&mut self, place: PlaceValue) -> Result<ActiveItem<'_>, SessionError> {
        match self.phase {
            Phase::Practice => {
                if self.practice.completed[place.power() as usize] >= PRACTICE_PER_PLACE {
                    return Err(SessionError::Protocol(format!("practice block for {place} is finished")));
                }
            }
            Phase::ExtraKnowledge => {}
            other => {
                return Err(SessionError::Protocol(format!("place selection is not available during {other}")));
            }
        }
        self.selected_place = Some(place);
        self.running_counts.clear();
        Ok(self.active_item().expect("selected block has an item"))
    }

    pub fn record_click(&mut self, place: PlaceValue) -> Result<CountState, SessionError> {
        let item = self
            .active_item()
            .ok_or_else(|| SessionError::Protocol(format!("no active item during {}", self.phase)))?;
        if item.question.decomposition.digit_at(place).is_none() {
            return Err(SessionError::InvalidPlace(place));
        }
        let count = self.running_counts.entry(place).or_insert(0);
        *count += 1;
        Ok(CountState { place, running_count: *count, cue: Cue::Count(*count) })
    }

    pub fn submit_answer(
        &mut self,
        response: &CountResponse,
        submission_id: Option<&str>,
        now: Timestamp,
    ) -> Result<SubmitResult, SessionError> {
        let item = self
            .active_item()
            .ok_or_else(|| SessionError::Protocol(format!("no active item during {}", self.phase)))?;
        if let Some(verdict) = submission_id.and_then(|id| self.submissions.get(id)) {
            return Ok(SubmitResult { verdict: verdict.clone(), item: item.source, replayed: true });
        }
        let verdict = evaluate_response(item.question, response)?;
        let source = item.source;
        let question_id = item.question.id.clone();
        let number = item.question.number;

        match source {
            ItemSource::Test { kind, index } => {
                self.responses.entry(kind).or_default().push(ResponseRecord {
                    question_id,
                    number,
                    counts: response.clone(),
                    outcome: verdict.outcome,
                    at: now,
                });
                if kind == TestKind::Posttest && index + 1 == TEST_LENGTH {
                    self.posttest_completed_at = Some(now);
                }
            }
            ItemSource::Practice { place, .. } => {
                self.practice.attempts += 1;
                if verdict.is_correct() {
                    self.practice.completed[place.power() as usize] += 1;
                    if self.practice.completed[place.power() as usize] == PRACTICE_PER_PLACE {
                        self.selected_place = None;
                    }
                } else {
                    self.practice.retries += 1;
                }
            }
            ItemSource::Review { place, .. } => {
                self.practice.reviews += 1;
                if verdict.is_correct() {
                    self.practice.review_cursor[place.power() as usize] += 1;
                }
            }
        }
        self.running_counts.clear();
        if let Some(id) = submission_id {
            self.submissions.insert(id.to_string(), verdict.clone());
        }
        Ok(SubmitResult { verdict, item: source, replayed: false })
    }

    pub fn submit_satisfaction(&mut self, ratings: &[u8]) -> Result<(), SessionError> {
        if self.phase != Phase::Satisfaction {
            return Err(SessionError::Protocol(format!("satisfaction questionnaire is not open during {}", self.phase)));
        }
        if self.satisfaction.is_some() {
            return Err(SessionError::Protocol("satisfaction questionnaire already submitted".into()));
        }
        let ratings: [u8; SATISFACTION_ITEMS] = ratings.try_into().map_err(|_| {
            SessionError::Validation(format!("expected {SATISFACTION_ITEMS} ratings, got {}", ratings.len()))
        })?;
        if let Some(bad) = ratings.iter().find(|r| !(1..=3).contains(*r)) {
            return Err(SessionError::Validation(format!("rating {bad} is outside the 1..3 scale")));
        }
        self.satisfaction = Some(ratings);
        Ok(())
    }

    pub fn score(&self, kind: TestKind) -> Result<Score, SessionError> {
        let records = self.responses.get(&kind).map(Vec::as_slice).unwrap_or_default();
        if records.len() < TEST_LENGTH {
            return Err(SessionError::Incomplete { kind, answered: records.len() });
        }
        let correct = records.iter().filter(|r| r.outcome == Outcome::Correct).count();
        Ok(Score::new(correct as u32))
    }

    pub fn retention_due_at(&self) -> Option<Timestamp> {
        self.posttest_completed_at.map(|t| t + Duration::days(RETENTION_DELAY_DAYS))
    }

    fn check_phase_complete(&self, now: Timestamp) -> Result<(), SessionError> {
        if let Some(kind) = self.phase.test_kind() {
            let answered = self.answered(kind);
            if answered < TEST_LENGTH {
                return Err(SessionError::Incomplete { kind, answered });
            }
            return Ok(());
        }
        match self.phase {
            Phase::Practice => {
                let done = self.practice.total_completed();
                if done < PRACTICE_PER_PLACE * 7 {
                    return Err(SessionError::Protocol(format!("practice unfinished: {done}/140 items")));
                }
            }
            Phase::Satisfaction if self.satisfaction.is_none() => {
                return Err(SessionError::Protocol("satisfaction questionnaire not submitted".into()));
            }
            Phase::RetentionWait => {
                let due = self.retention_due_at().ok_or_else(|| {
                    SessionError::Protocol("posttest completion time missing".into())
                })?;
                if now < due {
                    return Err(SessionError::NotDue { due });
                }
            }
            Phase::Done => return Err(SessionError::Protocol("session is finished".into())),
            _ => {}
        }
        Ok(())
    }

    pub fn can_advance(&self, now: Timestamp) -> bool {
        self.check_phase_complete(now).is_ok()
    }

    pub fn advance(&mut self, now: Timestamp) -> Result<Phase, SessionError> {
        self.check_phase_complete(now)?;
        let next = self
            .phase
            .next_for(self.cohort)
            .ok_or_else(|| SessionError::Protocol("session is finished".into()))?;
        self.phase = next;
        self.phase_history.push((next, now));
        self.selected_place = None;
        self.running_counts.clear();
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{Clock, SimulatedClock};

    fn session(cohort: Cohort) -> (StudySession, SimulatedClock) {
        let clock = SimulatedClock::default();
        (StudySession::new("sess-1".into(), "s001".into(), cohort, 42, clock.now()), clock)
    }

    fn answer_current(s: &mut StudySession, correct: bool, now: Timestamp) -> SubmitResult {
        let q = s.active_item().unwrap().question.clone();
        let mut r = CountResponse::exact(&q.decomposition);
        if !correct {
            r.counts[0].clicks += 1;
        }
        s.submit_answer(&r, None, now).unwrap()
    }

    fn finish_test(s: &mut StudySession, correct: usize, now: Timestamp) {
        for i in 0..TEST_LENGTH {
            answer_current(s, i < correct, now);
        }
    }

    fn finish_practice(s: &mut StudySession, now: Timestamp) {
        while s.practice.total_completed() < 140 {
            answer_current(s, true, now);
        }
    }

    #[test]
    fn new_session_starts_at_pretest() {
        let (s, _) = session(Cohort::App);
        assert_eq!(s.phase, Phase::Pretest);
        let item = s.active_item().unwrap();
        assert_eq!(item.source, ItemSource::Test { kind: TestKind::Pretest, index: 0 });
    }

    #[test]
    fn pretest_complete_advances_to_training() {
        let (mut s, clock) = session(Cohort::App);
        assert!(matches!(s.advance(clock.now()), Err(SessionError::Incomplete { answered: 0, .. })));
        finish_test(&mut s, 30, clock.now());
        assert_eq!(s.advance(clock.now()).unwrap(), Phase::AppTraining);
    }

    #[test]
    fn test_answers_are_single_shot() {
        let (mut s, clock) = session(Cohort::App);
        let r = answer_current(&mut s, false, clock.now());
        assert_eq!(r.verdict.outcome, Outcome::Retry);
        assert_eq!(s.answered(TestKind::Pretest), 1);
        assert_eq!(s.active_item().unwrap().source, ItemSource::Test { kind: TestKind::Pretest, index: 1 });
    }

    #[test]
    fn practice_retry_keeps_the_same_item() {
        let (mut s, clock) = session(Cohort::App);
        finish_test(&mut s, 60, clock.now());
        s.advance(clock.now()).unwrap();
        s.advance(clock.now()).unwrap();
        assert_eq!(s.phase, Phase::Practice);

        let first = s.active_item().unwrap().source;
        let place = s.active_item().unwrap().question.decomposition.parts[0].place;
        s.record_click(place).unwrap();
        let r = answer_current(&mut s, false, clock.now());
        assert_eq!(r.verdict.outcome, Outcome::Retry);
        assert_eq!(s.active_item().unwrap().source, first);
        assert!(s.running_counts.is_empty());

        answer_current(&mut s, true, clock.now());
        assert_ne!(s.active_item().unwrap().source, first);
        assert_eq!(s.practice.completed[0], 1);
    }

    #[test]
    fn clicks_count_up_by_one() {
        let (mut s, _) = session(Cohort::App);
        let q = s.active_item().unwrap().question.clone();
        let part = q.decomposition.parts[0];
        let mut last = None;
        for i in 1..=u32::from(part.digit) {
            let state = s.record_click(part.place).unwrap();
            assert_eq!(state.running_count, i);
            assert_eq!(state.cue, Cue::Count(i));
            last = Some(state);
        }
        assert_eq!(last.unwrap().running_count, u32::from(part.digit));
    }

    #[test]
    fn click_on_missing_place_is_rejected() {
        let (mut s, _) = session(Cohort::App);
        let q = s.active_item().unwrap().question.clone();
        let absent = all_places().iter().copied().find(|p| q.decomposition.digit_at(*p).is_none()).unwrap();
        assert_eq!(s.record_click(absent), Err(SessionError::InvalidPlace(absent)));
    }

    #[test]
    fn click_without_active_item_is_a_protocol_error() {
        let (mut s, clock) = session(Cohort::App);
        finish_test(&mut s, 60, clock.now());
        assert!(matches!(s.record_click(PlaceValue::Ones), Err(SessionError::Protocol(_))));
        s.advance(clock.now()).unwrap();
        assert!(matches!(s.record_click(PlaceValue::Ones), Err(SessionError::Protocol(_))));
    }

    #[test]
    fn scores() {
        let (mut s, clock) = session(Cohort::App);
        assert!(matches!(s.score(TestKind::Pretest), Err(SessionError::Incomplete { .. })));
        finish_test(&mut s, 48, clock.now());
        let score = s.score(TestKind::Pretest).unwrap();
        assert_eq!(score.correct, 48);
        assert_eq!(score.percent, 80.0);
        assert_eq!(Score::new(60).percent, 100.0);
        assert_eq!(Score::new(0).percent, 0.0);
    }

    #[test]
    fn idempotent_submission() {
        let (mut s, clock) = session(Cohort::App);
        let q = s.active_item().unwrap().question.clone();
        let r = CountResponse::exact(&q.decomposition);
        let a = s.submit_answer(&r, Some("sub-1"), clock.now()).unwrap();
        let b = s.submit_answer(&r, Some("sub-1"), clock.now()).unwrap();
        assert!(!a.replayed);
        assert!(b.replayed);
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(s.answered(TestKind::Pretest), 1);
    }

    #[test]
    fn satisfaction_validation() {
        let (mut s, _) = session(Cohort::App);
        assert!(matches!(s.submit_satisfaction(&[3, 3, 3]), Err(SessionError::Protocol(_))));
        s.phase = Phase::Satisfaction;
        assert!(matches!(s.submit_satisfaction(&[0, 3, 3]), Err(SessionError::Validation(_))));
        assert!(matches!(s.submit_satisfaction(&[3, 3]), Err(SessionError::Validation(_))));
        s.submit_satisfaction(&[3, 3, 3]).unwrap();
        assert_eq!(s.satisfaction, Some([3, 3, 3]));
    }

    #[test]
    fn full_protocol_with_retention_gate() {
        let (mut s, clock) = session(Cohort::App);
        finish_test(&mut s, 30, clock.now());
        s.advance(clock.now()).unwrap(); // training
        s.advance(clock.now()).unwrap(); // practice
        assert!(matches!(s.advance(clock.now()), Err(SessionError::Protocol(_))));
        finish_practice(&mut s, clock.now());
        s.advance(clock.now()).unwrap(); // during
        finish_test(&mut s, 54, clock.now());
        s.advance(clock.now()).unwrap(); // extra knowledge
        s.advance(clock.now()).unwrap(); // end of subject
        finish_test(&mut s, 55, clock.now());
        s.advance(clock.now()).unwrap(); // satisfaction
        assert!(s.advance(clock.now()).is_err());
        s.submit_satisfaction(&[3, 2, 3]).unwrap();
        s.advance(clock.now()).unwrap(); // posttest
        finish_test(&mut s, 55, clock.now());
        let done_at = clock.now();
        assert_eq!(s.posttest_completed_at, Some(done_at));
        assert_eq!(s.advance(clock.now()).unwrap(), Phase::RetentionWait);

        clock.advance_days(13);
        assert!(matches!(s.advance(clock.now()), Err(SessionError::NotDue { .. })));
        clock.advance_seconds(86_399);
        assert!(matches!(s.advance(clock.now()), Err(SessionError::NotDue { .. })));
        clock.advance_seconds(1);
        assert_eq!(s.advance(clock.now()).unwrap(), Phase::RetentionTest);
        finish_test(&mut s, 55, clock.now());
        assert_eq!(s.advance(clock.now()).unwrap(), Phase::Done);
        assert!(s.advance(clock.now()).is_err());
        assert_eq!(s.phase_history.len(), Phase::ORDER.len());
    }

    #[test]
    fn traditional_cohort_has_no_practice() {
        let (mut s, clock) = session(Cohort::Traditional);
        finish_test(&mut s, 20, clock.now());
        assert_eq!(s.advance(clock.now()).unwrap(), Phase::DuringLessonTest);
        assert!(s.select_place(PlaceValue::Ones).is_err());
    }

    #[test]
    fn selecting_a_place_in_practice() {
        let (mut s, clock) = session(Cohort::App);
        finish_test(&mut s, 60, clock.now());
        s.advance(clock.now()).unwrap();
        assert!(s.select_place(PlaceValue::Hundreds).is_err());
        s.advance(clock.now()).unwrap();
        let item = s.select_place(PlaceValue::Hundreds).unwrap();
        assert!((100..=999).contains(&item.question.number));
        assert_eq!(item.source, ItemSource::Practice { place: PlaceValue::Hundreds, index: 0 });
    }

    #[test]
    fn malformed_response_leaves_session_unchanged() {
        let (mut s, clock) = session(Cohort::App);
        let before = s.clone();
        let err = s.submit_answer(&CountResponse::default(), None, clock.now()).unwrap_err();
        assert!(matches!(err, SessionError::Malformed(_)));
        assert_eq!(s, before);
    }
}
