mod common;

use chrono::Duration;

use placevalue::clock::{Clock, SimulatedClock};
use placevalue::place::{CountResponse, PlaceValue};
use placevalue::session::{
    build_practice_schedule, build_test, Cohort, ItemSource, Phase, SessionError, StudySession, TestKind,
    PLACE_COMPOSITION, TEST_LENGTH,
};

use common::protocol::{answer, walk_to_retention_wait};

fn fresh(cohort: Cohort, seed: u64) -> (StudySession, SimulatedClock) {
    let clock = SimulatedClock::default();
    (StudySession::new("sess-000001".into(), "s1".into(), cohort, seed, clock.now()), clock)
}

#[test]
fn app_cohort_visits_every_phase_in_order() {
    let (mut s, clock) = fresh(Cohort::App, 3);
    let walk = walk_to_retention_wait(&mut s, &clock, |_, _| true);
    assert_eq!(walk.phases, &Phase::ORDER[..9]);
    clock.advance_days(14);
    s.advance(clock.now()).unwrap();
    while s.active_item().is_some() {
        answer(&mut s, true, clock.now());
    }
    assert_eq!(s.advance(clock.now()).unwrap(), Phase::Done);
    assert!(matches!(s.advance(clock.now()), Err(SessionError::Protocol(_))));
    let visited: Vec<Phase> = s.phase_history.iter().map(|(p, _)| *p).collect();
    assert_eq!(visited, Phase::ORDER);
}

#[test]
fn traditional_cohort_skips_app_only_phases() {
    let (mut s, clock) = fresh(Cohort::Traditional, 3);
    let walk = walk_to_retention_wait(&mut s, &clock, |_, _| true);
    assert_eq!(
        walk.phases,
        [Phase::Pretest, Phase::DuringLessonTest, Phase::EndOfSubjectTest, Phase::Posttest, Phase::RetentionWait]
    );
    assert_eq!(walk.practice_items, 0);
}

#[test]
fn every_paper_has_sixty_stratified_items() {
    let (mut s, clock) = fresh(Cohort::App, 11);
    let walk = walk_to_retention_wait(&mut s, &clock, |_, i| i % 3 != 0);
    for (kind, _, n) in &walk.tally {
        assert_eq!(*n, TEST_LENGTH, "{kind:?}");
    }
    for kind in TestKind::ALL {
        let paper = s.paper(kind);
        assert_eq!(paper.items.len(), TEST_LENGTH);
        assert_eq!(paper.place_histogram(), PLACE_COMPOSITION);
    }
}

#[test]
fn practice_is_one_hundred_forty_items() {
    let (mut s, clock) = fresh(Cohort::App, 5);
    let walk = walk_to_retention_wait(&mut s, &clock, |_, _| true);
    assert_eq!(walk.practice_items, 140);
    assert_eq!(s.schedule().total(), 140);
    assert_eq!(s.practice.completed, [20; 7]);
}

#[test]
fn incomplete_phases_refuse_to_advance() {
    let (mut s, clock) = fresh(Cohort::App, 5);
    for _ in 0..59 {
        answer(&mut s, true, clock.now());
    }
    assert_eq!(
        s.advance(clock.now()),
        Err(SessionError::Incomplete { kind: TestKind::Pretest, answered: 59 })
    );
    answer(&mut s, false, clock.now());
    s.advance(clock.now()).unwrap();
    s.advance(clock.now()).unwrap();
    assert_eq!(s.phase, Phase::Practice);
    for _ in 0..139 {
        answer(&mut s, true, clock.now());
    }
    let before = s.clone();
    assert!(matches!(s.advance(clock.now()), Err(SessionError::Protocol(_))));
    assert_eq!(s, before);
    answer(&mut s, true, clock.now());
    assert_eq!(s.advance(clock.now()).unwrap(), Phase::DuringLessonTest);
}

#[test]
fn retention_gate_opens_at_fourteen_days() {
    let (mut s, clock) = fresh(Cohort::App, 8);
    let walk = walk_to_retention_wait(&mut s, &clock, |_, _| true);
    let done = walk.posttest_done.unwrap();
    let due = done + Duration::days(14);
    assert_eq!(s.retention_due_at(), Some(due));

    clock.set(done + Duration::days(13) + Duration::seconds(86_399));
    assert_eq!(s.advance(clock.now()), Err(SessionError::NotDue { due }));
    assert!(!s.can_advance(clock.now()));
    assert_eq!(s.phase, Phase::RetentionWait);

    clock.set(due);
    assert_eq!(s.advance(clock.now()).unwrap(), Phase::RetentionTest);
}

#[test]
fn scores_match_the_running_tally() {
    let (mut s, clock) = fresh(Cohort::App, 21);
    let walk = walk_to_retention_wait(&mut s, &clock, |kind, i| (i * 7 + kind as usize) % 5 != 0);
    for (kind, correct, _) in walk.tally {
        assert_eq!(s.score(kind).unwrap().correct, correct, "{kind:?}");
    }
    assert!(matches!(s.score(TestKind::Retention), Err(SessionError::Incomplete { answered: 0, .. })));
}

#[test]
fn wrong_answers_on_tests_still_advance_the_paper() {
    let (mut s, clock) = fresh(Cohort::App, 1);
    let r = answer(&mut s, false, clock.now());
    assert_eq!(r.item, ItemSource::Test { kind: TestKind::Pretest, index: 0 });
    assert_eq!(s.answered(TestKind::Pretest), 1);
}

#[test]
fn practice_retries_until_correct() {
    let (mut s, clock) = fresh(Cohort::App, 1);
    walk_through(&mut s, &clock, Phase::Practice);
    let first = s.active_item().unwrap().source;
    answer(&mut s, false, clock.now());
    answer(&mut s, false, clock.now());
    assert_eq!(s.active_item().unwrap().source, first);
    answer(&mut s, true, clock.now());
    assert_ne!(s.active_item().unwrap().source, first);
    assert_eq!((s.practice.attempts, s.practice.retries), (3, 2));
}

#[test]
fn place_selection_only_in_practice_and_review() {
    let (mut s, clock) = fresh(Cohort::App, 1);
    assert!(matches!(s.select_place(PlaceValue::Tens), Err(SessionError::Protocol(_))));
    walk_through(&mut s, &clock, Phase::Practice);
    let item = s.select_place(PlaceValue::Thousands).unwrap();
    assert_eq!(item.source, ItemSource::Practice { place: PlaceValue::Thousands, index: 0 });
}

#[test]
fn clicks_on_absent_places_are_rejected() {
    let (mut s, _) = fresh(Cohort::App, 1);
    let q = s.active_item().unwrap().question.clone();
    let absent = placevalue::place::all_places().iter().copied().find(|&p| q.decomposition.digit_at(p).is_none());
    if let Some(p) = absent {
        assert_eq!(s.record_click(p), Err(SessionError::InvalidPlace(p)));
    }
    let present = q.decomposition.parts[0].place;
    assert_eq!(s.record_click(present).unwrap().running_count, 1);
    assert_eq!(s.record_click(present).unwrap().running_count, 2);
}

#[test]
fn malformed_response_changes_nothing() {
    let (mut s, clock) = fresh(Cohort::App, 1);
    let before = s.clone();
    let err = s.submit_answer(&CountResponse::default(), None, clock.now()).unwrap_err();
    assert!(matches!(err, SessionError::Malformed(_)));
    assert_eq!(s, before);
}

#[test]
fn repeated_submission_id_is_recorded_once() {
    let (mut s, clock) = fresh(Cohort::App, 1);
    let q = s.active_item().unwrap().question.clone();
    let r = CountResponse::exact(&q.decomposition);
    let first = s.submit_answer(&r, Some("abc"), clock.now()).unwrap();
    let again = s.submit_answer(&r, Some("abc"), clock.now()).unwrap();
    assert!(!first.replayed && again.replayed);
    assert_eq!(first.verdict, again.verdict);
    assert_eq!(s.answered(TestKind::Pretest), 1);
}

#[test]
fn satisfaction_is_validated_and_single_use() {
    let (mut s, clock) = fresh(Cohort::App, 1);
    assert!(matches!(s.submit_satisfaction(&[3, 3, 3]), Err(SessionError::Protocol(_))));
    walk_through(&mut s, &clock, Phase::Satisfaction);
    assert!(matches!(s.submit_satisfaction(&[3, 3]), Err(SessionError::Validation(_))));
    assert!(matches!(s.submit_satisfaction(&[3, 4, 3]), Err(SessionError::Validation(_))));
    s.submit_satisfaction(&[1, 2, 3]).unwrap();
    assert!(matches!(s.submit_satisfaction(&[1, 2, 3]), Err(SessionError::Protocol(_))));
}

#[test]
fn papers_are_deterministic_and_distinct() {
    assert_eq!(build_test(TestKind::Pretest, 9), build_test(TestKind::Pretest, 9));
    assert_ne!(build_test(TestKind::Pretest, 9).items, build_test(TestKind::Posttest, 9).items);
    assert_ne!(build_test(TestKind::Pretest, 9).items, build_test(TestKind::Pretest, 10).items);
    assert_eq!(build_practice_schedule(4), build_practice_schedule(4));
}

/// Completes phases with all-correct answers until `target` is reached.
fn walk_through(s: &mut StudySession, clock: &SimulatedClock, target: Phase) {
    let mut walk = common::protocol::Walk { phases: vec![], tally: vec![], practice_items: 0, posttest_done: None };
    while s.phase != target {
        common::protocol::run_phase(s, clock, &|_, _| true, &mut walk);
        s.advance(clock.now()).unwrap();
    }
}
