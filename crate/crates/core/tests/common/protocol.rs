//! Drives a session through the protocol with the engine alone, keeping its own
//! tally of outcomes so scores can be checked against the session's.

use placevalue::clock::{Clock, SimulatedClock, Timestamp};
use placevalue::place::{CountResponse, Outcome};
use placevalue::session::{Phase, StudySession, SubmitResult, TestKind};

pub struct Walk {
    pub phases: Vec<Phase>,
    /// Correct answers per paper, counted as they were submitted.
    pub tally: Vec<(TestKind, u32, usize)>,
    pub practice_items: usize,
    pub posttest_done: Option<Timestamp>,
}

pub fn answer(s: &mut StudySession, correct: bool, now: Timestamp) -> SubmitResult {
    let q = s.active_item().expect("active item").question.clone();
    let mut r = CountResponse::exact(&q.decomposition);
    if !correct {
        r.counts[0].clicks += 1;
    }
    s.submit_answer(&r, None, now).expect("answer accepted")
}

/// Answers every item; item `i` of each paper is right when `right(kind, i)`.
/// Stops in `RetentionWait` so callers can probe the gate.
pub fn walk_to_retention_wait(s: &mut StudySession, clock: &SimulatedClock, right: impl Fn(TestKind, usize) -> bool) -> Walk {
    let mut walk = Walk { phases: vec![s.phase], tally: Vec::new(), practice_items: 0, posttest_done: None };
    while s.phase != Phase::RetentionWait {
        run_phase(s, clock, &right, &mut walk);
        clock.advance_seconds(60);
        let next = s.advance(clock.now()).expect("phase complete");
        walk.phases.push(next);
    }
    walk.posttest_done = s.posttest_completed_at;
    walk
}

pub fn run_phase(s: &mut StudySession, clock: &SimulatedClock, right: &impl Fn(TestKind, usize) -> bool, walk: &mut Walk) {
    if let Some(kind) = s.phase.test_kind() {
        let mut correct = 0;
        let mut n = 0;
        while s.active_item().is_some() {
            clock.advance_seconds(20);
            let ok = right(kind, n);
            let r = answer(s, ok, clock.now());
            if r.verdict.outcome == Outcome::Correct {
                correct += 1;
            }
            n += 1;
        }
        walk.tally.push((kind, correct, n));
        return;
    }
    match s.phase {
        Phase::Practice => {
            while s.active_item().is_some() {
                clock.advance_seconds(20);
                answer(s, true, clock.now());
                walk.practice_items += 1;
            }
        }
        Phase::Satisfaction => s.submit_satisfaction(&[3, 3, 2]).unwrap(),
        _ => {}
    }
}
