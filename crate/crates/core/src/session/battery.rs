use serde::Serialize;

use super::TestKind;
use crate::place::{all_places, generate_question, PlaceValue, Question};
use crate::rng::TutorRng;

pub const TEST_LENGTH: usize = 60;
pub const PRACTICE_PER_PLACE: usize = 20;

/// Items per place on a 60-item paper, ones through millions.
pub const PLACE_COMPOSITION: [usize; 7] = [9, 9, 9, 9, 8, 8, 8];

const PRACTICE_STREAM: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestPaper {
    pub kind: TestKind,
    pub seed: u64,
    pub items: Vec<Question>,
}

impl TestPaper {
    pub fn place_histogram(&self) -> [usize; 7] {
        let mut hist = [0; 7];
        for q in &self.items {
            hist[q.target_place.power() as usize] += 1;
        }
        hist
    }
}

/// A stratified, shuffled 60-item paper. Deterministic in `(kind, seed)`.
pub fn build_test(kind: TestKind, seed: u64) -> TestPaper {
    let mut rng = TutorRng::derive(seed, kind.stream());
    let mut items: Vec<Question> = all_places()
        .iter()
        .zip(PLACE_COMPOSITION)
        .flat_map(|(&place, n)| std::iter::repeat_n(place, n))
        .map(|place| generate_question(place, &mut rng))
        .collect();
    rng.shuffle(&mut items);
    TestPaper { kind, seed, items }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PracticeSchedule {
    pub seed: u64,
    /// One block of 20 per place, ascending place order.
    pub blocks: Vec<Vec<Question>>,
}

impl PracticeSchedule {
    pub fn block(&self, place: PlaceValue) -> &[Question] {
        &self.blocks[place.power() as usize]
    }

    pub fn total(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }
}

pub fn build_practice_schedule(seed: u64) -> PracticeSchedule {
    let mut rng = TutorRng::derive(seed, PRACTICE_STREAM);
    let blocks = all_places()
        .iter()
        .map(|&place| (0..PRACTICE_PER_PLACE).map(|_| generate_question(place, &mut rng)).collect())
        .collect();
    PracticeSchedule { seed, blocks }
}
