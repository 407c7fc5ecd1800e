//! Place values, zero-skipping decomposition, worked explanations, question
//! generation and answer checking.
//!
//! Everything here is a pure function of its inputs. The question generator
//! takes the caller's [`TutorRng`] by mutable reference and advances it.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::TutorRng;

/// Largest number the tutor handles: every digit up to the millions place.
pub const MAX_NUMBER: u32 = 9_999_999;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlaceError {
    #[error("{0} is beyond the millions place (max {MAX_NUMBER})")]
    OutOfRange(u64),
    #[error("zero has no leading place to explain")]
    DegenerateInput,
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("unknown place {0:?}")]
    UnknownPlace(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaceValue {
    Ones,
    Tens,
    Hundreds,
    Thousands,
    TenThousands,
    HundredThousands,
    Millions,
}

const ALL_PLACES: [PlaceValue; 7] = [
    PlaceValue::Ones,
    PlaceValue::Tens,
    PlaceValue::Hundreds,
    PlaceValue::Thousands,
    PlaceValue::TenThousands,
    PlaceValue::HundredThousands,
    PlaceValue::Millions,
];

/// The seven places, ones first.
pub fn all_places() -> &'static [PlaceValue; 7] {
    &ALL_PLACES
}

impl PlaceValue {
    pub fn power(self) -> u32 {
        self as u32
    }

    pub fn unit(self) -> u32 {
        10u32.pow(self.power())
    }

    pub fn from_power(power: u32) -> Option<Self> {
        ALL_PLACES.get(power as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            PlaceValue::Ones => "ones",
            PlaceValue::Tens => "tens",
            PlaceValue::Hundreds => "hundreds",
            PlaceValue::Thousands => "thousands",
            PlaceValue::TenThousands => "ten-thousands",
            PlaceValue::HundredThousands => "hundred-thousands",
            PlaceValue::Millions => "millions",
        }
    }

    /// Smallest and largest number whose leading digit sits in this place.
    pub fn question_range(self) -> (u32, u32) {
        (self.unit(), self.unit() * 10 - 1)
    }

    /// Place holding the leading digit of `n`; `None` for zero.
    pub fn leading(n: u32) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let digits = n.ilog10();
        Self::from_power(digits)
    }
}

impl fmt::Display for PlaceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PlaceValue {
    type Err = PlaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_PLACES
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| PlaceError::UnknownPlace(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub digit: u8,
    pub place: PlaceValue,
}

impl Part {
    pub fn contribution(&self) -> u32 {
        u32::from(self.digit) * self.place.unit()
    }
}

/// A number split into its nonzero digits, lowest place first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumberDecomposition {
    pub value: u32,
    pub parts: Vec<Part>,
}

impl NumberDecomposition {
    pub fn reconstruct(&self) -> u32 {
        self.parts.iter().map(Part::contribution).sum()
    }

    pub fn places(&self) -> impl Iterator<Item = PlaceValue> + '_ {
        self.parts.iter().map(|p| p.place)
    }

    pub fn digit_at(&self, place: PlaceValue) -> Option<u8> {
        self.parts.iter().find(|p| p.place == place).map(|p| p.digit)
    }
}

pub fn decompose(n: u32) -> Result<NumberDecomposition, PlaceError> {
    if n > MAX_NUMBER {
        return Err(PlaceError::OutOfRange(u64::from(n)));
    }
    let mut parts = Vec::with_capacity(7);
    let mut rest = n;
    for place in ALL_PLACES {
        if rest == 0 {
            break;
        }
        let digit = (rest % 10) as u8;
        if digit != 0 {
            parts.push(Part { digit, place });
        }
        rest /= 10;
    }
    Ok(NumberDecomposition { value: n, parts })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationLine {
    pub place: PlaceValue,
    pub digit: u8,
    pub contribution: u32,
    pub skipped: bool,
}

impl fmt::Display for ExplanationLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.skipped {
            write!(f, "0 is in the {} place. Zero is not counted, so no clicks here.", self.place)
        } else if self.place == PlaceValue::Ones {
            write!(f, "{} is in the ones place. Click ones {} times to make {}.", self.digit, self.digit, self.contribution)
        } else {
            write!(
                f,
                "{} is in the {} place. Click {} {} times to make {}.",
                self.digit, self.place, self.place, self.digit, self.contribution
            )
        }
    }
}

/// Worked "how to think" page for one number: one line per place from ones up
/// to the leading place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationScript {
    pub number: u32,
    pub lines: Vec<ExplanationLine>,
}

impl fmt::Display for ExplanationScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.number)?;
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

pub fn explanation(n: u32) -> Result<ExplanationScript, PlaceError> {
    if n > MAX_NUMBER {
        return Err(PlaceError::OutOfRange(u64::from(n)));
    }
    let leading = PlaceValue::leading(n).ok_or(PlaceError::DegenerateInput)?;
    let lines = ALL_PLACES[..=leading.power() as usize]
        .iter()
        .map(|&place| {
            let digit = ((n / place.unit()) % 10) as u8;
            ExplanationLine {
                place,
                digit,
                contribution: u32::from(digit) * place.unit(),
                skipped: digit == 0,
            }
        })
        .collect();
    Ok(ExplanationScript { number: n, lines })
}

/// One randomized exercise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub target_place: PlaceValue,
    pub number: u32,
    pub decomposition: NumberDecomposition,
    /// Generator state before this question was drawn.
    pub seed_trace: u64,
}

pub fn generate_question(place: PlaceValue, rng: &mut TutorRng) -> Question {
    let seed_trace = rng.state();
    let (lo, hi) = place.question_range();
    let number = rng.in_range(u64::from(lo), u64::from(hi)) as u32;
    let decomposition = decompose(number).expect("question range is within the millions place");
    Question {
        id: format!("q{}-{:016x}", place.power(), seed_trace),
        target_place: place,
        number,
        decomposition,
        seed_trace,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceCount {
    pub place: PlaceValue,
    pub clicks: u32,
}

/// Per-place click counts, ascending by place.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CountResponse {
    pub counts: Vec<PlaceCount>,
}

impl CountResponse {
    /// The response a student who counts every digit correctly would give.
    pub fn exact(decomposition: &NumberDecomposition) -> Self {
        Self {
            counts: decomposition
                .parts
                .iter()
                .map(|p| PlaceCount { place: p.place, clicks: u32::from(p.digit) })
                .collect(),
        }
    }

    pub fn from_pairs(pairs: &[(PlaceValue, u32)]) -> Self {
        Self {
            counts: pairs.iter().map(|&(place, clicks)| PlaceCount { place, clicks }).collect(),
        }
    }
}

/// Audio cue names delivered to the client in place of recorded narration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cue {
    Count(u32),
    Place(PlaceValue),
    Correct,
    Retry,
}

impl fmt::Display for Cue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cue::Count(n) => write!(f, "count_{n}"),
            Cue::Place(p) => write!(f, "place_{}", p.name().replace('-', "_")),
            Cue::Correct => f.write_str("correct"),
            Cue::Retry => f.write_str("retry"),
        }
    }
}

impl std::str::FromStr for Cue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "correct" => return Ok(Cue::Correct),
            "retry" => return Ok(Cue::Retry),
            _ => {}
        }
        if let Some(n) = s.strip_prefix("count_") {
            return n.parse().map(Cue::Count).map_err(|_| format!("bad cue {s:?}"));
        }
        if let Some(p) = s.strip_prefix("place_") {
            return p
                .replace('_', "-")
                .parse()
                .map(Cue::Place)
                .map_err(|_| format!("bad cue {s:?}"));
        }
        Err(format!("bad cue {s:?}"))
    }
}

impl Serialize for Cue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Retry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub narration_events: Vec<Cue>,
}

impl Verdict {
    pub fn is_correct(&self) -> bool {
        self.outcome == Outcome::Correct
    }
}

/// Check that `response` names exactly the nonzero places of `decomposition`,
/// in ascending order.
pub fn check_response_shape(
    decomposition: &NumberDecomposition,
    response: &CountResponse,
) -> Result<(), PlaceError> {
    let expected: Vec<PlaceValue> = decomposition.places().collect();
    let got: Vec<PlaceValue> = response.counts.iter().map(|c| c.place).collect();
    if expected != got {
        let names = |v: &[PlaceValue]| v.iter().map(|p| p.name()).collect::<Vec<_>>().join(",");
        return Err(PlaceError::MalformedResponse(format!(
            "expected places [{}], got [{}]",
            names(&expected),
            names(&got)
        )));
    }
    Ok(())
}

pub fn evaluate_response(question: &Question, response: &CountResponse) -> Result<Verdict, PlaceError> {
    check_response_shape(&question.decomposition, response)?;
    let correct = question
        .decomposition
        .parts
        .iter()
        .zip(&response.counts)
        .all(|(part, count)| u32::from(part.digit) == count.clicks);
    let mut narration_events: Vec<Cue> = response
        .counts
        .iter()
        .flat_map(|c| (1..=c.clicks).map(Cue::Count))
        .collect();
    let outcome = if correct { Outcome::Correct } else { Outcome::Retry };
    narration_events.push(if correct { Cue::Correct } else { Cue::Retry });
    Ok(Verdict { outcome, narration_events })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts(pairs: &[(u8, PlaceValue)]) -> Vec<Part> {
        pairs.iter().map(|&(digit, place)| Part { digit, place }).collect()
    }

    #[test]
    fn seven_places_in_order() {
        let places = all_places();
        let names: Vec<_> = places.iter().map(|p| p.name()).collect();
        assert_eq!(
            names,
            ["ones", "tens", "hundreds", "thousands", "ten-thousands", "hundred-thousands", "millions"]
        );
        assert_eq!(places[0].unit(), 1);
        assert_eq!(places[6].unit(), 1_000_000);
        for (i, p) in places.iter().enumerate() {
            assert_eq!(p.power(), i as u32);
            assert_eq!(p.unit(), 10u32.pow(i as u32));
        }
    }

    #[test]
    fn decompose_560_skips_ones() {
        let d = decompose(560).unwrap();
        assert_eq!(d.parts, parts(&[(6, PlaceValue::Tens), (5, PlaceValue::Hundreds)]));
    }

    #[test]
    fn decompose_edges() {
        assert!(decompose(0).unwrap().parts.is_empty());
        assert_eq!(decompose(7).unwrap().parts, parts(&[(7, PlaceValue::Ones)]));
        assert_eq!(decompose(MAX_NUMBER).unwrap().parts.len(), 7);
        assert_eq!(decompose(10_000_000), Err(PlaceError::OutOfRange(10_000_000)));
    }

    #[test]
    fn explanation_560() {
        let script = explanation(560).unwrap();
        let rows: Vec<_> = script
            .lines
            .iter()
            .map(|l| (l.place, l.digit, l.contribution, l.skipped))
            .collect();
        assert_eq!(
            rows,
            [
                (PlaceValue::Ones, 0, 0, true),
                (PlaceValue::Tens, 6, 60, false),
                (PlaceValue::Hundreds, 5, 500, false),
            ]
        );
        let text = script.to_string();
        assert!(text.contains("Click tens 6 times to make 60"), "{text}");
    }

    #[test]
    fn explanation_single_digit_and_million() {
        let nine = explanation(9).unwrap();
        assert_eq!(nine.lines.len(), 1);
        assert_eq!(nine.lines[0].contribution, 9);
        assert!(!nine.lines[0].skipped);

        let million = explanation(1_000_000).unwrap();
        assert_eq!(million.lines.len(), 7);
        assert!(million.lines[..6].iter().all(|l| l.skipped && l.contribution == 0));
        let top = &million.lines[6];
        assert_eq!((top.place, top.digit, top.contribution, top.skipped), (PlaceValue::Millions, 1, 1_000_000, false));
    }

    #[test]
    fn explanation_of_zero_is_an_error() {
        assert_eq!(explanation(0), Err(PlaceError::DegenerateInput));
    }

    #[test]
    fn ones_questions_are_single_digits() {
        let mut rng = TutorRng::new(11);
        for _ in 0..500 {
            let q = generate_question(PlaceValue::Ones, &mut rng);
            assert!((1..=9).contains(&q.number));
        }
    }

    #[test]
    fn a_state_yielding_560_produces_that_question() {
        let seed = (0u64..)
            .find(|&s| generate_question(PlaceValue::Hundreds, &mut TutorRng::new(s)).number == 560)
            .unwrap();
        let q = generate_question(PlaceValue::Hundreds, &mut TutorRng::new(seed));
        assert_eq!(q.number, 560);
        assert_eq!(q.decomposition, decompose(560).unwrap());
        assert_eq!(q.seed_trace, seed);
    }

    #[test]
    fn generation_is_deterministic_and_advances_state() {
        let mut a = TutorRng::new(99);
        let mut b = TutorRng::new(99);
        let qa = generate_question(PlaceValue::Thousands, &mut a);
        let qb = generate_question(PlaceValue::Thousands, &mut b);
        assert_eq!(qa, qb);
        assert_ne!(a.state(), 99);
    }

    fn question(number: u32) -> Question {
        Question {
            id: "t".into(),
            target_place: PlaceValue::leading(number).unwrap(),
            number,
            decomposition: decompose(number).unwrap(),
            seed_trace: 0,
        }
    }

    #[test]
    fn five_clicks_on_five_is_correct() {
        let v = evaluate_response(&question(5), &CountResponse::from_pairs(&[(PlaceValue::Ones, 5)])).unwrap();
        assert_eq!(v.outcome, Outcome::Correct);
        let cues: Vec<String> = v.narration_events.iter().map(ToString::to_string).collect();
        assert_eq!(cues, ["count_1", "count_2", "count_3", "count_4", "count_5", "correct"]);
    }

    #[test]
    fn five_sixty_verdicts() {
        let q = question(560);
        let ok = CountResponse::from_pairs(&[(PlaceValue::Tens, 6), (PlaceValue::Hundreds, 5)]);
        assert_eq!(evaluate_response(&q, &ok).unwrap().outcome, Outcome::Correct);
        let bad = CountResponse::from_pairs(&[(PlaceValue::Tens, 6), (PlaceValue::Hundreds, 4)]);
        let v = evaluate_response(&q, &bad).unwrap();
        assert_eq!(v.outcome, Outcome::Retry);
        assert_eq!(v.narration_events.last(), Some(&Cue::Retry));
    }

    #[test]
    fn structural_mismatch_is_an_error_not_a_retry() {
        let q = question(560);
        for pairs in [
            vec![(PlaceValue::Tens, 6)],
            vec![(PlaceValue::Ones, 0), (PlaceValue::Tens, 6), (PlaceValue::Hundreds, 5)],
            vec![(PlaceValue::Hundreds, 5), (PlaceValue::Tens, 6)],
        ] {
            let err = evaluate_response(&q, &CountResponse::from_pairs(&pairs)).unwrap_err();
            assert!(matches!(err, PlaceError::MalformedResponse(_)));
        }
    }

    #[test]
    fn cue_names_round_trip() {
        for cue in [Cue::Count(12), Cue::Place(PlaceValue::HundredThousands), Cue::Correct, Cue::Retry] {
            assert_eq!(cue.to_string().parse::<Cue>().unwrap(), cue);
        }
        assert_eq!(Cue::Place(PlaceValue::Tens).to_string(), "place_tens");
    }

    #[test]
    fn place_names_parse() {
        for p in all_places() {
            assert_eq!(p.name().parse::<PlaceValue>().unwrap(), *p);
        }
        assert!("units".parse::<PlaceValue>().is_err());
    }
}
