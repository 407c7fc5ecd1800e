use proptest::prelude::*;

use placevalue::place::{
    all_places, decompose, evaluate_response, explanation, generate_question, CountResponse, Cue, Outcome, PlaceValue,
    MAX_NUMBER,
};
use placevalue::rng::TutorRng;

fn any_place() -> impl Strategy<Value = PlaceValue> {
    (0u32..7).prop_map(|p| PlaceValue::from_power(p).unwrap())
}

/// Digit at each power, straight from the decimal string.
fn digits_by_string(n: u32) -> Vec<(u32, u8)> {
    n.to_string()
        .bytes()
        .rev()
        .enumerate()
        .map(|(p, b)| (p as u32, b - b'0'))
        .filter(|&(_, d)| d != 0)
        .collect()
}

proptest! {
    #[test]
    fn decomposition_reconstructs(n in 0u32..=MAX_NUMBER) {
        let d = decompose(n).unwrap();
        prop_assert_eq!(d.reconstruct(), n);
        let sum: u32 = d.parts.iter().map(|p| p.contribution()).sum();
        prop_assert_eq!(sum, n);
    }

    #[test]
    fn decomposition_has_no_zero_digits_and_ascends(n in 0u32..=MAX_NUMBER) {
        let d = decompose(n).unwrap();
        prop_assert!(d.parts.iter().all(|p| p.digit != 0));
        prop_assert!(d.parts.windows(2).all(|w| w[0].place < w[1].place));
        let got: Vec<(u32, u8)> = d.parts.iter().map(|p| (p.place.power(), p.digit)).collect();
        prop_assert_eq!(got, digits_by_string(n));
    }

    #[test]
    fn out_of_range_is_rejected(n in (MAX_NUMBER + 1)..=u32::MAX) {
        prop_assert!(decompose(n).is_err());
    }

    #[test]
    fn explanation_lines_cover_every_place_up_to_the_leading_digit(n in 1u32..=MAX_NUMBER) {
        let script = explanation(n).unwrap();
        let leading = PlaceValue::leading(n).unwrap();
        prop_assert_eq!(script.lines.len(), leading.power() as usize + 1);
        let counted: u32 = script.lines.iter().filter(|l| !l.skipped).map(|l| u32::from(l.digit) * l.place.unit()).sum();
        prop_assert_eq!(counted, n);
        for line in &script.lines {
            prop_assert_eq!(line.skipped, line.digit == 0);
        }
    }

    #[test]
    fn questions_fall_in_their_place_range(seed in any::<u64>(), place in any_place()) {
        let mut rng = TutorRng::new(seed);
        let q = generate_question(place, &mut rng);
        let (lo, hi) = place.question_range();
        prop_assert!(lo <= q.number && q.number <= hi);
        prop_assert_eq!(PlaceValue::leading(q.number), Some(place));
        prop_assert_eq!(q.decomposition.reconstruct(), q.number);
    }

    #[test]
    fn question_generation_is_deterministic(seed in any::<u64>(), place in any_place()) {
        let a = generate_question(place, &mut TutorRng::new(seed));
        let b = generate_question(place, &mut TutorRng::new(seed));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn exact_counts_are_correct(seed in any::<u64>(), place in any_place()) {
        let q = generate_question(place, &mut TutorRng::new(seed));
        let v = evaluate_response(&q, &CountResponse::exact(&q.decomposition)).unwrap();
        prop_assert_eq!(v.outcome, Outcome::Correct);
        prop_assert_eq!(v.narration_events.last(), Some(&Cue::Correct));
        let clicks: u32 = q.decomposition.parts.iter().map(|p| u32::from(p.digit)).sum();
        prop_assert_eq!(v.narration_events.len(), clicks as usize + 1);
    }

    #[test]
    fn any_single_miscount_is_a_retry(seed in any::<u64>(), place in any_place(), pick in any::<prop::sample::Index>(), up in any::<bool>()) {
        let q = generate_question(place, &mut TutorRng::new(seed));
        let mut r = CountResponse::exact(&q.decomposition);
        let i = pick.index(r.counts.len());
        let c = &mut r.counts[i];
        c.clicks = if up || c.clicks == 0 { c.clicks + 1 } else { c.clicks - 1 };
        let v = evaluate_response(&q, &r).unwrap();
        prop_assert_eq!(v.outcome, Outcome::Retry);
        prop_assert_eq!(v.narration_events.last(), Some(&Cue::Retry));
    }

    #[test]
    fn counting_a_zero_place_is_malformed(seed in any::<u64>(), place in any_place()) {
        let q = generate_question(place, &mut TutorRng::new(seed));
        let zero = all_places()
            .iter()
            .copied()
            .find(|&p| p <= place && q.decomposition.digit_at(p).is_none());
        if let Some(zero) = zero {
            let mut pairs: Vec<(PlaceValue, u32)> =
                q.decomposition.parts.iter().map(|p| (p.place, u32::from(p.digit))).collect();
            pairs.push((zero, 1));
            pairs.sort();
            prop_assert!(evaluate_response(&q, &CountResponse::from_pairs(&pairs)).is_err());
        }
    }

    #[test]
    fn below_stays_in_bounds(seed in any::<u64>(), bound in 1u64..=u64::MAX) {
        let mut rng = TutorRng::new(seed);
        for _ in 0..8 {
            prop_assert!(rng.below(bound) < bound);
        }
    }

    #[test]
    fn shuffle_is_a_permutation(seed in any::<u64>(), mut v in prop::collection::vec(any::<u16>(), 0..64)) {
        let mut sorted = v.clone();
        sorted.sort_unstable();
        TutorRng::new(seed).shuffle(&mut v);
        v.sort_unstable();
        prop_assert_eq!(v, sorted);
    }
}

#[test]
fn missing_place_is_malformed() {
    let q = generate_question(PlaceValue::Hundreds, &mut TutorRng::new(11));
    let mut r = CountResponse::exact(&q.decomposition);
    r.counts.pop();
    assert!(evaluate_response(&q, &r).is_err());
}

#[test]
fn place_names_parse_back() {
    for &p in all_places() {
        assert_eq!(p.name().parse::<PlaceValue>().unwrap(), p);
        assert_eq!(p.to_string().parse::<PlaceValue>().unwrap(), p);
    }
    assert!("dozens".parse::<PlaceValue>().is_err());
}

#[test]
fn below_is_roughly_uniform() {
    let mut rng = TutorRng::new(99);
    let mut counts = [0u32; 10];
    for _ in 0..100_000 {
        counts[rng.below(10) as usize] += 1;
    }
    // Each bucket expects 10 000 with sd about 95.
    for c in counts {
        assert!((9_600..=10_400).contains(&c), "{counts:?}");
    }
}
