//! Synthetic cohorts driven through the real session engine.
//!
//! Each simulated student has a pretest accuracy, a post-practice accuracy
//! (pretest plus a gain) and a retention accuracy (post minus a decay), all
//! truncated to [0, 1]. The decay is applied before truncation, so a
//! student at ceiling does not drift down by construction. Every item is answered through [`Datastore::execute`],
//! so the log is the same kind a live classroom would produce.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand_distr::{Binomial, Distribution, Normal};
use thiserror::Error;

use crate::clock::{Clock, SimulatedClock};
use crate::place::CountResponse;
use crate::rng::TutorRng;
use crate::session::{Cohort, Phase, TEST_LENGTH};
use crate::store::{Applied, Command, Datastore, StoreError, TraditionalScoreRow, EXPERT_ITEMS, LOG_FILE};

const ANSWER_SECONDS: i64 = 20;
const PHASE_GAP_SECONDS: i64 = 3_600;
const RETENTION_GAP_DAYS: i64 = 14;

const STUDENT_STREAM: u64 = 1 << 32;
const TRADITIONAL_STREAM: u64 = 2 << 32;
const EXPERT_STREAM: u64 = 3 << 32;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid model: {0}")]
    Model(String),
    #[error("{0} is not empty; pass --force to overwrite")]
    NotEmpty(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Mean and spread of a normally distributed model parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub mean: f64,
    pub sd: f64,
}

impl Spread {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }

    fn normal(self, what: &str) -> Result<Normal<f64>, SimError> {
        Normal::new(self.mean, self.sd).map_err(|e| SimError::Model(format!("{what}: {e}")))
    }
}

impl fmt::Display for Spread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N({}, {})", self.mean, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationModel {
    pub n_students: usize,
    pub seed: u64,
    pub pre_accuracy: Spread,
    pub gain: Spread,
    pub retention_decay: Spread,
    /// Probability of rating 1, 2, 3 for each satisfaction item.
    pub satisfaction_profile: [[f64; 3]; 3],
    /// Imported comparison cohort of the same size; `None` skips the import.
    pub traditional_gain: Option<Spread>,
    /// Probability that an expert gives 5 (otherwise 4) on each quality item.
    pub expert_top_rating: [f64; EXPERT_ITEMS],
    pub n_experts: usize,
}

impl Default for SimulationModel {
    fn default() -> Self {
        Self {
            n_students: 400,
            seed: 42,
            pre_accuracy: Spread::new(0.53, 0.17),
            gain: Spread::new(0.42, 0.10),
            retention_decay: Spread::new(0.0, 0.02),
            satisfaction_profile: [[0.0, 0.35, 0.65], [0.0, 0.08, 0.92], [0.0, 0.03, 0.97]],
            traditional_gain: Some(Spread::new(0.16, 0.08)),
            expert_top_rating: [0.8, 0.6, 0.8, 0.8, 0.6, 0.8],
            n_experts: 5,
        }
    }
}

impl SimulationModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Model(m));
        if self.n_students == 0 {
            return bad("at least one student is required".into());
        }
        for (name, s) in [
            ("pre accuracy", self.pre_accuracy),
            ("gain", self.gain),
            ("retention decay", self.retention_decay),
        ]
        .into_iter()
        .chain(self.traditional_gain.map(|g| ("traditional gain", g)))
        {
            if !s.mean.is_finite() || !s.sd.is_finite() || s.sd < 0.0 {
                return bad(format!("{name} {s} needs a finite mean and a non-negative sd"));
            }
        }
        if !(0.0..=1.0).contains(&self.pre_accuracy.mean) {
            return bad(format!("pre accuracy mean {} is not a probability", self.pre_accuracy.mean));
        }
        for (i, row) in self.satisfaction_profile.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad(format!("satisfaction item {} probabilities must lie in [0,1] and sum to 1", i + 1));
            }
        }
        if self.expert_top_rating.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("expert rating probabilities must lie in [0,1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub students: usize,
    pub traditional_rows: usize,
    pub experts: usize,
    pub events: u64,
}

struct Learner {
    session_id: String,
    rng: TutorRng,
    pre: f64,
    post: f64,
    retention: f64,
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn bernoulli(rng: &mut TutorRng, p: f64) -> bool {
    rng.next_f64() < p
}

/// Counts for the active item: exact when `correct`, otherwise one place
/// off by one.
fn respond(store: &Datastore, session_id: &str, rng: &mut TutorRng, correct: bool) -> CountResponse {
    let session = store.store().session(session_id).expect("simulated session exists");
    let question = session.active_item().expect("phase has an active item").question;
    let mut response = CountResponse::exact(&question.decomposition);
    if !correct {
        let i = rng.below(response.counts.len() as u64) as usize;
        let c = &mut response.counts[i];
        c.clicks = if c.clicks > 1 && rng.below(2) == 0 { c.clicks - 1 } else { c.clicks + 1 };
    }
    response
}

fn answer(store: &mut Datastore, clock: &SimulatedClock, learner: &mut Learner, p: f64) -> Result<bool, SimError> {
    clock.advance_seconds(ANSWER_SECONDS);
    let correct = bernoulli(&mut learner.rng, p);
    let response = respond(store, &learner.session_id, &mut learner.rng, correct);
    let applied = store.execute(Some(&learner.session_id), Command::SubmitAnswer { response, submission_id: None })?;
    match applied {
        Applied::Submitted(r) => Ok(r.verdict.is_correct()),
        other => unreachable!("answer produced {other:?}"),
    }
}

fn advance_all(store: &mut Datastore, clock: &SimulatedClock, learners: &[Learner]) -> Result<(), SimError> {
    for l in learners {
        clock.advance_seconds(1);
        store.execute(Some(&l.session_id), Command::AdvancePhase)?;
    }
    clock.advance_seconds(PHASE_GAP_SECONDS);
    Ok(())
}

fn test_all(store: &mut Datastore, clock: &SimulatedClock, learners: &mut [Learner], accuracy: fn(&Learner) -> f64) -> Result<(), SimError> {
    for l in learners.iter_mut() {
        let p = accuracy(l);
        for _ in 0..TEST_LENGTH {
            answer(store, clock, l, p)?;
        }
    }
    Ok(())
}

/// Practice: each block chosen from the digit menu and worked until all 20
/// items are right. Attempt k on an item succeeds with probability
/// `1 - (1 - p) / 2^(k-1)`.
fn practice_all(store: &mut Datastore, clock: &SimulatedClock, learners: &mut [Learner]) -> Result<(), SimError> {
    for l in learners.iter_mut() {
        for &place in crate::place::all_places() {
            store.execute(Some(&l.session_id), Command::SelectPlace { place })?;
            let mut done = 0;
            let mut miss = 1.0 - l.post;
            while done < crate::session::PRACTICE_PER_PLACE {
                if answer(store, clock, l, 1.0 - miss)? {
                    done += 1;
                    miss = 1.0 - l.post;
                } else {
                    miss /= 2.0;
                }
            }
        }
    }
    Ok(())
}

fn sample_category(rng: &mut TutorRng, probs: &[f64; 3]) -> u8 {
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u8 + 1;
        }
    }
    3
}

fn binomial_score(rng: &mut TutorRng, p: f64) -> u32 {
    Binomial::new(TEST_LENGTH as u64, clamp01(p)).expect("p clamped to [0,1]").sample(rng) as u32
}

fn traditional_rows(model: &SimulationModel, gain: Spread) -> Result<Vec<TraditionalScoreRow>, SimError> {
    let pre_dist = model.pre_accuracy.normal("pre accuracy")?;
    let gain_dist = gain.normal("traditional gain")?;
    let decay_dist = model.retention_decay.normal("retention decay")?;
    (0..model.n_students)
        .map(|i| {
            let mut rng = TutorRng::derive(model.seed, TRADITIONAL_STREAM + i as u64);
            let pre = clamp01(pre_dist.sample(&mut rng));
            let raw_post = pre + gain_dist.sample(&mut rng);
            let (post, retention) = (clamp01(raw_post), clamp01(raw_post - decay_dist.sample(&mut rng)));
            Ok(TraditionalScoreRow {
                student_id: format!("trad-{:04}", i + 1),
                pretest: binomial_score(&mut rng, pre),
                during: binomial_score(&mut rng, post),
                posttest: binomial_score(&mut rng, post),
                retention: Some(binomial_score(&mut rng, retention)),
            })
        })
        .collect()
}

/// Whether `dir` holds anything at all.
fn dir_has_entries(dir: &Path) -> Result<bool, std::io::Error> {
    match std::fs::read_dir(dir) {
        Ok(mut it) => Ok(it.next().is_some()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(false),
        Err(e) => Err(e),
    }
}

/// Run the whole study for `model.n_students` app-cohort students and write
/// the log (and snapshot) into `dir`.
pub fn simulate(model: &SimulationModel, dir: &Path, force: bool) -> Result<SimulationSummary, SimError> {
    model.validate()?;
    if dir_has_entries(dir)? {
        if !force {
            return Err(SimError::NotEmpty(dir.display().to_string()));
        }
        for name in [LOG_FILE, crate::store::SNAPSHOT_FILE] {
            match std::fs::remove_file(dir.join(name)) {
                Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
                _ => {}
            }
        }
    }

    let clock = Arc::new(SimulatedClock::default());
    let mut store = Datastore::open_batched(dir, model.seed, clock.clone() as Arc<dyn Clock>)?;

    let pre_dist = model.pre_accuracy.normal("pre accuracy")?;
    let gain_dist = model.gain.normal("gain")?;
    let decay_dist = model.retention_decay.normal("retention decay")?;

    let mut learners = Vec::with_capacity(model.n_students);
    for i in 0..model.n_students {
        let student_id = format!("app-{:04}", i + 1);
        let mut rng = TutorRng::derive(model.seed, STUDENT_STREAM + i as u64);
        let pre = clamp01(pre_dist.sample(&mut rng));
        let raw_post = pre + gain_dist.sample(&mut rng);
        let (post, retention) = (clamp01(raw_post), clamp01(raw_post - decay_dist.sample(&mut rng)));
        store.execute(None, Command::RegisterStudent { student_id: student_id.clone() })?;
        let applied =
            store.execute(None, Command::CreateSession { student_id, cohort: Cohort::App, seed: None })?;
        let Applied::SessionCreated { session_id, .. } = applied else {
            unreachable!("create produced {applied:?}")
        };
        learners.push(Learner { session_id, rng, pre, post, retention });
    }

    let clock_ref = clock.as_ref();
    // Pretest, then app training.
    test_all(&mut store, clock_ref, &mut learners, |l| l.pre)?;
    advance_all(&mut store, clock_ref, &learners)?;
    advance_all(&mut store, clock_ref, &learners)?;
    practice_all(&mut store, clock_ref, &mut learners)?;
    advance_all(&mut store, clock_ref, &learners)?;
    test_all(&mut store, clock_ref, &mut learners, |l| l.post)?;
    // During-lesson test done; extra knowledge is optional review.
    advance_all(&mut store, clock_ref, &learners)?;
    advance_all(&mut store, clock_ref, &learners)?;
    test_all(&mut store, clock_ref, &mut learners, |l| l.post)?;
    advance_all(&mut store, clock_ref, &learners)?;
    for l in learners.iter_mut() {
        clock.advance_seconds(ANSWER_SECONDS);
        let ratings = model.satisfaction_profile.iter().map(|p| sample_category(&mut l.rng, p)).collect();
        store.execute(Some(&l.session_id), Command::SubmitSatisfaction { ratings })?;
    }
    advance_all(&mut store, clock_ref, &learners)?;
    test_all(&mut store, clock_ref, &mut learners, |l| l.post)?;
    advance_all(&mut store, clock_ref, &learners)?;
    clock.advance_days(RETENTION_GAP_DAYS);
    advance_all(&mut store, clock_ref, &learners)?;
    test_all(&mut store, clock_ref, &mut learners, |l| l.retention)?;
    advance_all(&mut store, clock_ref, &learners)?;
    debug_assert!(learners
        .iter()
        .all(|l| store.store().session(&l.session_id).is_some_and(|s| s.phase == Phase::Done)));

    let mut traditional = 0;
    if let Some(gain) = model.traditional_gain {
        let rows = traditional_rows(model, gain)?;
        traditional = rows.len();
        store.execute(None, Command::ImportTraditional { rows })?;
    }

    for e in 0..model.n_experts {
        let mut rng = TutorRng::derive(model.seed, EXPERT_STREAM + e as u64);
        let ratings = model.expert_top_rating.iter().map(|&p| if bernoulli(&mut rng, p) { 5 } else { 4 }).collect();
        store.execute(None, Command::RecordExpertRating { expert_id: format!("expert-{}", e + 1), ratings })?;
    }

    store.write_snapshot()?;
    Ok(SimulationSummary {
        students: model.n_students,
        traditional_rows: traditional,
        experts: model.n_experts,
        events: store.store().last_seq(),
    })
}
