//! Event-sourced state: every change is an [`EventRecord`] and the in-memory
//! [`Store`] is a fold over the log.
//!
//! Live commands and replay share one path. A [`Command`] runs against the
//! state and yields the event it produced; on replay each logged event is
//! turned back into its command, rerun, and the produced event must equal the
//! logged one, otherwise the log is reported corrupt at that line.

mod event;
mod import;
mod log;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::clock::Timestamp;
use crate::place::{CountResponse, PlaceValue};
use crate::rng::{fnv1a, TutorRng};
use crate::session::{Cohort, CountState, ItemSource, Phase, SessionError, StudySession, SubmitResult, TestKind};
use crate::stats::report::StudentScores;
use crate::stats::{build_report, Report, ReportError, ReportOptions, StudyData, TableFormat};

pub use event::{Event, EventRecord};
pub use import::{parse_traditional_csv, traditional_csv, ParsedImport, RowError, TraditionalScoreRow, TRADITIONAL_HEADER};
pub use log::{load_dir, read_log, replay, Datastore, EventLog, LOG_FILE, SNAPSHOT_FILE};

pub const EXPERT_ITEMS: usize = 6;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("unknown student {0:?}")]
    UnknownStudent(String),
    #[error("student {0:?} is already registered")]
    DuplicateStudent(String),
    #[error("student {student:?} already has an active session {session:?}")]
    Conflict { student: String, session: String },
    #[error("{0}")]
    Validation(String),
    #[error("import aborted: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Import(Vec<RowError>),
    #[error("corrupt event log at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Input-only form of every state change.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    RegisterStudent { student_id: String },
    CreateSession { student_id: String, cohort: Cohort, seed: Option<u64> },
    AdvancePhase,
    SelectPlace { place: PlaceValue },
    Click { place: PlaceValue },
    SubmitAnswer { response: CountResponse, submission_id: Option<String> },
    SubmitSatisfaction { ratings: Vec<u8> },
    ImportTraditional { rows: Vec<TraditionalScoreRow> },
    RecordExpertRating { expert_id: String, ratings: Vec<u8> },
}

impl Command {
    fn from_event(event: &Event) -> Self {
        match event.clone() {
            Event::StudentRegistered { student_id } => Command::RegisterStudent { student_id },
            Event::SessionCreated { student_id, cohort, seed } => {
                Command::CreateSession { student_id, cohort, seed: Some(seed) }
            }
            Event::PhaseAdvanced { .. } => Command::AdvancePhase,
            Event::ItemSelected { place } => Command::SelectPlace { place },
            Event::ClickRecorded { place, .. } => Command::Click { place },
            Event::AnswerSubmitted { response, submission_id, .. } => Command::SubmitAnswer { response, submission_id },
            Event::SatisfactionSubmitted { ratings } => Command::SubmitSatisfaction { ratings: ratings.to_vec() },
            Event::ScoresImported { rows } => Command::ImportTraditional { rows },
            Event::ExpertRatingRecorded { expert_id, ratings } => Command::RecordExpertRating { expert_id, ratings },
        }
    }
}

/// What a command returned to its caller.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Applied {
    StudentRegistered { student_id: String },
    SessionCreated { session_id: String, phase: Phase },
    PhaseAdvanced { phase: Phase },
    ItemSelected { item: ItemSource },
    Clicked(CountState),
    Submitted(SubmitResult),
    SatisfactionRecorded,
    Imported { count: usize },
    ExpertRatingRecorded { experts: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpertRating {
    pub expert_id: String,
    pub ratings: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Store {
    /// Configuration, not state: left out of snapshots.
    #[serde(skip)]
    seed_base: u64,
    last_seq: u64,
    last_timestamp: Option<Timestamp>,
    students: BTreeSet<String>,
    sessions: BTreeMap<String, StudySession>,
    active_by_student: BTreeMap<String, String>,
    traditional: BTreeMap<String, TraditionalScoreRow>,
    expert_ratings: Vec<ExpertRating>,
}

impl Default for Store {
    fn default() -> Self {
        Self::new(0)
    }
}

impl Store {
    pub fn new(seed_base: u64) -> Self {
        Self {
            seed_base,
            last_seq: 0,
            last_timestamp: None,
            students: BTreeSet::new(),
            sessions: BTreeMap::new(),
            active_by_student: BTreeMap::new(),
            traditional: BTreeMap::new(),
            expert_ratings: Vec::new(),
        }
    }

    pub fn seed_base(&self) -> u64 {
        self.seed_base
    }

    pub fn set_seed_base(&mut self, seed_base: u64) {
        self.seed_base = seed_base;
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    /// Timestamp of the newest logged event.
    pub fn last_timestamp(&self) -> Option<Timestamp> {
        self.last_timestamp
    }

    pub fn session(&self, id: &str) -> Option<&StudySession> {
        self.sessions.get(id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &StudySession> {
        self.sessions.values()
    }

    pub fn has_student(&self, id: &str) -> bool {
        self.students.contains(id)
    }

    pub fn traditional_rows(&self) -> impl Iterator<Item = &TraditionalScoreRow> {
        self.traditional.values()
    }

    pub fn expert_ratings(&self) -> &[ExpertRating] {
        &self.expert_ratings
    }

    pub fn is_empty(&self) -> bool {
        self.last_seq == 0
    }

    /// Seed for a student's papers, derived from the store's seed base.
    pub fn session_seed(&self, student_id: &str) -> u64 {
        TutorRng::derive(self.seed_base, fnv1a(student_id)).next_u64()
    }

    fn session_mut(&mut self, id: Option<&str>) -> Result<&mut StudySession, StoreError> {
        let id = id.ok_or_else(|| StoreError::Validation("command needs a session id".into()))?;
        self.sessions.get_mut(id).ok_or_else(|| StoreError::UnknownSession(id.to_string()))
    }

    fn validate_expert(ratings: &[u8]) -> Result<(), StoreError> {
        if ratings.len() != EXPERT_ITEMS {
            return Err(StoreError::Validation(format!("expected {EXPERT_ITEMS} expert ratings, got {}", ratings.len())));
        }
        if let Some(bad) = ratings.iter().find(|r| !(1..=5).contains(*r)) {
            return Err(StoreError::Validation(format!("expert rating {bad} is outside the 1..5 scale")));
        }
        Ok(())
    }

    /// Run one command. Returns the event to log (none for an idempotent
    /// resubmission) and the caller-facing result. On error the store is
    /// unchanged.
    pub fn run(
        &mut self,
        session_id: Option<&str>,
        command: Command,
        now: Timestamp,
    ) -> Result<(Option<(Option<String>, Event)>, Applied), StoreError> {
        let sid = session_id.map(str::to_string);
        match command {
            Command::RegisterStudent { student_id } => {
                if student_id.trim().is_empty() {
                    return Err(StoreError::Validation("student_id must not be empty".into()));
                }
                if !self.students.insert(student_id.clone()) {
                    return Err(StoreError::DuplicateStudent(student_id));
                }
                Ok((
                    Some((None, Event::StudentRegistered { student_id: student_id.clone() })),
                    Applied::StudentRegistered { student_id },
                ))
            }
            Command::CreateSession { student_id, cohort, seed } => {
                if !self.students.contains(&student_id) {
                    return Err(StoreError::UnknownStudent(student_id));
                }
                if let Some(existing) = self.active_by_student.get(&student_id) {
                    return Err(StoreError::Conflict { student: student_id, session: existing.clone() });
                }
                let seed = seed.unwrap_or_else(|| self.session_seed(&student_id));
                let session_id = format!("sess-{:06}", self.sessions.len() + 1);
                let session = StudySession::new(session_id.clone(), student_id.clone(), cohort, seed, now);
                let phase = session.phase;
                self.sessions.insert(session_id.clone(), session);
                self.active_by_student.insert(student_id.clone(), session_id.clone());
                Ok((
                    Some((Some(session_id.clone()), Event::SessionCreated { student_id, cohort, seed })),
                    Applied::SessionCreated { session_id, phase },
                ))
            }
            Command::AdvancePhase => {
                let session = self.session_mut(session_id)?;
                let from = session.phase;
                let to = session.advance(now)?;
                if to == Phase::Done {
                    let student = session.student_id.clone();
                    self.active_by_student.remove(&student);
                }
                Ok((Some((sid, Event::PhaseAdvanced { from, to })), Applied::PhaseAdvanced { phase: to }))
            }
            Command::SelectPlace { place } => {
                let session = self.session_mut(session_id)?;
                let item = session.select_place(place)?.source;
                Ok((Some((sid, Event::ItemSelected { place })), Applied::ItemSelected { item }))
            }
            Command::Click { place } => {
                let session = self.session_mut(session_id)?;
                let state = session.record_click(place)?;
                let event = Event::ClickRecorded { place, running_count: state.running_count };
                Ok((Some((sid, event)), Applied::Clicked(state)))
            }
            Command::SubmitAnswer { response, submission_id } => {
                let session = self.session_mut(session_id)?;
                let result = session.submit_answer(&response, submission_id.as_deref(), now)?;
                if result.replayed {
                    return Ok((None, Applied::Submitted(result)));
                }
                let event = Event::AnswerSubmitted {
                    item: result.item,
                    response,
                    submission_id,
                    outcome: result.verdict.outcome,
                };
                Ok((Some((sid, event)), Applied::Submitted(result)))
            }
            Command::SubmitSatisfaction { ratings } => {
                let session = self.session_mut(session_id)?;
                session.submit_satisfaction(&ratings)?;
                let ratings = session.satisfaction.expect("just stored");
                Ok((Some((sid, Event::SatisfactionSubmitted { ratings })), Applied::SatisfactionRecorded))
            }
            Command::ImportTraditional { rows } => {
                let mut seen = BTreeSet::new();
                let mut errors = Vec::new();
                for (i, row) in rows.iter().enumerate() {
                    let scores = [Some(row.pretest), Some(row.during), Some(row.posttest), row.retention];
                    if scores.iter().flatten().any(|&s| s as usize > crate::session::TEST_LENGTH) {
                        errors.push(RowError { line: i as u64 + 2, message: "score outside 0..60".into() });
                    }
                    if self.traditional.contains_key(&row.student_id) || !seen.insert(row.student_id.as_str()) {
                        errors.push(RowError {
                            line: i as u64 + 2,
                            message: format!("duplicate student_id {:?}", row.student_id),
                        });
                    }
                }
                if !errors.is_empty() {
                    return Err(StoreError::Import(errors));
                }
                let count = rows.len();
                for row in &rows {
                    self.traditional.insert(row.student_id.clone(), row.clone());
                }
                Ok((Some((None, Event::ScoresImported { rows })), Applied::Imported { count }))
            }
            Command::RecordExpertRating { expert_id, ratings } => {
                Self::validate_expert(&ratings)?;
                if self.expert_ratings.iter().any(|e| e.expert_id == expert_id) {
                    return Err(StoreError::Validation(format!("expert {expert_id:?} already rated")));
                }
                self.expert_ratings.push(ExpertRating { expert_id: expert_id.clone(), ratings: ratings.clone() });
                Ok((
                    Some((None, Event::ExpertRatingRecorded { expert_id, ratings })),
                    Applied::ExpertRatingRecorded { experts: self.expert_ratings.len() },
                ))
            }
        }
    }

    /// Run a live command and wrap its event in the next log record.
    pub fn execute(
        &mut self,
        session_id: Option<&str>,
        command: Command,
        now: Timestamp,
    ) -> Result<(Option<EventRecord>, Applied), StoreError> {
        if let Some(last) = self.last_timestamp {
            if now < last {
                return Err(StoreError::Validation(format!("clock went backwards: {now} < {last}")));
            }
        }
        let (event, applied) = self.run(session_id, command, now)?;
        let record = event.map(|(session_id, event)| {
            self.last_seq += 1;
            self.last_timestamp = Some(now);
            EventRecord { seq: self.last_seq, timestamp: now, session_id, event }
        });
        Ok((record, applied))
    }

    /// Fold one logged record into the state. `line` is only used for errors.
    pub fn apply(&mut self, record: &EventRecord, line: usize) -> Result<(), StoreError> {
        let corrupt = |reason: String| StoreError::Corrupt { line, reason };
        if record.seq <= self.last_seq {
            return Err(corrupt(format!("seq {} does not follow {}", record.seq, self.last_seq)));
        }
        let command = Command::from_event(&record.event);
        let (produced, _) = self
            .run(record.session_id.as_deref(), command, record.timestamp)
            .map_err(|e| corrupt(format!("{} rejected: {e}", record.event.kind())))?;
        match produced {
            Some((sid, event)) if sid == record.session_id && event == record.event => {}
            Some((_, event)) => {
                return Err(corrupt(format!("{} does not reproduce (got {event:?})", record.event.kind())));
            }
            None => return Err(corrupt("duplicate submission id replayed as a new event".into())),
        }
        self.last_seq = record.seq;
        self.last_timestamp = Some(record.timestamp);
        Ok(())
    }

    pub fn study_data(&self) -> StudyData {
        let scores = |s: &StudySession| StudentScores {
            student_id: s.student_id.clone(),
            pretest: s.score(TestKind::Pretest).ok(),
            during: s.score(TestKind::DuringLesson).ok(),
            posttest: s.score(TestKind::Posttest).ok(),
            retention: s.score(TestKind::Retention).ok(),
            satisfaction: s.satisfaction,
        };
        let app = self.sessions.values().filter(|s| s.cohort == Cohort::App).map(scores).collect();
        let mut traditional: Vec<StudentScores> = self
            .traditional
            .values()
            .map(|r| StudentScores {
                student_id: r.student_id.clone(),
                pretest: Some(crate::session::Score::new(r.pretest)),
                during: Some(crate::session::Score::new(r.during)),
                posttest: Some(crate::session::Score::new(r.posttest)),
                retention: r.retention.map(crate::session::Score::new),
                satisfaction: None,
            })
            .collect();
        traditional.extend(self.sessions.values().filter(|s| s.cohort == Cohort::Traditional).map(scores));
        StudyData {
            app,
            traditional,
            expert_ratings: self.expert_ratings.iter().map(|e| e.ratings.clone()).collect(),
        }
    }

    pub fn report(&self, opts: &ReportOptions) -> Result<Report, ReportError> {
        build_report(&self.study_data(), opts)
    }

    pub fn export_table(&self, table: u8, format: TableFormat, opts: &ReportOptions) -> Result<String, ReportError> {
        Ok(self.report(opts)?.table(table)?.render(format))
    }

    /// Deterministic JSON view of the whole state.
    pub fn snapshot_json(&self) -> String {
        serde_json::to_string(self).expect("store state serializes")
    }
}
