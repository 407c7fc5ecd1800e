//! Injected time source. Everything that depends on "now" takes a timestamp
//! from a [`Clock`], so the two-week retention gate can be driven in tests.

use std::sync::atomic::{AtomicI64, Ordering};

use chrono::{DateTime, TimeZone, Utc};

pub type Timestamp = DateTime<Utc>;

pub const SECONDS_PER_DAY: i64 = 86_400;

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        // Whole seconds keep log timestamps in one fixed format.
        Utc.timestamp_opt(Utc::now().timestamp(), 0).unwrap()
    }
}

/// Manually advanced clock with one-second resolution.
#[derive(Debug)]
pub struct SimulatedClock {
    seconds: AtomicI64,
}

impl SimulatedClock {
    /// 2017-11-01T08:00:00Z, the default start of a simulated term.
    pub const DEFAULT_START: i64 = 1_509_523_200;

    pub fn new(start: Timestamp) -> Self {
        Self { seconds: AtomicI64::new(start.timestamp()) }
    }

    pub fn starting_at_epoch_seconds(seconds: i64) -> Self {
        Self { seconds: AtomicI64::new(seconds) }
    }

    pub fn advance_seconds(&self, seconds: i64) -> Timestamp {
        let now = self.seconds.fetch_add(seconds, Ordering::SeqCst) + seconds;
        Utc.timestamp_opt(now, 0).unwrap()
    }

    pub fn advance_days(&self, days: i64) -> Timestamp {
        self.advance_seconds(days * SECONDS_PER_DAY)
    }

    pub fn set(&self, t: Timestamp) {
        self.seconds.store(t.timestamp(), Ordering::SeqCst);
    }
}

impl Default for SimulatedClock {
    fn default() -> Self {
        Self::starting_at_epoch_seconds(Self::DEFAULT_START)
    }
}

impl Clock for SimulatedClock {
    fn now(&self) -> Timestamp {
        Utc.timestamp_opt(self.seconds.load(Ordering::SeqCst), 0).unwrap()
    }
}
