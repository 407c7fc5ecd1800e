use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{Applied, Command, EventRecord, Store, StoreError};
use crate::clock::Clock;

pub const LOG_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

/// Append handle on `events.jsonl`. Nothing here rewrites existing lines;
/// a failed commit truncates back to the last committed length.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    pending: Vec<u8>,
    committed_len: u64,
    durable: bool,
}

impl EventLog {
    const BATCH_BYTES: usize = 1 << 16;

    /// Open (creating if needed) the log in `dir`. With `durable`, every
    /// commit is fsynced before returning.
    pub fn open(dir: &Path, durable: bool) -> Result<Self, StoreError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        if path.exists() && fs::metadata(&path)?.permissions().readonly() {
            return Err(StoreError::Io(std::io::Error::new(
                std::io::ErrorKind::PermissionDenied,
                format!("{} is read-only", path.display()),
            )));
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let committed_len = file.metadata()?.len();
        Ok(Self { path, file, pending: Vec::new(), committed_len, durable })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Buffer one record. In batch mode a full buffer is written through.
    pub fn append(&mut self, record: &EventRecord) -> Result<(), StoreError> {
        serde_json::to_writer(&mut self.pending, record).map_err(std::io::Error::from)?;
        self.pending.push(b'\n');
        if !self.durable && self.pending.len() >= Self::BATCH_BYTES {
            self.commit()?;
        }
        Ok(())
    }

    pub fn commit(&mut self) -> Result<(), StoreError> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let written = self.file.write_all(&self.pending).and_then(|()| {
            if self.durable {
                self.file.sync_data()
            } else {
                Ok(())
            }
        });
        match written {
            Ok(()) => {
                self.committed_len += self.pending.len() as u64;
                self.pending.clear();
                Ok(())
            }
            Err(e) => {
                self.pending.clear();
                let _ = self.file.set_len(self.committed_len);
                Err(e.into())
            }
        }
    }
}

/// Parse every line of a log, with 1-based line numbers.
pub fn read_log(path: &Path) -> Result<Vec<(usize, EventRecord)>, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| StoreError::Corrupt { line: line_no, reason: e.to_string() })?;
        if line.trim().is_empty() {
            return Err(StoreError::Corrupt { line: line_no, reason: "blank line".into() });
        }
        let record: EventRecord = serde_json::from_str(&line)
            .map_err(|e| StoreError::Corrupt { line: line_no, reason: e.to_string() })?;
        out.push((line_no, record));
    }
    Ok(out)
}

/// Rebuild state from parsed records, halting at the first bad one.
pub fn replay(records: &[(usize, EventRecord)], seed_base: u64) -> Result<Store, StoreError> {
    let mut store = Store::new(seed_base);
    for (line, record) in records {
        store.apply(record, *line)?;
    }
    Ok(store)
}

/// Replay the log in `dir` (an absent log gives an empty store).
pub fn load_dir(dir: &Path, seed_base: u64) -> Result<Store, StoreError> {
    replay(&read_log(&dir.join(LOG_FILE))?, seed_base)
}

/// A store bound to its log and clock. Every accepted command is appended
/// and committed before the result is returned.
pub struct Datastore {
    store: Store,
    log: EventLog,
    dir: PathBuf,
    clock: Arc<dyn Clock>,
    auto_commit: bool,
}

impl std::fmt::Debug for Datastore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Datastore").field("dir", &self.dir).field("last_seq", &self.store.last_seq()).finish()
    }
}

impl Datastore {
    /// Open `dir`, replaying any existing log. Sessions are seeded from
    /// `seed_base`; logged seeds always win on replay.
    pub fn open(dir: &Path, seed_base: u64, clock: Arc<dyn Clock>) -> Result<Self, StoreError> {
        let store = load_dir(dir, seed_base)?;
        let log = EventLog::open(dir, true)?;
        Ok(Self { store, log, dir: dir.to_path_buf(), clock, auto_commit: true })
    }

    /// Batch mode for bulk writers: records are buffered and only reach disk
    /// on [`Datastore::flush`] or when the buffer fills.
    pub fn open_batched(dir: &Path, seed_base: u64, clock: Arc<dyn Clock>) -> Result<Self, StoreError> {
        let store = load_dir(dir, seed_base)?;
        let log = EventLog::open(dir, false)?;
        Ok(Self { store, log, dir: dir.to_path_buf(), clock, auto_commit: false })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn execute(&mut self, session_id: Option<&str>, command: Command) -> Result<Applied, StoreError> {
        let now = self.clock.now();
        let (record, applied) = self.store.execute(session_id, command, now)?;
        if let Some(record) = record {
            let written = self.log.append(&record).and_then(|()| if self.auto_commit { self.log.commit() } else { Ok(()) });
            if let Err(e) = written {
                // Not acknowledged, so the in-memory state must drop it too.
                self.store = load_dir(&self.dir, self.store.seed_base())?;
                return Err(e);
            }
        }
        Ok(applied)
    }

    pub fn flush(&mut self) -> Result<(), StoreError> {
        self.log.commit()
    }

    /// Write the derived state snapshot next to the log.
    pub fn write_snapshot(&mut self) -> Result<PathBuf, StoreError> {
        self.flush()?;
        let path = self.dir.join(SNAPSHOT_FILE);
        fs::write(&path, self.store.snapshot_json())?;
        Ok(path)
    }
}

impl Drop for Datastore {
    fn drop(&mut self) {
        let _ = self.log.commit();
    }
}
