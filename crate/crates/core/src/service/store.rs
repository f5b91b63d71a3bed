use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ServiceConfig, StudyConfig};
use super::ServiceError;
use crate::error::Error;
use crate::vtt::{write_study_csv, Label, Likert, VttResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Open,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub guess: Label,
    pub likert: Likert,
    pub at: String,
}

/// Server-side item; never sent to clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Item {
    index: usize,
    /// `<class>/<file name>`, relative to the study's image directories.
    image: String,
    truth: Label,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum JournalEntry {
    Created {
        session_id: String,
        study_id: String,
        participant: String,
        seed: u64,
        created_at: String,
        items: Vec<Item>,
    },
    Response {
        index: usize,
        guess: Label,
        likert: Likert,
        at: String,
        /// Present when this entry replaces an earlier answer.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replaces: Option<Answer>,
    },
    Completed {
        at: String,
    },
}

#[derive(Debug)]
struct Session {
    session_id: String,
    study_id: String,
    participant: String,
    items: Vec<Item>,
    answers: BTreeMap<usize, Answer>,
    state: SessionState,
    journal: PathBuf,
}

/// Returned by `create_session`: nothing that depends on the truth labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub item_count: usize,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientAnswer {
    pub guess: Label,
    pub likert: Likert,
}

/// The participant's view of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub study_id: String,
    pub participant: String,
    pub item_count: usize,
    pub state: SessionState,
    pub answers: BTreeMap<usize, ClientAnswer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseAck {
    pub session_id: String,
    pub index: usize,
    pub answered: usize,
    pub item_count: usize,
    pub replaced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionSummary {
    pub session_id: String,
    pub state: SessionState,
    pub rows_written: usize,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn internal(e: Error) -> ServiceError {
    ServiceError::Internal(e)
}

fn io_err(path: &Path, e: std::io::Error) -> ServiceError {
    ServiceError::Internal(Error::io(path, e))
}

/// Appends one JSON line and waits for it to reach the disk.
fn append(path: &Path, entry: &JournalEntry) -> Result<(), ServiceError> {
    let mut line = serde_json::to_string(entry).map_err(|e| internal(e.into()))?;
    line.push('\n');
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_err(path, e))?;
    f.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
    f.sync_data().map_err(|e| io_err(path, e))
}

fn sync_dir(dir: &Path) {
    // Directory fsync makes a new journal's directory entry durable; not
    // supported everywhere, so failures are only logged.
    if let Err(e) = File::open(dir).and_then(|d| d.sync_all()) {
        log::debug!("directory sync of {} failed: {e}", dir.display());
    }
}

/// Seed of the sampling RNG for one (seed, study, participant).
fn session_rng(seed: u64, study_id: &str, participant: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((study_id.len() as u64).to_le_bytes());
    h.update(study_id.as_bytes());
    h.update(participant.as_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

fn list_images(dir: &Path) -> Result<Vec<String>, ServiceError> {
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') || !entry.path().is_file() {
            continue;
        }
        names.push(name);
    }
    names.sort();
    Ok(names)
}

/// File name of the materialized study CSV; `/` and other unsafe bytes are hex-escaped.
fn study_file_name(study_id: &str) -> String {
    let mut out = String::new();
    for b in study_id.bytes() {
        if b.is_ascii_alphanumeric() || b == b'-' || b == b'.' {
            out.push(b as char);
        } else {
            out.push_str(&format!("_{b:02x}"));
        }
    }
    out.push_str(".csv");
    out
}

/// Sessions, their journals and the per-study response CSVs.
///
/// Each session has its own lock, so requests to one session are
/// serialized while different sessions proceed independently.
pub struct SessionStore {
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    /// Serializes rewrites of one study's CSV.
    study_locks: HashMap<String, Mutex<()>>,
}

impl SessionStore {
    /// Opens the data directory and replays every session journal in it.
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        let dir = config.sessions_dir();
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let studies_dir = config.studies_dir();
        fs::create_dir_all(&studies_dir).map_err(|e| io_err(&studies_dir, e))?;

        let mut sessions = HashMap::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| io_err(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            if let Some(s) = replay(&path)? {
                sessions.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
            }
        }
        let study_locks = config
            .studies
            .iter()
            .map(|s| (s.study_id.clone(), Mutex::new(())))
            .collect();
        let store = SessionStore {
            config,
            sessions: Mutex::new(sessions),
            study_locks,
        };
        for study in &store.config.studies {
            store.materialize(&study.study_id)?;
        }
        Ok(store)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn study(&self, study_id: &str) -> Result<&StudyConfig, ServiceError> {
        self.config
            .studies
            .iter()
            .find(|s| s.study_id == study_id)
            .ok_or_else(|| ServiceError::NotFound(format!("unknown study {study_id:?}")))
    }

    fn session(&self, session_id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .lock()
            .unwrap()
            .get(session_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("unknown session {session_id:?}")))
    }

    /// Samples `images_per_class` files from each directory, shuffles them
    /// together and journals the session. Without `seed` a random one is drawn.
    pub fn create_session(
        &self,
        study_id: &str,
        participant: &str,
        seed: Option<u64>,
    ) -> Result<CreatedSession, ServiceError> {
        let study = self.study(study_id)?;
        let participant = participant.trim();
        if participant.is_empty() {
            return Err(ServiceError::BadRequest("participant must be non-empty".into()));
        }
        let k = study.images_per_class;
        let real = list_images(&study.real_dir)?;
        let generated = list_images(&study.generated_dir)?;
        if real.len() < k || generated.len() < k {
            return Err(ServiceError::BadRequest(format!(
                "study {study_id} needs {k} images per class but has {} real and {} generated",
                real.len(),
                generated.len()
            )));
        }

        let mut sessions = self.sessions.lock().unwrap();
        for s in sessions.values() {
            let s = s.lock().unwrap();
            if s.study_id == study_id && s.participant == participant {
                return Err(ServiceError::Conflict {
                    message: format!(
                        "participant {participant} already has a {} session for study {study_id}",
                        match s.state {
                            SessionState::Open => "open",
                            SessionState::Complete => "completed",
                        }
                    ),
                    session_id: (s.state == SessionState::Open).then(|| s.session_id.clone()),
                    missing: Vec::new(),
                });
            }
        }

        let seed = seed.unwrap_or_else(|| rand::rng().random());
        let mut rng = session_rng(seed, study_id, participant);
        let mut picked: Vec<(String, Label)> = Vec::with_capacity(2 * k);
        for (names, truth) in [(&real, Label::Real), (&generated, Label::Generated)] {
            for name in names.choose_multiple(&mut rng, k) {
                picked.push((format!("{truth}/{name}"), truth));
            }
        }
        picked.shuffle(&mut rng);
        let items: Vec<Item> = picked
            .into_iter()
            .enumerate()
            .map(|(index, (image, truth))| Item { index, image, truth })
            .collect();

        let session_id = hex::encode(rand::rng().random::<[u8; 16]>());
        let journal = self.config.sessions_dir().join(format!("{session_id}.jsonl"));
        append(
            &journal,
            &JournalEntry::Created {
                session_id: session_id.clone(),
                study_id: study_id.to_string(),
                participant: participant.to_string(),
                seed,
                created_at: now(),
                items: items.clone(),
            },
        )?;
        sync_dir(&self.config.sessions_dir());

        let created = CreatedSession {
            session_id: session_id.clone(),
            item_count: items.len(),
            indices: (0..items.len()).collect(),
        };
        sessions.insert(
            session_id.clone(),
            Arc::new(Mutex::new(Session {
                session_id,
                study_id: study_id.to_string(),
                participant: participant.to_string(),
                items,
                answers: BTreeMap::new(),
                state: SessionState::Open,
                journal,
            })),
        );
        Ok(created)
    }

    pub fn view(&self, session_id: &str) -> Result<SessionView, ServiceError> {
        let s = self.session(session_id)?;
        let s = s.lock().unwrap();
        Ok(SessionView {
            session_id: s.session_id.clone(),
            study_id: s.study_id.clone(),
            participant: s.participant.clone(),
            item_count: s.items.len(),
            state: s.state,
            answers: s
                .answers
                .iter()
                .map(|(i, a)| {
                    (
                        *i,
                        ClientAnswer {
                            guess: a.guess,
                            likert: a.likert,
                        },
                    )
                })
                .collect(),
        })
    }

    /// Absolute path of an item's image file.
    pub fn image_path(&self, session_id: &str, index: usize) -> Result<PathBuf, ServiceError> {
        let s = self.session(session_id)?;
        let s = s.lock().unwrap();
        let item = s.items.get(index).ok_or_else(|| {
            ServiceError::NotFound(format!("session has no item {index}"))
        })?;
        let study = self.study(&s.study_id)?;
        let (class, name) = item.image.split_once('/').unwrap_or(("", &item.image));
        let dir = if class == Label::Real.as_str() {
            &study.real_dir
        } else {
            &study.generated_dir
        };
        Ok(dir.join(name))
    }

    /// Stores an answer durably before returning. A repeated index replaces
    /// the earlier answer; the journal keeps both.
    pub fn record_response(
        &self,
        session_id: &str,
        index: usize,
        guess: &str,
        likert: i64,
    ) -> Result<ResponseAck, ServiceError> {
        let guess: Label = guess
            .parse()
            .map_err(|_| ServiceError::BadRequest(format!("guess {guess:?} is not a class label")))?;
        let likert = u8::try_from(likert)
            .ok()
            .and_then(|v| Likert::new(v).ok())
            .ok_or_else(|| ServiceError::BadRequest(format!("likert must be 1, 2 or 3, got {likert}")))?;
        let s = self.session(session_id)?;
        let mut s = s.lock().unwrap();
        if s.state == SessionState::Complete {
            return Err(ServiceError::Conflict {
                message: "session is already complete".into(),
                session_id: None,
                missing: Vec::new(),
            });
        }
        if index >= s.items.len() {
            return Err(ServiceError::NotFound(format!(
                "session has {} items, no item {index}",
                s.items.len()
            )));
        }
        let at = now();
        let replaces = s.answers.get(&index).cloned();
        append(
            &s.journal,
            &JournalEntry::Response {
                index,
                guess,
                likert,
                at: at.clone(),
                replaces: replaces.clone(),
            },
        )?;
        s.answers.insert(index, Answer { guess, likert, at });
        Ok(ResponseAck {
            session_id: s.session_id.clone(),
            index,
            answered: s.answers.len(),
            item_count: s.items.len(),
            replaced: replaces.is_some(),
        })
    }

    pub fn complete_session(&self, session_id: &str) -> Result<CompletionSummary, ServiceError> {
        let s = self.session(session_id)?;
        let study_id = {
            let mut s = s.lock().unwrap();
            if s.state == SessionState::Complete {
                return Err(ServiceError::Conflict {
                    message: "session is already complete".into(),
                    session_id: None,
                    missing: Vec::new(),
                });
            }
            let missing: Vec<usize> = (0..s.items.len()).filter(|i| !s.answers.contains_key(i)).collect();
            if !missing.is_empty() {
                return Err(ServiceError::Conflict {
                    message: format!(
                        "{} of {} items are unanswered",
                        missing.len(),
                        s.items.len()
                    ),
                    session_id: None,
                    missing,
                });
            }
            append(&s.journal, &JournalEntry::Completed { at: now() })?;
            s.state = SessionState::Complete;
            s.study_id.clone()
        };
        self.materialize(&study_id)?;
        let rows = s.lock().unwrap().items.len();
        Ok(CompletionSummary {
            session_id: session_id.to_string(),
            state: SessionState::Complete,
            rows_written: rows,
        })
    }

    /// Rows of every complete session of a study, ordered by participant then item index.
    pub fn study_rows(&self, study_id: &str) -> Result<Vec<VttResponse>, ServiceError> {
        self.study(study_id)?;
        let sessions: Vec<Arc<Mutex<Session>>> = self.sessions.lock().unwrap().values().cloned().collect();
        let mut per_session: Vec<(String, Vec<VttResponse>)> = Vec::new();
        for s in sessions {
            let s = s.lock().unwrap();
            if s.study_id != study_id || s.state != SessionState::Complete {
                continue;
            }
            let rows = s
                .items
                .iter()
                .map(|item| {
                    let a = &s.answers[&item.index];
                    VttResponse {
                        participant: s.participant.clone(),
                        image: item.image.clone(),
                        truth: item.truth,
                        guess: a.guess,
                        likert: a.likert,
                        timestamp: a.at.clone(),
                    }
                })
                .collect();
            per_session.push((s.participant.clone(), rows));
        }
        per_session.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(per_session.into_iter().flat_map(|(_, r)| r).collect())
    }

    /// CSV of all complete sessions of a study.
    pub fn export_study(&self, study_id: &str) -> Result<String, ServiceError> {
        let rows = self.study_rows(study_id)?;
        if rows.is_empty() {
            return Err(ServiceError::NotFound(format!(
                "study {study_id} has no complete sessions"
            )));
        }
        let mut buf = Vec::new();
        write_study_csv(&rows, &mut buf, true).map_err(internal)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Path of the study's response CSV in the data directory.
    pub fn study_csv_path(&self, study_id: &str) -> PathBuf {
        self.config.studies_dir().join(study_file_name(study_id))
    }

    /// Rewrites the study CSV from the journals (write to a temporary file, then rename).
    fn materialize(&self, study_id: &str) -> Result<(), ServiceError> {
        let _guard = self.study_locks.get(study_id).map(|l| l.lock().unwrap());
        let rows = self.study_rows(study_id)?;
        if rows.is_empty() {
            return Ok(());
        }
        let path = self.study_csv_path(study_id);
        let tmp = path.with_extension("csv.tmp");
        let mut buf = Vec::new();
        write_study_csv(&rows, &mut buf, true).map_err(internal)?;
        let mut f = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        f.write_all(&buf).map_err(|e| io_err(&tmp, e))?;
        f.sync_all().map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))?;
        sync_dir(&self.config.studies_dir());
        Ok(())
    }
}

/// Rebuilds a session from its journal. A torn final line (a write that
/// never completed, so was never acknowledged) is cut off so later appends
/// start on a fresh line.
fn replay(path: &Path) -> Result<Option<Session>, ServiceError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut lines: Vec<(usize, &[u8])> = Vec::new();
    let mut start = 0;
    for (i, b) in bytes.iter().enumerate() {
        if *b == b'\n' {
            lines.push((start, &bytes[start..i]));
            start = i + 1;
        }
    }
    if start < bytes.len() {
        lines.push((start, &bytes[start..]));
    }
    let mut session: Option<Session> = None;
    for (i, (offset, line)) in lines.iter().enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let last = i + 1 == lines.len();
        let terminated = offset + line.len() < bytes.len();
        let entry = match serde_json::from_slice::<JournalEntry>(line) {
            Ok(e) if terminated => e,
            Err(e) if !last => {
                return Err(ServiceError::Internal(Error::Row {
                    source_name: path.display().to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                }))
            }
            _ => {
                log::warn!("{}: cutting torn final journal line", path.display());
                OpenOptions::new()
                    .write(true)
                    .open(path)
                    .and_then(|f| {
                        f.set_len(*offset as u64)?;
                        f.sync_data()
                    })
                    .map_err(|e| io_err(path, e))?;
                break;
            }
        };
        match (entry, session.as_mut()) {
            (
                JournalEntry::Created {
                    session_id,
                    study_id,
                    participant,
                    items,
                    ..
                },
                None,
            ) => {
                session = Some(Session {
                    session_id,
                    study_id,
                    participant,
                    items,
                    answers: BTreeMap::new(),
                    state: SessionState::Open,
                    journal: path.to_path_buf(),
                });
            }
            (JournalEntry::Response { index, guess, likert, at, .. }, Some(s)) => {
                s.answers.insert(index, Answer { guess, likert, at });
            }
            (JournalEntry::Completed { .. }, Some(s)) => s.state = SessionState::Complete,
            _ => {
                return Err(ServiceError::Internal(Error::Row {
                    source_name: path.display().to_string(),
                    line: i + 1,
                    reason: "journal entries out of order".into(),
                }))
            }
        }
    }
    if session.is_none() {
        log::warn!("{}: empty journal ignored", path.display());
    }
    Ok(session)
}
