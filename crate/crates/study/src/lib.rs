//! Human-baseline study service.
//!
//! Participants see one stimulus at a time and judge whether the compared
//! elements are physically the same or different. Judgments are journaled
//! before they are acknowledged, and exported as per-strength detection rates
//! in the shape `human_threshold` consumes.

pub mod http;
pub mod journal;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;
use vi_probe_core::catalog::VariantKind;
use vi_probe_core::dataset::{Manifest, ManifestItem};
use vi_probe_core::metrics::DetectionRate;

use journal::{Entry, Journal};

pub use http::{router, serve, SharedStudy};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("unknown session {0}")]
    UnknownSession(Uuid),
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error("the slice selects no items")]
    EmptySlice,
    #[error("invalid slice: {0}")]
    InvalidSlice(String),
    #[error("item {got} is not the current trial (expected {expected:?})")]
    OutOfOrder { expected: Option<String>, got: String },
    #[error("journal {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("journal is inconsistent: {0}")]
    Corrupt(String),
}

/// Which manifest items a session presents. Empty lists select everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SliceSpec {
    pub cases: Vec<u8>,
    pub kinds: Vec<VariantKind>,
    pub alphas: Vec<f64>,
    pub items: Vec<String>,
    /// Keep only the first `limit` matches in item-id order.
    pub limit: Option<usize>,
}

impl Default for SliceSpec {
    fn default() -> Self {
        SliceSpec {
            cases: Vec::new(),
            kinds: vec![VariantKind::O, VariantKind::P],
            alphas: Vec::new(),
            items: Vec::new(),
            limit: None,
        }
    }
}

impl SliceSpec {
    pub fn matches(&self, item: &ManifestItem) -> bool {
        (self.cases.is_empty() || self.cases.contains(&item.case_id))
            && (self.kinds.is_empty() || self.kinds.contains(&item.variant_kind))
            && (self.alphas.is_empty() || self.alphas.iter().any(|a| (a - item.alpha).abs() < 1e-9))
            && (self.items.is_empty() || self.items.contains(&item.item_id))
    }

    /// Matching item ids, sorted.
    pub fn select<'a>(&self, items: impl IntoIterator<Item = &'a ManifestItem>) -> Vec<String> {
        let mut ids: Vec<String> = items
            .into_iter()
            .filter(|i| self.matches(i))
            .map(|i| i.item_id.clone())
            .collect();
        ids.sort();
        if let Some(n) = self.limit {
            ids.truncate(n);
        }
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySession {
    pub session_id: Uuid,
    /// Opaque participant tag.
    pub participant: String,
    pub slice: SliceSpec,
    pub seed: u64,
    pub order: Vec<String>,
    /// Recomputed from the journal; never trusted from disk.
    #[serde(default, skip_serializing)]
    pub cursor: usize,
    pub created_ms: u64,
}

impl StudySession {
    pub fn is_done(&self) -> bool {
        self.cursor >= self.order.len()
    }

    pub fn current(&self) -> Option<&str> {
        self.order.get(self.cursor).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Judgment {
    Same,
    Different,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub session_id: Uuid,
    pub participant: String,
    pub item_id: String,
    pub case_id: u8,
    pub alpha: f64,
    pub answer: Judgment,
    pub latency_ms: u64,
    pub timestamp_ms: u64,
}

impl JudgmentRecord {
    /// The stimulus differs from the classic configuration exactly when alpha != 0.
    pub fn is_correct(&self) -> bool {
        (self.answer == Judgment::Different) == (self.alpha != 0.0)
    }
}

/// Client-facing trial. Carries presentation fields only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Trial {
    Trial {
        session_id: Uuid,
        /// 1-based.
        trial_index: usize,
        total: usize,
        item_id: String,
        image_url: String,
        question: String,
    },
    Done {
        session_id: Uuid,
        total: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub item_id: String,
    pub answer: Judgment,
    #[serde(default)]
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    /// False when the item had already been judged in this session.
    pub recorded: bool,
    pub cursor: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExportFilter {
    pub participant: Option<String>,
    pub session: Option<Uuid>,
    pub case: Option<u8>,
}

impl ExportFilter {
    pub fn matches(&self, r: &JudgmentRecord) -> bool {
        self.participant.as_ref().is_none_or(|p| *p == r.participant)
            && self.session.is_none_or(|s| s == r.session_id)
            && self.case.is_none_or(|c| c == r.case_id)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyOptions {
    /// Show the reverse-polarity question instead of the forward one.
    #[serde(default)]
    pub reverse_questions: bool,
}

/// Fraction of correct same/different judgments per signed alpha, ascending.
pub fn detection_rates<'a>(records: impl IntoIterator<Item = &'a JudgmentRecord>) -> Vec<DetectionRate> {
    let mut tally: BTreeMap<i64, (f64, usize, usize)> = BTreeMap::new();
    for r in records {
        // Grid values are exact decimals; bucketing at 1e-9 merges float noise.
        let key = (r.alpha * 1e9).round() as i64;
        let t = tally.entry(key).or_insert((r.alpha + 0.0, 0, 0));
        t.1 += usize::from(r.is_correct());
        t.2 += 1;
    }
    tally
        .into_values()
        .map(|(alpha, correct, n)| DetectionRate {
            alpha,
            rate: correct as f64 / n as f64,
            n,
        })
        .collect()
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Seeded permutation of a slice's item ids.
pub fn trial_order(mut ids: Vec<String>, seed: u64) -> Vec<String> {
    ids.sort();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids
}

pub struct Study {
    items: BTreeMap<String, ManifestItem>,
    dataset_root: PathBuf,
    options: StudyOptions,
    sessions: HashMap<Uuid, StudySession>,
    judgments: Vec<JudgmentRecord>,
    judged: HashSet<(Uuid, String)>,
    journal: Journal,
}

impl Study {
    /// Opens (or creates) the journal, replays it and compacts it.
    pub fn open(
        manifest: &Manifest,
        dataset_root: &Path,
        journal_path: &Path,
        options: StudyOptions,
    ) -> Result<Study, StudyError> {
        let io = |source| StudyError::Io {
            path: journal_path.to_path_buf(),
            source,
        };
        let entries = journal::read_entries(journal_path).map_err(io)?;
        let mut study = Study {
            items: manifest.items.iter().map(|i| (i.item_id.clone(), i.clone())).collect(),
            dataset_root: dataset_root.to_path_buf(),
            options,
            sessions: HashMap::new(),
            judgments: Vec::new(),
            judged: HashSet::new(),
            journal: Journal::open(journal_path).map_err(io)?,
        };
        for entry in entries {
            match entry {
                Entry::Session(mut s) => {
                    s.cursor = 0;
                    study.sessions.insert(s.session_id, s);
                }
                Entry::Judgment(r) => {
                    let session = study
                        .sessions
                        .get_mut(&r.session_id)
                        .ok_or_else(|| StudyError::Corrupt(format!("judgment for unknown session {}", r.session_id)))?;
                    if session.current() != Some(r.item_id.as_str()) {
                        return Err(StudyError::Corrupt(format!(
                            "judgment out of order for item {}",
                            r.item_id
                        )));
                    }
                    session.cursor += 1;
                    study.judged.insert((r.session_id, r.item_id.clone()));
                    study.judgments.push(r);
                }
            }
        }
        study.compact()?;
        Ok(study)
    }

    /// Rewrites the journal as sessions (by creation) followed by judgments.
    pub fn compact(&mut self) -> Result<(), StudyError> {
        let mut sessions: Vec<&StudySession> = self.sessions.values().collect();
        sessions.sort_by(|a, b| (a.created_ms, a.session_id).cmp(&(b.created_ms, b.session_id)));
        let entries: Vec<Entry> = sessions
            .into_iter()
            .map(|s| Entry::Session(s.clone()))
            .chain(self.judgments.iter().map(|j| Entry::Judgment(j.clone())))
            .collect();
        let path = self.journal.path().to_path_buf();
        self.journal
            .rewrite(&entries)
            .map_err(|source| StudyError::Io { path, source })
    }

    fn append(&mut self, entry: &Entry) -> Result<(), StudyError> {
        let path = self.journal.path().to_path_buf();
        self.journal
            .append(entry)
            .map_err(|source| StudyError::Io { path, source })
    }

    pub fn create_session(
        &mut self,
        participant: &str,
        slice: SliceSpec,
        seed: u64,
    ) -> Result<&StudySession, StudyError> {
        if let Some(bad) = slice.items.iter().find(|id| !self.items.contains_key(*id)) {
            return Err(StudyError::InvalidSlice(format!("unknown item {bad}")));
        }
        let ids = slice.select(self.items.values());
        if ids.is_empty() {
            return Err(StudyError::EmptySlice);
        }
        let session = StudySession {
            session_id: Uuid::new_v4(),
            participant: participant.to_string(),
            order: trial_order(ids, seed),
            slice,
            seed,
            cursor: 0,
            created_ms: now_ms(),
        };
        self.append(&Entry::Session(session.clone()))?;
        let id = session.session_id;
        Ok(self.sessions.entry(id).or_insert(session))
    }

    pub fn session(&self, id: Uuid) -> Result<&StudySession, StudyError> {
        self.sessions.get(&id).ok_or(StudyError::UnknownSession(id))
    }

    /// The trial at the cursor, without advancing.
    pub fn next_trial(&self, id: Uuid) -> Result<Trial, StudyError> {
        let s = self.session(id)?;
        let total = s.order.len();
        let Some(item_id) = s.current() else {
            return Ok(Trial::Done { session_id: id, total });
        };
        let item = &self.items[item_id];
        let question = if self.options.reverse_questions {
            &item.question_reverse
        } else {
            &item.question_forward
        };
        Ok(Trial::Trial {
            session_id: id,
            trial_index: s.cursor + 1,
            total,
            item_id: item_id.to_string(),
            image_url: format!("/stimuli/{item_id}.png"),
            question: question.clone(),
        })
    }

    /// Records a judgment for the current trial. Repeats are acknowledged
    /// without a new record; the first answer stands.
    pub fn submit(&mut self, id: Uuid, sub: Submission) -> Result<Ack, StudyError> {
        let s = self.session(id)?;
        let total = s.order.len();
        if self.judged.contains(&(id, sub.item_id.clone())) {
            return Ok(Ack {
                recorded: false,
                cursor: s.cursor,
                total,
            });
        }
        if s.current() != Some(sub.item_id.as_str()) {
            return Err(StudyError::OutOfOrder {
                expected: s.current().map(str::to_string),
                got: sub.item_id,
            });
        }
        let item = &self.items[&sub.item_id];
        let record = JudgmentRecord {
            session_id: id,
            participant: s.participant.clone(),
            item_id: sub.item_id.clone(),
            case_id: item.case_id,
            alpha: item.alpha,
            answer: sub.answer,
            latency_ms: sub.latency_ms,
            timestamp_ms: now_ms(),
        };
        self.append(&Entry::Judgment(record.clone()))?;
        self.judged.insert((id, sub.item_id));
        self.judgments.push(record);
        let s = self.sessions.get_mut(&id).expect("session checked above");
        s.cursor += 1;
        Ok(Ack {
            recorded: true,
            cursor: s.cursor,
            total,
        })
    }

    pub fn judgments(&self) -> &[JudgmentRecord] {
        &self.judgments
    }

    pub fn export(&self, filter: &ExportFilter) -> Vec<DetectionRate> {
        detection_rates(self.judgments.iter().filter(|r| filter.matches(r)))
    }

    pub fn stimulus_path(&self, item_id: &str) -> Result<PathBuf, StudyError> {
        let item = self
            .items
            .get(item_id)
            .ok_or_else(|| StudyError::UnknownItem(item_id.to_string()))?;
        Ok(self.dataset_root.join(&item.image_path))
    }
}
