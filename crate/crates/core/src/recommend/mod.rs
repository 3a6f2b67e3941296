//! Recommenders for hot slots and the correction of their answers.

mod correct;
mod frequency;
mod sidecar;
pub mod skipgram;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::frontend::SlotKind;

pub use correct::{
    correct_type, is_builtin, subtokenize, BpeMerges, Embedding, LexicalEmbedding, TypeCorrector, VectorEmbedding,
};
pub use frequency::{naive_recommend, FrequencyTable, NaiveMode, NaiveRecommender, TOP_TYPES};
pub use sidecar::{SidecarRecommender, DEFAULT_TIMEOUT};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecommendError {
    #[error("cannot read {0}: {1}")]
    Io(String, String),
    #[error("{0}")]
    Format(String),
    #[error("sidecar unavailable: {0}")]
    SidecarUnavailable(String),
    #[error("sidecar protocol error: {0}")]
    ProtocolError(String),
}

/// One hot slot to recommend for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRequest {
    /// Source file, used only by backends keyed per file.
    #[serde(skip)]
    pub file: String,
    pub function: String,
    pub kind: SlotKind,
    pub name: String,
    pub k: usize,
    /// Identifiers around the slot: the function name and its variables.
    pub context: Vec<String>,
}

impl SlotRequest {
    /// `function:kind:name`, the key of the predictions file.
    pub fn slot_key(&self) -> String {
        format!("{}:{}:{}", self.function, self.kind.as_str(), self.name)
    }
}

/// Ranked candidates for one slot, best first, at most `k` of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub slot: String,
    pub candidates: Vec<(String, f64)>,
}

impl Recommendation {
    pub fn empty(slot: impl Into<String>) -> Recommendation {
        Recommendation {
            slot: slot.into(),
            candidates: Vec::new(),
        }
    }
}

/// A source of type recommendations. The answer is aligned with `reqs`; a
/// backend that cannot answer a slot returns an empty candidate list for it.
pub trait Recommender: Send + Sync {
    fn recommend_batch(&self, reqs: &[SlotRequest]) -> Vec<Recommendation>;
}

/// Recommends nothing; inference stays purely static.
pub struct NullRecommender;

impl Recommender for NullRecommender {
    fn recommend_batch(&self, reqs: &[SlotRequest]) -> Vec<Recommendation> {
        reqs.iter().map(|r| Recommendation::empty(r.slot_key())).collect()
    }
}

/// Answers from a predictions document: a JSON map from
/// `function:kind:name` to a ranked list of type strings. `kind` may be
/// `arg` or `argument`; return keys may omit the name. A key may carry a
/// `file::` prefix to target one source file, which wins over the bare key.
pub struct FileRecommender {
    predictions: BTreeMap<String, Vec<String>>,
}

impl FileRecommender {
    pub fn new(predictions: BTreeMap<String, Vec<String>>) -> FileRecommender {
        FileRecommender { predictions }
    }

    pub fn parse(text: &str) -> Result<FileRecommender, RecommendError> {
        let predictions: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| RecommendError::Format(format!("predictions: {e}")))?;
        Ok(FileRecommender::new(predictions))
    }

    pub fn load(path: &Path) -> Result<FileRecommender, RecommendError> {
        let text = std::fs::read_to_string(path).map_err(|e| RecommendError::Io(path.display().to_string(), e.to_string()))?;
        FileRecommender::parse(&text)
    }

    fn keys(r: &SlotRequest) -> Vec<String> {
        let f = &r.function;
        let bare = match r.kind {
            SlotKind::Argument => vec![format!("{f}:arg:{}", r.name), format!("{f}:argument:{}", r.name)],
            SlotKind::Return => vec![format!("{f}:return:"), format!("{f}:return"), format!("{f}:return:{}", r.name)],
            SlotKind::Local => vec![format!("{f}:local:{}", r.name)],
        };
        let mut keys: Vec<String> = bare.iter().map(|k| format!("{}::{k}", r.file)).collect();
        keys.extend(bare);
        keys
    }
}

impl Recommender for FileRecommender {
    fn recommend_batch(&self, reqs: &[SlotRequest]) -> Vec<Recommendation> {
        reqs.iter()
            .map(|r| {
                let hit = FileRecommender::keys(r).into_iter().find_map(|k| self.predictions.get(&k));
                let candidates = hit
                    .map(|ts| {
                        let n = ts.len().min(r.k);
                        ts.iter()
                            .take(n)
                            .enumerate()
                            .map(|(i, t)| (t.clone(), 1.0 - i as f64 / n.max(1) as f64))
                            .collect()
                    })
                    .unwrap_or_default();
                Recommendation {
                    slot: r.slot_key(),
                    candidates,
                }
            })
            .collect()
    }
}
