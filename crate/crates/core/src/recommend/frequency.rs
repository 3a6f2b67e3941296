//! The frequency baseline: recommend the corpus's most common types.

use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Recommendation, RecommendError, Recommender, SlotRequest};

/// Only this many of the most frequent types are ever recommended.
pub const TOP_TYPES: usize = 10;

/// Type strings with their corpus counts, most frequent first; ties are
/// broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrequencyTable {
    entries: Vec<(String, u64)>,
}

impl FrequencyTable {
    pub fn new(counts: impl IntoIterator<Item = (String, u64)>) -> FrequencyTable {
        let mut merged: BTreeMap<String, u64> = BTreeMap::new();
        for (t, c) in counts {
            if c > 0 {
                *merged.entry(t).or_insert(0) += c;
            }
        }
        let mut entries: Vec<(String, u64)> = merged.into_iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        FrequencyTable { entries }
    }

    /// Counts every string of `annotations`.
    pub fn from_annotations<'a>(annotations: impl IntoIterator<Item = &'a str>) -> FrequencyTable {
        FrequencyTable::new(annotations.into_iter().map(|a| (a.to_string(), 1)))
    }

    /// Either a JSON list of `[type, count]` pairs, or lines `type count`
    /// with the count last (types may contain spaces).
    pub fn parse(text: &str) -> Result<FrequencyTable, RecommendError> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('[') {
            let pairs: Vec<(String, u64)> =
                serde_json::from_str(trimmed).map_err(|e| RecommendError::Format(format!("frequency table: {e}")))?;
            return Ok(FrequencyTable::new(pairs));
        }
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (t, c) = line
                .rsplit_once(|c: char| c.is_whitespace())
                .ok_or_else(|| RecommendError::Format(format!("frequency table line {}: expected `type count`", i + 1)))?;
            let c: u64 = c
                .parse()
                .map_err(|_| RecommendError::Format(format!("frequency table line {}: bad count", i + 1)))?;
            pairs.push((t.trim().to_string(), c));
        }
        Ok(FrequencyTable::new(pairs))
    }

    pub fn load(path: &Path) -> Result<FrequencyTable, RecommendError> {
        let text = std::fs::read_to_string(path).map_err(|e| RecommendError::Io(path.display().to_string(), e.to_string()))?;
        FrequencyTable::parse(&text)
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn top(&self) -> &[(String, u64)] {
        &self.entries[..self.entries.len().min(TOP_TYPES)]
    }
}

/// How the baseline picks among the top types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaiveMode {
    /// The `k` most frequent, scored by their share of the top counts.
    Deterministic,
    /// `k` draws without replacement, weighted by count.
    Sampling { seed: u64 },
}

/// Ranked recommendation for one slot. In sampling mode the generator is
/// seeded from `seed` and the slot key so the result does not depend on the
/// order slots are asked in.
pub fn naive_recommend(slot: &str, k: usize, table: &FrequencyTable, mode: NaiveMode) -> Recommendation {
    let top = table.top();
    let total: u64 = top.iter().map(|(_, c)| c).sum();
    let score = |c: u64| if total == 0 { 0.0 } else { c as f64 / total as f64 };
    let candidates = match mode {
        NaiveMode::Deterministic => top.iter().take(k).map(|(t, c)| (t.clone(), score(*c))).collect(),
        NaiveMode::Sampling { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ slot_hash(slot));
            let mut pool: Vec<&(String, u64)> = top.iter().collect();
            let mut picked = Vec::new();
            while picked.len() < k && !pool.is_empty() {
                let Ok(dist) = WeightedIndex::new(pool.iter().map(|(_, c)| *c)) else { break };
                let (t, c) = pool.remove(dist.sample(&mut rng));
                picked.push((t.clone(), score(*c)));
            }
            picked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            picked
        }
    };
    Recommendation {
        slot: slot.to_string(),
        candidates,
    }
}

fn slot_hash(slot: &str) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    slot.hash(&mut h);
    h.finish()
}

pub struct NaiveRecommender {
    pub table: FrequencyTable,
    pub mode: NaiveMode,
}

impl Recommender for NaiveRecommender {
    fn recommend_batch(&self, reqs: &[SlotRequest]) -> Vec<Recommendation> {
        reqs.iter()
            .map(|r| naive_recommend(&r.slot_key(), r.k, &self.table, self.mode))
            .collect()
    }
}
