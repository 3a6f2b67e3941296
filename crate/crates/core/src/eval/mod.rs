//! Exact-match and match-to-parametric metrics, and top-k reports over a set
//! of ground-truth annotations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::frontend::{GroundTruthRecord, SlotKind};
use crate::solver::{FunctionResult, SlotResult};
use crate::types::{parse_type_lenient, PyType};

pub const DEFAULT_KS: [usize; 3] = [1, 3, 5];
pub const DEFAULT_RARE_THRESHOLD: f64 = 0.001;

/// Structural equality after normalization.
pub fn exact_match(pred: &PyType, truth: &PyType) -> bool {
    pred.clone().normalized() == truth.clone().normalized()
}

/// Equality after erasing every type parameter. Union members are erased
/// one by one, so `Optional[List[int]]` still differs from `List[str]`.
pub fn match_to_parametric(pred: &PyType, truth: &PyType) -> bool {
    pred.clone().normalized().erased().normalized() == truth.clone().normalized().erased().normalized()
}

/// Prediction key of a slot: `function:kind:name`, with an empty name for
/// returns.
pub fn slot_key(function: &str, kind: SlotKind, name: &str) -> String {
    let name = if kind == SlotKind::Return { "" } else { name };
    format!("{function}:{}:{name}", kind.as_str())
}

pub fn record_key(r: &GroundTruthRecord) -> String {
    slot_key(&r.function, r.kind, &r.name)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Cell {
    pub count: usize,
    /// Fraction of hits per k.
    pub exact: BTreeMap<usize, f64>,
    pub parametric: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Report {
    pub ks: Vec<usize>,
    pub rare_threshold: f64,
    /// Keyed by `all`, a slot kind, or a bucket (`common`, `rare`, `user`).
    pub rows: BTreeMap<String, Cell>,
    /// Truth slots with no prediction; counted as misses.
    pub missing: Vec<String>,
    /// Predictions with no matching truth; ignored.
    pub unmatched: Vec<String>,
}

impl Report {
    pub fn row(&self, name: &str) -> Option<&Cell> {
        self.rows.get(name)
    }

    /// Aligned plain-text table, one line per row.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<10} {:>7}", "slots", "count");
        for k in &self.ks {
            let _ = write!(out, " {:>8} {:>8}", format!("em@{k}"), format!("mp@{k}"));
        }
        out.push('\n');
        let order = ["all", "argument", "return", "local", "common", "rare", "user"];
        for name in order {
            let Some(c) = self.rows.get(name) else { continue };
            let _ = write!(out, "{name:<10} {:>7}", c.count);
            for k in &self.ks {
                let _ = write!(
                    out,
                    " {:>8.4} {:>8.4}",
                    c.exact.get(k).copied().unwrap_or(0.0),
                    c.parametric.get(k).copied().unwrap_or(0.0)
                );
            }
            out.push('\n');
        }
        if !self.missing.is_empty() {
            let _ = writeln!(out, "{} slots had no prediction", self.missing.len());
        }
        out
    }
}

fn is_user_type(t: &PyType, users: &BTreeSet<String>) -> bool {
    t.members().iter().any(|m| match m {
        PyType::UserDefined(u) => {
            users.contains(&u.name) || users.iter().any(|n| n.rsplit('.').next() == Some(u.name.as_str()))
        }
        _ => false,
    })
}

/// Top-k metrics of `preds` (ranked candidate strings per slot key) against
/// `truths`. A type is rare when its share of the annotations is below
/// `rare_threshold`; it is user-defined when its outermost name is in `users`.
pub fn evaluate(
    preds: &BTreeMap<String, Vec<String>>,
    truths: &[GroundTruthRecord],
    ks: &[usize],
    rare_threshold: f64,
    users: &BTreeSet<String>,
) -> Report {
    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let parsed: Vec<PyType> = truths
        .iter()
        .map(|r| parse_type_lenient(&r.annotation).normalized())
        .collect();
    let mut freq: BTreeMap<&PyType, usize> = BTreeMap::new();
    for t in &parsed {
        *freq.entry(t).or_insert(0) += 1;
    }
    let total = truths.len().max(1) as f64;

    // Per row: record count, exact hits per k, parametric hits per k.
    type Hits = (usize, BTreeMap<usize, usize>, BTreeMap<usize, usize>);
    let mut hits: BTreeMap<String, Hits> = BTreeMap::new();
    let mut missing = BTreeSet::new();
    for (r, truth) in truths.iter().zip(&parsed) {
        let key = record_key(r);
        let cands: Vec<PyType> = match preds.get(&key) {
            Some(c) => c.iter().map(|s| parse_type_lenient(s)).collect(),
            None => {
                missing.insert(key);
                Vec::new()
            }
        };
        let rare = (freq[truth] as f64 / total) < rare_threshold;
        let mut rows = vec!["all", r.kind.as_str(), if rare { "rare" } else { "common" }];
        if is_user_type(truth, users) {
            rows.push("user");
        }
        let first_exact = cands.iter().position(|p| exact_match(p, truth));
        let first_param = cands.iter().position(|p| match_to_parametric(p, truth));
        for row in rows {
            let e = hits.entry(row.to_string()).or_default();
            e.0 += 1;
            for &k in &ks {
                *e.1.entry(k).or_insert(0) += usize::from(first_exact.is_some_and(|i| i < k));
                *e.2.entry(k).or_insert(0) += usize::from(first_param.is_some_and(|i| i < k));
            }
        }
    }
    let truth_keys: BTreeSet<String> = truths.iter().map(record_key).collect();
    let unmatched = preds.keys().filter(|k| !truth_keys.contains(*k)).cloned().collect();
    let rows = hits
        .into_iter()
        .map(|(name, (count, ex, pm))| {
            let frac = |m: BTreeMap<usize, usize>| m.into_iter().map(|(k, h)| (k, h as f64 / count as f64)).collect();
            (
                name,
                Cell {
                    count,
                    exact: frac(ex),
                    parametric: frac(pm),
                },
            )
        })
        .collect();
    Report {
        ks,
        rare_threshold,
        rows,
        missing: missing.into_iter().collect(),
        unmatched,
    }
}

/// Ranked candidates for one solved slot: the whole surviving set first,
/// then its members one by one.
pub fn ranked_candidates(slot: &SlotResult) -> Vec<String> {
    let Some(types) = &slot.types else { return Vec::new() };
    let mut out: Vec<String> = slot.rendered().into_iter().collect();
    if types.len() > 1 {
        out.extend(types.iter().map(|t| t.to_string()));
    }
    out
}

/// Predictions keyed like `record_key` for the slots named by `truths`. A
/// local annotation maps to the write of that variable on its line, else to
/// its first write, else to its first occurrence.
pub fn predictions_for(
    results: &BTreeMap<String, FunctionResult>,
    truths: &[GroundTruthRecord],
) -> BTreeMap<String, Vec<String>> {
    let mut out = BTreeMap::new();
    for r in truths {
        let Some(f) = results.get(&r.function) else { continue };
        let slot = match r.kind {
            SlotKind::Argument => f.slots.iter().find(|s| s.kind == SlotKind::Argument && s.name == r.name),
            SlotKind::Return => f.slots.iter().find(|s| s.kind == SlotKind::Return),
            SlotKind::Local => {
                let locals: Vec<&SlotResult> =
                    f.slots.iter().filter(|s| s.kind == SlotKind::Local && s.name == r.name).collect();
                locals
                    .iter()
                    .find(|s| s.is_write && s.line == r.line)
                    .or_else(|| locals.iter().find(|s| s.is_write))
                    .or_else(|| locals.first())
                    .copied()
            }
        };
        if let Some(s) = slot {
            out.entry(record_key(r)).or_insert_with(|| ranked_candidates(s));
        }
    }
    out
}
