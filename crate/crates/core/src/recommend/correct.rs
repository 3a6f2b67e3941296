//! Subtoken similarity and correction of recommended user-defined types.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use super::RecommendError;
use crate::types::{parse_type_lenient, PyType};

/// Ordered byte-pair merges, highest priority first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BpeMerges {
    ranks: HashMap<(String, String), usize>,
    vocab: BTreeSet<String>,
}

impl BpeMerges {
    /// One merge per line, `left right`; `#` starts a comment.
    pub fn parse(text: &str) -> BpeMerges {
        let mut m = BpeMerges::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or_default().trim();
            let mut parts = line.split_whitespace();
            if let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) {
                let rank = m.ranks.len();
                m.ranks.entry((a.to_lowercase(), b.to_lowercase())).or_insert(rank);
                m.vocab.insert(format!("{a}{b}").to_lowercase());
            }
        }
        m
    }

    pub fn load(path: &Path) -> Result<BpeMerges, RecommendError> {
        let text = std::fs::read_to_string(path).map_err(|e| RecommendError::Io(path.display().to_string(), e.to_string()))?;
        Ok(BpeMerges::parse(&text))
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    fn segment(&self, token: &str) -> Vec<String> {
        if self.vocab.contains(token) {
            return vec![token.to_string()];
        }
        let mut parts: Vec<String> = token.chars().map(String::from).collect();
        loop {
            let best = parts
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| self.ranks.get(&(w[0].clone(), w[1].clone())).map(|r| (*r, i)))
                .min();
            let Some((_, i)) = best else { break };
            let merged = format!("{}{}", parts[i], parts[i + 1]);
            parts.splice(i..i + 2, [merged]);
        }
        parts
    }
}

/// Splits an identifier on underscores, digits-to-letter changes and camel
/// case, lowercasing each piece. `HTTPRequest` gives `[http, request]`.
pub fn subtokenize(ident: &str, bpe: Option<&BpeMerges>) -> Vec<String> {
    let mut out = Vec::new();
    for word in ident.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (p, c) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            let boundary = (p.is_lowercase() && c.is_uppercase())
                || (p.is_uppercase() && c.is_uppercase() && next_lower)
                || (p.is_ascii_digit() && c.is_alphabetic());
            if boundary {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        out.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    if out.is_empty() {
        out.push(ident.to_lowercase());
    }
    match bpe {
        Some(b) if !b.is_empty() => out.iter().flat_map(|t| b.segment(t)).collect(),
        _ => out,
    }
}

/// Similarity of two subtoken lists, in `[0, 1]`.
pub trait Embedding: Send + Sync {
    fn similarity(&self, a: &[String], b: &[String]) -> f64;
}

/// Embedding defined for every token: each token is its bag of character
/// trigrams (with word-boundary markers), normalized; a list is the mean.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalEmbedding;

type Sparse = BTreeMap<String, f64>;

fn trigrams(token: &str) -> Sparse {
    let padded: Vec<char> = format!("<{token}>").chars().collect();
    let mut v = Sparse::new();
    for w in padded.windows(3) {
        *v.entry(w.iter().collect()).or_insert(0.0) += 1.0;
    }
    normalize_sparse(&mut v);
    v
}

fn normalize_sparse(v: &mut Sparse) {
    let n = v.values().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.values_mut().for_each(|x| *x /= n);
    }
}

fn mean_sparse(tokens: &[String]) -> Sparse {
    let mut acc = Sparse::new();
    for t in tokens {
        for (k, x) in trigrams(t) {
            *acc.entry(k).or_insert(0.0) += x;
        }
    }
    let n = tokens.len().max(1) as f64;
    acc.values_mut().for_each(|x| *x /= n);
    acc
}

fn cosine_sparse(a: &Sparse, b: &Sparse) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

impl Embedding for LexicalEmbedding {
    fn similarity(&self, a: &[String], b: &[String]) -> f64 {
        if a == b && !a.is_empty() {
            return 1.0;
        }
        cosine_sparse(&mean_sparse(a), &mean_sparse(b))
    }
}

/// Dense vectors read from a text file: a `count dim` header, then one
/// `token x1 ... xdim` line per token. Lists with no known token fall back
/// to the lexical embedding.
#[derive(Debug, Clone, Default)]
pub struct VectorEmbedding {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f32>>,
}

impl VectorEmbedding {
    pub fn parse(text: &str) -> Result<VectorEmbedding, RecommendError> {
        let bad = |line: usize, m: &str| RecommendError::Format(format!("embedding line {line}: {m}"));
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
        let mut h = header.split_whitespace();
        let count: usize = h.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad(1, "bad header"))?;
        let dim: usize = h.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad(1, "bad header"))?;
        let mut vectors = HashMap::with_capacity(count);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let tok = parts.next().unwrap_or_default().to_string();
            let v: Vec<f32> = parts
                .map(|x| x.parse::<f32>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(i + 1, "bad number"))?;
            if v.len() != dim {
                return Err(bad(i + 1, "wrong dimension"));
            }
            vectors.insert(tok, v);
        }
        Ok(VectorEmbedding { dim, vectors })
    }

    pub fn load(path: &Path) -> Result<VectorEmbedding, RecommendError> {
        let text = std::fs::read_to_string(path).map_err(|e| RecommendError::Io(path.display().to_string(), e.to_string()))?;
        VectorEmbedding::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut keys: Vec<&String> = self.vectors.keys().collect();
        keys.sort();
        let mut out = format!("{} {}\n", keys.len(), self.dim);
        for k in keys {
            out.push_str(k);
            for x in &self.vectors[k] {
                out.push_str(&format!(" {x:.6}"));
            }
            out.push('\n');
        }
        out
    }

    fn mean(&self, tokens: &[String]) -> Option<Vec<f64>> {
        let mut acc = vec![0.0f64; self.dim];
        let mut n = 0;
        for t in tokens {
            if let Some(v) = self.vectors.get(t) {
                let norm = v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += f64::from(*x) / norm;
                }
                n += 1;
            }
        }
        (n > 0).then(|| acc.into_iter().map(|x| x / n as f64).collect())
    }
}

impl Embedding for VectorEmbedding {
    fn similarity(&self, a: &[String], b: &[String]) -> f64 {
        if a == b && !a.is_empty() {
            return 1.0;
        }
        match (self.mean(a), self.mean(b)) {
            (Some(x), Some(y)) => {
                let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
                let nx = x.iter().map(|p| p * p).sum::<f64>().sqrt();
                let ny = y.iter().map(|q| q * q).sum::<f64>().sqrt();
                if nx == 0.0 || ny == 0.0 {
                    0.0
                } else {
                    (dot / (nx * ny)).clamp(0.0, 1.0)
                }
            }
            _ => LexicalEmbedding.similarity(a, b),
        }
    }
}

const BUILTIN_NAMES: &[&str] = &[
    "int", "float", "str", "bool", "bytes", "None", "NoneType", "type", "list", "tuple", "dict", "set",
    "List", "Tuple", "Dict", "Set", "Callable", "Generator", "Union", "Optional",
];

/// True for names of the type grammar that are not user-defined.
pub fn is_builtin(t: &str) -> bool {
    BUILTIN_NAMES.contains(&t)
}

/// Maps a recommended type name onto the closest valid user-defined type.
///
/// Follows the published procedure step by step, including its quirk: after
/// a penalized name comparison wins, the unpenalized similarity becomes the
/// bar for later candidates, so the result depends on the order of `valid`.
pub fn correct_type(name: &str, valid: &[String], t: &str, penalty: f64, emb: &dyn Embedding, bpe: Option<&BpeMerges>) -> String {
    if valid.iter().any(|v| v == t) || is_builtin(t) {
        return t.to_string();
    }
    let mut largest_sim = 0.0;
    let mut largest_type: Option<&String> = None;
    let tw = subtokenize(t, bpe);
    let namew = subtokenize(name, bpe);
    for pt in valid {
        let ptw = subtokenize(pt, bpe);
        let s_t = emb.similarity(&ptw, &tw);
        if s_t > largest_sim {
            largest_sim = s_t;
            largest_type = Some(pt);
        }
        let s_n = emb.similarity(&ptw, &namew);
        if s_n + penalty > largest_sim {
            largest_sim = s_n;
            largest_type = Some(pt);
        }
    }
    largest_type.cloned().unwrap_or_else(|| t.to_string())
}

/// Corrects every user-defined name inside a recommended type.
pub struct TypeCorrector<'a> {
    pub valid: Vec<String>,
    pub penalty: f64,
    pub embedding: &'a dyn Embedding,
    pub bpe: Option<&'a BpeMerges>,
}

impl TypeCorrector<'_> {
    pub fn correct(&self, name: &str, t: &str) -> PyType {
        let parsed = parse_type_lenient(t);
        if self.valid.is_empty() {
            return parsed;
        }
        self.correct_leaves(name, parsed)
    }

    fn correct_leaves(&self, name: &str, t: PyType) -> PyType {
        match t {
            PyType::UserDefined(u) => {
                let c = correct_type(name, &self.valid, &u.name, self.penalty, self.embedding, self.bpe);
                if c == u.name {
                    PyType::UserDefined(u)
                } else {
                    PyType::user(c)
                }
            }
            PyType::Generic(c, ps) => {
                PyType::Generic(c, ps.into_iter().map(|p| self.correct_leaves(name, p)).collect()).normalized()
            }
            PyType::ArgList(ps) => PyType::ArgList(ps.into_iter().map(|p| self.correct_leaves(name, p)).collect()),
            other => other,
        }
    }
}
