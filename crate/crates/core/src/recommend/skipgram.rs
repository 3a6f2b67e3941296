//! A small skip-gram trainer with negative sampling, for embedding the
//! subtokens of identifiers.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{subtokenize, VectorEmbedding};
use crate::frontend::lexer::{tokenize, Tok};

#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f32,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 256,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 1,
            seed: 0,
        }
    }
}

/// Subtokens of every identifier in `source`, in order. Files that do not
/// tokenize contribute nothing.
pub fn identifier_tokens(source: &str) -> Vec<String> {
    let Ok(tokens) = tokenize(source) else {
        return Vec::new();
    };
    tokens
        .into_iter()
        .filter_map(|t| match t.tok {
            Tok::Name(n) => Some(n),
            _ => None,
        })
        .flat_map(|n| subtokenize(&n, None))
        .collect()
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x.clamp(-30.0, 30.0)).exp())
}

/// Trains one vector per token of `corpus` (a list of token sequences).
/// Deterministic for a given seed.
pub fn train(corpus: &[Vec<String>], cfg: &SkipGramConfig) -> VectorEmbedding {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for seq in corpus {
        for t in seq {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<&str> = counts
        .iter()
        .filter(|(_, c)| **c >= cfg.min_count)
        .map(|(t, _)| *t)
        .collect();
    vocab.sort_unstable();
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let n = vocab.len();
    let dim = cfg.dim;
    if n == 0 {
        return VectorEmbedding {
            dim,
            vectors: HashMap::new(),
        };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut input: Vec<f32> = (0..n * dim).map(|_| (rng.gen::<f32>() - 0.5) / dim as f32).collect();
    let mut output = vec![0.0f32; n * dim];
    let noise = WeightedIndex::new(vocab.iter().map(|t| (counts[t] as f64).powf(0.75))).expect("non-empty vocabulary");

    let seqs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
        .collect();
    let total_steps = (cfg.epochs * seqs.iter().map(Vec::len).sum::<usize>()).max(1);
    let mut step = 0usize;
    let mut grad = vec![0.0f32; dim];

    for _ in 0..cfg.epochs {
        for seq in &seqs {
            for (pos, &center) in seq.iter().enumerate() {
                let lr = (cfg.learning_rate * (1.0 - step as f32 / total_steps as f32)).max(cfg.learning_rate * 1e-4);
                step += 1;
                let reach = rng.gen_range(1..=cfg.window.max(1));
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach + 1).min(seq.len());
                for (ctx_pos, &context) in seq.iter().enumerate().take(hi).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let v = center * dim;
                    for d in 0..=cfg.negatives {
                        let (target, label) = if d == 0 {
                            (context, 1.0)
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let u = target * dim;
                        let dot: f32 = (0..dim).map(|i| input[v + i] * output[u + i]).sum();
                        let g = (label - sigmoid(dot)) * lr;
                        for i in 0..dim {
                            grad[i] += g * output[u + i];
                            output[u + i] += g * input[v + i];
                        }
                    }
                    for i in 0..dim {
                        input[v + i] += grad[i];
                    }
                }
            }
        }
    }

    let vectors = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.to_string(), input[i * dim..(i + 1) * dim].to_vec()))
        .collect();
    VectorEmbedding { dim, vectors }
}
