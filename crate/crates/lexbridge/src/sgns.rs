//! Skip-gram with negative sampling over sentence corpora.
//!
//! Loss per (center, context, negatives) triple is
//! `-log sigmoid(u.v) - sum_n log sigmoid(-u.v_n)` with `u` the input vector
//! of the center token and `v`, `v_n` output vectors. `sgns_loss_and_grad`
//! exposes that loss functionally; the trainer applies exactly those
//! gradients in place, so the two stay checkable against each other.
//!
//! With `threads = 1` training is fully deterministic for a given seed and
//! corpus. More threads run hogwild updates over shared rows: fast, still
//! seeded per thread, but not bit-reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::embed::EmbeddingSpace;
use crate::error::{LexError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsConfig {
    pub dim: usize,
    /// Maximum one-sided context width; per position the effective width is
    /// drawn uniformly from 1..=window.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Tokens with corpus frequency below this are dropped from the vocabulary.
    pub min_count: u64,
    /// Frequent-token subsampling threshold (word2vec `t`); 0 disables.
    pub subsample: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 100,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 1,
            subsample: 0.0,
            seed: 42,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct TrainReport {
    pub vocab_size: usize,
    pub corpus_tokens: u64,
    pub kept_positions: u64,
    pub pairs_trained: u64,
    /// Mean per-pair loss for each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Gradients of the triple loss with respect to every argument.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// log(1 + e^z) without overflow for large |z|.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Loss and exact gradients for one (center, context, negatives) triple.
pub fn sgns_loss_and_grad(
    center: &[f64],
    context: &[f64],
    negatives: &[Vec<f64>],
) -> Result<(f64, SgnsGradients)> {
    let dim = center.len();
    if context.len() != dim || negatives.iter().any(|n| n.len() != dim) {
        return Err(LexError::DimensionMismatch(
            "center, context and negatives must share a dimension".into(),
        ));
    }
    let pos_dot = dot(center, context);
    let mut loss = softplus(-pos_dot);
    let pos_coef = sigmoid(pos_dot) - 1.0;

    let mut g_center: Vec<f64> = context.iter().map(|v| pos_coef * v).collect();
    let g_context: Vec<f64> = center.iter().map(|u| pos_coef * u).collect();
    let mut g_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let neg_dot = dot(center, neg);
        loss += softplus(neg_dot);
        let coef = sigmoid(neg_dot);
        for (g, n) in g_center.iter_mut().zip(neg) {
            *g += coef * n;
        }
        g_negatives.push(center.iter().map(|u| coef * u).collect());
    }
    Ok((
        loss,
        SgnsGradients {
            center: g_center,
            context: g_context,
            negatives: g_negatives,
        },
    ))
}

struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    /// Cumulative unigram^0.75 mass for negative sampling.
    neg_cum: Vec<f64>,
    total_kept: u64,
}

fn build_vocab(sentences: &[Vec<String>], min_count: u64) -> Result<Vocab> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for sentence in sentences {
        for token in sentence {
            *counts.entry(token).or_default() += 1;
        }
    }
    let floor = min_count.max(1);
    let mut pairs: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= floor)
        .collect();
    if pairs.is_empty() {
        return Err(LexError::InvalidInput(
            "empty vocabulary after min_count filtering".into(),
        ));
    }
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let tokens: Vec<String> = pairs.iter().map(|(t, _)| (*t).to_owned()).collect();
    let vocab_counts: Vec<u64> = pairs.iter().map(|(_, c)| *c).collect();
    let index = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    let mut neg_cum = Vec::with_capacity(vocab_counts.len());
    let mut acc = 0.0;
    for &c in &vocab_counts {
        acc += (c as f64).powf(0.75);
        neg_cum.push(acc);
    }
    let total_kept = vocab_counts.iter().sum();
    Ok(Vocab {
        tokens,
        counts: vocab_counts,
        index,
        neg_cum,
        total_kept,
    })
}

/// Shared f64 matrix stored as atomic bits so hogwild threads can update rows
/// without locks. Relaxed ordering everywhere: lost updates are acceptable.
struct SharedMatrix {
    data: Vec<AtomicU64>,
    dim: usize,
}

impl SharedMatrix {
    fn zeros(rows: usize, dim: usize) -> Self {
        let data = (0..rows * dim)
            .map(|_| AtomicU64::new(0f64.to_bits()))
            .collect();
        SharedMatrix { data, dim }
    }

    fn from_values(values: Vec<f64>, dim: usize) -> Self {
        let data = values.into_iter().map(|v| AtomicU64::new(v.to_bits())).collect();
        SharedMatrix { data, dim }
    }

    fn load_row(&self, row: usize, out: &mut [f64]) {
        let base = row * self.dim;
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = f64::from_bits(self.data[base + j].load(Ordering::Relaxed));
        }
    }

    fn add_to_row(&self, row: usize, delta: &[f64]) {
        let base = row * self.dim;
        for (j, d) in delta.iter().enumerate() {
            let cell = &self.data[base + j];
            let cur = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((cur + d).to_bits(), Ordering::Relaxed);
        }
    }

    fn into_values(self) -> Vec<f64> {
        self.data
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect()
    }
}

fn seeded_init(rows: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows * dim)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect()
}

fn sample_negative(neg_cum: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *neg_cum.last().unwrap();
    let r = rng.random_range(0.0..total);
    neg_cum.partition_point(|&x| x <= r).min(neg_cum.len() - 1)
}

/// One in-place SGD step on a (center, context, negatives) triple. All
/// gradients are evaluated at the pre-update values, matching
/// `sgns_loss_and_grad` exactly. Returns the triple loss before the step.
#[allow(clippy::too_many_arguments)]
fn train_triple(
    input: &SharedMatrix,
    output: &SharedMatrix,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: f64,
    u_buf: &mut [f64],
    v_buf: &mut [f64],
    u_delta: &mut [f64],
) -> f64 {
    input.load_row(center, u_buf);
    u_delta.fill(0.0);

    output.load_row(context, v_buf);
    let pos_dot = dot(u_buf, v_buf);
    let mut loss = softplus(-pos_dot);
    let pos_coef = sigmoid(pos_dot) - 1.0;
    for j in 0..u_buf.len() {
        u_delta[j] += pos_coef * v_buf[j];
        v_buf[j] = -lr * pos_coef * u_buf[j];
    }
    output.add_to_row(context, v_buf);

    for &neg in negatives {
        output.load_row(neg, v_buf);
        let neg_dot = dot(u_buf, v_buf);
        loss += softplus(neg_dot);
        let coef = sigmoid(neg_dot);
        for j in 0..u_buf.len() {
            u_delta[j] += coef * v_buf[j];
            v_buf[j] = -lr * coef * u_buf[j];
        }
        output.add_to_row(neg, v_buf);
    }

    for d in u_delta.iter_mut() {
        *d *= -lr;
    }
    input.add_to_row(center, u_delta);
    loss
}

/// Trains a space over whitespace-tokenized sentences. Returned vectors are
/// the input (center) vectors, vocabulary ordered by descending frequency
/// with ties broken by token.
pub fn train_sgns(
    sentences: &[Vec<String>],
    cfg: &SgnsConfig,
) -> Result<(EmbeddingSpace, TrainReport)> {
    if cfg.dim == 0 {
        return Err(LexError::InvalidInput("dim must be >= 1".into()));
    }
    if cfg.window == 0 {
        return Err(LexError::InvalidInput("window must be >= 1".into()));
    }
    if cfg.learning_rate <= 0.0 || cfg.learning_rate.is_nan() {
        return Err(LexError::InvalidInput("learning_rate must be > 0".into()));
    }
    let vocab = build_vocab(sentences, cfg.min_count)?;

    let indexed: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| {
            s.iter()
                .filter_map(|t| vocab.index.get(t.as_str()).copied())
                .collect()
        })
        .collect();
    let positions_per_epoch: u64 = indexed.iter().map(|s| s.len() as u64).sum();

    let input = SharedMatrix::from_values(
        seeded_init(vocab.tokens.len(), cfg.dim, cfg.seed),
        cfg.dim,
    );
    let output = SharedMatrix::zeros(vocab.tokens.len(), cfg.dim);

    let mut report = TrainReport {
        vocab_size: vocab.tokens.len(),
        corpus_tokens: sentences.iter().map(|s| s.len() as u64).sum(),
        kept_positions: positions_per_epoch,
        ..TrainReport::default()
    };

    let total_positions = (cfg.epochs as u64 * positions_per_epoch).max(1);
    let scanned = AtomicU64::new(0);
    let threads = cfg.threads.max(1);

    for epoch in 0..cfg.epochs {
        let (loss_sum, pairs) = if threads == 1 {
            train_chunk(
                &indexed,
                &vocab,
                &input,
                &output,
                cfg,
                total_positions,
                &scanned,
                epoch_seed(cfg.seed, epoch, 0),
            )
        } else {
            let chunk = indexed.len().div_ceil(threads);
            std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for (t, part) in indexed.chunks(chunk.max(1)).enumerate() {
                    let vocab = &vocab;
                    let input = &input;
                    let output = &output;
                    let scanned = &scanned;
                    handles.push(scope.spawn(move || {
                        train_chunk(
                            part,
                            vocab,
                            input,
                            output,
                            cfg,
                            total_positions,
                            scanned,
                            epoch_seed(cfg.seed, epoch, t as u64 + 1),
                        )
                    }));
                }
                let mut acc = (0.0, 0u64);
                for h in handles {
                    let (l, p) = h.join().expect("sgns worker panicked");
                    acc.0 += l;
                    acc.1 += p;
                }
                acc
            })
        };
        report.pairs_trained += pairs;
        report
            .epoch_losses
            .push(if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 });
    }

    let values = input.into_values();
    let mut space = EmbeddingSpace::new(cfg.dim);
    for (i, token) in vocab.tokens.iter().enumerate() {
        space.push(token, &values[i * cfg.dim..(i + 1) * cfg.dim])?;
    }
    Ok((space, report))
}

fn epoch_seed(seed: u64, epoch: usize, worker: u64) -> u64 {
    let mut z = seed
        ^ (epoch as u64).wrapping_mul(0x9E3779B97F4A7C15)
        ^ worker.wrapping_mul(0xD1B54A32D192ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[allow(clippy::too_many_arguments)]
fn train_chunk(
    sentences: &[Vec<usize>],
    vocab: &Vocab,
    input: &SharedMatrix,
    output: &SharedMatrix,
    cfg: &SgnsConfig,
    total_positions: u64,
    scanned: &AtomicU64,
    seed: u64,
) -> (f64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = cfg.dim;
    let mut u_buf = vec![0.0; dim];
    let mut v_buf = vec![0.0; dim];
    let mut u_delta = vec![0.0; dim];
    let mut kept: Vec<usize> = Vec::new();
    let mut negatives: Vec<usize> = Vec::with_capacity(cfg.negatives);
    let mut loss_sum = 0.0;
    let mut pairs = 0u64;

    for sentence in sentences {
        kept.clear();
        for &w in sentence {
            if cfg.subsample > 0.0 {
                let freq = vocab.counts[w] as f64 / vocab.total_kept as f64;
                let keep = ((freq / cfg.subsample).sqrt() + 1.0) * cfg.subsample / freq;
                if keep < 1.0 && rng.random::<f64>() > keep {
                    continue;
                }
            }
            kept.push(w);
        }
        let done = scanned.fetch_add(kept.len() as u64, Ordering::Relaxed);
        let progress = done as f64 / total_positions as f64;
        let lr = cfg.learning_rate * (1.0 - progress).max(1e-4);

        for i in 0..kept.len() {
            let width = rng.random_range(1..=cfg.window);
            let lo = i.saturating_sub(width);
            let hi = (i + width).min(kept.len() - 1);
            for j in lo..=hi {
                if j == i {
                    continue;
                }
                negatives.clear();
                for _ in 0..cfg.negatives {
                    let neg = sample_negative(&vocab.neg_cum, &mut rng);
                    if neg != kept[j] {
                        negatives.push(neg);
                    }
                }
                loss_sum += train_triple(
                    input,
                    output,
                    kept[i],
                    kept[j],
                    &negatives,
                    lr,
                    &mut u_buf,
                    &mut v_buf,
                    &mut u_delta,
                );
                pairs += 1;
            }
        }
    }
    (loss_sum, pairs)
}

/// Raw token frequencies over a sentence corpus.
pub fn token_counts(sentences: &[Vec<String>]) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for sentence in sentences {
        for token in sentence {
            *counts.entry(token.clone()).or_default() += 1;
        }
    }
    counts
}

/// Reads a corpus file: one whitespace-tokenized sentence per line, blank
/// lines skipped.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LexError::io(path, e))?;
    let mut sentences = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| LexError::io(path, e))?;
        let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    Ok(sentences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::cosine;

    /// a and b share the context word x; c and d share y. Words with the
    /// same contexts should end up with similar input vectors.
    fn pair_corpus() -> Vec<Vec<String>> {
        let mut sentences = Vec::new();
        for i in 0..2000 {
            let (target, context) = match i % 4 {
                0 => ("a", "x"),
                1 => ("b", "x"),
                2 => ("c", "y"),
                _ => ("d", "y"),
            };
            sentences.push(vec![target.to_owned(), context.to_owned()]);
        }
        sentences
    }

    fn small_cfg() -> SgnsConfig {
        SgnsConfig {
            dim: 10,
            window: 2,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.05,
            ..SgnsConfig::default()
        }
    }

    #[test]
    fn loss_at_zero_vectors_is_ln2_per_term() {
        let z = vec![0.0; 4];
        let (loss, _) = sgns_loss_and_grad(&z, &z, std::slice::from_ref(&z)).unwrap();
        assert!((loss - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dim = 6;
        for _ in 0..20 {
            let center: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let context: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let negatives: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let (_, grad) = sgns_loss_and_grad(&center, &context, &negatives).unwrap();
            let h = 1e-5;
            for j in 0..dim {
                let mut cp = center.clone();
                cp[j] += h;
                let (lp, _) = sgns_loss_and_grad(&cp, &context, &negatives).unwrap();
                cp[j] -= 2.0 * h;
                let (lm, _) = sgns_loss_and_grad(&cp, &context, &negatives).unwrap();
                let fd = (lp - lm) / (2.0 * h);
                let denom = fd.abs().max(grad.center[j].abs()).max(1e-8);
                assert!(
                    ((fd - grad.center[j]) / denom).abs() < 1e-4,
                    "center[{j}] fd {fd} vs {}",
                    grad.center[j]
                );
            }
        }
    }

    #[test]
    fn one_step_reduces_triple_loss() {
        let center = vec![0.1, -0.2, 0.3];
        let context = vec![-0.3, 0.1, 0.2];
        let negatives = vec![vec![0.2, 0.2, -0.1], vec![-0.1, 0.4, 0.0]];
        let (l0, g) = sgns_loss_and_grad(&center, &context, &negatives).unwrap();
        let lr = 0.05;
        let step = |x: &[f64], gx: &[f64]| -> Vec<f64> {
            x.iter().zip(gx).map(|(a, b)| a - lr * b).collect()
        };
        let c2 = step(&center, &g.center);
        let ctx2 = step(&context, &g.context);
        let negs2: Vec<Vec<f64>> = negatives
            .iter()
            .zip(&g.negatives)
            .map(|(n, gn)| step(n, gn))
            .collect();
        let (l1, _) = sgns_loss_and_grad(&c2, &ctx2, &negs2).unwrap();
        assert!(l1 < l0);
    }

    #[test]
    fn train_triple_applies_standalone_gradients() {
        let dim = 4;
        let input = SharedMatrix::from_values(
            vec![0.1, -0.2, 0.3, 0.05, 0.4, 0.1, -0.3, 0.2, -0.1, 0.0, 0.2, -0.4],
            dim,
        );
        let output = SharedMatrix::from_values(
            vec![0.2, 0.1, -0.1, 0.3, -0.2, 0.3, 0.1, 0.0, 0.05, -0.05, 0.25, 0.15],
            dim,
        );
        let mut u = vec![0.0; dim];
        let mut v = vec![0.0; dim];
        let mut ctx = vec![0.0; dim];
        let mut neg = vec![0.0; dim];
        input.load_row(0, &mut u);
        output.load_row(1, &mut ctx);
        output.load_row(2, &mut neg);
        let (expected_loss, g) = sgns_loss_and_grad(&u, &ctx, &[neg.clone()]).unwrap();

        let lr = 0.1;
        let mut d = vec![0.0; dim];
        let loss = train_triple(&input, &output, 0, 1, &[2], lr, &mut u, &mut v, &mut d);
        assert!((loss - expected_loss).abs() < 1e-12);

        let mut got = vec![0.0; dim];
        input.load_row(0, &mut got);
        let mut u0 = [0.1, -0.2, 0.3, 0.05];
        for j in 0..dim {
            u0[j] -= lr * g.center[j];
            assert!((got[j] - u0[j]).abs() < 1e-12);
        }
        output.load_row(1, &mut got);
        let mut c0 = [-0.2, 0.3, 0.1, 0.0];
        for j in 0..dim {
            c0[j] -= lr * g.context[j];
            assert!((got[j] - c0[j]).abs() < 1e-12);
        }
        output.load_row(2, &mut got);
        let mut n0 = [0.05, -0.05, 0.25, 0.15];
        for j in 0..dim {
            n0[j] -= lr * g.negatives[0][j];
            assert!((got[j] - n0[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_epochs_returns_seeded_init() {
        let corpus = pair_corpus();
        let cfg = SgnsConfig {
            epochs: 0,
            ..small_cfg()
        };
        let (space, report) = train_sgns(&corpus, &cfg).unwrap();
        assert_eq!(report.pairs_trained, 0);
        let vocab = build_vocab(&corpus, cfg.min_count).unwrap();
        let init = seeded_init(vocab.tokens.len(), cfg.dim, cfg.seed);
        for (i, t) in vocab.tokens.iter().enumerate() {
            assert_eq!(space.get(t).unwrap(), &init[i * cfg.dim..(i + 1) * cfg.dim]);
        }
        let bound = 0.5 / cfg.dim as f64;
        for (_, row) in space.iter() {
            assert!(row.iter().all(|v| v.abs() <= bound));
        }
    }

    #[test]
    fn cooccurring_pairs_end_up_closer() {
        let (space, _) = train_sgns(&pair_corpus(), &small_cfg()).unwrap();
        let a = space.get("a").unwrap();
        let b = space.get("b").unwrap();
        let c = space.get("c").unwrap();
        let d = space.get("d").unwrap();
        assert!(cosine(a, b).unwrap() > cosine(a, c).unwrap());
        assert!(cosine(a, b).unwrap() > cosine(a, d).unwrap());
        assert!(cosine(c, d).unwrap() > cosine(c, b).unwrap());
    }

    #[test]
    fn epoch_losses_non_increasing_single_threaded() {
        let (_, report) = train_sgns(&pair_corpus(), &small_cfg()).unwrap();
        assert_eq!(report.epoch_losses.len(), 5);
        for w in report.epoch_losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "losses {:?}", report.epoch_losses);
        }
    }

    #[test]
    fn same_seed_same_vectors_different_seed_differs() {
        let corpus = pair_corpus();
        let cfg = small_cfg();
        let (s1, _) = train_sgns(&corpus, &cfg).unwrap();
        let (s2, _) = train_sgns(&corpus, &cfg).unwrap();
        assert_eq!(s1, s2);
        let (s3, _) = train_sgns(
            &corpus,
            &SgnsConfig {
                seed: 7,
                ..cfg
            },
        )
        .unwrap();
        assert_ne!(s1, s3);
    }

    #[test]
    fn vocab_order_and_min_count() {
        let corpus = vec![
            vec!["b".to_owned(), "a".to_owned(), "b".to_owned()],
            vec!["a".to_owned(), "c".to_owned(), "b".to_owned()],
        ];
        let vocab = build_vocab(&corpus, 1).unwrap();
        assert_eq!(vocab.tokens, vec!["b", "a", "c"]);
        assert_eq!(vocab.counts, vec![3, 2, 1]);
        let filtered = build_vocab(&corpus, 2).unwrap();
        assert_eq!(filtered.tokens, vec!["b", "a"]);
        assert!(build_vocab(&corpus, 10).is_err());
        assert!(build_vocab(&[], 1).is_err());
    }

    #[test]
    fn ties_in_vocab_break_by_token() {
        let corpus = vec![vec![
            "z".to_owned(),
            "m".to_owned(),
            "a".to_owned(),
        ]];
        let vocab = build_vocab(&corpus, 1).unwrap();
        assert_eq!(vocab.tokens, vec!["a", "m", "z"]);
    }

    #[test]
    fn negative_sampling_tracks_powered_frequencies() {
        use rand::SeedableRng;
        let corpus = vec![vec!["a"; 80], vec!["b"; 16], vec!["c"; 4]]
            .into_iter()
            .map(|s| s.into_iter().map(str::to_owned).collect())
            .collect::<Vec<Vec<String>>>();
        let vocab = build_vocab(&corpus, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = [0usize; 3];
        let draws = 60_000;
        for _ in 0..draws {
            counts[sample_negative(&vocab.neg_cum, &mut rng)] += 1;
        }
        let mass: Vec<f64> = vocab.counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
        let total: f64 = mass.iter().sum();
        for i in 0..3 {
            let expect = mass[i] / total;
            let got = counts[i] as f64 / draws as f64;
            assert!((got - expect).abs() < 0.01, "{i}: {got} vs {expect}");
        }
    }

    #[test]
    fn multithreaded_run_trains_same_vocab() {
        let corpus = pair_corpus();
        let cfg = SgnsConfig {
            threads: 3,
            ..small_cfg()
        };
        let (space, report) = train_sgns(&corpus, &cfg).unwrap();
        assert_eq!(space.len(), 6);
        assert!(report.pairs_trained > 0);
        for (_, row) in space.iter() {
            assert!(row.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn rejects_degenerate_configs() {
        let corpus = pair_corpus();
        for cfg in [
            SgnsConfig { dim: 0, ..SgnsConfig::default() },
            SgnsConfig { window: 0, ..SgnsConfig::default() },
            SgnsConfig { learning_rate: 0.0, ..SgnsConfig::default() },
        ] {
            assert!(train_sgns(&corpus, &cfg).is_err());
        }
    }
}
