//! Word-similarity evaluation (Pearson, Spearman with average ranks,
//! coverage) and the simulated-rarity corpus transformer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{LexError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarityDataset {
    pub pairs: Vec<(String, String, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct EvalResult {
    pub pearson: f64,
    pub spearman: f64,
    pub covered: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RarityConfig {
    /// Each target word keeps at most this many surface occurrences.
    pub threshold: u64,
    pub targets: BTreeSet<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct WordDownsample {
    pub total: u64,
    pub kept: u64,
    pub replaced: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct DownsampleReport {
    pub tokens_read: u64,
    pub tokens_written: u64,
    pub per_word: BTreeMap<String, WordDownsample>,
}

/// Loads `word1<TAB>word2<TAB>score` rows; commas also accepted as the
/// separator. A header row is detected by a non-numeric third field.
pub fn load_similarity_dataset(path: impl AsRef<Path>, lowercase: bool) -> Result<SimilarityDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LexError::io(path, e))?;
    read_similarity_dataset(BufReader::new(file), path, lowercase)
}

pub fn read_similarity_dataset(
    reader: impl BufRead,
    path: &Path,
    lowercase: bool,
) -> Result<SimilarityDataset> {
    let mut pairs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| LexError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').map(str::trim).collect()
        } else if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() != 3 {
            return Err(LexError::parse(
                path,
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let score: f64 = match fields[2].parse() {
            Ok(s) => s,
            Err(_) if lineno == 1 => continue,
            Err(_) => {
                return Err(LexError::parse(
                    path,
                    lineno,
                    format!("bad score `{}`", fields[2]),
                ))
            }
        };
        if score.is_nan() {
            return Err(LexError::parse(path, lineno, "NaN score"));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(LexError::parse(path, lineno, "empty word field"));
        }
        let norm = |w: &str| if lowercase { w.to_lowercase() } else { w.to_owned() };
        pairs.push((norm(fields[0]), norm(fields[1]), score));
    }
    Ok(SimilarityDataset { pairs })
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(LexError::DimensionMismatch(format!(
            "pearson over lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(LexError::InvalidInput(
            "pearson needs at least 2 observations".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(LexError::Numeric(
            "pearson undefined for zero-variance input".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Ranks with ties receiving the average of the positions they occupy
/// (1-based fractional ranks).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average-tied ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(LexError::DimensionMismatch(format!(
            "spearman over lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(LexError::InvalidInput(
            "spearman needs at least 2 observations".into(),
        ));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry).map_err(|e| match e {
        LexError::Numeric(_) => LexError::Numeric(
            "spearman undefined: an input has all-equal values".into(),
        ),
        other => other,
    })
}

/// Scores every dataset pair with `sim`; pairs it cannot score are skipped
/// and counted. Correlations are over covered pairs only.
pub fn evaluate_similarity<F>(mut sim: F, dataset: &SimilarityDataset) -> Result<EvalResult>
where
    F: FnMut(&str, &str) -> Option<f64>,
{
    let mut gold = Vec::new();
    let mut predicted = Vec::new();
    for (w1, w2, score) in &dataset.pairs {
        if let Some(s) = sim(w1, w2) {
            gold.push(*score);
            predicted.push(s);
        }
    }
    if gold.len() < 2 {
        return Err(LexError::InvalidInput(format!(
            "fewer than 2 covered pairs ({} of {})",
            gold.len(),
            dataset.pairs.len()
        )));
    }
    Ok(EvalResult {
        pearson: pearson(&predicted, &gold)?,
        spearman: spearman(&predicted, &gold)?,
        covered: gold.len(),
        total: dataset.pairs.len(),
    })
}

/// Cosine similarity function over a space, for `evaluate_similarity`.
pub fn space_similarity(
    space: &crate::embed::EmbeddingSpace,
) -> impl FnMut(&str, &str) -> Option<f64> + '_ {
    |w1, w2| {
        let a = space.get(w1)?;
        let b = space.get(w2)?;
        crate::embed::cosine(a, b).ok()
    }
}

/// MaxSim similarity function over a synset space and sense map.
pub fn maxsim_similarity_fn<'a>(
    kb_space: &'a crate::embed::EmbeddingSpace,
    sense_map: &'a crate::senses::SenseMap,
) -> impl FnMut(&str, &str) -> Option<f64> + 'a {
    |w1, w2| crate::senses::maxsim_similarity(kb_space, sense_map, w1, w2).ok()
}

/// Rewrites a corpus so every target word keeps at most `threshold` surface
/// occurrences; the rest become `word + "\u{0001}rare"`. Two passes: count,
/// then rewrite with a per-word seeded choice of kept occurrences. Token
/// count and positions are preserved.
pub fn downsample_corpus(
    input: impl AsRef<Path>,
    cfg: &RarityConfig,
    output: impl AsRef<Path>,
) -> Result<DownsampleReport> {
    let input = input.as_ref();
    let output = output.as_ref();

    let mut counts: HashMap<&str, u64> = HashMap::new();
    {
        let file = File::open(input).map_err(|e| LexError::io(input, e))?;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| LexError::io(input, e))?;
            for token in line.split_whitespace() {
                if let Some(w) = cfg.targets.get(token) {
                    *counts.entry(w.as_str()).or_default() += 1;
                }
            }
        }
    }

    let mut keep_sets: HashMap<&str, HashSet<u64>> = HashMap::new();
    let mut report = DownsampleReport::default();
    for word in &cfg.targets {
        let total = counts.get(word.as_str()).copied().unwrap_or(0);
        let kept = total.min(cfg.threshold);
        report.per_word.insert(
            word.clone(),
            WordDownsample {
                total,
                kept,
                replaced: total - kept,
            },
        );
        if total > cfg.threshold {
            let mut rng = ChaCha8Rng::seed_from_u64(word_seed(cfg.seed, word));
            let chosen = rand::seq::index::sample(&mut rng, total as usize, kept as usize);
            keep_sets.insert(word.as_str(), chosen.iter().map(|i| i as u64).collect());
        }
    }

    let file = File::open(input).map_err(|e| LexError::io(input, e))?;
    let out_file = File::create(output).map_err(|e| LexError::io(output, e))?;
    let mut w = BufWriter::new(out_file);
    let mut seen: HashMap<&str, u64> = HashMap::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| LexError::io(input, e))?;
        let mut first = true;
        for token in line.split_whitespace() {
            report.tokens_read += 1;
            let replace = match cfg.targets.get(token) {
                Some(word) => {
                    let total = counts.get(word.as_str()).copied().unwrap_or(0);
                    if total <= cfg.threshold {
                        false
                    } else {
                        let idx = seen.entry(word.as_str()).or_default();
                        let keep = keep_sets
                            .get(word.as_str())
                            .map(|s| s.contains(idx))
                            .unwrap_or(false);
                        *idx += 1;
                        !keep
                    }
                }
                None => false,
            };
            if !first {
                write!(&mut w, " ").map_err(|e| LexError::io(output, e))?;
            }
            if replace {
                write!(&mut w, "{token}\u{1}rare").map_err(|e| LexError::io(output, e))?;
            } else {
                write!(&mut w, "{token}").map_err(|e| LexError::io(output, e))?;
            }
            report.tokens_written += 1;
            first = false;
        }
        writeln!(&mut w).map_err(|e| LexError::io(output, e))?;
    }
    w.flush().map_err(|e| LexError::io(output, e))?;
    Ok(report)
}

fn word_seed(seed: u64, word: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in word.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingSpace;
    use proptest::prelude::*;
    use rand::Rng;
    use std::path::PathBuf;

    fn read_ds(text: &str, lowercase: bool) -> Result<SimilarityDataset> {
        read_similarity_dataset(text.as_bytes(), &PathBuf::from("mem"), lowercase)
    }

    #[test]
    fn loads_tsv_row() {
        let ds = read_ds("car\tauto\t3.9\n", true).unwrap();
        assert_eq!(ds.pairs, vec![("car".to_owned(), "auto".to_owned(), 3.9)]);
    }

    #[test]
    fn loads_csv_and_skips_header() {
        let ds = read_ds("w1,w2,score\ncar,auto,3.9\nsea,ocean,7.2\n", true).unwrap();
        assert_eq!(ds.pairs.len(), 2);
        assert_eq!(ds.pairs[1].2, 7.2);
    }

    #[test]
    fn lowercase_flag() {
        let ds = read_ds("Car\tAuto\t1.0\n", true).unwrap();
        assert_eq!(ds.pairs[0].0, "car");
        let ds = read_ds("Car\tAuto\t1.0\n", false).unwrap();
        assert_eq!(ds.pairs[0].0, "Car");
    }

    #[test]
    fn empty_file_empty_dataset() {
        assert!(read_ds("", true).unwrap().pairs.is_empty());
    }

    #[test]
    fn malformed_rows_error_with_line() {
        match read_ds("a\tb\t1.0\na\tb\n", true).unwrap_err() {
            LexError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_ds("a\tb\t1.0\nc\td\tzebra\n", true).is_err());
        assert!(read_ds("a\tb\tNaN\nc\td\t1\n", true).is_err());
    }

    #[test]
    fn pearson_known_values() {
        let xs = [1.0, 2.0, 3.0];
        assert!((pearson(&xs, &[3.0, 5.0, 7.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&xs, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-12);
        // By the covariance definition: r = 5*sqrt(3/19)/2.
        let r = pearson(&xs, &[2.0, 4.0, 7.0]).unwrap();
        assert!((r - 2.5 * (3.0f64 / 19.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_monotone_and_reversed() {
        let xs = [0.1, 0.7, 1.3, 2.9];
        let ys: Vec<f64> = xs.iter().map(|x| f64::exp(*x)).collect();
        assert!((spearman(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = ys.iter().map(|y| -y).collect();
        assert!((spearman(&xs, &rev).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_tie_example() {
        // y-ranks (1.5, 1.5, 3, 4); Pearson over ranks gives sqrt(0.9).
        let rho = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 3.0, 4.0]).unwrap();
        assert!((rho - 0.9f64.sqrt()).abs() < 1e-12, "rho {rho}");
    }

    #[test]
    fn spearman_all_equal_errors() {
        assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn average_ranks_handle_ties() {
        assert_eq!(average_ranks(&[1.0, 1.0, 3.0, 4.0]), vec![1.5, 1.5, 3.0, 4.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(average_ranks(&[2.0, 1.0]), vec![2.0, 1.0]);
    }

    #[test]
    fn evaluate_self_consistency() {
        let mut space = EmbeddingSpace::new(2);
        space.push("a", &[1.0, 0.0]).unwrap();
        space.push("b", &[1.0, 0.2]).unwrap();
        space.push("c", &[0.0, 1.0]).unwrap();
        space.push("d", &[-0.5, 1.0]).unwrap();
        let words = ["a", "b", "c", "d"];
        let mut pairs = Vec::new();
        for i in 0..words.len() {
            for j in (i + 1)..words.len() {
                let s = crate::embed::cosine(
                    space.get(words[i]).unwrap(),
                    space.get(words[j]).unwrap(),
                )
                .unwrap();
                pairs.push((words[i].to_owned(), words[j].to_owned(), s));
            }
        }
        let ds = SimilarityDataset { pairs };
        let res = evaluate_similarity(space_similarity(&space), &ds).unwrap();
        assert!((res.pearson - 1.0).abs() < 1e-12);
        assert!((res.spearman - 1.0).abs() < 1e-12);
        assert_eq!(res.covered, res.total);
    }

    #[test]
    fn evaluate_skips_and_counts_oov() {
        let mut space = EmbeddingSpace::new(2);
        space.push("a", &[1.0, 0.0]).unwrap();
        space.push("b", &[0.9, 0.1]).unwrap();
        space.push("c", &[0.0, 1.0]).unwrap();
        let ds = SimilarityDataset {
            pairs: vec![
                ("a".into(), "b".into(), 1.0),
                ("a".into(), "zzz".into(), 2.0),
                ("b".into(), "c".into(), 3.0),
            ],
        };
        let res = evaluate_similarity(space_similarity(&space), &ds).unwrap();
        assert_eq!(res.covered, 2);
        assert_eq!(res.total, 3);
    }

    #[test]
    fn evaluate_all_oov_errors() {
        let space = EmbeddingSpace::new(2);
        let ds = SimilarityDataset {
            pairs: vec![
                ("a".into(), "b".into(), 1.0),
                ("c".into(), "d".into(), 2.0),
            ],
        };
        assert!(evaluate_similarity(space_similarity(&space), &ds).is_err());
    }

    /// Independent reimplementation: O(n^2) counting ranks, direct-sum
    /// Pearson over f64 accumulators.
    fn oracle_eval(pred: &[f64], gold: &[f64]) -> (f64, f64) {
        fn naive_pearson(a: &[f64], b: &[f64]) -> f64 {
            let n = a.len() as f64;
            let ma: f64 = a.iter().sum::<f64>() / n;
            let mb: f64 = b.iter().sum::<f64>() / n;
            let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
            let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
            let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
            cov / (va.sqrt() * vb.sqrt())
        }
        fn counting_ranks(v: &[f64]) -> Vec<f64> {
            v.iter()
                .map(|&x| {
                    let below = v.iter().filter(|&&y| y < x).count() as f64;
                    let equal = v.iter().filter(|&&y| y == x).count() as f64;
                    below + (equal + 1.0) / 2.0
                })
                .collect()
        }
        (
            naive_pearson(pred, gold),
            naive_pearson(&counting_ranks(pred), &counting_ranks(gold)),
        )
    }

    #[test]
    fn evaluate_matches_bruteforce_oracle() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let n = 50;
            let pred: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let gold: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            let r = pearson(&pred, &gold).unwrap();
            let rho = spearman(&pred, &gold).unwrap();
            let (or_, orho) = oracle_eval(&pred, &gold);
            assert!((r - or_).abs() < 1e-12, "{r} vs {or_}");
            assert!((rho - orho).abs() < 1e-12, "{rho} vs {orho}");
        }
    }

    fn run_downsample(corpus: &str, targets: &[&str], t: u64, seed: u64) -> (String, DownsampleReport) {
        let dir = tempfile::tempdir().unwrap();
        let inp = dir.path().join("in.txt");
        let out = dir.path().join("out.txt");
        std::fs::write(&inp, corpus).unwrap();
        let cfg = RarityConfig {
            threshold: t,
            targets: targets.iter().map(|s| (*s).to_owned()).collect(),
            seed,
        };
        let report = downsample_corpus(&inp, &cfg, &out).unwrap();
        (std::fs::read_to_string(&out).unwrap(), report)
    }

    #[test]
    fn threshold_zero_replaces_everything() {
        let (out, report) = run_downsample("a b a a\n", &["a"], 0, 42);
        assert_eq!(out, "a\u{1}rare b a\u{1}rare a\u{1}rare\n");
        let w = &report.per_word["a"];
        assert_eq!((w.total, w.kept, w.replaced), (3, 0, 3));
    }

    #[test]
    fn threshold_above_count_is_identity() {
        let (out, report) = run_downsample("a b a a\n", &["a"], 5, 42);
        assert_eq!(out, "a b a a\n");
        assert_eq!(report.per_word["a"].replaced, 0);
    }

    #[test]
    fn exact_counts_and_determinism() {
        let corpus = "x ".repeat(100) + "\n";
        let (out1, report) = run_downsample(&corpus, &["x"], 20, 7);
        let kept = out1.split_whitespace().filter(|t| *t == "x").count();
        let replaced = out1
            .split_whitespace()
            .filter(|t| *t == "x\u{1}rare")
            .count();
        assert_eq!(kept, 20);
        assert_eq!(replaced, 80);
        assert_eq!(report.per_word["x"].kept, 20);
        let (out2, _) = run_downsample(&corpus, &["x"], 20, 7);
        assert_eq!(out1, out2);
        let (out3, _) = run_downsample(&corpus, &["x"], 20, 8);
        assert_ne!(out1, out3);
    }

    #[test]
    fn token_count_and_positions_preserved() {
        let corpus = "p q r\nq q p\n";
        let (out, report) = run_downsample(corpus, &["q"], 1, 3);
        assert_eq!(report.tokens_read, 6);
        assert_eq!(report.tokens_written, 6);
        let orig: Vec<&str> = corpus.split_whitespace().collect();
        let new: Vec<&str> = out.split_whitespace().collect();
        assert_eq!(orig.len(), new.len());
        for (o, n) in orig.iter().zip(&new) {
            if *o == "q" {
                assert!(*n == "q" || *n == "q\u{1}rare");
            } else {
                assert_eq!(o, n);
            }
        }
        let kept_q = new.iter().filter(|t| **t == "q").count();
        assert_eq!(kept_q, 1);
    }

    #[test]
    fn non_target_words_untouched() {
        let (out, _) = run_downsample("m n m n m\n", &["zzz"], 0, 1);
        assert_eq!(out, "m n m n m\n");
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_monotone_maps(
            pairs in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..30)
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assume!(spearman(&xs, &ys).is_ok());
            let base = spearman(&xs, &ys).unwrap();
            let maps: [fn(f64) -> f64; 3] = [
                |v| (v / 10.0).exp(),
                |v| 3.0 * v + 11.0,
                |v| v.powi(3),
            ];
            for f in maps {
                let mapped: Vec<f64> = ys.iter().map(|&v| f(v)).collect();
                let got = spearman(&xs, &mapped).unwrap();
                prop_assert!((got - base).abs() < 1e-9, "{} vs {}", got, base);
            }
        }

        #[test]
        fn pearson_invariant_under_positive_affine_maps(
            pairs in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..30),
            a in 0.001f64..100.0,
            b in -100.0f64..100.0,
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assume!(pearson(&xs, &ys).is_ok());
            let base = pearson(&xs, &ys).unwrap();
            let mapped: Vec<f64> = ys.iter().map(|&v| a * v + b).collect();
            let got = pearson(&xs, &mapped).unwrap();
            prop_assert!((got - base).abs() < 1e-12);
        }
    }
}
