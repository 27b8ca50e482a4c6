//! Text classification over mean word embeddings, for measuring what an
//! embedding space contributes when part of its vocabulary is dropped and
//! later backfilled.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::embed::EmbeddingSpace;
use crate::error::{LexError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledCorpus {
    pub documents: Vec<Vec<String>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl LabeledCorpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vocabulary(&self) -> HashSet<String> {
        self.documents.iter().flatten().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    /// num_classes x d.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        ClassifierOptions {
            epochs: 200,
            learning_rate: 0.5,
            l2: 1e-4,
            seed: 42,
        }
    }
}

/// Loads `label<TAB>token token ...` lines; labels are non-negative class
/// ids, `num_classes` = max id + 1.
pub fn load_labeled_corpus(path: impl AsRef<Path>) -> Result<LabeledCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LexError::io(path, e))?;
    read_labeled_corpus(BufReader::new(file), path)
}

pub fn read_labeled_corpus(reader: impl BufRead, path: &Path) -> Result<LabeledCorpus> {
    let mut corpus = LabeledCorpus::default();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| LexError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line
            .split_once('\t')
            .ok_or_else(|| LexError::parse(path, lineno, "expected label<TAB>tokens"))?;
        let label: usize = label
            .trim()
            .parse()
            .map_err(|_| LexError::parse(path, lineno, format!("bad class id `{label}`")))?;
        corpus
            .documents
            .push(text.split_whitespace().map(str::to_owned).collect());
        corpus.labels.push(label);
        corpus.num_classes = corpus.num_classes.max(label + 1);
    }
    Ok(corpus)
}

/// Removes a uniformly random `floor(fraction * |shared|)` of the dataset's
/// in-space words, where shared = dataset_vocab intersect space vocab.
/// Returns the reduced space and the removed words (sorted).
pub fn drop_vocab_fraction(
    space: &EmbeddingSpace,
    dataset_vocab: &HashSet<String>,
    fraction: f64,
    seed: u64,
) -> Result<(EmbeddingSpace, Vec<String>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(LexError::InvalidInput(format!(
            "drop fraction must be in [0, 1], got {fraction}"
        )));
    }
    let mut shared: Vec<&str> = dataset_vocab
        .iter()
        .map(String::as_str)
        .filter(|w| space.contains(w))
        .collect();
    shared.sort_unstable();
    let n_drop = (fraction * shared.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, shared.len(), n_drop);
    let removed: HashSet<&str> = chosen.iter().map(|i| shared[i]).collect();

    let mut out = EmbeddingSpace::new(space.dim());
    for (token, row) in space.iter() {
        if !removed.contains(token) {
            out.push(token, row)?;
        }
    }
    let mut removed: Vec<String> = removed.into_iter().map(str::to_owned).collect();
    removed.sort_unstable();
    Ok((out, removed))
}

/// Mean of the vectors of in-vocabulary tokens; the zero vector when none.
pub fn featurize_document(doc: &[String], space: &EmbeddingSpace) -> Vec<f64> {
    let mut acc = vec![0.0; space.dim()];
    let mut n = 0usize;
    for token in doc {
        if let Some(row) = space.get(token) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
            n += 1;
        }
    }
    if n > 0 {
        for a in acc.iter_mut() {
            *a /= n as f64;
        }
    }
    acc
}

fn featurize_all(corpus: &LabeledCorpus, space: &EmbeddingSpace) -> DMatrix<f64> {
    let mut feats = DMatrix::zeros(corpus.len(), space.dim());
    for (i, doc) in corpus.documents.iter().enumerate() {
        let f = featurize_document(doc, space);
        for (j, v) in f.iter().enumerate() {
            feats[(i, j)] = *v;
        }
    }
    feats
}

/// Full-batch multinomial logistic regression on softmax cross-entropy with
/// an L2 penalty on the weights. Weights start at small seeded values, so
/// training is deterministic per seed. Returns the model and the per-epoch
/// mean loss.
pub fn train_linear_classifier(
    corpus: &LabeledCorpus,
    space: &EmbeddingSpace,
    opts: &ClassifierOptions,
) -> Result<(LinearClassifier, Vec<f64>)> {
    if corpus.is_empty() {
        return Err(LexError::InvalidInput("empty training corpus".into()));
    }
    let c = corpus.num_classes;
    let mut present = vec![false; c];
    for &l in &corpus.labels {
        present[l] = true;
    }
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(LexError::InvalidInput(format!(
            "class {missing} has no training examples"
        )));
    }

    let feats = featurize_all(corpus, space);
    let n = corpus.len();
    let d = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut weights = DMatrix::from_fn(c, d, |_, _| rng.random_range(-1e-3..1e-3));
    let mut bias = DVector::zeros(c);
    let mut losses = Vec::with_capacity(opts.epochs);

    for _ in 0..opts.epochs {
        let mut grad_w = DMatrix::zeros(c, d);
        let mut grad_b = DVector::zeros(c);
        let mut loss = 0.0;
        for i in 0..n {
            let x = feats.row(i).transpose();
            let mut logits = &weights * &x + &bias;
            let max = logits.max();
            for z in logits.iter_mut() {
                *z = (*z - max).exp();
            }
            let sum: f64 = logits.iter().sum();
            let gold = corpus.labels[i];
            loss += -(logits[gold] / sum).ln();
            for k in 0..c {
                let p = logits[k] / sum - if k == gold { 1.0 } else { 0.0 };
                grad_b[k] += p;
                for j in 0..d {
                    grad_w[(k, j)] += p * x[j];
                }
            }
        }
        let scale = 1.0 / n as f64;
        grad_w = grad_w * scale + &weights * opts.l2;
        grad_b *= scale;
        weights -= grad_w * opts.learning_rate;
        bias -= grad_b * opts.learning_rate;
        losses.push(loss * scale + 0.5 * opts.l2 * weights.norm_squared());
    }
    Ok((LinearClassifier { weights, bias }, losses))
}

impl LinearClassifier {
    /// Argmax class; ties resolve to the lowest class id.
    pub fn predict(&self, features: &[f64]) -> usize {
        let x = DVector::from_column_slice(features);
        let logits = &self.weights * x + &self.bias;
        let mut best = 0;
        for k in 1..logits.len() {
            if logits[k] > logits[best] {
                best = k;
            }
        }
        best
    }
}

/// Fraction of documents whose predicted class matches the label.
pub fn evaluate_classifier(
    model: &LinearClassifier,
    corpus: &LabeledCorpus,
    space: &EmbeddingSpace,
) -> Result<f64> {
    if corpus.is_empty() {
        return Err(LexError::InvalidInput("empty evaluation corpus".into()));
    }
    let mut correct = 0usize;
    for (doc, &label) in corpus.documents.iter().zip(&corpus.labels) {
        if model.predict(&featurize_document(doc, space)) == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / corpus.len() as f64)
}

/// Deterministic shuffled split; `test_fraction` of documents go to the
/// second corpus.
pub fn split_corpus(
    corpus: &LabeledCorpus,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledCorpus, LabeledCorpus)> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(LexError::InvalidInput(format!(
            "test fraction must be in [0, 1], got {test_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_test = (test_fraction * corpus.len() as f64).floor() as usize;
    let pick = |idxs: &[usize]| LabeledCorpus {
        documents: idxs.iter().map(|&i| corpus.documents[i].clone()).collect(),
        labels: idxs.iter().map(|&i| corpus.labels[i]).collect(),
        num_classes: corpus.num_classes,
    };
    Ok((pick(&order[n_test..]), pick(&order[..n_test])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn read(text: &str) -> Result<LabeledCorpus> {
        read_labeled_corpus(text.as_bytes(), &PathBuf::from("mem"))
    }

    fn blob_setup(n_per_class: usize, noise: f64, seed: u64) -> (LabeledCorpus, EmbeddingSpace) {
        // One token per document; token vectors form two blobs around
        // (+1, 0) and (-1, 0).
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut space = EmbeddingSpace::new(2);
        let mut corpus = LabeledCorpus {
            num_classes: 2,
            ..LabeledCorpus::default()
        };
        for i in 0..(2 * n_per_class) {
            let class = i % 2;
            let center = if class == 0 { 1.0 } else { -1.0 };
            let v = [
                center + rng.random_range(-noise..noise),
                rng.random_range(-noise..noise),
            ];
            let token = format!("t{i}");
            space.push(&token, &v).unwrap();
            corpus.documents.push(vec![token]);
            corpus.labels.push(class);
        }
        (corpus, space)
    }

    #[test]
    fn loads_labeled_lines() {
        let c = read("0\tgood fine nice\n1\tbad awful\n0\tok\n").unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.num_classes, 2);
        assert_eq!(c.documents[1], vec!["bad", "awful"]);
        assert_eq!(c.labels, vec![0, 1, 0]);
    }

    #[test]
    fn loader_errors() {
        assert!(read("no tab\n").is_err());
        assert!(read("x\ttokens\n").is_err());
        match read("0\tok\nbroken line\n").unwrap_err() {
            LexError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn drop_zero_is_identity() {
        let (_, space) = blob_setup(10, 0.1, 1);
        let vocab: HashSet<String> = space.tokens().iter().cloned().collect();
        let (dropped, removed) = drop_vocab_fraction(&space, &vocab, 0.0, 5).unwrap();
        assert_eq!(dropped, space);
        assert!(removed.is_empty());
    }

    #[test]
    fn drop_one_removes_all_dataset_words_only() {
        let (_, mut space) = blob_setup(5, 0.1, 2);
        space.push("unrelated", &[9.0, 9.0]).unwrap();
        let vocab: HashSet<String> = (0..10).map(|i| format!("t{i}")).collect();
        let (dropped, removed) = drop_vocab_fraction(&space, &vocab, 1.0, 5).unwrap();
        assert_eq!(removed.len(), 10);
        assert_eq!(dropped.len(), 1);
        assert!(dropped.contains("unrelated"));
    }

    #[test]
    fn drop_fraction_exact_count_and_deterministic() {
        let mut space = EmbeddingSpace::new(1);
        let mut vocab = HashSet::new();
        for i in 0..100 {
            let w = format!("w{i:02}");
            space.push(&w, &[i as f64]).unwrap();
            vocab.insert(w);
        }
        let (_, removed1) = drop_vocab_fraction(&space, &vocab, 0.2, 9).unwrap();
        assert_eq!(removed1.len(), 20);
        let (_, removed2) = drop_vocab_fraction(&space, &vocab, 0.2, 9).unwrap();
        assert_eq!(removed1, removed2);
        let (_, removed3) = drop_vocab_fraction(&space, &vocab, 0.2, 10).unwrap();
        assert_ne!(removed1, removed3);
        assert!(drop_vocab_fraction(&space, &vocab, 1.5, 1).is_err());
    }

    #[test]
    fn featurize_examples() {
        let mut space = EmbeddingSpace::new(2);
        space.push("a", &[1.0, 0.0]).unwrap();
        space.push("b", &[0.0, 1.0]).unwrap();
        let one = featurize_document(&["a".to_owned()], &space);
        assert_eq!(one, vec![1.0, 0.0]);
        let none = featurize_document(&["zz".to_owned(), "yy".to_owned()], &space);
        assert_eq!(none, vec![0.0, 0.0]);
        let two = featurize_document(&["a".to_owned(), "b".to_owned()], &space);
        assert_eq!(two, vec![0.5, 0.5]);
        let mixed = featurize_document(&["a".to_owned(), "zz".to_owned()], &space);
        assert_eq!(mixed, vec![1.0, 0.0]);
    }

    #[test]
    fn separable_blobs_reach_high_training_accuracy() {
        let (corpus, space) = blob_setup(100, 0.3, 3);
        let (model, _) =
            train_linear_classifier(&corpus, &space, &ClassifierOptions::default()).unwrap();
        let acc = evaluate_classifier(&model, &corpus, &space).unwrap();
        assert!(acc >= 0.99, "training accuracy {acc}");
    }

    #[test]
    fn zero_epochs_is_chance_level_on_balanced_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut space = EmbeddingSpace::new(4);
        let mut corpus = LabeledCorpus {
            num_classes: 4,
            ..LabeledCorpus::default()
        };
        for i in 0..400 {
            let token = format!("t{i}");
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            space.push(&token, &v).unwrap();
            corpus.documents.push(vec![token]);
            corpus.labels.push(i % 4);
        }
        let opts = ClassifierOptions {
            epochs: 0,
            ..ClassifierOptions::default()
        };
        let (model, losses) = train_linear_classifier(&corpus, &space, &opts).unwrap();
        assert!(losses.is_empty());
        let acc = evaluate_classifier(&model, &corpus, &space).unwrap();
        assert!((0.10..=0.45).contains(&acc), "chance-level accuracy {acc}");
    }

    #[test]
    fn loss_non_increasing_over_first_ten_epochs() {
        let (corpus, space) = blob_setup(50, 0.4, 5);
        let opts = ClassifierOptions {
            epochs: 10,
            learning_rate: 0.05,
            ..ClassifierOptions::default()
        };
        let (_, losses) = train_linear_classifier(&corpus, &space, &opts).unwrap();
        assert_eq!(losses.len(), 10);
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "losses {losses:?}");
        }
    }

    #[test]
    fn training_deterministic_per_seed() {
        let (corpus, space) = blob_setup(30, 0.3, 6);
        let opts = ClassifierOptions::default();
        let (m1, l1) = train_linear_classifier(&corpus, &space, &opts).unwrap();
        let (m2, l2) = train_linear_classifier(&corpus, &space, &opts).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(l1, l2);
    }

    #[test]
    fn missing_class_rejected() {
        let (mut corpus, space) = blob_setup(5, 0.2, 7);
        corpus.num_classes = 3;
        assert!(train_linear_classifier(&corpus, &space, &ClassifierOptions::default()).is_err());
    }

    #[test]
    fn gold_model_scores_one_and_permutation_is_worse() {
        let (corpus, space) = blob_setup(40, 0.2, 8);
        // Hand-built separator: class 0 iff x > 0.
        let model = LinearClassifier {
            weights: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]),
            bias: DVector::zeros(2),
        };
        let gold = evaluate_classifier(&model, &corpus, &space).unwrap();
        assert_eq!(gold, 1.0);

        let mut permuted = corpus.clone();
        for l in permuted.labels.iter_mut() {
            *l = 1 - *l;
        }
        let bad = evaluate_classifier(&model, &permuted, &space).unwrap();
        assert!(bad <= gold);
        assert_eq!(bad, 0.0);
    }

    #[test]
    fn random_labels_score_near_chance_on_average() {
        let (corpus, space) = blob_setup(100, 0.2, 9);
        let model = LinearClassifier {
            weights: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]),
            bias: DVector::zeros(2),
        };
        let mut acc_sum = 0.0;
        let runs = 30;
        for s in 0..runs {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut shuffled = corpus.clone();
            for l in shuffled.labels.iter_mut() {
                *l = rng.random_range(0..2);
            }
            acc_sum += evaluate_classifier(&model, &shuffled, &space).unwrap();
        }
        let mean = acc_sum / runs as f64;
        assert!((mean - 0.5).abs() < 0.06, "mean accuracy {mean}");
    }

    #[test]
    fn ties_predict_lowest_class() {
        let model = LinearClassifier {
            weights: DMatrix::zeros(3, 2),
            bias: DVector::zeros(3),
        };
        assert_eq!(model.predict(&[1.0, 1.0]), 0);
    }

    #[test]
    fn split_is_deterministic_disjoint_and_complete() {
        let (corpus, _) = blob_setup(50, 0.2, 10);
        let (train1, test1) = split_corpus(&corpus, 0.2, 11).unwrap();
        let (train2, test2) = split_corpus(&corpus, 0.2, 11).unwrap();
        assert_eq!(train1, train2);
        assert_eq!(test1, test2);
        assert_eq!(test1.len(), 20);
        assert_eq!(train1.len() + test1.len(), corpus.len());
        let mut all: Vec<String> = train1
            .documents
            .iter()
            .chain(&test1.documents)
            .map(|d| d[0].clone())
            .collect();
        all.sort();
        let mut orig: Vec<String> = corpus.documents.iter().map(|d| d[0].clone()).collect();
        orig.sort();
        assert_eq!(all, orig);
        assert!(evaluate_classifier(
            &LinearClassifier {
                weights: DMatrix::zeros(2, 2),
                bias: DVector::zeros(2)
            },
            &LabeledCorpus::default(),
            &EmbeddingSpace::new(2)
        )
        .is_err());
    }
}
