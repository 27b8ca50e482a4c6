//! Word/synset sense inventory, word-level composition of a synset space,
//! and MaxSim similarity.

use indexmap::IndexMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::embed::{cosine, EmbeddingSpace};
use crate::error::{LexError, Result};

/// Word to ordered synset list. A word is monosemous iff its list has
/// exactly one entry. Insertion order is preserved so composed spaces are
/// reproducible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SenseMap {
    map: IndexMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ComposeReport {
    pub words_composed: usize,
    /// Words whose synsets were all missing from the synset space.
    pub words_skipped: usize,
    pub senses_missing: usize,
}

impl SenseMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn senses(&self, word: &str) -> Option<&[String]> {
        self.map.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.map.contains_key(word)
    }

    pub fn is_monosemous(&self, word: &str) -> bool {
        self.senses(word).map(|s| s.len() == 1).unwrap_or(false)
    }

    /// Adds senses for a word, merging with any existing list (deduplicated,
    /// first-seen order).
    pub fn insert(&mut self, word: &str, senses: &[&str]) -> Result<()> {
        if word.is_empty() || senses.is_empty() {
            return Err(LexError::InvalidInput(format!(
                "word {word:?} needs a non-empty sense list"
            )));
        }
        let list = self.map.entry(word.to_owned()).or_default();
        for s in senses {
            if s.is_empty() {
                return Err(LexError::InvalidInput(format!(
                    "empty synset id for `{word}`"
                )));
            }
            if !list.iter().any(|x| x == s) {
                list.push((*s).to_owned());
            }
        }
        Ok(())
    }

    /// Loads lines of `word<TAB>synset1,synset2,...`. Duplicate word lines
    /// merge their lists.
    pub fn load(path: impl AsRef<Path>) -> Result<SenseMap> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| LexError::io(path, e))?;
        Self::read(BufReader::new(file), path)
    }

    pub fn read(reader: impl BufRead, path: &Path) -> Result<SenseMap> {
        let mut map = SenseMap::new();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| LexError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, rest) = line
                .split_once('\t')
                .ok_or_else(|| LexError::parse(path, lineno, "expected word<TAB>synsets"))?;
            let word = word.trim();
            let senses: Vec<&str> = rest
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect();
            if word.is_empty() || senses.is_empty() {
                return Err(LexError::parse(path, lineno, "empty word or synset list"));
            }
            map.insert(word, &senses)
                .map_err(|e| LexError::parse(path, lineno, e.to_string()))?;
        }
        Ok(map)
    }
}

/// Mean of the word's embedded synset vectors. Returns the vector and the
/// number of synsets that had no embedding.
pub fn compose_word_vector(
    kb_space: &EmbeddingSpace,
    sense_map: &SenseMap,
    word: &str,
) -> Result<(Vec<f64>, usize)> {
    let senses = sense_map
        .senses(word)
        .ok_or_else(|| LexError::UnknownToken(word.to_owned()))?;
    let mut acc = vec![0.0; kb_space.dim()];
    let mut used = 0usize;
    let mut skipped = 0usize;
    for synset in senses {
        match kb_space.get(synset) {
            Some(row) => {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
                used += 1;
            }
            None => skipped += 1,
        }
    }
    if used == 0 {
        return Err(LexError::InvalidInput(format!(
            "no synset of `{word}` has a vector"
        )));
    }
    for a in acc.iter_mut() {
        *a /= used as f64;
    }
    Ok((acc, skipped))
}

/// Word-level space over every composable word in the sense map, in map
/// order. Words with no embedded synset are skipped and counted.
pub fn compose_word_space(
    kb_space: &EmbeddingSpace,
    sense_map: &SenseMap,
) -> Result<(EmbeddingSpace, ComposeReport)> {
    let mut space = EmbeddingSpace::new(kb_space.dim());
    let mut report = ComposeReport::default();
    for word in sense_map.words() {
        match compose_word_vector(kb_space, sense_map, word) {
            Ok((vector, skipped)) => {
                space.push(word, &vector)?;
                report.words_composed += 1;
                report.senses_missing += skipped;
            }
            Err(LexError::InvalidInput(_)) => report.words_skipped += 1,
            Err(other) => return Err(other),
        }
    }
    Ok((space, report))
}

/// Max cosine over the cross product of the two words' embedded senses.
pub fn maxsim_similarity(
    kb_space: &EmbeddingSpace,
    sense_map: &SenseMap,
    w1: &str,
    w2: &str,
) -> Result<f64> {
    let rows = |w: &str| -> Result<Vec<&[f64]>> {
        let senses = sense_map
            .senses(w)
            .ok_or_else(|| LexError::UnknownToken(w.to_owned()))?;
        let rows: Vec<&[f64]> = senses.iter().filter_map(|s| kb_space.get(s)).collect();
        if rows.is_empty() {
            return Err(LexError::InvalidInput(format!(
                "no synset of `{w}` has a vector"
            )));
        }
        Ok(rows)
    };
    let r1 = rows(w1)?;
    let r2 = rows(w2)?;
    let mut best = f64::NEG_INFINITY;
    for a in &r1 {
        for b in &r2 {
            best = best.max(cosine(a, b)?);
        }
    }
    Ok(best)
}
