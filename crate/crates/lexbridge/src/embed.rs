//! Dense embedding spaces over string tokens, with the word2vec text format.
//!
//! A space is an ordered vocabulary plus one f64 row per token. Row order is
//! insertion order and is preserved by save/load, so runs with equal inputs
//! produce byte-identical files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{LexError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingSpace {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

/// What the text-format loader saw besides the vectors it kept.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct LoadReport {
    pub rows_kept: usize,
    pub duplicates_skipped: usize,
    pub had_header: bool,
}

impl EmbeddingSpace {
    pub fn new(dim: usize) -> Self {
        EmbeddingSpace {
            dim,
            tokens: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, row: usize) -> &str {
        &self.tokens[row]
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn row_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.row_of(token).map(|r| self.row(r))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), self.row(i)))
    }

    /// Appends a token with its vector. Tokens must be unique, non-empty,
    /// whitespace-free (the text format is whitespace-delimited) and every
    /// component must be finite.
    pub fn push(&mut self, token: &str, vector: &[f64]) -> Result<()> {
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(LexError::InvalidInput(format!(
                "token {token:?} is empty or contains whitespace"
            )));
        }
        if vector.len() != self.dim {
            return Err(LexError::DimensionMismatch(format!(
                "vector for `{token}` has {} components, space has dim {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(LexError::Numeric(format!(
                "vector for `{token}` has a non-finite component"
            )));
        }
        if self.index.contains_key(token) {
            return Err(LexError::InvalidInput(format!(
                "duplicate token `{token}`"
            )));
        }
        self.index.insert(token.to_owned(), self.tokens.len());
        self.tokens.push(token.to_owned());
        self.data.extend_from_slice(vector);
        Ok(())
    }

    /// Replaces the vector of an existing token.
    pub fn set(&mut self, token: &str, vector: &[f64]) -> Result<()> {
        let row = self
            .row_of(token)
            .ok_or_else(|| LexError::UnknownToken(token.to_owned()))?;
        if vector.len() != self.dim {
            return Err(LexError::DimensionMismatch(format!(
                "vector for `{token}` has {} components, space has dim {}",
                vector.len(),
                self.dim
            )));
        }
        self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(vector);
        Ok(())
    }

    /// Loads the word2vec text format: an optional `count dim` header line,
    /// then one `token v1 .. vdim` line per row. Duplicate tokens keep the
    /// first occurrence.
    pub fn load_text(path: impl AsRef<Path>) -> Result<(Self, LoadReport)> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| LexError::io(path, e))?;
        Self::read_text(BufReader::new(file), path)
    }

    pub fn read_text(reader: impl BufRead, path: &Path) -> Result<(Self, LoadReport)> {
        let mut report = LoadReport::default();
        let mut space: Option<EmbeddingSpace> = None;
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| LexError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if space.is_none() && lineno == 1 && fields.len() == 2 {
                if let (Ok(_n), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    report.had_header = true;
                    space = Some(EmbeddingSpace::new(d));
                    continue;
                }
            }
            if fields.len() < 2 {
                return Err(LexError::parse(
                    path,
                    lineno,
                    "expected a token followed by at least one component",
                ));
            }
            let token = fields[0];
            let mut vector = Vec::with_capacity(fields.len() - 1);
            for f in &fields[1..] {
                let v: f64 = f.parse().map_err(|_| {
                    LexError::parse(path, lineno, format!("bad float `{f}`"))
                })?;
                vector.push(v);
            }
            let space = space.get_or_insert_with(|| EmbeddingSpace::new(vector.len()));
            if vector.len() != space.dim {
                return Err(LexError::parse(
                    path,
                    lineno,
                    format!(
                        "row has {} components, expected {}",
                        vector.len(),
                        space.dim
                    ),
                ));
            }
            if space.contains(token) {
                report.duplicates_skipped += 1;
                continue;
            }
            space.push(token, &vector)?;
            report.rows_kept += 1;
        }
        let space = space.ok_or_else(|| {
            LexError::parse(path, 0, "empty embedding file and no header to fix dim")
        })?;
        Ok((space, report))
    }

    /// Saves in the text format with a `count dim` header and six decimal
    /// places per component.
    pub fn save_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| LexError::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_text(&mut w).map_err(|e| LexError::io(path, e))
    }

    pub fn write_text(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (token, row) in self.iter() {
            write!(w, "{token}")?;
            for v in row {
                write!(w, " {v:.6}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    /// The `k` highest-cosine tokens to `vector`, skipping `exclude` (usually
    /// the query token itself). Ties break by vocabulary order.
    pub fn nearest_to_vector(
        &self,
        vector: &[f64],
        k: usize,
        exclude: Option<&str>,
    ) -> Result<Vec<(String, f64)>> {
        if vector.len() != self.dim {
            return Err(LexError::DimensionMismatch(format!(
                "query has {} components, space has dim {}",
                vector.len(),
                self.dim
            )));
        }
        let mut scored: Vec<(usize, f64)> = Vec::with_capacity(self.len());
        for (i, token) in self.tokens.iter().enumerate() {
            if exclude == Some(token.as_str()) {
                continue;
            }
            scored.push((i, cosine(vector, self.row(i))?));
        }
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(i, c)| (self.tokens[i].clone(), c))
            .collect())
    }

    pub fn nearest_to_token(&self, token: &str, k: usize) -> Result<Vec<(String, f64)>> {
        let row = self
            .get(token)
            .ok_or_else(|| LexError::UnknownToken(token.to_owned()))?
            .to_vec();
        self.nearest_to_vector(&row, k, Some(token))
    }
}

/// Cosine similarity; zero-norm inputs compare as 0 rather than NaN.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(LexError::DimensionMismatch(format!(
            "cosine over lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (nu.sqrt() * nv.sqrt()))
}
