//! Cross-space alignment: semantic bridge selection, canonical correlation
//! analysis between the corpus and KB word spaces, a least-squares baseline,
//! and construction of the enhanced space.
//!
//! CCA is fit by whitening both views and taking the SVD of the whitened
//! cross-covariance: with Sigma_C, Sigma_K the (regularized) covariances and
//! Sigma_CK the cross-covariance, decompose
//! `Sigma_C^{-1/2} Sigma_CK Sigma_K^{-1/2} = U S V^T` and set
//! `W_C = Sigma_C^{-1/2} U`, `W_K = Sigma_K^{-1/2} V`. Projected seed
//! variables then have unit variance, are uncorrelated across components, and
//! the singular values are the canonical correlations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::embed::EmbeddingSpace;
use crate::error::{LexError, Result};
use crate::senses::SenseMap;

/// Paired seed matrices over the bridge words; row i of both views embeds
/// words[i].
#[derive(Debug, Clone, PartialEq)]
pub struct SeedLexicon {
    pub words: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl SeedLexicon {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Builds the paired matrices for `words`, each of which must be present
    /// in both spaces and listed once.
    pub fn from_spaces(
        corpus: &EmbeddingSpace,
        kb_words: &EmbeddingSpace,
        words: &[String],
    ) -> Result<Self> {
        let m = words.len();
        let mut x = DMatrix::zeros(m, corpus.dim());
        let mut y = DMatrix::zeros(m, kb_words.dim());
        let mut seen = std::collections::HashSet::new();
        for (i, w) in words.iter().enumerate() {
            if !seen.insert(w.as_str()) {
                return Err(LexError::InvalidInput(format!("duplicate bridge `{w}`")));
            }
            let xv = corpus
                .get(w)
                .ok_or_else(|| LexError::UnknownToken(format!("{w} (corpus space)")))?;
            let yv = kb_words
                .get(w)
                .ok_or_else(|| LexError::UnknownToken(format!("{w} (kb space)")))?;
            for (j, v) in xv.iter().enumerate() {
                x[(i, j)] = *v;
            }
            for (j, v) in yv.iter().enumerate() {
                y[(i, j)] = *v;
            }
        }
        Ok(SeedLexicon {
            words: words.to_vec(),
            x,
            y,
        })
    }
}

/// Words usable as bridges: monosemous per the sense map and embedded in
/// both spaces. Candidates keep corpus vocabulary order; with a frequency
/// table the `max_bridges` most frequent win (ties by vocabulary order),
/// otherwise the first `max_bridges` in vocabulary order.
pub fn select_bridges(
    corpus: &EmbeddingSpace,
    kb_words: &EmbeddingSpace,
    sense_map: &SenseMap,
    max_bridges: usize,
    ranking: Option<&HashMap<String, u64>>,
) -> Result<SeedLexicon> {
    if max_bridges == 0 {
        return Err(LexError::InvalidInput("max_bridges must be >= 1".into()));
    }
    let mut candidates: Vec<&str> = corpus
        .tokens()
        .iter()
        .map(String::as_str)
        .filter(|w| sense_map.is_monosemous(w) && kb_words.contains(w))
        .collect();
    if candidates.is_empty() {
        return Err(LexError::InvalidInput(
            "no monosemous word is shared by the corpus and KB vocabularies".into(),
        ));
    }
    if let Some(freq) = ranking {
        candidates.sort_by_key(|w| std::cmp::Reverse(freq.get(*w).copied().unwrap_or(0)));
    }
    candidates.truncate(max_bridges);
    let words: Vec<String> = candidates.into_iter().map(str::to_owned).collect();
    SeedLexicon::from_spaces(corpus, kb_words, &words)
}

/// Covariance ridge. `Auto` adds `1e-8 * trace(Sigma)/d` per view, enough to
/// survive rank-deficient seeds; `Absolute` adds the given epsilon verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Regularization {
    #[default]
    Auto,
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel {
    /// d_C x k projection for the corpus view.
    pub w_c: DMatrix<f64>,
    /// d_K x k projection for the KB view.
    pub w_k: DMatrix<f64>,
    pub mean_c: DVector<f64>,
    pub mean_k: DVector<f64>,
    /// Canonical correlations, descending.
    pub correlations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsModel {
    /// d_K x d_C map taking KB vectors into the corpus space.
    pub m: DMatrix<f64>,
    pub ridge: f64,
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let rows = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / rows))
}

fn centered(m: &DMatrix<f64>, means: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v -= means[j];
        }
    }
    out
}

/// Symmetric inverse square root via eigendecomposition. Rejects views whose
/// covariance is numerically singular.
fn inv_sqrt_sym(m: DMatrix<f64>, view: &str) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 || max.is_nan() {
        return Err(LexError::Numeric(format!(
            "{view} covariance is not positive definite; use regularization > 0"
        )));
    }
    let tol = max * 1e-13;
    let mut inv_sqrt = DVector::zeros(eig.eigenvalues.len());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= tol {
            return Err(LexError::Numeric(format!(
                "{view} covariance is numerically singular; use regularization > 0"
            )));
        }
        inv_sqrt[i] = 1.0 / lambda.sqrt();
    }
    let d = DMatrix::from_diagonal(&inv_sqrt);
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

fn epsilon_for(sigma: &DMatrix<f64>, reg: Regularization) -> Result<f64> {
    match reg {
        Regularization::Auto => Ok(1e-8 * sigma.trace() / sigma.nrows() as f64),
        Regularization::Absolute(e) => {
            if e < 0.0 || !e.is_finite() {
                return Err(LexError::InvalidInput(format!(
                    "regularization must be a finite non-negative real, got {e}"
                )));
            }
            Ok(e)
        }
    }
}

fn add_ridge(mut sigma: DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    for i in 0..sigma.nrows() {
        sigma[(i, i)] += eps;
    }
    sigma
}

/// Fits CCA on the seed pairs. Means are stored in the model and applied to
/// everything projected later; all `k = min(d_C, d_K)` components are kept.
pub fn fit_cca(seed: &SeedLexicon, reg: Regularization) -> Result<CcaModel> {
    let m = seed.len();
    if m < 2 {
        return Err(LexError::InvalidInput(format!(
            "CCA needs at least 2 bridges, got {m}"
        )));
    }
    let denom = (m - 1) as f64;
    let mean_c = column_means(&seed.x);
    let mean_k = column_means(&seed.y);
    let xc = centered(&seed.x, &mean_c);
    let yc = centered(&seed.y, &mean_k);

    let sigma_c = xc.transpose() * &xc / denom;
    let sigma_k = yc.transpose() * &yc / denom;
    let sigma_ck = xc.transpose() * &yc / denom;

    let eps_c = epsilon_for(&sigma_c, reg)?;
    let eps_k = epsilon_for(&sigma_k, reg)?;
    let isc = inv_sqrt_sym(add_ridge(sigma_c, eps_c), "corpus")?;
    let isk = inv_sqrt_sym(add_ridge(sigma_k, eps_k), "kb")?;

    let kmat = &isc * sigma_ck * &isk;
    let svd = kmat.svd(true, true);
    let u = svd.u.ok_or_else(|| LexError::Numeric("SVD produced no U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| LexError::Numeric("SVD produced no V^T".into()))?;

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let k = order.len();
    let mut u_sorted = DMatrix::zeros(u.nrows(), k);
    let mut v_sorted = DMatrix::zeros(v_t.ncols(), k);
    let mut correlations = Vec::with_capacity(k);
    for (col, &src) in order.iter().enumerate() {
        u_sorted.set_column(col, &u.column(src));
        v_sorted.set_column(col, &v_t.row(src).transpose());
        correlations.push(svd.singular_values[src]);
    }

    Ok(CcaModel {
        w_c: isc * u_sorted,
        w_k: isk * v_sorted,
        mean_c,
        mean_k,
        correlations,
    })
}

/// Uncentered ridge regression `min ||Y M - X||_F^2 + ridge ||M||_F^2` via
/// the normal equations.
pub fn fit_least_squares(seed: &SeedLexicon, ridge: f64) -> Result<LsModel> {
    if seed.is_empty() {
        return Err(LexError::InvalidInput("least squares needs m >= 1".into()));
    }
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(LexError::InvalidInput(format!(
            "ridge must be a finite non-negative real, got {ridge}"
        )));
    }
    let normal = add_ridge(seed.y.transpose() * &seed.y, ridge);
    let rhs = seed.y.transpose() * &seed.x;
    let solution = match normal.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => normal
            .lu()
            .solve(&rhs)
            .ok_or_else(|| LexError::Numeric("singular normal matrix; use ridge > 0".into()))?,
    };
    Ok(LsModel {
        m: solution,
        ridge,
    })
}

/// Projects every row as `(row - mean) * w`.
pub fn project_space(
    space: &EmbeddingSpace,
    w: &DMatrix<f64>,
    mean: &DVector<f64>,
) -> Result<EmbeddingSpace> {
    if space.dim() != w.nrows() || mean.len() != w.nrows() {
        return Err(LexError::DimensionMismatch(format!(
            "space dim {} vs projection {}x{} and mean {}",
            space.dim(),
            w.nrows(),
            w.ncols(),
            mean.len()
        )));
    }
    let mut out = EmbeddingSpace::new(w.ncols());
    let mut buf = DVector::zeros(space.dim());
    for (token, row) in space.iter() {
        for (j, v) in row.iter().enumerate() {
            buf[j] = v - mean[j];
        }
        let projected = w.transpose() * &buf;
        out.push(token, projected.as_slice())?;
    }
    Ok(out)
}

impl CcaModel {
    pub fn k(&self) -> usize {
        self.w_c.ncols()
    }

    pub fn d_c(&self) -> usize {
        self.w_c.nrows()
    }

    pub fn d_k(&self) -> usize {
        self.w_k.nrows()
    }

    /// Keeps the top `k` components by correlation. No-op if `k` >= current.
    pub fn truncated(mut self, k: usize) -> Self {
        if k < self.k() {
            self.w_c = self.w_c.columns(0, k).into();
            self.w_k = self.w_k.columns(0, k).into();
            self.correlations.truncate(k);
        }
        self
    }

    pub fn project_corpus(&self, space: &EmbeddingSpace) -> Result<EmbeddingSpace> {
        project_space(space, &self.w_c, &self.mean_c)
    }

    pub fn project_kb(&self, space: &EmbeddingSpace) -> Result<EmbeddingSpace> {
        project_space(space, &self.w_k, &self.mean_k)
    }
}

impl LsModel {
    /// Maps a KB-space embedding into the corpus space, `row * M`.
    pub fn map_kb(&self, space: &EmbeddingSpace) -> Result<EmbeddingSpace> {
        if space.dim() != self.m.nrows() {
            return Err(LexError::DimensionMismatch(format!(
                "space dim {} vs map {}x{}",
                space.dim(),
                self.m.nrows(),
                self.m.ncols()
            )));
        }
        let mut out = EmbeddingSpace::new(self.m.ncols());
        let mut buf = DVector::zeros(space.dim());
        for (token, row) in space.iter() {
            for (j, v) in row.iter().enumerate() {
                buf[j] = *v;
            }
            let mapped = self.m.transpose() * &buf;
            out.push(token, mapped.as_slice())?;
        }
        Ok(out)
    }
}

/// How to embed words present in both vocabularies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConflictPolicy {
    #[default]
    Corpus,
    Kb,
    Average,
}

impl FromStr for ConflictPolicy {
    type Err = LexError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corpus" => Ok(ConflictPolicy::Corpus),
            "kb" => Ok(ConflictPolicy::Kb),
            "average" => Ok(ConflictPolicy::Average),
            other => Err(LexError::InvalidInput(format!(
                "conflict policy must be corpus|kb|average, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for ConflictPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConflictPolicy::Corpus => "corpus",
            ConflictPolicy::Kb => "kb",
            ConflictPolicy::Average => "average",
        })
    }
}

/// Union of the projected corpus and KB spaces. Corpus vocabulary comes
/// first in its own order, then KB-only words in KB order; shared words are
/// resolved by the conflict policy.
pub fn build_enhanced_space(
    corpus: &EmbeddingSpace,
    kb_words: &EmbeddingSpace,
    model: &CcaModel,
    conflict: ConflictPolicy,
) -> Result<EmbeddingSpace> {
    let proj_c = model.project_corpus(corpus)?;
    let proj_k = model.project_kb(kb_words)?;
    let mut out = EmbeddingSpace::new(model.k());
    for (token, row) in proj_c.iter() {
        match (conflict, proj_k.get(token)) {
            (ConflictPolicy::Corpus, _) | (_, None) => out.push(token, row)?,
            (ConflictPolicy::Kb, Some(kb_row)) => out.push(token, kb_row)?,
            (ConflictPolicy::Average, Some(kb_row)) => {
                let avg: Vec<f64> = row
                    .iter()
                    .zip(kb_row)
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                out.push(token, &avg)?;
            }
        }
    }
    for (token, row) in proj_k.iter() {
        if !out.contains(token) {
            out.push(token, row)?;
        }
    }
    Ok(out)
}

fn write_vector_line(w: &mut impl Write, v: impl Iterator<Item = f64>) -> std::io::Result<()> {
    let mut first = true;
    for x in v {
        if first {
            write!(w, "{x:.6}")?;
            first = false;
        } else {
            write!(w, " {x:.6}")?;
        }
    }
    writeln!(w)
}

impl CcaModel {
    /// Text container: header `CCA1`, dims, means, correlations, then W_C and
    /// W_K row-major at six decimals.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| LexError::io(path, e))?;
        let mut w = BufWriter::new(file);
        (|| -> std::io::Result<()> {
            writeln!(w, "CCA1")?;
            writeln!(w, "{} {} {}", self.d_c(), self.d_k(), self.k())?;
            write_vector_line(&mut w, self.mean_c.iter().copied())?;
            write_vector_line(&mut w, self.mean_k.iter().copied())?;
            write_vector_line(&mut w, self.correlations.iter().copied())?;
            for i in 0..self.d_c() {
                write_vector_line(&mut w, self.w_c.row(i).iter().copied())?;
            }
            for i in 0..self.d_k() {
                write_vector_line(&mut w, self.w_k.row(i).iter().copied())?;
            }
            w.flush()
        })()
        .map_err(|e| LexError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| LexError::io(path, e))?;
        let mut lines = Lines::new(BufReader::new(file), path);
        lines.expect_header("CCA1")?;
        let dims = lines.floats()?;
        if dims.len() != 3 {
            return lines.fail("expected `d_c d_k k`");
        }
        let (d_c, d_k, k) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
        let mean_c = DVector::from_vec(lines.floats_exact(d_c)?);
        let mean_k = DVector::from_vec(lines.floats_exact(d_k)?);
        let correlations = lines.floats_exact(k)?;
        let w_c = lines.matrix(d_c, k)?;
        let w_k = lines.matrix(d_k, k)?;
        Ok(CcaModel {
            w_c,
            w_k,
            mean_c,
            mean_k,
            correlations,
        })
    }
}

impl LsModel {
    /// Text container: header `LS1`, dims and ridge, then M row-major at six
    /// decimals.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| LexError::io(path, e))?;
        let mut w = BufWriter::new(file);
        (|| -> std::io::Result<()> {
            writeln!(w, "LS1")?;
            writeln!(w, "{} {} {}", self.m.nrows(), self.m.ncols(), self.ridge)?;
            for i in 0..self.m.nrows() {
                write_vector_line(&mut w, self.m.row(i).iter().copied())?;
            }
            w.flush()
        })()
        .map_err(|e| LexError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| LexError::io(path, e))?;
        let mut lines = Lines::new(BufReader::new(file), path);
        lines.expect_header("LS1")?;
        let dims = lines.floats()?;
        if dims.len() != 3 {
            return lines.fail("expected `d_k d_c ridge`");
        }
        let (d_k, d_c, ridge) = (dims[0] as usize, dims[1] as usize, dims[2]);
        let m = lines.matrix(d_k, d_c)?;
        Ok(LsModel { m, ridge })
    }
}

/// Either alignment model, detected from the header line.
#[derive(Debug, Clone, PartialEq)]
pub enum AlignModel {
    Cca(CcaModel),
    Ls(LsModel),
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AlignModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LexError::io(path, e))?;
    let mut header = String::new();
    BufReader::new(file)
        .read_line(&mut header)
        .map_err(|e| LexError::io(path, e))?;
    match header.trim() {
        "CCA1" => Ok(AlignModel::Cca(CcaModel::load(path)?)),
        "LS1" => Ok(AlignModel::Ls(LsModel::load(path)?)),
        other => Err(LexError::parse(
            path,
            1,
            format!("unknown model header `{other}`"),
        )),
    }
}

/// Line-oriented float reader for the model containers.
struct Lines<R> {
    reader: R,
    path: std::path::PathBuf,
    lineno: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R, path: &Path) -> Self {
        Lines {
            reader,
            path: path.to_path_buf(),
            lineno: 0,
        }
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(LexError::parse(&self.path, self.lineno, msg))
    }

    fn next_line(&mut self) -> Result<String> {
        let mut line = String::new();
        loop {
            line.clear();
            let n = self
                .reader
                .read_line(&mut line)
                .map_err(|e| LexError::io(&self.path, e))?;
            self.lineno += 1;
            if n == 0 {
                return Err(LexError::parse(&self.path, self.lineno, "unexpected end of file"));
            }
            if !line.trim().is_empty() {
                return Ok(line);
            }
        }
    }

    fn expect_header(&mut self, tag: &str) -> Result<()> {
        let line = self.next_line()?;
        if line.trim() != tag {
            return self.fail(format!("expected header `{tag}`"));
        }
        Ok(())
    }

    fn floats(&mut self) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let mut out = Vec::new();
        for f in line.split_whitespace() {
            out.push(
                f.parse::<f64>()
                    .map_err(|_| LexError::parse(&self.path, self.lineno, format!("bad float `{f}`")))?,
            );
        }
        Ok(out)
    }

    fn floats_exact(&mut self, n: usize) -> Result<Vec<f64>> {
        let v = self.floats()?;
        if v.len() != n {
            return self.fail(format!("expected {n} values, found {}", v.len()));
        }
        Ok(v)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.floats_exact(cols)?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}
