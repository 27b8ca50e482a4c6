//! C ABI over the alignment library. Handles are opaque pointers owned by
//! Rust; every fallible call returns a `LexStatus` and stores a message
//! retrievable through `lexbridge_last_error` on the same thread. Strings
//! cross the boundary as NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::Path;

use libc::{c_char, size_t};

use lexbridge::align::{build_enhanced_space, fit_cca, select_bridges, ConflictPolicy, Regularization};
use lexbridge::embed::{cosine, EmbeddingSpace};
use lexbridge::error::LexError;
use lexbridge::eval::{evaluate_similarity, load_similarity_dataset, space_similarity};
use lexbridge::senses::{compose_word_space, SenseMap};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LexStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidInput = 5,
    Numeric = 6,
    NotFound = 7,
}

/// Policy for words present in both vocabularies when building the
/// enhanced space.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LexConflict {
    Corpus = 0,
    Kb = 1,
    Average = 2,
}

/// Similarity evaluation outcome.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LexEvalResult {
    pub pearson: f64,
    pub spearman: f64,
    pub covered: u64,
    pub total: u64,
}

/// Owned embedding space. Opaque; free with `lexbridge_space_free`.
pub struct LexSpace {
    inner: EmbeddingSpace,
}

/// Owned word-to-synset map. Opaque; free with `lexbridge_sense_map_free`.
pub struct LexSenseMap {
    inner: SenseMap,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(clean).unwrap_or_default();
    });
}

fn status_of(err: &LexError) -> LexStatus {
    match err {
        LexError::Io { .. } => LexStatus::Io,
        LexError::Parse { .. } => LexStatus::Parse,
        LexError::UnknownToken(_) => LexStatus::NotFound,
        LexError::Numeric(_) => LexStatus::Numeric,
        LexError::DimensionMismatch(_) | LexError::InvalidInput(_) => LexStatus::InvalidInput,
    }
}

fn fail(err: LexError) -> LexStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn null_arg(name: &str) -> LexStatus {
    set_error(&format!("argument `{name}` is null"));
    LexStatus::NullArgument
}

/// Reads a required C string argument. `None` means the status was set.
unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, LexStatus> {
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("argument `{name}` is not valid UTF-8"));
        LexStatus::InvalidUtf8
    })
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn lexbridge_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string; never free it.
#[no_mangle]
pub extern "C" fn lexbridge_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Loads an embedding space from a word2vec-style text file into `*out`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
/// On `Ok` the caller owns `*out` and must free it with
/// `lexbridge_space_free`.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_space_load(
    path: *const c_char,
    out: *mut *mut LexSpace,
) -> LexStatus {
    if out.is_null() {
        return null_arg("out");
    }
    let path = match str_arg(path, "path") {
        Ok(p) => p,
        Err(status) => return status,
    };
    match EmbeddingSpace::load_text(Path::new(path)) {
        Ok((space, _report)) => {
            *out = Box::into_raw(Box::new(LexSpace { inner: space }));
            LexStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Writes a space back to the text format.
///
/// # Safety
/// `space` must be a live handle from this library; `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_space_save(
    space: *const LexSpace,
    path: *const c_char,
) -> LexStatus {
    if space.is_null() {
        return null_arg("space");
    }
    let path = match str_arg(path, "path") {
        Ok(p) => p,
        Err(status) => return status,
    };
    match (*space).inner.save_text(Path::new(path)) {
        Ok(()) => LexStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Releases a space handle. A null pointer is a no-op.
///
/// # Safety
/// `space` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_space_free(space: *mut LexSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of vectors; 0 for a null handle.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_space_len(space: *const LexSpace) -> size_t {
    if space.is_null() {
        return 0;
    }
    (*space).inner.len()
}

/// Vector dimensionality; 0 for a null handle.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_space_dim(space: *const LexSpace) -> size_t {
    if space.is_null() {
        return 0;
    }
    (*space).inner.dim()
}

/// Whether `token` has a vector. False on null or non-UTF-8 arguments.
///
/// # Safety
/// `space` must be null or a live handle; `token` null or a valid string.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_space_contains(
    space: *const LexSpace,
    token: *const c_char,
) -> bool {
    if space.is_null() || token.is_null() {
        return false;
    }
    match CStr::from_ptr(token).to_str() {
        Ok(t) => (*space).inner.contains(t),
        Err(_) => false,
    }
}

/// Copies the vector of `token` into `buf`, which holds `len` doubles;
/// `len` must equal the space dimensionality.
///
/// # Safety
/// `space` must be a live handle, `token` a valid string, and `buf` writable
/// for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_space_vector(
    space: *const LexSpace,
    token: *const c_char,
    buf: *mut f64,
    len: size_t,
) -> LexStatus {
    if space.is_null() {
        return null_arg("space");
    }
    if buf.is_null() {
        return null_arg("buf");
    }
    let token = match str_arg(token, "token") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let inner = &(*space).inner;
    if len != inner.dim() {
        set_error(&format!("buffer holds {len} values but vectors have {}", inner.dim()));
        return LexStatus::InvalidInput;
    }
    match inner.get(token) {
        Some(v) => {
            std::ptr::copy_nonoverlapping(v.as_ptr(), buf, len);
            LexStatus::Ok
        }
        None => fail(LexError::UnknownToken(token.to_owned())),
    }
}

/// Copies the token at `index` (NUL-terminated) into `buf` of capacity `cap`.
///
/// # Safety
/// `space` must be a live handle and `buf` writable for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_space_token(
    space: *const LexSpace,
    index: size_t,
    buf: *mut c_char,
    cap: size_t,
) -> LexStatus {
    if space.is_null() {
        return null_arg("space");
    }
    if buf.is_null() {
        return null_arg("buf");
    }
    let inner = &(*space).inner;
    let Some(token) = inner.tokens().get(index) else {
        set_error(&format!("index {index} out of range for {} vectors", inner.len()));
        return LexStatus::NotFound;
    };
    let bytes = token.as_bytes();
    if cap <= bytes.len() {
        set_error(&format!("token needs {} bytes, buffer has {cap}", bytes.len() + 1));
        return LexStatus::InvalidInput;
    }
    std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
    *buf.add(bytes.len()) = 0;
    LexStatus::Ok
}

/// Cosine similarity between the vectors of two tokens.
///
/// # Safety
/// `space` must be a live handle, both tokens valid strings, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_space_cosine(
    space: *const LexSpace,
    token_a: *const c_char,
    token_b: *const c_char,
    out: *mut f64,
) -> LexStatus {
    if space.is_null() {
        return null_arg("space");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let a = match str_arg(token_a, "token_a") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let b = match str_arg(token_b, "token_b") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let inner = &(*space).inner;
    let (Some(va), Some(vb)) = (inner.get(a), inner.get(b)) else {
        let missing = if inner.get(a).is_none() { a } else { b };
        return fail(LexError::UnknownToken(missing.to_owned()));
    };
    match cosine(va, vb) {
        Ok(value) => {
            *out = value;
            LexStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Loads a `word<TAB>synset,synset` map into `*out`.
///
/// # Safety
/// `path` must be a valid string and `out` a valid pointer. On `Ok` the
/// caller owns `*out` and must free it with `lexbridge_sense_map_free`.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_sense_map_load(
    path: *const c_char,
    out: *mut *mut LexSenseMap,
) -> LexStatus {
    if out.is_null() {
        return null_arg("out");
    }
    let path = match str_arg(path, "path") {
        Ok(p) => p,
        Err(status) => return status,
    };
    match SenseMap::load(Path::new(path)) {
        Ok(map) => {
            *out = Box::into_raw(Box::new(LexSenseMap { inner: map }));
            LexStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Releases a sense map handle. A null pointer is a no-op.
///
/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_sense_map_free(map: *mut LexSenseMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Number of mapped words; 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_sense_map_len(map: *const LexSenseMap) -> size_t {
    if map.is_null() {
        return 0;
    }
    (*map).inner.len()
}

/// Averages synset vectors into a word-level space.
///
/// # Safety
/// `kb_space` and `map` must be live handles and `out` a valid pointer.
/// On `Ok` the caller owns `*out`.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_compose_words(
    kb_space: *const LexSpace,
    map: *const LexSenseMap,
    out: *mut *mut LexSpace,
) -> LexStatus {
    if kb_space.is_null() {
        return null_arg("kb_space");
    }
    if map.is_null() {
        return null_arg("map");
    }
    if out.is_null() {
        return null_arg("out");
    }
    match compose_word_space(&(*kb_space).inner, &(*map).inner) {
        Ok((space, _report)) => {
            *out = Box::into_raw(Box::new(LexSpace { inner: space }));
            LexStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Runs bridge selection, CCA and union construction in one call.
/// `max_bridges` caps the seed lexicon; `reg` below zero selects the
/// trace-scaled automatic ridge.
///
/// # Safety
/// All three handles must be live and `out` a valid pointer. On `Ok` the
/// caller owns `*out`.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_enhance(
    corpus: *const LexSpace,
    kb_words: *const LexSpace,
    map: *const LexSenseMap,
    max_bridges: size_t,
    reg: f64,
    conflict: LexConflict,
    out: *mut *mut LexSpace,
) -> LexStatus {
    if corpus.is_null() {
        return null_arg("corpus");
    }
    if kb_words.is_null() {
        return null_arg("kb_words");
    }
    if map.is_null() {
        return null_arg("map");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let policy = match conflict {
        LexConflict::Corpus => ConflictPolicy::Corpus,
        LexConflict::Kb => ConflictPolicy::Kb,
        LexConflict::Average => ConflictPolicy::Average,
    };
    let regularization = if reg < 0.0 {
        Regularization::Auto
    } else {
        Regularization::Absolute(reg)
    };
    let result = select_bridges(
        &(*corpus).inner,
        &(*kb_words).inner,
        &(*map).inner,
        max_bridges,
        None,
    )
    .and_then(|lexicon| fit_cca(&lexicon, regularization))
    .and_then(|model| {
        build_enhanced_space(&(*corpus).inner, &(*kb_words).inner, &model, policy)
    });
    match result {
        Ok(space) => {
            *out = Box::into_raw(Box::new(LexSpace { inner: space }));
            LexStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Scores a space against a similarity dataset with cosine similarity.
///
/// # Safety
/// `space` must be a live handle, `dataset_path` a valid string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lexbridge_eval_similarity(
    space: *const LexSpace,
    dataset_path: *const c_char,
    lowercase: bool,
    out: *mut LexEvalResult,
) -> LexStatus {
    if space.is_null() {
        return null_arg("space");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let path = match str_arg(dataset_path, "dataset_path") {
        Ok(p) => p,
        Err(status) => return status,
    };
    let result = load_similarity_dataset(Path::new(path), lowercase)
        .and_then(|ds| evaluate_similarity(space_similarity(&(*space).inner), &ds));
    match result {
        Ok(r) => {
            *out = LexEvalResult {
                pearson: r.pearson,
                spearman: r.spearman,
                covered: r.covered as u64,
                total: r.total as u64,
            };
            LexStatus::Ok
        }
        Err(e) => fail(e),
    }
}
