//! Tokenization, feature vocabulary selection and tf-idf featurization.
//!
//! Weighting follows the usual smoothed scheme: raw term counts,
//! `idf(t) = ln((1 + n) / (1 + df(t))) + 1` from the fitting corpus, then
//! each document row scaled to unit Euclidean norm.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory as Gc};

use crate::corpus::SegmentDoc;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Identifier of the bundled stopword list, recorded in saved models.
pub const STOPWORD_LIST_ID: &str = "en-318-v1";

static STOPWORDS_RAW: &str = include_str!("stopwords_en.txt");

pub fn stopwords() -> &'static std::collections::HashSet<&'static str> {
    static SET: OnceLock<std::collections::HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS_RAW.lines().map(str::trim).filter(|w| !w.is_empty()).collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Unicode punctuation (P*) and symbol (S*) categories.
fn is_punct_or_symbol(c: char) -> bool {
    matches!(
        get_general_category(c),
        Gc::ConnectorPunctuation
            | Gc::DashPunctuation
            | Gc::OpenPunctuation
            | Gc::ClosePunctuation
            | Gc::InitialPunctuation
            | Gc::FinalPunctuation
            | Gc::OtherPunctuation
            | Gc::MathSymbol
            | Gc::CurrencySymbol
            | Gc::ModifierSymbol
            | Gc::OtherSymbol
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenizerOptions {
    pub remove_stopwords: bool,
    /// Tokens with fewer characters are dropped.
    pub min_len: usize,
}

impl TokenizerOptions {
    /// Feature extraction: stopwords removed, single characters dropped.
    pub const FEATURES: TokenizerOptions = TokenizerOptions {
        remove_stopwords: true,
        min_len: 2,
    };
    /// Lowercasing and punctuation stripping only.
    pub const PLAIN: TokenizerOptions = TokenizerOptions {
        remove_stopwords: false,
        min_len: 1,
    };
}

pub fn tokenize_with(text: &str, opts: TokenizerOptions) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| !is_punct_or_symbol(*c))
        .flat_map(char::to_lowercase)
        .collect();
    cleaned
        .split_whitespace()
        .filter(|t| t.chars().count() >= opts.min_len)
        .filter(|t| !(opts.remove_stopwords && is_stopword(t)))
        .map(str::to_string)
        .collect()
}

/// Lowercases, strips punctuation and symbols (apostrophes included, so
/// "i'm" becomes "im"), splits on whitespace, and drops stopwords and
/// one-character tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, TokenizerOptions::FEATURES)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabConfig {
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub max_terms: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_df: 2,
            max_df_ratio: 0.10,
            max_terms: 1000,
        }
    }
}

impl VocabConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.max_df_ratio) {
            return Err(Error::InvalidConfig(format!(
                "max_df_ratio must lie in [0, 1], got {}",
                self.max_df_ratio
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidConfig("max_terms must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VocabEntry {
    t: String,
    df: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VocabFile {
    n_docs_fit: usize,
    terms: Vec<VocabEntry>,
}

/// Feature columns plus the document frequencies of the fitting corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VocabFile", into = "VocabFile")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs_fit: usize,
    index: HashMap<String, usize>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
            && self.doc_freq == other.doc_freq
            && self.n_docs_fit == other.n_docs_fit
    }
}

impl TryFrom<VocabFile> for Vocabulary {
    type Error = String;

    fn try_from(file: VocabFile) -> std::result::Result<Self, String> {
        let (terms, doc_freq) = file.terms.into_iter().map(|e| (e.t, e.df)).unzip();
        Vocabulary::from_parts(terms, doc_freq, file.n_docs_fit).map_err(|e| e.to_string())
    }
}

impl From<Vocabulary> for VocabFile {
    fn from(v: Vocabulary) -> Self {
        VocabFile {
            n_docs_fit: v.n_docs_fit,
            terms: v
                .terms
                .into_iter()
                .zip(v.doc_freq)
                .map(|(t, df)| VocabEntry { t, df })
                .collect(),
        }
    }
}

impl Vocabulary {
    pub fn from_parts(terms: Vec<String>, doc_freq: Vec<usize>, n_docs_fit: usize) -> Result<Self> {
        if terms.len() != doc_freq.len() {
            return Err(Error::LengthMismatch(format!(
                "{} terms but {} document frequencies",
                terms.len(),
                doc_freq.len()
            )));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate vocabulary term `{t}`")));
            }
        }
        Ok(Vocabulary {
            terms,
            doc_freq,
            n_docs_fit,
            index,
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn n_docs_fit(&self) -> usize {
        self.n_docs_fit
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self, column: usize) -> f64 {
        ((1.0 + self.n_docs_fit as f64) / (1.0 + self.doc_freq[column] as f64)).ln() + 1.0
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self).expect("vocabulary serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Selects feature terms: document frequency within `[min_df, max_df_ratio * n]`,
/// then the `max_terms` most frequent by total count (ties lexicographic).
/// The resulting columns are ordered lexicographically.
pub fn build_vocabulary(docs: &[SegmentDoc], cfg: &VocabConfig) -> Result<Vocabulary> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    // (document frequency, total count)
    let mut stats: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for doc in docs {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for tok in tokenize(&doc.text) {
            *counts.entry(tok).or_default() += 1;
        }
        for (tok, c) in counts {
            let e = stats.entry(tok).or_default();
            e.0 += 1;
            e.1 += c;
        }
    }

    let n = docs.len();
    let max_df = (cfg.max_df_ratio * n as f64 + 1e-9).floor() as usize;
    let mut kept: Vec<(String, usize, usize)> = stats
        .into_iter()
        .filter(|(_, (df, _))| *df >= cfg.min_df && *df <= max_df)
        .map(|(t, (df, total))| (t, df, total))
        .collect();
    kept.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    kept.truncate(cfg.max_terms);
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));

    let (terms, doc_freq) = kept.into_iter().map(|(t, df, _)| (t, df)).unzip();
    Vocabulary::from_parts(terms, doc_freq, n)
}

/// Nonnegative document-term matrix with unit-norm (or all-zero) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfMatrix {
    pub row_ids: Vec<String>,
    pub matrix: CsrMatrix,
}

impl TfidfMatrix {
    pub fn n_docs(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_terms(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Coordinate-format dump: `doc_id,term_index,value`.
    pub fn to_coo_csv(&self) -> String {
        let mut out = String::from("doc_id,term_index,value\n");
        for (i, id) in self.row_ids.iter().enumerate() {
            for (j, v) in self.matrix.row(i) {
                writeln!(out, "{id},{j},{v}").unwrap();
            }
        }
        out
    }
}

pub fn vectorize(docs: &[SegmentDoc], vocab: &Vocabulary) -> Result<TfidfMatrix> {
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let rows = docs
        .iter()
        .map(|doc| {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for tok in tokenize(&doc.text) {
                if let Some(j) = vocab.index_of(&tok) {
                    *counts.entry(j).or_default() += 1;
                }
            }
            let mut row: Vec<(usize, f64)> = counts
                .into_iter()
                .map(|(j, c)| (j, c as f64 * vocab.idf(j)))
                .collect();
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, v)| *v /= norm);
            }
            row
        })
        .collect();
    Ok(TfidfMatrix {
        row_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        matrix: CsrMatrix::from_rows(vocab.len(), rows),
    })
}
