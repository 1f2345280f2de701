//! Corpus-level BLEU-4 with multiple references.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::textprep::{tokenize_with, TokenizerOptions};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuScore {
    pub score: f64,
    pub n_gram_precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Length of the reference closest to `hyp_len`, preferring the shorter on ties.
fn closest_ref_len(hyp_len: usize, refs: &[Vec<String>]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .expect("at least one reference")
}

/// Scores `hyps[i]` against the references `refs[i]`.
///
/// Text is lowercased and stripped of punctuation; stopwords are kept.
/// Clipping uses the largest count of each n-gram over the references. With
/// `smoothing` off, any n-gram order without matches gives a score of 0; with
/// it on, orders 2-4 use `(matches + 1) / (total + 1)`.
pub fn corpus_bleu(hyps: &[String], refs: &[Vec<String>], smoothing: bool) -> Result<BleuScore> {
    if hyps.len() != refs.len() {
        return Err(Error::LengthMismatch(format!(
            "{} hypotheses but {} reference sets",
            hyps.len(),
            refs.len()
        )));
    }
    if let Some(i) = refs.iter().position(Vec::is_empty) {
        return Err(Error::LengthMismatch(format!("segment {i} has no reference")));
    }

    let mut matches = [0usize; MAX_ORDER];
    let mut totals = [0usize; MAX_ORDER];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);

    for (hyp, seg_refs) in hyps.iter().zip(refs) {
        let h = tokenize_with(hyp, TokenizerOptions::PLAIN);
        let rs: Vec<Vec<String>> = seg_refs
            .iter()
            .map(|r| tokenize_with(r, TokenizerOptions::PLAIN))
            .collect();
        hyp_len += h.len();
        ref_len += closest_ref_len(h.len(), &rs);

        for n in 1..=MAX_ORDER {
            let hyp_counts = ngram_counts(&h, n);
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in &rs {
                for (gram, c) in ngram_counts(r, n) {
                    let e = max_ref.entry(gram).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            matches[n - 1] += hyp_counts
                .iter()
                .map(|(gram, &c)| c.min(max_ref.get(gram).copied().unwrap_or(0)))
                .sum::<usize>();
            totals[n - 1] += h.len().saturating_sub(n - 1);
        }
    }

    let mut precisions = [0.0; MAX_ORDER];
    for n in 0..MAX_ORDER {
        precisions[n] = if smoothing && n > 0 {
            (matches[n] + 1) as f64 / (totals[n] + 1) as f64
        } else if totals[n] > 0 {
            matches[n] as f64 / totals[n] as f64
        } else {
            0.0
        };
    }

    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };

    let score = if precisions.iter().any(|p| *p == 0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        (100.0 * brevity_penalty * log_mean.exp()).min(100.0)
    };

    Ok(BleuScore {
        score,
        n_gram_precisions: precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
    })
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

/// Reads a hypothesis file and parallel reference files, one segment per line.
pub fn load_aligned(hyp_path: &Path, ref_paths: &[impl AsRef<Path>]) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let hyps = read_lines(hyp_path)?;
    let mut refs = vec![Vec::with_capacity(ref_paths.len()); hyps.len()];
    for path in ref_paths {
        let path = path.as_ref();
        let lines = read_lines(path)?;
        if lines.len() != hyps.len() {
            return Err(Error::LengthMismatch(format!(
                "{} has {} lines, hypotheses have {}",
                path.display(),
                lines.len(),
                hyps.len()
            )));
        }
        for (seg, line) in refs.iter_mut().zip(lines) {
            seg.push(line);
        }
    }
    Ok((hyps, refs))
}
