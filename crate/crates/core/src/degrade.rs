//! Stochastic token deletion and substitution, used to emulate translations
//! of decreasing quality from clean text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::SegmentDoc;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubPool {
    /// Draw replacements from the corpus's own whitespace-token distribution.
    CorpusUnigram,
    /// Draw uniformly from a fixed word list.
    FixedList(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub p_drop: f64,
    pub p_sub: f64,
    pub sub_pool: SubPool,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(p_drop: f64, p_sub: f64, seed: u64) -> Self {
        NoiseSpec {
            p_drop,
            p_sub,
            sub_pool: SubPool::CorpusUnigram,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.p_drop) || !ok(self.p_sub) || self.p_drop + self.p_sub > 1.0 + 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= p_drop, p_sub and p_drop + p_sub <= 1 (got {}, {})",
                self.p_drop, self.p_sub
            )));
        }
        if let SubPool::FixedList(words) = &self.sub_pool {
            if words.is_empty() && self.p_sub > 0.0 {
                return Err(Error::InvalidConfig("substitution list is empty".into()));
            }
        }
        Ok(())
    }
}

/// Cumulative token counts for weighted draws.
struct Pool {
    tokens: Vec<String>,
    cumulative: Vec<usize>,
}

impl Pool {
    fn unigram(docs: &[SegmentDoc]) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for d in docs {
            for t in d.text.split_whitespace() {
                *counts.entry(t).or_default() += 1;
            }
        }
        let mut total = 0;
        let mut tokens = Vec::with_capacity(counts.len());
        let mut cumulative = Vec::with_capacity(counts.len());
        for (t, c) in counts {
            total += c;
            tokens.push(t.to_string());
            cumulative.push(total);
        }
        Pool { tokens, cumulative }
    }

    fn uniform(words: &[String]) -> Self {
        Pool {
            tokens: words.to_vec(),
            cumulative: (1..=words.len()).collect(),
        }
    }

    fn draw(&self, rng: &mut SeededRng) -> Option<&str> {
        let total = *self.cumulative.last()?;
        let r = rng.below(total);
        let i = self.cumulative.partition_point(|&c| c <= r);
        Some(&self.tokens[i])
    }
}

/// Per whitespace token: delete with probability `p_drop`, otherwise replace
/// with probability `p_sub` (one uniform draw `u`: `u < p_drop` deletes,
/// `u < p_drop + p_sub` substitutes). Each document uses its own stream keyed
/// by `(seed, doc_id)`, so results do not depend on document order. Texts
/// left untouched are returned byte-for-byte.
pub fn degrade_corpus(docs: &[SegmentDoc], spec: &NoiseSpec) -> Result<Vec<SegmentDoc>> {
    spec.validate()?;
    let pool = match &spec.sub_pool {
        SubPool::CorpusUnigram => Pool::unigram(docs),
        SubPool::FixedList(words) => Pool::uniform(words),
    };
    Ok(docs
        .iter()
        .map(|doc| {
            let mut rng = SeededRng::derived(spec.seed, &doc.doc_id);
            let mut changed = false;
            let mut out: Vec<&str> = Vec::new();
            for tok in doc.text.split_whitespace() {
                let u = rng.unit();
                if u < spec.p_drop {
                    changed = true;
                } else if u < spec.p_drop + spec.p_sub {
                    match pool.draw(&mut rng) {
                        Some(sub) => {
                            changed |= sub != tok;
                            out.push(sub);
                        }
                        None => out.push(tok),
                    }
                } else {
                    out.push(tok);
                }
            }
            SegmentDoc {
                text: if changed { out.join(" ") } else { doc.text.clone() },
                ..doc.clone()
            }
        })
        .collect())
}
