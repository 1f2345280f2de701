//! Persistent topic models, top-term summaries and argmax labeling.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nmf::{DocTopicMatrix, NmfConfig, TopicTermMatrix};
use crate::textprep::{VocabConfig, Vocabulary, STOPWORD_LIST_ID};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub nmf: NmfConfig,
    pub vocab: VocabConfig,
    pub stopwords: String,
}

impl ModelConfig {
    pub fn new(nmf: NmfConfig, vocab: VocabConfig) -> Self {
        ModelConfig {
            nmf,
            vocab,
            stopwords: STOPWORD_LIST_ID.to_string(),
        }
    }
}

/// Vocabulary plus learned topic-term weights. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    vocab: Vocabulary,
    h: TopicTermMatrix,
    names: Option<Vec<String>>,
    config: ModelConfig,
    fingerprint: String,
}

/// On-disk layout; `fingerprint` covers every other field.
#[derive(Serialize, Deserialize)]
struct ModelPayload {
    version: u32,
    config: ModelConfig,
    vocab: Vocabulary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
    dims: [usize; 2],
    #[serde(rename = "H")]
    h: Vec<f64>,
}

impl ModelPayload {
    fn fingerprint(&self) -> String {
        // Round-tripping through `Value` sorts object keys.
        let canonical = serde_json::to_value(self).expect("payload serializes");
        let bytes = serde_json::to_vec(&canonical).expect("value serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSummary {
    pub topic_id: usize,
    pub top_terms: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub topic_id: usize,
    /// The document had no topic mass at all; `topic_id` is then 0.
    pub degenerate: bool,
}

impl TopicModel {
    pub fn new(
        vocab: Vocabulary,
        h: TopicTermMatrix,
        names: Option<Vec<String>>,
        config: ModelConfig,
    ) -> Result<Self> {
        if h.n_terms() != vocab.len() {
            return Err(Error::DimensionMismatch(format!(
                "topic matrix has {} columns, vocabulary has {} terms",
                h.n_terms(),
                vocab.len()
            )));
        }
        if let Some(names) = &names {
            if names.len() != h.n_topics() {
                return Err(Error::LengthMismatch(format!(
                    "{} topic names for {} topics",
                    names.len(),
                    h.n_topics()
                )));
            }
        }
        if h.0.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidConfig("topic weights must be finite and nonnegative".into()));
        }
        let mut model = TopicModel {
            vocab,
            h,
            names,
            config,
            fingerprint: String::new(),
        };
        model.fingerprint = model.payload().fingerprint();
        Ok(model)
    }

    fn payload(&self) -> ModelPayload {
        ModelPayload {
            version: MODEL_VERSION,
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            names: self.names.clone(),
            dims: [self.h.n_topics(), self.h.n_terms()],
            h: self.h.0.iter().copied().collect(),
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn h(&self) -> &TopicTermMatrix {
        &self.h
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn n_topics(&self) -> usize {
        self.h.n_topics()
    }

    /// Display name of a topic: its assigned name, or `t<id>`.
    pub fn topic_name(&self, topic_id: usize) -> String {
        self.names
            .as_ref()
            .and_then(|n| n.get(topic_id).cloned())
            .unwrap_or_else(|| format!("t{topic_id}"))
    }

    pub fn with_names(&self, names: Option<Vec<String>>) -> Result<Self> {
        TopicModel::new(self.vocab.clone(), self.h.clone(), names, self.config.clone())
    }

    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self.payload()).expect("payload serializes");
        value
            .as_object_mut()
            .expect("payload is an object")
            .insert("fingerprint".into(), Value::String(self.fingerprint.clone()));
        serde_json::to_string(&value).expect("value serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::CorruptModel("model is not a JSON object".into()))?;
        let version = obj
            .get("version")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::CorruptModel("missing version".into()))?;
        if version != MODEL_VERSION as u64 {
            return Err(Error::VersionMismatch {
                found: version as u32,
                expected: MODEL_VERSION,
            });
        }
        let stored = match obj.remove("fingerprint") {
            Some(Value::String(s)) => s,
            _ => return Err(Error::CorruptModel("missing fingerprint".into())),
        };
        let payload: ModelPayload =
            serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;
        let computed = payload.fingerprint();
        if computed != stored {
            return Err(Error::HashMismatch { stored, computed });
        }
        let [t, n] = payload.dims;
        if payload.h.len() != t * n {
            return Err(Error::CorruptModel(format!(
                "H has {} values, dims say {t}x{n}",
                payload.h.len()
            )));
        }
        let h = Array2::from_shape_vec((t, n), payload.h).expect("length checked");
        let model = TopicModel::new(payload.vocab, TopicTermMatrix(h), payload.names, payload.config)
            .map_err(|e| Error::CorruptModel(e.to_string()))?;
        debug_assert_eq!(model.fingerprint, stored);
        Ok(model)
    }
}

pub fn save_model(model: &TopicModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TopicModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TopicModel::from_json(&text)
}

/// The `k` highest-weight terms of a topic, ties broken by term order.
pub fn top_terms(model: &TopicModel, topic_id: usize, k: usize) -> Result<TopicSummary> {
    let n_topics = model.n_topics();
    if topic_id >= n_topics {
        return Err(Error::BadTopic { topic_id, n_topics });
    }
    let n_terms = model.vocab.len();
    if k == 0 || k > n_terms {
        return Err(Error::InvalidConfig(format!("k must lie in 1..={n_terms}, got {k}")));
    }
    let row = model.h.0.row(topic_id);
    if row.iter().all(|x| *x == 0.0) {
        return Err(Error::DegenerateTopic(topic_id));
    }
    let terms = model.vocab.terms();
    let mut order: Vec<usize> = (0..n_terms).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then_with(|| terms[a].cmp(&terms[b])));
    Ok(TopicSummary {
        topic_id,
        top_terms: order
            .into_iter()
            .take(k)
            .map(|j| (terms[j].clone(), row[j]))
            .collect(),
    })
}

/// Row-wise argmax with ties going to the lowest topic id. Rows without any
/// positive weight are labeled topic 0 and flagged degenerate.
pub fn assign_labels(w: &DocTopicMatrix) -> Vec<TopicLabel> {
    w.values
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &x) in row.iter().enumerate() {
                if x > row[best] {
                    best = k;
                }
            }
            let degenerate = !(row.get(best).copied().unwrap_or(0.0) > 0.0);
            TopicLabel {
                topic_id: if degenerate { 0 } else { best },
                degenerate,
            }
        })
        .collect()
}
