//! Silver-label evaluation: accuracy, majority baseline, confusion matrices,
//! per-minute topic drift and assigned-prompt histograms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SegmentDoc;
use crate::error::{Error, Result};
use crate::topics::TopicLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSource {
    Silver,
    System,
    AssignedPrompt,
}

impl LabelSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelSource::Silver => "silver",
            LabelSource::System => "system",
            LabelSource::AssignedPrompt => "assigned-prompt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub doc_ids: Vec<String>,
    pub labels: Vec<usize>,
    /// Rows whose label came from an all-zero topic distribution.
    pub degenerate: Vec<bool>,
    pub source: LabelSource,
}

#[derive(Serialize, Deserialize)]
struct LabelRecord {
    doc_id: String,
    topic_id: usize,
    #[serde(default)]
    degenerate: bool,
}

impl LabeledSet {
    pub fn new(doc_ids: Vec<String>, labels: Vec<usize>, source: LabelSource) -> Result<Self> {
        let n = labels.len();
        Self::with_flags(doc_ids, labels, vec![false; n], source)
    }

    pub fn with_flags(
        doc_ids: Vec<String>,
        labels: Vec<usize>,
        degenerate: Vec<bool>,
        source: LabelSource,
    ) -> Result<Self> {
        if doc_ids.len() != labels.len() || degenerate.len() != labels.len() {
            return Err(Error::LengthMismatch(format!(
                "{} doc ids, {} labels, {} flags",
                doc_ids.len(),
                labels.len(),
                degenerate.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for id in &doc_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Alignment(format!("duplicate doc id `{id}`")));
            }
        }
        Ok(LabeledSet {
            doc_ids,
            labels,
            degenerate,
            source,
        })
    }

    pub fn from_assignments(doc_ids: &[String], labels: &[TopicLabel], source: LabelSource) -> Result<Self> {
        Self::with_flags(
            doc_ids.to_vec(),
            labels.iter().map(|l| l.topic_id).collect(),
            labels.iter().map(|l| l.degenerate).collect(),
            source,
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// JSON lines of `{"doc_id", "topic_id", "degenerate"}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            let rec = LabelRecord {
                doc_id: self.doc_ids[i].clone(),
                topic_id: self.labels[i],
                degenerate: self.degenerate[i],
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str, source: LabelSource) -> Result<Self> {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        let mut flags = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: LabelRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            ids.push(rec.doc_id);
            labels.push(rec.topic_id);
            flags.push(rec.degenerate);
        }
        Self::with_flags(ids, labels, flags, source)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, source: LabelSource) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text, source)
    }

    pub fn max_label(&self) -> Option<usize> {
        self.labels.iter().copied().max()
    }
}

/// `(predicted, silver)` label pairs matched by doc id.
fn align(pred: &LabeledSet, silver: &LabeledSet) -> Result<Vec<(usize, usize)>> {
    if pred.is_empty() && silver.is_empty() {
        return Err(Error::Alignment("both label sets are empty".into()));
    }
    let silver_by_id: HashMap<&str, usize> = silver
        .doc_ids
        .iter()
        .map(String::as_str)
        .zip(silver.labels.iter().copied())
        .collect();
    let mut pairs = Vec::with_capacity(pred.len());
    for (id, &p) in pred.doc_ids.iter().zip(&pred.labels) {
        match silver_by_id.get(id.as_str()) {
            Some(&s) => pairs.push((p, s)),
            None => {
                return Err(Error::Alignment(format!(
                    "doc `{id}` is predicted but has no silver label"
                )))
            }
        }
    }
    if pairs.len() != silver.len() {
        let pred_ids: BTreeSet<&str> = pred.doc_ids.iter().map(String::as_str).collect();
        let missing = silver
            .doc_ids
            .iter()
            .find(|id| !pred_ids.contains(id.as_str()))
            .expect("sizes differ so a silver id is missing");
        return Err(Error::Alignment(format!(
            "doc `{missing}` has a silver label but no prediction"
        )));
    }
    Ok(pairs)
}

pub fn accuracy(pred: &LabeledSet, silver: &LabeledSet) -> Result<f64> {
    let pairs = align(pred, silver)?;
    let hits = pairs.iter().filter(|(p, s)| p == s).count();
    Ok(hits as f64 / pairs.len() as f64)
}

fn histogram(labels: &[usize], n_topics: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_topics];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Most frequent silver label (lowest id on ties) and its relative frequency.
pub fn majority_baseline(silver: &LabeledSet) -> Result<(usize, f64)> {
    let n_topics = silver
        .max_label()
        .ok_or_else(|| Error::Alignment("silver label set is empty".into()))?
        + 1;
    let counts = histogram(&silver.labels, n_topics);
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    Ok((best, counts[best] as f64 / silver.len() as f64))
}

/// Rows are silver labels, columns predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    /// Each row sums to one, or is all zero when that silver class is absent.
    pub row_normalized: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn n_topics(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, silver: usize) -> u64 {
        self.counts[silver].iter().sum()
    }
}

/// `n_topics` is a lower bound; it grows to cover every observed label.
pub fn confusion(pred: &LabeledSet, silver: &LabeledSet, n_topics: usize) -> Result<ConfusionMatrix> {
    let pairs = align(pred, silver)?;
    let n = pairs
        .iter()
        .map(|(p, s)| p.max(s) + 1)
        .max()
        .unwrap_or(0)
        .max(n_topics);
    let mut counts = vec![vec![0u64; n]; n];
    for (p, s) in pairs {
        counts[s][p] += 1;
    }
    let row_normalized = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect();
    Ok(ConfusionMatrix {
        counts,
        row_normalized,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_docs: usize,
    pub n_degenerate: usize,
    pub accuracy: f64,
    pub baseline_topic: usize,
    pub baseline_accuracy: f64,
    /// `None` for silver classes absent from the evaluation set.
    pub per_topic_recall: Vec<Option<f64>>,
    pub confusion: ConfusionMatrix,
    pub label_histograms: BTreeMap<String, Vec<u64>>,
}

pub fn evaluate(pred: &LabeledSet, silver: &LabeledSet, n_topics: usize) -> Result<EvalReport> {
    let acc = accuracy(pred, silver)?;
    let (baseline_topic, baseline_accuracy) = majority_baseline(silver)?;
    let confusion = confusion(pred, silver, n_topics)?;
    let n = confusion.n_topics();
    let per_topic_recall = (0..n)
        .map(|k| (confusion.row_total(k) > 0).then(|| confusion.row_normalized[k][k]))
        .collect();
    let mut label_histograms = BTreeMap::new();
    label_histograms.insert(silver.source.as_str().to_string(), histogram(&silver.labels, n));
    label_histograms.insert(pred.source.as_str().to_string(), histogram(&pred.labels, n));
    Ok(EvalReport {
        n_docs: pred.len(),
        n_degenerate: pred.degenerate.iter().filter(|d| **d).count(),
        accuracy: acc,
        baseline_topic,
        baseline_accuracy,
        per_topic_recall,
        confusion,
        label_histograms,
    })
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn topic_header(n: usize, names: &[String]) -> Vec<String> {
    (0..n)
        .map(|k| names.get(k).cloned().unwrap_or_else(|| format!("t{k}")))
        .collect()
}

impl EvalReport {
    /// Row-normalized percentages; absent silver classes render as blank cells.
    pub fn confusion_csv(&self, names: &[String]) -> String {
        let n = self.confusion.n_topics();
        let header = topic_header(n, names);
        let mut out = format!("silver\\predicted,{}\n", header.join(","));
        for (k, row) in self.confusion.row_normalized.iter().enumerate() {
            let present = self.confusion.row_total(k) > 0;
            let cells: Vec<String> = row
                .iter()
                .map(|&x| if present { pct(x) } else { String::new() })
                .collect();
            writeln!(out, "{},{}", header[k], cells.join(",")).unwrap();
        }
        out
    }

    pub fn recall_csv(&self, names: &[String]) -> String {
        let header = topic_header(self.confusion.n_topics(), names);
        let mut out = String::from("topic_id,topic,silver_count,recall_pct\n");
        for (k, r) in self.per_topic_recall.iter().enumerate() {
            writeln!(
                out,
                "{k},{},{},{}",
                header[k],
                self.confusion.row_total(k),
                r.map(pct).unwrap_or_default()
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Per-segment-index label distributions over a set of calls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftTimeline {
    pub n_topics: usize,
    /// segment index → fraction of calls (having that index) per topic.
    pub rows: BTreeMap<u64, Vec<f64>>,
    /// segment index → number of calls contributing.
    pub support: BTreeMap<u64, u64>,
    /// Label distribution over every selected segment.
    pub overall: Vec<f64>,
}

impl DriftTimeline {
    /// `segment_index,topic_id,fraction` with every topic listed per index.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("segment_index,topic_id,fraction\n");
        for (idx, dist) in &self.rows {
            for (k, f) in dist.iter().enumerate() {
                writeln!(out, "{idx},{k},{f:.6}").unwrap();
            }
        }
        out
    }
}

/// Label distribution per segment index across the selected calls (all
/// calls when `call_filter` is `None`).
pub fn drift_timeline(
    labels: &LabeledSet,
    segs: &[SegmentDoc],
    call_filter: Option<&BTreeSet<String>>,
    n_topics: usize,
) -> Result<DriftTimeline> {
    let by_id: HashMap<&str, &SegmentDoc> = segs.iter().map(|s| (s.doc_id.as_str(), s)).collect();
    let n = labels.max_label().map_or(0, |m| m + 1).max(n_topics);
    let mut counts: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let mut overall = vec![0u64; n];
    for (id, &label) in labels.doc_ids.iter().zip(&labels.labels) {
        let seg = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::UnresolvableDocId(id.clone()))?;
        if call_filter.is_some_and(|f| !f.contains(&seg.call_id)) {
            continue;
        }
        counts.entry(seg.segment_index).or_insert_with(|| vec![0; n])[label] += 1;
        overall[label] += 1;
    }
    let normalize = |row: &[u64]| -> Vec<f64> {
        let total: u64 = row.iter().sum();
        row.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
    };
    Ok(DriftTimeline {
        n_topics: n,
        support: counts.iter().map(|(k, v)| (*k, v.iter().sum())).collect(),
        rows: counts.iter().map(|(k, v)| (*k, normalize(v))).collect(),
        overall: normalize(&overall),
    })
}

/// Fraction of calls per assigned label; `assigned` is keyed by call id.
pub fn prompt_histogram(assigned: &LabeledSet) -> BTreeMap<usize, f64> {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for &l in &assigned.labels {
        *counts.entry(l).or_default() += 1;
    }
    let total = assigned.len() as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / total)).collect()
}
