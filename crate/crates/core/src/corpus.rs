//! Utterance ingestion, per-minute segmentation and call-level sampling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const DEFAULT_WINDOW_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub call_id: String,
    pub speaker: String,
    pub start_s: f64,
    pub end_s: f64,
    /// Target-language text; empty for untranslated stretches.
    pub translation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<Vec<String>>,
}

/// One fixed-duration window of a call, treated as a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDoc {
    pub doc_id: String,
    pub call_id: String,
    pub segment_index: u64,
    pub text: String,
}

impl SegmentDoc {
    pub fn new(call_id: &str, segment_index: u64, text: String) -> Self {
        SegmentDoc {
            doc_id: format!("{call_id}#{segment_index}"),
            call_id: call_id.to_string(),
            segment_index,
            text,
        }
    }
}

/// Splits a `<call_id>#<segment_index>` doc id. The call id may itself contain `#`.
pub fn parse_doc_id(doc_id: &str) -> Option<(&str, u64)> {
    let (call, idx) = doc_id.rsplit_once('#')?;
    if call.is_empty() {
        return None;
    }
    Some((call, idx.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub name: String,
    pub call_ids: BTreeSet<String>,
    pub total_seconds: f64,
    pub seed: u64,
}

fn required<'a>(obj: &'a serde_json::Map<String, Value>, line: usize, field: &'static str) -> Result<&'a Value> {
    obj.get(field).ok_or(Error::MissingField { line, field })
}

fn string_field(obj: &serde_json::Map<String, Value>, line: usize, field: &'static str) -> Result<String> {
    required(obj, line, field)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| Error::InvalidField {
            line,
            field,
            message: "expected a string".into(),
        })
}

fn number_field(obj: &serde_json::Map<String, Value>, line: usize, field: &'static str) -> Result<f64> {
    let v = required(obj, line, field)?
        .as_f64()
        .ok_or_else(|| Error::InvalidField {
            line,
            field,
            message: "expected a number".into(),
        })?;
    if !v.is_finite() {
        return Err(Error::InvalidField {
            line,
            field,
            message: "must be finite".into(),
        });
    }
    Ok(v)
}

/// Parses one JSON-lines utterance record; `line` is 1-based and used in errors.
pub fn parse_utterance(text: &str, line: usize) -> Result<Utterance> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Parse {
        line,
        message: "expected a JSON object".into(),
    })?;

    let call_id = string_field(obj, line, "call_id")?;
    if call_id.is_empty() {
        return Err(Error::InvalidField {
            line,
            field: "call_id",
            message: "must be nonempty".into(),
        });
    }
    let speaker = string_field(obj, line, "speaker")?;
    let start_s = number_field(obj, line, "start_s")?;
    let end_s = number_field(obj, line, "end_s")?;
    if start_s < 0.0 {
        return Err(Error::InvalidField {
            line,
            field: "start_s",
            message: "must be >= 0".into(),
        });
    }
    if end_s <= start_s {
        return Err(Error::InvalidField {
            line,
            field: "end_s",
            message: format!("must exceed start_s ({start_s})"),
        });
    }
    let translation = string_field(obj, line, "translation")?;
    let references = match obj.get("references") {
        None | Some(Value::Null) => None,
        Some(Value::Array(items)) => Some(
            items
                .iter()
                .map(|v| {
                    v.as_str().map(str::to_string).ok_or_else(|| Error::InvalidField {
                        line,
                        field: "references",
                        message: "expected an array of strings".into(),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        Some(_) => {
            return Err(Error::InvalidField {
                line,
                field: "references",
                message: "expected an array of strings".into(),
            })
        }
    };

    Ok(Utterance {
        call_id,
        speaker,
        start_s,
        end_s,
        translation,
        references,
    })
}

/// Parses JSON-lines text. Blank lines are skipped but still counted for line numbers.
pub fn parse_corpus(text: &str) -> Result<Vec<Utterance>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_utterance(l, i + 1))
        .collect()
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Utterance>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("in-memory serialization");
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

pub fn read_segments(path: impl AsRef<Path>) -> Result<Vec<SegmentDoc>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: SegmentDoc = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::InvalidField {
                line: i + 1,
                field: "doc_id",
                message: format!("duplicate doc id `{}`", doc.doc_id),
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Groups utterances into per-call windows of `window_s` seconds.
///
/// An utterance belongs wholly to window `floor(start_s / window_s)`. Empty
/// windows are omitted. Calls appear in order of first occurrence, windows in
/// increasing index, and member texts are joined by single spaces in
/// `(start_s, speaker)` order. Empty translations contribute no text.
pub fn segment_calls(utts: &[Utterance], window_s: f64) -> Result<Vec<SegmentDoc>> {
    if !(window_s > 0.0 && window_s.is_finite()) {
        return Err(Error::InvalidConfig(format!("window must be positive, got {window_s}")));
    }

    let mut call_order: Vec<&str> = Vec::new();
    let mut by_call: HashMap<&str, BTreeMap<u64, Vec<&Utterance>>> = HashMap::new();
    for u in utts {
        let windows = by_call.entry(&u.call_id).or_insert_with(|| {
            call_order.push(&u.call_id);
            BTreeMap::new()
        });
        let index = (u.start_s / window_s).floor() as u64;
        windows.entry(index).or_default().push(u);
    }

    let mut docs = Vec::new();
    for call in call_order {
        for (index, mut members) in by_call.remove(call).unwrap_or_default() {
            members.sort_by(|a, b| {
                a.start_s
                    .total_cmp(&b.start_s)
                    .then_with(|| a.speaker.cmp(&b.speaker))
            });
            let text = members
                .iter()
                .map(|u| u.translation.trim())
                .filter(|t| !t.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            docs.push(SegmentDoc::new(call, index, text));
        }
    }
    Ok(docs)
}

/// Per-call duration, taken as the latest utterance end time. Calls are
/// listed in order of first occurrence.
pub fn call_durations(utts: &[Utterance]) -> Vec<(String, f64)> {
    let mut order: Vec<String> = Vec::new();
    let mut ends: HashMap<&str, f64> = HashMap::new();
    for u in utts {
        match ends.get_mut(u.call_id.as_str()) {
            Some(end) => *end = end.max(u.end_s),
            None => {
                order.push(u.call_id.clone());
                ends.insert(&u.call_id, u.end_s);
            }
        }
    }
    order
        .into_iter()
        .map(|c| {
            let d = ends[c.as_str()];
            (c, d)
        })
        .collect()
}

fn shuffled_calls<'a>(calls: &'a [(String, f64)], seed: u64) -> Vec<&'a (String, f64)> {
    let mut order: Vec<&(String, f64)> = calls.iter().collect();
    SeededRng::new(seed).shuffle(&mut order);
    order
}

fn check_available(calls: &[(String, f64)], target_s: f64) -> Result<()> {
    let available: f64 = calls.iter().map(|(_, d)| d).sum();
    if available < target_s {
        return Err(Error::InsufficientDuration {
            target_s,
            available_s: available,
            shortfall_s: target_s - available,
        });
    }
    Ok(())
}

/// Shuffles the calls with `seed` and takes the shortest prefix whose total
/// duration reaches `target_seconds`. Splits drawn with one seed are nested:
/// a smaller target always yields a subset of a larger one.
pub fn sample_split(
    name: &str,
    calls: &[(String, f64)],
    target_seconds: f64,
    seed: u64,
) -> Result<CorpusSplit> {
    check_available(calls, target_seconds)?;
    let mut split = CorpusSplit {
        name: name.to_string(),
        call_ids: BTreeSet::new(),
        total_seconds: 0.0,
        seed,
    };
    for (call, dur) in shuffled_calls(calls, seed) {
        if split.total_seconds >= target_seconds {
            break;
        }
        split.call_ids.insert(call.clone());
        split.total_seconds += dur;
    }
    Ok(split)
}

/// Consecutive, non-overlapping chunks of one shuffled call order, e.g. a
/// training split followed by a held-out evaluation split.
pub fn sample_disjoint_splits(
    calls: &[(String, f64)],
    targets: &[(String, f64)],
    seed: u64,
) -> Result<Vec<CorpusSplit>> {
    check_available(calls, targets.iter().map(|(_, t)| t).sum())?;
    let order = shuffled_calls(calls, seed);
    let mut cursor = order.iter();
    let mut splits = Vec::with_capacity(targets.len());
    for (name, target) in targets {
        let mut split = CorpusSplit {
            name: name.clone(),
            call_ids: BTreeSet::new(),
            total_seconds: 0.0,
            seed,
        };
        while split.total_seconds < *target {
            // The per-target totals may each overshoot, so a later chunk can
            // still run dry even though the overall sum was sufficient.
            let (call, dur) = cursor.next().ok_or_else(|| {
                let used: f64 = splits.iter().map(|s: &CorpusSplit| s.total_seconds).sum::<f64>()
                    + split.total_seconds;
                let available: f64 = calls.iter().map(|(_, d)| d).sum();
                Error::InsufficientDuration {
                    target_s: *target,
                    available_s: available - used + split.total_seconds,
                    shortfall_s: target - split.total_seconds,
                }
            })?;
            split.call_ids.insert(call.clone());
            split.total_seconds += dur;
        }
        splits.push(split);
    }
    Ok(splits)
}
