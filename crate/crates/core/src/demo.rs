//! End-to-end run on a generated corpus: segmentation, splitting, topic
//! fitting, silver labeling, a translation-quality ladder, and every
//! evaluation table, all written under one output directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::bleu::corpus_bleu;
use crate::corpus::{call_durations, sample_disjoint_splits, segment_calls, write_jsonl, SegmentDoc, DEFAULT_WINDOW_S};
use crate::degrade::{degrade_corpus, NoiseSpec};
use crate::error::{Error, Result};
use crate::eval::{drift_timeline, evaluate, majority_baseline, prompt_histogram, LabelSource, LabeledSet};
use crate::nmf::NmfConfig;
use crate::pipeline::{fit_model, label_docs};
use crate::synth::{demo_calls, DemoCorpusConfig, N_PROMPTS};
use crate::textprep::VocabConfig;
use crate::topics::{assign_labels, save_model, top_terms};

/// `(p_drop, p_sub)` levels, from clean text to heavily corrupted.
pub const NOISE_LADDER: [(f64, f64); 6] = [
    (0.0, 0.0),
    (0.0, 0.1),
    (0.2, 0.1),
    (0.4, 0.1),
    (0.6, 0.1),
    (0.8, 0.1),
];

/// The ladder level reported in detail (confusion matrix and recall).
pub const DETAIL_LEVEL: (f64, f64) = (0.4, 0.1);

pub const TRAIN_SECONDS: f64 = 18.0 * 3600.0;
pub const EVAL_SECONDS: f64 = 24.0 * 3600.0;

/// Prompt whose calls get a drift timeline.
pub const DRIFT_PROMPT: &str = "religion";

#[derive(Debug, Clone, Serialize)]
pub struct LadderPoint {
    pub name: String,
    pub p_drop: f64,
    pub p_sub: f64,
    pub bleu: f64,
    pub accuracy: f64,
    pub n_degenerate: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSummary {
    pub seed: u64,
    pub n_calls: usize,
    pub n_segments: usize,
    pub n_train_docs: usize,
    pub n_eval_docs: usize,
    pub model_dims: [usize; 2],
    pub nmf_iterations: usize,
    pub final_objective: f64,
    /// Agreement between training argmax labels and the generator's topics
    /// under the naming map.
    pub planted_agreement: f64,
    pub topic_names: Vec<String>,
    pub baseline_topic: usize,
    pub baseline_accuracy: f64,
    pub ladder: Vec<LadderPoint>,
}

impl DemoSummary {
    pub fn point(&self, p_drop: f64, p_sub: f64) -> Option<&LadderPoint> {
        self.ladder.iter().find(|p| p.p_drop == p_drop && p.p_sub == p_sub)
    }
}

fn level_name(p_drop: f64, p_sub: f64) -> String {
    format!("drop{:02}_sub{:02}", (p_drop * 100.0).round(), (p_sub * 100.0).round())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Greedy one-to-one naming of model topics by their overlap with planted
/// topics on the training documents.
fn name_topics(labels: &[usize], planted: &[usize], names: &[String], n_topics: usize) -> Vec<String> {
    let mut overlap = vec![vec![0usize; names.len()]; n_topics];
    for (&l, &p) in labels.iter().zip(planted) {
        overlap[l][p] += 1;
    }
    let mut cells: Vec<(usize, usize, usize)> = overlap
        .iter()
        .enumerate()
        .flat_map(|(k, row)| row.iter().enumerate().map(move |(p, &c)| (c, k, p)))
        .collect();
    cells.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assigned: Vec<Option<String>> = vec![None; n_topics];
    let mut used = BTreeSet::new();
    for (_, k, p) in cells {
        if assigned[k].is_none() && !used.contains(&p) {
            assigned[k] = Some(names[p].clone());
            used.insert(p);
        }
    }
    assigned
        .into_iter()
        .enumerate()
        .map(|(k, n)| n.unwrap_or_else(|| format!("t{k}")))
        .collect()
}

/// Generates the demo corpus for `seed` and runs the whole pipeline into `out_dir`.
pub fn run_demo(out_dir: &Path, seed: u64) -> Result<DemoSummary> {
    run_demo_with(out_dir, seed, &DemoCorpusConfig::default())
}

pub fn run_demo_with(out_dir: &Path, seed: u64, corpus_cfg: &DemoCorpusConfig) -> Result<DemoSummary> {
    fs::create_dir_all(out_dir.join("labels")).map_err(|e| Error::io(out_dir, e))?;

    let corpus = demo_calls(corpus_cfg, seed);
    write_jsonl(out_dir.join("corpus.jsonl"), &corpus.utterances)?;

    let segments = segment_calls(&corpus.utterances, DEFAULT_WINDOW_S)?;
    write_jsonl(out_dir.join("segments.jsonl"), &segments)?;

    let durations = call_durations(&corpus.utterances);
    let splits = sample_disjoint_splits(
        &durations,
        &[("train".into(), TRAIN_SECONDS), ("eval".into(), EVAL_SECONDS)],
        seed,
    )?;
    write(
        &out_dir.join("splits.json"),
        serde_json::to_string_pretty(&splits).expect("splits serialize"),
    )?;
    let pick = |ids: &BTreeSet<String>| -> Vec<SegmentDoc> {
        segments.iter().filter(|d| ids.contains(&d.call_id)).cloned().collect()
    };
    let train = pick(&splits[0].call_ids);
    let eval_docs = pick(&splits[1].call_ids);

    let nmf_cfg = NmfConfig { seed, ..NmfConfig::default() };
    let fitted = fit_model(&train, &VocabConfig::default(), &nmf_cfg, None)?;

    let planted: BTreeMap<&str, usize> = corpus.planted.iter().map(|(d, k)| (d.as_str(), *k)).collect();
    let train_labels: Vec<usize> = assign_labels(&fitted.fit.w).iter().map(|l| l.topic_id).collect();
    let train_planted: Vec<usize> = train.iter().map(|d| planted[d.doc_id.as_str()]).collect();
    let lexicon_names: Vec<String> = corpus.lexicons.iter().map(|l| l.name.clone()).collect();
    let names = name_topics(&train_labels, &train_planted, &lexicon_names, nmf_cfg.n_topics);
    let model = fitted.model.with_names(Some(names.clone()))?;
    save_model(&model, out_dir.join("model.json"))?;

    let planted_agreement = {
        let hits = train_labels
            .iter()
            .zip(&train_planted)
            .filter(|(&l, &p)| names[l] == lexicon_names[p])
            .count();
        hits as f64 / train.len() as f64
    };

    let mut topics_csv = String::from("topic_id,name,top_terms\n");
    for k in 0..model.n_topics() {
        let terms = match top_terms(&model, k, 10.min(model.vocab().len())) {
            Ok(s) => s.top_terms.into_iter().map(|(t, _)| t).collect::<Vec<_>>().join(" "),
            Err(Error::DegenerateTopic(_)) => String::new(),
            Err(e) => return Err(e),
        };
        writeln!(topics_csv, "{k},{},{terms}", names[k]).unwrap();
    }
    write(&out_dir.join("topics.csv"), topics_csv)?;

    let (_, silver) = label_docs(&eval_docs, &model, LabelSource::Silver)?;
    silver.save(out_dir.join("silver_labels.jsonl"))?;
    let (baseline_topic, baseline_accuracy) = majority_baseline(&silver)?;

    let gold_refs: Vec<Vec<String>> = eval_docs.iter().map(|d| vec![d.text.clone()]).collect();
    let mut ladder = Vec::with_capacity(NOISE_LADDER.len());
    let mut ladder_csv = String::from("level,p_drop,p_sub,bleu,accuracy_pct,baseline_pct,degenerate\n");
    for (p_drop, p_sub) in NOISE_LADDER {
        let name = level_name(p_drop, p_sub);
        let noisy = degrade_corpus(&eval_docs, &NoiseSpec::new(p_drop, p_sub, seed))?;
        let hyps: Vec<String> = noisy.iter().map(|d| d.text.clone()).collect();
        let bleu = corpus_bleu(&hyps, &gold_refs, false)?;
        let (_, pred) = label_docs(&noisy, &model, LabelSource::System)?;
        pred.save(out_dir.join("labels").join(format!("{name}.jsonl")))?;
        let report = evaluate(&pred, &silver, model.n_topics())?;

        if (p_drop, p_sub) == DETAIL_LEVEL {
            write(&out_dir.join("report.json"), report.to_json())?;
            write(&out_dir.join("confusion.csv"), report.confusion_csv(&names))?;
            write(&out_dir.join("recall.csv"), report.recall_csv(&names))?;
        }
        writeln!(
            ladder_csv,
            "{name},{p_drop:.2},{p_sub:.2},{:.2},{:.1},{:.1},{}",
            bleu.score,
            100.0 * report.accuracy,
            100.0 * baseline_accuracy,
            report.n_degenerate
        )
        .unwrap();
        ladder.push(LadderPoint {
            name,
            p_drop,
            p_sub,
            bleu: bleu.score,
            accuracy: report.accuracy,
            n_degenerate: report.n_degenerate,
        });
    }
    write(&out_dir.join("noise_ladder.csv"), ladder_csv)?;

    let drift_prompt = lexicon_names
        .iter()
        .position(|n| n == DRIFT_PROMPT)
        .expect("drift prompt is a demo topic");
    let drift_calls: BTreeSet<String> = corpus
        .prompts
        .iter()
        .filter(|(c, p)| *p == drift_prompt && splits[1].call_ids.contains(c))
        .map(|(c, _)| c.clone())
        .collect();
    let timeline = drift_timeline(&silver, &eval_docs, Some(&drift_calls), model.n_topics())?;
    write(&out_dir.join("timeline.csv"), timeline.to_csv())?;

    let assigned = LabeledSet::new(
        corpus.prompts.iter().map(|(c, _)| c.clone()).collect(),
        corpus.prompts.iter().map(|(_, p)| *p).collect(),
        LabelSource::AssignedPrompt,
    )?;
    let mut prompts_csv = String::from("prompt,pct_calls\n");
    let hist = prompt_histogram(&assigned);
    for p in 0..N_PROMPTS {
        let frac = hist.get(&p).copied().unwrap_or(0.0);
        writeln!(prompts_csv, "{},{:.1}", lexicon_names[p], 100.0 * frac).unwrap();
    }
    write(&out_dir.join("prompt_histogram.csv"), prompts_csv)?;

    let summary = DemoSummary {
        seed,
        n_calls: corpus.prompts.len(),
        n_segments: segments.len(),
        n_train_docs: train.len(),
        n_eval_docs: eval_docs.len(),
        model_dims: [model.n_topics(), model.vocab().len()],
        nmf_iterations: fitted.fit.n_iter(),
        final_objective: *fitted.fit.trace.last().expect("trace is nonempty"),
        planted_agreement,
        topic_names: names,
        baseline_topic,
        baseline_accuracy,
        ladder,
    };
    write(
        &out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(summary)
}
