use std::collections::BTreeSet;

use sttopic::eval::LabelSource;
use sttopic::nmf::{nmf_transform, NmfConfig};
use sttopic::pipeline::{fit_model, label_docs, transform_config};
use sttopic::synth::planted_docs;
use sttopic::textprep::{vectorize, VocabConfig};
use sttopic::topics::{assign_labels, load_model, save_model, top_terms};

fn planted_fit() -> (sttopic::synth::PlantedCorpus, sttopic::pipeline::FittedModel) {
    let corpus = planted_docs(300, 4, 15, 40, 3);
    let vocab = VocabConfig {
        max_df_ratio: 1.0,
        ..VocabConfig::default()
    };
    let nmf = NmfConfig {
        n_topics: 4,
        seed: 3,
        ..NmfConfig::default()
    };
    let fitted = fit_model(&corpus.docs, &vocab, &nmf, None).unwrap();
    (corpus, fitted)
}

#[test]
fn transform_of_training_rows_keeps_argmax() {
    let (corpus, fitted) = planted_fit();
    let train: Vec<usize> = assign_labels(&fitted.fit.w).iter().map(|l| l.topic_id).collect();
    let v = vectorize(&corpus.docs, fitted.model.vocab()).unwrap();
    let w = nmf_transform(&v, fitted.model.h(), &transform_config(&fitted.model)).unwrap();
    let inferred: Vec<usize> = assign_labels(&w).iter().map(|l| l.topic_id).collect();
    assert_eq!(inferred, train);
}

#[test]
fn top_terms_stay_inside_planted_vocabulary() {
    let (corpus, fitted) = planted_fit();
    for k in 0..4 {
        let summary = top_terms(&fitted.model, k, 10).unwrap();
        let terms: BTreeSet<&str> = summary.top_terms.iter().map(|(t, _)| t.as_str()).collect();
        let owner = corpus
            .vocabularies
            .iter()
            .find(|vocab| vocab.iter().any(|t| terms.contains(t.as_str())))
            .expect("some planted vocabulary");
        for t in &terms {
            assert!(owner.iter().any(|o| o == t), "topic {k}: {t} outside its planted set");
        }
    }
}

#[test]
fn saved_model_labels_like_the_fitted_one() {
    let (corpus, fitted) = planted_fit();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&fitted.model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    let (wa, a) = label_docs(&corpus.docs, &fitted.model, LabelSource::Silver).unwrap();
    let (wb, b) = label_docs(&corpus.docs, &loaded, LabelSource::Silver).unwrap();
    assert_eq!(a, b);
    assert_eq!(wa, wb);
}

#[test]
fn training_trace_never_rises() {
    let (_, fitted) = planted_fit();
    let trace = &fitted.fit.trace;
    assert!(trace.len() >= 2);
    assert!(trace.windows(2).all(|p| p[1] <= p[0] + 1e-9));
}
