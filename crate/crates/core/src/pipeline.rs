//! Fit and label steps shared by the command line and the demo.

use crate::corpus::SegmentDoc;
use crate::error::Result;
use crate::eval::{LabelSource, LabeledSet};
use crate::nmf::{nmf_train, nmf_transform, DocTopicMatrix, Init, NmfConfig, NmfFit};
use crate::textprep::{build_vocabulary, vectorize, VocabConfig};
use crate::topics::{assign_labels, ModelConfig, TopicModel};

pub struct FittedModel {
    pub model: TopicModel,
    pub fit: NmfFit,
}

/// Builds the vocabulary on `docs`, featurizes them and learns the topics.
pub fn fit_model(
    docs: &[SegmentDoc],
    vocab_cfg: &VocabConfig,
    nmf_cfg: &NmfConfig,
    names: Option<Vec<String>>,
) -> Result<FittedModel> {
    let vocab = build_vocabulary(docs, vocab_cfg)?;
    let v = vectorize(docs, &vocab)?;
    let fit = nmf_train(&v, nmf_cfg)?;
    let model = TopicModel::new(vocab, fit.h.clone(), names, ModelConfig::new(*nmf_cfg, *vocab_cfg))?;
    Ok(FittedModel { model, fit })
}

/// Inference settings used against a saved model: the training iteration
/// budget and seed, with a seeded-random start for `W′`.
pub fn transform_config(model: &TopicModel) -> NmfConfig {
    NmfConfig {
        init: Init::SeededRandom,
        ..model.config().nmf
    }
}

/// Topic scores and argmax labels for `docs` under a fixed model.
pub fn label_docs(docs: &[SegmentDoc], model: &TopicModel, source: LabelSource) -> Result<(DocTopicMatrix, LabeledSet)> {
    let v = vectorize(docs, model.vocab())?;
    let w = nmf_transform(&v, model.h(), &transform_config(model))?;
    let labels = assign_labels(&w);
    let set = LabeledSet::from_assignments(&w.row_ids, &labels, source)?;
    Ok((w, set))
}
