//! Synthetic corpora with known (planted) topics.
//!
//! Two generators: [`planted_docs`], a bare bag-of-words corpus with disjoint
//! topic vocabularies, and [`demo_calls`], a conversation-shaped corpus of
//! timed utterances with assigned prompts, filler speech and topic drift
//! across minutes.

use crate::corpus::{SegmentDoc, Utterance};
use crate::rng::SeededRng;
use crate::textprep::is_stopword;

const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "ch",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Deterministic pronounceable pseudo-word; distinct `(group, index)` pairs
/// give distinct words.
pub fn pseudo_word(group: usize, index: usize) -> String {
    let syllable = |n: usize| format!("{}{}", ONSETS[n % 16], VOWELS[(n / 16) % 5]);
    let mut word = syllable(group);
    let mut rest = index;
    loop {
        word.push_str(&syllable(rest % 80));
        rest /= 80;
        if rest == 0 {
            break;
        }
        rest -= 1;
    }
    word.push('x');
    debug_assert!(!is_stopword(&word));
    word
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub docs: Vec<SegmentDoc>,
    /// Ground-truth topic of each document.
    pub topics: Vec<usize>,
    pub vocabularies: Vec<Vec<String>>,
}

/// Documents each drawn from one uniformly chosen topic, with tokens
/// sampled uniformly from that topic's private vocabulary.
pub fn planted_docs(
    n_docs: usize,
    n_topics: usize,
    terms_per_topic: usize,
    tokens_per_doc: usize,
    seed: u64,
) -> PlantedCorpus {
    let vocabularies: Vec<Vec<String>> = (0..n_topics)
        .map(|k| (0..terms_per_topic).map(|j| pseudo_word(k, j)).collect())
        .collect();
    let mut rng = SeededRng::new(seed);
    let mut docs = Vec::with_capacity(n_docs);
    let mut topics = Vec::with_capacity(n_docs);
    for i in 0..n_docs {
        let k = rng.below(n_topics);
        let words: Vec<&str> = (0..tokens_per_doc)
            .map(|_| vocabularies[k][rng.below(terms_per_topic)].as_str())
            .collect();
        docs.push(SegmentDoc::new("planted", i as u64, words.join(" ")));
        topics.push(k);
    }
    PlantedCorpus {
        docs,
        topics,
        vocabularies,
    }
}

/// A conversation topic: a few natural head words followed by a long tail
/// of pseudo-words, sampled with Zipf-like weights.
#[derive(Debug, Clone)]
pub struct TopicLexicon {
    pub name: String,
    pub terms: Vec<String>,
    cumulative: Vec<f64>,
}

impl TopicLexicon {
    fn new(name: &str, group: usize, head: &[&str], tail: usize, exponent: f64) -> Self {
        let mut terms: Vec<String> = head.iter().map(|s| s.to_string()).collect();
        terms.extend((0..tail).map(|j| pseudo_word(group, j)));
        let mut acc = 0.0;
        let cumulative = (0..terms.len())
            .map(|r| {
                acc += 1.0 / ((r + 1) as f64).powf(exponent);
                acc
            })
            .collect();
        TopicLexicon {
            name: name.to_string(),
            terms,
            cumulative,
        }
    }

    fn sample(&self, rng: &mut SeededRng) -> &str {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = rng.unit() * total;
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.terms.len() - 1);
        &self.terms[i]
    }
}

const FILLER: [&str; 40] = [
    "yeah", "know", "like", "think", "really", "uh", "um", "oh", "okay", "so", "well", "i",
    "the", "a", "and", "to", "it", "that", "is", "you", "of", "in", "we", "they", "but",
    "just", "mean", "right", "good", "people", "lot", "things", "have", "do", "was", "not",
    "there", "what", "because", "very",
];

/// Parameters of the conversational demo corpus.
#[derive(Debug, Clone)]
pub struct DemoCorpusConfig {
    pub n_calls: usize,
    pub min_minutes: usize,
    pub max_minutes: usize,
    pub utterances_per_minute: (usize, usize),
    pub tokens_per_utterance: (usize, usize),
    /// Probability that a token carries topic content rather than filler.
    pub content_rate: f64,
    /// Probability that a content token comes from a random other topic.
    pub off_topic_rate: f64,
    /// Probability that minute 0 is small talk.
    pub intro_rate: f64,
    /// Later minutes: probability of staying on the assigned prompt; the
    /// rest drift to family/misc chat or, with `stray_rate`, elsewhere.
    pub on_prompt_rate: f64,
    pub stray_rate: f64,
    pub tail_terms: usize,
    pub zipf_exponent: f64,
    /// Pseudo-words in the background lexicon, after the filler head words.
    pub generic_terms: usize,
}

impl Default for DemoCorpusConfig {
    fn default() -> Self {
        DemoCorpusConfig {
            n_calls: 240,
            min_minutes: 8,
            max_minutes: 16,
            utterances_per_minute: (5, 9),
            tokens_per_utterance: (6, 16),
            content_rate: 0.12,
            off_topic_rate: 0.1,
            intro_rate: 0.7,
            on_prompt_rate: 0.4,
            stray_rate: 0.05,
            tail_terms: 120,
            zipf_exponent: 0.8,
            generic_terms: 800,
        }
    }
}

/// Index of the small-talk topic in [`demo_lexicons`].
pub const INTRO_TOPIC: usize = 8;
/// Index of the catch-all family/misc topic in [`demo_lexicons`].
pub const FAMILY_TOPIC: usize = 9;
/// Pseudo-word group of the background lexicon.
const BACKGROUND_GROUP: usize = 10;
/// Topics 0..8 can be assigned as call prompts.
pub const N_PROMPTS: usize = 8;

pub fn demo_lexicons(cfg: &DemoCorpusConfig) -> Vec<TopicLexicon> {
    let specs: [(&str, &[&str]); 10] = [
        ("music", &["music", "listen", "dance", "listening", "hear", "song", "band", "concert"]),
        ("religion", &["god", "church", "religion", "believe", "pray", "faith", "bible", "religious"]),
        ("pets", &["dog", "cat", "pets", "animals", "puppy", "vet", "feed", "walks"]),
        ("weather", &["weather", "rain", "cold", "snow", "hot", "sunny", "winter", "summer"]),
        ("sports", &["football", "soccer", "team", "game", "play", "players", "match", "sport"]),
        ("food", &["food", "eat", "cook", "restaurant", "dinner", "rice", "chicken", "recipe"]),
        ("travel", &["travel", "trip", "country", "visit", "airport", "vacation", "city", "plane"]),
        ("dating", &["date", "boyfriend", "girlfriend", "relationship", "love", "married", "dating", "single"]),
        ("intro-misc", &["hello", "hi", "topic", "calling", "nice", "speaking", "spanish", "talk"]),
        ("family-misc", &["family", "kids", "children", "mother", "father", "house", "work", "school"]),
    ];
    specs
        .iter()
        .enumerate()
        .map(|(g, (name, head))| TopicLexicon::new(name, g, head, cfg.tail_terms, cfg.zipf_exponent))
        .collect()
}

#[derive(Debug, Clone)]
pub struct DemoCorpus {
    pub utterances: Vec<Utterance>,
    pub lexicons: Vec<TopicLexicon>,
    /// `(call_id, assigned prompt topic)` in generation order.
    pub prompts: Vec<(String, usize)>,
    /// `(doc_id, planted topic)` for every generated minute.
    pub planted: Vec<(String, usize)>,
}

fn between(rng: &mut SeededRng, (lo, hi): (usize, usize)) -> usize {
    lo + rng.below(hi - lo + 1)
}

fn sentence(words: &[&str]) -> String {
    let mut s = words.join(" ");
    if let Some(first) = s.get(..1) {
        let upper = first.to_uppercase();
        s.replace_range(..1, &upper);
    }
    s.push('.');
    s
}

/// Calls with one-minute topical structure: each call gets a prompt, minute
/// 0 is usually small talk, later minutes stay on the prompt or drift.
pub fn demo_calls(cfg: &DemoCorpusConfig, seed: u64) -> DemoCorpus {
    let lexicons = demo_lexicons(cfg);
    let background = TopicLexicon::new("background", BACKGROUND_GROUP, &FILLER, cfg.generic_terms, 1.0);
    let mut rng = SeededRng::new(seed);
    let mut utterances = Vec::new();
    let mut prompts = Vec::with_capacity(cfg.n_calls);
    let mut planted = Vec::new();

    for c in 0..cfg.n_calls {
        let call_id = format!("call{c:04}");
        let prompt = rng.below(N_PROMPTS);
        prompts.push((call_id.clone(), prompt));
        let minutes = between(&mut rng, (cfg.min_minutes, cfg.max_minutes));
        // the last minute is partial
        let last_len = 15.0 + 45.0 * rng.unit();

        for m in 0..minutes {
            let topic = if m == 0 {
                if rng.unit() < cfg.intro_rate { INTRO_TOPIC } else { prompt }
            } else {
                let u = rng.unit();
                if u < cfg.on_prompt_rate {
                    prompt
                } else if u < 1.0 - cfg.stray_rate {
                    FAMILY_TOPIC
                } else {
                    rng.below(lexicons.len())
                }
            };
            planted.push((format!("{call_id}#{m}"), topic));

            let span = if m + 1 == minutes { last_len } else { 60.0 };
            let n_utts = between(&mut rng, cfg.utterances_per_minute);
            let mut starts: Vec<f64> = (0..n_utts).map(|_| rng.unit() * (span - 1.0)).collect();
            starts.sort_by(f64::total_cmp);
            for (u_idx, start) in starts.into_iter().enumerate() {
                let n_tok = between(&mut rng, cfg.tokens_per_utterance);
                let words: Vec<&str> = (0..n_tok)
                    .map(|_| {
                        if rng.unit() < cfg.content_rate {
                            let k = if rng.unit() < cfg.off_topic_rate {
                                rng.below(lexicons.len())
                            } else {
                                topic
                            };
                            lexicons[k].sample(&mut rng)
                        } else {
                            background.sample(&mut rng)
                        }
                    })
                    .collect();
                let start_s = ((60 * m) as f64 + start) * 100.0;
                let start_s = start_s.round() / 100.0;
                let duration = (0.3 * n_tok as f64).max(0.5);
                utterances.push(Utterance {
                    call_id: call_id.clone(),
                    speaker: if u_idx % 2 == 0 { "A".into() } else { "B".into() },
                    start_s,
                    end_s: ((start_s + duration) * 100.0).round() / 100.0,
                    translation: sentence(&words),
                    references: None,
                });
            }
        }
    }

    DemoCorpus {
        utterances,
        lexicons,
        prompts,
        planted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::segment_calls;
    use std::collections::BTreeSet;

    #[test]
    fn pseudo_words_are_distinct() {
        let words: BTreeSet<String> = (0..10)
            .flat_map(|g| (0..500).map(move |j| pseudo_word(g, j)))
            .collect();
        assert_eq!(words.len(), 5000);
        assert!(words.iter().all(|w| !is_stopword(w)));
    }

    #[test]
    fn planted_docs_shape() {
        let p = planted_docs(50, 5, 20, 50, 1);
        assert_eq!(p.docs.len(), 50);
        assert!(p.docs.iter().all(|d| d.text.split(' ').count() == 50));
        for (d, &k) in p.docs.iter().zip(&p.topics) {
            assert!(d.text.split(' ').all(|w| p.vocabularies[k].iter().any(|v| v == w)));
        }
    }

    #[test]
    fn demo_calls_segment_per_minute() {
        let cfg = DemoCorpusConfig { n_calls: 5, ..Default::default() };
        let corpus = demo_calls(&cfg, 3);
        let docs = segment_calls(&corpus.utterances, 60.0).unwrap();
        let planted: BTreeSet<&str> = corpus.planted.iter().map(|(d, _)| d.as_str()).collect();
        for d in &docs {
            assert!(planted.contains(d.doc_id.as_str()), "{}", d.doc_id);
        }
        assert_eq!(docs.len(), corpus.planted.len());
        assert_eq!(demo_calls(&cfg, 3).utterances, corpus.utterances);
    }
}
