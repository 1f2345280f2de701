//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ndarray::Array2;

use sttopic::bleu::corpus_bleu;
use sttopic::corpus::SegmentDoc;
use sttopic::demo::{run_demo, DemoSummary};
use sttopic::eval::{accuracy, confusion, majority_baseline, LabelSource, LabeledSet};
use sttopic::nmf::{init_factors, nmf_train, nmf_transform, train_from, Init, NmfConfig, TopicTermMatrix};
use sttopic::pipeline::fit_model;
use sttopic::rng::SeededRng;
use sttopic::sparse::CsrMatrix;
use sttopic::synth::planted_docs;
use sttopic::textprep::{build_vocabulary, vectorize, TfidfMatrix, VocabConfig};
use sttopic::topics::assign_labels;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = SeededRng::new(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.unit())
}

fn nmf_monotonicity() -> Outcome {
    let v = CsrMatrix::from_dense(&uniform_matrix(200, 100, 2024));
    let cfg = NmfConfig {
        n_topics: 10,
        max_iter: 200,
        tol: 0.0,
        ..NmfConfig::default()
    };
    let start = Instant::now();
    let (w0, h0) = init_factors(&v, &cfg).map_err(|e| e.to_string())?;
    let (_, _, trace) = train_from(&v, w0, h0, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    check(trace.len() == 201, format!("expected 201 trace values, got {}", trace.len()))?;
    let worst = trace.windows(2).map(|p| p[1] - p[0]).fold(f64::NEG_INFINITY, f64::max);
    check(worst <= 1e-9, format!("objective rose by {worst:e}"))?;
    check(elapsed < 5.0, format!("took {elapsed:.2} s"))?;
    Ok(format!(
        "objective {:.4} -> {:.4}, largest step change {worst:e}, {elapsed:.2} s",
        trace[0],
        trace[200]
    ))
}

fn rank_one_recovery() -> Outcome {
    let mut rng = SeededRng::new(5);
    let u: Vec<f64> = (0..30).map(|_| 0.1 + rng.unit()).collect();
    let w: Vec<f64> = (0..20).map(|_| 0.1 + rng.unit()).collect();
    let dense = Array2::from_shape_fn((30, 20), |(i, j)| u[i] * w[j]);
    let v = CsrMatrix::from_dense(&dense);
    let bound = 1e-8 * v.frobenius_sq();
    let mut parts = Vec::new();
    for (init, tol) in [(Init::Nndsvda, NmfConfig::default().tol), (Init::SeededRandom, 0.0)] {
        let cfg = NmfConfig {
            n_topics: 1,
            max_iter: 200,
            tol,
            seed: 5,
            init,
        };
        let (w0, h0) = init_factors(&v, &cfg).map_err(|e| e.to_string())?;
        let (_, _, trace) = train_from(&v, w0, h0, &cfg).map_err(|e| e.to_string())?;
        let last = *trace.last().unwrap();
        check(last < bound, format!("{init:?} start: final objective {last:e} >= {bound:e}"))?;
        parts.push(format!("{init:?} start {:e} -> {last:e} in {} iterations", trace[0], trace.len() - 1));
    }
    Ok(format!("bound {bound:e}; {}", parts.join("; ")))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn planted_recovery() -> Outcome {
    let corpus = planted_docs(500, 5, 20, 50, 17);
    let vocab_cfg = VocabConfig {
        max_df_ratio: 1.0,
        ..VocabConfig::default()
    };
    let nmf_cfg = NmfConfig {
        n_topics: 5,
        seed: 17,
        ..NmfConfig::default()
    };
    let fitted = fit_model(&corpus.docs, &vocab_cfg, &nmf_cfg, None).map_err(|e| e.to_string())?;
    let labels: Vec<usize> = assign_labels(&fitted.fit.w).iter().map(|l| l.topic_id).collect();
    let perms = permutations(5);
    let best = perms
        .iter()
        .map(|p| labels.iter().zip(&corpus.topics).filter(|(&l, &t)| p[l] == t).count())
        .max()
        .unwrap();
    let agreement = best as f64 / 500.0;
    check(agreement >= 0.95, format!("best-permutation agreement {agreement:.4} < 0.95"))?;
    Ok(format!("best-permutation agreement {agreement:.4} over {} permutations", perms.len()))
}

fn tfidf_oracle() -> Outcome {
    let docs = vec![
        SegmentDoc::new("c", 0, "xx xx yy".into()),
        SegmentDoc::new("c", 1, "xx zz".into()),
    ];
    let cfg = VocabConfig {
        min_df: 1,
        max_df_ratio: 1.0,
        max_terms: 10,
    };
    let vocab = build_vocabulary(&docs, &cfg).map_err(|e| e.to_string())?;
    check(vocab.terms() == ["xx", "yy", "zz"], format!("vocabulary {:?}", vocab.terms()))?;
    let m = vectorize(&docs, &vocab).map_err(|e| e.to_string())?.matrix.to_dense();
    let rare = 1.5f64.ln() + 1.0;
    let n0 = (4.0 + rare * rare).sqrt();
    let n1 = (1.0 + rare * rare).sqrt();
    let expected = [[2.0 / n0, rare / n0, 0.0], [1.0 / n1, 0.0, rare / n1]];
    for i in 0..2 {
        for j in 0..3 {
            let diff = (m[[i, j]] - expected[i][j]).abs();
            check(diff <= 1e-12, format!("entry ({i},{j}) off by {diff:e}"))?;
        }
    }

    let texts = [
        "music band concert music", "dog cat vet", "rain snow rain cold", "music dog rain",
        "zz zz zz", "band vet snow",
    ];
    let many: Vec<SegmentDoc> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| SegmentDoc::new("n", i as u64, t.to_string()))
        .collect();
    let vocab = build_vocabulary(&many, &cfg).map_err(|e| e.to_string())?;
    let dense = vectorize(&many, &vocab).map_err(|e| e.to_string())?.matrix.to_dense();
    for row in dense.rows() {
        let norm = row.dot(&row).sqrt();
        check(norm == 0.0 || (norm - 1.0).abs() <= 1e-12, format!("row norm {norm}"))?;
    }
    Ok(format!("row 0 = ({:.6}, {:.6}, 0); all row norms within 1e-12", m[[0, 0]], m[[0, 1]]))
}

fn fixed_h_contract() -> Outcome {
    let train = uniform_matrix(60, 40, 8);
    let tf = |dense: &Array2<f64>, prefix: &str| TfidfMatrix {
        row_ids: (0..dense.nrows()).map(|i| format!("{prefix}#{i}")).collect(),
        matrix: CsrMatrix::from_dense(dense),
    };
    let cfg = NmfConfig {
        n_topics: 6,
        seed: 3,
        ..NmfConfig::default()
    };
    let fit = nmf_train(&tf(&train, "train"), &cfg).map_err(|e| e.to_string())?;
    let h = fit.h.clone();
    let before: Vec<u64> = h.0.iter().map(|x| x.to_bits()).collect();
    let infer_cfg = NmfConfig {
        init: Init::SeededRandom,
        ..cfg
    };
    let new_docs = tf(&uniform_matrix(25, 40, 9), "new");
    let a = nmf_transform(&new_docs, &h, &infer_cfg).map_err(|e| e.to_string())?;
    let after: Vec<u64> = h.0.iter().map(|x| x.to_bits()).collect();
    check(before == after, "H changed")?;
    check(a.values.iter().all(|&x| x >= 0.0 && x.is_finite()), "W' has a negative or non-finite entry")?;
    let b = nmf_transform(&new_docs, &TopicTermMatrix(h.0.clone()), &infer_cfg).map_err(|e| e.to_string())?;
    let bits = |m: &Array2<f64>| m.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    check(bits(&a.values) == bits(&b.values), "re-run produced a different W'")?;
    Ok(format!("H bit-identical, W' {}x{} nonnegative and reproducible", a.n_docs(), a.n_topics()))
}

fn random_labels(n: usize, k: usize, seed: u64, source: LabelSource) -> LabeledSet {
    let mut rng = SeededRng::new(seed);
    let ids = (0..n).map(|i| format!("call#{i}")).collect();
    // skewed so a majority class exists
    let labels = (0..n).map(|_| if rng.unit() < 0.4 { 0 } else { rng.below(k) }).collect();
    LabeledSet::new(ids, labels, source).unwrap()
}

fn evaluation_identities() -> Outcome {
    let k = 7;
    for seed in 0..10 {
        let silver = random_labels(300, k, seed, LabelSource::Silver);
        let pred = random_labels(300, k, seed + 100, LabelSource::System);
        let self_acc = accuracy(&silver, &silver).map_err(|e| e.to_string())?;
        check(self_acc == 1.0, format!("accuracy(x,x) = {self_acc}"))?;

        let cm = confusion(&pred, &silver, k).map_err(|e| e.to_string())?;
        for (s, row) in cm.row_normalized.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            let present = cm.row_total(s) > 0;
            check(
                if present { (sum - 1.0).abs() <= 1e-9 } else { sum == 0.0 },
                format!("confusion row {s} sums to {sum}"),
            )?;
        }

        let correct = pred.labels.iter().zip(&silver.labels).filter(|(p, s)| p == s).count() as u64;
        let diag: u64 = (0..k).map(|s| cm.counts[s][s]).sum();
        check(diag == correct, format!("diagonal {diag} != correct {correct}"))?;
        let acc = accuracy(&pred, &silver).map_err(|e| e.to_string())?;
        check(acc == correct as f64 / 300.0, "accuracy != correct / n")?;

        let (topic, frac) = majority_baseline(&silver).map_err(|e| e.to_string())?;
        let constant = LabeledSet::new(silver.doc_ids.clone(), vec![topic; 300], LabelSource::System).unwrap();
        let constant_acc = accuracy(&constant, &silver).map_err(|e| e.to_string())?;
        check(constant_acc == frac, format!("baseline {frac} != constant predictor {constant_acc}"))?;
    }
    Ok("10 seeded label sets: self-accuracy 1, row sums, diagonal = correct count, baseline = constant predictor".into())
}

struct DemoRun {
    dir: tempfile::TempDir,
    summary: DemoSummary,
}

fn demo_runs(seeds: &[u64]) -> Result<Vec<DemoRun>, String> {
    seeds
        .iter()
        .map(|&seed| {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let summary = run_demo(dir.path(), seed).map_err(|e| e.to_string())?;
            Ok(DemoRun { dir, summary })
        })
        .collect()
}

fn zero_noise(runs: &[DemoRun]) -> Outcome {
    let mut parts = Vec::new();
    for run in runs {
        let seed = run.summary.seed;
        let clean = run.summary.point(0.0, 0.0).ok_or("missing zero-noise point")?;
        check(clean.accuracy == 1.0, format!("seed {seed}: accuracy {}", clean.accuracy))?;
        let silver = fs::read(run.dir.path().join("silver_labels.jsonl")).map_err(|e| e.to_string())?;
        let pred = fs::read(run.dir.path().join("labels/drop00_sub00.jsonl")).map_err(|e| e.to_string())?;
        check(silver == pred, format!("seed {seed}: label files differ"))?;
        parts.push(format!("seed {seed}: {} docs", run.summary.n_eval_docs));
    }
    Ok(format!("accuracy 1.0 and identical label files ({})", parts.join(", ")))
}

fn quality_trend(runs: &[DemoRun]) -> Outcome {
    let mut parts = Vec::new();
    for run in runs {
        let s = &run.summary;
        let acc = |p_drop: f64| s.point(p_drop, 0.1).map(|p| p.accuracy).ok_or("missing ladder point");
        let (a0, a4, a8) = (acc(0.0)?, acc(0.4)?, acc(0.8)?);
        check(a0 > a4 && a4 > a8, format!("seed {}: not strictly decreasing: {a0:.4}, {a4:.4}, {a8:.4}", s.seed))?;
        check(
            a8 < s.baseline_accuracy,
            format!("seed {}: accuracy {a8:.4} at p_drop 0.8 not below baseline {:.4}", s.seed, s.baseline_accuracy),
        )?;
        parts.push(format!(
            "seed {}: {a0:.3} > {a4:.3} > {a8:.3}, baseline {:.3}",
            s.seed, s.baseline_accuracy
        ));
    }
    Ok(parts.join("; "))
}

const WORDS: [&str; 24] = [
    "the", "a", "we", "talk", "about", "music", "every", "day", "i", "like", "dogs", "and", "cats", "my",
    "family", "lives", "in", "the", "city", "it", "rains", "often", "here", "there",
];

fn noisy_copy(src: &[&'static str], rng: &mut SeededRng, p: f64) -> Vec<&'static str> {
    let mut out = Vec::new();
    for &w in src {
        let u = rng.unit();
        if u < p / 2.0 {
            continue;
        }
        if u < p {
            out.push(WORDS[rng.below(WORDS.len())]);
        } else {
            out.push(w);
        }
    }
    out
}

fn bleu_checks() -> Outcome {
    let hyps = vec!["the cat sat on the mat".to_string(), "we talk about music".to_string()];
    let refs: Vec<Vec<String>> = hyps.iter().map(|h| vec![h.clone()]).collect();
    let perfect = corpus_bleu(&hyps, &refs, false).map_err(|e| e.to_string())?.score;
    check(perfect == 100.0, format!("identical text scored {perfect}"))?;

    let short = corpus_bleu(&["the cat sat".into()], &[vec!["the cat sat down".into()]], false)
        .map_err(|e| e.to_string())?;
    // exp(1 - 4/3), worked by hand
    check(
        (short.brevity_penalty - 0.716_531_3).abs() <= 1e-6,
        format!("brevity penalty {}", short.brevity_penalty),
    )?;

    let mut worst = f64::INFINITY;
    for case in 0..20u64 {
        let mut rng = SeededRng::new(1000 + case);
        let n = 5 + rng.below(10);
        let mut hyps = Vec::new();
        let mut one = Vec::new();
        let mut two = Vec::new();
        for _ in 0..n {
            let len = 6 + rng.below(12);
            let source: Vec<&str> = (0..len).map(|_| WORDS[rng.below(WORDS.len())]).collect();
            let r1 = noisy_copy(&source, &mut rng, 0.2);
            let r2 = noisy_copy(&source, &mut rng, 0.2);
            let h = noisy_copy(&source, &mut rng, 0.4);
            hyps.push(h.join(" "));
            one.push(vec![r1.join(" ")]);
            two.push(vec![r1.join(" "), r2.join(" ")]);
        }
        for smoothing in [false, true] {
            let base = corpus_bleu(&hyps, &one, smoothing).map_err(|e| e.to_string())?.score;
            let more = corpus_bleu(&hyps, &two, smoothing).map_err(|e| e.to_string())?.score;
            check(
                more >= base,
                format!("case {case} (smoothing {smoothing}): extra reference lowered BLEU {base:.6} -> {more:.6}"),
            )?;
            worst = worst.min(more - base);
        }
    }
    Ok(format!(
        "identical = 100, BP {:.7}, 20 reference-monotonicity cases (smallest gain {worst:.4})",
        short.brevity_penalty
    ))
}

fn tree(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = fs::read(&path).map_err(|e| e.to_string())?;
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), bytes);
            }
        }
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_sttopic");
    let mut trees = Vec::new();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = d.path().join("demo");
        let status = Command::new(bin)
            .args(["demo", "--seed", "11"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        check(status.status.success(), format!("demo exited with {}", status.status))?;
        trees.push(tree(&out)?);
    }
    check(!trees[0].is_empty(), "demo wrote no files")?;
    let names: Vec<_> = trees[0].keys().collect();
    check(trees[0].keys().eq(trees[1].keys()), "file sets differ")?;
    for (path, bytes) in &trees[0] {
        check(&trees[1][path] == bytes, format!("{} differs", path.display()))?;
    }
    let total: usize = trees[0].values().map(Vec::len).sum();
    Ok(format!("{} files, {total} bytes identical", names.len()))
}

fn main() {
    let demos = demo_runs(&[11, 1, 2]);
    let with_demos = |f: fn(&[DemoRun]) -> Outcome| -> Outcome {
        match &demos {
            Ok(runs) => f(runs),
            Err(e) => Err(format!("demo failed: {e}")),
        }
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("NMF monotonicity", nmf_monotonicity()),
        ("exact-factorization recovery", rank_one_recovery()),
        ("planted-topic recovery", planted_recovery()),
        ("tf-idf oracle", tfidf_oracle()),
        ("fixed-H contract", fixed_h_contract()),
        ("evaluation identities", evaluation_identities()),
        ("end-to-end zero noise", with_demos(zero_noise)),
        ("quality-accuracy trend", with_demos(quality_trend)),
        ("BLEU", bleu_checks()),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
