//! Acceptance suite. Each test checks one criterion and prints a single
//! `PASS`/`FAIL` line for it.

#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soc_core::classify::*;
use soc_core::corpus::{generate_synthetic, kfold_split, CvConfig, Dataset, Record, SynthConfig};
use soc_core::embed::{cosine_similarity, EmbedConfig, EmbeddingModel};
use soc_core::eval::*;
use soc_core::pipeline::{Pipeline, PipelineConfig, Representation};
use soc_core::text::{TfidfModel, VectorizerConfig};

struct Criterion {
    number: u32,
    name: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    fn new(number: u32, name: &'static str) -> Self {
        Criterion {
            number,
            name,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("criterion {} ({}): PASS", self.number, self.name);
        } else {
            println!("criterion {} ({}): FAIL", self.number, self.name);
            for f in self.failures.iter().take(10) {
                println!("    {f}");
            }
            panic!(
                "criterion {} failed with {} problems",
                self.number,
                self.failures.len()
            );
        }
    }
}

// ---------------------------------------------------------------- criterion 1

fn metric_oracle(t: &[usize], p: &[usize], classes: usize) -> [f64; 4] {
    let acc = t.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / t.len() as f64;
    let (mut ps, mut rs, mut fs) = (0.0, 0.0, 0.0);
    for c in 0..classes {
        let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
        for i in 0..t.len() {
            match (t[i] == c, p[i] == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        let prec = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let rec = if tp + fneg == 0 {
            0.0
        } else {
            tp as f64 / (tp + fneg) as f64
        };
        ps += prec;
        rs += rec;
        fs += if prec + rec == 0.0 {
            0.0
        } else {
            2.0 * prec * rec / (prec + rec)
        };
    }
    let n = classes as f64;
    [acc, ps / n, rs / n, fs / n]
}

#[test]
fn criterion_1_metric_oracle_equivalence() {
    let mut c = Criterion::new(1, "metric oracle equivalence");
    let started = Instant::now();
    let fixture = (1usize..=6, 1usize..=50).prop_flat_map(|(classes, len)| {
        (
            Just(classes),
            prop::collection::vec(0..classes, len),
            prop::collection::vec(0..classes, len),
        )
    });
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let cases = std::cell::Cell::new(0usize);
    let outcome = runner.run(&fixture, |(classes, t, p)| {
        cases.set(cases.get() + 1);
        let got = [
            accuracy(&t, &p).unwrap(),
            macro_precision(&t, &p, classes).unwrap(),
            macro_recall(&t, &p, classes).unwrap(),
            macro_f1(&t, &p, classes).unwrap(),
        ];
        prop_assert_eq!(got, metric_oracle(&t, &p, classes));
        Ok(())
    });
    c.check(outcome.is_ok(), || format!("{outcome:?}"));
    c.check(cases.get() >= 1000, || {
        format!("only {} fixtures ran", cases.get())
    });
    let elapsed = started.elapsed();
    c.check(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    });
    c.finish();
}

// ---------------------------------------------------------------- criterion 2

fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn all_ngrams(text: &str, max_n: usize) -> Vec<String> {
    let w = words(text);
    let mut out = Vec::new();
    for n in 1..=max_n {
        for window in w.windows(n) {
            out.push(window.join(" "));
        }
    }
    out
}

/// Brute-force TF-IDF: full n-gram enumeration, df filter, smoothed idf,
/// raw counts, L2 normalization.
fn tfidf_oracle(docs: &[&str], lo: f64, hi: f64) -> (Vec<String>, Vec<Vec<f64>>) {
    let n_docs = docs.len() as f64;
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for d in docs {
        let unique: HashSet<String> = all_ngrams(d, 10).into_iter().collect();
        for g in unique {
            *df.entry(g).or_default() += 1;
        }
    }
    let vocab: Vec<String> = df
        .iter()
        .filter(|(_, &k)| k as f64 / n_docs >= lo && k as f64 / n_docs <= hi)
        .map(|(g, _)| g.clone())
        .collect();
    let vectors = docs
        .iter()
        .map(|d| {
            let grams = all_ngrams(d, 10);
            let mut v: Vec<f64> = vocab
                .iter()
                .map(|g| {
                    let tf = grams.iter().filter(|x| *x == g).count() as f64;
                    let idf = ((1.0 + n_docs) / (1.0 + df[g] as f64)).ln() + 1.0;
                    tf * idf
                })
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
            v
        })
        .collect();
    (vocab, vectors)
}

#[test]
fn criterion_2_tfidf_hand_oracle() {
    let mut c = Criterion::new(2, "tf-idf hand oracle");
    let docs = [
        "Senior software engineer building web services",
        "Software engineer for embedded systems and web tools",
        "Registered nurse for the night shift",
    ];
    let model = TfidfModel::fit(&docs, &VectorizerConfig::default()).unwrap();
    let (vocab, expected) = tfidf_oracle(&docs, 0.10, 0.90);
    c.check(model.vocabulary().ngrams() == vocab.as_slice(), || {
        format!(
            "vocabulary differs: {} vs {} n-grams",
            model.dim(),
            vocab.len()
        )
    });
    for (d, want) in docs.iter().zip(&expected) {
        let got = model.transform(d).to_dense();
        let worst = got
            .iter()
            .zip(want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        c.check(got.len() == want.len() && worst <= 1e-12, || {
            format!("`{d}`: max deviation {worst}")
        });
    }

    let fixture = generate_synthetic(&SynthConfig {
        class_count: 4,
        docs_per_class: 5,
        vocab_per_class: 6,
        noise_rate: 0.3,
        seed: 3,
    });
    let docs20: Vec<&str> = fixture.descriptions().collect();
    let model = TfidfModel::fit(&docs20, &VectorizerConfig::default()).unwrap();
    let grams: Vec<HashSet<String>> = docs20
        .iter()
        .map(|d| all_ngrams(d, 10).into_iter().collect())
        .collect();
    c.check(docs20.len() == 20, || {
        format!("fixture has {} documents", docs20.len())
    });
    for (g, &df) in model
        .vocabulary()
        .ngrams()
        .iter()
        .zip(model.vocabulary().df())
    {
        let count = grams.iter().filter(|s| s.contains(g)).count();
        let p = count as f64 / 20.0;
        c.check(count == df, || format!("`{g}`: df {df}, counted {count}"));
        c.check((0.10..=0.90).contains(&p), || {
            format!("`{g}` has df proportion {p}")
        });
    }
    let (vocab20, _) = tfidf_oracle(&docs20, 0.10, 0.90);
    c.check(model.vocabulary().ngrams() == vocab20.as_slice(), || {
        "20-document vocabulary differs".into()
    });
    c.finish();
}

// ---------------------------------------------------------------- criterion 3

fn grid_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(0..5) as f64).collect())
        .collect()
}

fn uniform_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(lo..hi)).collect())
        .collect()
}

fn knn_oracle(train: &[Vec<f64>], labels: &[usize], n_classes: usize, q: &[f64]) -> usize {
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = vec![0; n_classes];
    for &(_, i) in d.iter().take(3) {
        votes[labels[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == top).unwrap()
}

fn unique_points(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    while rows.len() < n {
        let r: Vec<i64> = (0..3).map(|_| rng.gen_range(0..1000)).collect();
        if seen.insert(r.clone()) {
            rows.push(r.iter().map(|&v| v as f64 / 100.0).collect::<Vec<f64>>());
        }
    }
    let y = rows
        .iter()
        .map(|r| ((r[0] * r[1]).sin() + r[2].cos() > 0.3) as usize + (r[0] > 7.0) as usize)
        .collect();
    (rows, y)
}

#[test]
fn criterion_3_classifier_oracles() {
    let mut c = Criterion::new(3, "classifier oracles");
    let mut rng = ChaCha8Rng::seed_from_u64(31);

    // knn against exhaustive search
    let train = grid_rows(&mut rng, 80, 3);
    let labels: Vec<usize> = (0..80).map(|_| rng.gen_range(0..4)).collect();
    let x = FeatureMatrix::from_rows(train.clone()).unwrap();
    let knn = TrainedClassifier::fit(&ClassifierSpec::default_for(Algorithm::Knn), &x, &labels, 4)
        .unwrap();
    let mut queries = grid_rows(&mut rng, 100, 3);
    queries.extend(uniform_rows(&mut rng, 100, 3, -1.0, 6.0));
    let mismatches = queries
        .iter()
        .filter(|q| knn.predict(*q).unwrap() != knn_oracle(&train, &labels, 4, q))
        .count();
    c.check(queries.len() == 200 && mismatches == 0, || {
        format!("knn: {mismatches} of 200 queries differ")
    });

    // gnb statistics against the closed form
    for trial in 0..20 {
        let n = rng.gen_range(6..30);
        let dim = rng.gen_range(1..5);
        let rows = uniform_rows(&mut rng, n, dim, -3.0, 3.0);
        let mut y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        y[0] = 0;
        y[1] = 1;
        let m = TrainedClassifier::fit(
            &ClassifierSpec::default_for(Algorithm::Gnb),
            &FeatureMatrix::from_rows(rows.clone()).unwrap(),
            &y,
            3,
        )
        .unwrap();
        let Model::Gnb(g) = &m.model else {
            panic!("gnb expected")
        };
        let stats = |members: &[usize], j: usize| {
            let k = members.len() as f64;
            let mu = members.iter().map(|&i| rows[i][j]).sum::<f64>() / k;
            (
                mu,
                members
                    .iter()
                    .map(|&i| (rows[i][j] - mu).powi(2))
                    .sum::<f64>()
                    / k,
            )
        };
        let all: Vec<usize> = (0..n).collect();
        let eps = 1e-9 * (0..dim).map(|j| stats(&all, j).1).fold(0.0, f64::max);
        let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let jll = g.joint_log_likelihood(FeatureRef::from(&q));
        for class in 0..3 {
            let members: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
            if members.is_empty() {
                continue;
            }
            let mut lp = (members.len() as f64 / n as f64).ln();
            for j in 0..dim {
                let (mu, var) = stats(&members, j);
                let var = var + eps;
                c.check((g.class_means(class)[j] - mu).abs() <= 1e-9, || {
                    format!("gnb trial {trial}: mean")
                });
                c.check((g.class_variances(class)[j] - var).abs() <= 1e-9, || {
                    format!("gnb trial {trial}: variance")
                });
                lp += -0.5 * (2.0 * std::f64::consts::PI * var).ln()
                    - (q[j] - mu).powi(2) / (2.0 * var);
            }
            c.check((jll[class] - lp).abs() <= 1e-9 * lp.abs().max(1.0), || {
                format!("gnb trial {trial}: log posterior {} vs {lp}", jll[class])
            });
        }
    }

    // unlimited tree on noise-free, duplicate-free data
    for seed in 0..3 {
        let (rows, y) = unique_points(seed, 300);
        let x = FeatureMatrix::from_rows(rows).unwrap();
        let tree = TrainedClassifier::fit(&ClassifierSpec::default_for(Algorithm::Tree), &x, &y, 3)
            .unwrap();
        let acc = accuracy(&y, &tree.predict_all(&x).unwrap()).unwrap();
        c.check(acc == 1.0, || {
            format!("tree training accuracy {acc} (seed {seed})")
        });
    }

    // one-tree forest without bootstrap equals a tree
    let (rows, y) = unique_points(9, 200);
    let x = FeatureMatrix::from_rows(rows).unwrap();
    let forest = ClassifierSpec::Forest(ForestParams {
        n_estimators: 1,
        bootstrap: false,
        max_features: MaxFeatures::All,
        seed: 42,
        ..ForestParams::default()
    });
    let f = TrainedClassifier::fit(&forest, &x, &y, 3).unwrap();
    let t = TrainedClassifier::fit(
        &ClassifierSpec::Tree(TreeParams {
            seed: 42,
            ..TreeParams::default()
        }),
        &x,
        &y,
        3,
    )
    .unwrap();
    let probes = uniform_rows(&mut rng, 500, 3, 0.0, 10.0);
    let differ = probes
        .iter()
        .filter(|q| f.predict(*q).unwrap() != t.predict(*q).unwrap())
        .count();
    c.check(differ == 0, || {
        format!("forest(1) and tree disagree on {differ} probes")
    });
    c.finish();
}

// ---------------------------------------------------------------- criterion 4

#[test]
fn criterion_4_optimization_checks() {
    let mut c = Criterion::new(4, "optimization checks");
    let mut rng = ChaCha8Rng::seed_from_u64(404);

    let (n, dim, classes) = (15, 4, 3);
    let x = FeatureMatrix::from_rows(uniform_rows(&mut rng, n, dim, -2.0, 2.0)).unwrap();
    let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
    let h = 1e-5;
    for point in 0..20 {
        let l2 = [0.0, 0.1, 1.0, 3.0][point % 4];
        let params: Vec<f64> = (0..classes * dim + classes)
            .map(|_| rng.gen_range(-1.5..1.5))
            .collect();
        let (_, grad) = logreg_objective(&params, &x, &y, classes, l2);
        let fd: Vec<f64> = (0..params.len())
            .map(|i| {
                let mut p = params.clone();
                p[i] += h;
                let up = logreg_objective(&p, &x, &y, classes, l2).0;
                p[i] -= 2.0 * h;
                (up - logreg_objective(&p, &x, &y, classes, l2).0) / (2.0 * h)
            })
            .collect();
        let diff = grad
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = grad.iter().map(|g| g * g).sum::<f64>().sqrt().max(1e-12);
        c.check(diff / scale < 1e-5, || {
            format!("gradient point {point}: relative error {}", diff / scale)
        });
    }

    let tol = 1e-3;
    for problem in 0..50 {
        let n = rng.gen_range(2..=40);
        let rows = uniform_rows(&mut rng, n, 2, -2.0, 2.0);
        let separable = problem % 2 == 0;
        let mut labels: Vec<f64> = rows
            .iter()
            .map(|r| {
                let positive = if separable {
                    r[0] - 0.7 * r[1] > 0.1
                } else {
                    rng.gen_bool(0.5)
                };
                if positive {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        labels[0] = 1.0;
        labels[n - 1] = -1.0;
        let cost = [0.5, 1.0, 10.0][problem % 3];
        let kernel = KernelMatrix::rbf(&FeatureMatrix::from_rows(rows).unwrap(), 0.7);
        let sol = smo_solve(
            &kernel,
            &labels,
            &SmoOptions {
                c: cost,
                tol,
                trace: true,
                ..SmoOptions::default()
            },
        )
        .unwrap();
        c.check(sol.converged, || {
            format!("smo problem {problem} did not converge")
        });
        for i in 0..n {
            let a = sol.alphas[i];
            let f = (0..n)
                .map(|j| sol.alphas[j] * labels[j] * kernel.get(i, j))
                .sum::<f64>()
                + sol.bias;
            let m = labels[i] * f;
            let ok = (0.0..=cost).contains(&a)
                && if a == 0.0 {
                    m >= 1.0 - tol
                } else if a == cost {
                    m <= 1.0 + tol
                } else {
                    (m - 1.0).abs() <= tol
                };
            c.check(ok, || {
                format!("smo problem {problem}, point {i}: alpha {a}, margin {m}")
            });
        }
        c.check(
            sol.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12),
            || format!("smo problem {problem}: dual objective decreased"),
        );
        c.check(dual_objective(&kernel, &labels, &sol.alphas) >= 0.0, || {
            format!("smo problem {problem}: objective below the value at zero")
        });
    }

    let gamma = 0.5;
    for problem in 0..30 {
        let rows = uniform_rows(&mut rng, 2, 2, -1.5, 1.5);
        let labels = [1.0, -1.0];
        let cost = [0.3, 1.0, 5.0][problem % 3];
        let x = FeatureMatrix::from_rows(rows.clone()).unwrap();
        let kernel = KernelMatrix::rbf(&x, gamma);
        let sol = smo_solve(
            &kernel,
            &labels,
            &SmoOptions {
                c: cost,
                ..SmoOptions::default()
            },
        )
        .unwrap();
        // alpha_1 = alpha_2 = a under the equality constraint; grid over [0, C]
        let curvature = kernel.get(0, 0) + kernel.get(1, 1) - 2.0 * kernel.get(0, 1);
        let (mut best_a, mut best) = (0.0, f64::NEG_INFINITY);
        for s in 0..=200_000 {
            let a = cost * s as f64 / 200_000.0;
            let obj = 2.0 * a - 0.5 * a * a * curvature;
            if obj > best {
                best = obj;
                best_a = a;
            }
        }
        let k = |q: &[f64], p: &[f64]| {
            (-gamma * q.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp()
        };
        let g = |q: &[f64]| best_a * (k(q, &rows[0]) - k(q, &rows[1]));
        let bias = ((1.0 - g(&rows[0])) + (-1.0 - g(&rows[1]))) / 2.0;
        for _ in 0..10 {
            let q: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let ours = sol.alphas[0] * k(&q, &rows[0]) - sol.alphas[1] * k(&q, &rows[1]) + sol.bias;
            let oracle = g(&q) + bias;
            c.check((ours - oracle).abs() < 1e-2, || {
                format!("2-point problem {problem}: {ours} vs {oracle}")
            });
        }
    }
    c.finish();
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn criterion_5_embedding_sanity() {
    let mut c = Criterion::new(5, "embedding sanity");
    let started = Instant::now();
    let corpus = generate_synthetic(&SynthConfig {
        class_count: 2,
        docs_per_class: 25,
        vocab_per_class: 20,
        noise_rate: 0.0,
        seed: 11,
    });
    let docs: Vec<&str> = corpus.descriptions().collect();
    let labels: Vec<&str> = corpus
        .records()
        .iter()
        .map(|r| r.soc_code.as_str())
        .collect();
    let config = EmbedConfig {
        epochs: 10,
        seed: 5,
        ..EmbedConfig::default()
    };
    let (model, history) = EmbeddingModel::fit_with_history(&docs, &config).unwrap();
    c.check(docs.len() == 50, || {
        format!("corpus has {} documents", docs.len())
    });
    c.check(history.len() == config.epochs, || {
        format!("{} loss values", history.len())
    });
    for (e, w) in history.windows(2).enumerate() {
        c.check(w[1] < w[0], || {
            format!("loss rose after epoch {}: {} -> {}", e + 1, w[0], w[1])
        });
    }

    let (mut within, mut across) = (Vec::new(), Vec::new());
    for i in 0..docs.len() {
        for j in i + 1..docs.len() {
            let s = cosine_similarity(&model.doc_vector(i), &model.doc_vector(j)).unwrap();
            if labels[i] == labels[j] {
                within.push(s)
            } else {
                across.push(s)
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    c.check(mean(&within) > mean(&across), || {
        format!("within {} <= across {}", mean(&within), mean(&across))
    });

    let mut selfsim: Vec<f64> = (0..docs.len())
        .map(|i| cosine_similarity(&model.infer_vector(docs[i]), &model.doc_vector(i)).unwrap())
        .collect();
    selfsim.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = (selfsim[24] + selfsim[25]) / 2.0;
    c.check(median >= 0.6, || {
        format!("median inferred self-similarity {median}")
    });
    let elapsed = started.elapsed();
    c.check(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    });
    c.finish();
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn criterion_6_scaled_benchmark() {
    let mut c = Criterion::new(6, "scaled benchmark");
    let started = Instant::now();
    let dataset = generate_synthetic(&SynthConfig {
        class_count: 5,
        docs_per_class: 400,
        noise_rate: 0.2,
        ..SynthConfig::default()
    });
    c.check(dataset.len() == 2000, || {
        format!("dataset has {} documents", dataset.len())
    });
    let report = benchmark_all(&dataset, &EvalConfig::default(), None).unwrap();
    let elapsed = started.elapsed();
    c.check(elapsed < Duration::from_secs(15 * 60), || {
        format!("benchmark took {elapsed:?}")
    });
    c.check(report.rows.len() == 14, || {
        format!("{} rows", report.rows.len())
    });
    for row in &report.rows {
        let name = format!("{}:{}", row.representation, row.algorithm);
        c.check(row.error.is_none(), || {
            format!("{name} failed: {:?}", row.error)
        });
        c.check(row.folds.len() == 10, || {
            format!("{name} has {} folds", row.folds.len())
        });
        let acc = row.mean.map(|m| m.accuracy).unwrap_or(0.0);
        println!("    {name:<20} mean accuracy {acc:.4}");
        if row.representation == Representation::Tfidf && row.algorithm != Algorithm::Gnb {
            c.check(acc >= 0.85, || format!("{name} mean accuracy {acc}"));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&report, dir.path(), &ReportFormat::ALL).unwrap();
    let ext = |e: &str| {
        files
            .iter()
            .filter(|p| p.extension().is_some_and(|x| x == e))
            .count()
    };
    c.check(
        ext("svg") == 5 && ext("csv") == 2 && ext("json") == 1,
        || format!("report files: {files:?}"),
    );
    c.finish();
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn criterion_7_cv_hygiene() {
    let mut c = Criterion::new(7, "cv hygiene");
    for (n, k, seed) in [
        (10, 10, 0),
        (25, 10, 1),
        (2000, 10, 2),
        (101, 7, 3),
        (13, 2, 4),
    ] {
        let folds = kfold_split(
            n,
            &CvConfig {
                fold_count: k,
                shuffle_seed: seed,
            },
        )
        .unwrap();
        let mut seen = vec![0usize; n];
        for f in &folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            let test: HashSet<usize> = f.test.iter().copied().collect();
            c.check(f.train.iter().all(|i| !test.contains(i)), || {
                format!("n={n}: train and test overlap")
            });
            c.check(f.train.len() + f.test.len() == n, || {
                format!("n={n}: fold does not cover the data")
            });
        }
        c.check(seen.iter().all(|&s| s == 1), || {
            format!("n={n}: test slices are not a partition")
        });
        let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
        c.check(folds.len() == k && spread <= 1, || {
            format!("n={n}: fold sizes {sizes:?}")
        });
    }

    let base = generate_synthetic(&SynthConfig {
        class_count: 4,
        docs_per_class: 30,
        ..SynthConfig::default()
    });
    let mut records: Vec<Record> = base.records().to_vec();
    let folds = kfold_split(records.len(), &CvConfig::default()).unwrap();
    for (i, f) in folds.iter().enumerate() {
        let r = &mut records[f.test[0]];
        r.job_description = format!("{} sentineltoken{i}", r.job_description);
    }
    let dataset = Dataset::new(records).unwrap();
    let config = EvalConfig {
        vectorizer: VectorizerConfig {
            n_max: 1,
            min_df: 0.0,
            max_df: 1.0,
            ..VectorizerConfig::default()
        },
        embedding: EmbedConfig {
            min_token_count: 1,
            epochs: 2,
            dim: 16,
            ..EmbedConfig::default()
        },
        ..EvalConfig::default()
    };
    for rep in Representation::ALL {
        let prepared = prepare_folds(&dataset, rep, &config).unwrap();
        for fold in &prepared.folds {
            let own = format!("sentineltoken{}", fold.fold_index);
            c.check(!fold.vectorizer.knows_token(&own), || {
                format!("{rep} fold {} saw its test sentinel", fold.fold_index)
            });
            let other = format!("sentineltoken{}", (fold.fold_index + 1) % 10);
            c.check(fold.vectorizer.knows_token(&other), || {
                format!("{rep} fold {} misses a training token", fold.fold_index)
            });
        }
    }
    c.finish();
}

// ---------------------------------------------------------------- criterion 8

fn random_descriptions(dataset: &Dataset, n: usize, seed: u64) -> Vec<String> {
    let mut vocab: Vec<String> = dataset.descriptions().flat_map(words).collect();
    vocab.sort();
    vocab.dedup();
    vocab.extend([
        "unseenword".to_string(),
        "C++".to_string(),
        "façade".to_string(),
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(1..40);
            (0..len)
                .map(|_| vocab.choose(&mut rng).unwrap().as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

#[test]
fn criterion_8_service_equivalence() {
    let mut c = Criterion::new(8, "service equivalence");
    let dataset = generate_synthetic(&SynthConfig {
        class_count: 5,
        docs_per_class: 40,
        ..SynthConfig::default()
    });
    let pipeline = Pipeline::train(
        &dataset,
        PipelineConfig {
            representation: Representation::Tfidf,
            vectorizer: VectorizerConfig::default(),
            embedding: EmbedConfig::default(),
            classifier: ClassifierSpec::default_for(Algorithm::SvcRbf),
        },
    )
    .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.socm");
    pipeline.save(&path).unwrap();
    let loaded = Pipeline::load(&path).unwrap();
    let probes = random_descriptions(&dataset, 1000, 8);
    let differ = probes
        .iter()
        .filter(|d| pipeline.predict_one(d).unwrap() != loaded.predict_one(d).unwrap())
        .count();
    c.check(differ == 0, || {
        format!("save/load changed {differ} of 1000 predictions")
    });

    let runtime = tokio::runtime::Runtime::new().unwrap();
    let served = loaded.clone();
    let base = runtime.block_on(async move {
        let (listener, addr) = soc_server::bind("127.0.0.1:0".parse().unwrap())
            .await
            .unwrap();
        tokio::spawn(soc_server::serve(
            listener,
            soc_server::AppState::new(served),
            soc_server::ServerConfig::default(),
            std::future::pending(),
        ));
        format!("http://{addr}")
    });
    let client = reqwest::Client::new();
    let post = |body: String| {
        let client = client.clone();
        let url = format!("{base}/predict");
        runtime.block_on(async move {
            let res = client
                .post(url)
                .header("content-type", "application/json")
                .body(body)
                .send()
                .await
                .unwrap();
            (res.status().as_u16(), res.bytes().await.unwrap().to_vec())
        })
    };

    for d in probes.iter().take(100) {
        let (status, body) = post(serde_json::json!({ "description": d }).to_string());
        let expected = serde_json::to_vec(&soc_server::PredictResponse {
            soc_code: pipeline.predict_one(d).unwrap().to_string(),
            model_version: pipeline.model_version().to_string(),
        })
        .unwrap();
        c.check(status == 200 && body == expected, || {
            format!("`{d}`: {status} {}", String::from_utf8_lossy(&body))
        });
    }

    for bad in [
        "{}",
        "not json",
        "{\"description\": \"\"}",
        "{\"description\": 3}",
        "[]",
    ] {
        let (status, body) = post(bad.to_string());
        let parsed: Option<serde_json::Value> = serde_json::from_slice(&body).ok();
        let schema_ok = parsed
            .as_ref()
            .and_then(|v| v.as_object())
            .is_some_and(|o| o.len() == 1 && o.get("error").is_some_and(|e| e.is_string()));
        c.check(status == 400 && schema_ok, || {
            format!("`{bad}` -> {status} {parsed:?}")
        });
        if bad == "{}" {
            let names = parsed
                .as_ref()
                .and_then(|v| v["error"].as_str())
                .is_some_and(|e| e.contains("description"));
            c.check(names, || {
                "missing-field error does not name `description`".into()
            });
        }
    }
    c.finish();
}
