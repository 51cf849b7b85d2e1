use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DenseVector, EmbedConfig};
use crate::error::{Error, Result};
use crate::text::tokenize;

const UNIGRAM_POWER: f64 = 0.75;
const PROBE_SIZE: usize = 2048;
const INFER_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const PROBE_SALT: u64 = 0xc2b2_ae3d_27d4_eb4f;

/// A fitted paragraph-vector model.
///
/// `doc_vectors` holds one row per training document and `context_vectors`
/// one output row per vocabulary token, both row-major with `dim` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub(super) config: EmbedConfig,
    pub(super) tokens: Vec<String>,
    pub(super) counts: Vec<u64>,
    pub(super) token_index: HashMap<String, u32>,
    pub(super) doc_vectors: Vec<f32>,
    pub(super) context_vectors: Vec<f32>,
    pub(super) unigram_cdf: Vec<f64>,
}

/// Row access to the output weights during SGD.
trait ContextRows {
    fn dot(&self, row: usize, v: &[f32]) -> f32;
    /// `acc += scale * row`
    fn accumulate(&self, row: usize, scale: f32, acc: &mut [f32]);
    /// `row += scale * v`
    fn update(&mut self, row: usize, scale: f32, v: &[f32]);
}

struct Owned<'a> {
    data: &'a mut [f32],
    dim: usize,
}

impl ContextRows for Owned<'_> {
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        r.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn accumulate(&self, row: usize, scale: f32, acc: &mut [f32]) {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        acc.iter_mut().zip(r).for_each(|(a, x)| *a += scale * x);
    }

    fn update(&mut self, row: usize, scale: f32, v: &[f32]) {
        let r = &mut self.data[row * self.dim..(row + 1) * self.dim];
        r.iter_mut().zip(v).for_each(|(x, d)| *x += scale * d);
    }
}

/// Read-only weights used while inferring a new document.
struct Frozen<'a> {
    data: &'a [f32],
    dim: usize,
}

impl ContextRows for Frozen<'_> {
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        r.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn accumulate(&self, row: usize, scale: f32, acc: &mut [f32]) {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        acc.iter_mut().zip(r).for_each(|(a, x)| *a += scale * x);
    }

    fn update(&mut self, _row: usize, _scale: f32, _v: &[f32]) {}
}

/// Weights shared between racing worker threads. Loads and stores are
/// relaxed; concurrent updates to the same cell may be lost.
#[derive(Clone, Copy)]
struct Shared<'a> {
    data: &'a [AtomicU32],
    dim: usize,
}

impl Shared<'_> {
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.data[i].load(Ordering::Relaxed))
    }
}

impl ContextRows for Shared<'_> {
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let base = row * self.dim;
        v.iter()
            .enumerate()
            .map(|(j, x)| self.get(base + j) * x)
            .sum()
    }

    fn accumulate(&self, row: usize, scale: f32, acc: &mut [f32]) {
        let base = row * self.dim;
        acc.iter_mut()
            .enumerate()
            .for_each(|(j, a)| *a += scale * self.get(base + j));
    }

    fn update(&mut self, row: usize, scale: f32, v: &[f32]) {
        let base = row * self.dim;
        for (j, d) in v.iter().enumerate() {
            let x = self.get(base + j) + scale * d;
            self.data[base + j].store(x.to_bits(), Ordering::Relaxed);
        }
    }
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

fn sample_token(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn unigram_cdf(counts: &[u64]) -> Vec<f64> {
    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64).powf(UNIGRAM_POWER))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc / total
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let half = 0.5 / dim as f32;
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}

/// Linear learning-rate schedule over the planned number of token updates.
#[derive(Clone, Copy)]
struct Schedule {
    start: f32,
    end: f32,
    total: u64,
}

impl Schedule {
    fn at(&self, done: u64) -> f32 {
        let progress = (done as f64 / self.total.max(1) as f64).min(1.0) as f32;
        (self.start - (self.start - self.end) * progress).max(self.end)
    }
}

/// One pass over a document: each observed token is a positive example for
/// the document vector, contrasted with `negatives` unigram draws.
#[allow(clippy::too_many_arguments)]
fn train_document<C: ContextRows>(
    doc: &mut [f32],
    tokens: &[u32],
    ctx: &mut C,
    cdf: &[f64],
    negatives: usize,
    lr: f32,
    rng: &mut ChaCha8Rng,
    grad: &mut [f32],
) {
    for &word in tokens {
        let word = word as usize;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for d in 0..=negatives {
            let (target, label) = if d == 0 {
                (word, 1.0)
            } else {
                let t = sample_token(cdf, rng);
                if t == word {
                    continue;
                }
                (t, 0.0)
            };
            let f = ctx.dot(target, doc);
            let g = (label - sigmoid(f)) * lr;
            ctx.accumulate(target, g, grad);
            ctx.update(target, g, doc);
        }
        doc.iter_mut().zip(grad.iter()).for_each(|(x, g)| *x += g);
    }
}

/// A fixed sample of (document, positive token, negative tokens) triples.
struct Probe {
    items: Vec<(usize, u32, Vec<usize>)>,
}

impl Probe {
    fn draw(docs: &[Vec<u32>], cdf: &[f64], negatives: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PROBE_SALT);
        let nonempty: Vec<usize> = (0..docs.len()).filter(|&d| !docs[d].is_empty()).collect();
        let items = (0..PROBE_SIZE.min(nonempty.len() * 8))
            .map(|_| {
                let d = nonempty[rng.gen_range(0..nonempty.len())];
                let w = docs[d][rng.gen_range(0..docs[d].len())];
                let negs = (0..negatives)
                    .map(|_| sample_token(cdf, &mut rng))
                    .filter(|&t| t != w as usize)
                    .collect();
                (d, w, negs)
            })
            .collect();
        Probe { items }
    }

    fn loss(&self, doc_vectors: &[f32], context: &[f32], dim: usize) -> f64 {
        if self.items.is_empty() {
            return 0.0;
        }
        let dot = |d: usize, t: usize| -> f64 {
            let a = &doc_vectors[d * dim..(d + 1) * dim];
            let b = &context[t * dim..(t + 1) * dim];
            a.iter()
                .zip(b)
                .map(|(x, y)| (*x as f64) * (*y as f64))
                .sum()
        };
        // -ln(sigmoid(x)) = ln(1 + e^-x)
        let softplus = |x: f64| {
            if x > 30.0 {
                (-x).exp()
            } else {
                (-x).exp().ln_1p()
            }
        };
        let total: f64 = self
            .items
            .iter()
            .map(|(d, w, negs)| {
                softplus(dot(*d, *w as usize))
                    + negs.iter().map(|&t| softplus(-dot(*d, t))).sum::<f64>()
            })
            .sum();
        total / self.items.len() as f64
    }
}

impl EmbeddingModel {
    /// Trains document and output vectors on `docs`.
    pub fn fit<S: AsRef<str>>(docs: &[S], config: &EmbedConfig) -> Result<Self> {
        Self::fit_with_history(docs, config).map(|(m, _)| m)
    }

    /// Like [`EmbeddingModel::fit`], also returning the mean
    /// negative-sampling loss on a fixed probe sample after every epoch.
    pub fn fit_with_history<S: AsRef<str>>(
        docs: &[S],
        config: &EmbedConfig,
    ) -> Result<(Self, Vec<f64>)> {
        config.validate()?;
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let tokenized: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d.as_ref(), true)).collect();

        let mut freq: HashMap<&str, u64> = HashMap::new();
        for t in tokenized.iter().flatten() {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
        let mut vocab: Vec<(&str, u64)> = freq
            .into_iter()
            .filter(|&(_, c)| c >= config.min_token_count)
            .collect();
        if vocab.is_empty() {
            return Err(Error::EmptyEmbeddingVocabulary);
        }
        vocab.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let tokens: Vec<String> = vocab.iter().map(|(t, _)| t.to_string()).collect();
        let counts: Vec<u64> = vocab.iter().map(|(_, c)| *c).collect();
        let token_index: HashMap<String, u32> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let encoded: Vec<Vec<u32>> = tokenized
            .iter()
            .map(|doc| {
                doc.iter()
                    .filter_map(|t| token_index.get(t).copied())
                    .collect()
            })
            .collect();

        let dim = config.dim;
        let cdf = unigram_cdf(&counts);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut doc_vectors: Vec<f32> = Vec::with_capacity(docs.len() * dim);
        for _ in 0..docs.len() {
            doc_vectors.extend(random_vector(dim, &mut rng));
        }
        let mut context_vectors = vec![0.0f32; tokens.len() * dim];

        let per_epoch: u64 = encoded.iter().map(|d| d.len() as u64).sum();
        let schedule = Schedule {
            start: config.initial_learning_rate,
            end: config.final_learning_rate,
            total: per_epoch * config.epochs as u64,
        };
        let probe = Probe::draw(&encoded, &cdf, config.negative_samples, config.seed);
        let mut history = Vec::with_capacity(config.epochs);

        if config.workers <= 1 {
            let mut grad = vec![0.0f32; dim];
            let mut done = 0u64;
            for _ in 0..config.epochs {
                let mut ctx = Owned {
                    data: &mut context_vectors,
                    dim,
                };
                for (doc, row) in encoded.iter().zip(doc_vectors.chunks_mut(dim)) {
                    let lr = schedule.at(done);
                    train_document(
                        row,
                        doc,
                        &mut ctx,
                        &cdf,
                        config.negative_samples,
                        lr,
                        &mut rng,
                        &mut grad,
                    );
                    done += doc.len() as u64;
                }
                history.push(probe.loss(&doc_vectors, &context_vectors, dim));
            }
        } else {
            let shared: Vec<AtomicU32> = context_vectors
                .iter()
                .map(|x| AtomicU32::new(x.to_bits()))
                .collect();
            let done = AtomicU64::new(0);
            let workers = config.workers.min(docs.len());
            let per_worker = docs.len().div_ceil(workers);
            let mut worker_rngs: Vec<ChaCha8Rng> = (0..workers)
                .map(|w| ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(w as u64 + 1)))
                .collect();
            for _ in 0..config.epochs {
                std::thread::scope(|scope| {
                    let chunks = doc_vectors.chunks_mut(per_worker * dim);
                    for ((w, rows), wrng) in chunks.enumerate().zip(worker_rngs.iter_mut()) {
                        let docs_slice = &encoded[w * per_worker..];
                        let (shared, done, cdf) = (&shared, &done, &cdf);
                        scope.spawn(move || {
                            let mut ctx = Shared { data: shared, dim };
                            let mut grad = vec![0.0f32; dim];
                            for (doc, row) in docs_slice.iter().zip(rows.chunks_mut(dim)) {
                                let lr = schedule.at(done.load(Ordering::Relaxed));
                                train_document(
                                    row,
                                    doc,
                                    &mut ctx,
                                    cdf,
                                    config.negative_samples,
                                    lr,
                                    wrng,
                                    &mut grad,
                                );
                                done.fetch_add(doc.len() as u64, Ordering::Relaxed);
                            }
                        });
                    }
                });
                let snapshot: Vec<f32> = shared
                    .iter()
                    .map(|x| f32::from_bits(x.load(Ordering::Relaxed)))
                    .collect();
                history.push(probe.loss(&doc_vectors, &snapshot, dim));
            }
            context_vectors = shared
                .into_iter()
                .map(|x| f32::from_bits(x.into_inner()))
                .collect();
        }

        let model = EmbeddingModel {
            config: *config,
            tokens,
            counts,
            token_index,
            doc_vectors,
            context_vectors,
            unigram_cdf: cdf,
        };
        Ok((model, history))
    }

    pub(super) fn from_parts(
        config: EmbedConfig,
        tokens: Vec<String>,
        counts: Vec<u64>,
        doc_vectors: Vec<f32>,
        context_vectors: Vec<f32>,
    ) -> Self {
        let token_index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let unigram_cdf = unigram_cdf(&counts);
        EmbeddingModel {
            config,
            tokens,
            counts,
            token_index,
            doc_vectors,
            context_vectors,
            unigram_cdf,
        }
    }

    pub fn config(&self) -> &EmbedConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn doc_count(&self) -> usize {
        self.doc_vectors.len() / self.config.dim
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains_token(&self, token: &str) -> bool {
        self.token_index.contains_key(token)
    }

    /// Trained vector of training document `index`.
    pub fn doc_vector(&self, index: usize) -> DenseVector {
        let dim = self.config.dim;
        DenseVector::new(
            self.doc_vectors[index * dim..(index + 1) * dim]
                .iter()
                .map(|&x| x as f64)
                .collect(),
        )
    }

    pub fn context_vectors(&self) -> &[f32] {
        &self.context_vectors
    }

    /// Fits a fresh document vector for `text` with the output weights held
    /// fixed. Text with no known token maps to the zero vector.
    pub fn infer_vector(&self, text: &str) -> DenseVector {
        let dim = self.config.dim;
        let ids: Vec<u32> = tokenize(text, true)
            .iter()
            .filter_map(|t| self.token_index.get(t).copied())
            .collect();
        if ids.is_empty() {
            return DenseVector::zeros(dim);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ INFER_SALT);
        let mut doc = random_vector(dim, &mut rng);
        let mut grad = vec![0.0f32; dim];
        let mut ctx = Frozen {
            data: &self.context_vectors,
            dim,
        };
        let schedule = Schedule {
            start: self.config.initial_learning_rate,
            end: self.config.final_learning_rate,
            total: (ids.len() * self.config.epochs) as u64,
        };
        for epoch in 0..self.config.epochs {
            let lr = schedule.at((epoch * ids.len()) as u64);
            train_document(
                &mut doc,
                &ids,
                &mut ctx,
                &self.unigram_cdf,
                self.config.negative_samples,
                lr,
                &mut rng,
                &mut grad,
            );
        }
        DenseVector::new(doc.into_iter().map(|x| x as f64).collect())
    }
}
