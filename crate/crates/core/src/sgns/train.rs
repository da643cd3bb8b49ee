//! SGD over the subword skip-gram objective.
//!
//! Each update follows the usual fastText recipe: the center vector is the
//! mean of its composition rows, every composition row receives the full
//! gradient of the composed vector, and the learning rate decays linearly
//! to zero over `epochs × tokens`. Deterministic mode runs one worker over
//! the lines in order. Otherwise the lines are split into contiguous ranges,
//! one per thread, and workers update shared matrices without locking.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::sync::Mutex;

use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::objective::log_sigmoid;
use super::space::composition_rows;
use super::vocab::build_vocab;
use super::{EmbeddingSpace, TrainConfig, TrainError, Vocab};
use crate::corpus::Corpus;

/// Mean loss per (center, context) pair, one entry per epoch.
#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub pairs: u64,
}

trait Matrix {
    fn dot(&self, row: usize, v: &[f32]) -> f32;
    /// `acc += alpha * row`
    fn add_scaled(&self, row: usize, alpha: f32, acc: &mut [f32]);
    /// `row += alpha * v`
    fn axpy(&mut self, row: usize, alpha: f32, v: &[f32]);
}

struct Dense<'a> {
    data: &'a mut [f32],
    dim: usize,
}

impl Matrix for Dense<'_> {
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        r.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn add_scaled(&self, row: usize, alpha: f32, acc: &mut [f32]) {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        acc.iter_mut().zip(r).for_each(|(a, x)| *a += alpha * x);
    }

    fn axpy(&mut self, row: usize, alpha: f32, v: &[f32]) {
        let r = &mut self.data[row * self.dim..(row + 1) * self.dim];
        r.iter_mut().zip(v).for_each(|(x, g)| *x += alpha * g);
    }
}

/// f32 matrix stored as relaxed atomics; concurrent updates may interleave.
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

impl Matrix for Shared<'_> {
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let base = row * self.dim;
        v.iter()
            .enumerate()
            .map(|(i, b)| self.get(base + i) * b)
            .sum()
    }

    fn add_scaled(&self, row: usize, alpha: f32, acc: &mut [f32]) {
        let base = row * self.dim;
        acc.iter_mut()
            .enumerate()
            .for_each(|(i, a)| *a += alpha * self.get(base + i));
    }

    fn axpy(&mut self, row: usize, alpha: f32, v: &[f32]) {
        let base = row * self.dim;
        for (i, g) in v.iter().enumerate() {
            let x = self.get(base + i) + alpha * g;
            self.data[base + i].store(x.to_bits(), Ordering::Relaxed);
        }
    }
}

struct Schedule<'a> {
    base_lr: f64,
    total_tokens: u64,
    processed: &'a AtomicU64,
}

impl Schedule<'_> {
    fn learning_rate(&self) -> f32 {
        let done = self.processed.load(Ordering::Relaxed) as f64 / self.total_tokens as f64;
        (self.base_lr * (1.0 - done).max(0.0)) as f32
    }
}

struct Worker<'a, M> {
    input: M,
    output: M,
    vocab: &'a Vocab,
    rows: &'a [Vec<usize>],
    config: &'a TrainConfig,
    rng: Xoshiro256PlusPlus,
    hidden: Vec<f32>,
    grad: Vec<f32>,
    kept: Vec<usize>,
    loss: f64,
    pairs: u64,
}

impl<'a, M: Matrix> Worker<'a, M> {
    fn new(
        input: M,
        output: M,
        vocab: &'a Vocab,
        rows: &'a [Vec<usize>],
        config: &'a TrainConfig,
        seed: u64,
    ) -> Self {
        Worker {
            input,
            output,
            vocab,
            rows,
            config,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            hidden: vec![0.0; config.dim],
            grad: vec![0.0; config.dim],
            kept: Vec::new(),
            loss: 0.0,
            pairs: 0,
        }
    }

    /// One pass over `lines`, whose first element has index `first_line`.
    fn epoch(
        &mut self,
        epoch: usize,
        first_line: usize,
        lines: &[Vec<usize>],
        schedule: &Schedule,
    ) -> Result<(), TrainError> {
        let unit = Uniform::new(0.0f64, 1.0);
        let radius = Uniform::new_inclusive(1, self.config.window);
        for (offset, line) in lines.iter().enumerate() {
            let lr = schedule.learning_rate();
            self.kept.clear();
            for &id in line {
                let keep = self
                    .vocab
                    .keep_probability(id, self.config.subsample_threshold);
                if keep >= 1.0 || self.rng.sample(unit) < keep {
                    self.kept.push(id);
                }
            }
            let kept = std::mem::take(&mut self.kept);
            for (pos, &center) in kept.iter().enumerate() {
                let r = self.rng.sample(radius);
                let lo = pos.saturating_sub(r);
                let hi = (pos + r).min(kept.len() - 1);
                for (ctx_pos, &target) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    let loss = self.update(center, target, lr);
                    if !loss.is_finite() {
                        return Err(TrainError::Divergence {
                            epoch,
                            line: first_line + offset,
                            position: pos,
                        });
                    }
                    self.loss += loss;
                    self.pairs += 1;
                }
            }
            self.kept = kept;
            schedule
                .processed
                .fetch_add(line.len() as u64, Ordering::Relaxed);
        }
        Ok(())
    }

    fn update(&mut self, center: usize, target: usize, lr: f32) -> f64 {
        let rows = &self.rows[center];
        self.hidden.iter_mut().for_each(|h| *h = 0.0);
        for &r in rows {
            self.input.add_scaled(r, 1.0, &mut self.hidden);
        }
        let n = rows.len() as f32;
        self.hidden.iter_mut().for_each(|h| *h /= n);
        self.grad.iter_mut().for_each(|g| *g = 0.0);

        let mut loss = self.logistic(target, true, lr);
        for _ in 0..self.config.negatives {
            let neg = self.draw_negative(target);
            if let Some(neg) = neg {
                loss += self.logistic(neg, false, lr);
            }
        }
        for &r in rows {
            self.input.axpy(r, 1.0, &self.grad);
        }
        loss
    }

    fn draw_negative(&mut self, target: usize) -> Option<usize> {
        if self.vocab.len() < 2 {
            return None;
        }
        loop {
            let n = self.vocab.sample_negative(&mut self.rng);
            if n != target {
                return Some(n);
            }
        }
    }

    /// Logistic step for one output row; accumulates the center gradient
    /// (already scaled by the learning rate) into `self.grad`.
    fn logistic(&mut self, target: usize, positive: bool, lr: f32) -> f64 {
        let score = self.output.dot(target, &self.hidden);
        if !score.is_finite() {
            return f64::NAN;
        }
        let label = if positive { 1.0 } else { 0.0 };
        let sig = 1.0 / (1.0 + (-score).exp());
        let alpha = lr * (label - sig);
        self.output.add_scaled(target, alpha, &mut self.grad);
        self.output.axpy(target, alpha, &self.hidden);
        if positive {
            -log_sigmoid(f64::from(score))
        } else {
            -log_sigmoid(-f64::from(score))
        }
    }
}

fn initial_input(rows: usize, dim: usize, seed: u64) -> Vec<f32> {
    let bound = 1.0 / dim as f32;
    let dist = Uniform::new_inclusive(-bound, bound);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..rows * dim).map(|_| rng.sample(dist)).collect()
}

/// Trains on `corpus` and returns the space with per-epoch losses.
pub fn train_with_report(
    corpus: &Corpus,
    config: &TrainConfig,
) -> Result<(EmbeddingSpace, TrainReport), TrainError> {
    config.validate()?;
    let vocab = build_vocab(corpus, config)?;
    let rows: Vec<Vec<usize>> = vocab
        .words()
        .map(|w| composition_rows(w, &vocab, config))
        .collect();
    let lines: Vec<Vec<usize>> = corpus
        .lines()
        .iter()
        .map(|l| l.iter().filter_map(|t| vocab.id(t)).collect())
        .collect();
    let line_tokens: u64 = lines.iter().map(|l| l.len() as u64).sum();
    let total_tokens = (line_tokens * config.epochs as u64).max(1);

    let dim = config.dim;
    let mut input = initial_input(vocab.len() + config.bucket_count, dim, config.seed);
    let mut output = vec![0.0f32; vocab.len() * dim];
    let processed = AtomicU64::new(0);
    let schedule = Schedule {
        base_lr: config.learning_rate,
        total_tokens,
        processed: &processed,
    };

    let threads = config.threads.min(lines.len()).max(1);
    let mut report = TrainReport::default();
    if config.deterministic || threads == 1 {
        let mut worker = Worker::new(
            Dense {
                data: &mut input,
                dim,
            },
            Dense {
                data: &mut output,
                dim,
            },
            &vocab,
            &rows,
            config,
            config.seed.wrapping_add(1),
        );
        for epoch in 0..config.epochs {
            let (loss0, pairs0) = (worker.loss, worker.pairs);
            worker.epoch(epoch, 0, &lines, &schedule)?;
            let pairs = worker.pairs - pairs0;
            report
                .epoch_losses
                .push((worker.loss - loss0) / pairs.max(1) as f64);
        }
        report.pairs = worker.pairs;
    } else {
        let shared_in: Vec<AtomicU32> = input.iter().map(|x| AtomicU32::new(x.to_bits())).collect();
        let shared_out: Vec<AtomicU32> =
            output.iter().map(|x| AtomicU32::new(x.to_bits())).collect();
        let sums = Mutex::new(vec![(0.0f64, 0u64); config.epochs]);
        let first_error: Mutex<Option<TrainError>> = Mutex::new(None);
        let chunk = lines.len().div_ceil(threads);
        std::thread::scope(|scope| {
            for (t, part) in lines.chunks(chunk).enumerate() {
                let (rows, vocab, schedule) = (&rows, &vocab, &schedule);
                let (sums, first_error) = (&sums, &first_error);
                let (shared_in, shared_out) = (&shared_in, &shared_out);
                scope.spawn(move || {
                    let mut worker = Worker::new(
                        Shared {
                            data: shared_in,
                            dim,
                        },
                        Shared {
                            data: shared_out,
                            dim,
                        },
                        vocab,
                        rows,
                        config,
                        config.seed.wrapping_add(1 + t as u64),
                    );
                    for epoch in 0..config.epochs {
                        let (loss0, pairs0) = (worker.loss, worker.pairs);
                        if let Err(e) = worker.epoch(epoch, t * chunk, part, schedule) {
                            first_error.lock().unwrap().get_or_insert(e);
                            return;
                        }
                        let mut s = sums.lock().unwrap();
                        s[epoch].0 += worker.loss - loss0;
                        s[epoch].1 += worker.pairs - pairs0;
                    }
                });
            }
        });
        if let Some(e) = first_error.into_inner().unwrap() {
            return Err(e);
        }
        input = shared_in
            .into_iter()
            .map(|a| f32::from_bits(a.into_inner()))
            .collect();
        output = shared_out
            .into_iter()
            .map(|a| f32::from_bits(a.into_inner()))
            .collect();
        for (loss, pairs) in sums.into_inner().unwrap() {
            report.epoch_losses.push(loss / pairs.max(1) as f64);
            report.pairs += pairs;
        }
    }

    if input.iter().chain(&output).any(|x| !x.is_finite()) {
        return Err(TrainError::Divergence {
            epoch: config.epochs - 1,
            line: lines.len(),
            position: 0,
        });
    }
    Ok((
        EmbeddingSpace {
            config: config.clone(),
            vocab,
            input,
            output,
        },
        report,
    ))
}

pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<EmbeddingSpace, TrainError> {
    train_with_report(corpus, config).map(|(space, _)| space)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> TrainConfig {
        TrainConfig {
            dim: 8,
            negatives: 3,
            epochs: 2,
            bucket_count: 1000,
            min_count: 1,
            seed: 5,
            ..Default::default()
        }
    }

    fn toy_corpus() -> Corpus {
        let lines: Vec<String> = (0..200)
            .map(|i| match i % 3 {
                0 => "the cat sat on the mat".to_string(),
                1 => "a dog ran in the park".to_string(),
                _ => "the cat and the dog played".to_string(),
            })
            .collect();
        Corpus::from_text_lines("toy", lines.iter().map(String::as_str))
    }

    #[test]
    fn deterministic_runs_are_bit_identical() {
        let c = toy_corpus();
        let a = train(&c, &small_config()).unwrap();
        let b = train(&c, &small_config()).unwrap();
        assert_eq!(a.input_matrix(), b.input_matrix());
        assert_eq!(a.output_matrix(), b.output_matrix());
    }

    #[test]
    fn line_order_changes_result() {
        let c = toy_corpus();
        let s = crate::corpus::shuffle(&c, 3).unwrap();
        let a = train(&c, &small_config()).unwrap();
        let b = train(&s, &small_config()).unwrap();
        assert_ne!(a.input_matrix(), b.input_matrix());
    }

    #[test]
    fn vectors_are_finite_and_sized() {
        let space = train(&toy_corpus(), &small_config()).unwrap();
        assert!(space.input_matrix().iter().all(|x| x.is_finite()));
        assert_eq!(space.word_vector("cat").len(), 8);
        assert_eq!(space.word_vector("unseen").len(), 8);
        assert_eq!(space.input_matrix().len(), (space.vocab().len() + 1000) * 8);
    }

    #[test]
    fn parallel_mode_trains() {
        let cfg = TrainConfig {
            deterministic: false,
            threads: 3,
            ..small_config()
        };
        let (space, report) = train_with_report(&toy_corpus(), &cfg).unwrap();
        assert!(space.input_matrix().iter().all(|x| x.is_finite()));
        assert_eq!(report.epoch_losses.len(), 2);
        assert!(report.pairs > 0);
    }

    #[test]
    fn empty_vocab_is_an_error() {
        let c = Corpus::from_text_lines("x", ["a b c"]);
        let cfg = TrainConfig {
            min_count: 5,
            ..small_config()
        };
        assert!(matches!(
            train(&c, &cfg),
            Err(TrainError::EmptyVocab { .. })
        ));
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let cfg = TrainConfig {
            learning_rate: 1e30,
            subsample_threshold: 0.0,
            ..small_config()
        };
        match train(&toy_corpus(), &cfg) {
            Err(TrainError::Divergence { epoch, .. }) => assert_eq!(epoch, 0),
            other => panic!("expected divergence, got {:?}", other.map(|_| ())),
        }
    }
}
