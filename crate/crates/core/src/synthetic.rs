//! Seeded synthetic corpora and scored tables for tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Uniform};

use crate::corpus::extract_ngrams;
use crate::error::{Error, Result};
use crate::index::NgramTable;
use crate::propagator::FilterConfig;
use crate::scoring::ScoredNgram;

type Sampler = Box<dyn Fn(&mut ChaCha8Rng) -> f64>;

/// Distribution of synthetic n-gram scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreModel {
    /// `-(offset + Gamma(shape, scale))`: a left-skewed, all-negative
    /// distribution resembling model log-probabilities.
    NegGamma {
        offset: f64,
        shape: f64,
        scale: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
}

impl ScoreModel {
    /// Mean about -5.26 and standard deviation about 1.43, skewness -1.
    pub const LOGPROB_LIKE: ScoreModel = ScoreModel::NegGamma {
        offset: 2.4,
        shape: 4.0,
        scale: 0.715,
    };

    fn sampler(self) -> Result<Sampler> {
        match self {
            ScoreModel::NegGamma { offset, shape, scale } => {
                let g = Gamma::new(shape, scale).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                Ok(Box::new(move |rng| -(offset + g.sample(rng))))
            }
            ScoreModel::Uniform { low, high } => {
                let u = Uniform::new_inclusive(low, high).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                Ok(Box::new(move |rng| u.sample(rng)))
            }
        }
    }
}

/// A Markov-style word generator: every word has `branching` possible next
/// words and sentences start from one of `starts` words.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub order: usize,
    pub vocab: usize,
    pub starts: usize,
    pub branching: usize,
    pub sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub scores: ScoreModel,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Trigram instance with roughly ten thousand n-grams; with seed 7 it
    /// has 10,254 n-grams and 87,207 unfiltered chains of length 6.
    pub fn ten_thousand(seed: u64) -> Self {
        SyntheticSpec {
            order: 3,
            vocab: 400,
            starts: 40,
            branching: 6,
            sentences: 4_300,
            min_len: 6,
            max_len: 6,
            scores: ScoreModel::LOGPROB_LIKE,
            seed,
        }
    }

    /// Trigram instance with about a million unfiltered chains of length 8
    /// (1,114,245 with seed 7).
    pub fn million_chains(seed: u64) -> Self {
        SyntheticSpec {
            sentences: 2_500,
            min_len: 8,
            max_len: 8,
            ..Self::ten_thousand(seed)
        }
    }

    /// Chain length matching the generated sentence length.
    pub fn natural_length(&self) -> usize {
        self.min_len + 3 - self.order
    }

    pub fn corpus(&self) -> Vec<Vec<String>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let names: Vec<String> = (0..self.vocab).map(|i| format!("w{i:05}")).collect();
        let next: Vec<Vec<usize>> = (0..self.vocab)
            .map(|_| (0..self.branching).map(|_| rng.random_range(0..self.vocab)).collect())
            .collect();
        let starts: Vec<usize> = (0..self.starts.max(1))
            .map(|_| rng.random_range(0..self.vocab))
            .collect();
        (0..self.sentences)
            .map(|_| {
                let len = rng.random_range(self.min_len..=self.max_len.max(self.min_len));
                let mut w = *starts.choose(&mut rng).expect("non-empty");
                let mut s = Vec::with_capacity(len);
                for i in 0..len {
                    if i > 0 {
                        w = *next[w].choose(&mut rng).expect("branching >= 1");
                    }
                    s.push(names[w].clone());
                }
                s
            })
            .collect()
    }

    pub fn build(&self) -> Result<NgramTable> {
        let ex = extract_ngrams(&self.corpus(), self.order)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_5c0e);
        let sample = self.scores.sampler()?;
        let scored = ex
            .ngrams
            .into_iter()
            .map(|g| ScoredNgram {
                ngram: g,
                logprob: sample(&mut rng),
            })
            .collect();
        NgramTable::build(ex.lexicon, scored)
    }
}

/// A small random table (at most `max_ngrams` n-grams) with uniform scores
/// in `[-8, 1]`, for exhaustive cross-checks.
pub fn random_small_table<R: Rng>(rng: &mut R, order: usize, max_ngrams: usize) -> Result<NgramTable> {
    let vocab = rng.random_range(2..=6usize);
    let names: Vec<String> = (0..vocab)
        .map(|i| ["p", "q", "r", "s", "t", "u"][i].to_string())
        .collect();
    let mut corpus: Vec<Vec<String>> = Vec::new();
    let mut last_ok = None;
    for _ in 0..40 {
        let len = rng.random_range(1..=5usize);
        let sentence: Vec<String> = (0..len)
            .map(|_| names.choose(rng).expect("non-empty").clone())
            .collect();
        corpus.push(sentence);
        let ex = extract_ngrams(&corpus, order)?;
        if ex.ngrams.len() > max_ngrams {
            corpus.pop();
            break;
        }
        if !ex.ngrams.is_empty() {
            last_ok = Some(ex);
        }
    }
    let ex = last_ok.ok_or(Error::EmptyInput)?;
    let u = Uniform::new_inclusive(-8.0, 1.0).expect("valid range");
    let scored = ex
        .ngrams
        .into_iter()
        .map(|g| ScoredNgram {
            ngram: g,
            logprob: u.sample(rng),
        })
        .collect();
    NgramTable::build(ex.lexicon, scored)
}

/// Same n-grams with every score negated.
pub fn negated(table: &NgramTable) -> NgramTable {
    let scored = table
        .records()
        .iter()
        .map(|r| ScoredNgram {
            ngram: r.ngram.clone(),
            logprob: -r.logprob,
        })
        .collect();
    NgramTable::build(table.lexicon().clone(), scored).expect("negating scores keeps a valid table")
}

/// A random filter configuration for `table`: chain length in `1..=6`,
/// thresholds drawn inside the table's score range, lambda in `[0, 2]`,
/// assorted slacks and horizons, boundaries usually required.
pub fn random_config<R: Rng>(
    rng: &mut R,
    table: &NgramTable,
    criterion: crate::Criterion,
    direction: crate::Direction,
) -> FilterConfig {
    let stats = table.stats(true).expect("non-empty table");
    let length = rng.random_range(1..=6usize);
    let (lo, hi) = (table.min_logprob(), table.max_logprob());
    let threshold = match criterion {
        crate::Criterion::Final => rng.random_range(lo..=hi) * length as f64,
        _ => rng.random_range(lo..=hi),
    };
    let lambda = rng.random_range(0.0..=2.0);
    let slack = match rng.random_range(0..3) {
        0 => 0.0,
        1 => stats.std,
        _ => rng.random_range(-1.0..=1.0),
    };
    let boundaries = rng.random_bool(0.8);
    FilterConfig {
        criterion,
        direction,
        threshold,
        lambda: Some(lambda),
        step_bound: crate::StepBound::from_stats(&stats, lambda).expect("lambda in range"),
        slack,
        horizon: rng.random_range(1..table.order()),
        length,
        require_start: boundaries || rng.random_bool(0.5),
        require_end: boundaries || rng.random_bool(0.5),
    }
}
