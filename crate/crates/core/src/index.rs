//! The immutable n-gram table and its successor index.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::{Lexicon, WordId};
use crate::error::{Error, Result};
use crate::scoring::{ScoredNgram, ScoredSet};
use crate::stats::{qq_points, DistributionStats, QqPoint};

/// Dense n-gram identifier, assigned in lexicographic word-id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NgramId(pub u32);

impl NgramId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NgramId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Scored n-grams of a single order with constant-time successor lookup.
///
/// Because records are sorted by word tuple, all n-grams that share an
/// `n-1` word prefix form one contiguous id range; the index maps each
/// prefix to that range and every record caches the range of its
/// successors.
#[derive(Debug, Clone)]
pub struct NgramTable {
    order: usize,
    lexicon: Lexicon,
    records: Vec<ScoredNgram>,
    logprobs: Vec<f64>,
    ids: Vec<NgramId>,
    succ_index: HashMap<Box<[WordId]>, Range<u32>>,
    succ: Vec<Range<u32>>,
    initial_ids: Vec<NgramId>,
    final_ids: Vec<NgramId>,
    is_initial: Vec<bool>,
    is_final: Vec<bool>,
}

impl NgramTable {
    pub fn build(lexicon: Lexicon, scored: Vec<ScoredNgram>) -> Result<Self> {
        let order = scored.first().ok_or(Error::EmptyInput)?.ngram.order();
        if order < 2 {
            return Err(Error::OrderTooSmall(order));
        }
        let mut records = scored;
        if let Some(bad) = records.iter().find(|s| s.ngram.order() != order) {
            return Err(Error::MixedOrder {
                expected: order,
                found: bad.ngram.order(),
            });
        }
        if let Some(bad) = records.iter().find(|s| !s.logprob.is_finite()) {
            return Err(Error::NonFiniteScore {
                line: 0,
                value: format!("{} for `{}`", bad.logprob, lexicon.render(&bad.ngram.words)),
            });
        }
        if let Some(&w) = records
            .iter()
            .flat_map(|s| s.ngram.words.iter())
            .find(|w| w.0 as usize >= lexicon.len())
        {
            return Err(Error::InvalidConfig(format!("word id {} not in lexicon", w.0)));
        }
        records.sort_by(|a, b| a.ngram.words.cmp(&b.ngram.words));
        if let Some(pair) = records.windows(2).find(|p| p[0].ngram.words == p[1].ngram.words) {
            return Err(Error::DuplicateNgram(lexicon.render(&pair[0].ngram.words)));
        }
        if records.len() > u32::MAX as usize {
            return Err(Error::InvalidConfig("too many n-grams".into()));
        }

        let mut succ_index: HashMap<Box<[WordId]>, Range<u32>> = HashMap::new();
        let mut start = 0usize;
        while start < records.len() {
            let prefix = &records[start].ngram.words[..order - 1];
            let mut end = start + 1;
            while end < records.len() && &records[end].ngram.words[..order - 1] == prefix {
                end += 1;
            }
            succ_index.insert(prefix.into(), start as u32..end as u32);
            start = end;
        }
        let succ = records
            .iter()
            .map(|r| succ_index.get(&r.ngram.words[1..]).cloned().unwrap_or(0..0))
            .collect();

        let ids: Vec<NgramId> = (0..records.len() as u32).map(NgramId).collect();
        let is_initial: Vec<bool> = records.iter().map(|r| r.ngram.sentence_initial).collect();
        let is_final: Vec<bool> = records.iter().map(|r| r.ngram.sentence_final).collect();
        let initial_ids = ids.iter().copied().filter(|id| is_initial[id.index()]).collect();
        let final_ids = ids.iter().copied().filter(|id| is_final[id.index()]).collect();
        let logprobs = records.iter().map(|r| r.logprob).collect();

        Ok(NgramTable {
            order,
            lexicon,
            records,
            logprobs,
            ids,
            succ_index,
            succ,
            initial_ids,
            final_ids,
            is_initial,
            is_final,
        })
    }

    pub fn from_scored_set(set: ScoredSet) -> Result<Self> {
        Self::build(set.lexicon, set.ngrams)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn records(&self) -> &[ScoredNgram] {
        &self.records
    }

    pub fn ids(&self) -> &[NgramId] {
        &self.ids
    }

    pub fn record(&self, id: NgramId) -> Result<&ScoredNgram> {
        self.records.get(id.index()).ok_or(Error::InvalidId(id.0))
    }

    pub fn words(&self, id: NgramId) -> &[WordId] {
        &self.records[id.index()].ngram.words
    }

    #[inline]
    pub fn logprob(&self, id: NgramId) -> f64 {
        self.logprobs[id.index()]
    }

    #[inline]
    pub fn is_initial(&self, id: NgramId) -> bool {
        self.is_initial[id.index()]
    }

    #[inline]
    pub fn is_final(&self, id: NgramId) -> bool {
        self.is_final[id.index()]
    }

    pub fn initial_ids(&self) -> &[NgramId] {
        &self.initial_ids
    }

    pub fn final_ids(&self) -> &[NgramId] {
        &self.final_ids
    }

    /// N-grams whose first `n-1` words equal the last `n-1` words of `id`.
    pub fn successors(&self, id: NgramId) -> Result<&[NgramId]> {
        let range = self.succ.get(id.index()).ok_or(Error::InvalidId(id.0))?;
        Ok(&self.ids[range.start as usize..range.end as usize])
    }

    /// Unchecked variant of [`successors`](Self::successors) for the search loop.
    #[inline]
    pub(crate) fn successors_of(&self, id: NgramId) -> &[NgramId] {
        let range = &self.succ[id.index()];
        &self.ids[range.start as usize..range.end as usize]
    }

    /// N-grams starting with the given `n-1` words.
    pub fn with_prefix(&self, prefix: &[WordId]) -> &[NgramId] {
        match self.succ_index.get(prefix) {
            Some(r) => &self.ids[r.start as usize..r.end as usize],
            None => &[],
        }
    }

    pub fn prefix_count(&self) -> usize {
        self.succ_index.len()
    }

    pub fn min_logprob(&self) -> f64 {
        self.logprobs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_logprob(&self) -> f64 {
        self.logprobs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn selected_scores(&self, include_boundary: bool) -> Result<Vec<f64>> {
        let scores: Vec<f64> = self
            .records
            .iter()
            .filter(|r| include_boundary || !(r.ngram.sentence_initial || r.ngram.sentence_final))
            .map(|r| r.logprob)
            .collect();
        if scores.is_empty() {
            return Err(if self.records.is_empty() {
                Error::EmptyInput
            } else {
                Error::EmptyAfterFilter
            });
        }
        Ok(scores)
    }

    /// Summary of the log-probabilities, one value per distinct n-gram.
    /// With `include_boundary == false`, n-grams touching `<s>` or `</s>`
    /// are left out.
    pub fn stats(&self, include_boundary: bool) -> Result<DistributionStats> {
        DistributionStats::from_values(&self.selected_scores(include_boundary)?)
    }

    pub fn qq_data(&self, include_boundary: bool) -> Result<Vec<QqPoint>> {
        qq_points(&self.selected_scores(include_boundary)?)
    }

    /// Checks that consecutive ids chain.
    pub fn check_chain(&self, chain: &[NgramId]) -> Result<()> {
        for &id in chain {
            self.record(id)?;
        }
        for (i, pair) in chain.windows(2).enumerate() {
            if self.words(pair[0])[1..] != self.words(pair[1])[..self.order - 1] {
                return Err(Error::BrokenChain(i + 1));
            }
        }
        Ok(())
    }

    /// Words of a chain: all words of the first n-gram, then the last word
    /// of every following one. Boundary markers are kept.
    pub fn chain_words(&self, chain: &[NgramId]) -> Result<Vec<WordId>> {
        self.check_chain(chain)?;
        let mut out = Vec::with_capacity(chain.len() + self.order);
        if let Some(&first) = chain.first() {
            out.extend_from_slice(self.words(first));
        }
        for &id in chain.iter().skip(1) {
            out.push(*self.words(id).last().expect("order >= 2"));
        }
        Ok(out)
    }
}
