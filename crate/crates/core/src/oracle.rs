//! Brute-force reference enumeration used to verify the search.
//!
//! Nothing here goes through the successor index or the propagator: the
//! successor relation is recomputed by comparing words, every chain of the
//! requested length is materialized, and the criteria are evaluated as
//! plain inequalities over the finished chains.

use crate::error::{Error, Result};
use crate::index::{NgramId, NgramTable};
use crate::propagator::{Criterion, Direction, FilterConfig};
use crate::search::Solution;

/// Largest number of chains the oracle will materialize.
pub const CHAIN_GUARD: u64 = 10_000;

fn follows(table: &NgramTable, a: NgramId, b: NgramId) -> bool {
    let (wa, wb) = (table.words(a), table.words(b));
    let n = wa.len();
    wa[1..] == wb[..n - 1]
}

fn successor_lists(table: &NgramTable) -> Vec<Vec<NgramId>> {
    let ids: Vec<NgramId> = (0..table.len() as u32).map(NgramId).collect();
    ids.iter()
        .map(|&a| ids.iter().copied().filter(|&b| follows(table, a, b)).collect())
        .collect()
}

/// Every successor-valid sequence of `len` n-grams starting at `from`.
fn paths(succ: &[Vec<NgramId>], from: &[NgramId], len: usize) -> Vec<Vec<NgramId>> {
    let mut out: Vec<Vec<NgramId>> = from.iter().map(|&id| vec![id]).collect();
    for _ in 1..len {
        let mut next = Vec::new();
        for p in &out {
            let last = *p.last().expect("non-empty");
            for &s in &succ[last.index()] {
                let mut q = p.clone();
                q.push(s);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn leq_or_geq(dir: Direction, value: f64, bound: f64) -> bool {
    match dir {
        Direction::KeepLeq => value <= bound,
        Direction::KeepGeq => value >= bound,
    }
}

fn slackened(dir: Direction, bound: f64, slack: f64) -> f64 {
    match dir {
        Direction::KeepLeq => bound + slack,
        Direction::KeepGeq => bound - slack,
    }
}

/// Look-ahead predicate for n-gram `id` at 1-based position `pos`,
/// decided by listing every path over the horizon.
pub fn lookahead_holds(table: &NgramTable, config: &FilterConfig, id: NgramId, pos: usize) -> bool {
    let succ = successor_lists(table);
    lookahead_with(table, &succ, config, id, pos)
}

fn lookahead_with(table: &NgramTable, succ: &[Vec<NgramId>], config: &FilterConfig, id: NgramId, pos: usize) -> bool {
    let depth = config.horizon.min(config.length - pos);
    let b = config.step_bound.0;
    paths(succ, &[id], depth + 1).iter().any(|path| {
        let mut sum = 0.0;
        for (q, &n) in path.iter().enumerate() {
            sum += table.logprob(n);
            let bound = slackened(config.direction, (q + 1) as f64 * b, config.slack);
            if !leq_or_geq(config.direction, sum, bound) {
                return false;
            }
        }
        let last = *path.last().expect("non-empty");
        !(config.require_end && pos + depth == config.length) || table.records()[last.index()].ngram.sentence_final
    })
}

fn accepts(table: &NgramTable, succ: &[Vec<NgramId>], config: &FilterConfig, chain: &[NgramId]) -> bool {
    let rec = |id: NgramId| &table.records()[id.index()].ngram;
    if config.require_start && !rec(chain[0]).sentence_initial {
        return false;
    }
    if config.require_end && !rec(chain[chain.len() - 1]).sentence_final {
        return false;
    }
    let dir = config.direction;
    let scores: Vec<f64> = chain.iter().map(|&id| table.logprob(id)).collect();
    let prefix: Vec<f64> = scores
        .iter()
        .scan(0.0, |acc, &s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let gliding = || {
        prefix.iter().enumerate().all(|(i, &p)| {
            let k = (i + 1) as f64;
            leq_or_geq(dir, p, slackened(dir, k * config.step_bound.0, config.slack))
        })
    };
    match config.criterion {
        Criterion::Vanilla => true,
        Criterion::Instant => scores.iter().all(|&s| leq_or_geq(dir, s, config.threshold)),
        Criterion::Final => leq_or_geq(dir, prefix[prefix.len() - 1], config.threshold),
        Criterion::Gliding => gliding(),
        Criterion::GlidingLookahead => {
            gliding()
                && chain
                    .iter()
                    .enumerate()
                    .all(|(i, &id)| lookahead_with(table, succ, config, id, i + 1))
        }
    }
}

/// Lists every chain accepted by `config`, sorted by chain.
///
/// Refuses with [`Error::OracleTooLarge`] when more than [`CHAIN_GUARD`]
/// chains of the requested length exist.
pub fn brute_force_enumerate(table: &NgramTable, config: &FilterConfig) -> Result<Vec<Solution>> {
    config.validate(table.order())?;
    let succ = successor_lists(table);

    // chains of length k starting at each n-gram
    let mut counts = vec![1u64; table.len()];
    for _ in 1..config.length {
        counts = (0..table.len())
            .map(|i| {
                succ[i]
                    .iter()
                    .fold(0u64, |acc, s| acc.saturating_add(counts[s.index()]))
            })
            .collect();
    }
    let total = counts.iter().fold(0u64, |acc, &c| acc.saturating_add(c));
    if total > CHAIN_GUARD {
        return Err(Error::OracleTooLarge(total));
    }

    let all: Vec<NgramId> = (0..table.len() as u32).map(NgramId).collect();
    let mut chains: Vec<Vec<NgramId>> = paths(&succ, &all, config.length)
        .into_iter()
        .filter(|c| accepts(table, &succ, config, c))
        .collect();
    chains.sort();
    chains.into_iter().map(|c| Solution::from_chain(table, c)).collect()
}
