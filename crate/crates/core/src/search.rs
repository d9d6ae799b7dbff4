//! Exhaustive depth-first enumeration of n-gram chains.

use std::fmt;
use std::ops::ControlFlow;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::{Lexicon, WordId, END, START};
use crate::error::{Error, Result};
use crate::index::{NgramId, NgramTable};
use crate::propagator::{self, check_final, Criterion, Direction, FilterConfig, Prune};
use crate::ranking;

/// A partial chain with the running sum of its scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchState {
    chain: Vec<NgramId>,
    sums: Vec<f64>,
}

impl SearchState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, table: &NgramTable, id: NgramId) {
        let sum = self.prefix_sum() + table.logprob(id);
        self.chain.push(id);
        self.sums.push(sum);
    }

    pub fn pop(&mut self) -> Option<NgramId> {
        self.sums.pop();
        self.chain.pop()
    }

    pub fn chain(&self) -> &[NgramId] {
        &self.chain
    }

    pub fn last(&self) -> Option<NgramId> {
        self.chain.last().copied()
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn prefix_sum(&self) -> f64 {
        self.sums.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub chain: Vec<NgramId>,
    /// `n + m - 1` words, boundary markers included.
    pub words: Vec<WordId>,
    pub total_logprob: f64,
    pub pseudo_ppl: f64,
}

impl Solution {
    pub fn from_chain(table: &NgramTable, chain: Vec<NgramId>) -> Result<Self> {
        let words = table.chain_words(&chain)?;
        let total_logprob = chain.iter().fold(0.0, |acc, &id| acc + table.logprob(id));
        let pseudo_ppl = ranking::pseudo_ppl_from(total_logprob, chain.len());
        Ok(Solution {
            chain,
            words,
            total_logprob,
            pseudo_ppl,
        })
    }

    /// Rendered sentence without boundary markers.
    pub fn sentence(&self, lexicon: &Lexicon) -> String {
        let inner: Vec<WordId> = self
            .words
            .iter()
            .copied()
            .filter(|&w| w != WordId::START && w != WordId::END)
            .collect();
        lexicon.render(&inner)
    }
}

/// Tokens of a chain: every word of the first n-gram, then the last word of
/// each following n-gram, with `<s>` and `</s>` removed.
pub fn render(table: &NgramTable, chain: &[NgramId]) -> Result<Vec<String>> {
    let words = table.chain_words(chain)?;
    Ok(words
        .into_iter()
        .map(|w| table.lexicon().word(w))
        .filter(|w| *w != START && *w != END)
        .map(str::to_string)
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Limits {
    pub max_solutions: Option<u64>,
    pub max_nodes: Option<u64>,
    pub wall_clock: Option<Duration>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxSolutions,
    MaxNodes,
    WallClock,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxSolutions => "solution limit reached",
            StopReason::MaxNodes => "node limit reached",
            StopReason::WallClock => "time limit reached",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneCounts {
    pub boundary: u64,
    pub instant: u64,
    pub gliding: u64,
    pub lookahead: u64,
    #[serde(rename = "final")]
    pub final_: u64,
}

impl PruneCounts {
    fn record(&mut self, p: Prune) {
        match p {
            Prune::Boundary => self.boundary += 1,
            Prune::Instant => self.instant += 1,
            Prune::Gliding => self.gliding += 1,
            Prune::Lookahead => self.lookahead += 1,
            Prune::Final => self.final_ += 1,
        }
    }

    fn add(&mut self, o: &PruneCounts) {
        self.boundary += o.boundary;
        self.instant += o.instant;
        self.gliding += o.gliding;
        self.lookahead += o.lookahead;
        self.final_ += o.final_;
    }

    pub fn total(&self) -> u64 {
        self.boundary + self.instant + self.gliding + self.lookahead + self.final_
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SearchStats {
    /// Assignments made, i.e. states entered.
    pub nodes: u64,
    pub pruned: PruneCounts,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Sorted lexicographically by chain.
    pub solutions: Vec<Solution>,
    pub stats: SearchStats,
    pub stopped: Option<StopReason>,
}

impl SearchOutcome {
    pub fn is_complete(&self) -> bool {
        self.stopped.is_none()
    }
}

/// Enumerates every admissible chain on one thread.
pub fn enumerate(table: &NgramTable, config: &FilterConfig, limits: &Limits) -> Result<SearchOutcome> {
    enumerate_with_workers(table, config, limits, 1)
}

/// Enumerates every admissible chain, splitting the first position's values
/// round-robin over `workers` threads. The output does not depend on the
/// worker count.
///
/// Stopping on a limit yields [`Error::LimitExceeded`] carrying the partial
/// outcome.
pub fn enumerate_with_workers(
    table: &NgramTable,
    config: &FilterConfig,
    limits: &Limits,
    workers: usize,
) -> Result<SearchOutcome> {
    config.validate(table.order())?;
    let start = Instant::now();
    let shared = Shared {
        limits: *limits,
        start,
        nodes: AtomicU64::new(0),
        solutions: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        reason: Mutex::new(None),
    };

    let mut root_pruned = PruneCounts::default();
    let mut roots = Vec::new();
    for &c in propagator::root_domain(table, config) {
        match propagator::admit(table, config, 1, 0.0, c) {
            Ok(sum) => roots.push((c, sum)),
            Err(p) => root_pruned.record(p),
        }
    }

    let workers = workers.max(1).min(roots.len().max(1));
    let mut slots: Vec<Vec<Solution>> = vec![Vec::new(); roots.len()];
    let mut nodes = 0;
    let mut pruned = root_pruned;

    let results: Vec<WorkerResult> = if workers == 1 {
        vec![run_worker(table, config, &shared, &roots, 0, 1)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let (shared, roots) = (&shared, &roots);
                    scope.spawn(move || run_worker(table, config, shared, roots, w, workers))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("search worker panicked"))
                .collect()
        })
    };
    for r in results {
        nodes += r.nodes;
        pruned.add(&r.pruned);
        for (root_index, sols) in r.per_root {
            slots[root_index] = sols;
        }
    }

    let outcome = SearchOutcome {
        solutions: slots.into_iter().flatten().collect(),
        stats: SearchStats {
            nodes,
            pruned,
            elapsed: start.elapsed(),
        },
        stopped: *shared.reason.lock().expect("poisoned"),
    };
    match outcome.stopped {
        None => Ok(outcome),
        Some(reason) => Err(Error::LimitExceeded {
            reason,
            partial: Box::new(outcome),
        }),
    }
}

struct Shared {
    limits: Limits,
    start: Instant,
    nodes: AtomicU64,
    solutions: AtomicU64,
    stop: AtomicBool,
    reason: Mutex<Option<StopReason>>,
}

impl Shared {
    fn halt(&self, reason: StopReason) {
        let mut r = self.reason.lock().expect("poisoned");
        if r.is_none() {
            *r = Some(reason);
        }
        self.stop.store(true, Ordering::Relaxed);
    }
}

struct WorkerResult {
    nodes: u64,
    pruned: PruneCounts,
    per_root: Vec<(usize, Vec<Solution>)>,
}

const SYNC_EVERY: u64 = 1024;

struct Worker<'a> {
    table: &'a NgramTable,
    config: &'a FilterConfig,
    shared: &'a Shared,
    chain: Vec<NgramId>,
    nodes: u64,
    unsynced: u64,
    pruned: PruneCounts,
    out: Vec<Solution>,
    /// Per-n-gram extreme used to bound what the remaining positions can add.
    final_extreme: f64,
}

fn run_worker(
    table: &NgramTable,
    config: &FilterConfig,
    shared: &Shared,
    roots: &[(NgramId, f64)],
    worker: usize,
    workers: usize,
) -> WorkerResult {
    let final_extreme = match config.direction {
        Direction::KeepLeq => table.min_logprob(),
        Direction::KeepGeq => table.max_logprob(),
    };
    let mut w = Worker {
        table,
        config,
        shared,
        chain: Vec::with_capacity(config.length),
        nodes: 0,
        unsynced: 0,
        pruned: PruneCounts::default(),
        out: Vec::new(),
        final_extreme,
    };
    let mut per_root = Vec::new();
    for (i, &(root, sum)) in roots.iter().enumerate().skip(worker).step_by(workers) {
        if shared.stop.load(Ordering::Relaxed) {
            break;
        }
        let flow = w.visit(root, 1, sum);
        per_root.push((i, std::mem::take(&mut w.out)));
        if flow.is_break() {
            break;
        }
    }
    shared.nodes.fetch_add(w.unsynced, Ordering::Relaxed);
    WorkerResult {
        nodes: w.nodes,
        pruned: w.pruned,
        per_root,
    }
}

impl Worker<'_> {
    fn tick(&mut self) -> ControlFlow<()> {
        self.nodes += 1;
        self.unsynced += 1;
        if self.unsynced < SYNC_EVERY {
            return ControlFlow::Continue(());
        }
        let total = self.shared.nodes.fetch_add(self.unsynced, Ordering::Relaxed) + self.unsynced;
        self.unsynced = 0;
        if self.shared.stop.load(Ordering::Relaxed) {
            return ControlFlow::Break(());
        }
        if self.shared.limits.max_nodes.is_some_and(|max| total > max) {
            self.shared.halt(StopReason::MaxNodes);
            return ControlFlow::Break(());
        }
        if self
            .shared
            .limits
            .wall_clock
            .is_some_and(|d| self.shared.start.elapsed() > d)
        {
            self.shared.halt(StopReason::WallClock);
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    }

    /// No completion of a chain of `step` n-grams summing to `sum` can meet
    /// the final threshold. A relative margin keeps rounding from pruning a
    /// chain that would land exactly on the threshold.
    fn final_unreachable(&self, step: usize, sum: f64) -> bool {
        let remaining = (self.config.length - step) as f64 * self.final_extreme;
        let best = sum + remaining;
        let t = self.config.threshold;
        let margin = 1e-9 * (1.0 + t.abs() + sum.abs() + remaining.abs());
        match self.config.direction {
            Direction::KeepLeq => best > t + margin,
            Direction::KeepGeq => best < t - margin,
        }
    }

    fn visit(&mut self, id: NgramId, step: usize, sum: f64) -> ControlFlow<()> {
        self.tick()?;
        self.chain.push(id);
        let flow = self.expand(step, sum);
        self.chain.pop();
        flow
    }

    fn expand(&mut self, step: usize, sum: f64) -> ControlFlow<()> {
        let config = self.config;
        let is_final = config.criterion == Criterion::Final;
        if step == config.length {
            if is_final && !check_final(sum, config.threshold, config.direction) {
                self.pruned.final_ += 1;
                return ControlFlow::Continue(());
            }
            return self.emit(sum);
        }
        if is_final && self.final_unreachable(step, sum) {
            self.pruned.final_ += 1;
            return ControlFlow::Continue(());
        }
        let last = *self.chain.last().expect("non-empty chain");
        for &c in self.table.successors_of(last) {
            match propagator::admit(self.table, config, step + 1, sum, c) {
                Ok(next) => self.visit(c, step + 1, next)?,
                Err(p) => self.pruned.record(p),
            }
        }
        ControlFlow::Continue(())
    }

    fn emit(&mut self, sum: f64) -> ControlFlow<()> {
        if let Some(max) = self.shared.limits.max_solutions {
            if self.shared.solutions.fetch_add(1, Ordering::Relaxed) >= max {
                self.shared.halt(StopReason::MaxSolutions);
                return ControlFlow::Break(());
            }
        }
        let chain = self.chain.clone();
        let words = self.table.chain_words(&chain).expect("search only follows successors");
        self.out.push(Solution {
            pseudo_ppl: ranking::pseudo_ppl_from(sum, chain.len()),
            chain,
            words,
            total_logprob: sum,
        });
        ControlFlow::Continue(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{extract_ngrams, tokenize};
    use crate::scoring::score_mle;

    fn toy_table() -> NgramTable {
        let corpus: Vec<_> = ["a b", "a c", "a b"].iter().map(|l| tokenize(l)).collect();
        let ex = extract_ngrams(&corpus, 2).unwrap();
        NgramTable::build(ex.lexicon, score_mle(&ex.ngrams).unwrap()).unwrap()
    }

    fn sentences(t: &NgramTable, o: &SearchOutcome) -> Vec<String> {
        o.solutions.iter().map(|s| s.sentence(t.lexicon())).collect()
    }

    #[test]
    fn toy_vanilla() {
        let t = toy_table();
        let out = enumerate(&t, &FilterConfig::vanilla(3), &Limits::default()).unwrap();
        assert_eq!(sentences(&t, &out), ["a b", "a c"]);
        let s = &out.solutions[0];
        assert_eq!(s.words.len(), 2 + 3 - 1);
        assert_eq!(s.words.first(), Some(&WordId::START));
        assert_eq!(s.words.last(), Some(&WordId::END));
        assert!((s.total_logprob - (2.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!(out.is_complete());
    }

    #[test]
    fn toy_empty_instant() {
        let t = toy_table();
        let cfg = FilterConfig::instant(3, t.min_logprob() - 1.0);
        let out = enumerate(&t, &cfg, &Limits::default()).unwrap();
        assert!(out.solutions.is_empty());
        assert_eq!(out.stats.nodes, 0);
        assert_eq!(out.stats.pruned.instant, 1);
    }

    #[test]
    fn render_examples() {
        let t = toy_table();
        let out = enumerate(&t, &FilterConfig::vanilla(3), &Limits::default()).unwrap();
        assert_eq!(render(&t, &out.solutions[0].chain).unwrap(), ["a", "b"]);
        assert_eq!(render(&t, &[NgramId(0)]).unwrap(), ["a"]);
        assert!(matches!(
            render(&t, &[NgramId(0), NgramId(4)]),
            Err(Error::BrokenChain(1))
        ));
    }

    #[test]
    fn open_ended_generation() {
        let t = toy_table();
        let cfg = FilterConfig::vanilla(2).with_boundaries(false, false);
        let out = enumerate(&t, &cfg, &Limits::default()).unwrap();
        // (<s>,a)->(a,b)|(a,c), (a,b)->(b,</s>), (a,c)->(c,</s>)
        assert_eq!(out.solutions.len(), 4);
    }

    #[test]
    fn state_tracks_prefix() {
        let t = toy_table();
        let mut st = SearchState::new();
        st.push(&t, NgramId(0));
        st.push(&t, NgramId(1));
        assert!((st.prefix_sum() - (t.logprob(NgramId(0)) + t.logprob(NgramId(1)))).abs() < 1e-15);
        assert_eq!(st.pop(), Some(NgramId(1)));
        assert_eq!(st.prefix_sum(), t.logprob(NgramId(0)));
    }

    #[test]
    fn solution_limit_is_flagged() {
        let t = toy_table();
        let limits = Limits {
            max_solutions: Some(1),
            ..Limits::default()
        };
        match enumerate(&t, &FilterConfig::vanilla(3), &limits) {
            Err(Error::LimitExceeded { reason, partial }) => {
                assert_eq!(reason, StopReason::MaxSolutions);
                assert_eq!(partial.solutions.len(), 1);
                assert!(!partial.is_complete());
            }
            other => panic!("expected a limit error, got {other:?}"),
        }
        // exactly as many solutions as allowed is not a limit hit
        let limits = Limits {
            max_solutions: Some(2),
            ..Limits::default()
        };
        assert!(enumerate(&t, &FilterConfig::vanilla(3), &limits).is_ok());
    }
}
