//! Filtering criteria deciding which n-grams may extend a partial chain.
//!
//! Every comparison goes through [`Direction`]. Under `KeepLeq` a value is
//! kept when it is at most its bound; `KeepGeq` mirrors each comparison and
//! subtracts the slack instead of adding it, so a positive slack always
//! loosens the gliding bound.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{NgramId, NgramTable};
use crate::search::SearchState;
use crate::stats::DistributionStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Vanilla,
    Instant,
    Final,
    Gliding,
    GlidingLookahead,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Vanilla,
        Criterion::Instant,
        Criterion::Final,
        Criterion::Gliding,
        Criterion::GlidingLookahead,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Vanilla => "vanilla",
            Criterion::Instant => "instant",
            Criterion::Final => "final",
            Criterion::Gliding => "gliding",
            Criterion::GlidingLookahead => "gliding-lookahead",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "vanilla" => Ok(Criterion::Vanilla),
            "instant" => Ok(Criterion::Instant),
            "final" => Ok(Criterion::Final),
            "gliding" => Ok(Criterion::Gliding),
            "gliding-lookahead" | "lookahead" => Ok(Criterion::GlidingLookahead),
            other => Err(Error::InvalidConfig(format!("unknown criterion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    #[default]
    KeepLeq,
    KeepGeq,
}

impl Direction {
    #[inline]
    pub fn keeps(self, value: f64, bound: f64) -> bool {
        match self {
            Direction::KeepLeq => value <= bound,
            Direction::KeepGeq => value >= bound,
        }
    }

    /// Moves `bound` by `slack` towards the permissive side.
    #[inline]
    pub fn relax(self, bound: f64, slack: f64) -> f64 {
        match self {
            Direction::KeepLeq => bound + slack,
            Direction::KeepGeq => bound - slack,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::KeepLeq => "keep-leq",
            Direction::KeepGeq => "keep-geq",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "keep-leq" | "leq" | "<=" => Ok(Direction::KeepLeq),
            "keep-geq" | "geq" | ">=" => Ok(Direction::KeepGeq),
            other => Err(Error::InvalidConfig(format!("unknown direction `{other}`"))),
        }
    }
}

/// Per-step bound `mean - lambda * std` of the n-gram score distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepBound(pub f64);

impl StepBound {
    pub fn from_moments(mean: f64, std: f64, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let b = mean - lambda * std;
        if !b.is_finite() {
            return Err(Error::InvalidConfig(format!("step bound {b} is not finite")));
        }
        Ok(StepBound(b))
    }

    pub fn from_stats(stats: &DistributionStats, lambda: f64) -> Result<Self> {
        Self::from_moments(stats.mean, stats.std, lambda)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&lambda) {
        return Err(Error::InvalidConfig(format!("lambda {lambda} outside [0, 2]")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub criterion: Criterion,
    pub direction: Direction,
    /// `T` for the instant and final criteria.
    pub threshold: f64,
    /// Recorded for reporting; the bound actually used is `step_bound`.
    pub lambda: Option<f64>,
    pub step_bound: StepBound,
    pub slack: f64,
    pub horizon: usize,
    /// Number of n-gram variables in a chain.
    pub length: usize,
    /// First n-gram must start with `<s>`.
    pub require_start: bool,
    /// Last n-gram must end with `</s>`.
    pub require_end: bool,
}

impl FilterConfig {
    pub fn vanilla(length: usize) -> Self {
        FilterConfig {
            criterion: Criterion::Vanilla,
            direction: Direction::KeepLeq,
            threshold: 0.0,
            lambda: None,
            step_bound: StepBound(0.0),
            slack: 0.0,
            horizon: 1,
            length,
            require_start: true,
            require_end: true,
        }
    }

    pub fn instant(length: usize, threshold: f64) -> Self {
        FilterConfig {
            criterion: Criterion::Instant,
            threshold,
            ..Self::vanilla(length)
        }
    }

    pub fn final_threshold(length: usize, threshold: f64) -> Self {
        FilterConfig {
            criterion: Criterion::Final,
            threshold,
            ..Self::vanilla(length)
        }
    }

    /// Gliding threshold with `b = mean - lambda * std` and slack defaulting
    /// to one standard deviation.
    pub fn gliding(length: usize, stats: &DistributionStats, lambda: f64) -> Result<Self> {
        Ok(FilterConfig {
            criterion: Criterion::Gliding,
            lambda: Some(lambda),
            step_bound: StepBound::from_stats(stats, lambda)?,
            slack: stats.std,
            ..Self::vanilla(length)
        })
    }

    pub fn gliding_lookahead(length: usize, stats: &DistributionStats, lambda: f64, horizon: usize) -> Result<Self> {
        Ok(FilterConfig {
            criterion: Criterion::GlidingLookahead,
            horizon,
            ..Self::gliding(length, stats, lambda)?
        })
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    pub fn with_step_bound(mut self, bound: f64) -> Self {
        self.step_bound = StepBound(bound);
        self
    }

    pub fn with_boundaries(mut self, start: bool, end: bool) -> Self {
        self.require_start = start;
        self.require_end = end;
        self
    }

    pub fn validate(&self, order: usize) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidConfig("chain length must be at least 1".into()));
        }
        if let Some(l) = self.lambda {
            check_lambda(l)?;
        }
        for (name, v) in [
            ("threshold", self.threshold),
            ("step bound", self.step_bound.0),
            ("slack", self.slack),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} {v} is not finite")));
            }
        }
        if self.criterion == Criterion::GlidingLookahead && (self.horizon == 0 || self.horizon + 1 > order) {
            return Err(Error::InvalidConfig(format!(
                "horizon {} outside [1, {}]",
                self.horizon,
                order.saturating_sub(1)
            )));
        }
        Ok(())
    }
}

#[inline]
pub fn check_instant(logprob: f64, threshold: f64, direction: Direction) -> bool {
    direction.keeps(logprob, threshold)
}

#[inline]
pub fn check_final(total: f64, threshold: f64, direction: Direction) -> bool {
    direction.keeps(total, threshold)
}

/// `prefix_sum` is the score sum of the first `step` n-grams (1-based).
#[inline]
pub fn check_gliding(prefix_sum: f64, step: usize, bound: StepBound, slack: f64, direction: Direction) -> bool {
    direction.keeps(prefix_sum, direction.relax(step as f64 * bound.0, slack))
}

/// True when some successor path `id = N_i, N_i+1, .., N_i+d` with
/// `d = min(horizon, length - i)` keeps every window sum
/// `N_i + .. + N_i+q` within `(q + 1) * b`, relaxed by the slack. When the path reaches the last
/// position and an end boundary is required, it must end on a
/// sentence-final n-gram.
pub fn check_lookahead(table: &NgramTable, id: NgramId, step: usize, config: &FilterConfig) -> bool {
    debug_assert!(step >= 1 && step <= config.length);
    let depth = config.horizon.min(config.length - step);
    lookahead_from(table, config, id, step, 0, depth, 0.0)
}

fn lookahead_from(
    table: &NgramTable,
    config: &FilterConfig,
    id: NgramId,
    step: usize,
    q: usize,
    depth: usize,
    sum: f64,
) -> bool {
    let sum = sum + table.logprob(id);
    let bound = config
        .direction
        .relax((q + 1) as f64 * config.step_bound.0, config.slack);
    if !config.direction.keeps(sum, bound) {
        return false;
    }
    if q == depth {
        return !(config.require_end && step + q == config.length) || table.is_final(id);
    }
    table
        .successors_of(id)
        .iter()
        .any(|&next| lookahead_from(table, config, next, step, q + 1, depth, sum))
}

/// Why a candidate was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prune {
    Boundary,
    Instant,
    Gliding,
    Lookahead,
    Final,
}

/// Decides whether `candidate` may be assigned at 1-based `step` after a
/// prefix summing to `prefix_sum`. Returns the extended prefix sum.
///
/// The final criterion is not checked here; it applies to complete chains.
#[inline]
pub fn admit(
    table: &NgramTable,
    config: &FilterConfig,
    step: usize,
    prefix_sum: f64,
    candidate: NgramId,
) -> std::result::Result<f64, Prune> {
    if step == config.length && config.require_end && !table.is_final(candidate) {
        return Err(Prune::Boundary);
    }
    let logprob = table.logprob(candidate);
    let sum = prefix_sum + logprob;
    match config.criterion {
        Criterion::Vanilla | Criterion::Final => {}
        Criterion::Instant => {
            if !check_instant(logprob, config.threshold, config.direction) {
                return Err(Prune::Instant);
            }
        }
        Criterion::Gliding => {
            if !check_gliding(sum, step, config.step_bound, config.slack, config.direction) {
                return Err(Prune::Gliding);
            }
        }
        Criterion::GlidingLookahead => {
            if !check_lookahead(table, candidate, step, config) {
                return Err(Prune::Lookahead);
            }
            if !check_gliding(sum, step, config.step_bound, config.slack, config.direction) {
                return Err(Prune::Gliding);
            }
        }
    }
    Ok(sum)
}

/// Candidates for the first position: sentence-initial n-grams when a start
/// boundary is required, every n-gram otherwise.
pub fn root_domain<'a>(table: &'a NgramTable, config: &FilterConfig) -> &'a [NgramId] {
    if config.require_start {
        table.initial_ids()
    } else {
        table.ids()
    }
}

/// Values of the next position that survive the configured criterion.
pub fn admissible_successors(table: &NgramTable, state: &SearchState, config: &FilterConfig) -> Vec<NgramId> {
    let step = state.len() + 1;
    if step > config.length {
        return Vec::new();
    }
    let domain = match state.last() {
        None => root_domain(table, config),
        Some(last) => table.successors_of(last),
    };
    domain
        .iter()
        .copied()
        .filter(|&c| admit(table, config, step, state.prefix_sum(), c).is_ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Lexicon, RawNgram, WordId};
    use crate::scoring::ScoredNgram;

    // summary statistics of a typical 4-gram score distribution
    const MU: f64 = -5.26;
    const SIGMA: f64 = 1.43;

    #[test]
    fn instant_examples() {
        assert!(check_instant(-5.5, MU, Direction::KeepLeq));
        assert!(check_instant(MU, MU, Direction::KeepLeq));
        assert!(check_instant(MU, MU, Direction::KeepGeq));
        assert!(check_instant(-5.0, MU, Direction::KeepGeq));
        assert!(!check_instant(-5.0, MU, Direction::KeepLeq));
    }

    #[test]
    fn final_examples() {
        let total = -1.0 + -2.0 + -3.0;
        assert!(check_final(total, -5.0, Direction::KeepLeq));
        assert!(check_final(-5.0, -5.0, Direction::KeepLeq));
        assert!(!check_final(total, -5.0, Direction::KeepGeq));
    }

    #[test]
    fn gliding_examples() {
        let b = StepBound::from_moments(MU, SIGMA, 1.5).unwrap();
        assert!((b.0 - (-7.405)).abs() < 1e-12);
        // 2b = -14.81
        assert!(!check_gliding(-13.0, 2, b, 0.0, Direction::KeepLeq));
        assert!(check_gliding(b.0, 1, b, 0.0, Direction::KeepLeq));
        // slack sigma: bound -13.38
        assert!(!check_gliding(-13.0, 2, b, SIGMA, Direction::KeepLeq));
        assert!(check_gliding(-13.4, 2, b, SIGMA, Direction::KeepLeq));
    }

    #[test]
    fn lambda_range() {
        assert!(StepBound::from_moments(MU, SIGMA, 2.5).is_err());
        assert!(StepBound::from_moments(MU, SIGMA, -0.1).is_err());
        assert!(StepBound::from_moments(MU, SIGMA, 0.0).is_ok());
    }

    #[test]
    fn parse_names() {
        for c in Criterion::ALL {
            assert_eq!(c.name().parse::<Criterion>().unwrap(), c);
        }
        assert_eq!("keep-geq".parse::<Direction>().unwrap(), Direction::KeepGeq);
        assert!("sideways".parse::<Direction>().is_err());
    }

    fn scored(words: &[u32], logprob: f64) -> ScoredNgram {
        ScoredNgram {
            ngram: RawNgram::new(words.iter().map(|&w| WordId(w)).collect(), 1),
            logprob,
        }
    }

    /// 3-grams: <s> x y (-1) -> x y z (-1) -> y z </s> (-9) and
    /// <s> x w (-1) -> x w v (-1) -> w v </s> (-1).
    fn trigram_graph() -> NgramTable {
        let lex = Lexicon::from_words(["v", "w", "x", "y", "z"]);
        let id = |s: &str| lex.id(s).unwrap().0;
        let (s, e) = (0, 1);
        let recs = vec![
            scored(&[s, id("x"), id("y")], -1.0),
            scored(&[id("x"), id("y"), id("z")], -1.0),
            scored(&[id("y"), id("z"), e], -9.0),
            scored(&[s, id("x"), id("w")], -1.0),
            scored(&[id("x"), id("w"), id("v")], -1.0),
            scored(&[id("w"), id("v"), e], -1.0),
        ];
        NgramTable::build(lex, recs).unwrap()
    }

    fn find(t: &NgramTable, text: &str) -> NgramId {
        *t.ids()
            .iter()
            .find(|&&i| t.lexicon().render(t.words(i)) == text)
            .unwrap()
    }

    #[test]
    fn lookahead_prunes_on_bad_future() {
        let t = trigram_graph();
        // GEQ with b = -2: keep n-grams whose windows stay above -2 per step.
        let cfg = FilterConfig {
            criterion: Criterion::GlidingLookahead,
            direction: Direction::KeepGeq,
            step_bound: StepBound(-2.0),
            horizon: 2,
            ..FilterConfig::vanilla(3)
        };
        let xy = find(&t, "x y z");
        let xw = find(&t, "x w v");
        // x y z passes on its own but its only successor scores -9
        assert!(cfg.direction.keeps(t.logprob(xy), cfg.step_bound.0));
        assert!(!check_lookahead(&t, xy, 2, &cfg));
        assert!(check_lookahead(&t, xw, 2, &cfg));
        // <s> x y still has the w branch? no: it only leads to x y z
        assert!(!check_lookahead(&t, find(&t, "<s> x y"), 1, &cfg));
        assert!(check_lookahead(&t, find(&t, "<s> x w"), 1, &cfg));
    }

    #[test]
    fn zero_depth_lookahead_is_single_gliding_step() {
        let t = trigram_graph();
        for b in [-0.5, -1.0, -5.0, -10.0] {
            for slack in [0.0, 1.43, -0.5] {
                for dir in [Direction::KeepLeq, Direction::KeepGeq] {
                    let cfg = FilterConfig {
                        criterion: Criterion::GlidingLookahead,
                        direction: dir,
                        step_bound: StepBound(b),
                        slack,
                        horizon: 1,
                        ..FilterConfig::vanilla(3)
                    }
                    .with_boundaries(true, false);
                    // at the last position the horizon truncates to zero
                    for &id in t.ids() {
                        assert_eq!(
                            check_lookahead(&t, id, 3, &cfg),
                            check_gliding(t.logprob(id), 1, StepBound(b), slack, dir)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn admissible_vanilla_and_empty_instant() {
        let t = trigram_graph();
        let root = SearchState::new();
        let v = FilterConfig::vanilla(3);
        assert_eq!(admissible_successors(&t, &root, &v), t.initial_ids());
        let mut st = SearchState::new();
        st.push(&t, find(&t, "<s> x y"));
        assert_eq!(
            admissible_successors(&t, &st, &v),
            t.successors(find(&t, "<s> x y")).unwrap()
        );
        let inst = FilterConfig::instant(3, t.min_logprob() - 1.0);
        assert!(admissible_successors(&t, &root, &inst).is_empty());
    }

    #[test]
    fn validation() {
        let stats = DistributionStats::from_values(&[-1.0, -2.0]).unwrap();
        let cfg = FilterConfig::gliding_lookahead(4, &stats, 1.0, 3).unwrap();
        assert!(cfg.validate(3).is_err());
        assert!(cfg.validate(4).is_ok());
        assert!(FilterConfig::vanilla(0).validate(2).is_err());
        assert!(FilterConfig::gliding(3, &stats, 2.1).is_err());
    }
}
