//! Shared fixtures for the benchmarks.

use ngram_markov::synthetic::SyntheticSpec;
use ngram_markov::{Criterion, FilterConfig, NgramTable};

pub struct Fixture {
    pub table: NgramTable,
    pub length: usize,
}

impl Fixture {
    /// The seeded ten-thousand n-gram trigram instance.
    pub fn ten_thousand() -> Self {
        let spec = SyntheticSpec::ten_thousand(7);
        Fixture {
            table: spec.build().expect("synthetic instance builds"),
            length: spec.natural_length(),
        }
    }

    /// Configuration for `criterion` at `lambda`. Thresholds for instant and
    /// final follow the same mean - lambda * std rule as the sweep command.
    pub fn config(&self, criterion: Criterion, lambda: f64) -> FilterConfig {
        let stats = self.table.stats(true).expect("non-empty table");
        let b = stats.mean - lambda * stats.std;
        let m = self.length;
        match criterion {
            Criterion::Vanilla => FilterConfig::vanilla(m),
            Criterion::Instant => FilterConfig::instant(m, b),
            Criterion::Final => FilterConfig::final_threshold(m, m as f64 * b),
            Criterion::Gliding => FilterConfig::gliding(m, &stats, lambda).expect("lambda in range"),
            Criterion::GlidingLookahead => {
                FilterConfig::gliding_lookahead(m, &stats, lambda, self.table.order() - 1).expect("lambda in range")
            }
        }
    }
}
