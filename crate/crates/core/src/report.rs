//! Solutions file and run metadata.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{NgramId, NgramTable};
use crate::propagator::{Criterion, Direction, FilterConfig};
use crate::search::{PruneCounts, SearchOutcome, Solution, StopReason};
use crate::tsv;

pub const SOLUTIONS_HEADER: &str = "sentence\ttotal_logprob\tpseudo_ppl\tchain";

/// One row of the solutions file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub sentence: String,
    pub total_logprob: f64,
    pub pseudo_ppl: f64,
    pub chain: Vec<NgramId>,
}

impl SolutionRecord {
    pub fn from_solution(table: &NgramTable, s: &Solution) -> Self {
        SolutionRecord {
            sentence: s.sentence(table.lexicon()),
            total_logprob: s.total_logprob,
            pseudo_ppl: s.pseudo_ppl,
            chain: s.chain.clone(),
        }
    }

    /// Rebuilds the solution against `table`, checking the chain.
    pub fn to_solution(&self, table: &NgramTable) -> Result<Solution> {
        Solution::from_chain(table, self.chain.clone())
    }
}

pub fn write_solutions<W: Write>(out: &mut W, records: &[SolutionRecord], comments: &[String]) -> Result<()> {
    tsv::write_comments(out, comments)?;
    writeln!(out, "{SOLUTIONS_HEADER}")?;
    for r in records {
        let chain: Vec<String> = r.chain.iter().map(|id| id.0.to_string()).collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.sentence,
            tsv::fmt_real(r.total_logprob),
            tsv::fmt_real(r.pseudo_ppl),
            chain.join(" ")
        )?;
    }
    Ok(())
}

pub fn read_solutions<R: BufRead>(reader: R) -> Result<Vec<SolutionRecord>> {
    let mut rows = tsv::data_rows(reader)?;
    if rows.first().is_some_and(|r| r.text == SOLUTIONS_HEADER) {
        rows.remove(0);
    }
    rows.iter()
        .map(|row| {
            let fields: Vec<&str> = row.text.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::MalformedRow {
                    line: row.line,
                    reason: format!("expected 4 columns, found {}", fields.len()),
                });
            }
            let chain = fields[3]
                .split(' ')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map(NgramId).map_err(|_| Error::MalformedRow {
                        line: row.line,
                        reason: format!("bad n-gram id `{s}`"),
                    })
                })
                .collect::<Result<_>>()?;
            Ok(SolutionRecord {
                sentence: fields[0].to_string(),
                total_logprob: tsv::parse_finite(fields[1], row.line)?,
                pseudo_ppl: tsv::parse_finite(fields[2], row.line)?,
                chain,
            })
        })
        .collect()
}

/// Sidecar describing a generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub criterion: Criterion,
    pub direction: Direction,
    pub lambda: Option<f64>,
    pub step_bound: f64,
    pub threshold: f64,
    pub slack: f64,
    pub horizon: usize,
    pub m: usize,
    pub solutions: usize,
    pub nodes: u64,
    pub pruned_by_criterion: PruneCounts,
    pub seconds: f64,
    pub complete: bool,
    pub stopped: Option<StopReason>,
}

impl RunMetadata {
    pub fn new(config: &FilterConfig, outcome: &SearchOutcome) -> Self {
        RunMetadata {
            criterion: config.criterion,
            direction: config.direction,
            lambda: config.lambda,
            step_bound: config.step_bound.0,
            threshold: config.threshold,
            slack: config.slack,
            horizon: config.horizon,
            m: config.length,
            solutions: outcome.solutions.len(),
            nodes: outcome.stats.nodes,
            pruned_by_criterion: outcome.stats.pruned,
            seconds: outcome.stats.elapsed.as_secs_f64(),
            complete: outcome.is_complete(),
            stopped: outcome.stopped,
        }
    }
}
