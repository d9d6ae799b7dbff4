//! Sentence-level scoring and selection of generated solutions.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Lexicon;
use crate::error::{Error, Result};
use crate::search::Solution;
use crate::stats::DistributionStats;
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PplSource {
    Pseudo,
    External,
}

impl fmt::Display for PplSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PplSource::Pseudo => "pseudo",
            PplSource::External => "external",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSolution {
    pub solution: Solution,
    pub ppl: f64,
    pub source: PplSource,
}

/// `exp(-total / m)` for a chain of `m` n-grams.
pub fn pseudo_ppl_from(total_logprob: f64, length: usize) -> f64 {
    (-total_logprob / length as f64).exp()
}

pub fn pseudo_ppl(solution: &Solution) -> f64 {
    pseudo_ppl_from(solution.total_logprob, solution.chain.len())
}

pub fn rank_pseudo(solutions: Vec<Solution>) -> Vec<RankedSolution> {
    solutions
        .into_iter()
        .map(|s| RankedSolution {
            ppl: pseudo_ppl(&s),
            solution: s,
            source: PplSource::Pseudo,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub kept: Vec<RankedSolution>,
    pub total: usize,
}

/// Keeps entries with `ppl <= cutoff`, preserving order.
pub fn select_by_cutoff(ranked: Vec<RankedSolution>, cutoff: f64) -> Selection {
    let total = ranked.len();
    let kept = ranked.into_iter().filter(|r| r.ppl <= cutoff).collect();
    Selection { kept, total }
}

/// Stable sort by ascending perplexity.
pub fn sort_by_ppl(ranked: &mut [RankedSolution]) {
    ranked.sort_by(|a, b| a.ppl.total_cmp(&b.ppl));
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceScores {
    pub ranked: Vec<RankedSolution>,
    /// Solutions with no external score, ranked by pseudo-perplexity.
    pub fallbacks: usize,
    /// Sentences listed more than once; the last row wins.
    pub duplicates: Vec<String>,
}

/// Reads `sentence<TAB>ppl` rows and attaches the scores to matching
/// solutions (matched on the marker-free sentence text).
pub fn load_sentence_scores<R: BufRead>(
    reader: R,
    solutions: Vec<Solution>,
    lexicon: &Lexicon,
) -> Result<SentenceScores> {
    let mut scores: HashMap<String, f64> = HashMap::new();
    let mut duplicates = Vec::new();
    for row in tsv::data_rows(reader)? {
        let Some((sentence, ppl)) = row.text.rsplit_once('\t') else {
            return Err(Error::MalformedRow {
                line: row.line,
                reason: "expected `sentence<TAB>ppl`".into(),
            });
        };
        if row.line == 1 && sentence == "sentence" && ppl == "ppl" {
            continue;
        }
        let value: f64 = ppl.trim().parse().map_err(|_| Error::MalformedRow {
            line: row.line,
            reason: format!("`{ppl}` is not a number"),
        })?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositivePpl {
                line: row.line,
                value: ppl.to_string(),
            });
        }
        if scores.insert(sentence.to_string(), value).is_some() {
            duplicates.push(sentence.to_string());
        }
    }
    let mut fallbacks = 0;
    let ranked = solutions
        .into_iter()
        .map(|s| match scores.get(&s.sentence(lexicon)) {
            Some(&ppl) => RankedSolution {
                solution: s,
                ppl,
                source: PplSource::External,
            },
            None => {
                fallbacks += 1;
                RankedSolution {
                    ppl: pseudo_ppl(&s),
                    solution: s,
                    source: PplSource::Pseudo,
                }
            }
        })
        .collect();
    Ok(SentenceScores {
        ranked,
        fallbacks,
        duplicates,
    })
}

pub fn ppl_summary(ranked: &[RankedSolution]) -> Result<DistributionStats> {
    let values: Vec<f64> = ranked.iter().map(|r| r.ppl).collect();
    DistributionStats::from_values(&values)
}

/// Ranked output: sentence, ppl, source, total_logprob.
pub fn write_ranked<W: Write>(
    out: &mut W,
    ranked: &[RankedSolution],
    lexicon: &Lexicon,
    comments: &[String],
) -> Result<()> {
    tsv::write_comments(out, comments)?;
    writeln!(out, "sentence\tppl\tsource\ttotal_logprob")?;
    for r in ranked {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.solution.sentence(lexicon),
            tsv::fmt_real(r.ppl),
            r.source,
            tsv::fmt_real(r.solution.total_logprob)
        )?;
    }
    Ok(())
}
