//! Log-probability attachment: corpus MLE or imported external scores.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::{self, Lexicon, RawNgram, WordId};
use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredNgram {
    pub ngram: RawNgram,
    /// Natural log of the n-gram probability (or any finite model score).
    pub logprob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Mle,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSource {
    pub kind: ScoreKind,
    pub default_logprob: Option<f64>,
}

impl ScoreSource {
    pub fn mle() -> Self {
        ScoreSource {
            kind: ScoreKind::Mle,
            default_logprob: None,
        }
    }

    pub fn external(default_logprob: Option<f64>) -> Result<Self> {
        if let Some(d) = default_logprob {
            if !d.is_finite() {
                return Err(Error::InvalidConfig(format!("default score {d} is not finite")));
            }
        }
        Ok(ScoreSource {
            kind: ScoreKind::External,
            default_logprob,
        })
    }
}

/// A uniform-order set of scored n-grams together with the lexicon that
/// names their words. Sorted by word ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    pub order: usize,
    pub lexicon: Lexicon,
    pub ngrams: Vec<ScoredNgram>,
}

/// `ln(C(Y) / C(H))`.
pub fn mle_logprob(ngram: &RawNgram, history_count: u64) -> Result<f64> {
    if history_count == 0 {
        return Err(Error::ZeroHistory);
    }
    Ok((ngram.count as f64 / history_count as f64).ln())
}

/// Scores every n-gram by MLE, taking `C(H)` as the summed count of all
/// n-grams that share the same `n-1` word prefix.
pub fn score_mle(ngrams: &[RawNgram]) -> Result<Vec<ScoredNgram>> {
    let mut history: HashMap<&[WordId], u64> = HashMap::new();
    for g in ngrams {
        let n = g.words.len();
        *history.entry(&g.words[..n - 1]).or_insert(0) += g.count;
    }
    ngrams
        .iter()
        .map(|g| {
            let h = history[&g.words[..g.words.len() - 1]];
            Ok(ScoredNgram {
                ngram: g.clone(),
                logprob: mle_logprob(g, h)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExternalScores {
    pub scored: Vec<ScoredNgram>,
    /// Line numbers of rows naming an n-gram absent from the table.
    pub unknown_rows: Vec<usize>,
    /// Number of n-grams that received the default score.
    pub defaulted: usize,
}

/// Reads a score file (`w1..wn`, logprob) and attaches the scores to
/// `ngrams`. A header row starting with `w1` is tolerated.
pub fn load_external_scores<R: BufRead>(
    reader: R,
    lexicon: &Lexicon,
    ngrams: &[RawNgram],
    source: ScoreSource,
) -> Result<ExternalScores> {
    let order = ngrams.first().map_or(0, RawNgram::order);
    let mut rows = tsv::data_rows(reader)?;
    if rows.first().is_some_and(|r| corpus::is_header(&r.text)) {
        rows.remove(0);
    }

    let mut scores: HashMap<Vec<WordId>, f64> = HashMap::new();
    let mut unknown_rows = Vec::new();
    for row in &rows {
        let fields: Vec<&str> = row.text.split('\t').collect();
        if fields.len() != order + 1 {
            return Err(Error::MalformedRow {
                line: row.line,
                reason: format!("expected {} columns, found {}", order + 1, fields.len()),
            });
        }
        let score = tsv::parse_finite(fields[order], row.line)?;
        let ids: Option<Vec<WordId>> = fields[..order].iter().map(|w| lexicon.id(w)).collect();
        match ids {
            Some(ids) => {
                scores.insert(ids, score);
            }
            None => unknown_rows.push(row.line),
        }
    }

    let mut defaulted = 0;
    let mut scored = Vec::with_capacity(ngrams.len());
    for g in ngrams {
        let logprob = match scores.remove(&g.words) {
            Some(s) => s,
            None => match source.default_logprob {
                Some(d) => {
                    defaulted += 1;
                    d
                }
                None => return Err(Error::MissingScore(lexicon.render(&g.words))),
            },
        };
        scored.push(ScoredNgram {
            ngram: g.clone(),
            logprob,
        });
    }
    // Whatever is left names word tuples that are all known words but not
    // an n-gram of the table.
    if !scores.is_empty() {
        for row in &rows {
            let fields: Vec<&str> = row.text.split('\t').collect();
            let ids: Option<Vec<WordId>> = fields[..order].iter().map(|w| lexicon.id(w)).collect();
            if ids.is_some_and(|ids| scores.contains_key(&ids)) {
                unknown_rows.push(row.line);
            }
        }
        unknown_rows.sort_unstable();
    }
    Ok(ExternalScores {
        scored,
        unknown_rows,
        defaulted,
    })
}

fn scored_header(order: usize) -> String {
    let mut cols: Vec<String> = (1..=order).map(|i| format!("w{i}")).collect();
    cols.extend(["count", "initial", "final", "logprob"].map(String::from));
    cols.join("\t")
}

/// Writes a scored table: `w1..wn`, count, initial, final, logprob.
/// Rows are emitted in word-id order.
pub fn save_scored<W: Write>(out: &mut W, set: &ScoredSet, comments: &[String]) -> Result<()> {
    tsv::write_comments(out, comments)?;
    writeln!(out, "{}", scored_header(set.order))?;
    let mut rows: Vec<&ScoredNgram> = set.ngrams.iter().collect();
    rows.sort_by(|a, b| a.ngram.words.cmp(&b.ngram.words));
    for s in rows {
        for &w in &s.ngram.words {
            write!(out, "{}\t", set.lexicon.word(w))?;
        }
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            s.ngram.count,
            u8::from(s.ngram.sentence_initial),
            u8::from(s.ngram.sentence_final),
            tsv::fmt_real(s.logprob)
        )?;
    }
    Ok(())
}

/// Reads a file written by [`save_scored`]. A header-only file yields an
/// empty set of order 0.
pub fn load_scored<R: BufRead>(reader: R) -> Result<ScoredSet> {
    let mut rows = tsv::data_rows(reader)?;
    let mut header_order = None;
    if let Some(first) = rows.first() {
        if corpus::is_header(&first.text) {
            header_order = Some(first.text.split('\t').count().saturating_sub(4));
            rows.remove(0);
        }
    }
    let (order, rows) = corpus::split_rows(&rows, 4)?;
    let order = if rows.is_empty() {
        header_order.unwrap_or(0)
    } else {
        order
    };
    if !rows.is_empty() && order < 2 {
        return Err(Error::OrderTooSmall(order));
    }
    let lexicon = Lexicon::from_words(rows.iter().flat_map(|r| r.words.iter().copied()));
    let mut ngrams = Vec::with_capacity(rows.len());
    for r in &rows {
        let words = r.words.iter().map(|w| lexicon.id(w).expect("interned")).collect();
        let count = r.rest[0].parse().map_err(|_| Error::MalformedRow {
            line: r.line,
            reason: format!("count `{}` is not a non-negative integer", r.rest[0]),
        })?;
        ngrams.push(ScoredNgram {
            ngram: RawNgram {
                words,
                count,
                sentence_initial: tsv::parse_flag(r.rest[1], r.line)?,
                sentence_final: tsv::parse_flag(r.rest[2], r.line)?,
            },
            logprob: tsv::parse_finite(r.rest[3], r.line)?,
        });
    }
    ngrams.sort_by(|a, b| a.ngram.words.cmp(&b.ngram.words));
    Ok(ScoredSet { order, lexicon, ngrams })
}
