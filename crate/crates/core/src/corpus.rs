//! Corpus tokenization, word interning and n-gram extraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tsv;

pub const START: &str = "<s>";
pub const END: &str = "</s>";

/// Dense word identifier. `<s>` is 0 and `</s>` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WordId(pub u32);

impl WordId {
    pub const START: WordId = WordId(0);
    pub const END: WordId = WordId(1);
}

/// Bijection between token strings and [`WordId`]s.
///
/// Ids are canonical: the two boundary markers come first, then every other
/// word in byte order. Two lexicons over the same word set are therefore
/// identical no matter in which order the words were seen, which keeps
/// id-ordered files stable across save and load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    words: Vec<String>,
    index: HashMap<String, WordId>,
}

impl Lexicon {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut rest = BTreeSet::new();
        for w in words {
            let w = w.as_ref();
            if w != START && w != END && !rest.contains(w) {
                rest.insert(w.to_string());
            }
        }
        let mut all = Vec::with_capacity(rest.len() + 2);
        all.push(START.to_string());
        all.push(END.to_string());
        all.extend(rest);
        let index = all
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), WordId(i as u32)))
            .collect();
        Lexicon { words: all, index }
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        // The markers are always present.
        false
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Joins the words of `ids` with single spaces.
    pub fn render(&self, ids: &[WordId]) -> String {
        let mut out = String::new();
        for (i, &id) in ids.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.word(id));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawNgram {
    pub words: Vec<WordId>,
    pub count: u64,
    pub sentence_initial: bool,
    pub sentence_final: bool,
}

impl RawNgram {
    /// Builds an n-gram with boundary flags derived from its words.
    pub fn new(words: Vec<WordId>, count: u64) -> Self {
        let sentence_initial = words.first() == Some(&WordId::START);
        let sentence_final = words.last() == Some(&WordId::END);
        RawNgram {
            words,
            count,
            sentence_initial,
            sentence_final,
        }
    }

    pub fn order(&self) -> usize {
        self.words.len()
    }
}

/// Splits a line on whitespace. The corpus is expected to be pre-tokenized.
pub fn tokenize(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_string).collect()
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub order: usize,
    pub lexicon: Lexicon,
    /// Sorted lexicographically by word ids, counts aggregated.
    pub ngrams: Vec<RawNgram>,
    /// Indices of sentences that were too short to yield a single window.
    pub skipped: Vec<usize>,
}

/// Extracts every order-`n` window of every sentence padded with one `<s>`
/// and one `</s>`.
///
/// A sentence contributes nothing (and is listed in `skipped`) when its
/// padded length is below `n`, or when it is empty.
pub fn extract_ngrams<S: AsRef<str>>(corpus: &[Vec<S>], n: usize) -> Result<Extraction> {
    if n < 2 {
        return Err(Error::OrderTooSmall(n));
    }
    let mut skipped = Vec::new();
    let mut kept = Vec::new();
    for (i, sentence) in corpus.iter().enumerate() {
        if sentence.is_empty() || sentence.len() + 2 < n {
            skipped.push(i);
        } else {
            kept.push(sentence);
        }
    }

    let lexicon = Lexicon::from_words(kept.iter().flat_map(|s| s.iter().map(|w| w.as_ref())));

    let mut counts: BTreeMap<Vec<WordId>, u64> = BTreeMap::new();
    let mut padded = Vec::new();
    for sentence in kept {
        padded.clear();
        padded.push(WordId::START);
        padded.extend(sentence.iter().map(|w| lexicon.id(w.as_ref()).expect("interned")));
        padded.push(WordId::END);
        for window in padded.windows(n) {
            *counts.entry(window.to_vec()).or_insert(0) += 1;
        }
    }

    let ngrams = counts
        .into_iter()
        .map(|(words, count)| RawNgram::new(words, count))
        .collect();
    Ok(Extraction {
        order: n,
        lexicon,
        ngrams,
        skipped,
    })
}

/// Reads a sentence-per-line corpus.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        out.push(tokenize(&line?));
    }
    Ok(out)
}

fn ngram_header(order: usize) -> String {
    let mut cols: Vec<String> = (1..=order).map(|i| format!("w{i}")).collect();
    cols.extend(["count", "initial", "final"].map(String::from));
    cols.join("\t")
}

pub(crate) fn is_header(text: &str) -> bool {
    text.starts_with("w1\t")
}

/// Writes the n-gram dump: `w1..wn`, count, initial and final flags.
pub fn write_ngrams<W: Write>(
    out: &mut W,
    order: usize,
    lexicon: &Lexicon,
    ngrams: &[RawNgram],
    comments: &[String],
) -> Result<()> {
    tsv::write_comments(out, comments)?;
    writeln!(out, "{}", ngram_header(order))?;
    for g in ngrams {
        for &w in &g.words {
            write!(out, "{}\t", lexicon.word(w))?;
        }
        writeln!(
            out,
            "{}\t{}\t{}",
            g.count,
            u8::from(g.sentence_initial),
            u8::from(g.sentence_final)
        )?;
    }
    Ok(())
}

/// Raw textual n-gram row, before word interning.
pub(crate) struct TextRow<'a> {
    pub line: usize,
    pub words: Vec<&'a str>,
    pub rest: Vec<&'a str>,
}

/// Splits rows into `order` word columns followed by `tail` extra columns.
/// The order is inferred from the first row when `order` is `None`.
pub(crate) fn split_rows(rows: &[tsv::Row], tail: usize) -> Result<(usize, Vec<TextRow<'_>>)> {
    let mut order = None;
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let fields: Vec<&str> = row.text.split('\t').collect();
        if fields.len() < tail + 2 {
            return Err(Error::MalformedRow {
                line: row.line,
                reason: format!("expected at least {} columns, found {}", tail + 2, fields.len()),
            });
        }
        let n = fields.len() - tail;
        match order {
            None => order = Some(n),
            Some(o) if o != n => {
                return Err(Error::MalformedRow {
                    line: row.line,
                    reason: format!("expected {} columns, found {}", o + tail, fields.len()),
                })
            }
            _ => {}
        }
        let (words, rest) = fields.split_at(n);
        out.push(TextRow {
            line: row.line,
            words: words.to_vec(),
            rest: rest.to_vec(),
        });
    }
    Ok((order.unwrap_or(0), out))
}

/// Reads an n-gram dump written by [`write_ngrams`].
pub fn read_ngrams<R: BufRead>(reader: R) -> Result<Extraction> {
    let mut rows = tsv::data_rows(reader)?;
    if rows.first().is_some_and(|r| is_header(&r.text)) {
        rows.remove(0);
    }
    let (order, rows) = split_rows(&rows, 3)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    if order < 2 {
        return Err(Error::OrderTooSmall(order));
    }
    let lexicon = Lexicon::from_words(rows.iter().flat_map(|r| r.words.iter().copied()));
    let mut ngrams = Vec::with_capacity(rows.len());
    for r in &rows {
        let words = r.words.iter().map(|w| lexicon.id(w).expect("interned")).collect();
        let count: u64 = r.rest[0].parse().map_err(|_| Error::MalformedRow {
            line: r.line,
            reason: format!("count `{}` is not a non-negative integer", r.rest[0]),
        })?;
        let g = RawNgram {
            words,
            count,
            sentence_initial: tsv::parse_flag(r.rest[1], r.line)?,
            sentence_final: tsv::parse_flag(r.rest[2], r.line)?,
        };
        ngrams.push(g);
    }
    ngrams.sort_by(|a, b| a.words.cmp(&b.words));
    Ok(Extraction {
        order,
        lexicon,
        ngrams,
        skipped: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vec<Vec<String>> {
        ["a b", "a c", "a b"].iter().map(|l| tokenize(l)).collect()
    }

    fn by_text(ex: &Extraction) -> Vec<(String, u64)> {
        ex.ngrams
            .iter()
            .map(|g| (ex.lexicon.render(&g.words), g.count))
            .collect()
    }

    #[test]
    fn tokenize_splits_on_whitespace() {
        assert_eq!(tokenize("a b c"), ["a", "b", "c"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("The little boy plays with a balloon").len(), 7);
        assert_eq!(tokenize("  x\t y  "), ["x", "y"]);
    }

    #[test]
    fn toy_bigrams() {
        let ex = extract_ngrams(&toy(), 2).unwrap();
        let expected: Vec<(String, u64)> = vec![
            ("<s> a".into(), 3),
            ("a b".into(), 2),
            ("a c".into(), 1),
            ("b </s>".into(), 2),
            ("c </s>".into(), 1),
        ];
        let mut got = by_text(&ex);
        got.sort();
        let mut want = expected;
        want.sort();
        assert_eq!(got, want);
        assert!(ex.skipped.is_empty());
    }

    #[test]
    fn single_token_sentence() {
        let ex = extract_ngrams(&[tokenize("a")], 2).unwrap();
        assert_eq!(by_text(&ex), [("<s> a".to_string(), 1), ("a </s>".to_string(), 1)]);
        assert!(ex.ngrams[0].sentence_initial && !ex.ngrams[0].sentence_final);
        assert!(ex.ngrams[1].sentence_final && !ex.ngrams[1].sentence_initial);
    }

    #[test]
    fn contains_overlapping_pairs() {
        let ex = extract_ngrams(&[tokenize("The little boy plays with a balloon")], 2).unwrap();
        let texts: Vec<String> = by_text(&ex).into_iter().map(|(t, _)| t).collect();
        assert!(texts.contains(&"little boy".to_string()));
        assert!(texts.contains(&"boy plays".to_string()));
    }

    #[test]
    fn order_too_small() {
        assert!(matches!(extract_ngrams(&toy(), 1), Err(Error::OrderTooSmall(1))));
    }

    #[test]
    fn short_sentences_are_skipped() {
        let corpus = vec![tokenize("a"), tokenize("a b c"), vec![]];
        let ex = extract_ngrams(&corpus, 4).unwrap();
        assert_eq!(ex.skipped, [0, 2]);
        // "<s> a b c </s>" has two 4-windows
        assert_eq!(ex.ngrams.len(), 2);
        // words from skipped sentences are not interned
        assert_eq!(ex.lexicon.len(), 5);
    }

    #[test]
    fn markers_have_fixed_ids() {
        let lex = Lexicon::from_words(["zeta", "alpha", END, START, "alpha"]);
        assert_eq!(lex.id(START), Some(WordId(0)));
        assert_eq!(lex.id(END), Some(WordId(1)));
        assert_eq!(lex.id("alpha"), Some(WordId(2)));
        assert_eq!(lex.id("zeta"), Some(WordId(3)));
        assert_eq!(lex.len(), 4);
    }

    #[test]
    fn dump_round_trip() {
        let ex = extract_ngrams(&toy(), 2).unwrap();
        let mut buf = Vec::new();
        write_ngrams(&mut buf, 2, &ex.lexicon, &ex.ngrams, &["order=2".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# order=2\nw1\tw2\tcount\tinitial\tfinal\n"));
        let back = read_ngrams(buf.as_slice()).unwrap();
        assert_eq!(back.ngrams, ex.ngrams);
        assert_eq!(back.lexicon, ex.lexicon);
    }

    #[test]
    fn dump_rejects_bad_flags() {
        let text = "w1\tw2\tcount\tinitial\tfinal\na\tb\t1\t2\t0\n";
        assert!(matches!(
            read_ngrams(text.as_bytes()),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }
}
