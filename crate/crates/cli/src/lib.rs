//! Command-line pipeline: extract, score, stats, generate, rank, bench.
//!
//! Exit codes: 0 on success, 2 on input or configuration errors, 3 when a
//! search stops on a resource limit (partial output is still written).

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use ngram_markov::corpus::{self, read_corpus};
use ngram_markov::ranking::{self, ppl_summary, select_by_cutoff};
use ngram_markov::report::{read_solutions, write_solutions, RunMetadata, SolutionRecord};
use ngram_markov::scoring::{self, load_external_scores, load_scored, save_scored, ScoreSource, ScoredSet};
use ngram_markov::search::{enumerate_with_workers, Limits};
use ngram_markov::stats::write_qq_csv;
use ngram_markov::synthetic::SyntheticSpec;
use ngram_markov::{Criterion, Direction, DistributionStats, FilterConfig, NgramTable, StepBound};
use serde::Serialize;

pub mod config;

use config::ConfigFile;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Limit(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Limit(_) => 3,
        }
    }
}

impl From<ngram_markov::Error> for CliError {
    fn from(e: ngram_markov::Error) -> Self {
        match e {
            ngram_markov::Error::LimitExceeded { .. } => CliError::Limit(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ngram-markov",
    version,
    about = "Generate fixed-length sentences by chaining scored n-grams"
)]
pub struct Cli {
    /// Flat key=value file providing defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract order-n n-grams with counts from a sentence-per-line corpus.
    Extract(ExtractArgs),
    /// Attach log-probabilities (MLE, or an external score file).
    Score(ScoreArgs),
    /// Summarize the score distribution (JSON) and optionally write QQ data.
    Stats(StatsArgs),
    /// Enumerate every chain allowed by a filtering criterion.
    Generate(GenerateArgs),
    /// Score generated sentences and apply a perplexity cutoff.
    Rank(RankArgs),
    /// Sweep criteria and lambdas, one generation per cell.
    Bench(BenchArgs),
    /// Write a seeded synthetic scored table.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// N-gram dump written by `extract`.
    #[arg(long)]
    pub ngrams: Option<PathBuf>,
    /// External score file (w1..wn, logprob). MLE is used when absent.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Score for n-grams missing from the external file.
    #[arg(long, allow_hyphen_values = true)]
    pub default_logprob: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub scored: Option<PathBuf>,
    /// Leave out n-grams touching a sentence boundary.
    #[arg(long)]
    pub exclude_boundary: bool,
    /// Also write QQ points as CSV.
    #[arg(long)]
    pub qq: Option<PathBuf>,
    /// JSON output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct FilterArgs {
    /// Number of n-grams per chain.
    #[arg(long)]
    pub length: Option<usize>,
    /// vanilla, instant, final, gliding or gliding-lookahead.
    #[arg(long)]
    pub criterion: Option<String>,
    /// keep-leq (default) or keep-geq.
    #[arg(long)]
    pub direction: Option<String>,
    /// Step bound is mean - lambda * std of the table scores.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Gliding slack; one standard deviation when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub slack: Option<f64>,
    /// Look-ahead depth, 1..=n-1; n-1 when absent.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long = "instant-T", allow_hyphen_values = true)]
    pub instant_t: Option<f64>,
    #[arg(long = "final-T", allow_hyphen_values = true)]
    pub final_t: Option<f64>,
    /// Allow chains that do not start with a sentence-initial n-gram.
    #[arg(long)]
    pub open_start: bool,
    /// Allow chains that do not end with a sentence-final n-gram.
    #[arg(long)]
    pub open_end: bool,
    /// Compute the step bound statistics without boundary n-grams.
    #[arg(long)]
    pub exclude_boundary_stats: bool,
    #[arg(long)]
    pub limit_solutions: Option<u64>,
    #[arg(long)]
    pub limit_nodes: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub scored: Option<PathBuf>,
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Solutions TSV; metadata goes to `<out>.meta.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub scored: Option<PathBuf>,
    #[arg(long)]
    pub solutions: Option<PathBuf>,
    /// External sentence perplexities (sentence, ppl).
    #[arg(long)]
    pub sentence_scores: Option<PathBuf>,
    /// Keep sentences with perplexity at most this value.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Order output by ascending perplexity.
    #[arg(long)]
    pub sort: bool,
    /// Perplexity summary JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub scored: Option<PathBuf>,
    /// Use a synthetic instance instead: `ten-thousand` or `million`.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Seed of the synthetic instance.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated criteria.
    #[arg(long)]
    pub criteria_grid: Option<String>,
    /// Comma-separated lambdas.
    #[arg(long)]
    pub lambdas: Option<String>,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `ten-thousand` or `million`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a command, printing errors to stderr. Returns the exit code.
pub fn run_and_report(cli: Cli) -> i32 {
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Extract(a) => cmd_extract(&cfg, a),
        Command::Score(a) => cmd_score(&cfg, a),
        Command::Stats(a) => cmd_stats(&cfg, a),
        Command::Generate(a) => cmd_generate(&cfg, a),
        Command::Rank(a) => cmd_rank(&cfg, a),
        Command::Bench(a) => cmd_bench(&cfg, a),
        Command::Synth(a) => cmd_synth(&cfg, a),
    }
}

fn required<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Input(format!("missing required option --{name}")))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned())
}

pub fn load_table(path: &Path) -> Result<NgramTable, CliError> {
    let set = load_scored(open(path)?)?;
    Ok(NgramTable::from_scored_set(set)?)
}

fn cmd_extract(cfg: &ConfigFile, a: ExtractArgs) -> Result<(), CliError> {
    let corpus_path = required(cfg.get("corpus", a.corpus)?, "corpus")?;
    let order = required(cfg.get("order", a.order)?, "order")?;
    let out = required(cfg.get("out", a.out)?, "out")?;
    let sentences = read_corpus(open(&corpus_path)?)?;
    let ex = corpus::extract_ngrams(&sentences, order)?;
    if !ex.skipped.is_empty() {
        eprintln!("skipped {} sentence(s) too short for order {order}", ex.skipped.len());
    }
    let comments = vec![format!("extract corpus={} order={order}", file_name(&corpus_path))];
    let mut w = create(&out)?;
    corpus::write_ngrams(&mut w, order, &ex.lexicon, &ex.ngrams, &comments)?;
    w.flush()?;
    eprintln!("{} distinct n-grams, {} words", ex.ngrams.len(), ex.lexicon.len());
    Ok(())
}

fn cmd_score(cfg: &ConfigFile, a: ScoreArgs) -> Result<(), CliError> {
    let ngrams_path = required(cfg.get("ngrams", a.ngrams)?, "ngrams")?;
    let out = required(cfg.get("out", a.out)?, "out")?;
    let scores_path: Option<PathBuf> = cfg.get("scores", a.scores)?;
    let default_logprob: Option<f64> = cfg.get("default-logprob", a.default_logprob)?;
    let ex = corpus::read_ngrams(open(&ngrams_path)?)?;
    let (ngrams, comment) = match &scores_path {
        None => (
            scoring::score_mle(&ex.ngrams)?,
            format!("score ngrams={} source=mle", file_name(&ngrams_path)),
        ),
        Some(p) => {
            let source = ScoreSource::external(default_logprob)?;
            let got = load_external_scores(open(p)?, &ex.lexicon, &ex.ngrams, source)?;
            if !got.unknown_rows.is_empty() {
                eprintln!("ignored {} score row(s) naming unknown n-grams", got.unknown_rows.len());
            }
            if got.defaulted > 0 {
                eprintln!("{} n-gram(s) took the default score", got.defaulted);
            }
            let d = default_logprob.map_or_else(|| "none".into(), |d| d.to_string());
            (
                got.scored,
                format!(
                    "score ngrams={} source=external scores={} default-logprob={d}",
                    file_name(&ngrams_path),
                    file_name(p)
                ),
            )
        }
    };
    let set = ScoredSet {
        order: ex.order,
        lexicon: ex.lexicon,
        ngrams,
    };
    let mut w = create(&out)?;
    save_scored(&mut w, &set, &[comment])?;
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_stats(cfg: &ConfigFile, a: StatsArgs) -> Result<(), CliError> {
    let scored = required(cfg.get("scored", a.scored)?, "scored")?;
    let include_boundary = !cfg.flag("exclude-boundary", a.exclude_boundary)?;
    let out: Option<PathBuf> = cfg.get("out", a.out)?;
    let qq: Option<PathBuf> = cfg.get("qq", a.qq)?;
    let table = load_table(&scored)?;
    let stats = table.stats(include_boundary)?;
    write_json(out.as_deref(), &stats)?;
    if let Some(p) = qq {
        let mut w = create(&p)?;
        write_qq_csv(&mut w, &table.qq_data(include_boundary)?)?;
        w.flush()?;
    }
    Ok(())
}

/// Fully resolved generation settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: FilterConfig,
    pub limits: Limits,
    pub workers: usize,
    pub stats: DistributionStats,
}

impl Resolved {
    /// The settings that determine the output, one `key=value` per entry.
    pub fn describe(&self) -> Vec<String> {
        let c = &self.config;
        let mut parts = vec![
            format!("criterion={}", c.criterion),
            format!("direction={}", c.direction),
            format!("length={}", c.length),
        ];
        match c.criterion {
            Criterion::Vanilla => {}
            Criterion::Instant | Criterion::Final => parts.push(format!("T={}", c.threshold)),
            Criterion::Gliding | Criterion::GlidingLookahead => {
                if let Some(l) = c.lambda {
                    parts.push(format!("lambda={l}"));
                }
                parts.push(format!("step-bound={}", c.step_bound.0));
                parts.push(format!("slack={}", c.slack));
                if c.criterion == Criterion::GlidingLookahead {
                    parts.push(format!("horizon={}", c.horizon));
                }
            }
        }
        parts.push(format!("start={}", c.require_start));
        parts.push(format!("end={}", c.require_end));
        parts.push(format!("mean={} std={}", self.stats.mean, self.stats.std));
        if let Some(n) = self.limits.max_solutions {
            parts.push(format!("limit-solutions={n}"));
        }
        if let Some(n) = self.limits.max_nodes {
            parts.push(format!("limit-nodes={n}"));
        }
        parts
    }
}

/// Resolves filter flags against the config file and the table statistics.
pub fn resolve_filter(cfg: &ConfigFile, f: &FilterArgs, table: &NgramTable) -> Result<Resolved, CliError> {
    let length = required(cfg.get("length", f.length)?, "length")?;
    let criterion: Criterion = cfg
        .get::<String>("criterion", f.criterion.clone())?
        .unwrap_or_else(|| "vanilla".into())
        .parse()?;
    let direction: Direction = cfg
        .get::<String>("direction", f.direction.clone())?
        .unwrap_or_else(|| "keep-leq".into())
        .parse()?;
    let include_boundary = !cfg.flag("exclude-boundary-stats", f.exclude_boundary_stats)?;
    let stats = table.stats(include_boundary)?;
    let lambda = cfg.get("lambda", f.lambda)?.unwrap_or(1.0);
    let slack = cfg.get("slack", f.slack)?.unwrap_or(stats.std);
    let horizon = cfg.get("horizon", f.horizon)?.unwrap_or(table.order() - 1);
    let threshold = match criterion {
        Criterion::Instant => required(cfg.get("instant-T", f.instant_t)?, "instant-T")?,
        Criterion::Final => required(cfg.get("final-T", f.final_t)?, "final-T")?,
        _ => 0.0,
    };
    let gliding = matches!(criterion, Criterion::Gliding | Criterion::GlidingLookahead);
    let config = FilterConfig {
        criterion,
        direction,
        threshold,
        lambda: gliding.then_some(lambda),
        step_bound: if gliding {
            StepBound::from_stats(&stats, lambda)?
        } else {
            StepBound(0.0)
        },
        slack: if gliding { slack } else { 0.0 },
        horizon,
        length,
        require_start: !cfg.flag("open-start", f.open_start)?,
        require_end: !cfg.flag("open-end", f.open_end)?,
    };
    config.validate(table.order())?;
    let limits = Limits {
        max_solutions: cfg.get("limit-solutions", f.limit_solutions)?,
        max_nodes: cfg.get("limit-nodes", f.limit_nodes)?,
        wall_clock: cfg
            .get::<f64>("time-limit", f.time_limit)?
            .map(|s| Duration::try_from_secs_f64(s).map_err(|_| CliError::Input(format!("bad time limit {s}"))))
            .transpose()?,
    };
    let workers = cfg.get("workers", f.workers)?.unwrap_or(1).max(1);
    Ok(Resolved {
        config,
        limits,
        workers,
        stats,
    })
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn cmd_generate(cfg: &ConfigFile, a: GenerateArgs) -> Result<(), CliError> {
    let scored = required(cfg.get("scored", a.scored)?, "scored")?;
    let out = required(cfg.get("out", a.out)?, "out")?;
    let table = load_table(&scored)?;
    let r = resolve_filter(cfg, &a.filter, &table)?;

    let (outcome, limit_error) = match enumerate_with_workers(&table, &r.config, &r.limits, r.workers) {
        Ok(o) => (o, None),
        Err(ngram_markov::Error::LimitExceeded { reason, partial }) => (*partial, Some(reason)),
        Err(e) => return Err(e.into()),
    };

    let mut comments = vec![format!("generate scored={}", file_name(&scored))];
    comments.extend(r.describe());
    if let Some(reason) = limit_error {
        comments.push(format!("PARTIAL: {reason}"));
    }
    let records: Vec<SolutionRecord> = outcome
        .solutions
        .iter()
        .map(|s| SolutionRecord::from_solution(&table, s))
        .collect();
    let mut w = create(&out)?;
    write_solutions(&mut w, &records, &comments)?;
    w.flush()?;
    write_json(Some(&meta_path(&out)), &RunMetadata::new(&r.config, &outcome))?;

    eprintln!(
        "{} solution(s), {} node(s), {:.3}s",
        outcome.solutions.len(),
        outcome.stats.nodes,
        outcome.stats.elapsed.as_secs_f64()
    );
    match limit_error {
        Some(reason) => Err(CliError::Limit(format!(
            "search stopped early: {reason}; partial output written"
        ))),
        None => Ok(()),
    }
}

fn cmd_rank(cfg: &ConfigFile, a: RankArgs) -> Result<(), CliError> {
    let scored = required(cfg.get("scored", a.scored)?, "scored")?;
    let solutions_path = required(cfg.get("solutions", a.solutions)?, "solutions")?;
    let out = required(cfg.get("out", a.out)?, "out")?;
    let sentence_scores: Option<PathBuf> = cfg.get("sentence-scores", a.sentence_scores)?;
    let cutoff: Option<f64> = cfg.get("cutoff", a.cutoff)?;
    let sort = cfg.flag("sort", a.sort)?;
    let summary: Option<PathBuf> = cfg.get("summary", a.summary)?;

    let table = load_table(&scored)?;
    let solutions = read_solutions(open(&solutions_path)?)?
        .iter()
        .map(|r| r.to_solution(&table))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ranked = match &sentence_scores {
        None => ranking::rank_pseudo(solutions),
        Some(p) => {
            let got = ranking::load_sentence_scores(open(p)?, solutions, table.lexicon())?;
            if got.fallbacks > 0 {
                eprintln!(
                    "warning: {} sentence(s) had no external score; using pseudo-perplexity",
                    got.fallbacks
                );
            }
            if !got.duplicates.is_empty() {
                eprintln!(
                    "warning: {} duplicate sentence row(s); last one kept",
                    got.duplicates.len()
                );
            }
            got.ranked
        }
    };
    if sort {
        ranking::sort_by_ppl(&mut ranked);
    }
    if let Some(c) = cutoff {
        if !c.is_finite() || c <= 0.0 {
            return Err(CliError::Input(format!("cutoff {c} must be positive")));
        }
        let sel = select_by_cutoff(ranked, c);
        eprintln!("kept {}/{} sentence(s) with ppl <= {c}", sel.kept.len(), sel.total);
        ranked = sel.kept;
    }

    let mut comments = vec![format!("rank solutions={}", file_name(&solutions_path))];
    if let Some(p) = &sentence_scores {
        comments.push(format!("sentence-scores={}", file_name(p)));
    }
    if let Some(c) = cutoff {
        comments.push(format!("cutoff={c}"));
    }
    comments.push(format!("sort={sort}"));
    let mut w = create(&out)?;
    ranking::write_ranked(&mut w, &ranked, table.lexicon(), &comments)?;
    w.flush()?;
    if let Some(p) = summary {
        write_json(Some(&p), &ppl_summary(&ranked)?)?;
    }
    Ok(())
}

fn synthetic_spec(preset: &str, seed: u64) -> Result<SyntheticSpec, CliError> {
    match preset {
        "ten-thousand" | "10k" => Ok(SyntheticSpec::ten_thousand(seed)),
        "million" | "1m" => Ok(SyntheticSpec::million_chains(seed)),
        other => Err(CliError::Input(format!("unknown synthetic preset `{other}`"))),
    }
}

fn cmd_synth(cfg: &ConfigFile, a: SynthArgs) -> Result<(), CliError> {
    let preset: String = cfg.get("preset", a.preset)?.unwrap_or_else(|| "ten-thousand".into());
    let seed = cfg.get("seed", a.seed)?.unwrap_or(7);
    let out = required(cfg.get("out", a.out)?, "out")?;
    let spec = synthetic_spec(&preset, seed)?;
    let table = spec.build()?;
    let set = ScoredSet {
        order: table.order(),
        lexicon: table.lexicon().clone(),
        ngrams: table.records().to_vec(),
    };
    let mut w = create(&out)?;
    save_scored(
        &mut w,
        &set,
        &[format!(
            "synth preset={preset} seed={seed} natural-length={}",
            spec.natural_length()
        )],
    )?;
    w.flush()?;
    eprintln!(
        "{} n-grams; generated sentences have {} n-grams",
        table.len(),
        spec.natural_length()
    );
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| CliError::Input(format!("bad {what} `{s}`: {e}"))))
        .collect()
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub criterion: Criterion,
    pub lambda: Option<f64>,
    pub threshold: Option<f64>,
    pub solutions: usize,
    pub nodes: u64,
    pub seconds: f64,
    pub status: String,
}

pub const BENCH_HEADER: &str = "criterion,lambda,T,solutions,nodes,seconds,status";

/// Runs one generation per (criterion, lambda) cell. Vanilla runs once.
/// For instant the threshold is `mean - lambda * std`; for final it is
/// `length` times that.
pub fn sweep(table: &NgramTable, base: &Resolved, criteria: &[Criterion], lambdas: &[f64]) -> Vec<BenchCell> {
    let mut cells = Vec::new();
    for &criterion in criteria {
        let params: Vec<Option<f64>> = if criterion == Criterion::Vanilla {
            vec![None]
        } else {
            lambdas.iter().copied().map(Some).collect()
        };
        for lambda in params {
            let started = Instant::now();
            let mut config = FilterConfig {
                criterion,
                lambda,
                ..base.config.clone()
            };
            let mut threshold = None;
            let mut status = String::from("ok");
            if let Some(l) = lambda {
                match StepBound::from_stats(&base.stats, l) {
                    Ok(b) => {
                        match criterion {
                            Criterion::Instant => threshold = Some(b.0),
                            Criterion::Final => threshold = Some(b.0 * config.length as f64),
                            _ => config.step_bound = b,
                        }
                        config.threshold = threshold.unwrap_or(0.0);
                    }
                    Err(e) => status = format!("error: {e}"),
                }
                if !matches!(criterion, Criterion::Gliding | Criterion::GlidingLookahead) {
                    config.lambda = None;
                }
            }
            let (solutions, nodes) = if status == "ok" {
                match enumerate_with_workers(table, &config, &base.limits, base.workers) {
                    Ok(o) => (o.solutions.len(), o.stats.nodes),
                    Err(ngram_markov::Error::LimitExceeded { reason, partial }) => {
                        status = format!("partial: {reason}");
                        (partial.solutions.len(), partial.stats.nodes)
                    }
                    Err(e) => {
                        status = format!("error: {e}");
                        (0, 0)
                    }
                }
            } else {
                (0, 0)
            };
            cells.push(BenchCell {
                criterion,
                lambda,
                threshold,
                solutions,
                nodes,
                seconds: started.elapsed().as_secs_f64(),
                status,
            });
        }
    }
    cells
}

pub fn write_bench_csv<W: Write>(out: &mut W, cells: &[BenchCell], comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{BENCH_HEADER}")?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{}",
            c.criterion,
            opt(c.lambda),
            opt(c.threshold),
            c.solutions,
            c.nodes,
            c.seconds,
            c.status.replace(',', ";")
        )?;
    }
    Ok(())
}

fn cmd_bench(cfg: &ConfigFile, a: BenchArgs) -> Result<(), CliError> {
    let out = required(cfg.get("out", a.out)?, "out")?;
    let scored: Option<PathBuf> = cfg.get("scored", a.scored)?;
    let synthetic: Option<String> = cfg.get("synthetic", a.synthetic)?;
    let seed = cfg.get("seed", a.seed)?.unwrap_or(7);
    let (table, source, natural) = match (&scored, &synthetic) {
        (Some(p), None) => (load_table(p)?, format!("scored={}", file_name(p)), None),
        (None, Some(preset)) => {
            let spec = synthetic_spec(preset, seed)?;
            (
                spec.build()?,
                format!("synthetic={preset} seed={seed}"),
                Some(spec.natural_length()),
            )
        }
        _ => return Err(CliError::Input("give exactly one of --scored or --synthetic".into())),
    };
    let mut filter = a.filter.clone();
    if filter.length.is_none() && cfg.get::<usize>("length", None)?.is_none() {
        filter.length = natural;
    }
    // Criterion thresholds come from the grid; resolve the rest as vanilla.
    filter.criterion = Some("vanilla".into());
    let base = resolve_filter(cfg, &filter, &table)?;

    let criteria: Vec<Criterion> = parse_list(
        &cfg.get::<String>("criteria-grid", a.criteria_grid)?
            .unwrap_or_else(|| "vanilla,instant,gliding,gliding-lookahead".into()),
        "criterion",
    )?;
    let lambdas: Vec<f64> = parse_list(
        &cfg.get::<String>("lambdas", a.lambdas)?
            .unwrap_or_else(|| "1,1.25,1.5,1.75,2".into()),
        "lambda",
    )?;

    let cells = sweep(&table, &base, &criteria, &lambdas);
    let mut comments = vec![format!("bench {source}")];
    comments.extend(base.describe().into_iter().filter(|d| !d.starts_with("criterion=")));
    comments.push(format!(
        "criteria={} lambdas={}",
        criteria.iter().map(|c| c.name()).collect::<Vec<_>>().join(";"),
        lambdas.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";")
    ));
    let mut w = create(&out)?;
    write_bench_csv(&mut w, &cells, &comments)?;
    w.flush()?;
    for c in &cells {
        eprintln!(
            "{:<18} lambda={:<5} sols={:<8} nodes={:<10} {:.3}s {}",
            c.criterion.name(),
            c.lambda.map_or_else(|| "-".into(), |l| l.to_string()),
            c.solutions,
            c.nodes,
            c.seconds,
            c.status
        );
    }
    Ok(())
}
