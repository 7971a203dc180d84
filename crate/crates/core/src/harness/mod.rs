//! Benchmark harness: runs engines over a corpus, checks that they agree,
//! and summarizes timings and counters by sentence length.

mod fit;
mod timing;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backbone::{BackboneError, BackboneSpec};
use crate::engine::{EngineConfig, EngineKind, ParseError, Parser};
use crate::grammar::{Grammar, GrammarError};
use crate::stats::ParseStats;

pub use fit::{fit_power_law, FitError, PowerFit};
pub use timing::{measure, thread_cpu_ms};

/// Width of the sentence-length buckets (1-3, 4-6, ...).
pub const BUCKET_WIDTH: usize = 3;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("grammar: {0}")]
    Grammar(#[from] GrammarError),
    #[error("backbone: {0}")]
    Backbone(#[from] BackboneError),
    #[error("sentence {sentence}: unknown word `{token}` at position {position}")]
    UnknownWord {
        sentence: usize,
        token: String,
        position: usize,
    },
    #[error("sentence {sentence}: {source}")]
    Parse {
        sentence: usize,
        #[source]
        source: ParseError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    /// 1-based position among the corpus's sentences.
    pub id: usize,
    pub tokens: Vec<String>,
}

/// One sentence per line, whitespace-tokenized; `#` starts a comment and
/// blank lines are skipped.
pub fn parse_corpus(text: &str) -> Vec<Sentence> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or_default())
        .map(crate::engine::tokenize)
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, tokens)| Sentence { id: i + 1, tokens })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Csv,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub grammar: PathBuf,
    pub corpus: PathBuf,
    pub engines: Vec<EngineKind>,
    pub repetitions: usize,
    /// Trees unpacked per engine and sentence for the tree comparison.
    pub unpack_limit: usize,
    pub backbone: BackboneSpec,
    pub cache: bool,
    pub format: OutputFormat,
    /// Parse sentences one at a time on the calling thread.
    pub sequential: bool,
}

impl BenchConfig {
    pub fn options(&self) -> BenchOptions {
        BenchOptions {
            engines: self.engines.clone(),
            repetitions: self.repetitions,
            unpack_limit: self.unpack_limit,
            engine: EngineConfig {
                backbone: self.backbone.clone(),
                cache: self.cache,
                ..EngineConfig::default()
            },
            sequential: self.sequential,
        }
    }
}

/// The in-memory part of a [`BenchConfig`].
#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub engines: Vec<EngineKind>,
    pub repetitions: usize,
    pub unpack_limit: usize,
    pub engine: EngineConfig,
    pub sequential: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            engines: EngineKind::ALL.to_vec(),
            repetitions: 1,
            unpack_limit: 1000,
            engine: EngineConfig::default(),
            sequential: false,
        }
    }
}

/// One engine on one sentence. Times are the minimum over repetitions.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineRun {
    pub engine: EngineKind,
    pub cpu_ms: f64,
    pub wall_ms: f64,
    /// Time to unpack up to the unpack limit; not part of `cpu_ms`.
    pub unpack_ms: f64,
    pub stats: ParseStats,
    pub nodes: u64,
    pub parses: BigUint,
    pub fill_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SentenceResult {
    pub id: usize,
    pub length: usize,
    pub runs: Vec<EngineRun>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mismatch {
    ParseCount {
        sentence: usize,
        counts: Vec<(EngineKind, BigUint)>,
    },
    Trees {
        sentence: usize,
        left: EngineKind,
        right: EngineKind,
        /// First tree (in sorted order) present in one engine's output only.
        first_difference: String,
    },
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mismatch::ParseCount { sentence, counts } => {
                write!(f, "sentence {sentence}: parse counts differ:")?;
                for (e, c) in counts {
                    write!(f, " {e}={c}")?;
                }
                Ok(())
            }
            Mismatch::Trees {
                sentence,
                left,
                right,
                first_difference,
            } => write!(
                f,
                "sentence {sentence}: trees of {left} and {right} differ; first difference: {first_difference}"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bucket {
    pub lo: usize,
    pub hi: usize,
    pub engine: EngineKind,
    pub sentences: usize,
    pub mean_ms: f64,
    /// Population standard deviation.
    pub sd_ms: f64,
    pub mean_parses: f64,
    pub sd_parses: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineTotals {
    pub engine: EngineKind,
    pub cpu_ms: f64,
    pub unif_attempts: u64,
    pub unif_success: u64,
    pub allocs: u64,
    pub nodes: u64,
    pub parses: BigUint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub engines: Vec<EngineKind>,
    pub sentences: Vec<SentenceResult>,
    pub mismatches: Vec<Mismatch>,
}

/// One CSV row: one engine on one sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub sentence_id: usize,
    pub length: usize,
    pub engine: String,
    pub cpu_ms: f64,
    pub unif_attempts: u64,
    pub unif_success: u64,
    pub allocs: u64,
    pub nodes: u64,
    pub parses: String,
}

pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    let read = |path: &PathBuf| {
        std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.clone(),
            source,
        })
    };
    let grammar = Grammar::parse(&read(&config.grammar)?)?;
    let corpus = parse_corpus(&read(&config.corpus)?);
    run_sentences(&grammar, &corpus, &config.options())
}

pub fn run_sentences(
    grammar: &Grammar,
    corpus: &[Sentence],
    opts: &BenchOptions,
) -> Result<BenchReport, BenchError> {
    if opts.engines.is_empty() {
        return Err(BenchError::Config("no engines selected".into()));
    }
    if opts.repetitions == 0 {
        return Err(BenchError::Config("repetitions must be at least 1".into()));
    }
    let mut engines = opts.engines.clone();
    engines.dedup();
    let parsers: Vec<Parser> = engines
        .iter()
        .map(|&k| Parser::new(k, grammar, &opts.engine))
        .collect::<Result<_, _>>()?;

    let one = |s: &Sentence| run_sentence(&parsers, s, opts);
    let results: Vec<Result<(SentenceResult, Vec<Mismatch>), BenchError>> = if opts.sequential {
        corpus.iter().map(one).collect()
    } else {
        corpus.par_iter().map(one).collect()
    };
    let mut sentences = Vec::with_capacity(results.len());
    let mut mismatches = Vec::new();
    for r in results {
        let (s, m) = r?;
        sentences.push(s);
        mismatches.extend(m);
    }
    Ok(BenchReport {
        engines,
        sentences,
        mismatches,
    })
}

fn run_sentence(
    parsers: &[Parser],
    s: &Sentence,
    opts: &BenchOptions,
) -> Result<(SentenceResult, Vec<Mismatch>), BenchError> {
    let mut runs = Vec::with_capacity(parsers.len());
    let mut trees: Vec<Option<Vec<String>>> = Vec::with_capacity(parsers.len());
    for p in parsers {
        let mut best: Option<(f64, f64)> = None;
        let mut last = None;
        for _ in 0..opts.repetitions {
            let (out, cpu, wall) = measure(|| p.parse(&s.tokens));
            let out = out.map_err(|e| match e {
                ParseError::UnknownWord { token, position } => BenchError::UnknownWord {
                    sentence: s.id,
                    token,
                    position,
                },
                source => BenchError::Parse {
                    sentence: s.id,
                    source,
                },
            })?;
            best = Some(match best {
                Some((c, w)) => (c.min(cpu), w.min(wall)),
                None => (cpu, wall),
            });
            last = Some(out);
        }
        let out = last.expect("at least one repetition");
        let (cpu_ms, wall_ms) = best.expect("at least one repetition");
        let parses = p.parse_count(&out);
        let (unpacked, _, unpack_ms) = measure(|| p.unpack(&out, opts.unpack_limit));
        let complete = BigUint::from(unpacked.len()) == parses;
        let sig = p.grammar().signature();
        let mut printed: Vec<String> = unpacked.iter().map(|t| t.to_bracketed(sig)).collect();
        printed.sort();
        trees.push(complete.then_some(printed));
        runs.push(EngineRun {
            engine: p.kind(),
            cpu_ms,
            wall_ms,
            unpack_ms,
            stats: out.stats,
            nodes: out.forest.node_count() as u64,
            parses,
            fill_ratio: out.fill_ratio,
        });
    }

    let mut mismatches = Vec::new();
    if runs.iter().any(|r| r.parses != runs[0].parses) {
        mismatches.push(Mismatch::ParseCount {
            sentence: s.id,
            counts: runs.iter().map(|r| (r.engine, r.parses.clone())).collect(),
        });
    } else if let Some(Some(reference)) = trees.first() {
        for (k, other) in trees.iter().enumerate().skip(1) {
            let Some(other) = other else { continue };
            if other != reference {
                let first_difference = reference
                    .iter()
                    .find(|t| !other.contains(t))
                    .or_else(|| other.iter().find(|t| !reference.contains(t)))
                    .cloned()
                    .unwrap_or_default();
                mismatches.push(Mismatch::Trees {
                    sentence: s.id,
                    left: runs[0].engine,
                    right: runs[k].engine,
                    first_difference,
                });
            }
        }
    }
    Ok((
        SentenceResult {
            id: s.id,
            length: s.tokens.len(),
            runs,
        },
        mismatches,
    ))
}

/// Mean and population standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn to_f64(x: &BigUint) -> f64 {
    x.to_string().parse().unwrap_or(f64::INFINITY)
}

impl BenchReport {
    pub fn is_consistent(&self) -> bool {
        self.mismatches.is_empty()
    }

    fn runs_of(&self, e: EngineKind) -> impl Iterator<Item = (&SentenceResult, &EngineRun)> {
        self.sentences.iter().flat_map(move |s| {
            s.runs
                .iter()
                .filter(move |r| r.engine == e)
                .map(move |r| (s, r))
        })
    }

    pub fn buckets(&self) -> Vec<Bucket> {
        let mut out = Vec::new();
        for &e in &self.engines {
            let mut groups: BTreeMap<usize, Vec<&EngineRun>> = BTreeMap::new();
            for (s, r) in self.runs_of(e) {
                groups
                    .entry(s.length.saturating_sub(1) / BUCKET_WIDTH)
                    .or_default()
                    .push(r);
            }
            for (k, runs) in groups {
                let ms: Vec<f64> = runs.iter().map(|r| r.cpu_ms).collect();
                let parses: Vec<f64> = runs.iter().map(|r| to_f64(&r.parses)).collect();
                let (mean_ms, sd_ms) = mean_sd(&ms);
                let (mean_parses, sd_parses) = mean_sd(&parses);
                out.push(Bucket {
                    lo: k * BUCKET_WIDTH + 1,
                    hi: k * BUCKET_WIDTH + BUCKET_WIDTH,
                    engine: e,
                    sentences: runs.len(),
                    mean_ms,
                    sd_ms,
                    mean_parses,
                    sd_parses,
                });
            }
        }
        out
    }

    pub fn totals(&self) -> Vec<EngineTotals> {
        self.engines
            .iter()
            .map(|&e| {
                let mut t = EngineTotals {
                    engine: e,
                    cpu_ms: 0.0,
                    unif_attempts: 0,
                    unif_success: 0,
                    allocs: 0,
                    nodes: 0,
                    parses: BigUint::from(0u32),
                };
                for (_, r) in self.runs_of(e) {
                    t.cpu_ms += r.cpu_ms;
                    t.unif_attempts += r.stats.unify_attempts;
                    t.unif_success += r.stats.unify_successes;
                    t.allocs += r.stats.allocations();
                    t.nodes += r.nodes;
                    t.parses += &r.parses;
                }
                t
            })
            .collect()
    }

    /// Mean CPU time per sentence length, for lengths with positive times.
    pub fn length_means(&self, e: EngineKind) -> Vec<(f64, f64)> {
        let mut by_len: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (s, r) in self.runs_of(e) {
            by_len.entry(s.length).or_default().push(r.cpu_ms);
        }
        by_len
            .into_iter()
            .map(|(n, ts)| (n as f64, mean_sd(&ts).0))
            .filter(|&(_, t)| t > 0.0)
            .collect()
    }

    /// Fit of `t = a * n^b` to the per-length means of one engine.
    pub fn fit(&self, e: EngineKind) -> Result<PowerFit, FitError> {
        fit_power_law(&self.length_means(e))
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.sentences
            .iter()
            .flat_map(|s| {
                s.runs.iter().map(move |r| CsvRow {
                    sentence_id: s.id,
                    length: s.length,
                    engine: r.engine.name().to_string(),
                    cpu_ms: r.cpu_ms,
                    unif_attempts: r.stats.unify_attempts,
                    unif_success: r.stats.unify_successes,
                    allocs: r.stats.allocations(),
                    nodes: r.nodes,
                    parses: r.parses.to_string(),
                })
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        for row in self.csv_rows() {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Vec<CsvRow>, csv::Error> {
        csv::Reader::from_reader(r).deserialize().collect()
    }

    /// Human-readable totals, length buckets and fits.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let totals = self.totals();
        let base = totals.first().map(|t| t.cpu_ms).unwrap_or(0.0);
        let _ = writeln!(s, "Totals over {} sentences", self.sentences.len());
        let _ = writeln!(
            s,
            "{:<6} {:>12} {:>8} {:>14} {:>14} {:>12} {:>10} {:>12}",
            "engine", "cpu_ms", "rel", "unif_attempts", "unif_success", "allocs", "nodes", "parses"
        );
        for t in &totals {
            let rel = if base > 0.0 { t.cpu_ms / base } else { 0.0 };
            let _ = writeln!(
                s,
                "{:<6} {:>12.3} {:>8.3} {:>14} {:>14} {:>12} {:>10} {:>12}",
                t.engine.name(),
                t.cpu_ms,
                rel,
                t.unif_attempts,
                t.unif_success,
                t.allocs,
                t.nodes,
                t.parses
            );
        }
        let _ = writeln!(s, "\nBy length (mean and population sd)");
        let _ = writeln!(
            s,
            "{:<7} {:<6} {:>5} {:>10} {:>10} {:>10} {:>10}",
            "length", "engine", "n", "cpu_ms", "sd", "parses", "sd"
        );
        for b in self.buckets() {
            let _ = writeln!(
                s,
                "{:<7} {:<6} {:>5} {:>10.3} {:>10.3} {:>10.2} {:>10.2}",
                format!("{}-{}", b.lo, b.hi),
                b.engine.name(),
                b.sentences,
                b.mean_ms,
                b.sd_ms,
                b.mean_parses,
                b.sd_parses
            );
        }
        let _ = writeln!(s, "\nFit t = a * n^b (per-length means)");
        for &e in &self.engines {
            match self.fit(e) {
                Ok(f) => {
                    let _ = writeln!(
                        s,
                        "{:<6} a={:.6} b={:.3} rms={:.3}",
                        e.name(),
                        f.a,
                        f.b,
                        f.residual
                    );
                }
                Err(err) => {
                    let _ = writeln!(s, "{:<6} no fit: {err}", e.name());
                }
            }
        }
        for m in &self.mismatches {
            let _ = writeln!(s, "MISMATCH {m}");
        }
        s
    }
}
