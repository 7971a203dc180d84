use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser as ClapParser, ValueEnum};
use ugparse::harness::{run_benchmark, BenchConfig, BenchError, BenchReport, OutputFormat};
use ugparse::{BackboneSpec, EngineKind};

const EXIT_USAGE: u8 = 1;
const EXIT_LOAD: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Csv,
}

/// Parse a corpus with several unification-grammar parsers, check that they
/// agree, and report their costs.
#[derive(ClapParser, Debug)]
#[command(name = "parsebench", version)]
struct Args {
    /// Grammar and lexicon file.
    #[arg(long)]
    grammar: PathBuf,
    /// Corpus file: one sentence per line, `#` starts a comment.
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated engines to run.
    #[arg(long, value_delimiter = ',', default_value = "bulc,glr,ce")]
    engines: Vec<EngineKind>,
    /// Feature positions kept in the context-free backbone, e.g. `NP:0:1,VP:0`.
    #[arg(long, default_value = "")]
    backbone: String,
    /// Disable the reduction cache of the table-driven engines.
    #[arg(long)]
    no_cache: bool,
    /// Repetitions per sentence; the minimum CPU time is reported.
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Trees unpacked per sentence and engine for the tree comparison.
    #[arg(long, default_value_t = 1000)]
    unpack_limit: usize,
    /// Write per-sentence measurements to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Report format on standard output.
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Parse sentences sequentially on one thread.
    #[arg(long)]
    seq: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let backbone = match BackboneSpec::parse(&args.backbone) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: --backbone: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let config = BenchConfig {
        grammar: args.grammar,
        corpus: args.corpus,
        engines: args.engines,
        repetitions: args.reps,
        unpack_limit: args.unpack_limit,
        backbone,
        cache: !args.no_cache,
        format: match args.format {
            Format::Table => OutputFormat::Table,
            Format::Csv => OutputFormat::Csv,
        },
        sequential: args.seq,
    };

    let report = match run_benchmark(&config) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                BenchError::Config(_) | BenchError::Backbone(_) => EXIT_USAGE,
                _ => EXIT_LOAD,
            });
        }
    };

    if let Some(path) = &args.csv {
        let written = File::create(path).map_err(|e| e.to_string()).and_then(|f| {
            report
                .write_csv(BufWriter::new(f))
                .map_err(|e| e.to_string())
        });
        if let Err(e) = written {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_LOAD);
        }
    }
    let stdout = io::stdout();
    let printed = match config.format {
        OutputFormat::Table => {
            write!(stdout.lock(), "{}", report.render_table()).map_err(|e| e.to_string())
        }
        OutputFormat::Csv => report.write_csv(stdout.lock()).map_err(|e| e.to_string()),
    };
    if let Err(e) = printed {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_LOAD);
    }

    for m in &report.mismatches {
        eprintln!("mismatch: {m}");
    }
    ExitCode::from(status(&report))
}

/// Exit status of a completed run: nonzero when the engines disagree.
fn status(report: &BenchReport) -> u8 {
    if report.is_consistent() {
        0
    } else {
        EXIT_MISMATCH
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ugparse::harness::Mismatch;

    #[test]
    fn disagreement_exits_with_mismatch_status() {
        let mut report = BenchReport {
            engines: vec![EngineKind::Bulc, EngineKind::Glr],
            sentences: Vec::new(),
            mismatches: Vec::new(),
        };
        assert_eq!(status(&report), 0);
        report.mismatches.push(Mismatch::ParseCount {
            sentence: 1,
            counts: vec![
                (EngineKind::Bulc, 1u32.into()),
                (EngineKind::Glr, 2u32.into()),
            ],
        });
        assert_eq!(status(&report), EXIT_MISMATCH);
    }
}
