use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ptchron::analysis::analyze_session;
use ptchron::grammar::grammar_by_name;
use ptchron::report::{
    analyze_corpus, dump_trees, emit_plot_data, read_sessions, run_pipeline, AnalysisConfig, OutputFormat, PlotKind,
    RunConfig,
};
use ptchron::ReportError;

#[derive(Parser)]
#[command(name = "ptchron", version, about = "Parse-tree node tracking over keystroke logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct AnalysisArgs {
    #[arg(long, default_value = "mini")]
    grammar: String,
    /// Sessions with fewer events are excluded.
    #[arg(long, default_value_t = 300)]
    min_events: usize,
    /// Sessions where a smaller fraction of states has a tree are excluded.
    #[arg(long, default_value_t = 0.8)]
    min_tree_coverage: f64,
    #[arg(long, default_value_t = 5)]
    jump_threshold: usize,
    #[arg(long, default_value_t = 20)]
    rename_gap: usize,
    #[arg(long, default_value_t = 3000)]
    size_split: usize,
}

impl AnalysisArgs {
    fn config(&self) -> AnalysisConfig {
        AnalysisConfig {
            grammar: self.grammar.clone(),
            min_events: self.min_events,
            min_tree_coverage: self.min_tree_coverage,
            jump_threshold: self.jump_threshold,
            rename_gap: self.rename_gap,
            size_split: self.size_split,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a log and write per-session reports and summaries.
    Run {
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long, default_value = "json")]
        format: String,
        /// Leave the generation time out of the summary.
        #[arg(long)]
        no_timestamp: bool,
        input: PathBuf,
        outdir: PathBuf,
    },
    /// Dump per-state trees and temporal links as JSON lines.
    Trees {
        #[arg(long, default_value = "mini")]
        grammar: String,
        /// Only this session (subject__file).
        #[arg(long)]
        session: Option<String>,
        input: PathBuf,
        outdir: PathBuf,
    },
    /// Tidy CSV behind a plot: lifetimes, tree_size, jumps, ndr_by_construct.
    Plotdata {
        kind: String,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), ReportError> {
    match cli.command {
        Command::Run {
            analysis,
            format,
            no_timestamp,
            input,
            outdir,
        } => {
            let cfg = RunConfig {
                input,
                outdir,
                analysis: analysis.config(),
                format: format.parse::<OutputFormat>()?,
                timestamp: !no_timestamp,
            };
            let s = run_pipeline(&cfg)?;
            eprintln!("{} sessions ingested, {} kept, {} excluded", s.ingested, s.kept, s.excluded);
        }
        Command::Trees {
            grammar,
            session,
            input,
            outdir,
        } => {
            let g = grammar_by_name(&grammar)?;
            let sessions = read_sessions(&input)?;
            if sessions.is_empty() {
                return Err(ReportError::NoSessions);
            }
            fs::create_dir_all(&outdir)?;
            let mut written = 0;
            for s in sessions.iter().filter(|s| session.as_ref().is_none_or(|k| *k == s.key())) {
                let a = analyze_session(s, g.clone()).map_err(|source| ReportError::Analysis {
                    session: s.key(),
                    source,
                })?;
                let (trees, links) = dump_trees(&a)?;
                fs::write(outdir.join(format!("{}.trees.jsonl", s.key())), trees)?;
                fs::write(outdir.join(format!("{}.links.jsonl", s.key())), links)?;
                written += 1;
            }
            if written == 0 {
                return Err(ReportError::Config(format!("no session {:?}", session.unwrap_or_default())));
            }
        }
        Command::Plotdata {
            kind,
            analysis,
            output,
            input,
        } => {
            let kind: PlotKind = kind.parse()?;
            let result = analyze_corpus(read_sessions(&input)?, &analysis.config())?;
            let reports: Vec<_> = result.kept.into_iter().map(|r| r.report).collect();
            let csv = emit_plot_data(&reports, kind)?;
            match output {
                Some(p) => fs::write(p, csv)?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ptchron: {e}");
            ExitCode::FAILURE
        }
    }
}
