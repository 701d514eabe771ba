//! Corpus runs: filtering, per-session reports, summaries and plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{analyze_session, SessionAnalysis};
use crate::behaviors::{behavior_summary, count_by_kind, detect_all, BehaviorConfig, BehaviorEvent, FileBehaviors, SummaryRow};
use crate::bridging::CoverageStats;
use crate::error::ReportError;
use crate::grammar::{grammar_by_name, GrammarAdapter};
use crate::metrics::{
    comment_restoration_stats, context_switch_frequency, deletion_by_construct, node_deletion_rate, node_lifetimes,
    tree_size_series, CommentRestoration, ConstructDeletion, ContextSwitches, DeletionStats, LifetimeRecord, Scope,
    TreeSizePoint,
};
use crate::session::{filter_sessions, ingest_log, ExclusionReason, Filterable, Session};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(ReportError::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// Analysis thresholds shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub grammar: String,
    pub min_events: usize,
    pub min_tree_coverage: f64,
    pub jump_threshold: usize,
    pub rename_gap: usize,
    pub size_split: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            grammar: "mini".to_string(),
            min_events: 300,
            min_tree_coverage: 0.8,
            jump_threshold: 5,
            rename_gap: 20,
            size_split: 3000,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ReportError> {
        if !(0.0..=1.0).contains(&self.min_tree_coverage) {
            return Err(ReportError::Config(format!(
                "min-tree-coverage must be in [0, 1], got {}",
                self.min_tree_coverage
            )));
        }
        grammar_by_name(&self.grammar)?;
        Ok(())
    }

    fn behavior_config(&self) -> BehaviorConfig {
        BehaviorConfig {
            rename_gap: self.rename_gap,
            ..BehaviorConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub outdir: PathBuf,
    pub analysis: AnalysisConfig,
    pub format: OutputFormat,
    pub timestamp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub session: String,
    pub subject_id: String,
    pub file_id: String,
    pub num_events: usize,
    pub coverage: CoverageStats,
    pub deletion: DeletionStats,
    pub deletion_by_construct: Vec<ConstructDeletion>,
    pub lifetimes: Vec<LifetimeRecord>,
    pub context_switches: ContextSwitches,
    pub tree_sizes: Vec<TreeSizePoint>,
    pub comment_restoration: CommentRestoration,
    pub behaviors: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExclusionRecord {
    pub session: String,
    #[serde(flatten)]
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub report: SessionReport,
    pub behaviors: Vec<BehaviorEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusResult {
    pub ingested: usize,
    /// Sorted by session key.
    pub kept: Vec<SessionResult>,
    pub excluded: Vec<ExclusionRecord>,
    pub behavior_summary: Vec<SummaryRow>,
}

pub fn session_report(a: &SessionAnalysis, cfg: &AnalysisConfig) -> SessionResult {
    let behaviors = detect_all(a, &cfg.behavior_config());
    let report = SessionReport {
        session: a.session.key(),
        subject_id: a.session.subject_id.clone(),
        file_id: a.session.file_id.clone(),
        num_events: a.session.num_events(),
        coverage: a.coverage.clone(),
        deletion: node_deletion_rate(a, Scope::Program),
        deletion_by_construct: deletion_by_construct(a),
        lifetimes: node_lifetimes(a),
        context_switches: context_switch_frequency(a, cfg.jump_threshold),
        tree_sizes: tree_size_series(a),
        comment_restoration: comment_restoration_stats(a),
        behaviors: count_by_kind(&behaviors)
            .into_iter()
            .map(|(k, n)| (k.name().to_string(), n))
            .collect(),
    };
    SessionResult { report, behaviors }
}

struct Analyzed {
    coverage: f64,
    result: SessionResult,
}

impl Filterable for Analyzed {
    fn event_count(&self) -> usize {
        self.result.report.num_events
    }
    fn tree_coverage(&self) -> Option<f64> {
        Some(self.coverage)
    }
}

fn analyze_kept(
    sessions: &[Session],
    grammar: &Arc<dyn GrammarAdapter>,
    f: impl Fn(&SessionAnalysis) -> SessionResult + Sync,
) -> Result<Vec<Analyzed>, ReportError> {
    sessions
        .par_iter()
        .map(|s| {
            let a = analyze_session(s, grammar.clone()).map_err(|source| ReportError::Analysis {
                session: s.key(),
                source,
            })?;
            Ok(Analyzed {
                coverage: a.coverage.tree_fraction,
                result: f(&a),
            })
        })
        .collect()
}

/// Filters, analyzes and summarizes sessions. Output order is by session key
/// whatever the input order.
pub fn analyze_corpus(mut sessions: Vec<Session>, cfg: &AnalysisConfig) -> Result<CorpusResult, ReportError> {
    cfg.validate()?;
    if sessions.is_empty() {
        return Err(ReportError::NoSessions);
    }
    sessions.sort_by_key(|s| s.key());
    let grammar = grammar_by_name(&cfg.grammar)?;
    let ingested = sessions.len();
    let (kept, dropped) = filter_sessions(sessions, cfg.min_events, None);
    let mut excluded: Vec<ExclusionRecord> = dropped
        .into_iter()
        .map(|e| ExclusionRecord {
            session: e.item.key(),
            reason: e.reason,
        })
        .collect();
    let analyzed = analyze_kept(&kept, &grammar, |a| session_report(a, cfg))?;
    let (kept, dropped) = filter_sessions(analyzed, 0, Some(cfg.min_tree_coverage));
    excluded.extend(dropped.into_iter().map(|e| ExclusionRecord {
        session: e.item.result.report.session.clone(),
        reason: e.reason,
    }));
    excluded.sort_by(|a, b| a.session.cmp(&b.session));
    let kept: Vec<SessionResult> = kept.into_iter().map(|a| a.result).collect();
    let files: Vec<FileBehaviors> = kept
        .iter()
        .map(|r| FileBehaviors {
            num_events: r.report.num_events,
            counts: count_by_kind(&r.behaviors),
        })
        .collect();
    Ok(CorpusResult {
        ingested,
        behavior_summary: behavior_summary(&files, cfg.size_split),
        kept,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub session: String,
    pub num_events: usize,
    pub tree_fraction: f64,
    pub parseable_fraction: f64,
    pub single_step_success: Option<f64>,
    pub deletion_rate: Option<f64>,
    pub switch_frequency: Option<f64>,
    pub mean_lifetime: Option<f64>,
}

impl SummaryEntry {
    fn of(r: &SessionReport) -> Self {
        let n = r.lifetimes.len();
        SummaryEntry {
            session: r.session.clone(),
            num_events: r.num_events,
            tree_fraction: r.coverage.tree_fraction,
            parseable_fraction: r.coverage.parseable_fraction,
            single_step_success: r.coverage.single_step_success,
            deletion_rate: r.deletion.rate,
            switch_frequency: r.context_switches.frequency,
            mean_lifetime: (n > 0).then(|| r.lifetimes.iter().map(|l| l.lifetime_fraction).sum::<f64>() / n as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
    pub config: AnalysisConfig,
    pub ingested: usize,
    pub kept: usize,
    pub excluded: usize,
    pub exclusions_by_reason: BTreeMap<String, usize>,
    pub sessions: Vec<SummaryEntry>,
}

impl CorpusResult {
    pub fn summary(&self, cfg: &AnalysisConfig, generated_at_unix: Option<u64>) -> CorpusSummary {
        let mut by_reason = BTreeMap::new();
        for e in &self.excluded {
            *by_reason.entry(e.reason.code().to_string()).or_insert(0) += 1;
        }
        CorpusSummary {
            generated_at_unix,
            config: cfg.clone(),
            ingested: self.ingested,
            kept: self.kept.len(),
            excluded: self.excluded.len(),
            exclusions_by_reason: by_reason,
            sessions: self.kept.iter().map(|r| SummaryEntry::of(&r.report)).collect(),
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn session_csv(r: &SessionReport) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["section", "item", "value"])?;
    let c = &r.coverage;
    for (k, v) in [
        ("num_events", r.num_events.to_string()),
        ("parseable_fraction", c.parseable_fraction.to_string()),
        ("bridged_fraction", c.bridged_fraction.to_string()),
        ("tree_fraction", c.tree_fraction.to_string()),
        ("single_step_success", opt(c.single_step_success)),
    ] {
        w.write_record(["coverage", k, &v])?;
    }
    for (k, v) in &c.failure_breakdown {
        w.write_record(["bridge_failure", k, &v.to_string()])?;
    }
    w.write_record(["deletion", "nodes", &r.deletion.num_nodes.to_string()])?;
    w.write_record(["deletion", "deleted", &r.deletion.num_deleted.to_string()])?;
    w.write_record(["deletion", "rate", &opt(r.deletion.rate)])?;
    for d in &r.deletion_by_construct {
        for (scope, s) in [("inside", &d.inside), ("outside", &d.outside)] {
            w.write_record(["deletion_rate", &format!("{}_{scope}", d.construct.name()), &opt(s.rate)])?;
        }
    }
    let cs = &r.context_switches;
    w.write_record(["context_switches", "threshold", &cs.threshold.to_string()])?;
    w.write_record(["context_switches", "frequency", &opt(cs.frequency)])?;
    let cr = &r.comment_restoration;
    w.write_record(["comment_restoration", "commented", &cr.commented.to_string()])?;
    w.write_record(["comment_restoration", "restored", &cr.restored.to_string()])?;
    for (k, n) in &r.behaviors {
        w.write_record(["behavior", k, &n.to_string()])?;
    }
    for l in &r.lifetimes {
        w.write_record(["lifetime", &l.lineage_id.to_string(), &l.lifetime_fraction.to_string()])?;
    }
    for j in &cs.jumps {
        w.write_record(["jump", &j.edit_state.to_string(), &opt(j.distance)])?;
    }
    for p in &r.tree_sizes {
        w.write_record(["tree_size", &p.state.to_string(), &opt(p.node_count)])?;
    }
    w.into_inner().map_err(|e| ReportError::Io(e.into_error()))
}

fn summary_csv(s: &CorpusSummary) -> Result<Vec<u8>, ReportError> {
    let mut out = Vec::new();
    if let Some(t) = s.generated_at_unix {
        writeln!(out, "# generated_at_unix={t}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "session",
        "num_events",
        "tree_fraction",
        "parseable_fraction",
        "single_step_success",
        "deletion_rate",
        "switch_frequency",
        "mean_lifetime",
    ])?;
    for e in &s.sessions {
        w.write_record([
            e.session.clone(),
            e.num_events.to_string(),
            e.tree_fraction.to_string(),
            e.parseable_fraction.to_string(),
            opt(e.single_step_success),
            opt(e.deletion_rate),
            opt(e.switch_frequency),
            opt(e.mean_lifetime),
        ])?;
    }
    w.into_inner().map_err(|e| ReportError::Io(e.into_error()))
}

fn behavior_summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["group", "kind", "files", "fraction_with_any", "median"])?;
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.kind.name().to_string(),
            r.files.to_string(),
            opt(r.fraction_with_any),
            opt(r.median),
        ])?;
    }
    w.into_inner().map_err(|e| ReportError::Io(e.into_error()))
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>, ReportError> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

pub fn read_sessions(path: &Path) -> Result<Vec<Session>, ReportError> {
    let bytes = fs::read(path)?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(ReportError::NoSessions);
    }
    Ok(ingest_log(bytes.as_slice())?)
}

/// Everything `ptchron run` does. Writes, under `outdir`:
/// `sessions/<key>.{json,csv}`, `summary.{json,csv}`,
/// `exclusions.{json,csv}`, `behaviors.jsonl` and `behavior_summary.csv`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<CorpusSummary, ReportError> {
    cfg.analysis.validate()?;
    let sessions = read_sessions(&cfg.input)?;
    let result = analyze_corpus(sessions, &cfg.analysis)?;
    let now = cfg.timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let summary = result.summary(&cfg.analysis, now);

    let dir = cfg.outdir.join("sessions");
    fs::create_dir_all(&dir)?;
    let ext = match cfg.format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };
    result.kept.par_iter().try_for_each(|r| -> Result<(), ReportError> {
        let bytes = match cfg.format {
            OutputFormat::Json => pretty(&r.report)?,
            OutputFormat::Csv => session_csv(&r.report)?,
        };
        fs::write(dir.join(format!("{}.{ext}", r.report.session)), bytes)?;
        Ok(())
    })?;

    let (summary_bytes, exclusion_bytes) = match cfg.format {
        OutputFormat::Json => (pretty(&summary)?, pretty(&result.excluded)?),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["session", "reason", "detail"])?;
            for e in &result.excluded {
                let detail = match &e.reason {
                    ExclusionReason::TooFewEvents { events, min_events } => format!("{events}<{min_events}"),
                    ExclusionReason::LowTreeCoverage { coverage, min_tree_coverage } => {
                        format!("{coverage}<{min_tree_coverage}")
                    }
                };
                w.write_record([e.session.as_str(), e.reason.code(), &detail])?;
            }
            let ex = w.into_inner().map_err(|e| ReportError::Io(e.into_error()))?;
            (summary_csv(&summary)?, ex)
        }
    };
    fs::write(cfg.outdir.join(format!("summary.{ext}")), summary_bytes)?;
    fs::write(cfg.outdir.join(format!("exclusions.{ext}")), exclusion_bytes)?;

    let mut lines = Vec::new();
    for r in &result.kept {
        for e in &r.behaviors {
            let mut v = serde_json::to_value(e)?;
            v.as_object_mut()
                .unwrap()
                .insert("session".to_string(), r.report.session.clone().into());
            serde_json::to_writer(&mut lines, &v)?;
            lines.push(b'\n');
        }
    }
    fs::write(cfg.outdir.join("behaviors.jsonl"), lines)?;
    fs::write(
        cfg.outdir.join("behavior_summary.csv"),
        behavior_summary_csv(&result.behavior_summary)?,
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Lifetimes,
    TreeSize,
    Jumps,
    NdrByConstruct,
}

impl FromStr for PlotKind {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lifetimes" => Ok(PlotKind::Lifetimes),
            "tree_size" => Ok(PlotKind::TreeSize),
            "jumps" => Ok(PlotKind::Jumps),
            "ndr_by_construct" => Ok(PlotKind::NdrByConstruct),
            other => Err(ReportError::UnknownPlotKind(other.to_string())),
        }
    }
}

/// Tidy CSV, one row per observation, for the kept sessions.
pub fn emit_plot_data(reports: &[SessionReport], kind: PlotKind) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match kind {
        PlotKind::Lifetimes => {
            w.write_record(["session", "lineage_id", "lifetime_fraction"])?;
            for r in reports {
                for l in &r.lifetimes {
                    w.write_record([&r.session, &l.lineage_id.to_string(), &l.lifetime_fraction.to_string()])?;
                }
            }
        }
        PlotKind::TreeSize => {
            w.write_record(["session", "state", "kind", "node_count"])?;
            for r in reports {
                for p in &r.tree_sizes {
                    let kind = serde_json::to_value(p.kind)?;
                    w.write_record([
                        r.session.as_str(),
                        &p.state.to_string(),
                        kind.as_str().unwrap_or_default(),
                        &opt(p.node_count),
                    ])?;
                }
            }
        }
        PlotKind::Jumps => {
            w.write_record(["session", "edit_state", "distance", "skipped"])?;
            for r in reports {
                for j in &r.context_switches.jumps {
                    w.write_record([
                        r.session.as_str(),
                        &j.edit_state.to_string(),
                        &opt(j.distance),
                        &j.skipped.to_string(),
                    ])?;
                }
            }
        }
        PlotKind::NdrByConstruct => {
            w.write_record(["session", "construct", "scope", "num_nodes", "num_deleted", "rate"])?;
            for r in reports {
                for d in &r.deletion_by_construct {
                    for (scope, s) in [("inside", &d.inside), ("outside", &d.outside)] {
                        w.write_record([
                            r.session.as_str(),
                            d.construct.name(),
                            scope,
                            &s.num_nodes.to_string(),
                            &s.num_deleted.to_string(),
                            &opt(s.rate),
                        ])?;
                    }
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Per-state tree JSON lines and temporal link JSON lines for one session.
pub fn dump_trees(a: &SessionAnalysis) -> Result<(String, String), ReportError> {
    let mut trees = String::new();
    for v in &a.versions {
        let line = serde_json::json!({
            "state": v.state_index,
            "kind": v.kind,
            "tree": v.tree.as_ref().map(|t| t.to_json(v.state_index)),
        });
        writeln!(trees, "{line}").unwrap();
    }
    let mut links = String::new();
    for l in a.tracking.links() {
        let line = serde_json::json!({
            "child": l.child.uid().0,
            "parent": l.parent.uid().0,
            "child_state": l.child.state,
            "parent_state": l.parent.state,
            "gap": l.gap,
            "via_comment": l.via_comment,
        });
        writeln!(links, "{line}").unwrap();
    }
    Ok((trees, links))
}
