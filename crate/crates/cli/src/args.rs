use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "transcreate", version, about = "Transcreate reading-comprehension items into students' topics of interest")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Topic taxonomy JSON (default: bundled 9/33 taxonomy).
    #[arg(long, global = true, value_name = "PATH")]
    pub taxonomy: Option<PathBuf>,
    /// Tag set JSON (default: bundled 41 tags).
    #[arg(long, global = true, value_name = "PATH")]
    pub tagset: Option<PathBuf>,
    /// Directory of prompt template overrides.
    #[arg(long, global = true, value_name = "DIR")]
    pub prompts_dir: Option<PathBuf>,
    /// More log output on stderr (repeat for debug, trace).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    /// Only errors on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate an items file and optionally write it back normalized.
    Ingest(IngestArgs),
    /// Readability and lexical-diversity report for an items file.
    Analyze(AnalyzeArgs),
    /// Run the five-step pipeline over items and target topics.
    Transcreate(TranscreateArgs),
    /// Blind Bloom-level judging of transcreated questions.
    Judge(JudgeArgs),
    /// Human answerability review.
    Review(ReviewArgs),
    /// Summarise a fully reviewed queue.
    QaReport(QaReportArgs),
    /// Split students into two groups with balanced TOEFL scores.
    Split(SplitArgs),
    /// Score students' answer sheets.
    Score(ScoreArgs),
    /// Two-group, two-test experiment report.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Items JSONL.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Write the validated items here as normalized JSONL.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Report path (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Interest,
    Random,
}

#[derive(Debug, Args)]
pub struct GatewayArgs {
    /// Scripted mock replies (offline run).
    #[arg(long, value_name = "PATH")]
    pub mock: Option<PathBuf>,
    /// Append every model request and reply to this JSONL file.
    #[arg(long, value_name = "PATH")]
    pub request_log: Option<PathBuf>,
    /// Re-prompts allowed per step after an invalid reply.
    #[arg(long, value_name = "N")]
    pub retry_budget: Option<u32>,
    /// Worker threads.
    #[arg(long, default_value_t = 1, value_name = "N")]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct TranscreateArgs {
    /// Source items JSONL.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Interest profiles JSON; targets are assigned per student.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["assignments", "target"])]
    pub profiles: Option<PathBuf>,
    /// Assignment mode used with --profiles.
    #[arg(long, value_enum, default_value_t = Mode::Interest)]
    pub mode: Mode,
    /// Precomputed assignments JSON.
    #[arg(long, value_name = "PATH", conflicts_with = "target")]
    pub assignments: Option<PathBuf>,
    /// One target topic for every item, no students.
    #[arg(long, value_name = "CODE")]
    pub target: Option<String>,
    /// Save the assignments that were used.
    #[arg(long, value_name = "PATH")]
    pub assignments_out: Option<PathBuf>,
    /// Records JSONL.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Seed for random-mode assignment.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allowed relative word-count deviation in step 4.
    #[arg(long, value_name = "FRACTION")]
    pub length_envelope: Option<f64>,
    #[command(flatten)]
    pub gateway: GatewayArgs,
}

#[derive(Debug, Args)]
pub struct JudgeArgs {
    /// Records JSONL from `transcreate`.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Agreement report path (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Per-question verdicts JSONL.
    #[arg(long, value_name = "PATH")]
    pub verdicts_out: Option<PathBuf>,
    #[command(flatten)]
    pub gateway: GatewayArgs,
}

#[derive(Debug, Args)]
pub struct ReviewArgs {
    #[command(subcommand)]
    pub action: ReviewAction,
}

#[derive(Debug, Subcommand)]
pub enum ReviewAction {
    /// Create a queue from complete records.
    Open {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        queue: PathBuf,
        /// Replace an existing queue file.
        #[arg(long)]
        force: bool,
    },
    /// Record one decision.
    Apply(ApplyArgs),
    /// Decide pending entries interactively on the terminal.
    Session {
        #[arg(long, value_name = "PATH")]
        queue: PathBuf,
        #[arg(long, value_name = "ID")]
        reviewer: String,
    },
    /// Write accepted and edited items as JSONL.
    Export {
        #[arg(long, value_name = "PATH")]
        queue: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerdictKind {
    Accept,
    Edit,
    Reject,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long, value_name = "PATH")]
    pub queue: PathBuf,
    #[arg(long, value_name = "ID")]
    pub item: String,
    #[arg(long, value_enum)]
    pub verdict: VerdictKind,
    /// New passage text (edit).
    #[arg(long, value_name = "TEXT", conflicts_with = "passage_file")]
    pub passage: Option<String>,
    /// File holding the new passage (edit).
    #[arg(long, value_name = "PATH")]
    pub passage_file: Option<PathBuf>,
    /// Reason (reject).
    #[arg(long)]
    pub reason: Option<String>,
    /// 1-based numbers of unanswerable questions, comma-separated.
    #[arg(long, value_delimiter = ',', value_name = "N,...")]
    pub unanswerable: Vec<usize>,
    #[arg(long, value_name = "ID")]
    pub reviewer: String,
    /// RFC 3339 timestamp (default: now).
    #[arg(long)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Args)]
pub struct QaReportArgs {
    #[arg(long, value_name = "PATH")]
    pub queue: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Student records JSON.
    #[arg(long, value_name = "PATH")]
    pub students: PathBuf,
    /// Students per group (default: half of them).
    #[arg(long, value_name = "K")]
    pub group_size: Option<usize>,
    /// Use the seeded swap search instead of exhaustive search.
    #[arg(long)]
    pub heuristic: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Split result path (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write the student records back with groups filled in.
    #[arg(long, value_name = "PATH")]
    pub assign_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KeyArgs {
    /// Student records JSON.
    #[arg(long, value_name = "PATH")]
    pub students: PathBuf,
    /// Answer key for one test, as TEST=ITEMS.jsonl (repeatable).
    #[arg(long = "key", value_name = "TEST=PATH", required = true)]
    pub keys: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub keys: KeyArgs,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub keys: KeyArgs,
    /// Significance level.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value = "test1", value_name = "TEST")]
    pub first_test: String,
    #[arg(long, default_value = "test2", value_name = "TEST")]
    pub second_test: String,
    /// Report one-sided p-values.
    #[arg(long)]
    pub one_sided: bool,
    /// Report JSON path (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Plain-text table path (default: stdout when --out is given).
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
}
