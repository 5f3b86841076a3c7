//! `forge` — operator entry point.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use toolforge::corpus::ContextMode;
use toolforge::gateway::{Gateway, GatewayConfig, HttpTransport, RetryPolicy};
use toolforge::pipeline::{render_funnel, run_pipeline, PipelineConfig, PipelineError};
use toolforge::scorefiles::{
    dataset_breakdown, load_cases, load_suite_config, render_report_table,
};
use toolforge_core::equivalence::{verify_pair, MatchPolicy};
use toolforge_core::prompts::RecordMode;
use toolforge_core::scorer::{aggregate, filter_subset, score_case, CaseResult};
use toolforge_core::templates::{Template, TemplateRegistry};

#[derive(Parser)]
#[command(
    name = "forge",
    version,
    about = "Build, verify, and score template-guided function-calling datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the three-stage dataset construction pipeline over a corpus
    Build(BuildArgs),
    /// Offline equivalence verdicts for (gold, candidate) expression pairs
    Verify(VerifyArgs),
    /// Score model transcripts against gold cases and aggregate suite metrics
    Score(ScoreArgs),
    /// Summarize an emitted dataset by template and mode
    Stats(StatsArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Corpus JSONL: one conversation (tools + turns) per line
    #[arg(long)]
    input: PathBuf,
    /// Output dataset JSONL
    #[arg(long)]
    out: PathBuf,
    /// Reasoning template id (shipped: detail, claude, simple)
    #[arg(long, default_value = "detail")]
    template: String,
    /// Backend: `live`, `record:PATH`, or `replay:PATH`
    #[arg(long, default_value = "live")]
    backend: BackendArg,
    /// Generation model id (stages 1 and 2)
    #[arg(long, default_value = "gpt-4o-mini")]
    model: String,
    /// Judge model id (stage 3); defaults to --model
    #[arg(long)]
    judge_model: Option<String>,
    /// Worker count for per-sample concurrency
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u16).range(1..))]
    workers: u16,
    /// Supervision mode for emitted records
    #[arg(long, value_enum, default_value_t = ModeArg::WithThought)]
    mode: ModeArg,
    /// How much prior conversation becomes the sample query
    #[arg(long, value_enum, default_value_t = ContextArg::LastUser)]
    context: ContextArg,
    /// Stats JSON path (default: <out>.stats.json)
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Resume manifest path (default: <out>.manifest.jsonl)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory of custom template files, one `<id>.txt` per template
    #[arg(long)]
    templates_dir: Option<PathBuf>,
    /// Sampling temperature for all stages (0 keeps filtering reproducible)
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Per-request completion token cap (stored as cassette metadata)
    #[arg(long, default_value_t = 2048)]
    max_output_tokens: u32,
    /// Requests-per-minute cap for live/record backends
    #[arg(long)]
    rpm: Option<u32>,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSONL of {"gold": "...", "candidate": "..."} pairs
    #[arg(long)]
    pairs: PathBuf,
    /// Tool document JSON
    #[arg(long)]
    tools: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Args)]
struct ScoreArgs {
    /// JSONL case file (id, category, kind, tools, gold, model_output or transcript_path)
    #[arg(long)]
    cases: PathBuf,
    /// Suite config JSON (counts, groups)
    #[arg(long)]
    suite: PathBuf,
    /// Restrict scoring to these categories (comma-separated)
    #[arg(long, value_delimiter = ',')]
    include: Vec<String>,
    /// Drop these categories before scoring (comma-separated)
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    /// Also write the JSON report to this path
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Args)]
struct StatsArgs {
    /// Dataset JSONL emitted by `forge build`
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct PolicyArgs {
    /// Absolute tolerance for mixed integer/float numeric comparison
    #[arg(long, default_value_t = 1e-9)]
    numeric_tolerance: f64,
    /// Compare string values case-insensitively
    #[arg(long)]
    case_insensitive_strings: bool,
    /// Accept any schema-optional one-sided argument, not only default-valued ones
    #[arg(long)]
    permissive_optional_extras: bool,
}

impl PolicyArgs {
    fn to_policy(&self) -> Result<MatchPolicy, CmdError> {
        if self.numeric_tolerance < 0.0 {
            return Err(CmdError::Config(String::from("--numeric-tolerance must be >= 0")));
        }
        Ok(MatchPolicy {
            numeric_tolerance: self.numeric_tolerance,
            case_insensitive_strings: self.case_insensitive_strings,
            permissive_optional_extras: self.permissive_optional_extras,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    WithThought,
    NoThought,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContextArg {
    LastUser,
    AllPriorUser,
}

#[derive(Clone)]
enum BackendArg {
    Live,
    Record(PathBuf),
    Replay(PathBuf),
}

impl FromStr for BackendArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "live" {
            return Ok(BackendArg::Live);
        }
        if let Some(path) = s.strip_prefix("record:") {
            return Ok(BackendArg::Record(PathBuf::from(path)));
        }
        if let Some(path) = s.strip_prefix("replay:") {
            return Ok(BackendArg::Replay(PathBuf::from(path)));
        }
        Err(format!("expected `live`, `record:PATH`, or `replay:PATH`, got `{s}`"))
    }
}

enum CmdError {
    Config(String),
    Runtime(String),
}

impl CmdError {
    fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Runtime(_) => 1,
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Score(args) => cmd_score(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            match &e {
                CmdError::Config(message) => eprintln!("error: {message}"),
                CmdError::Runtime(message) => eprintln!("error: {message}"),
            }
            std::process::exit(e.exit_code());
        }
    }
}

fn read_input(path: &Path) -> Result<String, CmdError> {
    fs::read_to_string(path)
        .map_err(|e| CmdError::Config(format!("cannot read {}: {e}", path.display())))
}

fn cmd_build(args: BuildArgs) -> Result<(), CmdError> {
    let corpus = read_input(&args.input)?;

    let mut registry = TemplateRegistry::builtin();
    if let Some(dir) = &args.templates_dir {
        load_custom_templates(dir, &mut registry)?;
    }
    registry
        .get(&args.template)
        .map_err(|e| CmdError::Config(e.to_string()))?;

    if matches!(args.backend, BackendArg::Replay(_)) && args.rpm.is_some() {
        return Err(CmdError::Config(String::from(
            "replay mode never touches the network; --rpm is not applicable",
        )));
    }

    let gateway_config = GatewayConfig {
        retry: RetryPolicy::default(),
        requests_per_minute: args.rpm,
        ..GatewayConfig::default()
    };
    let gateway = match &args.backend {
        BackendArg::Live => {
            let transport = HttpTransport::from_env().map_err(CmdError::Config)?;
            Gateway::live(Box::new(transport), gateway_config)
        }
        BackendArg::Record(path) => {
            let transport = HttpTransport::from_env().map_err(CmdError::Config)?;
            Gateway::record(Box::new(transport), path, gateway_config)
                .map_err(|e| CmdError::Runtime(e.to_string()))?
        }
        BackendArg::Replay(path) => {
            Gateway::replay(path).map_err(|e| CmdError::Runtime(e.to_string()))?
        }
    };

    if args.temperature < 0.0 {
        return Err(CmdError::Config(String::from("--temperature must be >= 0")));
    }
    let mut config = PipelineConfig::new(&args.out);
    config.template_id = args.template;
    config.generation_model = args.model.clone();
    config.judge_model = args.judge_model.unwrap_or(args.model);
    config.temperature = args.temperature;
    config.max_output_tokens = args.max_output_tokens;
    config.workers = args.workers as usize;
    config.mode = match args.mode {
        ModeArg::WithThought => RecordMode::WithThought,
        ModeArg::NoThought => RecordMode::NoThought,
    };
    config.context = match args.context {
        ContextArg::LastUser => ContextMode::LastUser,
        ContextArg::AllPriorUser => ContextMode::AllPriorUser,
    };
    config.policy = args.policy.to_policy()?;
    if let Some(stats) = args.stats {
        config.stats_path = stats;
    }
    if let Some(manifest) = args.manifest {
        config.manifest_path = manifest;
    }

    let run = run_pipeline(&corpus, &registry, &gateway, &config).map_err(|e| match e {
        PipelineError::Template(e) => CmdError::Config(e.to_string()),
        other => CmdError::Runtime(other.to_string()),
    })?;

    print!("{}", render_funnel(&run.stats));
    println!("dataset written to {}", config.output_path.display());
    println!("stats written to {}", config.stats_path.display());
    println!("manifest written to {}", config.manifest_path.display());
    Ok(())
}

fn load_custom_templates(
    dir: &Path,
    registry: &mut TemplateRegistry,
) -> Result<(), CmdError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CmdError::Config(format!("cannot read {}: {e}", dir.display())))?;
    for entry in entries {
        let entry =
            entry.map_err(|e| CmdError::Config(format!("cannot read {}: {e}", dir.display())))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let body = fs::read_to_string(&path)
            .map_err(|e| CmdError::Config(format!("cannot read {}: {e}", path.display())))?;
        registry.insert(Template::new(id, body.trim_end_matches('\n')));
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CmdError> {
    let policy = args.policy.to_policy()?;
    let pairs_text = fs::read_to_string(&args.pairs)
        .map_err(|e| CmdError::Runtime(format!("cannot read {}: {e}", args.pairs.display())))?;
    let tools_text = fs::read_to_string(&args.tools)
        .map_err(|e| CmdError::Runtime(format!("cannot read {}: {e}", args.tools.display())))?;
    let tools = toolforge_core::tools::load_tools(&tools_text)
        .map_err(|e| CmdError::Runtime(e.to_string()))?
        .tools;

    #[derive(serde::Deserialize)]
    struct Pair {
        gold: String,
        candidate: String,
    }

    for (index, line) in pairs_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pair: Pair = serde_json::from_str(line)
            .map_err(|e| CmdError::Runtime(format!("pair line {}: {e}", index + 1)))?;
        let verdict = verify_pair(&pair.gold, &pair.candidate, &tools, &policy);
        if verdict.explanation.is_empty() {
            println!("pair {}: {}", index + 1, verdict.outcome);
        } else {
            println!("pair {}: {} ({})", index + 1, verdict.outcome, verdict.explanation.join("; "));
        }
    }
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<(), CmdError> {
    let policy = args.policy.to_policy()?;
    let suite = load_suite_config(&args.suite).map_err(CmdError::Config)?;
    let cases_text = read_input(&args.cases)?;
    let base_dir = args.cases.parent().unwrap_or(Path::new("."));
    let cases = load_cases(&cases_text, base_dir).map_err(|e| CmdError::Config(e.to_string()))?;

    let results: Vec<CaseResult> = cases
        .iter()
        .map(|case| CaseResult {
            id: case.id.clone(),
            category: case.category.clone(),
            correct: score_case(case, &policy),
        })
        .collect();

    let mut keep: BTreeSet<String> = suite.counts.keys().cloned().collect();
    for name in args.include.iter().chain(&args.exclude) {
        if !suite.counts.contains_key(name) {
            return Err(CmdError::Config(format!("category `{name}` is not in the suite config")));
        }
    }
    if !args.include.is_empty() {
        keep.retain(|category| args.include.contains(category));
    }
    for name in &args.exclude {
        keep.remove(name);
    }

    let (config, results) = if keep.len() == suite.counts.len() {
        (suite, results)
    } else {
        (suite.subset(&keep), filter_subset(&results, &keep))
    };

    let report = aggregate(&results, &config).map_err(|e| CmdError::Config(e.to_string()))?;
    print!("{}", render_report_table(&report));
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CmdError::Runtime(e.to_string()))?;
    println!("{json}");
    if let Some(path) = args.report {
        fs::write(&path, format!("{json}\n"))
            .map_err(|e| CmdError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<(), CmdError> {
    let text = read_input(&args.input)?;
    let breakdown = dataset_breakdown(&text).map_err(CmdError::Runtime)?;
    println!("records {}", breakdown.total);
    for ((template, mode), count) in &breakdown.by_template_and_mode {
        println!("template {template} mode {mode}: {count}");
    }
    Ok(())
}
