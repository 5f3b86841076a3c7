//! End-to-end dataset construction: explode the corpus into single-turn
//! samples, generate a guided reasoning chain per sample, regenerate the call
//! from the reasoning alone, filter by exact match / AST equivalence / judge,
//! and emit training records plus funnel statistics.
//!
//! Samples are independent work units processed by a bounded worker pool.
//! Results are keyed by sample id and flushed in sorted id order, so output
//! bytes are independent of worker scheduling. A resume manifest records one
//! outcome per completed sample; rerunning over a complete manifest performs
//! zero gateway calls.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use toolforge_core::equivalence::{ast_equivalent, exact_match, MatchPolicy};
use toolforge_core::grammar::{extract_tagged, parse_call_list};
use toolforge_core::judge::{parse_judge_label, JudgeLabel};
use toolforge_core::prompts::{
    build_stage1, build_stage2, build_stage3, render_training_record, RecordMode,
    PLACEHOLDER_MARKERS,
};
use toolforge_core::sample::{ReasoningChain, Sample};
use toolforge_core::templates::{Template, TemplateRegistry};

use crate::corpus::{explode_conversations, ContextMode, ExplodeStats};
use crate::gateway::{CompletionRequest, Gateway, GatewayError};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub template_id: String,
    pub generation_model: String,
    pub judge_model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub workers: usize,
    pub context: ContextMode,
    pub policy: MatchPolicy,
    pub mode: RecordMode,
    pub output_path: PathBuf,
    pub stats_path: PathBuf,
    pub manifest_path: PathBuf,
}

impl PipelineConfig {
    pub fn new(output_path: impl Into<PathBuf>) -> Self {
        let output_path = output_path.into();
        let stats_path = derived_path(&output_path, ".stats.json");
        let manifest_path = derived_path(&output_path, ".manifest.jsonl");
        PipelineConfig {
            template_id: String::from("detail"),
            generation_model: String::from("gpt-4o-mini"),
            judge_model: String::from("gpt-4o-mini"),
            temperature: 0.0,
            max_output_tokens: 2048,
            workers: 8,
            context: ContextMode::LastUser,
            policy: MatchPolicy::default(),
            mode: RecordMode::WithThought,
            output_path,
            stats_path,
            manifest_path,
        }
    }
}

fn derived_path(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    base.with_file_name(name)
}

/// Which stage dropped a sample, for funnel accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageFailure {
    Stage1,
    Stage2,
    Stage3,
}

/// Everything the pipeline learned about one sample; serialized per line into
/// the resume manifest. `kept` is exactly `em_pass || ast_pass || judge label
/// can_replace`, and a failure reason is present iff the sample was dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageOutcome {
    pub sample_id: String,
    pub template_id: String,
    pub reasoning: Option<String>,
    pub candidate_raw: Option<String>,
    pub em_pass: bool,
    pub ast_pass: bool,
    pub judge_label: Option<JudgeLabel>,
    pub judge_raw: Option<String>,
    pub kept: bool,
    pub failure_stage: Option<StageFailure>,
    pub failure_reason: Option<String>,
}

impl StageOutcome {
    fn dropped(sample_id: &str, template_id: &str, stage: StageFailure, reason: String) -> Self {
        StageOutcome {
            sample_id: sample_id.to_string(),
            template_id: template_id.to_string(),
            reasoning: None,
            candidate_raw: None,
            em_pass: false,
            ast_pass: false,
            judge_label: None,
            judge_raw: None,
            kept: false,
            failure_stage: Some(stage),
            failure_reason: Some(reason),
        }
    }
}

/// Funnel counters. `em/ast/judge_passes` are disjoint (first passing check
/// wins), so they sum to `kept` and the funnel conserves exactly:
/// `single_turn_samples = stage1_failures + stage2_failures + stage3_dropped + kept`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub input_conversations: u64,
    pub malformed_records: u64,
    pub tool_load_failures: u64,
    pub skipped_no_user_context: u64,
    pub skipped_unparseable_ground_truth: u64,
    pub skipped_empty_ground_truth: u64,
    pub single_turn_samples: u64,
    pub stage1_failures: u64,
    pub stage1_successes: u64,
    pub stage2_failures: u64,
    pub stage2_parse_successes: u64,
    pub em_passes: u64,
    pub ast_passes: u64,
    pub judge_passes: u64,
    pub judge_unparseable: u64,
    pub stage3_dropped: u64,
    pub kept: u64,
    pub per_template: BTreeMap<String, u64>,
}

impl DatasetStats {
    pub fn funnel_conserved(&self) -> bool {
        self.single_turn_samples
            == self.stage1_failures + self.stage2_failures + self.stage3_dropped + self.kept
            && self.kept == self.em_passes + self.ast_passes + self.judge_passes
    }

    fn absorb_explode(&mut self, explode: &ExplodeStats) {
        self.input_conversations = explode.conversations;
        self.malformed_records = explode.malformed_records;
        self.tool_load_failures = explode.tool_load_failures;
        self.skipped_no_user_context = explode.skipped_no_user_context;
        self.skipped_unparseable_ground_truth = explode.skipped_unparseable_ground_truth;
        self.skipped_empty_ground_truth = explode.skipped_empty_ground_truth;
        self.single_turn_samples = explode.samples;
    }

    fn absorb_outcome(&mut self, outcome: &StageOutcome) {
        match outcome.failure_stage {
            Some(StageFailure::Stage1) => {
                self.stage1_failures += 1;
                return;
            }
            Some(StageFailure::Stage2) => {
                self.stage1_successes += 1;
                self.stage2_failures += 1;
                return;
            }
            _ => {}
        }
        self.stage1_successes += 1;
        self.stage2_parse_successes += 1;
        if outcome.kept {
            self.kept += 1;
            *self.per_template.entry(outcome.template_id.clone()).or_insert(0) += 1;
            if outcome.em_pass {
                self.em_passes += 1;
            } else if outcome.ast_pass {
                self.ast_passes += 1;
            } else {
                self.judge_passes += 1;
            }
        } else {
            self.stage3_dropped += 1;
            if outcome.judge_label == Some(JudgeLabel::Unparseable) {
                self.judge_unparseable += 1;
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("duplicate sample id `{0}` in corpus")]
    DuplicateSampleId(String),
    #[error(transparent)]
    Template(#[from] toolforge_core::templates::UnknownTemplate),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io { path: path.display().to_string(), message: e.to_string() }
}

#[derive(Debug)]
pub struct PipelineRun {
    pub stats: DatasetStats,
    pub outcomes: Vec<StageOutcome>,
}

/// Runs stage 1 for one sample: builds the guided-reasoning prompt, completes
/// it, extracts the `THINKING` section.
pub fn run_stage1(
    sample: &Sample,
    template: &Template,
    gateway: &Gateway,
    config: &PipelineConfig,
) -> Result<Result<ReasoningChain, String>, GatewayError> {
    let messages = match build_stage1(sample, template) {
        Ok(messages) => messages,
        Err(e) => return Ok(Err(format!("stage-1 prompt: {e}"))),
    };
    let request = CompletionRequest {
        messages,
        model: config.generation_model.clone(),
        temperature: config.temperature,
        max_output_tokens: config.max_output_tokens,
    };
    let response = match gateway.complete(&request) {
        Ok(text) => text,
        Err(e @ GatewayError::CassetteMiss { .. }) => return Err(e),
        Err(e) => return Ok(Err(format!("stage-1 gateway: {e}"))),
    };
    let Some(section) = extract_tagged(&response, "THINKING") else {
        return Ok(Err(String::from("missing THINKING")));
    };
    let text = section.content.trim();
    if text.is_empty() {
        return Ok(Err(String::from("empty THINKING")));
    }
    if PLACEHOLDER_MARKERS.iter().any(|marker| text.contains(marker)) {
        return Ok(Err(String::from("reasoning echoes prompt placeholders")));
    }
    Ok(Ok(ReasoningChain {
        text: text.to_string(),
        template_id: template.id.clone(),
        model_id: config.generation_model.clone(),
    }))
}

/// Runs stage 2: reasoning-conditioned call generation, extraction of the
/// `FUNCTION` section, and parsing. Returns the raw expression text; parse
/// failure is a stage-2 drop.
pub fn run_stage2(
    sample: &Sample,
    reasoning: &ReasoningChain,
    gateway: &Gateway,
    config: &PipelineConfig,
) -> Result<Result<String, String>, GatewayError> {
    let messages = match build_stage2(sample, &reasoning.text) {
        Ok(messages) => messages,
        Err(e) => return Ok(Err(format!("stage-2 prompt: {e}"))),
    };
    let request = CompletionRequest {
        messages,
        model: config.generation_model.clone(),
        temperature: config.temperature,
        max_output_tokens: config.max_output_tokens,
    };
    let response = match gateway.complete(&request) {
        Ok(text) => text,
        Err(e @ GatewayError::CassetteMiss { .. }) => return Err(e),
        Err(e) => return Ok(Err(format!("stage-2 gateway: {e}"))),
    };
    let Some(section) = extract_tagged(&response, "FUNCTION") else {
        return Ok(Err(String::from("missing FUNCTION")));
    };
    let raw = section.content.trim().to_string();
    match parse_call_list(&raw) {
        Ok(_) => Ok(Ok(raw)),
        Err(e) => Ok(Err(format!("unparseable candidate: {e}"))),
    }
}

/// Runs stage 3 filtering: exact match on raw texts first, AST equivalence
/// second, and the judge only when both syntactic checks failed.
pub fn run_stage3(
    sample: &Sample,
    reasoning: ReasoningChain,
    candidate_raw: String,
    gateway: &Gateway,
    config: &PipelineConfig,
) -> Result<StageOutcome, GatewayError> {
    let mut outcome = StageOutcome {
        sample_id: sample.id.clone(),
        template_id: reasoning.template_id.clone(),
        reasoning: Some(reasoning.text),
        candidate_raw: Some(candidate_raw.clone()),
        em_pass: false,
        ast_pass: false,
        judge_label: None,
        judge_raw: None,
        kept: false,
        failure_stage: None,
        failure_reason: None,
    };

    outcome.em_pass = exact_match(&sample.raw_ground_truth, &candidate_raw);
    if !outcome.em_pass {
        if let Ok(candidate) = parse_call_list(&candidate_raw) {
            outcome.ast_pass =
                ast_equivalent(&sample.ground_truth, &candidate, &sample.tools, &config.policy)
                    .is_match();
        }
    }

    if outcome.em_pass || outcome.ast_pass {
        outcome.kept = true;
        return Ok(outcome);
    }

    let messages = match build_stage3(sample, &candidate_raw) {
        Ok(messages) => messages,
        Err(e) => {
            outcome.failure_stage = Some(StageFailure::Stage3);
            outcome.failure_reason = Some(format!("stage-3 prompt: {e}"));
            return Ok(outcome);
        }
    };
    let request = CompletionRequest {
        messages,
        model: config.judge_model.clone(),
        temperature: config.temperature,
        max_output_tokens: config.max_output_tokens,
    };
    match gateway.complete(&request) {
        Ok(response) => {
            let verdict = parse_judge_label(&response);
            outcome.judge_label = Some(verdict.label);
            outcome.judge_raw = Some(verdict.raw);
            match verdict.label {
                JudgeLabel::CanReplace => outcome.kept = true,
                JudgeLabel::TotallyIncorrect => {
                    outcome.failure_stage = Some(StageFailure::Stage3);
                    outcome.failure_reason = Some(String::from("judge: totally incorrect"));
                }
                // Ambiguity never admits a sample; counted separately.
                JudgeLabel::Unparseable => {
                    outcome.failure_stage = Some(StageFailure::Stage3);
                    outcome.failure_reason = Some(String::from("judge: unparseable output"));
                }
            }
        }
        Err(e @ GatewayError::CassetteMiss { .. }) => return Err(e),
        Err(e) => {
            outcome.failure_stage = Some(StageFailure::Stage3);
            outcome.failure_reason = Some(format!("judge unavailable: {e}"));
        }
    }
    Ok(outcome)
}

fn process_sample(
    sample: &Sample,
    template: &Template,
    gateway: &Gateway,
    config: &PipelineConfig,
) -> Result<StageOutcome, GatewayError> {
    let reasoning = match run_stage1(sample, template, gateway, config)? {
        Ok(reasoning) => reasoning,
        Err(reason) => {
            return Ok(StageOutcome::dropped(
                &sample.id,
                &template.id,
                StageFailure::Stage1,
                reason,
            ));
        }
    };
    let candidate_raw = match run_stage2(sample, &reasoning, gateway, config)? {
        Ok(raw) => raw,
        Err(reason) => {
            return Ok(StageOutcome::dropped(
                &sample.id,
                &template.id,
                StageFailure::Stage2,
                reason,
            ));
        }
    };
    run_stage3(sample, reasoning, candidate_raw, gateway, config)
}

fn load_manifest(path: &Path) -> Result<BTreeMap<String, StageOutcome>, PipelineError> {
    let mut manifest = BTreeMap::new();
    if !path.exists() {
        return Ok(manifest);
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let outcome: StageOutcome = serde_json::from_str(line)
            .map_err(|e| io_err(path, format!("manifest line {}: {e}", index + 1)))?;
        manifest.insert(outcome.sample_id.clone(), outcome);
    }
    Ok(manifest)
}

/// Runs the full pipeline. Per-sample failures become statistics; the only
/// fatal errors are unwritable outputs and cassette misses in replay mode.
pub fn run_pipeline(
    corpus_jsonl: &str,
    registry: &TemplateRegistry,
    gateway: &Gateway,
    config: &PipelineConfig,
) -> Result<PipelineRun, PipelineError> {
    let template = registry.get(&config.template_id)?.clone();

    let exploded = explode_conversations(corpus_jsonl, config.context);
    let mut samples = exploded.samples;
    samples.sort_by(|a, b| a.id.cmp(&b.id));
    for window in samples.windows(2) {
        if window[0].id == window[1].id {
            return Err(PipelineError::DuplicateSampleId(window[0].id.clone()));
        }
    }

    let prior = load_manifest(&config.manifest_path)?;
    let pending: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, sample)| !prior.contains_key(&sample.id))
        .map(|(index, _)| index)
        .collect();

    // Bounded worker pool over the pending samples. A fatal gateway error
    // stops the dispenser; in-flight samples finish and are discarded.
    let mut fresh: BTreeMap<String, StageOutcome> = BTreeMap::new();
    let mut fatal: Option<GatewayError> = None;
    if !pending.is_empty() {
        let workers = config.workers.max(1).min(pending.len());
        let next = AtomicUsize::new(0);
        let stop = AtomicBool::new(false);
        let (sender, receiver) = mpsc::channel::<Result<StageOutcome, GatewayError>>();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                let sender = sender.clone();
                let samples = &samples;
                let pending = &pending;
                let next = &next;
                let stop = &stop;
                let template = &template;
                scope.spawn(move || loop {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let slot = next.fetch_add(1, Ordering::SeqCst);
                    if slot >= pending.len() {
                        break;
                    }
                    let sample = &samples[pending[slot]];
                    let result = process_sample(sample, template, gateway, config);
                    if result.is_err() {
                        stop.store(true, Ordering::SeqCst);
                    }
                    if sender.send(result).is_err() {
                        break;
                    }
                });
            }
            drop(sender);
            for result in receiver {
                match result {
                    Ok(outcome) => {
                        fresh.insert(outcome.sample_id.clone(), outcome);
                    }
                    Err(e) => fatal = Some(e),
                }
            }
        });
    }
    if let Some(e) = fatal {
        return Err(PipelineError::Gateway(e));
    }

    // Merge prior and fresh outcomes in sample order.
    let mut outcomes: Vec<StageOutcome> = Vec::with_capacity(samples.len());
    for sample in &samples {
        let outcome = prior
            .get(&sample.id)
            .or_else(|| fresh.get(&sample.id))
            .expect("every sample has an outcome")
            .clone();
        outcomes.push(outcome);
    }

    let mut stats = DatasetStats::default();
    stats.absorb_explode(&exploded.stats);
    for outcome in &outcomes {
        stats.absorb_outcome(outcome);
    }

    write_outputs(&samples, &outcomes, &stats, config)?;
    gateway.persist()?;
    Ok(PipelineRun { stats, outcomes })
}

fn write_outputs(
    samples: &[Sample],
    outcomes: &[StageOutcome],
    stats: &DatasetStats,
    config: &PipelineConfig,
) -> Result<(), PipelineError> {
    for path in [&config.output_path, &config.stats_path, &config.manifest_path] {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
            }
        }
    }

    let mut dataset = Vec::new();
    for (sample, outcome) in samples.iter().zip(outcomes) {
        if !outcome.kept {
            continue;
        }
        let reasoning = outcome.reasoning.as_ref().map(|text| ReasoningChain {
            text: text.clone(),
            template_id: outcome.template_id.clone(),
            model_id: config.generation_model.clone(),
        });
        let record = render_training_record(
            sample,
            reasoning.as_ref(),
            config.mode,
            &outcome.template_id,
        )
        .map_err(|e| io_err(&config.output_path, format!("record for {}: {e}", sample.id)))?;
        let line = serde_json::to_string(&record)
            .map_err(|e| io_err(&config.output_path, e))?;
        dataset.push(line);
    }
    let mut output = dataset.join("\n");
    if !output.is_empty() {
        output.push('\n');
    }
    fs::write(&config.output_path, output).map_err(|e| io_err(&config.output_path, e))?;

    let mut manifest = fs::File::create(&config.manifest_path)
        .map_err(|e| io_err(&config.manifest_path, e))?;
    for outcome in outcomes {
        let line =
            serde_json::to_string(outcome).map_err(|e| io_err(&config.manifest_path, e))?;
        writeln!(manifest, "{line}").map_err(|e| io_err(&config.manifest_path, e))?;
    }

    let mut stats_text =
        serde_json::to_string_pretty(stats).map_err(|e| io_err(&config.stats_path, e))?;
    stats_text.push('\n');
    fs::write(&config.stats_path, stats_text).map_err(|e| io_err(&config.stats_path, e))?;
    Ok(())
}

/// Human-readable funnel summary for the CLI.
pub fn render_funnel(stats: &DatasetStats) -> String {
    let mut out = String::new();
    let mut line = |label: &str, value: u64| {
        out.push_str(&format!("{label:<34} {value}\n"));
    };
    line("input conversations", stats.input_conversations);
    line("  malformed records", stats.malformed_records);
    line("  tool documents rejected", stats.tool_load_failures);
    line("  turns without user context", stats.skipped_no_user_context);
    line("  unparseable ground truth", stats.skipped_unparseable_ground_truth);
    line("  empty ground truth", stats.skipped_empty_ground_truth);
    line("single-turn samples", stats.single_turn_samples);
    line("  stage-1 failures", stats.stage1_failures);
    line("stage-1 successes", stats.stage1_successes);
    line("  stage-2 failures", stats.stage2_failures);
    line("stage-2 parse successes", stats.stage2_parse_successes);
    line("  exact-match passes", stats.em_passes);
    line("  ast passes", stats.ast_passes);
    line("  judge passes", stats.judge_passes);
    line("  judge unparseable", stats.judge_unparseable);
    line("  stage-3 dropped", stats.stage3_dropped);
    line("kept", stats.kept);
    for (template, count) in &stats.per_template {
        line(&format!("  kept via template `{template}`"), *count);
    }
    out
}
