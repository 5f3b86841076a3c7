//! File formats for the scorer: JSONL case files (with inline output or a
//! transcript path), suite config JSON, report rendering, and dataset
//! statistics for emitted JSONL files. Shapes are documented in
//! `docs/formats.md`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::value::RawValue;
use thiserror::Error;

use toolforge_core::grammar::parse_call_list;
use toolforge_core::prompts::TrainingRecord;
use toolforge_core::scorer::{CaseKind, EvalCase, SuiteConfig, SuiteReport};
use toolforge_core::tools::{load_tools, ToolSet};

#[derive(Debug, Error)]
pub enum CaseLoadError {
    #[error("case file line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("case `{id}`: {message}")]
    Case { id: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Deserialize)]
struct RawCase<'a> {
    id: String,
    category: String,
    kind: CaseKind,
    #[serde(borrow, default)]
    tools: Option<&'a RawValue>,
    #[serde(default)]
    gold: Option<String>,
    #[serde(default)]
    model_output: Option<String>,
    #[serde(default)]
    transcript_path: Option<String>,
}

/// Loads a JSONL case file. `transcript_path` entries are resolved relative
/// to `base_dir` (normally the case file's directory).
pub fn load_cases(jsonl: &str, base_dir: &Path) -> Result<Vec<EvalCase>, CaseLoadError> {
    let mut cases = Vec::new();
    for (index, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawCase = serde_json::from_str(line)
            .map_err(|e| CaseLoadError::Line { line: index + 1, message: e.to_string() })?;
        let case_err = |message: String| CaseLoadError::Case { id: raw.id.clone(), message };

        let tools = match raw.tools {
            Some(raw_tools) => load_tools(raw_tools.get())
                .map_err(|e| case_err(format!("tool document rejected: {e}")))?
                .tools,
            None => ToolSet::empty(),
        };
        let gold = match (&raw.kind, raw.gold) {
            (CaseKind::Call, Some(expression)) => Some(
                parse_call_list(&expression)
                    .map_err(|e| case_err(format!("gold expression failed to parse: {e}")))?,
            ),
            (CaseKind::Call, None) => {
                return Err(case_err(String::from("call cases must carry a gold expression")));
            }
            (_, Some(_)) => {
                return Err(case_err(String::from("relevance cases must not carry gold")));
            }
            (_, None) => None,
        };
        let model_output = match (raw.model_output, raw.transcript_path) {
            (Some(_), Some(_)) => {
                return Err(case_err(String::from(
                    "give either model_output or transcript_path, not both",
                )));
            }
            (Some(text), None) => text,
            (None, Some(relative)) => {
                let path = base_dir.join(&relative);
                fs::read_to_string(&path).map_err(|e| CaseLoadError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?
            }
            (None, None) => {
                return Err(case_err(String::from(
                    "missing model_output (or transcript_path)",
                )));
            }
        };
        cases.push(EvalCase {
            id: raw.id,
            category: raw.category,
            kind: raw.kind,
            tools,
            gold,
            model_output,
        });
    }
    Ok(cases)
}

pub fn load_suite_config(path: &Path) -> Result<SuiteConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let config: SuiteConfig =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    config.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(config)
}

/// Two-decimal table for terminals; the JSON report carries full precision.
pub fn render_report_table(report: &SuiteReport) -> String {
    let width = report
        .per_category
        .keys()
        .map(|category| category.len())
        .chain(report.group_averages.keys().map(|group| group.len() + 8))
        .chain([20])
        .max()
        .unwrap_or(20)
        + 2;
    let mut out = format!("suite: {}\n", report.suite_id);
    for (category, accuracy) in &report.per_category {
        out.push_str(&format!("{category:<width$} {accuracy:>8.2}\n"));
    }
    for (group, average) in &report.group_averages {
        out.push_str(&format!("{:<width$} {average:>8.2}\n", format!("group: {group}")));
    }
    out.push_str(&format!("{:<width$} {:>8.2}\n", "weighted average", report.weighted_average));
    if let Some(overall) = report.grouped_overall {
        out.push_str(&format!("{:<width$} {overall:>8.2}\n", "grouped overall"));
    }
    out.push_str(&format!(
        "{:<width$} {:>8.2}\n",
        "unweighted average", report.unweighted_average
    ));
    out
}

/// Per-template and per-mode record counts for an emitted dataset.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct DatasetBreakdown {
    pub total: u64,
    pub by_template_and_mode: BTreeMap<(String, String), u64>,
}

pub fn dataset_breakdown(jsonl: &str) -> Result<DatasetBreakdown, String> {
    let mut breakdown = DatasetBreakdown::default();
    for (index, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: TrainingRecord =
            serde_json::from_str(line).map_err(|e| format!("line {}: {e}", index + 1))?;
        breakdown.total += 1;
        *breakdown
            .by_template_and_mode
            .entry((record.template_id, record.mode.to_string()))
            .or_insert(0) += 1;
    }
    Ok(breakdown)
}
