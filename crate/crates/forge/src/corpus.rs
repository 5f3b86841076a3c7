//! Corpus loading and single-turn conversion.
//!
//! The input is JSONL, one conversation per line: a tool list plus ordered
//! message turns (see `docs/formats.md`). Each assistant turn whose content
//! parses as a non-empty call list becomes one sample, with the query taken
//! from the immediately preceding user turn (or, under
//! [`ContextMode::AllPriorUser`], from all prior user turns). Malformed
//! records are skipped and counted, never fatal for the batch.

use serde::Deserialize;
use serde_json::value::RawValue;
use toolforge_core::grammar::parse_call_list;
use toolforge_core::sample::Sample;
use toolforge_core::tools::load_tools;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContextMode {
    /// Query is the single immediately preceding user turn.
    #[default]
    LastUser,
    /// Query is every prior user turn, joined by blank lines.
    AllPriorUser,
}

#[derive(Deserialize)]
struct ConversationRecord<'a> {
    #[serde(default)]
    id: Option<String>,
    /// Kept raw so property declaration order survives into the tool set.
    #[serde(borrow)]
    tools: &'a RawValue,
    turns: Vec<Turn>,
}

#[derive(Deserialize)]
struct Turn {
    role: String,
    content: String,
}

/// Counters for everything that happened during explosion. The per-sample
/// funnel starts at `samples`; the `skipped_*` counters are pre-funnel.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ExplodeStats {
    pub conversations: u64,
    pub malformed_records: u64,
    pub tool_load_failures: u64,
    pub samples: u64,
    pub skipped_no_user_context: u64,
    pub skipped_unparseable_ground_truth: u64,
    pub skipped_empty_ground_truth: u64,
}

#[derive(Debug, Default)]
pub struct ExplodeOutcome {
    pub samples: Vec<Sample>,
    pub stats: ExplodeStats,
    /// One line per skipped record or turn, for operator logs.
    pub issues: Vec<String>,
}

/// Explodes a conversation corpus into single-turn samples.
pub fn explode_conversations(corpus_jsonl: &str, context: ContextMode) -> ExplodeOutcome {
    let mut outcome = ExplodeOutcome::default();
    for (line_index, line) in corpus_jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        outcome.stats.conversations += 1;
        let record: ConversationRecord = match serde_json::from_str(line) {
            Ok(record) => record,
            Err(e) => {
                outcome.stats.malformed_records += 1;
                outcome.issues.push(format!("line {}: malformed record: {e}", line_index + 1));
                continue;
            }
        };
        let conversation_id =
            record.id.unwrap_or_else(|| format!("line{:06}", line_index + 1));
        let tools = match load_tools(record.tools.get()) {
            Ok(loaded) => {
                for warning in &loaded.warnings {
                    outcome.issues.push(format!(
                        "{conversation_id}: tool `{}` field `{}`: {}",
                        warning.tool, warning.field, warning.message
                    ));
                }
                loaded.tools
            }
            Err(e) => {
                outcome.stats.tool_load_failures += 1;
                outcome.issues.push(format!("{conversation_id}: tool document rejected: {e}"));
                continue;
            }
        };

        for (turn_index, turn) in record.turns.iter().enumerate() {
            if turn.role != "assistant" {
                continue;
            }
            let query = match context {
                ContextMode::LastUser => match turn_index.checked_sub(1).map(|i| &record.turns[i])
                {
                    Some(prev) if prev.role == "user" => Some(prev.content.clone()),
                    _ => None,
                },
                ContextMode::AllPriorUser => {
                    let prior: Vec<&str> = record.turns[..turn_index]
                        .iter()
                        .filter(|t| t.role == "user")
                        .map(|t| t.content.as_str())
                        .collect();
                    if prior.is_empty() {
                        None
                    } else {
                        Some(prior.join("\n\n"))
                    }
                }
            };
            let Some(query) = query else {
                outcome.stats.skipped_no_user_context += 1;
                outcome.issues.push(format!(
                    "{conversation_id}#t{turn_index:02}: assistant turn without user context"
                ));
                continue;
            };
            let raw = turn.content.trim().to_string();
            let ground_truth = match parse_call_list(&raw) {
                Ok(list) => list,
                Err(e) => {
                    outcome.stats.skipped_unparseable_ground_truth += 1;
                    outcome.issues.push(format!(
                        "{conversation_id}#t{turn_index:02}: ground truth failed to parse: {e}"
                    ));
                    continue;
                }
            };
            if ground_truth.is_empty() {
                outcome.stats.skipped_empty_ground_truth += 1;
                outcome.issues.push(format!(
                    "{conversation_id}#t{turn_index:02}: empty ground-truth call list"
                ));
                continue;
            }
            outcome.stats.samples += 1;
            outcome.samples.push(Sample {
                id: format!("{conversation_id}#t{turn_index:02}"),
                query,
                tools: tools.clone(),
                ground_truth,
                raw_ground_truth: raw,
            });
        }
    }
    outcome
}
