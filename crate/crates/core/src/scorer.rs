//! Benchmark scoring: per-case correctness via the AST check, and suite
//! aggregation into per-category accuracies, a count-weighted average,
//! config-declared group averages, a grouped overall (unweighted mean of group
//! averages), and an unweighted average (simple mean over categories).
//!
//! Category counts always come from the suite config, never from the results
//! present: missing cases score as incorrect rather than shrinking the
//! denominator, so partial runs cannot silently inflate accuracy.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::equivalence::{ast_equivalent, MatchPolicy};
use crate::grammar::{extract_tagged, parse_call_list, CallList};
use crate::tools::ToolSet;

/// What a case tests: which call is made, or whether the model correctly
/// engages/abstains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseKind {
    #[serde(rename = "call")]
    Call,
    #[serde(rename = "relevance-expect-call")]
    RelevanceExpectCall,
    #[serde(rename = "relevance-expect-no-call")]
    RelevanceExpectNoCall,
}

/// One evaluation case: gold is present for `Call` kinds; relevance kinds only
/// check whether a call was produced at all.
#[derive(Debug, Clone)]
pub struct EvalCase {
    pub id: String,
    pub category: String,
    pub kind: CaseKind,
    pub tools: ToolSet,
    pub gold: Option<CallList>,
    pub model_output: String,
}

/// Scores one case. For call cases the `FUNCTION` section is extracted when
/// present (otherwise the whole output is treated as the expression), parsed,
/// and AST-compared against gold; unparseable output scores incorrect. For
/// relevance cases correctness is about whether a non-empty call list parses.
pub fn score_case(case: &EvalCase, policy: &MatchPolicy) -> bool {
    let trimmed = case.model_output.trim();
    let expression = extract_tagged(&case.model_output, "FUNCTION")
        .map(|section| section.content)
        .unwrap_or(trimmed);
    let parsed = parse_call_list(expression).ok();
    match case.kind {
        CaseKind::Call => match (&case.gold, parsed) {
            (Some(gold), Some(candidate)) => {
                ast_equivalent(gold, &candidate, &case.tools, policy).is_match()
            }
            _ => false,
        },
        CaseKind::RelevanceExpectCall => parsed.is_some_and(|list| !list.is_empty()),
        CaseKind::RelevanceExpectNoCall => parsed.map(|list| list.is_empty()).unwrap_or(true),
    }
}

/// One scored case, ready for aggregation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub category: String,
    pub correct: bool,
}

/// Suite description: how many cases each category has and how categories are
/// grouped. Groups partition a subset of the categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite_id: String,
    pub counts: BTreeMap<String, u64>,
    #[serde(default)]
    pub groups: BTreeMap<String, Vec<String>>,
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        for (category, count) in &self.counts {
            if *count == 0 {
                return Err(ScoreError::ZeroCount(category.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for (group, members) in &self.groups {
            for member in members {
                if !self.counts.contains_key(member) {
                    return Err(ScoreError::UnknownGroupMember {
                        group: group.clone(),
                        category: member.clone(),
                    });
                }
                if !seen.insert(member.clone()) {
                    return Err(ScoreError::OverlappingGroups(member.clone()));
                }
            }
        }
        Ok(())
    }

    /// Restriction to a category subset; groups lose absent members and drop
    /// out entirely when emptied.
    pub fn subset(&self, keep: &BTreeSet<String>) -> SuiteConfig {
        let counts = self
            .counts
            .iter()
            .filter(|(category, _)| keep.contains(*category))
            .map(|(category, count)| (category.clone(), *count))
            .collect();
        let groups = self
            .groups
            .iter()
            .filter_map(|(group, members)| {
                let kept: Vec<String> =
                    members.iter().filter(|m| keep.contains(*m)).cloned().collect();
                if kept.is_empty() {
                    None
                } else {
                    Some((group.clone(), kept))
                }
            })
            .collect();
        SuiteConfig { suite_id: self.suite_id.clone(), counts, groups }
    }
}

/// Aggregated suite metrics; all values are percentages in [0, 100].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite_id: String,
    pub per_category: BTreeMap<String, f64>,
    pub weighted_average: f64,
    pub group_averages: BTreeMap<String, f64>,
    /// Unweighted mean of group averages; absent when no groups are declared.
    pub grouped_overall: Option<f64>,
    pub unweighted_average: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreError {
    UnknownCategory(String),
    ZeroCount(String),
    UnknownGroupMember { group: String, category: String },
    OverlappingGroups(String),
    /// More results were supplied for a category than its declared count.
    TooManyResults { category: String, count: u64, got: u64 },
    MissingAccuracy(String),
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreError::UnknownCategory(c) => write!(f, "category `{c}` is not in the suite config"),
            ScoreError::ZeroCount(c) => write!(f, "category `{c}` has a zero count"),
            ScoreError::UnknownGroupMember { group, category } => {
                write!(f, "group `{group}` names unknown category `{category}`")
            }
            ScoreError::OverlappingGroups(c) => {
                write!(f, "category `{c}` appears in more than one group")
            }
            ScoreError::TooManyResults { category, count, got } => write!(
                f,
                "category `{category}` declares {count} cases but {got} results were supplied"
            ),
            ScoreError::MissingAccuracy(c) => {
                write!(f, "no accuracy supplied for category `{c}`")
            }
        }
    }
}

impl core::error::Error for ScoreError {}

/// Aggregates per-case flags into a [`SuiteReport`]. Every result's category
/// must be declared in the config; categories with no results score zero.
pub fn aggregate(results: &[CaseResult], cfg: &SuiteConfig) -> Result<SuiteReport, ScoreError> {
    cfg.validate()?;
    let mut correct: BTreeMap<&str, u64> = BTreeMap::new();
    let mut supplied: BTreeMap<&str, u64> = BTreeMap::new();
    for result in results {
        if !cfg.counts.contains_key(&result.category) {
            return Err(ScoreError::UnknownCategory(result.category.clone()));
        }
        *supplied.entry(result.category.as_str()).or_insert(0) += 1;
        if result.correct {
            *correct.entry(result.category.as_str()).or_insert(0) += 1;
        }
    }
    let mut accuracies = BTreeMap::new();
    for (category, count) in &cfg.counts {
        let got = supplied.get(category.as_str()).copied().unwrap_or(0);
        if got > *count {
            return Err(ScoreError::TooManyResults {
                category: category.clone(),
                count: *count,
                got,
            });
        }
        let right = correct.get(category.as_str()).copied().unwrap_or(0);
        accuracies.insert(category.clone(), right as f64 / *count as f64 * 100.0);
    }
    Ok(build_report(accuracies, cfg))
}

/// Aggregates directly from known per-category accuracies (percentages), for
/// recomputing published summary columns from breakdown tables. Every config
/// category must be supplied.
pub fn aggregate_accuracies(
    accuracies: &BTreeMap<String, f64>,
    cfg: &SuiteConfig,
) -> Result<SuiteReport, ScoreError> {
    cfg.validate()?;
    for category in accuracies.keys() {
        if !cfg.counts.contains_key(category) {
            return Err(ScoreError::UnknownCategory(category.clone()));
        }
    }
    let mut complete = BTreeMap::new();
    for category in cfg.counts.keys() {
        let value = accuracies
            .get(category)
            .copied()
            .ok_or_else(|| ScoreError::MissingAccuracy(category.clone()))?;
        complete.insert(category.clone(), value);
    }
    Ok(build_report(complete, cfg))
}

fn build_report(per_category: BTreeMap<String, f64>, cfg: &SuiteConfig) -> SuiteReport {
    let weighted_average = weighted_mean(
        per_category.iter().map(|(category, acc)| (*acc, cfg.counts[category])),
    );
    let unweighted_average = simple_mean(per_category.values().copied());

    let mut group_averages = BTreeMap::new();
    for (group, members) in &cfg.groups {
        let avg = weighted_mean(
            members.iter().map(|member| (per_category[member], cfg.counts[member])),
        );
        group_averages.insert(group.clone(), avg);
    }
    let grouped_overall = if group_averages.is_empty() {
        None
    } else {
        Some(simple_mean(group_averages.values().copied()))
    };

    SuiteReport {
        suite_id: cfg.suite_id.clone(),
        per_category,
        weighted_average,
        group_averages,
        grouped_overall,
        unweighted_average,
    }
}

fn weighted_mean(entries: impl Iterator<Item = (f64, u64)>) -> f64 {
    let mut numerator = 0.0;
    let mut denominator = 0u64;
    for (value, weight) in entries {
        numerator += value * weight as f64;
        denominator += weight;
    }
    if denominator == 0 {
        0.0
    } else {
        numerator / denominator as f64
    }
}

fn simple_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0u64;
    for value in values {
        sum += value;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Restricts results to the named categories, for subset analyses such as
/// excluding nested-call task families. Pair with [`SuiteConfig::subset`].
pub fn filter_subset(results: &[CaseResult], keep: &BTreeSet<String>) -> Vec<CaseResult> {
    results.iter().filter(|r| keep.contains(&r.category)).cloned().collect()
}
