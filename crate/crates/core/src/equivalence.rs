//! Exact-match and AST-based structural comparison between a candidate call
//! list and the ground truth.
//!
//! Exact match is plain trimmed string equality. The AST check tolerates what
//! string equality cannot: reordered arguments, reordered parallel calls, and
//! optional arguments present on one side only when the schema declares them
//! optional and the value equals the declared default (a permissive policy
//! flag relaxes the default requirement). The one-sided-argument rule is
//! applied in both directions, which keeps the relation symmetric.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::grammar::{parse_call_list, CallList, FunctionCall, Number, Value};
use crate::tools::ToolSet;

/// Knobs for under-specified parts of matching. Defaults are conservative:
/// tight numeric tolerance, case-sensitive strings, extras must equal their
/// declared default.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchPolicy {
    /// Absolute tolerance for mixed integer/float numeric comparison.
    /// Integer-vs-integer lexemes always compare exactly.
    pub numeric_tolerance: f64,
    pub case_insensitive_strings: bool,
    /// When set, a one-sided argument only needs to be schema-optional; its
    /// value no longer has to equal the declared default.
    pub permissive_optional_extras: bool,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        MatchPolicy {
            numeric_tolerance: 1e-9,
            case_insensitive_strings: false,
            permissive_optional_extras: false,
        }
    }
}

impl MatchPolicy {
    fn tolerance(&self) -> f64 {
        if self.numeric_tolerance >= 0.0 {
            self.numeric_tolerance
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchOutcome {
    ExactMatch,
    AstMatch,
    NoMatch,
}

impl fmt::Display for MatchOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchOutcome::ExactMatch => "ExactMatch",
            MatchOutcome::AstMatch => "AstMatch",
            MatchOutcome::NoMatch => "NoMatch",
        })
    }
}

/// Comparison verdict; `explanation` is non-empty exactly when the outcome is
/// [`MatchOutcome::NoMatch`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatchVerdict {
    pub outcome: MatchOutcome,
    pub explanation: Vec<String>,
}

impl MatchVerdict {
    fn matched(outcome: MatchOutcome) -> Self {
        MatchVerdict { outcome, explanation: Vec::new() }
    }

    fn no_match(mut explanation: Vec<String>) -> Self {
        if explanation.is_empty() {
            explanation.push(String::from("call lists are not equivalent"));
        }
        MatchVerdict { outcome: MatchOutcome::NoMatch, explanation }
    }

    pub fn is_match(&self) -> bool {
        self.outcome != MatchOutcome::NoMatch
    }
}

/// String-level exact match: identical after trimming leading and trailing
/// whitespace, no other normalization.
pub fn exact_match(gt: &str, cand: &str) -> bool {
    gt.trim() == cand.trim()
}

/// Policy-aware value equality without schema context. Nested calls compare
/// strictly (same name, same argument sets); schema-aware treatment of nested
/// calls happens inside [`ast_equivalent`].
pub fn value_equal(a: &Value, b: &Value, policy: &MatchPolicy) -> bool {
    value_equal_inner(a, b, policy, None)
}

fn value_equal_inner(a: &Value, b: &Value, policy: &MatchPolicy, tools: Option<&ToolSet>) -> bool {
    match (a, b) {
        (Value::Str(x), Value::Str(y)) => {
            if policy.case_insensitive_strings {
                x.eq_ignore_ascii_case(y)
            } else {
                x == y
            }
        }
        (Value::Number(x), Value::Number(y)) => numbers_equal(x, y, policy),
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Null, Value::Null) => true,
        (Value::List(xs), Value::List(ys)) => {
            xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| value_equal_inner(x, y, policy, tools))
        }
        (Value::Mapping(xs), Value::Mapping(ys)) => {
            // Key sets must coincide; entry order is not significant.
            xs.len() == ys.len()
                && xs.iter().all(|(k, x)| {
                    ys.iter()
                        .find(|(k2, _)| k == k2)
                        .is_some_and(|(_, y)| value_equal_inner(x, y, policy, tools))
                })
                && ys.iter().all(|(k, _)| xs.iter().any(|(k2, _)| k == k2))
        }
        (Value::Call(x), Value::Call(y)) => calls_equal_explain(x, y, policy, tools).is_ok(),
        _ => false,
    }
}

fn numbers_equal(a: &Number, b: &Number, policy: &MatchPolicy) -> bool {
    if a.lexeme() == b.lexeme() {
        return true;
    }
    if a.is_integer_lexeme() && b.is_integer_lexeme() {
        return integer_lexemes_equal(a.lexeme(), b.lexeme());
    }
    let (x, y) = (a.as_f64(), b.as_f64());
    if x.is_nan() || y.is_nan() {
        return false;
    }
    fabs(x - y) <= policy.tolerance()
}

/// Exact decimal comparison of integer lexemes, tolerant of sign and leading
/// zeros ("007" == "7", "-0" == "0"); never limited by machine width.
fn integer_lexemes_equal(a: &str, b: &str) -> bool {
    fn normalize(s: &str) -> (bool, &str) {
        let (negative, digits) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let digits = digits.trim_start_matches('0');
        if digits.is_empty() {
            (false, "0")
        } else {
            (negative, digits)
        }
    }
    normalize(a) == normalize(b)
}

fn fabs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}

/// Pairwise call equivalence under the policy and tool schema.
pub fn calls_equivalent(
    gt: &FunctionCall,
    cand: &FunctionCall,
    tools: &ToolSet,
    policy: &MatchPolicy,
) -> bool {
    calls_equal_explain(gt, cand, policy, Some(tools)).is_ok()
}

fn calls_equal_explain(
    a: &FunctionCall,
    b: &FunctionCall,
    policy: &MatchPolicy,
    tools: Option<&ToolSet>,
) -> Result<(), Vec<String>> {
    if a.name != b.name {
        return Err(vec![format!("function name mismatch: `{}` vs `{}`", a.name, b.name)]);
    }
    let mut reasons = Vec::new();
    for (key, value) in &a.args {
        match b.arg(key) {
            Some(other) => {
                if !value_equal_inner(value, other, policy, tools) {
                    reasons.push(format!("`{}`: argument `{key}` values differ", a.name));
                }
            }
            None => {
                if let Err(reason) = one_sided_ok(&a.name, key, value, policy, tools) {
                    reasons.push(reason);
                }
            }
        }
    }
    for (key, value) in &b.args {
        if a.arg(key).is_none() {
            if let Err(reason) = one_sided_ok(&a.name, key, value, policy, tools) {
                reasons.push(reason);
            }
        }
    }
    if reasons.is_empty() {
        Ok(())
    } else {
        Err(reasons)
    }
}

/// An argument present on one side only is acceptable when the schema declares
/// it optional and its value equals the declared default (always acceptable
/// value-wise under the permissive flag). This mirrors "does not affect the
/// execution": a defaulted optional behaves the same whether passed or not.
fn one_sided_ok(
    tool_name: &str,
    key: &str,
    value: &Value,
    policy: &MatchPolicy,
    tools: Option<&ToolSet>,
) -> Result<(), String> {
    let Some(tools) = tools else {
        return Err(format!(
            "`{tool_name}`: argument `{key}` is present on one side only (no schema context)"
        ));
    };
    let Some(tool) = tools.get(tool_name) else {
        return Err(format!(
            "unknown tool `{tool_name}`: cannot justify one-sided argument `{key}`"
        ));
    };
    let Some(param) = tool.param(key) else {
        return Err(format!("`{tool_name}`: one-sided argument `{key}` is not declared"));
    };
    if param.required {
        return Err(format!(
            "`{tool_name}`: required argument `{key}` is present on one side only"
        ));
    }
    if policy.permissive_optional_extras {
        return Ok(());
    }
    match &param.default {
        Some(default) if value_equal_inner(value, default, policy, Some(tools)) => Ok(()),
        Some(_) => Err(format!(
            "`{tool_name}`: optional argument `{key}` differs from its declared default"
        )),
        None => Err(format!(
            "`{tool_name}`: optional argument `{key}` has no declared default to compare against"
        )),
    }
}

/// Structural equivalence of two call lists: a perfect matching must exist
/// between ground-truth and candidate calls (call order ignored) under the
/// pairwise rule of [`calls_equivalent`]. Differing call counts never match.
pub fn ast_equivalent(
    gt: &CallList,
    cand: &CallList,
    tools: &ToolSet,
    policy: &MatchPolicy,
) -> MatchVerdict {
    if gt.len() != cand.len() {
        return MatchVerdict::no_match(vec![format!(
            "call count mismatch: expected {}, got {}",
            gt.len(),
            cand.len()
        )]);
    }
    let n = gt.len();
    if n == 0 {
        return MatchVerdict::matched(MatchOutcome::AstMatch);
    }

    let mut adjacency = vec![Vec::new(); n];
    let mut reason_table: Vec<Vec<Vec<String>>> = Vec::with_capacity(n);
    for (i, gt_call) in gt.calls.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for (j, cand_call) in cand.calls.iter().enumerate() {
            match calls_equal_explain(gt_call, cand_call, policy, Some(tools)) {
                Ok(()) => {
                    adjacency[i].push(j);
                    row.push(Vec::new());
                }
                Err(reasons) => row.push(reasons),
            }
        }
        reason_table.push(row);
    }

    if perfect_matching(&adjacency, n) {
        return MatchVerdict::matched(MatchOutcome::AstMatch);
    }

    let mut explanation = Vec::new();
    for (i, gt_call) in gt.calls.iter().enumerate() {
        if adjacency[i].is_empty() {
            let mut detail = format!("no candidate call matches `{}`", gt_call.name);
            if let Some(reasons) = reason_table[i].iter().find(|r| !r.is_empty()) {
                detail.push_str(": ");
                detail.push_str(&reasons.join("; "));
            }
            explanation.push(detail);
        }
    }
    if explanation.is_empty() {
        explanation.push(String::from(
            "candidate calls cannot be assigned one-to-one to ground-truth calls",
        ));
    }
    MatchVerdict::no_match(explanation)
}

/// Augmenting-path bipartite matching over the precomputed adjacency.
fn perfect_matching(adjacency: &[Vec<usize>], n: usize) -> bool {
    fn augment(
        i: usize,
        adjacency: &[Vec<usize>],
        visited: &mut [bool],
        matched_to: &mut [Option<usize>],
    ) -> bool {
        for &j in &adjacency[i] {
            if visited[j] {
                continue;
            }
            visited[j] = true;
            match matched_to[j] {
                None => {
                    matched_to[j] = Some(i);
                    return true;
                }
                Some(other) => {
                    if augment(other, adjacency, visited, matched_to) {
                        matched_to[j] = Some(i);
                        return true;
                    }
                }
            }
        }
        false
    }

    let mut matched_to: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut visited = vec![false; n];
        if !augment(i, adjacency, &mut visited, &mut matched_to) {
            return false;
        }
    }
    true
}

/// Full pair check used by verification flows: exact match on the raw texts
/// first, then parse and AST-compare. Parse failures are reported in the
/// explanation rather than raised.
pub fn verify_pair(
    gt_raw: &str,
    cand_raw: &str,
    tools: &ToolSet,
    policy: &MatchPolicy,
) -> MatchVerdict {
    if exact_match(gt_raw, cand_raw) {
        return MatchVerdict::matched(MatchOutcome::ExactMatch);
    }
    let gt = match parse_call_list(gt_raw) {
        Ok(list) => list,
        Err(e) => return MatchVerdict::no_match(vec![format!("ground truth failed to parse: {e}")]),
    };
    let cand = match parse_call_list(cand_raw) {
        Ok(list) => list,
        Err(e) => return MatchVerdict::no_match(vec![format!("candidate failed to parse: {e}")]),
    };
    ast_equivalent(&gt, &cand, tools, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tools::load_tools;

    fn fixture_tools() -> ToolSet {
        load_tools(
            r#"[
                {"name": "f", "description": "", "parameters": {"properties": {
                    "a": {"type": "integer", "description": ""},
                    "b": {"type": "integer", "description": ""},
                    "verbose": {"type": "boolean", "description": "", "default": false}
                }, "required": ["a"]}},
                {"name": "g", "description": "", "parameters": {"properties": {
                    "b": {"type": "integer", "description": ""},
                    "mode": {"type": "string", "description": "", "enum": ["fast", "slow"], "default": "fast"}
                }, "required": ["b"]}}
            ]"#,
        )
        .unwrap()
        .tools
    }

    fn parse(text: &str) -> CallList {
        parse_call_list(text).unwrap()
    }

    #[test]
    fn exact_match_trims_but_does_not_normalize() {
        assert!(exact_match("[f(a=1)]", "[f(a=1)]"));
        assert!(exact_match(" [f(a=1)] ", "[f(a=1)]"));
        assert!(!exact_match("[f(a=1, b=2)]", "[f(b=2, a=1)]"));
    }

    #[test]
    fn argument_order_is_ignored_by_ast() {
        let verdict = ast_equivalent(
            &parse("[f(a=1, b=2)]"),
            &parse("[f(b=2, a=1)]"),
            &fixture_tools(),
            &MatchPolicy::default(),
        );
        assert_eq!(verdict.outcome, MatchOutcome::AstMatch);
        assert!(verdict.explanation.is_empty());
    }

    #[test]
    fn optional_extra_at_default_matches() {
        let verdict = ast_equivalent(
            &parse("[f(a=1)]"),
            &parse("[f(a=1, verbose=False)]"),
            &fixture_tools(),
            &MatchPolicy::default(),
        );
        assert_eq!(verdict.outcome, MatchOutcome::AstMatch);
    }

    #[test]
    fn optional_extra_off_default_needs_permissive_flag() {
        let tools = fixture_tools();
        let gt = parse("[f(a=1)]");
        let cand = parse("[f(a=1, verbose=True)]");
        let strict = ast_equivalent(&gt, &cand, &tools, &MatchPolicy::default());
        assert_eq!(strict.outcome, MatchOutcome::NoMatch);
        assert!(strict.explanation[0].contains("verbose"), "{:?}", strict.explanation);

        let permissive =
            MatchPolicy { permissive_optional_extras: true, ..MatchPolicy::default() };
        assert_eq!(ast_equivalent(&gt, &cand, &tools, &permissive).outcome, MatchOutcome::AstMatch);
    }

    #[test]
    fn one_sided_rule_is_symmetric() {
        let tools = fixture_tools();
        let with_extra = parse("[f(a=1, verbose=False)]");
        let without = parse("[f(a=1)]");
        let policy = MatchPolicy::default();
        assert!(ast_equivalent(&with_extra, &without, &tools, &policy).is_match());
        assert!(ast_equivalent(&without, &with_extra, &tools, &policy).is_match());
    }

    #[test]
    fn call_order_is_ignored_and_values_are_not() {
        let tools = fixture_tools();
        let policy = MatchPolicy::default();
        assert!(ast_equivalent(
            &parse("[f(a=1), g(b=2)]"),
            &parse("[g(b=2), f(a=1)]"),
            &tools,
            &policy
        )
        .is_match());
        assert!(!ast_equivalent(&parse("[f(a=1)]"), &parse("[f(a=2)]"), &tools, &policy).is_match());
    }

    #[test]
    fn call_count_mismatch_never_matches() {
        let verdict = ast_equivalent(
            &parse("[f(a=1)]"),
            &parse("[f(a=1), g(b=2)]"),
            &fixture_tools(),
            &MatchPolicy::default(),
        );
        assert_eq!(verdict.outcome, MatchOutcome::NoMatch);
        assert!(verdict.explanation[0].contains("count"), "{:?}", verdict.explanation);
    }

    #[test]
    fn unknown_tool_blocks_one_sided_arguments_but_not_identity() {
        let tools = ToolSet::empty();
        let policy = MatchPolicy::default();
        // Identical calls on an unknown tool still match (reflexivity).
        let same = parse("[ghost(x=1)]");
        assert!(ast_equivalent(&same, &same.clone(), &tools, &policy).is_match());
        // A one-sided argument cannot be justified without the schema.
        let verdict =
            ast_equivalent(&parse("[ghost(x=1)]"), &parse("[ghost(x=1, y=2)]"), &tools, &policy);
        assert_eq!(verdict.outcome, MatchOutcome::NoMatch);
        assert!(verdict.explanation[0].contains("unknown tool"), "{:?}", verdict.explanation);
    }

    #[test]
    fn numeric_widening_and_tolerance() {
        let policy = MatchPolicy::default();
        assert!(value_equal(&Value::number("1"), &Value::number("1.0"), &policy));
        assert!(value_equal(&Value::number("007"), &Value::number("7"), &policy));
        assert!(value_equal(&Value::number("-0"), &Value::number("0"), &policy));
        assert!(!value_equal(&Value::number("1"), &Value::number("1.1"), &policy));
        // Exact decimal compare for integer lexemes, beyond f64 precision.
        assert!(!value_equal(
            &Value::number("9007199254740993"),
            &Value::number("9007199254740992"),
            &policy
        ));
        let loose = MatchPolicy { numeric_tolerance: 0.5, ..MatchPolicy::default() };
        assert!(value_equal(&Value::number("1.2"), &Value::number("1.5"), &loose));
    }

    #[test]
    fn string_case_flag() {
        let strict = MatchPolicy::default();
        let loose = MatchPolicy { case_insensitive_strings: true, ..MatchPolicy::default() };
        assert!(!value_equal(&Value::str("us"), &Value::str("US"), &strict));
        assert!(value_equal(&Value::str("us"), &Value::str("US"), &loose));
    }

    #[test]
    fn list_order_is_significant() {
        let policy = MatchPolicy::default();
        let a = Value::List(vec![Value::number("1"), Value::number("2")]);
        let b = Value::List(vec![Value::number("2"), Value::number("1")]);
        assert!(!value_equal(&a, &b, &policy));
        assert!(value_equal(&a, &a.clone(), &policy));
    }

    #[test]
    fn mapping_order_is_not_significant() {
        let policy = MatchPolicy::default();
        let a = Value::Mapping(vec![
            ("x".into(), Value::number("1")),
            ("y".into(), Value::number("2")),
        ]);
        let b = Value::Mapping(vec![
            ("y".into(), Value::number("2")),
            ("x".into(), Value::number("1")),
        ]);
        assert!(value_equal(&a, &b, &policy));
    }

    #[test]
    fn cross_variant_comparisons_are_false() {
        let policy = MatchPolicy::default();
        assert!(!value_equal(&Value::str("1"), &Value::number("1"), &policy));
        assert!(!value_equal(&Value::Bool(true), &Value::number("1"), &policy));
        assert!(!value_equal(&Value::Null, &Value::str(""), &policy));
    }

    #[test]
    fn verify_pair_covers_all_outcomes() {
        let tools = fixture_tools();
        let policy = MatchPolicy::default();
        assert_eq!(
            verify_pair("[f(a=1)]", " [f(a=1)] ", &tools, &policy).outcome,
            MatchOutcome::ExactMatch
        );
        assert_eq!(
            verify_pair("[f(a=1, b=2)]", "[f(b=2, a=1)]", &tools, &policy).outcome,
            MatchOutcome::AstMatch
        );
        let bad = verify_pair("[f(a=1)]", "not a call", &tools, &policy);
        assert_eq!(bad.outcome, MatchOutcome::NoMatch);
        assert!(bad.explanation[0].contains("candidate failed to parse"));
    }
}
