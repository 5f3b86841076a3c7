//! Parsing of judge labels out of verification-stage model output.

use alloc::string::{String, ToString};
use core::fmt;

use serde::{Deserialize, Serialize};

pub const CAN_REPLACE_LABEL: &str = "CAN REPLACE GROUND TRUTH";
pub const TOTALLY_INCORRECT_LABEL: &str = "TOTALLY INCORRECT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeLabel {
    CanReplace,
    TotallyIncorrect,
    /// Neither label found, or both: ambiguous output never admits a sample.
    Unparseable,
}

impl fmt::Display for JudgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JudgeLabel::CanReplace => "can_replace",
            JudgeLabel::TotallyIncorrect => "totally_incorrect",
            JudgeLabel::Unparseable => "unparseable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeVerdict {
    pub label: JudgeLabel,
    pub raw: String,
}

/// Case-sensitive substring search for the two labels; exactly one present
/// yields that label, zero or both yield `Unparseable`.
pub fn parse_judge_label(text: &str) -> JudgeVerdict {
    let can_replace = text.contains(CAN_REPLACE_LABEL);
    let incorrect = text.contains(TOTALLY_INCORRECT_LABEL);
    let label = match (can_replace, incorrect) {
        (true, false) => JudgeLabel::CanReplace,
        (false, true) => JudgeLabel::TotallyIncorrect,
        _ => JudgeLabel::Unparseable,
    };
    JudgeVerdict { label, raw: text.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracketed_label_parses() {
        assert_eq!(parse_judge_label("[CAN REPLACE GROUND TRUTH]").label, JudgeLabel::CanReplace);
    }

    #[test]
    fn bare_label_parses() {
        assert_eq!(parse_judge_label("TOTALLY INCORRECT").label, JudgeLabel::TotallyIncorrect);
    }

    #[test]
    fn both_labels_are_ambiguous() {
        let text = "CAN REPLACE GROUND TRUTH or TOTALLY INCORRECT, hard to say";
        assert_eq!(parse_judge_label(text).label, JudgeLabel::Unparseable);
    }

    #[test]
    fn neither_label_is_unparseable() {
        assert_eq!(parse_judge_label("looks fine to me").label, JudgeLabel::Unparseable);
    }

    #[test]
    fn search_is_case_sensitive() {
        assert_eq!(parse_judge_label("can replace ground truth").label, JudgeLabel::Unparseable);
    }
}
