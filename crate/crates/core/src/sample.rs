//! Single-turn sample and reasoning-chain types shared by the prompt builders
//! and the construction pipeline.

use alloc::string::String;

use crate::grammar::{render_call_list, CallList};
use crate::tools::ToolSet;

/// One single-turn instance: a user query, the tools available to it, and the
/// ground-truth call list (kept both parsed and in its original text form).
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub query: String,
    pub tools: ToolSet,
    pub ground_truth: CallList,
    /// Original text form of the ground truth, used for exact-match checks.
    pub raw_ground_truth: String,
}

impl Sample {
    /// Canonical rendering of the ground truth; this is what prompts and
    /// training records embed.
    pub fn canonical_ground_truth(&self) -> String {
        render_call_list(&self.ground_truth)
    }
}

/// A generated structured reasoning chain and its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReasoningChain {
    pub text: String,
    pub template_id: String,
    pub model_id: String,
}
