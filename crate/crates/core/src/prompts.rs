//! Builders for the three construction-stage prompts and the emitted training
//! record.
//!
//! The scaffold texts below are pinned byte-for-byte; placeholder substitution
//! is the only transformation applied when building messages. Golden-file
//! tests hold the rendered forms stable. The tool JSON block is produced by
//! [`crate::tools::tools_prompt_json`] with a fixed key order so rendered
//! prompts are reproducible (replay fingerprints depend on them).

use alloc::string::{String, ToString};
use alloc::vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::grammar::render_call_list;
use crate::sample::{ReasoningChain, Sample};
use crate::templates::{Message, Messages, Template};
use crate::tools::tools_prompt_json;

const STAGE1_SYSTEM: &str = r#"You are an expert in composing functions. You are given a question, a set of possible functions and the ground truth function call(s). Based on the question and the ground truth function call(s), you will need to generate the analysis and thought following the given curriculum steps by steps, however, you must pretend that you do not know the ground truth information and assumptions.
If none of the function can be used, point it out. If the given question lacks the parameters required by the function, also point it out.

Here is a list of functions in JSON format that you can invoke.

{FUNCTIONS HERE}

When composing your analysis, you SHOULD follow this curriculum to have a correct function calling and put your analysis followed this curriculum in <THINKING></THINKING> tags.

{GUIDED-TEMPLATE HERE}

The output format of all user requests are:
<THINKING>[Put your thought based on the curriculum step by step here]</THINKING>"#;

const STAGE1_USER: &str = r#"User request: {user request}

Ground truth function calling(s):{GROUND TRUTH}"#;

const STAGE2_SYSTEM: &str = r#"You are an expert in composing functions. You are given a question, a set of possible functions and an analysis to come up with correct function calling(s). Based on the question and provided thinking process, you will need to make one or more function/tool calls to achieve the purpose.
You should only return the function call in tools call sections.
If you decide to invoke any of the function(s), you MUST put it in the format of Put it in the format of [func1(params_name=params_value, params_name2=params_value2...), func2(params)] in <FUNCTION></FUNCTION> tags

Here is a list of functions in JSON format that you can invoke.

{FUNCTIONS HERE}

The output format of all user requests are:

<FUNCTION>[Put function callings (if any) here]</FUNCTION>"#;

const STAGE2_USER: &str = r#"User request: {user request}

Given Thinking Process or Analysis:{ROUND 1 THINKING}"#;

const STAGE3_SYSTEM: &str = r#"You are an expert in composing functions. You are given a question, a set of possible functions and the ground truth function call(s), and a candidate for the correct function call. Based on the question and the ground truth function call(s), you will need to identify if the provided candidate is also a correct alternative function calling to the ground truth function callings to the question and provided functions. You must pay attention to the functions and parameters were used, if the candidate provide different numbers of functions from the ground truth, it is totally incorrect

Here is a list of functions in JSON format that you can invoke.

{FUNCTIONS HERE}

You must only output one of the two label

['CAN REPLACE GROUND TRUTH','TOTALLY INCORRECT'].

The output format of all user requests are: [PUT YOUR LABEL ONLY HERE]"#;

const STAGE3_USER: &str = r#"User request: {user request}

Ground Truth Function Calling:{GROUND TRUTH}

Candidate Function Calling: {MODEL FUNCTION CALL FROM ROUND 2}"#;

const TRAINING_SYSTEM: &str = r#"You are an expert in composing functions. You are given a question and a set of possible functions.

Based on the question, you will need to make one or more function/tool calls to achieve the purpose.

If none of the function can be used, point it out. If the given question lacks the parameters required by the function, also point it out. You should only return the function call in tools call sections.

Here is a list of functions in JSON format that you can invoke

{FUNCTIONS HERE}

Should you decide to return the function call(s).

Put it in the format of [func1(params_name=params_value, params_name2=params_value2...), func2(params)]

NO other text MUST be included."#;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromptError {
    MissingField(&'static str),
}

impl fmt::Display for PromptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PromptError::MissingField(name) => write!(f, "missing field `{name}`"),
        }
    }
}

impl core::error::Error for PromptError {}

/// Builds the reasoning-generation prompt: the query, the tool JSON, the
/// ground truth, and the guided template, asking for analysis in
/// `<THINKING></THINKING>` tags.
pub fn build_stage1(sample: &Sample, template: &Template) -> Result<Messages, PromptError> {
    ensure(!sample.query.is_empty(), "query")?;
    ensure(!sample.tools.is_empty(), "tools")?;
    ensure(!sample.ground_truth.is_empty(), "ground truth")?;
    let system = STAGE1_SYSTEM
        .replace("{FUNCTIONS HERE}", &tools_prompt_json(&sample.tools))
        .replace("{GUIDED-TEMPLATE HERE}", &template.body);
    let user = STAGE1_USER
        .replace("{user request}", &sample.query)
        .replace("{GROUND TRUTH}", &sample.canonical_ground_truth());
    Ok(vec![Message::system(system), Message::user(user)])
}

/// Builds the call-generation prompt: query, tools, and the stage-1 reasoning.
/// Neither the template nor the ground truth is included.
pub fn build_stage2(sample: &Sample, reasoning: &str) -> Result<Messages, PromptError> {
    ensure(!sample.query.is_empty(), "query")?;
    ensure(!sample.tools.is_empty(), "tools")?;
    ensure(!reasoning.is_empty(), "reasoning")?;
    let system = STAGE2_SYSTEM.replace("{FUNCTIONS HERE}", &tools_prompt_json(&sample.tools));
    let user = STAGE2_USER
        .replace("{user request}", &sample.query)
        .replace("{ROUND 1 THINKING}", reasoning);
    Ok(vec![Message::system(system), Message::user(user)])
}

/// Builds the judge prompt comparing the ground truth against the stage-2
/// candidate; the model must answer with one of the two labels.
pub fn build_stage3(sample: &Sample, candidate: &str) -> Result<Messages, PromptError> {
    ensure(!sample.query.is_empty(), "query")?;
    ensure(!sample.tools.is_empty(), "tools")?;
    ensure(!sample.ground_truth.is_empty(), "ground truth")?;
    ensure(!candidate.is_empty(), "candidate")?;
    let system = STAGE3_SYSTEM.replace("{FUNCTIONS HERE}", &tools_prompt_json(&sample.tools));
    let user = STAGE3_USER
        .replace("{user request}", &sample.query)
        .replace("{GROUND TRUTH}", &sample.canonical_ground_truth())
        .replace("{MODEL FUNCTION CALL FROM ROUND 2}", candidate);
    Ok(vec![Message::system(system), Message::user(user)])
}

/// Whether the emitted record supervises the reasoning chain alongside the
/// call list or the bare call list only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordMode {
    #[serde(rename = "with-thought")]
    WithThought,
    #[serde(rename = "no-thought")]
    NoThought,
}

impl fmt::Display for RecordMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordMode::WithThought => "with-thought",
            RecordMode::NoThought => "no-thought",
        })
    }
}

/// One emitted fine-tuning record: system/user/assistant messages plus
/// provenance fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub messages: Messages,
    pub template_id: String,
    pub sample_id: String,
    pub mode: RecordMode,
}

/// Renders the training record for a kept sample. The assistant message is
/// `<THINKING>r</THINKING>\n<FUNCTION>y</FUNCTION>` in with-thought mode and
/// the canonical call list alone in no-thought mode; supervision always
/// targets the ground truth.
pub fn render_training_record(
    sample: &Sample,
    reasoning: Option<&ReasoningChain>,
    mode: RecordMode,
    template_id: &str,
) -> Result<TrainingRecord, PromptError> {
    ensure(!sample.query.is_empty(), "query")?;
    ensure(!sample.tools.is_empty(), "tools")?;
    ensure(!sample.ground_truth.is_empty(), "ground truth")?;
    let canonical = render_call_list(&sample.ground_truth);
    let assistant = match mode {
        RecordMode::WithThought => {
            let chain = reasoning.ok_or(PromptError::MissingField("reasoning"))?;
            ensure(!chain.text.is_empty(), "reasoning")?;
            alloc::format!("<THINKING>{}</THINKING>\n<FUNCTION>{}</FUNCTION>", chain.text, canonical)
        }
        RecordMode::NoThought => canonical,
    };
    let system = TRAINING_SYSTEM.replace("{FUNCTIONS HERE}", &tools_prompt_json(&sample.tools));
    Ok(TrainingRecord {
        messages: vec![
            Message::system(system),
            Message::user(sample.query.clone()),
            Message::assistant(assistant),
        ],
        template_id: template_id.to_string(),
        sample_id: sample.id.clone(),
        mode,
    })
}

fn ensure(condition: bool, field: &'static str) -> Result<(), PromptError> {
    if condition {
        Ok(())
    } else {
        Err(PromptError::MissingField(field))
    }
}

/// Placeholder markers that must never survive into built prompts.
pub const PLACEHOLDER_MARKERS: &[&str] = &[
    "{FUNCTIONS HERE}",
    "{GUIDED-TEMPLATE HERE}",
    "{user request}",
    "{GROUND TRUTH}",
    "{ROUND 1 THINKING}",
    "{MODEL FUNCTION CALL FROM ROUND 2}",
];
