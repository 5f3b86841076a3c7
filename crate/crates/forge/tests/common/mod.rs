//! Shared test support: the scripted fixture transport, fixture paths, and
//! the market-trends golden sample.
//!
//! Included by several test targets; not every target uses every item.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use toolforge::corpus::ContextMode;
use toolforge::gateway::{CompletionRequest, Transport, TransportError};
use toolforge::pipeline::PipelineConfig;
use toolforge_core::grammar::parse_call_list;
use toolforge_core::sample::Sample;
use toolforge_core::tools::load_tools;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture_corpus() -> String {
    std::fs::read_to_string(fixture_dir().join("pipeline/corpus.jsonl")).expect("fixture corpus")
}

pub fn fixture_cassette_path() -> PathBuf {
    fixture_dir().join("pipeline/cassette.json")
}

pub fn fixture_config(out_dir: &Path) -> PipelineConfig {
    let mut config = PipelineConfig::new(out_dir.join("dataset.jsonl"));
    config.template_id = String::from("detail");
    config.generation_model = String::from("gen-fixture");
    config.judge_model = String::from("judge-fixture");
    config.workers = 4;
    config.context = ContextMode::LastUser;
    config
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Reasoning,
    CallGeneration,
    Judge,
}

fn stage_of(request: &CompletionRequest) -> Stage {
    let system = &request.messages[0].content;
    if system.contains("generate the analysis and thought") {
        Stage::Reasoning
    } else if system.contains("a candidate for the correct function call") {
        Stage::Judge
    } else {
        Stage::CallGeneration
    }
}

/// Pulls the `sNN` marker out of the user message (`User request: sNN: ...`).
fn sample_marker(request: &CompletionRequest) -> String {
    let user = &request.messages[1].content;
    let after = user.split("User request: ").nth(1).unwrap_or(user);
    after.split(':').next().unwrap_or("").trim().to_string()
}

/// Deterministic stand-in for the model endpoints, answering the fixture
/// corpus: stage-1 reasoning for every sample (absent THINKING for s05),
/// scripted stage-2 candidates, and judge labels for the three judged
/// samples.
pub struct FixtureTransport;

impl Transport for FixtureTransport {
    fn send(&self, request: &CompletionRequest) -> Result<String, TransportError> {
        let marker = sample_marker(request);
        let response = match stage_of(request) {
            Stage::Reasoning => match marker.as_str() {
                "s05" => String::from("I cannot comply with that request."),
                m => format!(
                    "<THINKING>1. The documented tool fits the request for {m}.\n2. Parameters come directly from the query.</THINKING>"
                ),
            },
            Stage::CallGeneration => {
                let call = match marker.as_str() {
                    "s01" => "[f(a=1)]",
                    "s02" => "[f(verbose=True, a=2)]",
                    "s03" => "[g(b=3)]",
                    "s04" => "[g(b=99)]",
                    "s06" => "[f(a=6]",
                    "s07" => r#"[Market Trends API(trend_type="MARKET_INDEXES", country="us")]"#,
                    "s08" => r#"[g(b=8, mode="fast")]"#,
                    "s09" => "[g(b=9), f(a=9)]",
                    "s10" => r#"[Market Trends API(trend_type="gainers")]"#,
                    other => return Err(TransportError::Fatal(format!("unscripted sample {other}"))),
                };
                format!("<FUNCTION>{call}</FUNCTION>")
            }
            Stage::Judge => match marker.as_str() {
                "s03" | "s10" => String::from("[CAN REPLACE GROUND TRUTH]"),
                "s04" => String::from("[TOTALLY INCORRECT]"),
                other => return Err(TransportError::Fatal(format!("unscripted judge {other}"))),
            },
        };
        Ok(response)
    }
}

pub const MARKET_TOOL_JSON: &str = r#"[
    {
        "name": "Market Trends API",
        "description": "Get the latest market trends.",
        "parameters": {
            "type": "dict",
            "properties": {
                "trend_type": {"type": "string", "description": "Trend type to retrieve."},
                "country": {"type": "string", "description": "Country code.", "default": "us"},
                "language": {"type": "string", "description": "Language code.", "default": "en"}
            },
            "required": ["trend_type"]
        }
    }
]"#;

pub const MARKET_QUERY: &str = "I'm considering investing and I'd like to know what's happening in the market right now. Could you get me the top market trends in the US?";

pub const MARKET_CALL: &str = r#"[Market Trends API(trend_type="MARKET_INDEXES", country="us")]"#;

/// The golden fixture sample used by the prompt golden files.
pub fn market_sample() -> Sample {
    Sample {
        id: String::from("market-trends"),
        query: String::from(MARKET_QUERY),
        tools: load_tools(MARKET_TOOL_JSON).expect("market tool fixture").tools,
        ground_truth: parse_call_list(MARKET_CALL).expect("market call fixture"),
        raw_ground_truth: String::from(MARKET_CALL),
    }
}

pub const MARKET_REASONING: &str = "1. The user is looking for current market trends in the US; the Market Trends API is designed for exactly that.\n2. I will select the Market Trends API to fulfill the request.\n3. The documentation requires trend_type; country and language are optional with defaults.\n4. trend_type must be specified; country defaults to \"us\"; language defaults to \"en\".\n5. The user did not name a trend type, so the common MARKET_INDEXES category is the reasonable reading of \"top market trends\".\n6. Draft: Market Trends API(trend_type=\"MARKET_INDEXES\", country=\"us\").\n7. The draft satisfies the documentation and the user's query.";
