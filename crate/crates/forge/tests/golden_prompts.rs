//! Byte-exact prompt fidelity against the committed golden files, plus the
//! pinned wording the stage prompts must carry.

mod common;

use std::fs;

use toolforge_core::prompts::{
    build_stage1, build_stage2, build_stage3, render_training_record, RecordMode,
};
use toolforge_core::sample::ReasoningChain;
use toolforge_core::templates::TemplateRegistry;

fn golden(name: &str) -> String {
    fs::read_to_string(common::fixture_dir().join("goldens").join(name)).expect("golden present")
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).unwrap();
    text.push('\n');
    text
}

fn chain() -> ReasoningChain {
    ReasoningChain {
        text: String::from(common::MARKET_REASONING),
        template_id: String::from("detail"),
        model_id: String::from("gen-fixture"),
    }
}

#[test]
fn stage1_prompt_matches_golden_bytes() {
    let sample = common::market_sample();
    let registry = TemplateRegistry::builtin();
    let messages = build_stage1(&sample, registry.get("detail").unwrap()).unwrap();
    assert_eq!(pretty(&messages), golden("stage1.json"));
}

#[test]
fn stage2_prompt_matches_golden_bytes() {
    let sample = common::market_sample();
    let messages = build_stage2(&sample, &chain().text).unwrap();
    assert_eq!(pretty(&messages), golden("stage2.json"));
}

#[test]
fn stage3_prompt_matches_golden_bytes() {
    let sample = common::market_sample();
    let messages = build_stage3(
        &sample,
        r#"[Market Trends API(country="us", trend_type="MARKET_INDEXES")]"#,
    )
    .unwrap();
    assert_eq!(pretty(&messages), golden("stage3.json"));
}

#[test]
fn training_record_matches_golden_bytes_and_appendix_call() {
    let sample = common::market_sample();
    let record =
        render_training_record(&sample, Some(&chain()), RecordMode::WithThought, "detail").unwrap();
    assert_eq!(pretty(&record), golden("training_record.json"));
    // The FUNCTION section reproduces the documented call expression exactly.
    let assistant = &record.messages[2].content;
    assert!(assistant.contains(&format!("<FUNCTION>{}</FUNCTION>", common::MARKET_CALL)));
}

#[test]
fn goldens_carry_the_pinned_wording() {
    let stage1 = golden("stage1.json");
    assert!(stage1.contains("pretend that you do not know the ground truth"));
    assert!(stage1.contains("<THINKING></THINKING>"));
    let stage2 = golden("stage2.json");
    assert!(stage2.contains("You should only return the function call in tools call sections."));
    let stage3 = golden("stage3.json");
    assert!(stage3.contains("CAN REPLACE GROUND TRUTH"));
    assert!(stage3.contains("'CAN REPLACE GROUND TRUTH','TOTALLY INCORRECT'"));
    assert!(stage3.contains(
        "if the candidate provide different numbers of functions from the ground truth, it is totally incorrect"
    ));
    let training = golden("training_record.json");
    assert!(training.contains("NO other text MUST be included."));
}
