//! Regenerates the committed fixtures: the pipeline replay cassette and the
//! prompt golden files. Run explicitly after a deliberate change to prompt
//! scaffolds, template bodies, or the fixture corpus:
//!
//! ```text
//! cargo test -p toolforge --test fixtures_regen -- --ignored
//! ```
//!
//! Regenerated files must be reviewed and committed; every other test treats
//! them as ground truth.

mod common;

use std::fs;

use toolforge::gateway::{Gateway, GatewayConfig, RetryPolicy};
use toolforge::pipeline::run_pipeline;
use toolforge_core::prompts::{
    build_stage1, build_stage2, build_stage3, render_training_record, RecordMode,
};
use toolforge_core::sample::ReasoningChain;
use toolforge_core::templates::TemplateRegistry;

#[test]
#[ignore = "writes committed fixtures"]
fn regenerate_pipeline_cassette() {
    let cassette_path = common::fixture_cassette_path();
    if cassette_path.exists() {
        fs::remove_file(&cassette_path).unwrap();
    }
    let out_dir = tempfile::tempdir().unwrap();
    let config = common::fixture_config(out_dir.path());
    let gateway = Gateway::record(
        Box::new(common::FixtureTransport),
        &cassette_path,
        GatewayConfig { retry: RetryPolicy::immediate(), ..GatewayConfig::default() },
    )
    .unwrap();
    let registry = TemplateRegistry::builtin();
    let run = run_pipeline(&common::fixture_corpus(), &registry, &gateway, &config).unwrap();
    assert_eq!(run.stats.kept, 7, "fixture corpus must keep exactly 7 samples");
    assert!(run.stats.funnel_conserved());
    drop(gateway);
    assert!(cassette_path.exists());
    println!("cassette regenerated at {}", cassette_path.display());
}

#[test]
#[ignore = "writes committed fixtures"]
fn regenerate_prompt_goldens() {
    let sample = common::market_sample();
    let registry = TemplateRegistry::builtin();
    let template = registry.get("detail").unwrap();
    let chain = ReasoningChain {
        text: String::from(common::MARKET_REASONING),
        template_id: String::from("detail"),
        model_id: String::from("gen-fixture"),
    };

    let goldens = common::fixture_dir().join("goldens");
    fs::create_dir_all(&goldens).unwrap();
    fn write_golden(path: std::path::PathBuf, value: &impl serde::Serialize) {
        let mut text = serde_json::to_string_pretty(value).expect("serializable golden");
        text.push('\n');
        fs::write(path, text).unwrap();
    }

    write_golden(goldens.join("stage1.json"), &build_stage1(&sample, template).unwrap());
    write_golden(goldens.join("stage2.json"), &build_stage2(&sample, &chain.text).unwrap());
    write_golden(
        goldens.join("stage3.json"),
        &build_stage3(&sample, r#"[Market Trends API(country="us", trend_type="MARKET_INDEXES")]"#)
            .unwrap(),
    );
    write_golden(
        goldens.join("training_record.json"),
        &render_training_record(&sample, Some(&chain), RecordMode::WithThought, "detail").unwrap(),
    );
    println!("goldens regenerated under {}", goldens.display());
}
