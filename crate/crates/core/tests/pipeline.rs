//! Agent and harness runs against the bundled fixture world.

use std::path::PathBuf;
use std::sync::Arc;

use gulfclim::agent::{Agent, AgentConfig, Termination};
use gulfclim::eval::{evaluate, load_instances, EvalOptions};
use gulfclim::llm::ScriptedBackend;
use gulfclim::toolkit::{ToolManifest, ToolRegistry};
use gulfclim::tools::{build_registry, AnalysisConfig, FixtureProvider, FixtureSearch, ToolContext};
use gulfclim::UnitTable;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn setup(replay: &str) -> (Arc<ScriptedBackend>, ToolRegistry) {
    let backend = Arc::new(ScriptedBackend::load(&fixtures().join(replay)).unwrap());
    let root = fixtures().join("providers");
    let ctx = ToolContext {
        provider: Arc::new(FixtureProvider::load(&root).unwrap()),
        search: Arc::new(FixtureSearch::load(&root).unwrap()),
        backend: backend.clone(),
        config: AnalysisConfig::default(),
        units: Arc::new(UnitTable::builtin().clone()),
    };
    let registry = build_registry(&ToolManifest::builtin(), &ctx).unwrap();
    (backend, registry)
}

#[test]
fn rain_question_is_answered_and_grounded() {
    let (backend, registry) = setup("replays/doha_rain.json");
    let cfg = AgentConfig { session: "pipeline".into(), ..AgentConfig::default() };
    let run = Agent::new(&registry, backend.as_ref(), cfg).run("How much rain fell in Doha on 2023-04-15?").unwrap();
    assert_eq!(run.trajectory.termination, Termination::FinalAnswer);
    assert_eq!(run.trajectory.calls().count(), 2);
    assert!(run.answer.text.contains("12.0 mm"));
    assert!(run.answer.ungrounded_numbers.is_empty());
    assert!(!run.answer.flagged());
    assert_eq!(run.answer.citations, vec![2]);
}

#[test]
fn probe_answer_is_flagged() {
    let (backend, registry) = setup("replays/ungrounded_probe.json");
    let run = Agent::new(&registry, backend.as_ref(), AgentConfig::default())
        .run("How much rain fell in Doha on 2023-04-15?")
        .unwrap();
    assert_eq!(run.answer.ungrounded_numbers, vec!["99.9".to_string()]);
    assert!(run.answer.flagged());
}

#[test]
fn gold_suite_scores_full_marks() {
    let (backend, registry) = setup("bench/replay_gold.json");
    let suite = load_instances(&fixtures().join("bench/suite.jsonl")).unwrap();
    let opts = EvalOptions { images: true, ..EvalOptions::default() };
    let report = evaluate(&suite, &registry, backend.as_ref(), &opts);
    for v in [report.inst_acc, report.tool_acc, report.arg_acc, report.summ_acc, report.ans_acc, report.ans_acc_i] {
        assert_eq!(v, Some(100.0));
    }
}

#[test]
fn corrupt_replay_loses_points() {
    let (backend, registry) = setup("bench/replay_corrupt.json");
    let suite = load_instances(&fixtures().join("bench/suite.jsonl")).unwrap();
    let report = evaluate(&suite, &registry, backend.as_ref(), &EvalOptions::default());
    assert!(report.tool_acc.unwrap() < 100.0);
    assert!(report.arg_acc.unwrap() < 100.0);
    assert!(report.inst_acc.unwrap() < 100.0);
    let rates = report.error_rates.unwrap();
    assert!(rates.format_pct > 0.0 && rates.arg_pct > 0.0 && rates.na_pct > 0.0);
}
