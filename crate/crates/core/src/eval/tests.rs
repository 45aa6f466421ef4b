use super::*;
use crate::llm::{Purpose, ScriptedBackend};
use crate::testutil::registry;

fn fact(label: &str, value: Option<f64>) -> KeyFact {
    KeyFact { label: label.into(), value, text: None, tolerance: None }
}

fn instance(id: &str) -> BenchmarkInstance {
    let geo = GoldStep {
        tool: "get_coordinates".into(),
        arg_names: ["place".to_string()].into(),
        arg_values: [("place".to_string(), "Doha".to_string())].into(),
        summary_facts: vec![fact("Doha", None)],
    };
    let rain_args: BTreeMap<String, String> = [("lat", "25.2854"), ("lon", "51.531"), ("date", "2023-04-15")]
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .into();
    let rain = GoldStep {
        tool: "rain_inquiry".into(),
        arg_names: rain_args.keys().cloned().collect(),
        arg_values: rain_args,
        summary_facts: vec![fact("mm", Some(12.0))],
    };
    BenchmarkInstance {
        id: id.into(),
        query: "How much rain fell in Doha on 2023-04-15?".into(),
        allowed_tools: ["get_coordinates", "rain_inquiry", "temperature_series"].map(String::from).into(),
        gold_trace: vec![geo, rain],
        gold_answer: vec![fact("mm", Some(12.0))],
        requires_chart: false,
    }
}

fn summaries(b: ScriptedBackend) -> ScriptedBackend {
    b.with(Purpose::StepSummary, "*", vec!["Doha is at 25.2854, 51.531.".into(), "Rain was 12.0 mm.".into()])
}

fn gold_emissions(inst: &BenchmarkInstance) -> Vec<String> {
    let mut v: Vec<String> = inst.gold_trace.iter().map(|g| g.call().to_block()).collect();
    v.push("Doha received 12.0 mm [step 2].".into());
    v
}

fn step_only() -> EvalOptions {
    EvalOptions { e2e: false, ..EvalOptions::default() }
}

#[test]
fn perfect_suite_scores_100() {
    let reg = registry();
    let suite: Vec<_> = (1..=5).map(|i| instance(&format!("q{i}"))).collect();
    let mut b = ScriptedBackend::new();
    for inst in &suite {
        b = b.with(Purpose::Step, &inst.id, gold_emissions(inst));
    }
    let report = evaluate(&suite, &reg, &summaries(b), &EvalOptions::default());
    assert_eq!(report.steps, 10);
    for m in [report.inst_acc, report.tool_acc, report.arg_acc, report.summ_acc, report.ans_acc] {
        assert_eq!(m, Some(100.0));
    }
    assert_eq!(report.ans_acc_i, None);
    assert_eq!(report.error_rates, Some(ErrorRates::default()));
    let csv = render_csv(&report);
    assert!(csv.starts_with(CSV_HEADER));
    assert_eq!(csv.lines().count(), 1 + 10 + 5);
}

#[test]
fn one_wrong_tool_in_four_steps() {
    let reg = registry();
    let suite = vec![instance("a"), instance("b")];
    let mut wrong = gold_emissions(&suite[1]);
    wrong[1] = ToolCall::new("temperature_series", [("lat", "25.2854"), ("lon", "51.531")]).to_block();
    let b = ScriptedBackend::new().with(Purpose::Step, "a", gold_emissions(&suite[0])).with(Purpose::Step, "b", wrong);
    let report = evaluate(&suite, &reg, &summaries(b), &step_only());
    assert_eq!(report.tool_acc, Some(75.0));
    assert_eq!(report.inst_acc, Some(100.0));
    assert_eq!(report.arg_acc, Some(75.0));
}

#[test]
fn dropped_argument_and_prose() {
    let reg = registry();
    let inst = instance("c");
    let b = summaries(ScriptedBackend::new());
    let dropped = ToolCall::new("rain_inquiry", [("lat", "25.2854"), ("lon", "51.531")]).to_block();
    let s = score_emission(&inst, 1, &dropped, &reg, &b);
    assert!(s.inst && s.tool && !s.arg && !s.summ);
    assert_eq!(s.error, Some(ErrorClass::Arg));

    let s = score_emission(&inst, 1, "It probably rained a little.", &reg, &b);
    assert_eq!(s, StepScore { error: Some(ErrorClass::NotApplicable), ..StepScore::default() });

    let s = score_emission(&inst, 0, "```tool_call\n{\"tool\": \"get_coordinates\"\n```", &reg, &b);
    assert_eq!(s, StepScore { error: Some(ErrorClass::Format), ..StepScore::default() });

    let s = score_emission(&inst, 0, &ToolCall::new("teleport", [("place", "Doha")]).to_block(), &reg, &b);
    assert!(!s.inst && !s.tool);
    assert_eq!(s.error, Some(ErrorClass::Format));
}

#[test]
fn teacher_forcing_context_uses_real_observations() {
    let reg = registry();
    let inst = instance("d");
    let ctx = gold_context(&inst, 1, &reg);
    assert_eq!(ctx.len(), 4);
    assert!(ctx[0].content.contains("rain_inquiry"));
    assert!(ctx[3].content.contains("Doha") && ctx[3].content.contains("Observation [step 1]"));
}

#[test]
fn chart_requirement() {
    let reg = registry();
    let mut inst = instance("e");
    inst.requires_chart = true;
    inst.gold_answer = vec![fact("temperature", None)];
    let b = ScriptedBackend::new().with(
        Purpose::Step,
        "e",
        vec![
            ToolCall::new("temperature_series", [("lat", "25.2854"), ("lon", "51.531")]).to_block(),
            "The temperature rose [step 1].".into(),
        ],
    );
    let with =
        evaluate(&[inst.clone()], &reg, &b, &EvalOptions { step: false, images: true, ..EvalOptions::default() });
    assert_eq!((with.ans_acc, with.ans_acc_i), (Some(100.0), Some(100.0)));
    inst.gold_answer = vec![fact("heat", None)];
    let b2 = b.clone().with(Purpose::Step, "e", vec!["heat rose".into()]);
    let without = evaluate(&[inst], &reg, &b2, &EvalOptions { step: false, images: true, ..EvalOptions::default() });
    assert_eq!((without.ans_acc, without.ans_acc_i), (Some(100.0), Some(0.0)));
}

#[test]
fn loading_reports_line_numbers() {
    let good = serde_json::to_string(&instance("x")).unwrap();
    let text = format!("{good}\n\n{{not json\n");
    match parse_instances(&text) {
        Err(EvalError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let dup = format!("{good}\n{good}\n");
    assert!(matches!(parse_instances(&dup), Err(EvalError::DuplicateId(_))));
    assert!(matches!(parse_instances(""), Err(EvalError::Empty)));
    assert_eq!(parse_instances(&good).unwrap()[0], instance("x"));
}

#[test]
fn key_facts() {
    assert!(fact("rain", Some(12.0)).satisfied_by("Rain total was 12.0 mm on 2023-04-15"));
    assert!(!fact("rain", Some(12.0)).satisfied_by("Rain total was 15 mm"));
    assert!(!fact("rain", Some(2023.0)).satisfied_by("Rain on 2023-04-15"));
    let loose = KeyFact { tolerance: Some(0.5), ..fact("AQI", Some(87.0)) };
    assert!(loose.satisfied_by("AQI near 87.4"));
}
