use super::*;
use crate::llm::ScriptedBackend;
use crate::testutil::registry;

fn call(tool: &str, args: &[(&str, &str)]) -> String {
    ToolCall::new(tool, args.iter().copied()).to_block()
}

fn doha_script(session: &str, answer: &str) -> ScriptedBackend {
    ScriptedBackend::new().with(Purpose::Route, session, vec!["numerical".into()]).with(
        Purpose::Step,
        session,
        vec![
            call("get_coordinates", &[("place", "Doha")]),
            call("rain_inquiry", &[("lat", "25.2854"), ("lon", "51.531"), ("date", "2023-04-15")]),
            answer.into(),
        ],
    )
}

fn config(session: &str) -> AgentConfig {
    AgentConfig { session: session.into(), ..AgentConfig::default() }
}

#[test]
fn grounded_three_step_run() {
    let reg = registry();
    let backend = doha_script("s1", "Doha received 12.0 mm of rain on 2023-04-15 [step 2].");
    let run = Agent::new(&reg, &backend, config("s1")).run("How much rain fell in Doha on 2023-04-15?").unwrap();
    assert_eq!(run.trajectory.steps.len(), 3);
    assert!(run.trajectory.is_well_formed());
    assert_eq!(run.trajectory.termination, Termination::FinalAnswer);
    assert!(run.answer.complete);
    assert!(run.answer.ungrounded_numbers.is_empty(), "{:?}", run.answer.ungrounded_numbers);
    assert_eq!(run.answer.citations, vec![2]);
    assert!(!run.answer.flagged());
    // get_coordinates is geospatial, which numerical routing includes.
    assert_eq!(run.trajectory.routing_misses(), 0);
}

#[test]
fn ungrounded_number_is_flagged() {
    let reg = registry();
    let backend = doha_script("s2", "Doha received 99.9 mm of rain [step 2].");
    let run = Agent::new(&reg, &backend, config("s2")).run("Rain in Doha on 2023-04-15?").unwrap();
    assert_eq!(run.answer.ungrounded_numbers, vec!["99.9".to_string()]);
    assert!(run.answer.flagged());
}

#[test]
fn budget_one_is_incomplete() {
    let reg = registry();
    let backend = doha_script("s3", "12.0 mm");
    let cfg = AgentConfig { budget: 1, ..config("s3") };
    let run = Agent::new(&reg, &backend, cfg).run("Rain in Doha?").unwrap();
    assert_eq!(run.trajectory.calls().count(), 1);
    assert!(!run.answer.complete);
    assert!(run.answer.flagged());
    assert!(run.trajectory.final_answer().is_none());
    // Unscripted synthesis falls back to a listing of what was gathered.
    assert!(run.answer.text.contains("[step 1]"), "{}", run.answer.text);
}

#[test]
fn malformed_then_corrected() {
    let reg = registry();
    let backend = ScriptedBackend::new().with(
        Purpose::Step,
        "s4",
        vec![
            "```tool_call\n{\"tool\": \"rain_inquiry\", \"args\": {\"lat\": 25.2}\n```".into(),
            call("rain_inquiry", &[("lat", "25.2854"), ("lon", "51.531"), ("date", "2023-04-15")]),
            "It rained 12.0 mm [step 2].".into(),
        ],
    );
    let run = Agent::new(&reg, &backend, config("s4")).run("Rain in Doha on 2023-04-15?").unwrap();
    assert!(matches!(run.trajectory.steps[0].action, Action::Malformed { .. }));
    assert_eq!(run.trajectory.steps[0].observation.as_ref().unwrap().failure_code(), Some(FailureCode::FormatError));
    assert!(run.answer.complete);
    assert!(run.answer.ungrounded_numbers.is_empty());
    // Routing was unavailable, so nothing counts as a miss.
    assert_eq!(run.trajectory.intent, Intent::fallback());
}

#[test]
fn two_consecutive_failures_stop_the_loop() {
    let reg = registry();
    let backend = ScriptedBackend::new().with(
        Purpose::Step,
        "s5",
        vec![call("fly_to_mars", &[]), call("rain_inquiry", &[("lat", "north")]), "never reached".into()],
    );
    let run = Agent::new(&reg, &backend, config("s5")).run("Rain?").unwrap();
    assert_eq!(run.trajectory.termination, Termination::RepeatedFailures);
    assert_eq!(run.trajectory.steps.len(), 2);
    assert!(!run.answer.complete);
}

#[test]
fn routed_out_call_still_runs() {
    let reg = registry();
    let backend = ScriptedBackend::new().with(Purpose::Route, "s6", vec!["textual".into()]).with(
        Purpose::Step,
        "s6",
        vec![call("rain_inquiry", &[("lat", "25.2854"), ("lon", "51.531"), ("date", "2023-04-15")]), "12.0 mm".into()],
    );
    let run = Agent::new(&reg, &backend, config("s6")).run("Rain policy news?").unwrap();
    assert!(run.trajectory.steps[0].routing_miss);
    assert!(run.trajectory.steps[0].observation.as_ref().unwrap().is_ok());
}

#[test]
fn charts_from_series() {
    let reg = registry();
    let backend = ScriptedBackend::new().with(
        Purpose::Step,
        "s7",
        vec![
            call("get_coordinates", &[("place", "Doha")]),
            call("temperature_series", &[("lat", "25.2854"), ("lon", "51.531")]),
            "Temperatures rose from 30 to 34 °C [step 2].".into(),
        ],
    );
    let cfg = AgentConfig { emit_charts: true, ..config("s7") };
    let run = Agent::new(&reg, &backend, cfg).run("Temperature trend in Doha").unwrap();
    assert_eq!(run.answer.charts.len(), 1);
    let meta = &run.answer.charts[0].metadata;
    assert_eq!(meta.city, "Doha");
    assert_eq!(meta.variable, "temperature");
    assert!((meta.slope_per_day - 1.0).abs() < 1e-9);
    assert!(run.answer.ungrounded_numbers.is_empty());
}

#[test]
fn errors_and_truncation() {
    let reg = registry();
    let backend = ScriptedBackend::new();
    let zero = AgentConfig { budget: 0, ..config("x") };
    assert!(matches!(Agent::new(&reg, &backend, zero).run("q"), Err(AgentError::ZeroBudget)));
    assert!(matches!(Agent::new(&reg, &backend, config("x")).run("q"), Err(AgentError::EmptyTrajectory(_))));
    assert_eq!(truncate_observation("abcdef", 10), "abcdef");
    assert_eq!(truncate_observation("abcdef", 4), "abcd[truncated 2 bytes]");
    assert_eq!(truncate_observation("é", 1), "[truncated 2 bytes]");
}

#[test]
fn deterministic_trajectories() {
    let reg = registry();
    let runs: Vec<String> = (0..3)
        .map(|_| {
            let backend = doha_script("d", "Doha received 12.0 mm [step 2].");
            serde_json::to_string(&Agent::new(&reg, &backend, config("d")).run("Rain in Doha?").unwrap()).unwrap()
        })
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
}
