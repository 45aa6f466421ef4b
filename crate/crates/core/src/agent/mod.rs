//! Tool-augmented question answering: route, act, observe, answer.
//!
//! The loop asks the backend for one emission per turn. A tool call is
//! validated and executed and its observation appended to the context; a
//! final answer ends the loop. Every number in the answer is checked against
//! what the tools actually returned.

mod grounding;
mod route;

use std::collections::BTreeSet;

use chrono::Duration;
use serde::{Deserialize, Serialize};

pub use grounding::{answer_numbers, cited_steps, harvest, numbers_in, NUMERIC_TOLERANCE};
pub use route::{route_intent, Intent, IntentLabel};

use crate::canon::{CanonicalRecord, CanonicalSeries};
use crate::geoforge::{build_chart, ChartArtifact, WindowSpec};
use crate::llm::{BackendError, ChatMessage, ChatRequest, LlmBackend, Purpose};
use crate::toolkit::{
    parse_call, render_tool_prompt_for, FailureCode, Observation, ParsedEmission, Payload, SeriesPoint, ToolCall,
    ToolFailure, ToolRegistry,
};

pub const DEFAULT_BUDGET: usize = 8;
pub const DEFAULT_OBSERVATION_CAP: usize = 4096;
/// Consecutive malformed or invalid calls tolerated before the loop gives up.
pub const MAX_CONSECUTIVE_FAILURES: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("tool-call budget must be at least 1")]
    ZeroBudget,
    #[error("query is empty")]
    EmptyQuery,
    #[error("trajectory has no steps: {0}")]
    EmptyTrajectory(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    /// Conversation key handed to the backend.
    pub session: String,
    pub budget: usize,
    /// Byte cap on each rendered observation fed back to the model.
    pub observation_cap: usize,
    pub emit_charts: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            session: "session".into(),
            budget: DEFAULT_BUDGET,
            observation_cap: DEFAULT_OBSERVATION_CAP,
            emit_charts: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Call {
        call: ToolCall,
    },
    FinalAnswer {
        text: String,
    },
    /// An emission that was neither a well-formed call nor a final answer.
    Malformed {
        raw: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// 1-based, as used in citations.
    pub index: usize,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Observation>,
    /// The called tool sits outside the routed categories.
    #[serde(default)]
    pub routing_miss: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    FinalAnswer,
    BudgetExhausted,
    RepeatedFailures,
    BackendFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub query: String,
    pub intent: Intent,
    pub budget: usize,
    pub steps: Vec<Step>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn calls(&self) -> impl Iterator<Item = &ToolCall> {
        self.steps.iter().filter_map(|s| match &s.action {
            Action::Call { call } => Some(call),
            _ => None,
        })
    }

    pub fn final_answer(&self) -> Option<&str> {
        self.steps.last().and_then(|s| match &s.action {
            Action::FinalAnswer { text } => Some(text.as_str()),
            _ => None,
        })
    }

    pub fn routing_misses(&self) -> usize {
        self.steps.iter().filter(|s| s.routing_miss).count()
    }

    /// At most one final answer, and only in last position.
    pub fn is_well_formed(&self) -> bool {
        let finals: Vec<usize> = self
            .steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s.action, Action::FinalAnswer { .. }))
            .map(|(i, _)| i)
            .collect();
        self.steps.len() <= self.budget + 1
            && match finals.as_slice() {
                [] => true,
                [i] => *i + 1 == self.steps.len(),
                _ => false,
            }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentAnswer {
    pub text: String,
    pub citations: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub charts: Vec<ChartArtifact>,
    /// The model produced a final answer within budget.
    pub complete: bool,
    /// Numbers in the text that no observation, argument or the query supports.
    pub ungrounded_numbers: Vec<String>,
}

impl AgentAnswer {
    pub fn flagged(&self) -> bool {
        !self.complete || !self.ungrounded_numbers.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRun {
    pub trajectory: Trajectory,
    pub answer: AgentAnswer,
}

/// Cuts `text` to at most `cap` bytes on a char boundary and says how much went.
pub fn truncate_observation(text: &str, cap: usize) -> String {
    if text.len() <= cap {
        return text.to_string();
    }
    let mut cut = cap;
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    format!("{}[truncated {} bytes]", &text[..cut], text.len() - cut)
}

const SYSTEM_RULES: &str = "Answer the user's question about Gulf climate and environment using the tools below. \
To call a tool, reply with exactly one fenced block tagged tool_call holding {\"tool\": name, \"args\": {name: string}}. \
When you have enough evidence, reply in prose without a tool_call block. Cite evidence as [step N]. \
Only report numbers that appear in tool observations.";

pub struct Agent<'a> {
    registry: &'a ToolRegistry,
    backend: &'a dyn LlmBackend,
    config: AgentConfig,
}

impl<'a> Agent<'a> {
    pub fn new(registry: &'a ToolRegistry, backend: &'a dyn LlmBackend, config: AgentConfig) -> Self {
        Self { registry, backend, config }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn run(&self, query: &str) -> Result<AgentRun, AgentError> {
        if self.config.budget == 0 {
            return Err(AgentError::ZeroBudget);
        }
        if query.trim().is_empty() {
            return Err(AgentError::EmptyQuery);
        }
        let session = self.config.session.as_str();
        let intent = route_intent(query, session, self.backend);
        let prompt = render_tool_prompt_for(self.registry, Some(&intent.routed_categories));
        let mut messages = vec![ChatMessage::system(format!("{SYSTEM_RULES}\n\n{prompt}")), ChatMessage::user(query)];
        let mut steps: Vec<Step> = Vec::new();
        let mut failures = 0;
        let mut termination = Termination::BudgetExhausted;
        let mut backend_error: Option<BackendError> = None;
        let mut calls = 0;

        for turn in 0.. {
            let req = ChatRequest::new(Purpose::Step, session, turn, messages.clone());
            let raw = match self.backend.complete(&req) {
                Ok(raw) => raw,
                Err(e) => {
                    log::warn!("backend failed at turn {turn}: {e}");
                    backend_error = Some(e);
                    termination = Termination::BackendFailure;
                    break;
                }
            };
            let index = steps.len() + 1;
            let step = match parse_call(&raw) {
                ParsedEmission::Final { text } => {
                    steps.push(Step {
                        index,
                        action: Action::FinalAnswer { text },
                        observation: None,
                        routing_miss: false,
                    });
                    termination = Termination::FinalAnswer;
                    break;
                }
                ParsedEmission::Call { call } => {
                    let routing_miss =
                        self.registry.category_of(&call.tool).is_some_and(|c| !intent.routed_categories.contains(&c));
                    if routing_miss {
                        log::info!("routing miss: {} called outside {:?}", call.tool, intent.label);
                    }
                    let observation = self.registry.execute(&call);
                    calls += 1;
                    Step { index, action: Action::Call { call }, observation: Some(observation), routing_miss }
                }
                ParsedEmission::FormatError { reason } => {
                    calls += 1;
                    let observation =
                        Observation::error("", ToolFailure::new(FailureCode::FormatError, reason.clone()));
                    Step {
                        index,
                        action: Action::Malformed { raw: raw.clone(), reason },
                        observation: Some(observation),
                        routing_miss: false,
                    }
                }
            };
            let invalid = step.observation.as_ref().and_then(Observation::failure_code).is_some_and(|c| {
                matches!(c, FailureCode::FormatError | FailureCode::ArgError | FailureCode::UnknownTool)
            });
            failures = if invalid { failures + 1 } else { 0 };
            let rendered =
                step.observation.as_ref().map(|o| serde_json::to_string(o).unwrap_or_default()).unwrap_or_default();
            messages.push(ChatMessage::assistant(raw));
            messages.push(ChatMessage::user(format!(
                "Observation [step {index}]:\n{}",
                truncate_observation(&rendered, self.config.observation_cap)
            )));
            steps.push(step);
            if failures >= MAX_CONSECUTIVE_FAILURES {
                termination = Termination::RepeatedFailures;
                break;
            }
            if calls >= self.config.budget {
                break;
            }
        }

        // The loop only ends with a final answer if the model gives one while
        // budget remains; after the last allowed call the model gets one more
        // turn to answer.
        if termination == Termination::BudgetExhausted {
            let req = ChatRequest::new(Purpose::Step, session, steps.len(), messages.clone());
            if let Ok(raw) = self.backend.complete(&req) {
                if let ParsedEmission::Final { text } = parse_call(&raw) {
                    let index = steps.len() + 1;
                    steps.push(Step {
                        index,
                        action: Action::FinalAnswer { text },
                        observation: None,
                        routing_miss: false,
                    });
                    termination = Termination::FinalAnswer;
                }
            }
        }

        if steps.is_empty() {
            let why = backend_error.map(|e| e.to_string()).unwrap_or_else(|| "no emissions".into());
            return Err(AgentError::EmptyTrajectory(why));
        }
        let trajectory =
            Trajectory { query: query.to_string(), intent, budget: self.config.budget, steps, termination };
        let answer = self.answer(&trajectory);
        Ok(AgentRun { trajectory, answer })
    }

    fn answer(&self, trajectory: &Trajectory) -> AgentAnswer {
        let complete = trajectory.termination == Termination::FinalAnswer;
        let text = match trajectory.final_answer() {
            Some(t) => t.to_string(),
            None => synthesize(trajectory, &self.config.session, self.backend),
        };
        let (ungrounded_numbers, supporting) = check_grounding(&text, trajectory);
        let mut citations: Vec<usize> =
            cited_steps(&text).into_iter().filter(|i| *i >= 1 && *i <= trajectory.steps.len()).collect();
        if citations.is_empty() {
            citations = supporting;
        }
        let charts = if self.config.emit_charts { charts_for(trajectory) } else { Vec::new() };
        AgentAnswer { text, citations, charts, complete, ungrounded_numbers }
    }
}

/// Answer text from the observations gathered so far, used when the model
/// never gave a final answer. Falls back to a plain listing when the backend
/// is unavailable.
pub fn synthesize(trajectory: &Trajectory, session: &str, backend: &dyn LlmBackend) -> String {
    let mut evidence = String::new();
    for step in &trajectory.steps {
        if let (Action::Call { call }, Some(obs)) = (&step.action, &step.observation) {
            let body = serde_json::to_string(obs).unwrap_or_default();
            evidence.push_str(&format!(
                "[step {}] {}: {}\n",
                step.index,
                call.tool,
                truncate_observation(&body, DEFAULT_OBSERVATION_CAP)
            ));
        }
    }
    let req = ChatRequest::new(
        Purpose::Synthesize,
        session,
        0,
        vec![
            ChatMessage::system(
                "Write a short answer to the question from the evidence only. Cite steps as [step N]. Say what is missing.",
            ),
            ChatMessage::user(format!("Question: {}\n\nEvidence:\n{evidence}", trajectory.query)),
        ],
    );
    match backend.complete(&req) {
        Ok(text) if !text.trim().is_empty() => text.trim().to_string(),
        _ => fallback_text(trajectory),
    }
}

fn fallback_text(trajectory: &Trajectory) -> String {
    let mut parts = Vec::new();
    for step in &trajectory.steps {
        let Some(obs) = step.observation.as_ref().filter(|o| o.is_ok()) else { continue };
        let detail = match &obs.payload {
            Some(Payload::Measurement(m)) => format!("{} {} {}", m.variable, m.value, m.unit),
            Some(Payload::Location { name, .. }) => format!("located {name}"),
            Some(p) => format!("{:?} result", p.kind()),
            None => continue,
        };
        parts.push(format!("{} gave {detail} [step {}]", obs.tool, step.index));
    }
    if parts.is_empty() {
        "No answer could be produced; no tool returned usable data.".to_string()
    } else {
        format!("Incomplete answer. Evidence gathered: {}.", parts.join("; "))
    }
}

/// Ungrounded numbers in `text`, plus the steps whose observations supported
/// the grounded ones.
fn check_grounding(text: &str, trajectory: &Trajectory) -> (Vec<String>, Vec<usize>) {
    let mut per_step: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut other: Vec<f64> = numbers_in(&trajectory.query).iter().filter_map(|t| t.parse().ok()).collect();
    for step in &trajectory.steps {
        if let Action::Call { call } = &step.action {
            for v in call.args.values() {
                other.extend(numbers_in(v).iter().filter_map(|t| t.parse::<f64>().ok()));
            }
        }
        if let Some(payload) = step.observation.as_ref().and_then(|o| o.payload.as_ref()) {
            let mut nums = Vec::new();
            if let Ok(v) = serde_json::to_value(payload) {
                harvest(&v, &mut nums);
            }
            per_step.push((step.index, nums));
        }
    }
    let mut ungrounded = Vec::new();
    let mut supporting = BTreeSet::new();
    for token in answer_numbers(text) {
        let Ok(x) = token.parse::<f64>() else { continue };
        let mut found = false;
        for (idx, nums) in &per_step {
            if nums.iter().any(|n| grounding::matches(x, *n)) {
                supporting.insert(*idx);
                found = true;
            }
        }
        if !found && !other.iter().any(|n| grounding::matches(x, *n)) {
            ungrounded.push(token);
        }
    }
    (ungrounded, supporting.into_iter().collect())
}

fn charts_for(trajectory: &Trajectory) -> Vec<ChartArtifact> {
    let city = trajectory.steps.iter().filter_map(|s| s.observation.as_ref()?.payload.as_ref()).find_map(|p| match p {
        Payload::Location { name, .. } => Some(name.clone()),
        _ => None,
    });
    let mut out = Vec::new();
    for step in &trajectory.steps {
        let Some(obs) = step.observation.as_ref() else { continue };
        let (variable, unit, location, points, source) = match &obs.payload {
            Some(Payload::Series(s)) => (&s.variable, &s.unit, s.location, &s.points, &obs.tool),
            Some(Payload::Analysis(a)) => (&a.variable, &a.unit, a.location, &a.series, &obs.tool),
            _ => continue,
        };
        let label = city.clone().unwrap_or_else(|| format!("{:.4},{:.4}", location.lat(), location.lon()));
        match chart_from_points(&label, variable, unit, location, points, source) {
            Ok(chart) => out.push(chart),
            Err(e) => log::warn!("no chart for step {}: {e}", step.index),
        }
    }
    out
}

fn chart_from_points(
    city: &str,
    variable: &str,
    unit: &str,
    location: crate::canon::GeoPoint,
    points: &[SeriesPoint],
    source: &str,
) -> Result<ChartArtifact, crate::geoforge::GeoError> {
    let (Some(first), Some(last)) = (points.first(), points.last()) else {
        return Err(crate::geoforge::GeoError::EmptySlice);
    };
    let records = points
        .iter()
        .map(|p| CanonicalRecord {
            timestamp: p.timestamp,
            variable: variable.to_string(),
            value: p.value,
            unit: unit.to_string(),
            location,
            city: Some(city.to_string()),
            source: source.to_string(),
        })
        .collect();
    let series = CanonicalSeries::new(records, crate::canon::UnitTable::builtin())?;
    let start = first.timestamp;
    let end = last.timestamp + Duration::days(1);
    let observed = points.iter().filter(|p| p.value.is_some()).count();
    let window = WindowSpec {
        index: 0,
        delta_days: (end - start).num_days(),
        start,
        end,
        observed,
        expected: points.len(),
        completeness: observed as f64 / points.len() as f64,
        rho: 0.0,
    };
    build_chart(&series, &window, city, variable)
}

#[cfg(test)]
mod tests;
