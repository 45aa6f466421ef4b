use serde::{Deserialize, Serialize};

use super::BenchmarkInstance;
use crate::llm::{ChatMessage, ChatRequest, LlmBackend, Purpose};
use crate::toolkit::{parse_call, render_tool_prompt_where, ParsedEmission, ToolCall, ToolRegistry, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    /// Unparseable block, bad identifier or unknown tool.
    Format,
    /// Known tool with invalid or mismatched arguments.
    Arg,
    /// Prose where a call was required.
    NotApplicable,
}

impl ErrorClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorClass::Format => "format",
            ErrorClass::Arg => "arg",
            ErrorClass::NotApplicable => "na",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepScore {
    pub inst: bool,
    pub tool: bool,
    pub arg: bool,
    pub summ: bool,
    pub error: Option<ErrorClass>,
}

/// Error class of one emission against the gold arg names, in precedence
/// format, arg, not-applicable.
pub fn classify_error(
    emission: &ParsedEmission,
    registry: &ToolRegistry,
    gold_args: &std::collections::BTreeSet<String>,
) -> Option<ErrorClass> {
    match emission {
        ParsedEmission::FormatError { .. } => Some(ErrorClass::Format),
        ParsedEmission::Final { .. } => Some(ErrorClass::NotApplicable),
        ParsedEmission::Call { call } => match registry.validate(call) {
            Verdict::FormatError { .. } | Verdict::UnknownTool { .. } => Some(ErrorClass::Format),
            Verdict::ArgError { .. } => Some(ErrorClass::Arg),
            Verdict::Ok(_) if !same_names(call, gold_args) => Some(ErrorClass::Arg),
            Verdict::Ok(_) => None,
        },
    }
}

fn same_names(call: &ToolCall, gold: &std::collections::BTreeSet<String>) -> bool {
    call.arg_names().eq(gold.iter().map(String::as_str))
}

/// Messages preceding gold step `k`: allowed-tool prompt, query, then each
/// earlier gold call with the observation it really produces.
pub fn gold_context(inst: &BenchmarkInstance, k: usize, registry: &ToolRegistry) -> Vec<ChatMessage> {
    let prompt = render_tool_prompt_where(registry, |s| inst.allowed_tools.contains(&s.name));
    let mut messages = vec![
        ChatMessage::system(format!("Call exactly one tool per turn as a fenced tool_call block.\n\n{prompt}")),
        ChatMessage::user(inst.query.clone()),
    ];
    for (j, gold) in inst.gold_trace.iter().take(k).enumerate() {
        let call = gold.call();
        let obs = registry.execute(&call);
        messages.push(ChatMessage::assistant(call.to_block()));
        messages.push(ChatMessage::user(format!(
            "Observation [step {}]:\n{}",
            j + 1,
            serde_json::to_string(&obs).unwrap_or_default()
        )));
    }
    messages
}

/// Scores a single emission for gold step `k`. Executes the predicted call
/// and asks the backend to summarize its observation.
pub fn score_emission(
    inst: &BenchmarkInstance,
    k: usize,
    emission: &str,
    registry: &ToolRegistry,
    backend: &dyn LlmBackend,
) -> StepScore {
    let gold = &inst.gold_trace[k];
    let parsed = parse_call(emission);
    let error = classify_error(&parsed, registry, &gold.arg_names);
    let ParsedEmission::Call { call } = parsed else {
        return StepScore { error, ..StepScore::default() };
    };
    let verdict = registry.validate(&call);
    if matches!(verdict, Verdict::FormatError { .. }) {
        return StepScore { error, ..StepScore::default() };
    }
    let inst_ok = !matches!(verdict, Verdict::UnknownTool { .. });
    let tool = call.tool == gold.tool;
    let arg = same_names(&call, &gold.arg_names);
    let obs = registry.execute(&call);
    let summ = obs.is_ok() && {
        let req = ChatRequest::new(
            Purpose::StepSummary,
            &inst.id,
            k,
            vec![
                ChatMessage::system("Summarize the tool observation in one or two sentences, keeping its key numbers."),
                ChatMessage::user(serde_json::to_string(&obs).unwrap_or_default()),
            ],
        );
        match backend.complete(&req) {
            Ok(summary) => gold.summary_facts.iter().all(|f| f.satisfied_by(&summary)),
            Err(e) => {
                log::debug!("{} step {}: no summary: {e}", inst.id, k + 1);
                false
            }
        }
    };
    StepScore { inst: inst_ok, tool, arg, summ, error }
}

/// Teacher-forced score of gold step `k` (0-based).
pub fn score_step(inst: &BenchmarkInstance, k: usize, registry: &ToolRegistry, backend: &dyn LlmBackend) -> StepScore {
    let req = ChatRequest::new(Purpose::Step, &inst.id, k, gold_context(inst, k, registry));
    match backend.complete(&req) {
        Ok(emission) => score_emission(inst, k, &emission, registry, backend),
        Err(e) => {
            log::warn!("{} step {}: backend failed: {e}", inst.id, k + 1);
            StepScore { error: Some(ErrorClass::Format), ..StepScore::default() }
        }
    }
}
