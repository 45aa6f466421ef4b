use serde::{Deserialize, Serialize};

use super::{BenchmarkInstance, EvalOptions};
use crate::agent::{Agent, AgentConfig};
use crate::llm::LlmBackend;
use crate::toolkit::ToolRegistry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E2eScore {
    pub ans: bool,
    /// `ans`, and a chart of a variable named in the gold facts when one is required.
    pub ans_i: bool,
    pub complete: bool,
    pub answer: String,
}

pub fn run_e2e_instance(
    inst: &BenchmarkInstance,
    registry: &ToolRegistry,
    backend: &dyn LlmBackend,
    opts: &EvalOptions,
) -> E2eScore {
    let cfg = AgentConfig {
        session: inst.id.clone(),
        budget: opts.budget,
        emit_charts: opts.images,
        ..AgentConfig::default()
    };
    let run = match Agent::new(registry, backend, cfg).run(&inst.query) {
        Ok(run) => run,
        Err(e) => {
            log::warn!("{}: agent failed: {e}", inst.id);
            return E2eScore { ans: false, ans_i: false, complete: false, answer: String::new() };
        }
    };
    let text = &run.answer.text;
    let ans = inst.gold_answer.iter().all(|f| f.satisfied_by(text));
    let chart_ok = !inst.requires_chart
        || run.answer.charts.iter().any(|c| {
            let v = c.metadata.variable.to_lowercase();
            inst.gold_answer.iter().any(|f| f.label.to_lowercase().contains(&v))
        });
    E2eScore { ans, ans_i: ans && chart_ok, complete: run.answer.complete, answer: text.clone() }
}
