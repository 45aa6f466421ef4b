//! Benchmark harness: teacher-forced step scoring and end-to-end answers.

mod e2e;
mod report;
mod step;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use e2e::{run_e2e_instance, E2eScore};
pub use report::{render_csv, render_text, CSV_HEADER};
pub use step::{classify_error, gold_context, score_emission, score_step, ErrorClass, StepScore};

use crate::agent::answer_numbers;
use crate::llm::LlmBackend;
use crate::toolkit::{ToolCall, ToolRegistry};

pub const DEFAULT_FACT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("instance {id}: {message}")]
    Invalid { id: String, message: String },
    #[error("duplicate instance id {0}")]
    DuplicateId(String),
    #[error("benchmark has no instances")]
    Empty,
}

/// One expected fact. `label` must occur in the text (case-insensitive);
/// `value` must match some number in it and `text` must occur verbatim
/// (case-insensitive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyFact {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Absolute tolerance on `value`. Unset means relative 1e-6.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl KeyFact {
    pub fn satisfied_by(&self, answer: &str) -> bool {
        let lower = answer.to_lowercase();
        if !lower.contains(&self.label.to_lowercase()) {
            return false;
        }
        if let Some(t) = &self.text {
            if !lower.contains(&t.to_lowercase()) {
                return false;
            }
        }
        match self.value {
            None => true,
            Some(gold) => answer_numbers(answer).iter().filter_map(|n| n.parse::<f64>().ok()).any(|x| {
                let tol = self.tolerance.unwrap_or(DEFAULT_FACT_TOLERANCE * gold.abs().max(x.abs()));
                (x - gold).abs() <= tol
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldStep {
    pub tool: String,
    pub arg_names: BTreeSet<String>,
    pub arg_values: BTreeMap<String, String>,
    #[serde(default)]
    pub summary_facts: Vec<KeyFact>,
}

impl GoldStep {
    pub fn call(&self) -> ToolCall {
        ToolCall { tool: self.tool.clone(), args: self.arg_values.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    pub id: String,
    pub query: String,
    pub allowed_tools: BTreeSet<String>,
    pub gold_trace: Vec<GoldStep>,
    pub gold_answer: Vec<KeyFact>,
    #[serde(default)]
    pub requires_chart: bool,
}

impl BenchmarkInstance {
    fn check(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.query.trim().is_empty() {
            return Err("empty query".into());
        }
        for (k, g) in self.gold_trace.iter().enumerate() {
            if !self.allowed_tools.contains(&g.tool) {
                return Err(format!("gold step {} uses {} outside allowed_tools", k + 1, g.tool));
            }
            let given: BTreeSet<String> = g.arg_values.keys().cloned().collect();
            if given != g.arg_names {
                return Err(format!("gold step {} arg_values do not match arg_names", k + 1));
            }
        }
        Ok(())
    }
}

pub fn parse_instances(text: &str) -> Result<Vec<BenchmarkInstance>, EvalError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let inst: BenchmarkInstance =
            serde_json::from_str(line).map_err(|e| EvalError::Parse { line: n + 1, message: e.to_string() })?;
        inst.check().map_err(|message| EvalError::Invalid { id: inst.id.clone(), message })?;
        if !seen.insert(inst.id.clone()) {
            return Err(EvalError::DuplicateId(inst.id));
        }
        out.push(inst);
    }
    if out.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(out)
}

pub fn load_instances(path: &Path) -> Result<Vec<BenchmarkInstance>, EvalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EvalError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_instances(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub step: bool,
    pub e2e: bool,
    /// Score chart output in end-to-end mode.
    pub images: bool,
    pub budget: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { step: true, e2e: true, images: false, budget: crate::agent::DEFAULT_BUDGET }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorRates {
    pub format_pct: f64,
    pub arg_pct: f64,
    pub na_pct: f64,
}

/// One CSV row: a scored step, or (with `step: None`) an end-to-end result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub id: String,
    pub step: Option<usize>,
    pub score: Option<StepScore>,
    pub e2e: Option<E2eScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub instances: usize,
    pub steps: usize,
    pub inst_acc: Option<f64>,
    pub tool_acc: Option<f64>,
    pub arg_acc: Option<f64>,
    pub summ_acc: Option<f64>,
    pub ans_acc: Option<f64>,
    pub ans_acc_i: Option<f64>,
    pub error_rates: Option<ErrorRates>,
    pub rows: Vec<InstanceRow>,
}

fn pct(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| 100.0 * hits as f64 / total as f64)
}

/// Scores every instance. Instances run in parallel; rows keep input order.
pub fn evaluate(
    instances: &[BenchmarkInstance],
    registry: &ToolRegistry,
    backend: &dyn LlmBackend,
    opts: &EvalOptions,
) -> MetricReport {
    let per_instance: Vec<(Vec<StepScore>, Option<E2eScore>)> = instances
        .par_iter()
        .map(|inst| {
            let steps = if opts.step {
                (0..inst.gold_trace.len()).map(|k| score_step(inst, k, registry, backend)).collect()
            } else {
                Vec::new()
            };
            let e2e = opts.e2e.then(|| run_e2e_instance(inst, registry, backend, opts));
            (steps, e2e)
        })
        .collect();

    let mut rows = Vec::new();
    let mut all_steps: Vec<&StepScore> = Vec::new();
    let mut e2es: Vec<&E2eScore> = Vec::new();
    for (inst, (steps, e2e)) in instances.iter().zip(&per_instance) {
        for (k, s) in steps.iter().enumerate() {
            rows.push(InstanceRow { id: inst.id.clone(), step: Some(k + 1), score: Some(*s), e2e: None });
            all_steps.push(s);
        }
        if let Some(e) = e2e {
            rows.push(InstanceRow { id: inst.id.clone(), step: None, score: None, e2e: Some(e.clone()) });
            e2es.push(e);
        }
    }
    let n = all_steps.len();
    let count = |f: &dyn Fn(&StepScore) -> bool| all_steps.iter().filter(|s| f(s)).count();
    let error_rates = (opts.step && n > 0).then(|| ErrorRates {
        format_pct: 100.0 * count(&|s| s.error == Some(ErrorClass::Format)) as f64 / n as f64,
        arg_pct: 100.0 * count(&|s| s.error == Some(ErrorClass::Arg)) as f64 / n as f64,
        na_pct: 100.0 * count(&|s| s.error == Some(ErrorClass::NotApplicable)) as f64 / n as f64,
    });
    MetricReport {
        instances: instances.len(),
        steps: n,
        inst_acc: pct(count(&|s| s.inst), n),
        tool_acc: pct(count(&|s| s.tool), n),
        arg_acc: pct(count(&|s| s.arg), n),
        summ_acc: pct(count(&|s| s.summ), n),
        ans_acc: pct(e2es.iter().filter(|e| e.ans).count(), e2es.len()),
        ans_acc_i: if opts.images { pct(e2es.iter().filter(|e| e.ans_i).count(), e2es.len()) } else { None },
        error_rates,
        rows,
    }
}

#[cfg(test)]
mod tests;
