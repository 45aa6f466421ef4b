use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AtomicFact, TextError};
use crate::llm::{ChatMessage, ChatRequest, LlmBackend, Purpose};

/// Word budget for open-ended answers.
pub const OPEN_ANSWER_BUDGET: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QaFormat {
    Mcq,
    Open,
    Tf,
}

impl QaFormat {
    pub const ALL: [QaFormat; 3] = [QaFormat::Mcq, QaFormat::Open, QaFormat::Tf];

    pub fn as_str(&self) -> &'static str {
        match self {
            QaFormat::Mcq => "mcq",
            QaFormat::Open => "open",
            QaFormat::Tf => "tf",
        }
    }
}

impl std::str::FromStr for QaFormat {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mcq" => Ok(QaFormat::Mcq),
            "open" => Ok(QaFormat::Open),
            "tf" => Ok(QaFormat::Tf),
            other => Err(TextError::Precondition(format!("unknown QA format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Text,
    Visual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisualCategory {
    Anomaly,
    Forecasting,
    Imputation,
    Reasoning,
}

impl VisualCategory {
    pub const ALL: [VisualCategory; 4] =
        [VisualCategory::Anomaly, VisualCategory::Forecasting, VisualCategory::Imputation, VisualCategory::Reasoning];

    pub fn as_str(&self) -> &'static str {
        match self {
            VisualCategory::Anomaly => "anomaly",
            VisualCategory::Forecasting => "forecasting",
            VisualCategory::Imputation => "imputation",
            VisualCategory::Reasoning => "reasoning",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum EvidenceRef {
    Fact(String),
    Chart(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    pub format: QaFormat,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
    pub evidence: Vec<EvidenceRef>,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<VisualCategory>,
    /// Numeric gold for items with a checkable value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Set when the item should be looked at by a person before release.
    #[serde(default)]
    pub review_flag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "snake_case")]
pub enum QaDefect {
    #[error("empty question")]
    EmptyQuestion,
    #[error("empty answer")]
    EmptyAnswer,
    #[error("fewer than three options")]
    TooFewOptions,
    #[error("duplicate options")]
    DuplicateOptions,
    #[error("answer not among options")]
    AnswerNotInOptions,
    #[error("options on a non-MCQ item")]
    UnexpectedOptions,
    #[error("true/false answer is not `true` or `false`")]
    NotBoolean,
    #[error("answer exceeds the word budget")]
    AnswerTooLong,
    #[error("no evidence")]
    NoEvidence,
    #[error("true/false variants are unpaired")]
    UnpairedVariant,
    #[error("malformed generation")]
    Malformed,
    #[error("evidence does not resolve")]
    UnresolvedEvidence,
}

impl QaDefect {
    pub fn as_str(&self) -> &'static str {
        match self {
            QaDefect::EmptyQuestion => "empty_question",
            QaDefect::EmptyAnswer => "empty_answer",
            QaDefect::TooFewOptions => "too_few_options",
            QaDefect::DuplicateOptions => "duplicate_options",
            QaDefect::AnswerNotInOptions => "answer_not_in_options",
            QaDefect::UnexpectedOptions => "unexpected_options",
            QaDefect::NotBoolean => "not_boolean",
            QaDefect::AnswerTooLong => "answer_too_long",
            QaDefect::NoEvidence => "no_evidence",
            QaDefect::UnpairedVariant => "unpaired_variant",
            QaDefect::Malformed => "malformed",
            QaDefect::UnresolvedEvidence => "unresolved_evidence",
        }
    }
}

/// Counts of dropped generations per defect.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounters(pub BTreeMap<String, usize>);

impl DropCounters {
    pub fn bump(&mut self, defect: QaDefect) {
        *self.0.entry(defect.as_str().to_string()).or_default() += 1;
    }

    pub fn bump_named(&mut self, name: &str) {
        *self.0.entry(name.to_string()).or_default() += 1;
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn get(&self, defect: QaDefect) -> usize {
        self.0.get(defect.as_str()).copied().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &DropCounters) {
        for (k, v) in &other.0 {
            *self.0.entry(k.clone()).or_default() += v;
        }
    }
}

/// Structural checks shared by the text and visual splits.
pub fn validate_item(item: &QAItem, open_budget: usize) -> Result<(), QaDefect> {
    if item.question.trim().is_empty() {
        return Err(QaDefect::EmptyQuestion);
    }
    if item.answer.trim().is_empty() {
        return Err(QaDefect::EmptyAnswer);
    }
    if item.evidence.is_empty() {
        return Err(QaDefect::NoEvidence);
    }
    match item.format {
        QaFormat::Mcq => {
            if item.options.len() < 3 {
                return Err(QaDefect::TooFewOptions);
            }
            let distinct: BTreeSet<&str> = item.options.iter().map(|o| o.trim()).collect();
            if distinct.len() != item.options.len() {
                return Err(QaDefect::DuplicateOptions);
            }
            if item.options.iter().filter(|o| o.trim() == item.answer.trim()).count() != 1 {
                return Err(QaDefect::AnswerNotInOptions);
            }
        }
        QaFormat::Tf => {
            if !item.options.is_empty() {
                return Err(QaDefect::UnexpectedOptions);
            }
            if item.answer != "true" && item.answer != "false" {
                return Err(QaDefect::NotBoolean);
            }
        }
        QaFormat::Open => {
            if !item.options.is_empty() {
                return Err(QaDefect::UnexpectedOptions);
            }
            if item.answer.split_whitespace().count() > open_budget {
                return Err(QaDefect::AnswerTooLong);
            }
        }
    }
    Ok(())
}

/// True/false items must come in (true, false) pairs sharing evidence.
pub fn validate_tf_pairs(items: &[QAItem]) -> Result<(), QaDefect> {
    let tf: Vec<&QAItem> = items.iter().filter(|i| i.format == QaFormat::Tf).collect();
    if !tf.len().is_multiple_of(2) {
        return Err(QaDefect::UnpairedVariant);
    }
    for pair in tf.chunks(2) {
        if pair[0].answer != "true" || pair[1].answer != "false" || pair[0].evidence != pair[1].evidence {
            return Err(QaDefect::UnpairedVariant);
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct GeneratedQa {
    #[serde(default)]
    question: String,
    #[serde(default)]
    answer: String,
    #[serde(default)]
    options: Vec<String>,
}

#[derive(Deserialize)]
struct GeneratedTf {
    #[serde(default)]
    entailed: String,
    #[serde(default)]
    contradicted: String,
}

/// Context for turning one backend generation into validated items.
pub struct GenerationContext<'a> {
    pub id_prefix: &'a str,
    pub format: QaFormat,
    pub evidence: Vec<EvidenceRef>,
    pub split: Split,
    pub category: Option<VisualCategory>,
    pub open_budget: usize,
}

/// Parses a JSON array produced by the backend. MCQ and open items are
/// objects with `question`, `answer` and (MCQ) `options`; true/false items
/// are objects with an `entailed` and a `contradicted` statement, each
/// yielding a true and a false item. Invalid entries are counted and dropped.
pub fn parse_generated(raw: &str, ctx: &GenerationContext<'_>, drops: &mut DropCounters) -> Vec<QAItem> {
    let body = strip_code_fence(raw);
    let Ok(values) = serde_json::from_str::<Vec<serde_json::Value>>(body) else {
        if !raw.trim().is_empty() {
            drops.bump(QaDefect::Malformed);
        }
        return Vec::new();
    };
    let mut out = Vec::new();
    let base = |n: usize, format: QaFormat, question: String, answer: String, options: Vec<String>| QAItem {
        id: format!("{}-{n}", ctx.id_prefix),
        format,
        question: question.trim().to_string(),
        answer: answer.trim().to_string(),
        options: options.into_iter().map(|o| o.trim().to_string()).collect(),
        evidence: ctx.evidence.clone(),
        split: ctx.split,
        category: ctx.category,
        gold_value: None,
        tolerance: None,
        review_flag: false,
    };
    for v in values {
        match ctx.format {
            QaFormat::Tf => {
                let Ok(g) = serde_json::from_value::<GeneratedTf>(v) else {
                    drops.bump(QaDefect::Malformed);
                    continue;
                };
                if g.entailed.trim().is_empty()
                    || g.contradicted.trim().is_empty()
                    || g.entailed.trim() == g.contradicted.trim()
                {
                    drops.bump(QaDefect::UnpairedVariant);
                    continue;
                }
                let n = out.len();
                let t = base(n, QaFormat::Tf, g.entailed, "true".into(), Vec::new());
                let f = base(n + 1, QaFormat::Tf, g.contradicted, "false".into(), Vec::new());
                match validate_item(&t, ctx.open_budget).and(validate_item(&f, ctx.open_budget)) {
                    Ok(()) => out.extend([t, f]),
                    Err(d) => drops.bump(d),
                }
            }
            format => {
                let Ok(g) = serde_json::from_value::<GeneratedQa>(v) else {
                    drops.bump(QaDefect::Malformed);
                    continue;
                };
                let item = base(out.len(), format, g.question, g.answer, g.options);
                match validate_item(&item, ctx.open_budget) {
                    Ok(()) => out.push(item),
                    Err(d) => drops.bump(d),
                }
            }
        }
    }
    out
}

pub(crate) fn strip_code_fence(raw: &str) -> &str {
    let t = raw.trim();
    if let Some(rest) = t.strip_prefix("```") {
        let rest = rest.split_once('\n').map(|(_, r)| r).unwrap_or("");
        return rest.trim_end().strip_suffix("```").unwrap_or(rest).trim();
    }
    t
}

pub fn qa_prompt(format: QaFormat, facts: &[AtomicFact]) -> String {
    let shape = match format {
        QaFormat::Mcq => r#"[{"question": "...", "options": ["...", "...", "..."], "answer": "<one of the options>"}]"#,
        QaFormat::Open => r#"[{"question": "...", "answer": "..."}]"#,
        QaFormat::Tf => {
            r#"[{"entailed": "<statement supported by the facts>", "contradicted": "<statement the facts refute>"}]"#
        }
    };
    let mut p = format!(
        "Write {} questions grounded only in the facts below. Distractors must be plausible locally but inconsistent with the facts. Reply with JSON only, shaped as {shape}.\n\nFacts:\n",
        format.as_str()
    );
    for f in facts {
        p.push_str("- ");
        p.push_str(&f.statement);
        p.push('\n');
    }
    p
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QaBatch {
    pub items: Vec<QAItem>,
    pub drops: DropCounters,
}

/// QA synthesis over facts, batched per source chunk. The backend key is
/// `<format>:<chunk id>`.
pub fn synthesize_qa(
    facts: &[AtomicFact],
    format: QaFormat,
    backend: &dyn LlmBackend,
    open_budget: usize,
) -> Result<QaBatch, TextError> {
    if facts.is_empty() {
        return Err(TextError::Precondition("no facts to synthesize from".into()));
    }
    let mut by_chunk: BTreeMap<&str, Vec<AtomicFact>> = BTreeMap::new();
    for f in facts {
        by_chunk.entry(f.chunk_ref.as_str()).or_default().push(f.clone());
    }
    let mut batch = QaBatch::default();
    for (chunk_id, group) in by_chunk {
        let key = format!("{}:{chunk_id}", format.as_str());
        let req = ChatRequest::new(Purpose::Qa, key.clone(), 0, vec![ChatMessage::user(qa_prompt(format, &group))]);
        let raw = backend.complete(&req)?;
        let ctx = GenerationContext {
            id_prefix: &format!("qa:{key}"),
            format,
            evidence: group.iter().map(|f| EvidenceRef::Fact(f.id.clone())).collect(),
            split: Split::Text,
            category: None,
            open_budget,
        };
        batch.items.extend(parse_generated(&raw, &ctx, &mut batch.drops));
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(format: QaFormat) -> GenerationContext<'static> {
        GenerationContext {
            id_prefix: "t",
            format,
            evidence: vec![EvidenceRef::Fact("d#0/f0".into())],
            split: Split::Text,
            category: None,
            open_budget: 10,
        }
    }

    #[test]
    fn mcq_validation_drops_bad_items() {
        let raw = r#"[
            {"question": "Q1?", "options": ["a", "b", "c"], "answer": "b"},
            {"question": "Q2?", "options": ["a", "b", "c"], "answer": "d"},
            {"question": "Q3?", "options": ["a", "a", "c"], "answer": "a"},
            {"question": "Q4?", "options": ["a", "b"], "answer": "a"}
        ]"#;
        let mut drops = DropCounters::default();
        let items = parse_generated(raw, &ctx(QaFormat::Mcq), &mut drops);
        assert_eq!(items.len(), 1);
        assert_eq!(drops.get(QaDefect::AnswerNotInOptions), 1);
        assert_eq!(drops.get(QaDefect::DuplicateOptions), 1);
        assert_eq!(drops.get(QaDefect::TooFewOptions), 1);
    }

    #[test]
    fn tf_batches_pair_up() {
        let raw = r#"[{"entailed": "A is 3.", "contradicted": "A is 4."}, {"entailed": "B", "contradicted": "C"}]"#;
        let mut drops = DropCounters::default();
        let items = parse_generated(raw, &ctx(QaFormat::Tf), &mut drops);
        assert_eq!(items.len(), 4);
        assert_eq!(items.iter().filter(|i| i.answer == "true").count(), 2);
        validate_tf_pairs(&items).unwrap();
    }

    #[test]
    fn open_answers_respect_budget_and_fences_are_stripped() {
        let raw = "```json\n[{\"question\": \"Why?\", \"answer\": \"one two three four five six seven eight nine ten eleven\"}, {\"question\": \"How?\", \"answer\": \"short\"}]\n```";
        let mut drops = DropCounters::default();
        let items = parse_generated(raw, &ctx(QaFormat::Open), &mut drops);
        assert_eq!(items.len(), 1);
        assert_eq!(drops.get(QaDefect::AnswerTooLong), 1);
        let mut drops = DropCounters::default();
        assert!(parse_generated("not json", &ctx(QaFormat::Open), &mut drops).is_empty());
        assert_eq!(drops.get(QaDefect::Malformed), 1);
    }
}
