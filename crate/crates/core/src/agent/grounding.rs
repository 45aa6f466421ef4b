use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;

/// Relative tolerance for matching a number in an answer to an observed value.
pub const NUMERIC_TOLERANCE: f64 = 1e-6;

fn citation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\[\s*(?:steps?\s*)?\d+(?:\s*,\s*\d+)*\s*\]").expect("valid regex"))
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(^|[^\w.])(-?\d+(?:\.\d+)?)").expect("valid regex"))
}

fn iso_date_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\b\d{4}-\d{2}-\d{2}(?:[T ]\d{2}:\d{2}(?::\d{2}(?:\.\d+)?)?(?:Z|[+-]\d{2}:?\d{2})?)?")
            .expect("valid regex")
    })
}

fn thousands_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(\d),(\d{3})\b").expect("valid regex"))
}

/// Numeric literals in free text, as written. Bracketed step citations are
/// skipped and thousands separators removed.
pub fn numbers_in(text: &str) -> Vec<String> {
    let text = citation_re().replace_all(text, " ");
    let text = thousands_re().replace_all(&text, "$1$2");
    number_re().captures_iter(&text).map(|c| c[2].to_string()).collect()
}

/// Step indices cited as `[2]`, `[step 3]` or `[1, 4]`.
pub fn cited_steps(text: &str) -> Vec<usize> {
    let mut out: Vec<usize> = citation_re()
        .find_iter(text)
        .flat_map(|m| {
            m.as_str().split(|c: char| !c.is_ascii_digit()).filter_map(|d| d.parse().ok()).collect::<Vec<usize>>()
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Numbers an answer asserts: as `numbers_in`, with ISO dates removed first.
pub fn answer_numbers(text: &str) -> Vec<String> {
    numbers_in(&iso_date_re().replace_all(text, " "))
}

/// Every number carried by a JSON value: numeric leaves plus numbers
/// written inside strings (dates, coordinates).
pub fn harvest(value: &Value, out: &mut Vec<f64>) {
    match value {
        Value::Number(n) => out.extend(n.as_f64()),
        Value::String(s) => out.extend(numbers_in(s).iter().filter_map(|t| t.parse::<f64>().ok())),
        Value::Array(a) => a.iter().for_each(|v| harvest(v, out)),
        Value::Object(o) => o.values().for_each(|v| harvest(v, out)),
        _ => {}
    }
}

pub fn matches(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= NUMERIC_TOLERANCE * a.abs().max(b.abs())
}
