//! The tool-call wire format.
//!
//! A call is a single fenced block tagged `tool_call` holding one JSON
//! object with exactly two members, `tool` (identifier) and `args`
//! (object of string values). Prose may surround the block. See
//! `docs/call-grammar.md` for the ABNF.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::signature::is_identifier;

pub const CALL_FENCE: &str = "```tool_call";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    pub args: BTreeMap<String, String>,
}

impl ToolCall {
    pub fn new<K: Into<String>, V: Into<String>>(
        tool: impl Into<String>,
        args: impl IntoIterator<Item = (K, V)>,
    ) -> Self {
        Self { tool: tool.into(), args: args.into_iter().map(|(k, v)| (k.into(), v.into())).collect() }
    }

    /// Canonical block form; `parse_call(call.to_block())` returns the call.
    pub fn to_block(&self) -> String {
        let body = serde_json::json!({ "tool": self.tool, "args": self.args });
        format!("{CALL_FENCE}\n{body}\n```")
    }

    pub fn arg_names(&self) -> impl Iterator<Item = &str> {
        self.args.keys().map(String::as_str)
    }
}

/// Three-way reading of a raw model emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParsedEmission {
    Call { call: ToolCall },
    Final { text: String },
    FormatError { reason: String },
}

impl ParsedEmission {
    pub fn is_call(&self) -> bool {
        matches!(self, ParsedEmission::Call { .. })
    }
}

fn fence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^[ \t]*```tool_call[ \t]*\r?$").expect("valid regex"))
}

fn attempted_call_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#""tool"\s*:"#).expect("valid regex"))
}

fn format_error(reason: impl Into<String>) -> ParsedEmission {
    ParsedEmission::FormatError { reason: reason.into() }
}

pub fn parse_call(text: &str) -> ParsedEmission {
    let openings: Vec<_> = fence_re().find_iter(text).collect();
    match openings.len() {
        0 => {
            if attempted_call_re().is_match(text) {
                return format_error("tool call outside a ```tool_call block");
            }
            ParsedEmission::Final { text: text.trim().to_string() }
        }
        1 => parse_block(text, openings[0].end()),
        n => format_error(format!("{n} call blocks; one call per step")),
    }
}

fn parse_block(text: &str, body_start: usize) -> ParsedEmission {
    let rest = &text[body_start..];
    let close = rest.match_indices("\n").find_map(|(nl, _)| {
        let line = rest[nl + 1..].lines().next().unwrap_or("");
        (line.trim() == "```").then_some(nl)
    });
    let Some(close) = close else {
        return format_error("unterminated call block");
    };
    let after = &rest[close + 1..];
    let after = &after[after.find("```").map(|i| i + 3).unwrap_or(after.len())..];
    if attempted_call_re().is_match(after) || attempted_call_re().is_match(&text[..body_start]) {
        return format_error("stray tool call outside the call block");
    }
    let body = rest[..close].trim();
    let value: Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(e) => return format_error(format!("call body is not a JSON object: {e}")),
    };
    let Value::Object(obj) = value else {
        return format_error("call body is not an object");
    };
    if obj.len() != 2 || !obj.contains_key("tool") || !obj.contains_key("args") {
        return format_error("call object must have exactly `tool` and `args`");
    }
    let tool = match &obj["tool"] {
        Value::String(s) if is_identifier(s) => s.clone(),
        _ => return format_error("`tool` must be an identifier string"),
    };
    let Value::Object(raw_args) = &obj["args"] else {
        return format_error("`args` must be an object");
    };
    let mut args = BTreeMap::new();
    for (k, v) in raw_args {
        match v {
            Value::String(s) => {
                args.insert(k.clone(), s.clone());
            }
            _ => return format_error(format!("argument `{k}` is not a quoted scalar")),
        }
    }
    ParsedEmission::Call { call: ToolCall { tool, args } }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn well_formed_block() {
        let text = "I need the weather first.\n```tool_call\n{\"tool\": \"weather_inquiry\", \"args\": {\"lat\": \"25.28\", \"lon\": \"51.53\", \"date\": \"2023-04-15\"}}\n```\n";
        match parse_call(text) {
            ParsedEmission::Call { call } => {
                assert_eq!(call.tool, "weather_inquiry");
                assert_eq!(call.args["date"], "2023-04-15");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbalanced_delimiters() {
        let unterminated = "```tool_call\n{\"tool\": \"rain_inquiry\", \"args\": {}}\n";
        assert!(matches!(parse_call(unterminated), ParsedEmission::FormatError { .. }));
        let braces = "```tool_call\n{\"tool\": \"rain_inquiry\", \"args\": {\"lat\": \"1\"}\n```";
        assert!(matches!(parse_call(braces), ParsedEmission::FormatError { .. }));
    }

    #[test]
    fn prose_is_final_answer() {
        let p = parse_call("Doha received 12.0 mm of rain on 2023-04-15.");
        assert_eq!(p, ParsedEmission::Final { text: "Doha received 12.0 mm of rain on 2023-04-15.".into() });
    }

    #[test]
    fn structural_violations() {
        let cases = [
            "```json\n{\"tool\": \"rain_inquiry\", \"args\": {}}\n```",
            "{\"tool\": \"rain_inquiry\", \"args\": {}}",
            "```tool_call\n{\"tool\": \"rain_inquiry\", \"args\": {\"lat\": 25.2}}\n```",
            "```tool_call\n{\"tool\": \"rain_inquiry\"}\n```",
            "```tool_call\n{\"tool\": \"Rain Inquiry\", \"args\": {}}\n```",
            "```tool_call\n{\"tool\": \"a\", \"args\": {}, \"extra\": 1}\n```",
            "```tool_call\n{\"tool\": \"a\", \"args\": {}}\n```\n```tool_call\n{\"tool\": \"b\", \"args\": {}}\n```",
        ];
        for c in cases {
            assert!(matches!(parse_call(c), ParsedEmission::FormatError { .. }), "{c}");
        }
    }

    proptest! {
        #[test]
        fn block_round_trip(tool in "[a-z_][a-z0-9_]{0,20}",
                            args in prop::collection::btree_map("[a-z_]{1,8}", any::<String>(), 0..5)) {
            let call = ToolCall { tool, args };
            prop_assert_eq!(parse_call(&call.to_block()), ParsedEmission::Call { call: call.clone() });
        }
    }
}
