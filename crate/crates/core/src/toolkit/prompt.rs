use std::collections::BTreeSet;
use std::fmt::Write;

use super::signature::{ToolCategory, ToolSignature};
use super::ToolRegistry;

pub fn render_tool_prompt(registry: &ToolRegistry) -> String {
    render_tool_prompt_for(registry, None)
}

/// Tool listing grouped by category (fixed category order, then tool name).
/// `only` restricts the listing to routed categories.
pub fn render_tool_prompt_for(registry: &ToolRegistry, only: Option<&BTreeSet<ToolCategory>>) -> String {
    render_tool_prompt_where(registry, |sig| only.is_none_or(|set| set.contains(&sig.category)))
}

/// Same layout, listing only the tools `keep` accepts.
pub fn render_tool_prompt_where(registry: &ToolRegistry, keep: impl Fn(&ToolSignature) -> bool) -> String {
    let mut out = String::from("Available tools:\n");
    for category in ToolCategory::ALL {
        let mut sigs: Vec<_> = registry.signatures().filter(|s| s.category == category && keep(s)).collect();
        if sigs.is_empty() {
            continue;
        }
        sigs.sort_by(|a, b| a.name.cmp(&b.name));
        let _ = writeln!(out, "\n## {}", category.title());
        for sig in sigs {
            let params: Vec<String> = sig
                .params
                .iter()
                .map(|p| format!("{}{}: {}", p.name, if p.required { "" } else { "?" }, p.ty))
                .collect();
            let _ = writeln!(out, "- {}({}) -> {}: {}", sig.name, params.join(", "), sig.returns, sig.description);
        }
    }
    out
}

/// Section headers (`## ...`) in a rendered prompt.
pub fn prompt_sections(prompt: &str) -> Vec<&str> {
    prompt.lines().filter_map(|l| l.strip_prefix("## ")).collect()
}
