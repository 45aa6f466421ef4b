use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Chunk, TextError};
use crate::canon::Provenance;
use crate::llm::{ChatMessage, ChatRequest, LlmBackend, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicFact {
    pub id: String,
    pub statement: String,
    pub chunk_ref: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactBatch {
    pub facts: Vec<AtomicFact>,
    pub dropped: usize,
}

const STOPWORDS: [&str; 24] = [
    "the", "and", "for", "are", "was", "were", "this", "that", "with", "from", "has", "have", "had", "its", "into",
    "than", "then", "there", "their", "they", "been", "also", "which", "these",
];

pub(crate) fn content_words(s: &str) -> impl Iterator<Item = String> + '_ {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.chars().count() >= 3 && w.chars().any(char::is_alphabetic))
        .map(str::to_lowercase)
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
}

/// Rejects statements that bundle several claims or carry no content.
pub fn is_atomic(statement: &str) -> bool {
    let s = statement.trim();
    if s.is_empty() || content_words(s).next().is_none() {
        return false;
    }
    let sentence_break = Regex::new(r"[.!?]\s+\p{Lu}").expect("valid regex");
    if sentence_break.is_match(s) || s.contains(';') {
        return false;
    }
    let joined = Regex::new(r",\s+(and|but|while|whereas)\s+").expect("valid regex");
    !(joined.is_match(s) && s.split_whitespace().count() > 25)
}

fn clean_line(line: &str) -> &str {
    let t = line.trim().trim_start_matches(['-', '*', '•']).trim();
    match t.split_once(['.', ')']) {
        Some((n, rest)) if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) => rest.trim(),
        _ => t,
    }
}

/// One backend call per chunk (key = chunk id); the reply lists one fact per line.
pub fn induce_facts(chunk: &Chunk, backend: &dyn LlmBackend) -> Result<FactBatch, TextError> {
    if chunk.tokens.is_empty() {
        return Err(TextError::Precondition(format!("chunk {} is empty", chunk.id)));
    }
    let prompt = format!(
        "List the verifiable facts stated in the passage, one short single-claim sentence per line.\n\nPassage:\n{}",
        chunk.text()
    );
    let raw =
        backend.complete(&ChatRequest::new(Purpose::Facts, chunk.id.clone(), 0, vec![ChatMessage::user(prompt)]))?;
    let mut batch = FactBatch::default();
    for line in raw.lines().map(clean_line).filter(|l| !l.is_empty()) {
        if is_atomic(line) {
            batch.facts.push(AtomicFact {
                id: format!("{}/f{}", chunk.id, batch.facts.len()),
                statement: line.to_string(),
                chunk_ref: chunk.id.clone(),
                provenance: chunk.provenance.clone(),
            });
        } else {
            batch.dropped += 1;
        }
    }
    if batch.facts.is_empty() {
        log::info!("no facts induced for chunk {}", chunk.id);
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_filters() {
        assert!(is_atomic("Doha recorded 12 mm of rain on 15 April 2023."));
        assert!(!is_atomic("Rain fell. Roads flooded."));
        assert!(!is_atomic("Rain fell; roads flooded"));
        assert!(!is_atomic("12 34"));
        assert!(!is_atomic("   "));
        assert_eq!(clean_line("2) Heat rose"), "Heat rose");
    }
}
