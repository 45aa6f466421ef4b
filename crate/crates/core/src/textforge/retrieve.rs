use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{content_words, Keyword, TextError};
use crate::canon::Provenance;
use crate::clock::Clock;
use crate::llm::{ChatMessage, ChatRequest, LlmBackend, Purpose};
use crate::toolkit::SearchHit;
use crate::tools::SearchProvider;

/// Minimum share of query content words a result must mention.
pub const RELEVANCE_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub max_rounds: usize,
    pub results_per_query: usize,
    pub relevance_floor: f64,
    /// Accepted source hosts (suffix match); empty accepts any host.
    pub allowed_domains: Vec<String>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self { max_rounds: 3, results_per_query: 5, relevance_floor: RELEVANCE_FLOOR, allowed_domains: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRound {
    pub round: usize,
    pub query: String,
    pub considered: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedDocument {
    pub url: String,
    pub raw: Vec<u8>,
    pub provenance: Provenance,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieval {
    pub documents: Vec<RetrievedDocument>,
    pub rounds: Vec<RetrievalRound>,
}

fn host(url: &str) -> Option<&str> {
    let rest = url.split_once("://").map(|(_, r)| r).unwrap_or(url);
    let host = rest.split(['/', '?', '#']).next()?;
    let host = host.rsplit_once('@').map(|(_, h)| h).unwrap_or(host);
    Some(host.split(':').next().unwrap_or(host))
}

fn domain_allowed(url: &str, allowed: &[String]) -> bool {
    if allowed.is_empty() {
        return true;
    }
    let Some(h) = host(url).map(str::to_ascii_lowercase) else { return false };
    allowed.iter().any(|d| {
        let d = d.to_ascii_lowercase();
        h == d || h.ends_with(&format!(".{d}"))
    })
}

/// Overlap score: the share of query content words present in title or snippet.
pub fn relevance(query: &str, hit: &SearchHit) -> f64 {
    let q: BTreeSet<String> = content_words(query).collect();
    if q.is_empty() {
        return 0.0;
    }
    let text: BTreeSet<String> = content_words(&format!("{} {}", hit.title, hit.snippet)).collect();
    q.iter().filter(|w| text.contains(*w)).count() as f64 / q.len() as f64
}

pub fn is_relevant(query: &str, hit: &SearchHit, cfg: &RetrievalConfig) -> bool {
    relevance(query, hit) >= cfg.relevance_floor && domain_allowed(&hit.url, &cfg.allowed_domains)
}

/// Search, keep on-domain results, fetch them; when a round yields nothing
/// ask the backend for a follow-up query (key = keyword text, turn = round
/// index) and try again.
pub fn retrieve(
    keyword: &Keyword,
    search: &dyn SearchProvider,
    backend: &dyn LlmBackend,
    clock: &dyn Clock,
    cfg: &RetrievalConfig,
) -> Result<Retrieval, TextError> {
    if cfg.max_rounds == 0 {
        return Err(TextError::Precondition("max_rounds must be at least 1".into()));
    }
    let mut query = keyword.text.clone();
    let mut rounds = Vec::new();
    for round in 1..=cfg.max_rounds {
        let hits = search
            .search(&query, cfg.results_per_query)
            .map_err(|f| TextError::Io(format!("search failed: {}", f.message)))?;
        let mut documents = Vec::new();
        for hit in hits.iter().filter(|h| is_relevant(&query, h, cfg)) {
            match search.fetch(&hit.url) {
                Ok(raw) => {
                    let provenance =
                        Provenance::new(Some(hit.url.clone()), Some(hit.title.clone()), query.clone(), clock.now())
                            .map_err(|e| TextError::Precondition(e.to_string()))?;
                    documents.push(RetrievedDocument { url: hit.url.clone(), raw, provenance, round });
                }
                Err(f) => log::warn!("fetch {} failed: {}", hit.url, f.message),
            }
        }
        rounds.push(RetrievalRound { round, query: query.clone(), considered: hits.len(), accepted: documents.len() });
        if !documents.is_empty() {
            return Ok(Retrieval { documents, rounds });
        }
        if round == cfg.max_rounds {
            break;
        }
        let titles: Vec<String> = hits.iter().map(|h| format!("- {} ({})", h.title, h.url)).collect();
        let prompt = format!(
            "The search `{query}` returned only off-domain results:\n{}\nPropose one better query about `{}`. Reply with the query only.",
            titles.join("\n"),
            keyword.text
        );
        let req = ChatRequest::new(Purpose::Refine, keyword.text.clone(), round - 1, vec![ChatMessage::user(prompt)]);
        let next = backend.complete(&req)?;
        let next = next.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("").trim_matches('"').to_string();
        if next.is_empty() {
            break;
        }
        query = next;
    }
    Err(TextError::NoRelevantResults(keyword.text.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::FixedClock;
    use crate::llm::ScriptedBackend;
    use crate::toolkit::{FailureCode, ToolFailure};
    use chrono::{TimeZone, Utc};

    struct Canned;

    impl SearchProvider for Canned {
        fn search(&self, query: &str, _k: usize) -> Result<Vec<SearchHit>, ToolFailure> {
            let hit = |t: &str, u: &str, s: &str| SearchHit { title: t.into(), url: u.into(), snippet: s.into() };
            Ok(match query {
                "doha heat policy" => vec![hit("Celebrity gossip", "https://gossip.example/a", "nothing relevant")],
                "qatar heat stress policy" => vec![
                    hit(
                        "Qatar heat stress policy update",
                        "https://gov.qa/heat",
                        "Summer working hours policy in Qatar",
                    ),
                    hit("Heat stress policy", "https://blog.example/heat", "qatar heat stress guidance"),
                ],
                _ => vec![],
            })
        }

        fn fetch(&self, url: &str) -> Result<Vec<u8>, ToolFailure> {
            if url.contains("gov.qa") || url.contains("blog.example") {
                Ok(format!("<html><body><p>{url}</p></body></html>").into_bytes())
            } else {
                Err(ToolFailure::new(FailureCode::UnresolvableReference, url))
            }
        }
    }

    fn kw(text: &str) -> Keyword {
        Keyword::new(text, vec![1.0], Some("Qatar"), None).unwrap()
    }

    fn clock() -> FixedClock {
        FixedClock(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap())
    }

    #[test]
    fn direct_hit_takes_one_round() {
        let r = retrieve(
            &kw("qatar heat stress policy"),
            &Canned,
            &ScriptedBackend::new(),
            &clock(),
            &RetrievalConfig::default(),
        )
        .unwrap();
        assert_eq!(r.rounds.len(), 1);
        assert_eq!(r.documents.len(), 2);
        assert!(r.documents.iter().all(|d| d.provenance.query == "qatar heat stress policy"));
    }

    #[test]
    fn off_domain_round_triggers_refinement() {
        let backend =
            ScriptedBackend::new().with(Purpose::Refine, "doha heat policy", vec!["qatar heat stress policy".into()]);
        let cfg = RetrievalConfig { allowed_domains: vec!["gov.qa".into()], ..Default::default() };
        let r = retrieve(&kw("doha heat policy"), &Canned, &backend, &clock(), &cfg).unwrap();
        assert_eq!(r.rounds.len(), 2);
        assert_eq!(r.rounds[0].accepted, 0);
        assert_eq!(r.documents.len(), 1);
        assert_eq!(r.documents[0].url, "https://gov.qa/heat");
        assert_eq!(r.documents[0].round, 2);
    }

    #[test]
    fn nothing_relevant_fails() {
        let backend =
            ScriptedBackend::new().with_repeat(Purpose::Refine, "doha heat policy", vec!["doha heat policy".into()]);
        let err =
            retrieve(&kw("doha heat policy"), &Canned, &backend, &clock(), &RetrievalConfig::default()).unwrap_err();
        assert!(matches!(err, TextError::NoRelevantResults(_)));
    }

    #[test]
    fn host_matching() {
        assert!(domain_allowed("https://www.gov.qa/x", &["gov.qa".into()]));
        assert!(!domain_allowed("https://notgov.qa/x", &["gov.qa".into()]));
        assert_eq!(host("http://user@h.example:8080/p"), Some("h.example"));
    }
}
