use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embed::{cosine, Embedder};
use super::TextError;
use crate::llm::{ChatMessage, ChatRequest, LlmBackend, Purpose};

pub const DEFAULT_TAU: f64 = 0.85;
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub text: String,
    pub embedding: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub city: Option<String>,
}

impl Keyword {
    pub fn new(text: &str, embedding: Vec<f64>, country: Option<&str>, city: Option<&str>) -> Result<Self, TextError> {
        if embedding.is_empty() || embedding.iter().all(|x| *x == 0.0) || embedding.iter().any(|x| !x.is_finite()) {
            return Err(TextError::Precondition(format!("keyword `{text}` has a degenerate embedding")));
        }
        Ok(Self {
            text: text.to_string(),
            embedding,
            country: country.map(str::to_string),
            city: city.map(str::to_string),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FilterVerdict {
    Kept { max_sim: f64 },
    Rejected { max_sim: f64 },
}

impl FilterVerdict {
    pub fn is_kept(&self) -> bool {
        matches!(self, FilterVerdict::Kept { .. })
    }
}

/// Accepted keywords; no two stored embeddings reach cosine `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordIndex {
    pub version: u32,
    tau: f64,
    dim: usize,
    keywords: Vec<Keyword>,
}

impl KeywordIndex {
    pub fn new(dim: usize, tau: f64) -> Result<Self, TextError> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(TextError::Precondition(format!("tau must lie in (0, 1], got {tau}")));
        }
        Ok(Self { version: INDEX_VERSION, tau, dim, keywords: Vec::new() })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn keywords(&self) -> &[Keyword] {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Largest cosine similarity to any stored keyword (0 for an empty index).
    pub fn max_similarity(&self, embedding: &[f64]) -> Result<f64, TextError> {
        if embedding.len() != self.dim {
            return Err(TextError::DimensionMismatch { expected: self.dim, found: embedding.len() });
        }
        Ok(self.keywords.iter().map(|k| cosine(embedding, &k.embedding)).fold(0.0, f64::max))
    }

    pub fn save(&self, path: &Path) -> Result<(), TextError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| TextError::Io(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| TextError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path).map_err(|e| TextError::Io(format!("{}: {e}", path.display())))?;
        let idx: KeywordIndex = serde_json::from_str(&text).map_err(|e| TextError::Io(e.to_string()))?;
        if idx.version != INDEX_VERSION {
            return Err(TextError::Io(format!("unsupported keyword index version {}", idx.version)));
        }
        Ok(idx)
    }
}

/// Keeps `candidate` iff its maximum cosine similarity to the index is
/// strictly below tau, inserting it in the same step.
pub fn filter_keyword(candidate: Keyword, index: &mut KeywordIndex) -> Result<FilterVerdict, TextError> {
    let max_sim = index.max_similarity(&candidate.embedding)?;
    if max_sim < index.tau {
        index.keywords.push(candidate);
        Ok(FilterVerdict::Kept { max_sim })
    } else {
        Ok(FilterVerdict::Rejected { max_sim })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceConstraint {
    pub country: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub city: Option<String>,
}

fn clean_candidate(line: &str) -> Option<&str> {
    let t = line.trim().trim_start_matches(['-', '*', '•']).trim();
    let t = match t.split_once(['.', ')']) {
        Some((n, rest)) if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) => rest.trim(),
        _ => t,
    };
    let t = t.trim_matches('"').trim();
    (!t.is_empty()).then_some(t)
}

/// Asks the backend for keyword candidates per (seed, place) and keeps the
/// ones that pass [`filter_keyword`]. The backend key is `seed|country|city`.
pub fn expand_keywords(
    seeds: &[String],
    constraints: &[PlaceConstraint],
    backend: &dyn LlmBackend,
    embedder: &dyn Embedder,
    index: &mut KeywordIndex,
) -> Result<Vec<Keyword>, TextError> {
    if seeds.is_empty() {
        return Err(TextError::Precondition("no seed topics".into()));
    }
    let anywhere = [PlaceConstraint { country: String::new(), city: None }];
    let places = if constraints.is_empty() { &anywhere[..] } else { constraints };
    let mut kept = Vec::new();
    for seed in seeds {
        for place in places {
            let key = format!("{seed}|{}|{}", place.country, place.city.as_deref().unwrap_or(""));
            let prompt = format!(
                "Propose search keywords and query templates about \"{seed}\" for {}{}. One per line.",
                place.city.as_deref().map(|c| format!("{c}, ")).unwrap_or_default(),
                if place.country.is_empty() { "the Gulf region" } else { &place.country }
            );
            let raw = backend.complete(&ChatRequest::new(Purpose::Expand, key, 0, vec![ChatMessage::user(prompt)]))?;
            for line in raw.lines() {
                let Some(text) = clean_candidate(line) else { continue };
                let country = (!place.country.is_empty()).then_some(place.country.as_str());
                let Ok(kw) = Keyword::new(text, embedder.embed(text), country, place.city.as_deref()) else {
                    log::debug!("skipping candidate without features: {text:?}");
                    continue;
                };
                if filter_keyword(kw.clone(), index)?.is_kept() {
                    kept.push(kw);
                }
            }
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn identical_is_rejected_orthogonal_is_kept() {
        let mut idx = KeywordIndex::new(3, 0.85).unwrap();
        let a = Keyword::new("a", unit(&[1.0, 0.0, 0.0]), None, None).unwrap();
        assert_eq!(filter_keyword(a.clone(), &mut idx).unwrap(), FilterVerdict::Kept { max_sim: 0.0 });
        match filter_keyword(a, &mut idx).unwrap() {
            FilterVerdict::Rejected { max_sim } => assert!((max_sim - 1.0).abs() < 1e-12),
            v => panic!("{v:?}"),
        }
        let b = Keyword::new("b", unit(&[0.0, 1.0, 0.0]), None, None).unwrap();
        assert_eq!(filter_keyword(b, &mut idx).unwrap(), FilterVerdict::Kept { max_sim: 0.0 });
        assert_eq!(idx.len(), 2);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut idx = KeywordIndex::new(3, 0.85).unwrap();
        let k = Keyword::new("x", vec![1.0, 0.0], None, None).unwrap();
        assert!(matches!(filter_keyword(k, &mut idx), Err(TextError::DimensionMismatch { .. })));
        assert!(Keyword::new("z", vec![0.0; 3], None, None).is_err());
    }

    #[test]
    fn index_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mut idx = KeywordIndex::new(2, 0.9).unwrap();
        filter_keyword(Keyword::new("a", vec![0.6, 0.8], Some("Qatar"), Some("Doha")).unwrap(), &mut idx).unwrap();
        let p = dir.path().join("kw.json");
        idx.save(&p).unwrap();
        assert_eq!(KeywordIndex::load(&p).unwrap(), idx);
    }

    #[test]
    fn candidate_lines_are_cleaned() {
        assert_eq!(clean_candidate("1. Doha flood"), Some("Doha flood"));
        assert_eq!(clean_candidate("- \"heat\""), Some("heat"));
        assert_eq!(clean_candidate("   "), None);
    }
}
