use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::llm::{ChatMessage, ChatRequest, LlmBackend, Purpose};
use crate::toolkit::ToolCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentLabel {
    Textual,
    Numerical,
    Geospatial,
    HealthEnvironmental,
}

impl IntentLabel {
    pub const ALL: [IntentLabel; 4] =
        [IntentLabel::Textual, IntentLabel::Numerical, IntentLabel::Geospatial, IntentLabel::HealthEnvironmental];

    pub fn as_str(&self) -> &'static str {
        match self {
            IntentLabel::Textual => "textual",
            IntentLabel::Numerical => "numerical",
            IntentLabel::Geospatial => "geospatial",
            IntentLabel::HealthEnvironmental => "health_environmental",
        }
    }

    /// Tool categories the intent is routed to.
    pub fn categories(&self) -> BTreeSet<ToolCategory> {
        use ToolCategory as C;
        match self {
            IntentLabel::Textual => [C::Web].into(),
            IntentLabel::Numerical => [C::WeatherHydrology, C::Carbon, C::Geospatial].into(),
            IntentLabel::Geospatial => [C::RemoteSensing, C::Biodiversity, C::Geospatial].into(),
            IntentLabel::HealthEnvironmental => [C::AirQuality, C::Geospatial].into(),
        }
    }

    fn parse(raw: &str) -> Option<Self> {
        let norm: String =
            raw.trim().to_lowercase().chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect();
        let first = norm.split("__").next().unwrap_or_default().trim_matches('_');
        match first {
            "textual" => Some(IntentLabel::Textual),
            "numerical" => Some(IntentLabel::Numerical),
            "geospatial" => Some(IntentLabel::Geospatial),
            "health_environmental" | "health" => Some(IntentLabel::HealthEnvironmental),
            _ => None,
        }
    }
}

/// Dominant intent of a query. `label: None` is the fallback that keeps
/// every category available.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub label: Option<IntentLabel>,
    pub routed_categories: BTreeSet<ToolCategory>,
}

impl Intent {
    pub fn fallback() -> Self {
        Self { label: None, routed_categories: ToolCategory::ALL.into_iter().collect() }
    }

    pub fn of(label: IntentLabel) -> Self {
        Self { label: Some(label), routed_categories: label.categories() }
    }
}

fn routing_prompt(query: &str) -> String {
    format!(
        "Classify the dominant intent of the question as exactly one of: textual (policy or event reporting), numerical (weather, rainfall, hydrology, emissions), geospatial (imagery, land cover, species), health_environmental (air quality, UV, pollen). Reply with the label only.\n\nQuestion: {query}"
    )
}

/// Asks the backend (key = `session`) for the intent label. Anything it
/// cannot read, including a backend failure, falls back to all categories.
pub fn route_intent(query: &str, session: &str, backend: &dyn LlmBackend) -> Intent {
    if query.trim().is_empty() {
        return Intent::fallback();
    }
    let req = ChatRequest::new(Purpose::Route, session, 0, vec![ChatMessage::user(routing_prompt(query))]);
    match backend.complete(&req) {
        Ok(raw) => raw.lines().find_map(IntentLabel::parse).map(Intent::of).unwrap_or_else(Intent::fallback),
        Err(e) => {
            log::debug!("routing unavailable, using all categories: {e}");
            Intent::fallback()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedBackend;

    #[test]
    fn labels_route_to_category_sets() {
        let b = ScriptedBackend::new()
            .with(Purpose::Route, "q1", vec!["textual".into()])
            .with(Purpose::Route, "q2", vec!["Health/Environmental".into()])
            .with(Purpose::Route, "q3", vec!["no idea".into()]);
        let i = route_intent("What does the UAE adaptation plan say about heatwaves?", "q1", &b);
        assert_eq!(i.routed_categories, [ToolCategory::Web].into());
        let i = route_intent("AQI trend in Kuwait City last month", "q2", &b);
        assert_eq!(i.label, Some(IntentLabel::HealthEnvironmental));
        assert_eq!(i.routed_categories, [ToolCategory::AirQuality, ToolCategory::Geospatial].into());
        assert_eq!(route_intent("xqzt blorp", "q3", &b), Intent::fallback());
        assert_eq!(route_intent("anything", "unscripted", &b).routed_categories.len(), 7);
    }
}
