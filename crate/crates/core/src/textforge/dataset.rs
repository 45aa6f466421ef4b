use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{AtomicFact, Chunk, EvidenceRef, QAItem, QaDefect};
use crate::canon::Provenance;

/// Everything an item's evidence can point at.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvidenceStore {
    documents: BTreeMap<String, Provenance>,
    chunks: BTreeMap<String, String>,
    facts: BTreeMap<String, AtomicFact>,
    charts: BTreeMap<String, Provenance>,
}

impl EvidenceStore {
    pub fn add_document(&mut self, doc_id: &str, provenance: Provenance) {
        self.documents.insert(doc_id.to_string(), provenance);
    }

    pub fn add_chunk(&mut self, chunk: &Chunk) -> Result<(), QaDefect> {
        if !self.documents.contains_key(&chunk.doc_id) {
            return Err(QaDefect::UnresolvedEvidence);
        }
        self.chunks.insert(chunk.id.clone(), chunk.doc_id.clone());
        Ok(())
    }

    /// Facts must point at a known chunk.
    pub fn add_fact(&mut self, fact: &AtomicFact) -> Result<(), QaDefect> {
        if !self.chunks.contains_key(&fact.chunk_ref) {
            return Err(QaDefect::UnresolvedEvidence);
        }
        self.facts.insert(fact.id.clone(), fact.clone());
        Ok(())
    }

    pub fn add_chart(&mut self, chart_id: &str, provenance: Provenance) {
        self.charts.insert(chart_id.to_string(), provenance);
    }

    pub fn fact(&self, id: &str) -> Option<&AtomicFact> {
        self.facts.get(id)
    }

    /// Follows item -> fact -> chunk -> document (or item -> chart) to provenance.
    pub fn resolve(&self, item: &QAItem) -> Result<Vec<Provenance>, QaDefect> {
        if item.evidence.is_empty() {
            return Err(QaDefect::NoEvidence);
        }
        let mut out: Vec<Provenance> = Vec::new();
        for ev in &item.evidence {
            let prov = match ev {
                EvidenceRef::Fact(id) => self
                    .facts
                    .get(id)
                    .and_then(|f| self.chunks.get(&f.chunk_ref))
                    .and_then(|doc| self.documents.get(doc)),
                EvidenceRef::Chart(id) => self.charts.get(id),
            };
            let prov = prov.filter(|p| p.is_valid()).ok_or(QaDefect::UnresolvedEvidence)?;
            if !out.contains(prov) {
                out.push(prov.clone());
            }
        }
        Ok(out)
    }
}

/// One line of the released dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    #[serde(flatten)]
    pub item: QAItem,
    pub provenance: Vec<Provenance>,
}

pub fn write_dataset<W: Write>(records: &[DatasetRecord], mut sink: W) -> std::io::Result<usize> {
    for r in records {
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(records.len())
}
