use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    chunk_document, expand_keywords, induce_facts, parse_document, retrieve, synthesize_qa, tokenize,
    validate_tf_pairs, AtomicFact, Chunk, ChunkConfig, DatasetRecord, DocKind, DropCounters, Embedder, EvidenceStore,
    Keyword, KeywordIndex, PlaceConstraint, QaDefect, QaFormat, RetrievalConfig, RetrievalRound, RetrievedDocument,
    TextError, OPEN_ANSWER_BUDGET,
};
use crate::clock::Clock;
use crate::llm::LlmBackend;
use crate::tools::SearchProvider;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextForgeConfig {
    pub seeds: Vec<String>,
    pub places: Vec<PlaceConstraint>,
    pub formats: Vec<QaFormat>,
    pub retrieval: RetrievalConfig,
    pub chunking: ChunkConfig,
    pub open_budget: usize,
}

impl Default for TextForgeConfig {
    fn default() -> Self {
        Self {
            seeds: Vec::new(),
            places: Vec::new(),
            formats: QaFormat::ALL.to_vec(),
            retrieval: RetrievalConfig::default(),
            chunking: ChunkConfig::default(),
            open_budget: OPEN_ANSWER_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextForgeOutput {
    pub records: Vec<DatasetRecord>,
    pub drops: DropCounters,
    pub keywords: Vec<Keyword>,
    /// Retrieval trace per kept keyword.
    pub rounds: BTreeMap<String, Vec<RetrievalRound>>,
    pub documents: usize,
    pub chunks: usize,
    pub facts: usize,
}

pub(crate) fn doc_id(url: &str) -> String {
    let digest = Sha256::digest(url.as_bytes());
    format!("doc-{}", &hex::encode(digest)[..12])
}

struct Processed {
    doc_id: String,
    provenance: crate::canon::Provenance,
    chunks: Vec<Chunk>,
    facts: Vec<AtomicFact>,
    dropped_facts: usize,
}

fn process(
    doc: &RetrievedDocument,
    cfg: &ChunkConfig,
    backend: &dyn LlmBackend,
) -> Result<Option<Processed>, TextError> {
    let parsed = match parse_document(&doc.raw, DocKind::from_location(&doc.url)) {
        Ok(p) => p,
        Err(TextError::EmptyAfterCleaning) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut provenance = doc.provenance.clone();
    if let Some(t) = parsed.metadata.title.filter(|t| !t.is_empty()) {
        provenance.title = Some(t);
    }
    provenance.organization = parsed.metadata.organization;
    provenance.published = parsed.metadata.date;
    let id = doc_id(&doc.url);
    let chunks = chunk_document(&id, &tokenize(&parsed.text), &provenance, cfg);
    let mut facts = Vec::new();
    let mut dropped_facts = 0;
    for c in &chunks {
        let batch = induce_facts(c, backend)?;
        dropped_facts += batch.dropped;
        facts.extend(batch.facts);
    }
    Ok(Some(Processed { doc_id: id, provenance, chunks, facts, dropped_facts }))
}

/// Keywords, retrieval, parsing, chunking, facts and QA in one pass.
/// Documents are processed in parallel; output order depends only on inputs.
pub fn forge_text(
    cfg: &TextForgeConfig,
    backend: &dyn LlmBackend,
    search: &dyn SearchProvider,
    embedder: &dyn Embedder,
    clock: &dyn Clock,
    index: &mut KeywordIndex,
) -> Result<TextForgeOutput, TextError> {
    let keywords = expand_keywords(&cfg.seeds, &cfg.places, backend, embedder, index)?;
    let mut drops = DropCounters::default();
    let mut rounds = BTreeMap::new();
    let mut docs: Vec<RetrievedDocument> = Vec::new();
    for kw in &keywords {
        match retrieve(kw, search, backend, clock, &cfg.retrieval) {
            Ok(r) => {
                rounds.insert(kw.text.clone(), r.rounds);
                for d in r.documents {
                    if !docs.iter().any(|x| x.url == d.url) {
                        docs.push(d);
                    }
                }
            }
            Err(TextError::NoRelevantResults(k)) => {
                log::warn!("no relevant documents for `{k}`");
                drops.bump_named("no_relevant_results");
            }
            Err(e) => return Err(e),
        }
    }

    let processed: Vec<Option<Processed>> =
        docs.par_iter().map(|d| process(d, &cfg.chunking, backend)).collect::<Result<_, _>>()?;

    let mut store = EvidenceStore::default();
    let mut facts = Vec::new();
    let mut n_docs = 0;
    let mut n_chunks = 0;
    for p in processed {
        let Some(p) = p else {
            drops.bump_named("empty_document");
            continue;
        };
        n_docs += 1;
        n_chunks += p.chunks.len();
        store.add_document(&p.doc_id, p.provenance);
        for c in &p.chunks {
            store.add_chunk(c).expect("document registered above");
        }
        for _ in 0..p.dropped_facts {
            drops.bump_named("non_atomic_fact");
        }
        for f in p.facts {
            match store.add_fact(&f) {
                Ok(()) => facts.push(f),
                Err(d) => drops.bump(d),
            }
        }
    }

    let mut records = Vec::new();
    if !facts.is_empty() {
        for format in &cfg.formats {
            let batch = synthesize_qa(&facts, *format, backend, cfg.open_budget)?;
            drops.merge(&batch.drops);
            if *format == QaFormat::Tf && validate_tf_pairs(&batch.items).is_err() {
                drops.bump(QaDefect::UnpairedVariant);
                continue;
            }
            for item in batch.items {
                match store.resolve(&item) {
                    Ok(provenance) => records.push(DatasetRecord { item, provenance }),
                    Err(d) => drops.bump(d),
                }
            }
        }
    }
    Ok(TextForgeOutput { records, drops, keywords, rounds, documents: n_docs, chunks: n_chunks, facts: facts.len() })
}
