//! Text-QA dataset pipeline: keyword expansion, retrieval, document
//! parsing, chunking, atomic facts and QA synthesis with provenance.

mod chunk;
mod dataset;
mod embed;
mod facts;
mod keywords;
mod parse;
mod pipeline;
mod qa;
mod retrieve;

pub use chunk::{
    aligned_spans, chunk_document, chunk_spans, tokenize, Chunk, ChunkConfig, TokenStream, DEFAULT_LENGTH,
    DEFAULT_SNAP, DEFAULT_STRIDE,
};
pub use dataset::{write_dataset, DatasetRecord, EvidenceStore};
pub use embed::{cosine, Embedder, HashingEmbedder};
pub(crate) use facts::content_words;
pub use facts::{induce_facts, is_atomic, AtomicFact, FactBatch};
pub use keywords::{
    expand_keywords, filter_keyword, FilterVerdict, Keyword, KeywordIndex, PlaceConstraint, DEFAULT_TAU, INDEX_VERSION,
};
pub use parse::{parse_document, DocKind, DocMetadata, ParsedDocument};
pub use pipeline::{forge_text, TextForgeConfig, TextForgeOutput};
pub use qa::{
    parse_generated, qa_prompt, synthesize_qa, validate_item, validate_tf_pairs, DropCounters, EvidenceRef,
    GenerationContext, QAItem, QaBatch, QaDefect, QaFormat, Split, VisualCategory, OPEN_ANSWER_BUDGET,
};
pub use retrieve::{
    is_relevant, relevance, retrieve, Retrieval, RetrievalConfig, RetrievalRound, RetrievedDocument, RELEVANCE_FLOOR,
};

use crate::llm::BackendError;

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("embedding has dimension {found}, index expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported document format `{0}`")]
    UnsupportedFormat(String),
    #[error("document is empty after cleaning")]
    EmptyAfterCleaning,
    #[error("{0}")]
    Io(String),
    #[error("no relevant results for `{0}` after refinement")]
    NoRelevantResults(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}
