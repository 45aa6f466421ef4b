use serde::{Deserialize, Serialize};

use crate::canon::Provenance;

pub const DEFAULT_LENGTH: usize = 512;
pub const DEFAULT_STRIDE: usize = 384;
pub const DEFAULT_SNAP: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub length: usize,
    pub stride: usize,
    /// Snap chunk starts back to paragraph or section breaks.
    pub align: bool,
    pub snap_window: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self { length: DEFAULT_LENGTH, stride: DEFAULT_STRIDE, align: false, snap_window: DEFAULT_SNAP }
    }
}

/// Whitespace tokens of a cleaned document plus structural breaks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    /// Token indices that start a paragraph or section, ascending.
    pub breaks: Vec<usize>,
    /// (first token, level, title) per section header.
    pub headers: Vec<(usize, usize, String)>,
}

pub fn tokenize(text: &str) -> TokenStream {
    let mut ts = TokenStream::default();
    let mut new_block = true;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            new_block = true;
            continue;
        }
        let level = line.chars().take_while(|c| *c == '#').count();
        let body = if level > 0 && line[level..].starts_with(' ') { &line[level..] } else { line };
        let is_header = body.len() != line.len();
        if (new_block || is_header) && !ts.tokens.is_empty() {
            ts.breaks.push(ts.tokens.len());
        }
        if is_header {
            ts.headers.push((ts.tokens.len(), level, body.trim().to_string()));
        }
        ts.tokens.extend(body.split_whitespace().map(str::to_string));
        new_block = is_header;
    }
    ts
}

/// `[start, end)` windows at starts `m * stride`, stopping once a window reaches `total`.
pub fn chunk_spans(total: usize, length: usize, stride: usize) -> Vec<(usize, usize)> {
    assert!(length > 0 && stride > 0 && stride <= length, "need 0 < stride <= length");
    let mut spans = Vec::new();
    let mut start = 0;
    while start < total {
        let end = (start + length).min(total);
        spans.push((start, end));
        if end == total {
            break;
        }
        start += stride;
    }
    spans
}

/// Like [`chunk_spans`] but each start after the first moves back to the
/// nearest break within `snap` tokens, as long as that leaves no gap.
pub fn aligned_spans(total: usize, length: usize, stride: usize, breaks: &[usize], snap: usize) -> Vec<(usize, usize)> {
    assert!(length > 0 && stride > 0 && stride <= length, "need 0 < stride <= length");
    let mut spans = Vec::new();
    let mut start = 0;
    while start < total {
        let end = (start + length).min(total);
        spans.push((start, end));
        if end == total {
            break;
        }
        let raw = start + stride;
        let lo = raw.saturating_sub(snap);
        let snapped = breaks.iter().rev().copied().find(|&b| b <= raw && b >= lo && b > start && b <= end);
        start = snapped.unwrap_or(raw);
    }
    spans
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: String,
    pub doc_id: String,
    pub start: usize,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub section_path: Vec<String>,
    pub provenance: Provenance,
}

impl Chunk {
    pub fn end(&self) -> usize {
        self.start + self.tokens.len()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

fn section_path(headers: &[(usize, usize, String)], at: usize) -> Vec<String> {
    let mut path: Vec<(usize, &str)> = Vec::new();
    for (idx, level, title) in headers {
        if *idx > at {
            break;
        }
        while path.last().is_some_and(|(l, _)| *l >= *level) {
            path.pop();
        }
        path.push((*level, title));
    }
    path.into_iter().map(|(_, t)| t.to_string()).collect()
}

pub fn chunk_document(doc_id: &str, stream: &TokenStream, provenance: &Provenance, cfg: &ChunkConfig) -> Vec<Chunk> {
    let total = stream.tokens.len();
    let spans = if cfg.align {
        aligned_spans(total, cfg.length, cfg.stride, &stream.breaks, cfg.snap_window)
    } else {
        chunk_spans(total, cfg.length, cfg.stride)
    };
    spans
        .into_iter()
        .enumerate()
        .map(|(m, (s, e))| Chunk {
            id: format!("{doc_id}#{m}"),
            doc_id: doc_id.to_string(),
            start: s,
            tokens: stream.tokens[s..e].to_vec(),
            section_path: section_path(&stream.headers, s),
            provenance: provenance.clone(),
        })
        .collect()
}
