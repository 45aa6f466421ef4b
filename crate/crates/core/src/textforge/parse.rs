use std::collections::BTreeMap;
use std::str::FromStr;

use chrono::NaiveDate;
use regex::Regex;
use scraper::{ElementRef, Html, Selector};
use serde::{Deserialize, Serialize};

use super::TextError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Html,
    PdfText,
}

impl FromStr for DocKind {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "html" | "htm" => Ok(DocKind::Html),
            "pdf_text" | "pdf" | "txt" => Ok(DocKind::PdfText),
            other => Err(TextError::UnsupportedFormat(other.to_string())),
        }
    }
}

impl DocKind {
    /// Guess from a URL or path suffix; HTML unless it looks like a text layer.
    pub fn from_location(loc: &str) -> Self {
        let lower = loc.to_ascii_lowercase();
        if lower.ends_with(".pdf") || lower.ends_with(".txt") {
            DocKind::PdfText
        } else {
            DocKind::Html
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMetadata {
    pub title: Option<String>,
    pub organization: Option<String>,
    pub date: Option<NaiveDate>,
    pub url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedDocument {
    /// Paragraphs separated by blank lines; section headers as `#` lines.
    pub text: String,
    pub metadata: DocMetadata,
}

pub fn parse_document(raw: &[u8], kind: DocKind) -> Result<ParsedDocument, TextError> {
    let text = String::from_utf8_lossy(raw);
    let doc = match kind {
        DocKind::Html => parse_html(&text),
        DocKind::PdfText => parse_pdf_text(&text),
    };
    if doc.text.split_whitespace().all(|w| w.starts_with('#')) {
        return Err(TextError::EmptyAfterCleaning);
    }
    Ok(doc)
}

const SKIPPED: [&str; 11] =
    ["nav", "header", "footer", "aside", "script", "style", "noscript", "form", "iframe", "svg", "template"];
const BLOCKS: [&str; 20] = [
    "p",
    "div",
    "section",
    "article",
    "main",
    "li",
    "ul",
    "ol",
    "table",
    "tr",
    "td",
    "th",
    "blockquote",
    "pre",
    "dd",
    "dt",
    "figcaption",
    "figure",
    "br",
    "body",
];
/// Blocks whose linked text exceeds this share are navigation residue.
const MAX_LINK_DENSITY: f64 = 0.5;

#[derive(Default)]
struct Walker {
    blocks: Vec<String>,
    buf: String,
    link_chars: usize,
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl Walker {
    fn flush(&mut self) {
        let text = squash(&self.buf);
        let total = text.chars().filter(|c| !c.is_whitespace()).count();
        if total > 0 && (self.link_chars as f64) / (total as f64) <= MAX_LINK_DENSITY {
            self.blocks.push(text);
        }
        self.buf.clear();
        self.link_chars = 0;
    }

    fn walk(&mut self, el: ElementRef<'_>, in_link: bool) {
        for child in el.children() {
            if let Some(text) = child.value().as_text() {
                self.buf.push_str(text);
                if in_link {
                    self.link_chars += text.chars().filter(|c| !c.is_whitespace()).count();
                }
                continue;
            }
            let Some(ce) = ElementRef::wrap(child) else { continue };
            let name = ce.value().name();
            if SKIPPED.contains(&name) {
                continue;
            }
            if let Some(level) =
                name.strip_prefix('h').and_then(|l| l.parse::<usize>().ok()).filter(|l| (1..=6).contains(l))
            {
                self.flush();
                let title = squash(&ce.text().collect::<String>());
                if !title.is_empty() {
                    self.blocks.push(format!("{} {title}", "#".repeat(level)));
                }
                continue;
            }
            let block = BLOCKS.contains(&name);
            if block {
                self.flush();
            }
            self.walk(ce, in_link || name == "a");
            if block {
                self.flush();
            }
        }
    }
}

fn select_attr(html: &Html, selector: &str, attr: &str) -> Option<String> {
    let sel = Selector::parse(selector).ok()?;
    html.select(&sel).filter_map(|e| e.value().attr(attr)).map(squash).find(|s| !s.is_empty())
}

fn select_text(html: &Html, selector: &str) -> Option<String> {
    let sel = Selector::parse(selector).ok()?;
    html.select(&sel).map(|e| squash(&e.text().collect::<String>())).find(|s| !s.is_empty())
}

fn parse_date_prefix(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.get(..10)?, "%Y-%m-%d").ok()
}

fn parse_html(text: &str) -> ParsedDocument {
    let html = Html::parse_document(text);
    let metadata = DocMetadata {
        title: select_attr(&html, r#"meta[property="og:title"]"#, "content")
            .or_else(|| select_text(&html, "title"))
            .or_else(|| select_text(&html, "h1")),
        organization: select_attr(&html, r#"meta[property="og:site_name"]"#, "content")
            .or_else(|| select_attr(&html, r#"meta[name="publisher"]"#, "content"))
            .or_else(|| select_attr(&html, r#"meta[name="author"]"#, "content")),
        date: select_attr(&html, r#"meta[property="article:published_time"]"#, "content")
            .or_else(|| select_attr(&html, r#"meta[name="date"]"#, "content"))
            .or_else(|| select_attr(&html, r#"meta[name="dc.date"]"#, "content"))
            .or_else(|| select_attr(&html, "time[datetime]", "datetime"))
            .and_then(|d| parse_date_prefix(&d)),
        url: select_attr(&html, r#"link[rel="canonical"]"#, "href")
            .or_else(|| select_attr(&html, r#"meta[property="og:url"]"#, "content")),
    };
    let root = ["article", "main", "body"]
        .iter()
        .filter_map(|s| Selector::parse(s).ok())
        .find_map(|s| html.select(&s).next())
        .unwrap_or_else(|| html.root_element());
    let mut w = Walker::default();
    w.walk(root, false);
    w.flush();
    ParsedDocument { text: w.blocks.join("\n\n"), metadata }
}

fn parse_pdf_text(text: &str) -> ParsedDocument {
    let page_number = Regex::new(r"(?i)^(page\s+)?\d+(\s+(of|/)\s+\d+)?$").expect("valid regex");
    let heading = Regex::new(r"^(\d+(?:\.\d+)*)\.?\s+(\p{Lu}.{0,80})$").expect("valid regex");
    let pages: Vec<Vec<&str>> = text.split('\u{c}').map(|p| p.lines().map(str::trim).collect()).collect();
    let mut seen_on: BTreeMap<&str, usize> = BTreeMap::new();
    for page in &pages {
        let mut uniq: Vec<&str> = page.iter().copied().filter(|l| !l.is_empty()).collect();
        uniq.sort_unstable();
        uniq.dedup();
        for l in uniq {
            *seen_on.entry(l).or_default() += 1;
        }
    }
    let repeated = |l: &str| pages.len() >= 2 && seen_on.get(l).is_some_and(|&n| n >= 2 && 2 * n >= pages.len());

    let mut blocks: Vec<String> = Vec::new();
    let mut para: Vec<&str> = Vec::new();
    let flush = |para: &mut Vec<&str>, blocks: &mut Vec<String>| {
        if !para.is_empty() {
            blocks.push(squash(&para.join(" ")));
            para.clear();
        }
    };
    for page in &pages {
        for &line in page {
            if line.is_empty() {
                flush(&mut para, &mut blocks);
            } else if page_number.is_match(line) || repeated(line) {
                continue;
            } else if let Some(c) = heading.captures(line).filter(|c| !c[2].ends_with('.')) {
                flush(&mut para, &mut blocks);
                let depth = c[1].split('.').count();
                blocks.push(format!("{} {}", "#".repeat(depth.min(6)), squash(&c[2])));
            } else {
                para.push(line);
            }
        }
        flush(&mut para, &mut blocks);
    }
    let title = blocks.iter().find(|b| !b.starts_with('#')).cloned();
    ParsedDocument { text: blocks.join("\n\n"), metadata: DocMetadata { title, ..DocMetadata::default() } }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn navigation_and_scripts_are_dropped() {
        let html = r#"<html><head><title>T</title><meta name="author" content="Org"></head><body>
            <nav><a href="/">Home</a> <a href="/x">Other</a></nav>
            <article><h2>Heat</h2><p>Summers are <b>hot</b>.</p>
            <p><a href="/a">link one</a> <a href="/b">link two</a></p>
            <script>var x = 1;</script></article>
            <footer>Copyright</footer></body></html>"#;
        let d = parse_document(html.as_bytes(), DocKind::Html).unwrap();
        assert_eq!(d.text, "## Heat\n\nSummers are hot.");
        assert_eq!(d.metadata.title.as_deref(), Some("T"));
        assert_eq!(d.metadata.organization.as_deref(), Some("Org"));
    }

    #[test]
    fn empty_body_is_an_error() {
        let html = "<html><body><nav>menu</nav></body></html>";
        assert!(matches!(parse_document(html.as_bytes(), DocKind::Html), Err(TextError::EmptyAfterCleaning)));
        assert!(matches!("docx".parse::<DocKind>(), Err(TextError::UnsupportedFormat(_))));
    }

    #[test]
    fn pdf_text_drops_page_furniture() {
        let raw = "Climate Report 2023\n1 Introduction\nHeat is rising\nacross the Gulf.\n\nPage 1 of 2\n\u{c}Climate Report 2023\n2.1 Rainfall\nRain is scarce.\n2\n";
        let d = parse_document(raw.as_bytes(), DocKind::PdfText).unwrap();
        assert_eq!(d.text, "# Introduction\n\nHeat is rising across the Gulf.\n\n## Rainfall\n\nRain is scarce.");
    }
}
