//! Main-content extraction by text density.
//!
//! The document is walked block by block. Boilerplate elements are dropped
//! outright; every remaining run of inline content becomes a candidate block
//! and is kept when its text makes up a large enough share of its markup.

use ego_tree::NodeRef;
use scraper::{ElementRef, Html, Node};
use thiserror::Error;

/// Default floor on extracted text length, in characters.
pub const DEFAULT_MIN_CHARS: usize = 500;

/// Minimum text bytes per markup byte for a block to count as content.
const MIN_DENSITY: f64 = 0.3;

const DROPPED_TAGS: &[&str] = &[
    "script", "style", "noscript", "nav", "header", "footer", "aside", "form", "iframe", "svg", "template", "button",
    "select", "head", "object", "canvas", "dialog",
];

const DROPPED_ROLES: &[&str] = &["navigation", "banner", "contentinfo", "menu", "menubar", "search"];

/// class/id tokens that mark page chrome.
const BOILERPLATE_TOKENS: &[&str] = &[
    "nav",
    "navbar",
    "navigation",
    "menu",
    "footer",
    "header",
    "masthead",
    "breadcrumb",
    "breadcrumbs",
    "sidebar",
    "cookie",
    "cookies",
    "banner",
    "skip",
];

const BLOCK_TAGS: &[&str] = &[
    "address",
    "article",
    "blockquote",
    "body",
    "caption",
    "dd",
    "details",
    "div",
    "dl",
    "dt",
    "fieldset",
    "figcaption",
    "figure",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "hr",
    "html",
    "li",
    "main",
    "ol",
    "p",
    "pre",
    "section",
    "summary",
    "table",
    "tbody",
    "td",
    "tfoot",
    "th",
    "thead",
    "tr",
    "ul",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("empty input")]
    EmptyInput,
    #[error("extracted text too short: {chars} < {min} characters")]
    ExtractionEmpty { chars: usize, min: usize },
}

impl ExtractError {
    /// Reason recorded on a rejected snapshot.
    pub fn reason(&self) -> &'static str {
        match self {
            ExtractError::EmptyInput => "empty",
            ExtractError::ExtractionEmpty { .. } => "too-short",
        }
    }
}

/// Returns the main text of a page, one block per paragraph, separated by
/// blank lines.
pub fn extract_text(raw_html: &[u8], min_chars: usize) -> Result<String, ExtractError> {
    if raw_html.iter().all(u8::is_ascii_whitespace) {
        return Err(ExtractError::EmptyInput);
    }
    let source = String::from_utf8_lossy(raw_html);
    let doc = Html::parse_document(&source);
    let mut blocks = Vec::new();
    walk_block(doc.tree.root(), &mut blocks);
    let text = blocks.join("\n\n");
    let chars = text.chars().count();
    if chars < min_chars {
        return Err(ExtractError::ExtractionEmpty { chars, min: min_chars });
    }
    Ok(text)
}

fn is_dropped(node: NodeRef<'_, Node>) -> bool {
    let Some(el) = node.value().as_element() else {
        return matches!(node.value(), Node::Comment(_) | Node::ProcessingInstruction(_) | Node::Doctype(_));
    };
    if DROPPED_TAGS.contains(&el.name()) || el.attr("hidden").is_some() || el.attr("aria-hidden") == Some("true") {
        return true;
    }
    if el.attr("role").is_some_and(|r| DROPPED_ROLES.contains(&r.to_ascii_lowercase().as_str())) {
        return true;
    }
    let tokens = el.attr("class").into_iter().chain(el.attr("id"));
    tokens
        .flat_map(|v| v.split(|c: char| c.is_whitespace() || c == '-' || c == '_'))
        .any(|t| BOILERPLATE_TOKENS.contains(&t.to_ascii_lowercase().as_str()))
}

fn is_block(node: NodeRef<'_, Node>) -> bool {
    match node.value() {
        Node::Element(el) => BLOCK_TAGS.contains(&el.name()),
        Node::Document | Node::Fragment => true,
        _ => false,
    }
}

fn contains_block(node: NodeRef<'_, Node>) -> bool {
    node.descendants().skip(1).any(|d| is_block(d) && !d.ancestors().any(is_dropped))
}

fn walk_block<'a>(node: NodeRef<'a, Node>, blocks: &mut Vec<String>) {
    let mut run: Vec<NodeRef<'a, Node>> = Vec::new();
    for child in node.children() {
        if is_dropped(child) {
            continue;
        }
        if is_block(child) || (child.value().is_element() && contains_block(child)) {
            flush(&mut run, blocks);
            walk_block(child, blocks);
        } else {
            run.push(child);
        }
    }
    flush(&mut run, blocks);
}

fn flush(run: &mut Vec<NodeRef<'_, Node>>, blocks: &mut Vec<String>) {
    let mut text = String::new();
    let mut markup = 0usize;
    for node in run.drain(..) {
        collect_text(node, &mut text);
        markup += match node.value() {
            Node::Text(t) => t.len(),
            Node::Element(_) => ElementRef::wrap(node).map_or(0, |e| e.html().len()),
            _ => 0,
        };
    }
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if normalized.is_empty() || markup == 0 {
        return;
    }
    if normalized.len() as f64 / markup as f64 > MIN_DENSITY {
        blocks.push(normalized);
    }
}

fn collect_text(node: NodeRef<'_, Node>, out: &mut String) {
    if is_dropped(node) {
        return;
    }
    match node.value() {
        Node::Text(t) => out.push_str(t),
        Node::Element(el) if el.name() == "br" => out.push(' '),
        _ => node.children().for_each(|c| collect_text(c, out)),
    }
}

const TERMS_PHRASES: [&str; 4] = ["terms of service", "terms of use", "terms and conditions", "user agreement"];

/// True when a short heading-like paragraph naming terms of service comes
/// before the first mention of privacy, a hint that the policy is embedded
/// in a longer terms document.
pub fn terms_heading_precedes_privacy(text: &str) -> bool {
    for paragraph in text.split("\n\n") {
        let lower = paragraph.to_lowercase();
        let is_heading = paragraph.chars().count() <= 80;
        if is_heading && TERMS_PHRASES.iter().any(|p| lower.contains(p)) && !lower.contains("privacy") {
            return true;
        }
        if lower.contains("privacy") {
            return false;
        }
    }
    false
}
