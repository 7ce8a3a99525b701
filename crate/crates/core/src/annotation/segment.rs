use thiserror::Error;

use crate::textmetrics::pieces;

/// Longest run of sentences kept in one segment.
pub const MAX_SENTENCES_PER_SEGMENT: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("cannot segment empty text")]
    EmptyInput,
}

/// Splits a policy into segments: one per blank-line separated paragraph,
/// with paragraphs longer than [`MAX_SENTENCES_PER_SEGMENT`] sentences cut
/// into consecutive runs of at most that many sentences.
///
/// Fragments that do not count as sentences (short headings) stay attached
/// to the run they fall in, so the segments cover the whole input.
pub fn segment_text(policy_text: &str) -> Result<Vec<String>, SegmentError> {
    if policy_text.trim().is_empty() {
        return Err(SegmentError::EmptyInput);
    }
    let mut segments = Vec::new();
    for paragraph in paragraphs(policy_text) {
        let mut run_start: Option<usize> = None;
        let mut run_end = 0;
        let mut sentences = 0;
        for piece in pieces(paragraph) {
            if piece.is_sentence && sentences == MAX_SENTENCES_PER_SEGMENT {
                if let Some(s) = run_start.take() {
                    segments.push(paragraph[s..run_end].to_string());
                }
                sentences = 0;
            }
            run_start.get_or_insert(piece.range.start);
            run_end = piece.range.end;
            if piece.is_sentence {
                sentences += 1;
            }
        }
        if let Some(s) = run_start {
            segments.push(paragraph[s..run_end].to_string());
        }
    }
    Ok(segments)
}

fn paragraphs(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut offset = 0;
    let mut blank_run = false;
    for line in text.split_inclusive('\n') {
        let is_blank = line.trim().is_empty();
        if is_blank && !blank_run {
            let chunk = &text[start..offset];
            if !chunk.trim().is_empty() {
                out.push(chunk.trim());
            }
        }
        offset += line.len();
        if is_blank {
            start = offset;
        }
        blank_run = is_blank;
    }
    let tail = &text[start..];
    if !tail.trim().is_empty() {
        out.push(tail.trim());
    }
    out
}
