//! Surface text features: syllables, words, sentences, words per sentence
//! and the passive-voice index.
//!
//! Sentence splitting is rule based. A sentence ends at a run of `.`, `!`
//! or `?` followed by whitespace and an uppercase letter, digit, bullet, or
//! the end of the text, unless the token carrying the period is a known
//! abbreviation. A line that ends without a terminator also ends a piece
//! when the next line is blank or starts like a new sentence; such pieces
//! (headings, bullets) count as sentences only with at least three words.

use std::collections::HashSet;
use std::ops::Range;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "inc.", "ltd.", "llc.", "co.", "corp.", "no.", "nos.", "mr.", "mrs.", "ms.", "dr.",
    "prof.", "st.", "vs.", "u.s.", "u.k.", "e.u.", "approx.", "dept.", "fig.", "jr.", "sr.", "art.", "sec.", "para.",
    "cf.", "viz.", "al.",
];

const BE_FORMS: &[&str] = &[
    "is",
    "are",
    "was",
    "were",
    "be",
    "been",
    "being",
    "am",
    "isn't",
    "aren't",
    "wasn't",
    "weren't",
    "isn’t",
    "aren’t",
    "wasn’t",
    "weren’t",
];

const ADVERBS: &[&str] = &[
    "not",
    "also",
    "never",
    "always",
    "only",
    "often",
    "usually",
    "still",
    "sometimes",
    "then",
    "further",
    "thereby",
    "generally",
    "already",
    "either",
    "neither",
    "just",
    "all",
    "both",
    "typically",
    "normally",
    "currently",
    "hereby",
    "otherwise",
];

const IRREGULAR_PARTICIPLES: &[&str] = &[
    "made",
    "paid",
    "sent",
    "kept",
    "held",
    "sold",
    "told",
    "found",
    "built",
    "bought",
    "brought",
    "thought",
    "taught",
    "caught",
    "put",
    "set",
    "read",
    "shown",
    "known",
    "given",
    "taken",
    "done",
    "seen",
    "written",
    "chosen",
    "gotten",
    "got",
    "left",
    "lost",
    "meant",
    "met",
    "run",
    "spent",
    "understood",
    "hidden",
    "bound",
    "dealt",
    "felt",
    "heard",
    "lent",
    "led",
    "said",
    "shut",
    "split",
    "spread",
    "struck",
    "sought",
    "withheld",
    "won",
    "hurt",
    "cut",
    "let",
    "cast",
    "broadcast",
    "forgotten",
    "forbidden",
    "undertaken",
    "overseen",
    "drawn",
    "driven",
    "fallen",
    "grown",
    "thrown",
    "worn",
    "sworn",
    "begun",
    "become",
    "come",
    "gone",
    "stolen",
    "frozen",
    "beaten",
    "bitten",
    "broken",
    "spoken",
    "woken",
    "forgiven",
    "mistaken",
];

// Words ending in -ed/-en that are not participles.
const NOT_PARTICIPLES: &[&str] = &[
    "indeed", "need", "speed", "seed", "feed", "breed", "shed", "hundred", "kindred", "sacred", "naked", "wicked",
    "when", "then", "even", "often", "open", "seven", "eleven", "token", "garden", "children", "citizen", "kitchen",
    "heaven", "women", "between", "screen", "green", "queen", "seen", "been", "listen", "happen", "chicken", "golden",
    "sudden", "hidden", "linen", "omen", "amen", "specimen", "abdomen",
];

fn set(
    words: &'static [&'static str],
    cell: &'static OnceLock<HashSet<&'static str>>,
) -> &'static HashSet<&'static str> {
    cell.get_or_init(|| words.iter().copied().collect())
}

fn abbreviations() -> &'static HashSet<&'static str> {
    static CELL: OnceLock<HashSet<&'static str>> = OnceLock::new();
    set(ABBREVIATIONS, &CELL)
}

fn be_forms() -> &'static HashSet<&'static str> {
    static CELL: OnceLock<HashSet<&'static str>> = OnceLock::new();
    set(BE_FORMS, &CELL)
}

fn adverbs() -> &'static HashSet<&'static str> {
    static CELL: OnceLock<HashSet<&'static str>> = OnceLock::new();
    set(ADVERBS, &CELL)
}

fn irregular() -> &'static HashSet<&'static str> {
    static CELL: OnceLock<HashSet<&'static str>> = OnceLock::new();
    set(IRREGULAR_PARTICIPLES, &CELL)
}

fn not_participles() -> &'static HashSet<&'static str> {
    static CELL: OnceLock<HashSet<&'static str>> = OnceLock::new();
    set(NOT_PARTICIPLES, &CELL)
}

/// Per-text features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextMetrics {
    pub syllables: usize,
    pub words: usize,
    pub sentences: usize,
    /// `None` when the text has no sentences.
    pub words_per_sentence: Option<f64>,
    /// Percentage of passive sentences; `None` when the text has no sentences.
    pub passive_index: Option<f64>,
}

/// A contiguous piece of text between sentence boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Piece {
    /// Byte range into the source text, trimmed of surrounding whitespace.
    pub range: Range<usize>,
    /// Whether the piece counts as a sentence.
    pub is_sentence: bool,
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '”' | '’' | ')' | ']' | '»')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '“' | '‘' | '(' | '[' | '«')
}

fn is_bullet(c: char) -> bool {
    matches!(c, '-' | '*' | '•' | '·' | '–' | '—' | '▪' | '◦')
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || is_bullet(c)
}

/// Splits `text` into pieces. Every non-whitespace character of `text`
/// belongs to exactly one piece.
pub(crate) fn pieces(text: &str) -> Vec<Piece> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let byte_at = |i: usize| if i < n { chars[i].0 } else { text.len() };
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;

    let push = |from: usize, to: usize, terminated: bool, out: &mut Vec<Piece>| {
        let raw = &text[from..to];
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return;
        }
        let lead = raw.len() - raw.trim_start().len();
        let range = from + lead..from + lead + trimmed.len();
        let n_words = word_count(trimmed);
        let is_sentence = n_words >= 1 && (terminated || n_words >= 3);
        out.push(Piece { range, is_sentence });
    };

    while i < n {
        let c = chars[i].1;
        if start.is_none() {
            if !c.is_whitespace() {
                start = Some(i);
            } else {
                i += 1;
                continue;
            }
        }
        let piece_start = start.unwrap();
        if is_terminator(c) {
            let mut j = i;
            while j < n && is_terminator(chars[j].1) {
                j += 1;
            }
            let single_period = j == i + 1 && c == '.';
            while j < n && is_closer(chars[j].1) {
                j += 1;
            }
            // j: first char after terminators and closers
            let mut k = j;
            let mut saw_newline = false;
            while k < n && chars[k].1.is_whitespace() {
                saw_newline |= chars[k].1 == '\n';
                k += 1;
            }
            let boundary = if k == n {
                true
            } else if k == j {
                false
            } else {
                let mut m = k;
                while m < n && is_opener(chars[m].1) {
                    m += 1;
                }
                let next_ok = m < n && starts_sentence(chars[m].1);
                (saw_newline || next_ok) && !(single_period && is_abbreviation(text, &chars, piece_start, i))
            };
            if boundary {
                push(byte_at(piece_start), byte_at(j), true, &mut out);
                start = None;
                i = k;
            } else {
                i = j;
            }
            continue;
        }
        if c == '\n' {
            let mut k = i + 1;
            let mut blank = false;
            while k < n && chars[k].1.is_whitespace() {
                blank |= chars[k].1 == '\n';
                k += 1;
            }
            if k == n || blank || starts_sentence(chars[k].1) || is_opener(chars[k].1) {
                push(byte_at(piece_start), byte_at(i), false, &mut out);
                start = None;
                i = k;
                continue;
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        push(byte_at(s), text.len(), false, &mut out);
    }
    out
}

/// Whether the period at char index `dot` closes an abbreviation rather
/// than a sentence.
fn is_abbreviation(text: &str, chars: &[(usize, char)], piece_start: usize, dot: usize) -> bool {
    let mut t = dot;
    while t > piece_start && !chars[t - 1].1.is_whitespace() {
        t -= 1;
    }
    let from = chars[t].0;
    let to = chars[dot].0 + 1;
    let token: String = text[from..to].trim_start_matches(is_opener).to_lowercase();
    if abbreviations().contains(token.as_str()) {
        return true;
    }
    let stem = &token[..token.len() - 1];
    // Initials ("J.") and list enumerators ("1.", "iv.") at the start of a piece.
    if stem.chars().count() == 1 && stem.chars().all(char::is_alphabetic) {
        return true;
    }
    t == piece_start
        && !stem.is_empty()
        && stem.len() <= 4
        && (stem.chars().all(|c| c.is_ascii_digit()) || stem.chars().all(|c| "ivxlc".contains(c)))
}

/// Sentences of `text`, in order, trimmed.
pub fn tokenize_sentences(text: &str) -> Vec<String> {
    pieces(text).into_iter().filter(|p| p.is_sentence).map(|p| text[p.range].to_string()).collect()
}

/// Words: maximal runs of alphanumeric characters, keeping apostrophes that
/// sit between two alphanumerics ("don't").
pub fn words(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (idx, &(b, c)) in chars.iter().enumerate() {
        let inner_apostrophe =
            matches!(c, '\'' | '’') && start.is_some() && chars.get(idx + 1).is_some_and(|&(_, n)| n.is_alphanumeric());
        if c.is_alphanumeric() || inner_apostrophe {
            start.get_or_insert(b);
        } else if let Some(s) = start.take() {
            out.push(&text[s..b]);
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

fn word_count(text: &str) -> usize {
    words(text).len()
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate.
///
/// Counts maximal runs of `a e i o u y` (a leading `y` is a consonant),
/// drops a final silent `e` unless the word ends in consonant + `le`, and
/// never returns less than one for a word containing a letter.
pub fn count_syllables(word: &str) -> usize {
    let lower: Vec<char> = word.to_lowercase().chars().collect();
    if !lower.iter().any(|c| c.is_alphabetic()) {
        return 0;
    }
    let vowel_at = |i: usize| is_vowel(lower[i]) && !(i == 0 && lower[i] == 'y');
    let mut runs = 0;
    let mut in_run = false;
    for i in 0..lower.len() {
        let v = vowel_at(i);
        if v && !in_run {
            runs += 1;
        }
        in_run = v;
    }
    let n = lower.len();
    if n >= 2 && lower[n - 1] == 'e' && !vowel_at(n - 2) {
        let consonant_le = n >= 3 && lower[n - 2] == 'l' && !vowel_at(n - 3);
        if !consonant_le {
            runs -= 1;
        }
    }
    runs.max(1)
}

fn is_participle(token: &str) -> bool {
    if irregular().contains(token) {
        return true;
    }
    if not_participles().contains(token) {
        return false;
    }
    let n = token.chars().count();
    (token.ends_with("ed") && n >= 4) || (token.ends_with("en") && n >= 5)
}

fn is_adverb(token: &str) -> bool {
    adverbs().contains(token) || (token.ends_with("ly") && token.chars().count() > 4)
}

/// Lexical passive rule: a form of "be" followed, within three tokens and
/// skipping adverbs, by a past participle.
pub fn is_passive_sentence(sentence: &str) -> bool {
    let tokens: Vec<String> = words(sentence).iter().map(|w| w.to_lowercase()).collect();
    for (i, tok) in tokens.iter().enumerate() {
        if !be_forms().contains(tok.as_str()) {
            continue;
        }
        for next in tokens.iter().skip(i + 1).take(3) {
            if is_adverb(next) {
                continue;
            }
            if is_participle(next) {
                return true;
            }
            break;
        }
    }
    false
}

/// Percentage of sentences of `text` that are passive; `None` with no sentences.
pub fn passive_index(text: &str) -> Option<f64> {
    let sentences = tokenize_sentences(text);
    if sentences.is_empty() {
        return None;
    }
    let passive = sentences.iter().filter(|s| is_passive_sentence(s)).count();
    Some(100.0 * passive as f64 / sentences.len() as f64)
}

pub fn compute_metrics(text: &str) -> TextMetrics {
    let all_words = words(text);
    let syllables = all_words.iter().map(|w| count_syllables(w)).sum();
    let sentences = tokenize_sentences(text);
    let n_sent = sentences.len();
    let passive = sentences.iter().filter(|s| is_passive_sentence(s)).count();
    TextMetrics {
        syllables,
        words: all_words.len(),
        sentences: n_sent,
        words_per_sentence: (n_sent > 0).then(|| all_words.len() as f64 / n_sent as f64),
        passive_index: (n_sent > 0).then(|| 100.0 * passive as f64 / n_sent as f64),
    }
}

/// One token of a dependency parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepToken {
    pub index: usize,
    pub token: String,
    pub label: String,
}

#[derive(Debug, Error)]
pub enum DepParseError {
    #[error("line {line}: expected `index token label`, got {content:?}")]
    BadLine { line: usize, content: String },
}

/// Parses a dependency sidecar: one token per line as `index token label`
/// (tab or space separated); blank lines separate sentences.
pub fn parse_dependency_sidecar(doc: &str) -> Result<Vec<Vec<DepToken>>, DepParseError> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (lineno, line) in doc.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let bad = || DepParseError::BadLine { line: lineno + 1, content: line.to_string() };
        if fields.len() != 3 {
            return Err(bad());
        }
        current.push(DepToken {
            index: fields[0].parse().map_err(|_| bad())?,
            token: fields[1].to_string(),
            label: fields[2].to_lowercase(),
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

/// Parse-based passive rule: an `nsubjpass` token followed later in the
/// sentence by an `auxpass` token, with an `aux` in between allowed but
/// not required.
pub fn is_passive_parse(sentence: &[DepToken]) -> bool {
    let mut tokens: Vec<&DepToken> = sentence.iter().collect();
    tokens.sort_by_key(|t| t.index);
    match tokens.iter().position(|t| t.label == "nsubjpass") {
        Some(subj) => tokens[subj + 1..].iter().any(|t| t.label == "auxpass"),
        None => false,
    }
}

pub fn passive_index_from_parses(sentences: &[Vec<DepToken>]) -> Option<f64> {
    if sentences.is_empty() {
        return None;
    }
    let passive = sentences.iter().filter(|s| is_passive_parse(s)).count();
    Some(100.0 * passive as f64 / sentences.len() as f64)
}
