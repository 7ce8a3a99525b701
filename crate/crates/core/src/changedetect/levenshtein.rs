//! Unit-cost edit distance over Unicode scalar values.
//!
//! Common prefixes and suffixes are stripped first; the remainder runs the
//! blocked bit-vector recurrence (Myers, with Hyyrö's block carry), which
//! processes 64 pattern rows per machine word.

use std::collections::HashMap;

const WORD: usize = 64;

/// Levenshtein distance between `a` and `b`.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

pub(crate) fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    // The shorter string is the pattern, one bit per character.
    let (pattern, text) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if pattern.is_empty() {
        return text.len();
    }
    bit_parallel(pattern, text)
}

fn bit_parallel(pattern: &[char], text: &[char]) -> usize {
    let m = pattern.len();
    let blocks = m.div_ceil(WORD);
    let mut peq: HashMap<char, Vec<u64>> = HashMap::new();
    for (i, &c) in pattern.iter().enumerate() {
        peq.entry(c).or_insert_with(|| vec![0; blocks])[i / WORD] |= 1 << (i % WORD);
    }
    let zeros = vec![0u64; blocks];
    let last_bit = 1u64 << ((m - 1) % WORD);
    let high_bit = 1u64 << (WORD - 1);

    let mut pv = vec![!0u64; blocks];
    let mut mv = vec![0u64; blocks];
    let mut score = m;
    for c in text {
        let eqs = peq.get(c).unwrap_or(&zeros);
        // Row 0 grows by one per column.
        let mut carry: i8 = 1;
        for blk in 0..blocks {
            let (p, mneg) = (pv[blk], mv[blk]);
            let mut eq = eqs[blk];
            let xv = eq | mneg;
            if carry < 0 {
                eq |= 1;
            }
            let xh = (((eq & p).wrapping_add(p)) ^ p) | eq;
            let mut ph = mneg | !(xh | p);
            let mut mh = p & xh;
            let probe = if blk + 1 == blocks { last_bit } else { high_bit };
            let out: i8 = if ph & probe != 0 {
                1
            } else if mh & probe != 0 {
                -1
            } else {
                0
            };
            ph <<= 1;
            mh <<= 1;
            if carry < 0 {
                mh |= 1;
            } else if carry > 0 {
                ph |= 1;
            }
            pv[blk] = mh | !(xv | ph);
            mv[blk] = ph & xv;
            carry = out;
        }
        score = (score as isize + carry as isize) as usize;
    }
    score
}

/// `1 - d / max(|a|, |b|)` in characters; two empty strings are identical.
pub fn similarity_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein_chars(&a, &b) as f64 / longest as f64
}
