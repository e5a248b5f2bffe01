//! Alignment of two flavor-variant encodings of the same layer.
//!
//! Contours are matched through [`LineKey`]s, flavor-independent strings
//! built from the coordinates of an extruding move and its two successors.
//! Once the contours of layer B are permuted into A's order, both layers are
//! cut into chunk pairs whose boundaries fall on lines with equal keys.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};
use core::num::NonZeroUsize;
use core::ops::Range;

use hashbrown::hash_map::Entry;
use hashbrown::HashMap;

use crate::layer::Contour;
use crate::line::GcodeLine;

/// Stands in for a missing follower line in a [`LineKey`].
pub const EMPTY_TOKEN: &str = "<EMPTY>";

/// Flavor-stripped representation of an extruding move.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LineKey(String);

impl LineKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LineKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn push_coordinates(out: &mut String, line: &GcodeLine) {
    let mut first = true;
    for letter in ['X', 'Y', 'Z'] {
        if let Some(v) = line.value(letter) {
            if !first {
                out.push(' ');
            }
            first = false;
            // Canonical rendering, so `X10.500` and `X10.5` agree.
            let _ = write!(out, "{letter}{v}");
        }
    }
}

/// Key of line `i` in `contour`, or `None` when it is not an extruding move.
pub fn line_key(contour: &Contour, i: usize) -> Option<LineKey> {
    key_at(&contour.lines, i)
}

fn key_at(lines: &[GcodeLine], i: usize) -> Option<LineKey> {
    if !lines.get(i)?.is_extruding() {
        return None;
    }
    let mut key = String::new();
    push_coordinates(&mut key, &lines[i]);
    let mut run_open = true;
    for offset in 1..=2 {
        key.push_str(" | ");
        match lines.get(i + offset) {
            Some(next) if run_open && next.is_extruding() => push_coordinates(&mut key, next),
            _ => {
                run_open = false;
                key.push_str(EMPTY_TOKEN);
            }
        }
    }
    Some(LineKey(key))
}

/// Keys for every line of every contour, in layer order.
pub fn contour_keys(contours: &[Contour]) -> Vec<Option<LineKey>> {
    contours
        .iter()
        .flat_map(|c| (0..c.lines.len()).map(move |i| line_key(c, i)))
        .collect()
}

/// Correspondence from contours of layer A to contours of layer B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContourMapping {
    /// `forward[i]` is the B contour matching A contour `i`.
    pub forward: Vec<Option<usize>>,
    pub matched_count: usize,
    /// Number of A contours.
    pub total: usize,
    pub b_total: usize,
}

impl ContourMapping {
    pub fn is_complete(&self) -> bool {
        self.matched_count == self.total && self.total == self.b_total
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlipError {
    #[error("matched {} of {} contours (layer B has {})", .0.matched_count, .0.total, .0.b_total)]
    IncompleteMapping(ContourMapping),
    #[error("contours {} and {} of layer A both match contour {b_contour} of layer B", a_contours[0], a_contours[1])]
    ConflictingMapping {
        b_contour: usize,
        a_contours: [usize; 2],
    },
    #[error("contour {a_contour} of layer A matches contours {} and {} of layer B", b_contours[0], b_contours[1])]
    AmbiguousContour {
        a_contour: usize,
        b_contours: [usize; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlippedLayer {
    pub mapping: ContourMapping,
    /// `contours[i]` is the B contour equivalent to A contour `i`.
    pub contours: Vec<Contour>,
}

impl FlippedLayer {
    pub fn lines(&self) -> Vec<GcodeLine> {
        crate::layer::join_contours(&self.contours)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Unique(usize),
    Ambiguous,
}

/// Permutes the contours of `b` into the order of `a`.
///
/// A key seen in two different B contours is removed from the lookup for
/// good. An A contour matches a B contour when any of its keys hits.
pub fn contour_flip(a: &[Contour], b: &[Contour]) -> Result<FlippedLayer, FlipError> {
    let mut lookup: HashMap<LineKey, Slot> = HashMap::new();
    for (cb, contour) in b.iter().enumerate() {
        for i in 0..contour.lines.len() {
            let Some(key) = line_key(contour, i) else {
                continue;
            };
            match lookup.entry(key) {
                Entry::Vacant(v) => {
                    v.insert(Slot::Unique(cb));
                }
                Entry::Occupied(mut o) => {
                    if *o.get() != Slot::Unique(cb) {
                        o.insert(Slot::Ambiguous);
                    }
                }
            }
        }
    }

    let mut forward: Vec<Option<usize>> = alloc::vec![None; a.len()];
    let mut owner: Vec<Option<usize>> = alloc::vec![None; b.len()];
    for (ca, contour) in a.iter().enumerate() {
        for i in 0..contour.lines.len() {
            let Some(key) = line_key(contour, i) else {
                continue;
            };
            let Some(&Slot::Unique(cb)) = lookup.get(&key) else {
                continue;
            };
            match forward[ca] {
                None => forward[ca] = Some(cb),
                Some(prev) if prev != cb => {
                    return Err(FlipError::AmbiguousContour {
                        a_contour: ca,
                        b_contours: [prev, cb],
                    })
                }
                Some(_) => {}
            }
        }
        if let Some(cb) = forward[ca] {
            if let Some(other) = owner[cb] {
                return Err(FlipError::ConflictingMapping {
                    b_contour: cb,
                    a_contours: [other, ca],
                });
            }
            owner[cb] = Some(ca);
        }
    }

    let mapping = ContourMapping {
        matched_count: forward.iter().flatten().count(),
        total: a.len(),
        b_total: b.len(),
        forward,
    };
    if !mapping.is_complete() {
        return Err(FlipError::IncompleteMapping(mapping));
    }
    let contours = mapping
        .forward
        .iter()
        .map(|cb| b[cb.expect("complete mapping")].clone())
        .collect();
    Ok(FlippedLayer { mapping, contours })
}

/// Aligned pair of segments from layers A and B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPair {
    pub a: Vec<GcodeLine>,
    pub b: Vec<GcodeLine>,
    pub a_span: Range<usize>,
    pub b_span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PairError {
    #[error("max length {0} is below the minimum of 2")]
    MaxLengthTooSmall(usize),
    #[error("no matching cut line after A line {a_start} / B line {b_start}")]
    NoCutFound { a_start: usize, b_start: usize },
}

/// Cuts two contour-aligned layers into chunk pairs of at most `max_length`
/// lines per side.
///
/// Chunks are taken greedily from the front. The A-side cut starts
/// `max_length` lines ahead and moves back one line at a time until the line
/// at the cut has a key that also appears within the next `max_length` lines
/// of B. Both chunks end just before the matching lines, so every chunk but
/// the first opens on a pair of equal-key lines.
///
/// Only keys that occur exactly once in each layer are used as cut points.
/// A repeated key cannot tell which of its occurrences corresponds.
pub fn pair_creation(
    a: &[Contour],
    b: &[Contour],
    max_length: usize,
) -> Result<Vec<ChunkPair>, PairError> {
    if max_length < 2 {
        return Err(PairError::MaxLengthTooSmall(max_length));
    }
    let a_lines: Vec<&GcodeLine> = a.iter().flat_map(|c| c.lines.iter()).collect();
    let b_lines: Vec<&GcodeLine> = b.iter().flat_map(|c| c.lines.iter()).collect();
    let a_keys = contour_keys(a);
    let b_keys = contour_keys(b);
    let (a_len, b_len) = (a_lines.len(), b_lines.len());

    let mut counts: HashMap<&LineKey, [usize; 2]> = HashMap::new();
    for (side, keys) in [&a_keys, &b_keys].into_iter().enumerate() {
        for key in keys.iter().flatten() {
            counts.entry(key).or_default()[side] += 1;
        }
    }
    let unique = |key: &LineKey| counts.get(key) == Some(&[1, 1]);

    let chunk = |a_span: Range<usize>, b_span: Range<usize>| ChunkPair {
        a: a_lines[a_span.clone()].iter().map(|&l| l.clone()).collect(),
        b: b_lines[b_span.clone()].iter().map(|&l| l.clone()).collect(),
        a_span,
        b_span,
    };

    let mut pairs = Vec::new();
    let (mut a_start, mut b_start) = (0, 0);
    while a_start < a_len || b_start < b_len {
        if a_len - a_start <= max_length && b_len - b_start <= max_length {
            pairs.push(chunk(a_start..a_len, b_start..b_len));
            break;
        }

        let b_window = b_start + 1..(b_start + max_length).min(b_len.saturating_sub(1)) + 1;
        let mut cut = None;
        let mut a_end = (a_start + max_length).min(a_len.saturating_sub(1));
        while a_end > a_start {
            if let Some(key) = a_keys[a_end].as_ref().filter(|k| unique(k)) {
                if let Some(b_end) = b_window.clone().find(|&j| b_keys[j].as_ref() == Some(key)) {
                    cut = Some((a_end, b_end));
                    break;
                }
            }
            a_end -= 1;
        }

        let Some((a_end, b_end)) = cut else {
            return Err(PairError::NoCutFound { a_start, b_start });
        };
        pairs.push(chunk(a_start..a_end, b_start..b_end));
        a_start = a_end;
        b_start = b_end;
    }
    Ok(pairs)
}

/// Consecutive segments of exactly `size` lines; the last may be shorter.
pub fn fixed_chunks(lines: &[GcodeLine], size: NonZeroUsize) -> Vec<&[GcodeLine]> {
    lines.chunks(size.get()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::split_contour_lines;
    use crate::line::Flavor;
    use crate::parse::parse_file;
    use alloc::format;
    use alloc::vec;

    fn lines(text: &str) -> Vec<GcodeLine> {
        parse_file(text, Flavor::Marlin).lines
    }

    fn contours(text: &str) -> Vec<Contour> {
        split_contour_lines(&lines(text))
    }

    #[test]
    fn key_with_two_followers() {
        let c = contours("G1 X1 Y1 E1\nG1 X2 Y1 E2\nG1 X3 Y1 E3");
        assert_eq!(
            line_key(&c[0], 0).unwrap().as_str(),
            "X1 Y1 | X2 Y1 | X3 Y1"
        );
    }

    #[test]
    fn key_at_run_end_uses_sentinels() {
        let c = contours("G1 X1 Y1 E1\nG1 X2 Y1 E2\nG1 E1.5");
        assert_eq!(
            line_key(&c[0], 1).unwrap().as_str(),
            "X2 Y1 | <EMPTY> | <EMPTY>"
        );
        assert_eq!(
            line_key(&c[0], 0).unwrap().as_str(),
            "X1 Y1 | X2 Y1 | <EMPTY>"
        );
    }

    #[test]
    fn travel_has_no_key() {
        let c = contours("G0 X0 Y0\nG1 X1 Y1 E1");
        assert_eq!(line_key(&c[0], 0), None);
        assert!(line_key(&c[0], 1).is_some());
    }

    #[test]
    fn key_ignores_number_formatting_and_feed() {
        let a = contours("G1 X10.500 Y3.0 E1.00000 F1800");
        let b = contours("G1 X10.5 Y3 E.7");
        assert_eq!(line_key(&a[0], 0), line_key(&b[0], 0));
        let z = contours("G1 X10.5 Y3 Z0.2 E.7");
        assert_ne!(line_key(&z[0], 0), line_key(&b[0], 0));
    }

    fn unique_contours(n: usize, salt: u32) -> Vec<String> {
        (0..n)
            .map(|c| {
                let mut s = format!("G0 X{}.{} Y0\n", c * 10, salt);
                for k in 0..4 {
                    s.push_str(&format!(
                        "G1 X{}.{} Y{}.{} E{}\n",
                        c * 10 + k,
                        salt,
                        k,
                        c,
                        k + 1
                    ));
                }
                s
            })
            .collect()
    }

    #[test]
    fn identity_flip() {
        let text: String = unique_contours(4, 1).concat();
        let a = contours(&text);
        let flipped = contour_flip(&a, &a).unwrap();
        assert_eq!(
            flipped.mapping.forward,
            vec![Some(0), Some(1), Some(2), Some(3)]
        );
        assert_eq!(flipped.contours, a);
    }

    #[test]
    fn duplicate_key_across_b_contours_is_dropped() {
        // Contours 0 and 1 of B share an identical three-line run; only the
        // remaining unique lines can match.
        let shared = "G1 X1 Y1 E1\nG1 X2 Y1 E2\nG1 X3 Y1 E3\n";
        let b_text = format!("G0 X0 Y0\n{shared}G0 X9 Y9\n{shared}G1 X7 Y7 E4\n");
        let b = contours(&b_text);
        let a = contours("G0 X9 Y9\nG1 X3 Y1 E3\nG1 X7 Y7 E4\n");
        let err = contour_flip(&a, &b).unwrap_err();
        // "X3 Y1 | X7 Y7 | <EMPTY>" only lives in B contour 1.
        match err {
            FlipError::IncompleteMapping(m) => {
                assert_eq!(m.forward, vec![Some(1)]);
                assert_eq!(m.b_total, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conflicting_claims_are_rejected() {
        let b = contours("G0 X0 Y0\nG1 X1 Y1 E1\nG1 X2 Y2 E2\n");
        let a = contours("G0 X0 Y0\nG1 X2 Y2 E2\nG0 X5 Y5\nG1 X2 Y2 E2\n");
        assert!(matches!(
            contour_flip(&a, &b),
            Err(FlipError::ConflictingMapping {
                b_contour: 0,
                a_contours: [0, 1]
            })
        ));
    }

    #[test]
    fn max_length_must_be_two() {
        let c = contours("G1 X1 Y1 E1");
        assert_eq!(
            pair_creation(&c, &c, 1),
            Err(PairError::MaxLengthTooSmall(1))
        );
    }

    #[test]
    fn five_lines_in_twos() {
        let c = contours("G1 X1 Y0 E1\nG1 X2 Y0 E2\nG1 X3 Y0 E3\nG1 X4 Y0 E4\nG1 X5 Y0 E5");
        let pairs = pair_creation(&c, &c, 2).unwrap();
        let sizes: Vec<usize> = pairs.iter().map(|p| p.a.len()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        assert!(pairs.iter().all(|p| p.a_span == p.b_span));
    }

    #[test]
    fn self_pair_in_twenties() {
        let mut text = String::new();
        for k in 0..65 {
            text.push_str(&format!("G1 X{k} Y{} E{k}\n", k % 7));
        }
        let c = contours(&text);
        let pairs = pair_creation(&c, &c, 20).unwrap();
        let sizes: Vec<usize> = pairs.iter().map(|p| p.a.len()).collect();
        assert_eq!(sizes, vec![20, 20, 20, 5]);
        assert!(pairs.iter().all(|p| p.a_span == p.b_span && p.a == p.b));
    }

    #[test]
    fn no_cut_found_when_nothing_matches() {
        let mut a_text = String::new();
        let mut b_text = String::new();
        for k in 0..10 {
            a_text.push_str(&format!("G1 X{k} Y0 E{k}\n"));
            b_text.push_str(&format!("G1 X{k} Y1 E{k}\n"));
        }
        let (a, b) = (contours(&a_text), contours(&b_text));
        assert_eq!(
            pair_creation(&a, &b, 4),
            Err(PairError::NoCutFound {
                a_start: 0,
                b_start: 0
            })
        );
    }

    #[test]
    fn repeated_keys_are_not_cut_points() {
        // Both contours end on the same point, so that line has the same key
        // twice in each layer.
        let text = "G0 X0 Y0\nG1 X1 Y0 E1\nG1 X2 Y0 E2\nG1 X9 Y9 E3\n\
                    G0 X0 Y5\nG1 X3 Y0 E4\nG1 X4 Y0 E5\nG1 X9 Y9 E6\n\
                    G0 X0 Y7\nG1 X5 Y0 E7\nG1 X6 Y0 E8\n";
        let c = contours(text);
        let pairs = pair_creation(&c, &c, 4).unwrap();
        let cuts: Vec<usize> = pairs.iter().skip(1).map(|p| p.a_span.start).collect();
        assert_eq!(cuts, vec![2, 6, 10]);
    }

    #[test]
    fn fixed_chunk_sizes() {
        let text: String = (0..45).map(|k| format!("G1 X{k} Y0 E{k}\n")).collect();
        let ls = lines(&text);
        let size = NonZeroUsize::new(20).unwrap();
        let sizes: Vec<usize> = fixed_chunks(&ls, size).iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![20, 20, 5]);
        assert_eq!(fixed_chunks(&ls[..20], size).len(), 1);
        assert!(fixed_chunks(&[], size).is_empty());
        let joined: Vec<GcodeLine> = fixed_chunks(&ls, size).concat();
        assert_eq!(joined, ls);
    }
}
