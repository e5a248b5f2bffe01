#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn gflavor() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gflavor"))
}

pub fn run(args: &[&str]) -> Output {
    gflavor().args(args).output().expect("spawn gflavor")
}

pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    gflavor()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn gflavor")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Parses `[-]int[.frac]` to units of 10^-5 without going through the
/// library's number type.
pub fn scaled(text: &str) -> i64 {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.trim_start_matches('+')),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let int: i64 = if int.is_empty() {
        0
    } else {
        int.parse().unwrap()
    };
    let mut f: i64 = 0;
    for (i, d) in frac.bytes().enumerate() {
        if i < 5 {
            f += i64::from(d - b'0') * 10i64.pow(4 - i as u32);
        }
    }
    let v = int * 100_000 + f;
    if neg {
        -v
    } else {
        v
    }
}

/// The `E` word of a move line split out: text without the number, and
/// the number.
pub fn split_e(line: &str) -> Option<(String, i64)> {
    let code = line.split(';').next().unwrap();
    let words: Vec<&str> = code.split_whitespace().collect();
    let cmd = words.first()?.to_ascii_uppercase();
    if !(cmd == "G1" || cmd == "G0" || cmd == "G92") {
        return None;
    }
    let pos = line.find(" E")? + 2;
    let end = line[pos..]
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+'))
        .map_or(line.len(), |i| pos + i);
    let value = scaled(&line[pos..end]);
    Some((format!("{}{}", &line[..pos], &line[end..]), value))
}

/// Line ranges of each layer, found by splitting at lines that start with
/// `marker`. The last layer stops after the file's final extruding move.
pub fn marker_layers(text: &str, marker: &str) -> Vec<std::ops::Range<usize>> {
    let lines: Vec<&str> = text.lines().collect();
    let is_extrusion = |l: &str| split_e(l).is_some() && l.starts_with("G1") && l.contains(" X");
    let last = lines.iter().rposition(|l| is_extrusion(l)).unwrap();
    let starts: Vec<usize> = (0..=last)
        .filter(|&i| lines[i].starts_with(marker))
        .collect();
    starts
        .iter()
        .enumerate()
        .map(|(k, &s)| s..starts.get(k + 1).copied().unwrap_or(last + 1))
        .collect()
}

/// Every line of `text` with its E number split out and replaced by the
/// per-move amount (difference to the previous cumulative value).
pub fn relative_oracle(text: &str) -> Vec<(String, Option<i64>)> {
    let mut prev = 0;
    text.lines()
        .map(|l| match split_e(l) {
            Some((rest, v)) if l.starts_with("G92") => {
                prev = v;
                (rest, Some(v))
            }
            Some((rest, v)) => {
                let d = v - prev;
                prev = v;
                (rest, Some(d))
            }
            None => (l.to_string(), None),
        })
        .collect()
}

/// Cumulative E of the last E-bearing G0/G1 before line `upto` of `text`,
/// following G92 resets.
pub fn e_before(text: &str, upto: usize) -> i64 {
    let mut e = 0;
    for line in text.lines().take(upto) {
        if let Some((_, v)) = split_e(line) {
            e = v;
        }
    }
    e
}

/// Prefix-sums per-move E values back to cumulative values, starting at
/// `start`. Returns (text without E number, absolute E) for E lines and the
/// raw text otherwise.
pub fn absolutize(lines: &[&str], start: i64) -> Vec<(String, Option<i64>)> {
    let mut e = start;
    lines
        .iter()
        .map(|l| match split_e(l) {
            Some((rest, v)) if l.starts_with("G92") => {
                e = v;
                (rest, Some(v))
            }
            Some((rest, v)) => {
                e += v;
                (rest, Some(e))
            }
            None => (l.to_string(), None),
        })
        .collect()
}

pub fn with_e_split(lines: &[&str]) -> Vec<(String, Option<i64>)> {
    lines
        .iter()
        .map(|l| match split_e(l) {
            Some((rest, v)) => (rest, Some(v)),
            None => (l.to_string(), None),
        })
        .collect()
}
