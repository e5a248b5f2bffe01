//! Lenient line parser.
//!
//! Every input line produces a [`GcodeLine`]. Lines that cannot be understood
//! are kept verbatim, classified [`LineKind::Other`] and reported as
//! diagnostics instead of being dropped.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::line::{Command, Flavor, GcodeLine, LineError, LineKind, NumericToken, Param, Piece};

/// `M` commands whose argument is free text rather than parameter words.
const STRING_ARGUMENT_COMMANDS: &[u32] = &[23, 28, 30, 32, 117, 118, 928];

/// Parser configured for one flavor and its layer-marker comments.
#[derive(Debug, Clone)]
pub struct LineParser {
    flavor: Flavor,
    markers: Vec<String>,
}

impl LineParser {
    pub fn new(flavor: Flavor) -> Self {
        Self::with_markers(flavor, flavor.default_layer_markers().iter().copied())
    }

    /// Uses `markers` instead of the flavor defaults. Matching is a
    /// case-insensitive prefix test against the comment line with leading
    /// whitespace removed, e.g. `";LAYER_CHANGE"` or `"; layer"`.
    pub fn with_markers<I, S>(flavor: Flavor, markers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        LineParser {
            flavor,
            markers: markers
                .into_iter()
                .map(|m| m.as_ref().to_lowercase())
                .filter(|m| !m.is_empty())
                .collect(),
        }
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn markers(&self) -> &[String] {
        &self.markers
    }

    /// Parses one line. `text` should not contain `\n`; if it does, the
    /// newline is kept as opaque text.
    pub fn parse_line(&self, text: &str) -> GcodeLine {
        let mut b = Builder::default();
        let (code, comment) = match text.find(';') {
            Some(i) => (&text[..i], Some(&text[i + 1..])),
            None => (text, None),
        };
        b.scan(code);
        b.flush();
        if let Some(comment) = comment {
            b.comment = Some(comment.to_string());
            b.pieces.push(Piece::Comment);
        }
        let kind = b.classify(|| self.is_marker(text));
        let line = GcodeLine {
            raw: String::new(),
            pieces: b.pieces,
            line_number: b.line_number,
            checksum: b.checksum,
            command: b.command,
            params: b.params,
            flags: b.flags,
            comment: b.comment,
            kind,
            error: b.error,
        };
        let raw = line.serialize();
        debug_assert_eq!(raw, text);
        GcodeLine { raw, ..line }
    }

    /// Splits on `\n` and parses every line.
    pub fn parse_file(&self, text: &str) -> ParsedFile {
        let (body, trailing_newline) = match text.strip_suffix('\n') {
            Some(body) => (body, true),
            None => (text, false),
        };
        let mut lines = Vec::new();
        let mut diagnostics = Vec::new();
        if !(body.is_empty() && !trailing_newline) {
            for (index, raw) in body.split('\n').enumerate() {
                let line = self.parse_line(raw);
                if let Some(err) = line.error() {
                    diagnostics.push(Diagnostic {
                        line: index,
                        error: err.clone(),
                    });
                }
                lines.push(line);
            }
        }
        ParsedFile {
            flavor: self.flavor,
            lines,
            trailing_newline,
            diagnostics,
        }
    }

    fn is_marker(&self, text: &str) -> bool {
        let head = text.trim_start();
        self.markers.iter().any(|m| {
            head.len() >= m.len()
                && head.is_char_boundary(m.len())
                && head[..m.len()].to_lowercase() == *m
        })
    }
}

/// Parses a line with the flavor's default layer markers.
pub fn parse_line(text: &str, flavor: Flavor) -> GcodeLine {
    LineParser::new(flavor).parse_line(text)
}

/// Parses a whole file with the flavor's default layer markers.
pub fn parse_file(text: &str, flavor: Flavor) -> ParsedFile {
    LineParser::new(flavor).parse_file(text)
}

/// A parse problem attached to a zero-based line index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub error: LineError,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line + 1, self.error)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFile {
    pub flavor: Flavor,
    pub lines: Vec<GcodeLine>,
    pub trailing_newline: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParsedFile {
    /// Reassembles the file text.
    pub fn serialize(&self) -> String {
        serialize_lines(&self.lines, self.trailing_newline)
    }
}

pub fn serialize_lines(lines: &[GcodeLine], trailing_newline: bool) -> String {
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&line.serialize());
    }
    if trailing_newline {
        out.push('\n');
    }
    out
}

#[derive(Default)]
struct Builder {
    pieces: Vec<Piece>,
    pending: String,
    line_number: Option<String>,
    checksum: Option<String>,
    command: Option<Command>,
    params: Vec<Param>,
    flags: Vec<char>,
    comment: Option<String>,
    error: Option<LineError>,
    saw_paren_comment: bool,
    saw_other: bool,
}

impl Builder {
    fn flush(&mut self) {
        if !self.pending.is_empty() {
            self.pieces
                .push(Piece::Verbatim(core::mem::take(&mut self.pending)));
        }
    }

    fn push(&mut self, piece: Piece) {
        self.flush();
        self.pieces.push(piece);
    }

    fn fail(&mut self, error: LineError) {
        if self.error.is_none() {
            self.error = Some(error);
        }
    }

    fn scan(&mut self, code: &str) {
        let bytes = code.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            match c {
                b' ' | b'\t' | b'\r' => {
                    self.pending.push(char::from(c));
                    i += 1;
                }
                b'(' => {
                    let end = code[i..].find(')').map_or(bytes.len(), |j| i + j + 1);
                    self.pending.push_str(&code[i..end]);
                    self.saw_paren_comment = true;
                    i = end;
                }
                b'*' => {
                    let digits = code[i + 1..].bytes().take_while(u8::is_ascii_digit).count();
                    let end = i + 1 + digits;
                    if digits > 0
                        && code[end..]
                            .bytes()
                            .all(|b| matches!(b, b' ' | b'\t' | b'\r'))
                    {
                        self.checksum = Some(code[i..end].to_string());
                        self.push(Piece::Checksum);
                    } else {
                        self.fail(LineError::UnexpectedCharacter { ch: '*', column: i });
                        self.pending.push('*');
                        self.saw_other = true;
                        i += 1;
                        continue;
                    }
                    i = end;
                }
                c if c.is_ascii_alphabetic() => {
                    i = self.word(code, i);
                }
                _ => {
                    let ch = code[i..].chars().next().unwrap_or('\u{fffd}');
                    self.fail(LineError::UnexpectedCharacter { ch, column: i });
                    self.pending.push(ch);
                    self.saw_other = true;
                    i += ch.len_utf8();
                }
            }
        }
    }

    /// Consumes one letter word starting at `start`; returns the next index.
    fn word(&mut self, code: &str, start: usize) -> usize {
        let bytes = code.as_bytes();
        let letter = char::from(bytes[start]);
        let upper = letter.to_ascii_uppercase();
        let mut end = start + 1;
        while end < bytes.len() && matches!(bytes[end], b'0'..=b'9' | b'.' | b'+' | b'-') {
            end += 1;
        }
        let number = &code[start + 1..end];
        let first_word = self.command.is_none() && self.params.is_empty();

        if upper == 'N'
            && first_word
            && self.line_number.is_none()
            && !number.is_empty()
            && number.bytes().all(|b| b.is_ascii_digit())
        {
            self.line_number = Some(code[start..end].to_string());
            self.push(Piece::LineNumber);
            return end;
        }

        if matches!(upper, 'G' | 'M' | 'T') && first_word {
            return match parse_command(letter, number) {
                Some(command) => {
                    let string_argument =
                        upper == 'M' && STRING_ARGUMENT_COMMANDS.contains(&command.code);
                    self.command = Some(command);
                    self.push(Piece::Command);
                    if string_argument {
                        self.pending.push_str(&code[end..]);
                        bytes.len()
                    } else {
                        end
                    }
                }
                None => {
                    let end = skip_word(code, end);
                    self.fail(LineError::MalformedCommand(code[start..end].to_string()));
                    self.pending.push_str(&code[start..end]);
                    self.saw_other = true;
                    end
                }
            };
        }

        // A bare letter such as the axes in `G28 X Y` is a flag. Moves need
        // values, so on G0/G1 it is reported as malformed instead.
        let at_boundary = bytes
            .get(end)
            .is_none_or(|b| matches!(b, b' ' | b'\t' | b'\r' | b'(' | b'*'));
        if number.is_empty()
            && at_boundary
            && !first_word
            && !self.command.as_ref().is_some_and(Command::is_linear_move)
        {
            self.flags.push(upper);
            self.pending.push(letter);
            return end;
        }

        match NumericToken::parse(number) {
            Ok(token) => {
                self.params.push(Param {
                    written_letter: letter,
                    token,
                });
                self.push(Piece::Param(self.params.len() - 1));
                end
            }
            Err(reason) => {
                let end = skip_word(code, end);
                self.fail(LineError::MalformedParameter {
                    letter: upper,
                    text: code[start + 1..end].to_string(),
                    reason,
                });
                self.pending.push_str(&code[start..end]);
                self.saw_other = true;
                end
            }
        }
    }

    fn classify(&self, is_marker: impl FnOnce() -> bool) -> LineKind {
        if self.error.is_some() {
            return LineKind::Other;
        }
        match &self.command {
            Some(cmd) if cmd.is_linear_move() => {
                if self.has('E') && (self.has('X') || self.has('Y')) {
                    LineKind::ExtrudingMove
                } else {
                    LineKind::TravelMove
                }
            }
            Some(cmd) if cmd.is('G', 92) && self.has('E') => LineKind::ExtrusionReset,
            Some(_) => LineKind::Other,
            None => {
                let bare = self.params.is_empty()
                    && self.flags.is_empty()
                    && self.line_number.is_none()
                    && self.checksum.is_none()
                    && !self.saw_other;
                if !bare {
                    LineKind::Other
                } else if self.comment.is_some() {
                    if !self.saw_paren_comment && is_marker() {
                        LineKind::LayerMarker
                    } else {
                        LineKind::CommentOnly
                    }
                } else if self.saw_paren_comment {
                    LineKind::CommentOnly
                } else {
                    LineKind::Blank
                }
            }
        }
    }

    fn has(&self, letter: char) -> bool {
        self.params.iter().any(|p| p.letter() == letter)
    }
}

fn skip_word(code: &str, from: usize) -> usize {
    code[from..]
        .find([' ', '\t', '\r'])
        .map_or(code.len(), |j| from + j)
}

fn parse_command(letter: char, number: &str) -> Option<Command> {
    let (major, minor) = match number.split_once('.') {
        Some((a, b)) => (a, Some(b)),
        None => (number, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(major) || minor.is_some_and(|m| !digits(m)) {
        return None;
    }
    Some(Command {
        text: {
            let mut t = String::with_capacity(number.len() + 1);
            t.push(letter);
            t.push_str(number);
            t
        },
        letter: letter.to_ascii_uppercase(),
        code: major.parse().ok()?,
        subcode: match minor {
            Some(m) => Some(m.parse().ok()?),
            None => None,
        },
    })
}
