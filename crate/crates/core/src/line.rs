//! Structured G-code lines.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::decimal::{Decimal, NumberError, NumberStyle};

/// G-code dialect a file is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    Marlin,
    Sailfish,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Marlin => "marlin",
            Flavor::Sailfish => "sailfish",
        }
    }

    /// Comment prefixes that open a new layer in files of this flavor.
    pub fn default_layer_markers(self) -> &'static [&'static str] {
        match self {
            Flavor::Marlin => &[";LAYER_CHANGE", ";LAYER:"],
            Flavor::Sailfish => &["; layer", ";LAYER_CHANGE"],
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown flavor {0:?} (expected marlin or sailfish)")]
pub struct UnknownFlavor(pub String);

impl FromStr for Flavor {
    type Err = UnknownFlavor;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "marlin" => Ok(Flavor::Marlin),
            "sailfish" => Ok(Flavor::Sailfish),
            _ => Err(UnknownFlavor(s.into())),
        }
    }
}

/// A number as written in the source together with its exact value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NumericToken {
    text: String,
    value: Decimal,
}

impl NumericToken {
    pub fn parse(text: &str) -> Result<Self, NumberError> {
        Ok(NumericToken {
            value: Decimal::parse(text)?,
            text: text.into(),
        })
    }

    pub fn from_value(value: Decimal, style: NumberStyle) -> Self {
        NumericToken {
            text: value.render(style),
            value,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn value(&self) -> Decimal {
        self.value
    }
}

/// Command word such as `G1`, `M104` or `T0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Command {
    pub(crate) text: String,
    pub(crate) letter: char,
    pub(crate) code: u32,
    pub(crate) subcode: Option<u32>,
}

impl Command {
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Upper-cased command letter.
    pub fn letter(&self) -> char {
        self.letter
    }

    pub fn code(&self) -> u32 {
        self.code
    }

    pub fn subcode(&self) -> Option<u32> {
        self.subcode
    }

    /// True for `letter code` with no subcode, ignoring case and leading zeros.
    pub fn is(&self, letter: char, code: u32) -> bool {
        self.letter == letter.to_ascii_uppercase() && self.code == code && self.subcode.is_none()
    }

    /// `G0` or `G1`.
    pub fn is_linear_move(&self) -> bool {
        self.is('G', 0) || self.is('G', 1)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// A lettered parameter word, e.g. `X50.6`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Param {
    pub(crate) written_letter: char,
    pub(crate) token: NumericToken,
}

impl Param {
    /// Upper-cased parameter letter.
    pub fn letter(&self) -> char {
        self.written_letter.to_ascii_uppercase()
    }

    pub fn token(&self) -> &NumericToken {
        &self.token
    }

    pub fn value(&self) -> Decimal {
        self.token.value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineKind {
    ExtrudingMove,
    TravelMove,
    ExtrusionReset,
    LayerMarker,
    Other,
    CommentOnly,
    Blank,
}

impl LineKind {
    pub const ALL: [LineKind; 7] = [
        LineKind::ExtrudingMove,
        LineKind::TravelMove,
        LineKind::ExtrusionReset,
        LineKind::LayerMarker,
        LineKind::Other,
        LineKind::CommentOnly,
        LineKind::Blank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LineKind::ExtrudingMove => "extruding_move",
            LineKind::TravelMove => "travel_move",
            LineKind::ExtrusionReset => "extrusion_reset",
            LineKind::LayerMarker => "layer_marker",
            LineKind::Other => "other",
            LineKind::CommentOnly => "comment_only",
            LineKind::Blank => "blank",
        }
    }
}

/// Problem found while parsing a single line. The line is kept verbatim and
/// classified as [`LineKind::Other`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, thiserror::Error)]
pub enum LineError {
    #[error("malformed parameter {letter}{text:?}: {reason}")]
    MalformedParameter {
        letter: char,
        text: String,
        reason: NumberError,
    },
    #[error("malformed command word {0:?}")]
    MalformedCommand(String),
    #[error("unexpected character {ch:?} at column {column}")]
    UnexpectedCharacter { ch: char, column: usize },
}

/// Segment of a line in source order. Serialization concatenates these.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum Piece {
    Verbatim(String),
    LineNumber,
    Command,
    Param(usize),
    Checksum,
    Comment,
}

/// One parsed line of G-code.
///
/// `raw` always equals the serialization of the structured fields, so a line
/// that was parsed and never modified reproduces its source byte-for-byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GcodeLine {
    pub(crate) raw: String,
    pub(crate) pieces: Vec<Piece>,
    pub(crate) line_number: Option<String>,
    pub(crate) checksum: Option<String>,
    pub(crate) command: Option<Command>,
    pub(crate) params: Vec<Param>,
    pub(crate) flags: Vec<char>,
    pub(crate) comment: Option<String>,
    pub(crate) kind: LineKind,
    pub(crate) error: Option<LineError>,
}

impl GcodeLine {
    /// Verbatim text of the line, without the newline.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn kind(&self) -> LineKind {
        self.kind
    }

    pub fn command(&self) -> Option<&Command> {
        self.command.as_ref()
    }

    /// Parameters in source order.
    pub fn params(&self) -> &[Param] {
        &self.params
    }

    /// Upper-cased letters written without a value, e.g. `X` and `Y` in
    /// `G28 X Y`.
    pub fn flags(&self) -> &[char] {
        &self.flags
    }

    pub fn has_flag(&self, letter: char) -> bool {
        self.flags.contains(&letter.to_ascii_uppercase())
    }

    /// Text after `;`, if any.
    pub fn comment(&self) -> Option<&str> {
        self.comment.as_deref()
    }

    /// `N<number>` prefix, when the stream carries line numbers.
    pub fn line_number(&self) -> Option<&str> {
        self.line_number.as_deref()
    }

    /// `*<checksum>` suffix, when present.
    pub fn checksum(&self) -> Option<&str> {
        self.checksum.as_deref()
    }

    pub fn error(&self) -> Option<&LineError> {
        self.error.as_ref()
    }

    /// First parameter with the given letter (case-insensitive).
    pub fn param(&self, letter: char) -> Option<&NumericToken> {
        let letter = letter.to_ascii_uppercase();
        self.params
            .iter()
            .find(|p| p.letter() == letter)
            .map(|p| &p.token)
    }

    pub fn value(&self, letter: char) -> Option<Decimal> {
        self.param(letter).map(NumericToken::value)
    }

    pub fn has(&self, letter: char) -> bool {
        self.param(letter).is_some()
    }

    pub fn is_linear_move(&self) -> bool {
        self.command.as_ref().is_some_and(Command::is_linear_move)
    }

    pub fn is_extruding(&self) -> bool {
        self.kind == LineKind::ExtrudingMove
    }

    /// Rebuilds the line text from its structured parts.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(self.raw.len());
        for piece in &self.pieces {
            match piece {
                Piece::Verbatim(text) => out.push_str(text),
                Piece::LineNumber => out.push_str(self.line_number.as_deref().unwrap_or("")),
                Piece::Command => {
                    if let Some(c) = &self.command {
                        out.push_str(&c.text);
                    }
                }
                Piece::Param(i) => {
                    let p = &self.params[*i];
                    out.push(p.written_letter);
                    out.push_str(&p.token.text);
                }
                Piece::Checksum => out.push_str(self.checksum.as_deref().unwrap_or("")),
                Piece::Comment => {
                    out.push(';');
                    out.push_str(self.comment.as_deref().unwrap_or(""));
                }
            }
        }
        out
    }

    /// Returns a copy with the first `letter` parameter set to `value`,
    /// rendered in `style`. Lines without that parameter are returned as-is.
    ///
    /// A checksum, if present, is carried over unchanged and will no longer
    /// match the rewritten line.
    pub fn with_value(&self, letter: char, value: Decimal, style: NumberStyle) -> GcodeLine {
        let letter = letter.to_ascii_uppercase();
        let mut line = self.clone();
        if let Some(p) = line.params.iter_mut().find(|p| p.letter() == letter) {
            p.token = NumericToken::from_value(value, style);
            line.raw = line.serialize();
        }
        line
    }
}

impl fmt::Display for GcodeLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// Joins lines with `\n`, without a trailing newline.
pub fn join_lines<'a, I>(lines: I) -> String
where
    I: IntoIterator<Item = &'a GcodeLine>,
{
    let mut out = String::new();
    for (i, line) in lines.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(line.raw());
    }
    out
}
