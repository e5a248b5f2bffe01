//! Fixed-point decimal numbers with five fractional digits.
//!
//! G-code coordinates and extrusion values are written as short decimal
//! strings. Keeping them as scaled integers means cumulative sums and
//! differences are exact, and any value can be rendered back without
//! binary-float drift.

use alloc::string::String;
use core::fmt::{self, Write};
use core::ops::{Add, Neg, Sub};
use core::str::FromStr;

/// Number of fractional digits carried by [`Decimal`].
pub const FRACTION_DIGITS: u32 = 5;

const SCALE: i64 = 100_000;

/// A signed decimal with exactly [`FRACTION_DIGITS`] fractional digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decimal(i64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, thiserror::Error)]
pub enum NumberError {
    #[error("no digits in number")]
    NoDigits,
    #[error("unexpected character {0:?} in number")]
    InvalidCharacter(char),
    #[error("more than {FRACTION_DIGITS} significant fractional digits")]
    Precision,
    #[error("number out of range")]
    Overflow,
}

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);

    /// Builds a value from its scaled representation (units of 10^-5).
    pub const fn from_scaled(units: i64) -> Self {
        Decimal(units)
    }

    pub const fn from_int(value: i64) -> Self {
        Decimal(value * SCALE)
    }

    pub const fn scaled(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn abs(self) -> Self {
        Decimal(self.0.abs())
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, rhs: Decimal) -> Option<Decimal> {
        self.0.checked_add(rhs.0).map(Decimal)
    }

    pub fn checked_sub(self, rhs: Decimal) -> Option<Decimal> {
        self.0.checked_sub(rhs.0).map(Decimal)
    }

    /// Parses `[+-]digits[.digits]`. At least one digit is required on
    /// either side of the point. Fractional digits past the fifth must be
    /// zero.
    pub fn parse(text: &str) -> Result<Decimal, NumberError> {
        let bytes = text.as_bytes();
        let mut pos = 0;
        let negative = match bytes.first() {
            Some(b'-') => {
                pos = 1;
                true
            }
            Some(b'+') => {
                pos = 1;
                false
            }
            _ => false,
        };

        let mut int_part: i64 = 0;
        let mut digits = 0usize;
        while let Some(&b) = bytes.get(pos) {
            if !b.is_ascii_digit() {
                break;
            }
            int_part = int_part
                .checked_mul(10)
                .and_then(|v| v.checked_add(i64::from(b - b'0')))
                .ok_or(NumberError::Overflow)?;
            digits += 1;
            pos += 1;
        }

        let mut frac: i64 = 0;
        if bytes.get(pos) == Some(&b'.') {
            pos += 1;
            let mut place = 0u32;
            while let Some(&b) = bytes.get(pos) {
                if !b.is_ascii_digit() {
                    break;
                }
                let d = i64::from(b - b'0');
                if place < FRACTION_DIGITS {
                    frac += d * 10i64.pow(FRACTION_DIGITS - 1 - place);
                } else if d != 0 {
                    return Err(NumberError::Precision);
                }
                place += 1;
                digits += 1;
                pos += 1;
            }
        }

        if let Some(c) = text[pos..].chars().next() {
            return Err(NumberError::InvalidCharacter(c));
        }
        if digits == 0 {
            return Err(NumberError::NoDigits);
        }

        let units = int_part
            .checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac))
            .ok_or(NumberError::Overflow)?;
        Ok(Decimal(if negative { -units } else { units }))
    }

    /// Renders the value using `style`.
    pub fn render(self, style: NumberStyle) -> String {
        let mut out = String::new();
        self.write_styled(&mut out, style)
            .expect("writing to a String cannot fail");
        out
    }

    fn write_styled<W: Write>(self, out: &mut W, style: NumberStyle) -> fmt::Result {
        let magnitude = self.0.unsigned_abs();
        let int_part = magnitude / SCALE as u64;
        let frac = magnitude % SCALE as u64;

        // Digits of the fraction, most significant first, with trailing
        // zeros trimmed but never below the style's minimum.
        let mut frac_digits = [b'0'; FRACTION_DIGITS as usize];
        let mut rest = frac;
        for slot in frac_digits.iter_mut().rev() {
            *slot = b'0' + (rest % 10) as u8;
            rest /= 10;
        }
        let mut shown = FRACTION_DIGITS as usize;
        while shown > 0 && frac_digits[shown - 1] == b'0' {
            shown -= 1;
        }
        if let Some(min) = style.fixed_fraction {
            shown = shown.max(usize::from(min).min(FRACTION_DIGITS as usize));
        }

        if self.0 < 0 {
            out.write_char('-')?;
        }
        if !(int_part == 0 && shown > 0 && style.omit_leading_zero) {
            write!(out, "{int_part}")?;
        }
        if shown > 0 {
            out.write_char('.')?;
            for &d in &frac_digits[..shown] {
                out.write_char(char::from(d))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Decimal {
    /// Canonical form: trailing zeros trimmed, leading zero kept.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_styled(f, NumberStyle::default())
    }
}

impl FromStr for Decimal {
    type Err = NumberError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Decimal::parse(s)
    }
}

impl Add for Decimal {
    type Output = Decimal;

    fn add(self, rhs: Decimal) -> Decimal {
        Decimal(self.0 + rhs.0)
    }
}

impl Sub for Decimal {
    type Output = Decimal;

    fn sub(self, rhs: Decimal) -> Decimal {
        Decimal(self.0 - rhs.0)
    }
}

impl Neg for Decimal {
    type Output = Decimal;

    fn neg(self) -> Decimal {
        Decimal(-self.0)
    }
}

/// How regenerated numbers are written.
///
/// The default is the trimmed style most slicers use (`3`, `0.1`, `-2.25`).
/// `omit_leading_zero` produces `.1` / `-.25`; `fixed_fraction` pads the
/// fraction to at least that many digits (`3.000`). Padding never drops
/// digits, so rendering is lossless in every style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NumberStyle {
    pub omit_leading_zero: bool,
    pub fixed_fraction: Option<u8>,
}

impl NumberStyle {
    /// Infers the dominant style of a set of number tokens.
    pub fn infer<'a, I>(tokens: I) -> NumberStyle
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut omit = 0usize;
        let mut keep = 0usize;
        let mut trailing_zero = 0usize;
        let mut lengths = [0usize; FRACTION_DIGITS as usize + 1];

        for token in tokens {
            let unsigned = token.trim_start_matches(['-', '+']);
            let Some((int_part, frac)) = unsigned.split_once('.') else {
                continue;
            };
            if frac.is_empty() {
                continue;
            }
            if int_part.is_empty() {
                omit += 1;
            } else if int_part.bytes().all(|b| b == b'0') {
                keep += 1;
            }
            if frac.ends_with('0') {
                trailing_zero += 1;
            }
            lengths[frac.len().min(FRACTION_DIGITS as usize)] += 1;
        }

        let fixed_fraction = if trailing_zero > 0 {
            // Ties resolve to the longer fraction.
            let (len, _) = lengths
                .iter()
                .enumerate()
                .rev()
                .max_by_key(|&(_, count)| *count)
                .unwrap_or((0, &0));
            Some(len as u8)
        } else {
            None
        };

        NumberStyle {
            omit_leading_zero: omit > keep,
            fixed_fraction,
        }
    }
}
