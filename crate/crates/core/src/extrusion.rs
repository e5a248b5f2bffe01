//! Conversion between cumulative and per-move extrusion values.
//!
//! In absolute-E streams every move states the total filament fed since the
//! last `G92 E` reset. The relative form replaces that with the amount fed
//! during the move itself, which only depends on the line and its
//! predecessor. Both directions are exact fixed-point arithmetic.

use alloc::vec::Vec;

use crate::decimal::{Decimal, NumberStyle};
use crate::line::GcodeLine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ExtrusionError {
    #[error(
        "line {line}: M83 relative extrusion mode is not supported; input must use absolute E"
    )]
    RelativeModeUnsupported { line: usize },
}

/// Running extrusion bookkeeping for a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExtrusionState {
    /// Value set by the most recent `G92 E`.
    pub baseline: Decimal,
    /// Absolute E of the most recent E-bearing line.
    pub last_absolute: Decimal,
}

impl ExtrusionState {
    /// State after a reset to `value`.
    pub fn reset_to(value: Decimal) -> Self {
        ExtrusionState {
            baseline: value,
            last_absolute: value,
        }
    }

    /// Advances over absolute-E lines without rewriting them.
    pub fn advance<'a, I>(&mut self, lines: I)
    where
        I: IntoIterator<Item = &'a GcodeLine>,
    {
        for line in lines {
            if let Some(reset) = reset_value(line) {
                *self = ExtrusionState::reset_to(reset);
            } else if let Some(e) = move_extrusion(line) {
                self.last_absolute = e;
            }
        }
    }
}

fn reset_value(line: &GcodeLine) -> Option<Decimal> {
    if line.command()?.is('G', 92) {
        line.value('E')
    } else {
        None
    }
}

fn move_extrusion(line: &GcodeLine) -> Option<Decimal> {
    if line.is_linear_move() {
        line.value('E')
    } else {
        None
    }
}

/// Dominant number style among the E values of linear moves.
pub fn extrusion_style(lines: &[GcodeLine]) -> NumberStyle {
    NumberStyle::infer(
        lines
            .iter()
            .filter(|l| l.is_linear_move())
            .filter_map(|l| l.param('E'))
            .map(|t| t.text()),
    )
}

/// Rewrites cumulative E values as per-move amounts, starting from a zero
/// baseline and rendering numbers in the input's dominant style.
pub fn to_relative(lines: &[GcodeLine]) -> Result<Vec<GcodeLine>, ExtrusionError> {
    let mut state = ExtrusionState::default();
    to_relative_with(lines, &mut state, extrusion_style(lines))
}

pub fn to_relative_with(
    lines: &[GcodeLine],
    state: &mut ExtrusionState,
    style: NumberStyle,
) -> Result<Vec<GcodeLine>, ExtrusionError> {
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.command().is_some_and(|c| c.is('M', 83)) {
            return Err(ExtrusionError::RelativeModeUnsupported { line: i });
        }
        if let Some(reset) = reset_value(line) {
            *state = ExtrusionState::reset_to(reset);
            out.push(line.clone());
        } else if let Some(e) = move_extrusion(line) {
            let relative = e - state.last_absolute;
            state.last_absolute = e;
            out.push(line.with_value('E', relative, style));
        } else {
            out.push(line.clone());
        }
    }
    Ok(out)
}

/// Restores cumulative E values by summing per-move amounts from each reset.
pub fn to_absolute(lines: &[GcodeLine]) -> Vec<GcodeLine> {
    let mut state = ExtrusionState::default();
    to_absolute_with(lines, &mut state, extrusion_style(lines))
}

pub fn to_absolute_with(
    lines: &[GcodeLine],
    state: &mut ExtrusionState,
    style: NumberStyle,
) -> Vec<GcodeLine> {
    lines
        .iter()
        .map(|line| {
            if let Some(reset) = reset_value(line) {
                *state = ExtrusionState::reset_to(reset);
                line.clone()
            } else if let Some(relative) = move_extrusion(line) {
                let e = state.last_absolute + relative;
                state.last_absolute = e;
                line.with_value('E', e, style)
            } else {
                line.clone()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line::Flavor;
    use crate::parse::parse_file;
    use alloc::vec;

    fn lines(text: &str) -> Vec<GcodeLine> {
        parse_file(text, Flavor::Marlin).lines
    }

    fn raws(ls: &[GcodeLine]) -> Vec<&str> {
        ls.iter().map(GcodeLine::raw).collect()
    }

    #[test]
    fn three_then_three_point_one() {
        let abs = lines("G1 X1 Y1 E3\nG1 X2 Y1 E3.1");
        let rel = to_relative(&abs).unwrap();
        assert_eq!(raws(&rel), vec!["G1 X1 Y1 E3", "G1 X2 Y1 E0.1"]);
        let back = to_absolute(&rel);
        assert_eq!(raws(&back), vec!["G1 X1 Y1 E3", "G1 X2 Y1 E3.1"]);
    }

    #[test]
    fn reset_sets_baseline() {
        let abs = lines("G1 X1 Y1 E7\nG92 E0\nG1 X2 Y1 E0.5");
        let rel = to_relative(&abs).unwrap();
        assert_eq!(raws(&rel), vec!["G1 X1 Y1 E7", "G92 E0", "G1 X2 Y1 E0.5"]);
        assert_eq!(to_absolute(&rel), abs);
    }

    #[test]
    fn retraction_goes_negative() {
        let abs = lines("G1 X1 Y1 E2\nG1 E1.2\nG1 E2\nG1 X2 Y1 E2.5");
        let rel = to_relative(&abs).unwrap();
        assert_eq!(
            raws(&rel),
            vec!["G1 X1 Y1 E2", "G1 E-0.8", "G1 E0.8", "G1 X2 Y1 E0.5"]
        );
        assert_eq!(to_absolute(&rel), abs);
    }

    #[test]
    fn empty_stream() {
        assert!(to_relative(&[]).unwrap().is_empty());
        assert!(to_absolute(&[]).is_empty());
    }

    #[test]
    fn two_resets_restart_sums() {
        let rel = lines("G1 X0 Y0 E1\nG1 X1 Y0 E1\nG92 E10\nG1 X2 Y0 E1\nG92 E0\nG1 X3 Y0 E0.25\nG1 X4 Y0 E0.25");
        let abs = to_absolute(&rel);
        // Oracle: independent prefix sums per reset segment.
        let mut expected = Vec::new();
        let mut acc = 0i64;
        for l in &rel {
            if l.command().unwrap().is('G', 92) {
                acc = l.value('E').unwrap().scaled();
                expected.push(None);
            } else {
                acc += l.value('E').unwrap().scaled();
                expected.push(Some(acc));
            }
        }
        for (line, want) in abs.iter().zip(expected) {
            if let Some(want) = want {
                assert_eq!(line.value('E').unwrap().scaled(), want);
            }
        }
        assert_eq!(abs[4].raw(), "G92 E0");
        assert_eq!(abs[6].raw(), "G1 X4 Y0 E0.5");
    }

    #[test]
    fn m83_is_rejected() {
        let ls = lines("M82\nG1 X1 Y1 E1\nM83\nG1 X2 Y1 E1");
        assert_eq!(
            to_relative(&ls),
            Err(ExtrusionError::RelativeModeUnsupported { line: 2 })
        );
    }

    #[test]
    fn style_of_input_is_kept() {
        let prusa = lines("G1 X1 Y1 E.5\nG1 X2 Y1 E.75\nG1 X3 Y1 E1.25");
        let rel = to_relative(&prusa).unwrap();
        assert_eq!(raws(&rel)[1], "G1 X2 Y1 E.25");
        assert_eq!(to_absolute(&rel), prusa);

        let fixed = lines("G1 X1 Y1 E0.50000\nG1 X2 Y1 E0.75000\nG1 X3 Y1 E1.25000");
        let rel = to_relative(&fixed).unwrap();
        assert_eq!(raws(&rel)[2], "G1 X3 Y1 E0.50000");
        assert_eq!(to_absolute(&rel), fixed);
    }

    #[test]
    fn state_carries_across_calls() {
        let abs = lines("G1 X1 Y1 E1\nG1 X2 Y1 E1.5\nG1 X3 Y1 E2.5\nG1 X4 Y1 E2.75");
        let whole = to_relative(&abs).unwrap();
        let style = extrusion_style(&abs);
        let mut state = ExtrusionState::default();
        let mut parts = to_relative_with(&abs[..2], &mut state, style).unwrap();
        parts.extend(to_relative_with(&abs[2..], &mut state, style).unwrap());
        assert_eq!(parts, whole);

        let mut seed = ExtrusionState::default();
        seed.advance(&abs[..2]);
        let tail = to_absolute_with(&whole[2..], &mut seed, style);
        assert_eq!(tail, abs[2..].to_vec());
    }
}
