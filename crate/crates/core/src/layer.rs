//! Segmentation of a parsed file into layers and contours.

use alloc::vec::Vec;
use core::ops::Range;

use crate::decimal::Decimal;
use crate::line::{GcodeLine, LineKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub index: usize,
    /// Modal Z at the first extruding move, or at the end of the layer if it
    /// never extrudes.
    pub z: Decimal,
    pub lines: Vec<GcodeLine>,
}

/// A run of extruding moves plus the non-extruding lines that lead into it.
/// The last contour of a layer also owns the layer's trailing lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub index: usize,
    pub lines: Vec<GcodeLine>,
}

impl Contour {
    /// Range of `lines` holding the extruding run.
    pub fn extruding_range(&self) -> Range<usize> {
        let start = self
            .lines
            .iter()
            .position(GcodeLine::is_extruding)
            .unwrap_or(self.lines.len());
        let len = self.lines[start..]
            .iter()
            .take_while(|l| l.is_extruding())
            .count();
        start..start + len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredFile {
    pub header: Vec<GcodeLine>,
    pub layers: Vec<Layer>,
    pub footer: Vec<GcodeLine>,
}

impl LayeredFile {
    /// All lines in file order.
    pub fn lines(&self) -> impl Iterator<Item = &GcodeLine> {
        self.header
            .iter()
            .chain(self.layers.iter().flat_map(|l| l.lines.iter()))
            .chain(self.footer.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LayerError {
    #[error("no layer markers and no extruding moves found")]
    NoLayersFound,
}

/// Splits a file into layers plus the header and footer around them.
///
/// Layers open at layer-marker comments. Without markers, a layer opens
/// whenever an extruding move happens at a new Z; the layer then starts at
/// the line that set that Z. The footer is everything after the last
/// extruding move.
pub fn split_layers(lines: &[GcodeLine]) -> Result<LayeredFile, LayerError> {
    let last_extrusion = lines.iter().rposition(GcodeLine::is_extruding);
    let body_end = last_extrusion.map_or(lines.len(), |i| i + 1);

    let mut starts: Vec<usize> = lines[..body_end]
        .iter()
        .enumerate()
        .filter(|(_, l)| l.kind() == LineKind::LayerMarker)
        .map(|(i, _)| i)
        .collect();

    if starts.is_empty() {
        starts = z_change_starts(&lines[..body_end]);
    }
    if starts.is_empty() {
        return Err(LayerError::NoLayersFound);
    }

    let mut zs = ModalZ::default();
    let mut layers = Vec::with_capacity(starts.len());
    for line in &lines[..starts[0]] {
        zs.observe(line);
    }
    for (index, &start) in starts.iter().enumerate() {
        let end = starts.get(index + 1).copied().unwrap_or(body_end);
        let mut z_at_extrusion = None;
        for line in &lines[start..end] {
            zs.observe(line);
            if z_at_extrusion.is_none() && line.is_extruding() {
                z_at_extrusion = Some(zs.current());
            }
        }
        layers.push(Layer {
            index,
            z: z_at_extrusion.unwrap_or_else(|| zs.current()),
            lines: lines[start..end].to_vec(),
        });
    }

    Ok(LayeredFile {
        header: lines[..starts[0]].to_vec(),
        layers,
        footer: lines[body_end..].to_vec(),
    })
}

fn z_change_starts(lines: &[GcodeLine]) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut z = ModalZ::default();
    let mut z_line = None;
    let mut layer_z = None;
    for (i, line) in lines.iter().enumerate() {
        if z.observe(line) {
            z_line = Some(i);
        }
        if line.is_extruding() && layer_z != Some(z.current()) {
            let fallback = if starts.is_empty() { 0 } else { i };
            starts.push(z_line.unwrap_or(fallback));
            layer_z = Some(z.current());
        }
    }
    starts
}

#[derive(Default)]
struct ModalZ(Option<Decimal>);

impl ModalZ {
    /// Returns true when the line sets Z.
    fn observe(&mut self, line: &GcodeLine) -> bool {
        let sets_z = line.is_linear_move() || line.command().is_some_and(|c| c.is('G', 92));
        match line.value('Z') {
            Some(z) if sets_z => {
                self.0 = Some(z);
                true
            }
            _ => false,
        }
    }

    fn current(&self) -> Decimal {
        self.0.unwrap_or(Decimal::ZERO)
    }
}

/// Cuts a layer into contours. A layer without extruding moves has none.
pub fn split_contours(layer: &Layer) -> Vec<Contour> {
    split_contour_lines(&layer.lines)
}

pub fn split_contour_lines(lines: &[GcodeLine]) -> Vec<Contour> {
    let mut run_ends = Vec::new();
    let mut in_run = false;
    for (i, line) in lines.iter().enumerate() {
        let extruding = line.is_extruding();
        if in_run && !extruding {
            run_ends.push(i);
        }
        in_run = extruding;
    }
    if in_run {
        run_ends.push(lines.len());
    }
    if let Some(last) = run_ends.last_mut() {
        *last = lines.len();
    }

    let mut start = 0;
    run_ends
        .into_iter()
        .enumerate()
        .map(|(index, end)| {
            let contour = Contour {
                index,
                lines: lines[start..end].to_vec(),
            };
            start = end;
            contour
        })
        .collect()
}

/// Concatenates contour lines back into a layer body.
pub fn join_contours(contours: &[Contour]) -> Vec<GcodeLine> {
    contours
        .iter()
        .flat_map(|c| c.lines.iter().cloned())
        .collect()
}
