//! Layer-wise IoU evaluation of translated G-code against a reference.

use std::fmt::Write;

use gflavor_core::raster::{render_layer_from, stroke_segments, Point, DEFAULT_THRESHOLDS};
use gflavor_core::{
    iou, iou_at_k, parse_file, split_layers, to_absolute, Flavor, GcodeLine, LayerError,
    LayeredFile, RasterConfig, RasterError,
};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("predicted file has {predicted} layers, reference has {reference}")]
    LayerCountMismatch { predicted: usize, reference: usize },
    #[error("{side} file: {error}")]
    NoLayers {
        side: &'static str,
        error: LayerError,
    },
    #[error("reference layer {layer}: {error}")]
    Reference { layer: usize, error: RasterError },
    #[error("no thresholds given")]
    NoThresholds,
    #[error("threshold {0} is outside [0, 1]")]
    BadThreshold(f64),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdScore {
    pub threshold: f64,
    /// Percentage of layers whose IoU is strictly above the threshold.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsTable {
    pub layers: usize,
    pub resolution: f64,
    pub bead_width: f64,
    pub per_layer_iou: Vec<f64>,
    pub iou_at_k: Vec<ThresholdScore>,
}

impl MetricsTable {
    /// Column-aligned text table with one row of IOU@k percentages.
    pub fn to_text_table(&self) -> String {
        let headers: Vec<String> = std::iter::once("layers".to_string())
            .chain(self.iou_at_k.iter().map(|s| format!("IOU@{}", s.threshold)))
            .collect();
        let values: Vec<String> = std::iter::once(self.layers.to_string())
            .chain(self.iou_at_k.iter().map(|s| format!("{:.2}", s.percent)))
            .collect();
        let widths: Vec<usize> = headers
            .iter()
            .zip(&values)
            .map(|(h, v)| h.len().max(v.len()))
            .collect();
        let mut out = String::new();
        for row in [&headers, &values] {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, &w)| format!("{cell:>w$}"))
                .collect();
            writeln!(out, "{}", cells.join("  ")).unwrap();
        }
        out
    }
}

pub fn default_thresholds() -> Vec<f64> {
    DEFAULT_THRESHOLDS.to_vec()
}

pub fn validate_thresholds(thresholds: &[f64]) -> Result<(), EvalError> {
    if thresholds.is_empty() {
        return Err(EvalError::NoThresholds);
    }
    match thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        Some(&t) => Err(EvalError::BadThreshold(t)),
        None => Ok(()),
    }
}

/// Tool position at the start of every layer, carried from the lines
/// before it.
pub fn layer_start_positions(file: &LayeredFile) -> Vec<Option<Point>> {
    let mut at = stroke_segments(&file.header, None)
        .ok()
        .and_then(|(_, end)| end);
    file.layers
        .iter()
        .map(|layer| {
            let start = at;
            if let Ok((_, end)) = stroke_segments(&layer.lines, at) {
                at = end.or(at);
            }
            start
        })
        .collect()
}

/// Compares two layered files layer by layer.
///
/// A predicted layer that cannot be rendered scores 0. A reference layer
/// that cannot be rendered is an error.
pub fn evaluate_translation(
    predicted: &LayeredFile,
    reference: &LayeredFile,
    cfg: &RasterConfig,
    thresholds: &[f64],
) -> Result<MetricsTable, EvalError> {
    validate_thresholds(thresholds)?;
    if predicted.layers.len() != reference.layers.len() {
        return Err(EvalError::LayerCountMismatch {
            predicted: predicted.layers.len(),
            reference: reference.layers.len(),
        });
    }
    let p_starts = layer_start_positions(predicted);
    let r_starts = layer_start_positions(reference);

    let mut ious = Vec::with_capacity(reference.layers.len());
    for (i, (p, r)) in predicted.layers.iter().zip(&reference.layers).enumerate() {
        let (r_raster, _) = render_layer_from(&r.lines, cfg, r_starts[i])
            .map_err(|error| EvalError::Reference { layer: i, error })?;
        let value = match render_layer_from(&p.lines, cfg, p_starts[i]) {
            Ok((p_raster, _)) => iou(&p_raster, &r_raster)?,
            Err(_) => 0.0,
        };
        ious.push(value);
    }

    let iou_at_k = if ious.is_empty() {
        Vec::new()
    } else {
        thresholds
            .iter()
            .map(|&threshold| {
                Ok(ThresholdScore {
                    threshold,
                    percent: iou_at_k(&ious, threshold)?,
                })
            })
            .collect::<Result<_, RasterError>>()?
    };

    Ok(MetricsTable {
        layers: ious.len(),
        resolution: cfg.resolution,
        bead_width: cfg.bead_width,
        per_layer_iou: ious,
        iou_at_k,
    })
}

/// Input description for [`evaluate_texts`].
#[derive(Debug, Clone, Copy)]
pub struct EvalInput<'a> {
    pub text: &'a str,
    pub flavor: Flavor,
    /// E values are per move and must be converted to cumulative first.
    pub relative: bool,
}

fn layered(input: &EvalInput<'_>, side: &'static str) -> Result<LayeredFile, EvalError> {
    let parsed = parse_file(input.text, input.flavor);
    let lines: Vec<GcodeLine> = if input.relative {
        to_absolute(&parsed.lines)
    } else {
        parsed.lines
    };
    split_layers(&lines).map_err(|error| EvalError::NoLayers { side, error })
}

pub fn evaluate_texts(
    predicted: EvalInput<'_>,
    reference: EvalInput<'_>,
    cfg: &RasterConfig,
    thresholds: &[f64],
) -> Result<MetricsTable, EvalError> {
    validate_thresholds(thresholds)?;
    let p = layered(&predicted, "predicted")?;
    let r = layered(&reference, "reference")?;
    evaluate_translation(&p, &r, cfg, thresholds)
}
