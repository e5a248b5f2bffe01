//! Paired-corpus construction.
//!
//! Each file pair is aligned layer by layer and cut into chunk pairs that
//! are written as line-delimited JSON records. Extrusion values in the
//! records are relative so every chunk reads on its own.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use gflavor_core::extrusion::{extrusion_style, to_absolute_with, to_relative_with};
use gflavor_core::layer::join_contours;
use gflavor_core::line::join_lines;
use gflavor_core::{
    contour_flip, pair_creation, parse_file, split_contours, split_layers, Decimal, ExtrusionError,
    ExtrusionState, Flavor, FlipError, GcodeLine, Layer, LayerError, PairError,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Paired layers whose Z differs by more than this are rejected.
pub const Z_TOLERANCE: Decimal = Decimal::from_scaled(100);

/// Number of file pairs held in memory at once.
const BATCH: usize = 64;

/// One aligned chunk pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub source_file: String,
    pub target_file: String,
    pub layer_index: usize,
    pub chunk_index: usize,
    pub source_text: String,
    pub target_text: String,
    #[serde(with = "flavor_pair")]
    pub flavors: (Flavor, Flavor),
}

mod flavor_pair {
    use gflavor_core::Flavor;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(pair: &(Flavor, Flavor), s: S) -> Result<S::Ok, S::Error> {
        [pair.0.name(), pair.1.name()].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(Flavor, Flavor), D::Error> {
        let [a, b] = <[String; 2]>::deserialize(d)?;
        Ok((
            a.parse().map_err(D::Error::custom)?,
            b.parse().map_err(D::Error::custom)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRejection {
    pub source_file: String,
    pub target_file: String,
    pub reason: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub files: usize,
    pub layers_total: usize,
    pub layers_aligned: usize,
    pub layers_rejected: usize,
    pub rejection_reasons: BTreeMap<String, usize>,
    pub chunks_emitted: usize,
    /// File pairs skipped as a whole, by reason. Their layers are not
    /// counted in the layer totals.
    pub file_rejections: BTreeMap<String, usize>,
    pub rejected_files: Vec<FileRejection>,
}

impl CorpusReport {
    /// Share of layers aligned, or `None` when there were no layers.
    pub fn alignment_rate(&self) -> Option<f64> {
        (self.layers_total > 0).then(|| self.layers_aligned as f64 / self.layers_total as f64)
    }

    fn absorb(&mut self, outcome: &FileOutcome) {
        self.files += 1;
        match &outcome.result {
            Ok(aligned) => {
                self.layers_total += aligned.layers;
                self.layers_rejected += aligned.rejected.len();
                self.layers_aligned += aligned.layers - aligned.rejected.len();
                for r in &aligned.rejected {
                    *self
                        .rejection_reasons
                        .entry(r.reason.name().to_string())
                        .or_default() += 1;
                }
                self.chunks_emitted += aligned.records.len();
            }
            Err(err) => {
                *self
                    .file_rejections
                    .entry(err.name().to_string())
                    .or_default() += 1;
                self.rejected_files.push(FileRejection {
                    source_file: outcome.source_file.clone(),
                    target_file: outcome.target_file.clone(),
                    reason: err.name().to_string(),
                    detail: err.to_string(),
                });
            }
        }
    }
}

/// Why a single layer pair was not turned into chunks.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayerRejection {
    #[error("layer Z {source_z} does not match {target_z}")]
    ZMismatch {
        source_z: Decimal,
        target_z: Decimal,
    },
    #[error("layer has no extruding moves")]
    EmptyLayer,
    #[error(transparent)]
    Flip(#[from] FlipError),
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error("chunks do not reassemble the {0} layer")]
    Reassembly(&'static str),
}

impl LayerRejection {
    pub fn name(&self) -> &'static str {
        match self {
            LayerRejection::ZMismatch { .. } => "z_mismatch",
            LayerRejection::EmptyLayer => "empty_layer",
            LayerRejection::Flip(FlipError::IncompleteMapping(_)) => "incomplete_mapping",
            LayerRejection::Flip(FlipError::ConflictingMapping { .. }) => "conflicting_mapping",
            LayerRejection::Flip(FlipError::AmbiguousContour { .. }) => "ambiguous_contour",
            LayerRejection::Pair(PairError::NoCutFound { .. }) => "no_cut_found",
            LayerRejection::Pair(PairError::MaxLengthTooSmall(_)) => "max_length_too_small",
            LayerRejection::Reassembly(_) => "reassembly_mismatch",
        }
    }
}

/// Why a whole file pair was skipped.
#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("source has {source_layers} layers, target has {target_layers}")]
    LayerCountMismatch {
        source_layers: usize,
        target_layers: usize,
    },
    #[error("{side}: {error}")]
    NoLayers {
        side: &'static str,
        error: LayerError,
    },
    #[error("{side}: {error}")]
    Extrusion {
        side: &'static str,
        error: ExtrusionError,
    },
    #[error("cannot read {path}: {error}")]
    Unreadable { path: String, error: io::Error },
}

impl FileError {
    pub fn name(&self) -> &'static str {
        match self {
            FileError::LayerCountMismatch { .. } => "layer_count_mismatch",
            FileError::NoLayers { .. } => "no_layers_found",
            FileError::Extrusion { .. } => "relative_extrusion_input",
            FileError::Unreadable { .. } => "unreadable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedLayer {
    pub layer_index: usize,
    pub reason: LayerRejection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedFile {
    pub layers: usize,
    pub records: Vec<PairRecord>,
    pub rejected: Vec<RejectedLayer>,
}

#[derive(Debug)]
pub struct FileOutcome {
    pub source_file: String,
    pub target_file: String,
    pub result: Result<AlignedFile, FileError>,
}

/// A file pair to align. Names end up in the records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilePair {
    pub source: PathBuf,
    pub target: PathBuf,
    pub source_name: String,
    pub target_name: String,
}

impl FilePair {
    pub fn new(source: impl Into<PathBuf>, target: impl Into<PathBuf>) -> Self {
        let (source, target) = (source.into(), target.into());
        FilePair {
            source_name: source.display().to_string(),
            target_name: target.display().to_string(),
            source,
            target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusOptions {
    pub max_length: usize,
    pub source_flavor: Flavor,
    pub target_flavor: Flavor,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            max_length: 20,
            source_flavor: Flavor::Sailfish,
            target_flavor: Flavor::Marlin,
        }
    }
}

/// Extrusion style and state at the start of every layer, plus the layer
/// in relative form.
struct RelativeFile {
    layers: Vec<Layer>,
    starts: Vec<ExtrusionState>,
    relative: Vec<Vec<GcodeLine>>,
    style: gflavor_core::NumberStyle,
}

fn relative_layers(lines: &[GcodeLine], side: &'static str) -> Result<RelativeFile, FileError> {
    let layered = split_layers(lines).map_err(|error| FileError::NoLayers { side, error })?;
    let style = extrusion_style(lines);
    let mut state = ExtrusionState::default();
    let extrusion = |error| FileError::Extrusion { side, error };
    to_relative_with(&layered.header, &mut state, style).map_err(extrusion)?;
    let mut starts = Vec::with_capacity(layered.layers.len());
    let mut relative = Vec::with_capacity(layered.layers.len());
    for layer in &layered.layers {
        starts.push(state);
        relative.push(to_relative_with(&layer.lines, &mut state, style).map_err(extrusion)?);
    }
    to_relative_with(&layered.footer, &mut state, style).map_err(extrusion)?;
    Ok(RelativeFile {
        layers: layered.layers,
        starts,
        relative,
        style,
    })
}

fn relative_layer(index: usize, lines: Vec<GcodeLine>) -> Layer {
    Layer {
        index,
        z: Decimal::ZERO,
        lines,
    }
}

/// Aligns one pair of file texts.
pub fn align_texts(
    source_name: &str,
    source_text: &str,
    target_name: &str,
    target_text: &str,
    opts: &CorpusOptions,
) -> Result<AlignedFile, FileError> {
    let source = parse_file(source_text, opts.source_flavor);
    let target = parse_file(target_text, opts.target_flavor);
    let a = relative_layers(&source.lines, "source")?;
    let b = relative_layers(&target.lines, "target")?;
    if a.layers.len() != b.layers.len() {
        return Err(FileError::LayerCountMismatch {
            source_layers: a.layers.len(),
            target_layers: b.layers.len(),
        });
    }

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for index in 0..a.layers.len() {
        match align_layer(&a, &b, index, opts.max_length) {
            Ok(chunks) => {
                records.extend(chunks.into_iter().enumerate().map(
                    |(chunk_index, (source_text, target_text))| PairRecord {
                        source_file: source_name.to_string(),
                        target_file: target_name.to_string(),
                        layer_index: index,
                        chunk_index,
                        source_text,
                        target_text,
                        flavors: (opts.source_flavor, opts.target_flavor),
                    },
                ));
            }
            Err(reason) => rejected.push(RejectedLayer {
                layer_index: index,
                reason,
            }),
        }
    }
    Ok(AlignedFile {
        layers: a.layers.len(),
        records,
        rejected,
    })
}

fn align_layer(
    a: &RelativeFile,
    b: &RelativeFile,
    index: usize,
    max_length: usize,
) -> Result<Vec<(String, String)>, LayerRejection> {
    let (source_z, target_z) = (a.layers[index].z, b.layers[index].z);
    if (source_z - target_z).abs() > Z_TOLERANCE {
        return Err(LayerRejection::ZMismatch { source_z, target_z });
    }
    let ca = split_contours(&relative_layer(index, a.relative[index].clone()));
    let cb = split_contours(&relative_layer(index, b.relative[index].clone()));
    if ca.is_empty() || cb.is_empty() {
        return Err(LayerRejection::EmptyLayer);
    }
    let flipped = contour_flip(&ca, &cb)?;
    let pairs = pair_creation(&ca, &flipped.contours, max_length)?;

    let source_lines: Vec<GcodeLine> = pairs.iter().flat_map(|p| p.a.iter().cloned()).collect();
    let mut state = a.starts[index];
    if to_absolute_with(&source_lines, &mut state, a.style) != a.layers[index].lines {
        return Err(LayerRejection::Reassembly("source"));
    }
    let target_lines: Vec<GcodeLine> = pairs.iter().flat_map(|p| p.b.iter().cloned()).collect();
    if target_lines != join_contours(&flipped.contours) {
        return Err(LayerRejection::Reassembly("target"));
    }

    Ok(pairs
        .iter()
        .map(|p| (join_lines(&p.a), join_lines(&p.b)))
        .collect())
}

fn align_files(pair: &FilePair, opts: &CorpusOptions) -> FileOutcome {
    let read = |path: &Path| {
        std::fs::read_to_string(path).map_err(|error| FileError::Unreadable {
            path: path.display().to_string(),
            error,
        })
    };
    let result = read(&pair.source).and_then(|source| {
        let target = read(&pair.target)?;
        align_texts(&pair.source_name, &source, &pair.target_name, &target, opts)
    });
    FileOutcome {
        source_file: pair.source_name.clone(),
        target_file: pair.target_name.clone(),
        result,
    }
}

pub fn write_record<W: Write>(out: &mut W, record: &PairRecord) -> io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

/// Aligns every pair and streams the records to `sink`.
///
/// Pairs are processed in parallel but records are written in input order,
/// then by layer and chunk, so the output does not depend on scheduling.
pub fn build_corpus<W: Write>(
    pairs: &[FilePair],
    opts: &CorpusOptions,
    sink: &mut W,
) -> io::Result<CorpusReport> {
    let mut report = CorpusReport::default();
    for batch in pairs.chunks(BATCH) {
        let outcomes: Vec<FileOutcome> = batch.par_iter().map(|p| align_files(p, opts)).collect();
        for outcome in &outcomes {
            report.absorb(outcome);
            if let Ok(aligned) = &outcome.result {
                for record in &aligned.records {
                    write_record(sink, record)?;
                }
            }
        }
    }
    sink.flush()?;
    Ok(report)
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {error}")]
    Io { path: String, error: io::Error },
    #[error("manifest line {line}: expected two tab-separated paths")]
    BadLine { line: usize },
}

/// Reads a manifest of `source<TAB>target` lines. Blank lines and lines
/// starting with `#` are skipped. Relative paths are taken from the
/// manifest's directory; record names keep the text as written.
pub fn read_manifest(path: &Path) -> Result<Vec<FilePair>, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|error| ManifestError::Io {
        path: path.display().to_string(),
        error,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest(&text, base)
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<FilePair>, ManifestError> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(ManifestError::BadLine { line: i + 1 });
        };
        if a.is_empty() || b.is_empty() {
            return Err(ManifestError::BadLine { line: i + 1 });
        }
        pairs.push(FilePair {
            source: base.join(a),
            target: base.join(b),
            source_name: a.to_string(),
            target_name: b.to_string(),
        });
    }
    Ok(pairs)
}
