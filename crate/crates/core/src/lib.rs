//! Parsing, dialect alignment, extrusion bookkeeping and layer rasterization
//! for extrusion 3D-printing G-code.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, record formats and
//! the command-line front end live in the `gflavor` crate.
//!
//! Typical flow for building a paired corpus:
//!
//! 1. [`parse::parse_file`] each file and [`layer::split_layers`] it.
//! 2. [`extrusion::to_relative`] so chunks do not depend on each other.
//! 3. Per layer, [`layer::split_contours`] both sides and
//!    [`align::contour_flip`] the target into the source's contour order.
//! 4. [`align::pair_creation`] cuts the aligned layers into chunk pairs.
//!
//! Evaluation renders layers with [`raster::render_layer`] and compares them
//! with [`raster::iou`] and [`raster::iou_at_k`].
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod align;
pub mod decimal;
pub mod extrusion;
pub mod layer;
pub mod line;
pub mod parse;
pub mod raster;

pub use align::{
    contour_flip, fixed_chunks, line_key, pair_creation, ChunkPair, ContourMapping, FlipError,
    FlippedLayer, LineKey, PairError,
};
pub use decimal::{Decimal, NumberStyle};
pub use extrusion::{to_absolute, to_relative, ExtrusionError, ExtrusionState};
pub use layer::{split_contours, split_layers, Contour, Layer, LayerError, LayeredFile};
pub use line::{Flavor, GcodeLine, LineKind, NumericToken};
pub use parse::{parse_file, parse_line, Diagnostic, LineParser, ParsedFile};
pub use raster::{iou, iou_at_k, render_layer, LayerRaster, RasterConfig, RasterError};
