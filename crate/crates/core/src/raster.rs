//! Top-down layer rasterization and image-space IoU.
//!
//! Each extruding move is drawn as a capsule: a rectangle of width
//! `bead_width` along the segment with round caps at both ends. A pixel is
//! occupied when its center lies inside the union of capsules. Pixel
//! lattices are anchored at integer multiples of the resolution, so any two
//! rasters with the same resolution share a grid and can be compared on the
//! union of their bounds without resampling.

use alloc::vec;
use alloc::vec::Vec;

use crate::line::GcodeLine;

/// IoU thresholds reported together as the standard metric row.
pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.9, 0.95, 0.98, 0.99];

const INSIDE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned world-space rectangle in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub const fn new(min: Point, max: Point) -> Self {
        Rect { min, max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterConfig {
    /// mm per pixel.
    pub resolution: f64,
    /// Stroke width of deposited material in mm.
    pub bead_width: f64,
    /// Fixed world bounds. When absent, the bounding box of the strokes
    /// grown by one bead width is used.
    pub bounds: Option<Rect>,
    /// Position assumed before the first positioned line.
    pub default_start: Option<Point>,
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            resolution: 0.1,
            bead_width: 0.4,
            bounds: None,
            default_start: None,
        }
    }
}

impl RasterConfig {
    fn validate(&self) -> Result<(), RasterError> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(RasterError::InvalidResolution(self.resolution));
        }
        if !(self.bead_width.is_finite() && self.bead_width > 0.0) {
            return Err(RasterError::InvalidBeadWidth(self.bead_width));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum RasterError {
    #[error("resolution must be positive, got {0}")]
    InvalidResolution(f64),
    #[error("bead width must be positive, got {0}")]
    InvalidBeadWidth(f64),
    #[error("line {line}: extruding move before any known X/Y position")]
    UnknownStartPosition { line: usize },
    #[error("rasters have different resolutions ({0} vs {1})")]
    ResolutionMismatch(f64, f64),
    #[error("no IoU values given")]
    EmptyInput,
}

/// One deposited stroke.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub from: Point,
    pub to: Point,
}

/// Collects the strokes of a line sequence.
///
/// Positions are modal and carried through travel moves; `start` seeds the
/// position before the first line. Returns the strokes and the final
/// position, if known.
pub fn stroke_segments(
    lines: &[GcodeLine],
    start: Option<Point>,
) -> Result<(Vec<Segment>, Option<Point>), RasterError> {
    let mut x = start.map(|p| p.x);
    let mut y = start.map(|p| p.y);
    let mut segments = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let coord = |letter| line.value(letter).map(|v| v.to_f64());
        if line.is_linear_move() {
            let tx = coord('X').or(x);
            let ty = coord('Y').or(y);
            if line.is_extruding() {
                match (x, y, tx, ty) {
                    (Some(x0), Some(y0), Some(x1), Some(y1)) => segments.push(Segment {
                        from: Point::new(x0, y0),
                        to: Point::new(x1, y1),
                    }),
                    _ => return Err(RasterError::UnknownStartPosition { line: i }),
                }
            }
            x = tx;
            y = ty;
        } else if line.command().is_some_and(|c| c.is('G', 92)) {
            x = coord('X').or(x);
            y = coord('Y').or(y);
        }
    }
    let end = x.zip(y).map(|(x, y)| Point::new(x, y));
    Ok((segments, end))
}

/// Renders a layer with `cfg.default_start` as the initial position.
pub fn render_layer(lines: &[GcodeLine], cfg: &RasterConfig) -> Result<LayerRaster, RasterError> {
    render_layer_from(lines, cfg, cfg.default_start).map(|(raster, _)| raster)
}

/// Renders a layer starting at `start`, returning the raster and the final
/// tool position so consecutive layers can be chained.
pub fn render_layer_from(
    lines: &[GcodeLine],
    cfg: &RasterConfig,
    start: Option<Point>,
) -> Result<(LayerRaster, Option<Point>), RasterError> {
    cfg.validate()?;
    let (segments, end) = stroke_segments(lines, start.or(cfg.default_start))?;
    Ok((LayerRaster::from_segments(&segments, cfg)?, end))
}

/// Binary occupancy grid of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerRaster {
    col0: i64,
    row0: i64,
    width: usize,
    height: usize,
    resolution: f64,
    /// Row-major, row 0 at minimum Y.
    grid: Vec<u8>,
}

impl LayerRaster {
    /// Empty raster covering `bounds`, snapped outward to the lattice.
    pub fn empty(bounds: Option<Rect>, resolution: f64) -> Result<Self, RasterError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(RasterError::InvalidResolution(resolution));
        }
        let Some(b) = bounds else {
            return Ok(LayerRaster {
                col0: 0,
                row0: 0,
                width: 0,
                height: 0,
                resolution,
                grid: Vec::new(),
            });
        };
        let col0 = libm::floor(b.min.x / resolution) as i64;
        let row0 = libm::floor(b.min.y / resolution) as i64;
        let col1 = libm::ceil(b.max.x / resolution) as i64;
        let row1 = libm::ceil(b.max.y / resolution) as i64;
        let width = (col1 - col0).max(0) as usize;
        let height = (row1 - row0).max(0) as usize;
        Ok(LayerRaster {
            col0,
            row0,
            width,
            height,
            resolution,
            grid: vec![0; width * height],
        })
    }

    pub fn from_segments(segments: &[Segment], cfg: &RasterConfig) -> Result<Self, RasterError> {
        cfg.validate()?;
        let bounds = cfg.bounds.or_else(|| {
            let margin = cfg.bead_width;
            let mut it = segments.iter().flat_map(|s| [s.from, s.to]);
            let first = it.next()?;
            let (mut min, mut max) = (first, first);
            for p in it {
                min = Point::new(min.x.min(p.x), min.y.min(p.y));
                max = Point::new(max.x.max(p.x), max.y.max(p.y));
            }
            Some(Rect::new(
                Point::new(min.x - margin, min.y - margin),
                Point::new(max.x + margin, max.y + margin),
            ))
        });
        let mut raster = LayerRaster::empty(bounds, cfg.resolution)?;
        let radius = cfg.bead_width / 2.0;
        for s in segments {
            raster.stamp_capsule(s, radius);
        }
        Ok(raster)
    }

    /// Raster whose pixels are set where `inside` holds at the pixel center.
    pub fn from_predicate<F>(bounds: Rect, resolution: f64, inside: F) -> Result<Self, RasterError>
    where
        F: Fn(Point) -> bool,
    {
        let mut raster = LayerRaster::empty(Some(bounds), resolution)?;
        for row in 0..raster.height {
            for col in 0..raster.width {
                if inside(raster.center(col, row)) {
                    raster.grid[row * raster.width + col] = 1;
                }
            }
        }
        Ok(raster)
    }

    fn center(&self, col: usize, row: usize) -> Point {
        Point::new(
            ((self.col0 + col as i64) as f64 + 0.5) * self.resolution,
            ((self.row0 + row as i64) as f64 + 0.5) * self.resolution,
        )
    }

    fn stamp_capsule(&mut self, s: &Segment, radius: f64) {
        if self.width == 0 || self.height == 0 {
            return;
        }
        let res = self.resolution;
        let local = |v: f64, origin: i64, len: usize, round: fn(f64) -> f64| -> usize {
            let idx = round(v / res - 0.5) as i64 - origin;
            idx.clamp(0, len as i64 - 1) as usize
        };
        let c_lo = local(
            s.from.x.min(s.to.x) - radius,
            self.col0,
            self.width,
            libm::floor,
        );
        let c_hi = local(
            s.from.x.max(s.to.x) + radius,
            self.col0,
            self.width,
            libm::ceil,
        );
        let r_lo = local(
            s.from.y.min(s.to.y) - radius,
            self.row0,
            self.height,
            libm::floor,
        );
        let r_hi = local(
            s.from.y.max(s.to.y) + radius,
            self.row0,
            self.height,
            libm::ceil,
        );
        let limit = radius * radius + INSIDE_EPSILON;
        for row in r_lo..=r_hi {
            for col in c_lo..=c_hi {
                if distance_sq_to_segment(self.center(col, row), s) <= limit {
                    self.grid[row * self.width + col] = 1;
                }
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// World coordinate of the outer corner of pixel (0, 0).
    pub fn origin(&self) -> Point {
        Point::new(
            self.col0 as f64 * self.resolution,
            self.row0 as f64 * self.resolution,
        )
    }

    /// Row-major cells, 0 or 1, row 0 at minimum Y.
    pub fn cells(&self) -> &[u8] {
        &self.grid
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        col < self.width && row < self.height && self.grid[row * self.width + col] != 0
    }

    fn get_global(&self, col: i64, row: i64) -> bool {
        let (c, r) = (col - self.col0, row - self.row0);
        c >= 0 && r >= 0 && self.get(c as usize, r as usize)
    }

    pub fn occupied(&self) -> usize {
        self.grid.iter().filter(|&&v| v != 0).count()
    }

    pub fn occupied_area(&self) -> f64 {
        self.occupied() as f64 * self.resolution * self.resolution
    }
}

fn distance_sq_to_segment(p: Point, s: &Segment) -> f64 {
    let (dx, dy) = (s.to.x - s.from.x, s.to.y - s.from.y);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq > 0.0 {
        (((p.x - s.from.x) * dx + (p.y - s.from.y) * dy) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (s.from.x + t * dx - p.x, s.from.y + t * dy - p.y);
    qx * qx + qy * qy
}

/// Intersection over union of the occupied pixels, compared on the union of
/// both rasters' bounds. Two empty rasters score 1.
pub fn iou(a: &LayerRaster, b: &LayerRaster) -> Result<f64, RasterError> {
    let scale = a.resolution.abs().max(b.resolution.abs());
    if (a.resolution - b.resolution).abs() > 1e-12 * scale {
        return Err(RasterError::ResolutionMismatch(a.resolution, b.resolution));
    }
    let (count_a, count_b) = (a.occupied(), b.occupied());
    if count_a + count_b == 0 {
        return Ok(1.0);
    }
    let col_lo = a.col0.max(b.col0);
    let col_hi = (a.col0 + a.width as i64).min(b.col0 + b.width as i64);
    let row_lo = a.row0.max(b.row0);
    let row_hi = (a.row0 + a.height as i64).min(b.row0 + b.height as i64);
    let mut both = 0usize;
    for row in row_lo..row_hi {
        for col in col_lo..col_hi {
            if a.get_global(col, row) && b.get_global(col, row) {
                both += 1;
            }
        }
    }
    Ok(both as f64 / (count_a + count_b - both) as f64)
}

/// Percentage of values strictly greater than `k`.
pub fn iou_at_k(ious: &[f64], k: f64) -> Result<f64, RasterError> {
    if ious.is_empty() {
        return Err(RasterError::EmptyInput);
    }
    let above = ious.iter().filter(|&&v| v > k).count();
    Ok(100.0 * above as f64 / ious.len() as f64)
}
