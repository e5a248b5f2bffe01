//! Synthetic Sailfish/Marlin file pairs describing the same toolpath.
//!
//! The generator lays down random polyline contours with unique coordinates
//! and writes them twice: once in a Sailfish-style dialect and once in a
//! Marlin-style dialect with the contours of every layer shuffled, its own
//! cumulative extrusion counter and extra dialect-only lines between
//! contours. Useful for exercising the corpus pipeline end to end.

use std::collections::HashSet;
use std::fmt::Write;

use gflavor_core::decimal::NumberStyle;
use gflavor_core::Decimal;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub layers: usize,
    /// Inclusive range of contours per layer.
    pub contours: (usize, usize),
    /// Inclusive range of extruding moves per contour.
    pub moves: (usize, usize),
    /// Probability that an extruding move reuses a point from another
    /// contour of the same layer.
    pub duplicate_rate: f64,
    /// Probability of a dialect-only line before each target contour.
    pub insert_rate: f64,
    /// Shuffle contour order in the target file.
    pub permute: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            layers: 10,
            contours: (2, 6),
            moves: (3, 30),
            duplicate_rate: 0.0,
            insert_rate: 0.5,
            permute: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthPair {
    /// Sailfish-dialect file.
    pub source: String,
    /// Marlin-dialect file.
    pub target: String,
    /// Per layer, `order[j]` is the source contour written at target
    /// position `j`.
    pub order: Vec<Vec<usize>>,
}

struct Move {
    x: i64,
    y: i64,
    /// Extrusion amount in units of 10^-5.
    e: i64,
}

struct Path {
    start: (i64, i64),
    moves: Vec<Move>,
}

const LAYER_HEIGHT: i64 = 20_000;
const FIRST_LAYER: i64 = 20_000;
/// Coordinates are drawn on a 0.001 mm grid inside the bed.
const BED: (i64, i64) = (5_000, 195_000);

fn mm(thousandths: i64) -> Decimal {
    Decimal::from_scaled(thousandths * 100)
}

fn fixed(digits: u8) -> NumberStyle {
    NumberStyle {
        omit_leading_zero: false,
        fixed_fraction: Some(digits),
    }
}

pub fn generate_pair(cfg: &SynthConfig) -> SynthPair {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let layers: Vec<Vec<Path>> = (0..cfg.layers)
        .map(|_| layer_paths(&mut rng, cfg))
        .collect();

    let order: Vec<Vec<usize>> = layers
        .iter()
        .map(|paths| {
            let mut order: Vec<usize> = (0..paths.len()).collect();
            if cfg.permute {
                order.shuffle(&mut rng);
            }
            order
        })
        .collect();

    let source = write_sailfish(&layers);
    let target = write_marlin(&layers, &order, cfg, &mut rng);
    SynthPair {
        source,
        target,
        order,
    }
}

fn layer_paths(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Vec<Path> {
    let mut used: HashSet<(i64, i64)> = HashSet::new();
    let mut placed: Vec<(usize, (i64, i64))> = Vec::new();
    let n = rng.random_range(cfg.contours.0..=cfg.contours.1);
    let mut paths = Vec::with_capacity(n);
    for c in 0..n {
        let start = fresh_point(rng, &mut used);
        let len = rng.random_range(cfg.moves.0..=cfg.moves.1);
        let mut at = start;
        let mut moves = Vec::with_capacity(len);
        for _ in 0..len {
            let donor = placed.iter().filter(|(pc, _)| *pc != c).count();
            let next = if donor > 0 && rng.random_bool(cfg.duplicate_rate) {
                let pick = rng.random_range(0..donor);
                placed
                    .iter()
                    .filter(|(pc, _)| *pc != c)
                    .nth(pick)
                    .unwrap()
                    .1
            } else {
                step_point(rng, at, &mut used)
            };
            let dist = (((next.0 - at.0) as f64).hypot((next.1 - at.1) as f64)) / 1000.0;
            let e = ((dist * 0.0333 * 1e5).round() as i64).max(1);
            moves.push(Move {
                x: next.0,
                y: next.1,
                e,
            });
            at = next;
        }
        placed.extend(moves.iter().map(|m| (c, (m.x, m.y))));
        paths.push(Path { start, moves });
    }
    paths
}

fn fresh_point(rng: &mut ChaCha8Rng, used: &mut HashSet<(i64, i64)>) -> (i64, i64) {
    loop {
        let p = (
            rng.random_range(BED.0..BED.1),
            rng.random_range(BED.0..BED.1),
        );
        if used.insert(p) {
            return p;
        }
    }
}

fn step_point(
    rng: &mut ChaCha8Rng,
    from: (i64, i64),
    used: &mut HashSet<(i64, i64)>,
) -> (i64, i64) {
    loop {
        let p = (
            (from.0 + rng.random_range(-4_000..=4_000)).clamp(BED.0, BED.1),
            (from.1 + rng.random_range(-4_000..=4_000)).clamp(BED.0, BED.1),
        );
        if used.insert(p) {
            return p;
        }
    }
}

fn layer_z(index: usize) -> Decimal {
    Decimal::from_scaled(FIRST_LAYER + LAYER_HEIGHT * index as i64)
}

fn write_sailfish(layers: &[Vec<Path>]) -> String {
    let xy = fixed(3);
    let e_style = fixed(5);
    let mut out = String::new();
    out.push_str("(Sailfish output for a synthetic part)\n");
    out.push_str("M136 (enable build)\n");
    out.push_str("M73 P0\n");
    out.push_str("G162 X Y F2000 (home XY axes maximum)\n");
    out.push_str("G161 Z F900 (home Z axis minimum)\n");
    out.push_str("G92 X0 Y0 Z0 A0 B0 (set zero)\n");
    out.push_str("M104 S230 T0 (set extruder temperature)\n");
    out.push_str("M133 T0 (stabilize extruder temperature)\n");
    out.push_str("G92 E0\n");

    let mut e = 0i64;
    for (index, paths) in layers.iter().enumerate() {
        let z = layer_z(index);
        writeln!(out, "; layer {}, Z = {}", index + 1, z.render(fixed(3))).unwrap();
        writeln!(out, "G1 Z{} F1000", z.render(fixed(3))).unwrap();
        for path in paths {
            writeln!(
                out,
                "G1 X{} Y{} F9000 (travel)",
                mm(path.start.0).render(xy),
                mm(path.start.1).render(xy)
            )
            .unwrap();
            for m in &path.moves {
                e += m.e;
                writeln!(
                    out,
                    "G1 X{} Y{} F1500 E{}",
                    mm(m.x).render(xy),
                    mm(m.y).render(xy),
                    Decimal::from_scaled(e).render(e_style)
                )
                .unwrap();
            }
        }
    }
    out.push_str("M127 T0 (fan off)\n");
    out.push_str("M18 A B (turn off steppers)\n");
    out.push_str("M73 P100\n");
    out.push_str("M137 (build end notification)\n");
    out
}

const MARLIN_INSERTS: [&str; 5] = [
    "M106 S255",
    ";TYPE:External perimeter",
    ";WIDTH:0.45",
    "G1 F1800",
    "M204 S1000",
];

fn write_marlin(
    layers: &[Vec<Path>],
    order: &[Vec<usize>],
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> String {
    let trimmed = NumberStyle::default();
    let mut out = String::new();
    out.push_str("; generated for Marlin firmware\n");
    out.push_str("M73 P0 R12\n");
    out.push_str("M201 X1000 Y1000 Z200 E5000\n");
    out.push_str("M104 S230\n");
    out.push_str("M140 S60\n");
    out.push_str("G28 ; home all axes\n");
    out.push_str("G90\n");
    out.push_str("M82 ; absolute extrusion\n");
    out.push_str("G92 E0\n");

    let mut e = 0i64;
    for (index, paths) in layers.iter().enumerate() {
        let z = layer_z(index);
        out.push_str(";LAYER_CHANGE\n");
        writeln!(out, ";Z:{z}").unwrap();
        writeln!(out, "G1 Z{z} F720").unwrap();
        for &c in &order[index] {
            let path = &paths[c];
            if rng.random_bool(cfg.insert_rate) {
                let line = MARLIN_INSERTS[rng.random_range(0..MARLIN_INSERTS.len())];
                writeln!(out, "{line}").unwrap();
            }
            // Retract, travel, unretract.
            writeln!(out, "G1 E{} F2100", Decimal::from_scaled(e - 80_000)).unwrap();
            writeln!(
                out,
                "G0 X{} Y{} F9000",
                mm(path.start.0).render(trimmed),
                mm(path.start.1).render(trimmed)
            )
            .unwrap();
            writeln!(out, "G1 E{} F2100", Decimal::from_scaled(e)).unwrap();
            for m in &path.moves {
                e += m.e;
                writeln!(
                    out,
                    "G1 X{} Y{} E{}",
                    mm(m.x).render(trimmed),
                    mm(m.y).render(trimmed),
                    Decimal::from_scaled(e)
                )
                .unwrap();
            }
        }
    }
    out.push_str("M107\n");
    out.push_str("M104 S0 ; turn off hotend\n");
    out.push_str("M140 S0\n");
    out.push_str("M84 X Y E ; disable motors\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use gflavor_core::{parse_file, split_layers, Flavor};

    #[test]
    fn same_seed_same_files() {
        let cfg = SynthConfig {
            seed: 7,
            layers: 3,
            ..SynthConfig::default()
        };
        let a = generate_pair(&cfg);
        let b = generate_pair(&cfg);
        assert_eq!(a.source, b.source);
        assert_eq!(a.target, b.target);
    }

    #[test]
    fn files_parse_cleanly_with_matching_layers() {
        let pair = generate_pair(&SynthConfig {
            seed: 3,
            layers: 4,
            ..SynthConfig::default()
        });
        let src = parse_file(&pair.source, Flavor::Sailfish);
        let tgt = parse_file(&pair.target, Flavor::Marlin);
        assert!(src.diagnostics.is_empty(), "{:?}", src.diagnostics);
        assert!(tgt.diagnostics.is_empty(), "{:?}", tgt.diagnostics);
        let a = split_layers(&src.lines).unwrap();
        let b = split_layers(&tgt.lines).unwrap();
        assert_eq!(a.layers.len(), 4);
        assert_eq!(b.layers.len(), 4);
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            assert_eq!(la.z, lb.z);
        }
    }
}
