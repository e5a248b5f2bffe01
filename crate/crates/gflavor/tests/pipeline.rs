mod common;

use std::collections::HashSet;

use common::{absolutize, e_before, marker_layers, relative_oracle, with_e_split};
use gflavor::corpus::{align_texts, build_corpus, CorpusOptions, FilePair};
use gflavor::evaluate::{evaluate_texts, EvalInput};
use gflavor::synth::{generate_pair, SynthConfig};
use gflavor::PairRecord;
use gflavor_core::{iou, parse_file, render_layer, split_layers, Flavor, RasterConfig};
use proptest::prelude::*;

fn is_extruding(line: &str) -> bool {
    line.starts_with("G1 X") && line.contains(" E")
}

/// Contours of a layer as line ranges: each starts where the previous
/// extruding run ended.
fn oracle_contours(lines: &[&str]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..lines.len() {
        if is_extruding(lines[i - 1]) && !is_extruding(lines[i]) {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..lines.len());
    out
}

fn layer_chunks<'a>(records: &'a [PairRecord], layer: usize) -> (String, String) {
    let of_layer: Vec<&'a PairRecord> = records.iter().filter(|r| r.layer_index == layer).collect();
    for (k, r) in of_layer.iter().enumerate() {
        assert_eq!(r.chunk_index, k);
    }
    let src: Vec<&str> = of_layer.iter().map(|r| r.source_text.as_str()).collect();
    let tgt: Vec<&str> = of_layer.iter().map(|r| r.target_text.as_str()).collect();
    (src.join("\n"), tgt.join("\n"))
}

#[test]
fn self_pair_gives_identical_chunks() {
    let pair = generate_pair(&SynthConfig {
        seed: 11,
        layers: 6,
        ..SynthConfig::default()
    });
    let opts = CorpusOptions {
        target_flavor: Flavor::Sailfish,
        ..CorpusOptions::default()
    };
    let aligned = align_texts("a", &pair.source, "a", &pair.source, &opts).unwrap();
    assert_eq!(aligned.layers, 6);
    assert!(aligned.rejected.is_empty());
    assert!(aligned
        .records
        .iter()
        .all(|r| r.source_text == r.target_text));
}

#[test]
fn permuted_ten_layer_pair_reassembles_both_sides() {
    let pair = generate_pair(&SynthConfig {
        seed: 2024,
        layers: 10,
        insert_rate: 0.8,
        ..SynthConfig::default()
    });
    assert!(pair.order.iter().any(|o| o.windows(2).any(|w| w[0] > w[1])));
    let aligned = align_texts(
        "s",
        &pair.source,
        "t",
        &pair.target,
        &CorpusOptions::default(),
    )
    .unwrap();
    assert_eq!(aligned.layers, 10);
    assert!(aligned.rejected.is_empty(), "{:?}", aligned.rejected);

    let src_lines: Vec<&str> = pair.source.lines().collect();
    let tgt_relative = relative_oracle(&pair.target);
    let tgt_lines: Vec<&str> = pair.target.lines().collect();
    let src_layers = marker_layers(&pair.source, "; layer");
    let tgt_layers = marker_layers(&pair.target, ";LAYER_CHANGE");
    assert_eq!(src_layers.len(), 10);

    for layer in 0..10 {
        let (src, tgt) = layer_chunks(&aligned.records, layer);
        for r in aligned.records.iter().filter(|r| r.layer_index == layer) {
            assert!(r.source_text.lines().count() <= 20);
            assert!(r.target_text.lines().count() <= 20);
        }

        // Source: prefix sums from the cumulative value before the layer.
        let range = src_layers[layer].clone();
        let restored = absolutize(
            &src.lines().collect::<Vec<_>>(),
            e_before(&pair.source, range.start),
        );
        assert_eq!(restored, with_e_split(&src_lines[range]));

        // Target: the original layer's contours taken in source order, with
        // per-move E amounts.
        let range = tgt_layers[layer].clone();
        let layer_lines = &tgt_lines[range.clone()];
        let contours = oracle_contours(layer_lines);
        assert_eq!(contours.len(), pair.order[layer].len());
        let mut expected = Vec::new();
        for c in 0..contours.len() {
            let j = pair.order[layer].iter().position(|&s| s == c).unwrap();
            let r = contours[j].clone();
            expected.extend_from_slice(&tgt_relative[range.start + r.start..range.start + r.end]);
        }
        let got = with_e_split(&tgt.lines().collect::<Vec<_>>());
        assert_eq!(got, expected, "layer {layer}");
    }
}

fn write_pairs(dir: &std::path::Path, n: usize, cfg: &SynthConfig) -> Vec<FilePair> {
    (0..n)
        .map(|i| {
            let pair = generate_pair(&SynthConfig {
                seed: cfg.seed + i as u64,
                ..cfg.clone()
            });
            let a = dir.join(format!("{i}_a.gcode"));
            let b = dir.join(format!("{i}_b.gcode"));
            std::fs::write(&a, pair.source).unwrap();
            std::fs::write(&b, pair.target).unwrap();
            FilePair::new(a, b)
        })
        .collect()
}

#[test]
fn corpus_output_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = write_pairs(
        dir.path(),
        8,
        &SynthConfig {
            seed: 90,
            layers: 5,
            duplicate_rate: 0.05,
            ..SynthConfig::default()
        },
    );
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let mut buf = Vec::new();
            let report = build_corpus(&pairs, &CorpusOptions::default(), &mut buf).unwrap();
            (buf, report)
        })
    };
    let (one, r1) = run(1);
    let (four, r4) = run(4);
    assert!(!one.is_empty());
    assert_eq!(one, four);
    assert_eq!(r1, r4);
}

#[test]
fn mismatched_layer_counts_skip_the_file() {
    let pair = generate_pair(&SynthConfig {
        seed: 5,
        layers: 4,
        ..SynthConfig::default()
    });
    let cut = pair.target.rfind(";LAYER_CHANGE").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.gcode");
    let b = dir.path().join("b.gcode");
    std::fs::write(&a, &pair.source).unwrap();
    std::fs::write(&b, &pair.target[..cut]).unwrap();
    let mut sink = Vec::new();
    let report = build_corpus(
        &[FilePair::new(&a, &b)],
        &CorpusOptions::default(),
        &mut sink,
    )
    .unwrap();
    assert!(sink.is_empty());
    assert_eq!(report.files, 1);
    assert_eq!(report.layers_total, 0);
    assert_eq!(report.file_rejections.get("layer_count_mismatch"), Some(&1));
    assert_eq!(report.rejected_files[0].reason, "layer_count_mismatch");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn report_conservation_and_record_invariants(
        seed in 0u64..1000,
        duplicate_rate in 0.0f64..0.4,
        insert_rate in 0.0f64..1.0,
        max_length in 2usize..30,
    ) {
        let pair = generate_pair(&SynthConfig {
            seed,
            layers: 4,
            duplicate_rate,
            insert_rate,
            ..SynthConfig::default()
        });
        let opts = CorpusOptions { max_length, ..CorpusOptions::default() };
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.gcode");
        let b = dir.path().join("b.gcode");
        std::fs::write(&a, &pair.source).unwrap();
        std::fs::write(&b, &pair.target).unwrap();
        let mut sink = Vec::new();
        let report = build_corpus(&[FilePair::new(&a, &b)], &opts, &mut sink).unwrap();

        prop_assert_eq!(report.layers_aligned + report.layers_rejected, report.layers_total);
        prop_assert_eq!(report.rejection_reasons.values().sum::<usize>(), report.layers_rejected);

        let text = String::from_utf8(sink).unwrap();
        let mut keys = HashSet::new();
        let mut count = 0;
        for line in text.lines() {
            let r: PairRecord = serde_json::from_str(line).unwrap();
            prop_assert!(r.source_text.lines().count() <= max_length);
            prop_assert!(r.target_text.lines().count() <= max_length);
            prop_assert!(keys.insert((r.source_file.clone(), r.layer_index, r.chunk_index)));
            count += 1;
        }
        prop_assert_eq!(count, report.chunks_emitted);
    }
}

const TWO_LAYER: &str = "\
G28
;LAYER_CHANGE
G1 Z0.2 F720
G0 X0 Y0
G1 X10 Y0 E1
G1 X10 Y10 E2
G1 X0 Y10 E3
G1 X0 Y0 E4
;TYPE:Solid infill
G0 X2 Y2
G1 X8 Y2 E5
G1 X8 Y4 E6
G1 X2 Y4 E7
;LAYER_CHANGE
G1 Z0.4 F720
G0 X0 Y0
G1 X10 Y0 E8
G1 X10 Y10 E9
G1 X0 Y10 E10
G1 X0 Y0 E11
";

#[test]
fn deleted_infill_lowers_only_that_layer() {
    let start = TWO_LAYER.find(";TYPE:Solid infill").unwrap();
    let end = TWO_LAYER[start..].find(";LAYER_CHANGE").unwrap() + start;
    let predicted = format!("{}{}", &TWO_LAYER[..start], &TWO_LAYER[end..]);
    let input = |text| EvalInput {
        text,
        flavor: Flavor::Marlin,
        relative: false,
    };
    let cfg = RasterConfig::default();
    let table = evaluate_texts(
        input(&predicted),
        input(TWO_LAYER),
        &cfg,
        &[0.9, 0.95, 0.98, 0.99],
    )
    .unwrap();
    assert_eq!(table.layers, 2);
    assert!(table.per_layer_iou[0] < 1.0);
    assert_eq!(table.per_layer_iou[1], 1.0);
    assert_eq!(
        table.iou_at_k.iter().map(|s| s.percent).collect::<Vec<_>>(),
        vec![50.0; 4]
    );

    // Direct raster comparison of the first layer.
    let layer = |text| {
        split_layers(&parse_file(text, Flavor::Marlin).lines)
            .unwrap()
            .layers[0]
            .clone()
    };
    let p = render_layer(&layer(&predicted).lines, &cfg).unwrap();
    let r = render_layer(&layer(TWO_LAYER).lines, &cfg).unwrap();
    assert_eq!(table.per_layer_iou[0], iou(&p, &r).unwrap());
    assert!(p.occupied() < r.occupied());
}
