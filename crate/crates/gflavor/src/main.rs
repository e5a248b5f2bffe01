use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use gflavor::corpus::{self, CorpusOptions, FilePair};
use gflavor::evaluate::{self, EvalError, EvalInput};
use gflavor::synth::{self, SynthConfig};
use gflavor::{pgm, summary};
use gflavor_core::parse::serialize_lines;
use gflavor_core::raster::render_layer_from;
use gflavor_core::{parse_file, split_layers, to_absolute, to_relative, Flavor, RasterConfig};

#[derive(Parser)]
#[command(
    name = "gflavor",
    version,
    about = "G-code dialect alignment and evaluation tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a structural summary of a file as JSON.
    Parse {
        path: PathBuf,
        #[arg(long, default_value = "marlin")]
        flavor: Flavor,
        /// Human-readable output instead of JSON.
        #[arg(long)]
        pretty: bool,
    },
    /// Align file pairs and write chunk-pair records.
    Align {
        /// Source-flavor file.
        source: Option<PathBuf>,
        /// Target-flavor file.
        target: Option<PathBuf>,
        /// Tab-separated list of file pairs, one pair per line.
        #[arg(long, conflicts_with_all = ["source", "target"])]
        manifest: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        max_length: usize,
        /// Record output (line-delimited JSON). Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report output (JSON). Defaults to stderr.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "sailfish")]
        flavor_a: Flavor,
        #[arg(long, default_value = "marlin")]
        flavor_b: Flavor,
    },
    /// Render layers as PGM images.
    Render {
        path: PathBuf,
        /// Layer index or `all`.
        #[arg(long, default_value = "all")]
        layer: LayerSelection,
        #[arg(long, default_value_t = 0.1)]
        resolution: f64,
        #[arg(long, default_value_t = 0.4)]
        bead_width: f64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "marlin")]
        flavor: Flavor,
    },
    /// Compare a predicted file with a reference file layer by layer.
    Iou {
        predicted: PathBuf,
        reference: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.9,0.95,0.98,0.99")]
        thresholds: Vec<f64>,
        /// The predicted file uses relative extrusion.
        #[arg(long)]
        relative: bool,
        #[arg(long, default_value_t = 0.1)]
        resolution: f64,
        #[arg(long, default_value_t = 0.4)]
        bead_width: f64,
        #[arg(long, default_value = "marlin")]
        flavor_predicted: Flavor,
        #[arg(long, default_value = "marlin")]
        flavor_reference: Flavor,
        /// Print the aligned text table instead of JSON.
        #[arg(long)]
        pretty: bool,
    },
    /// Convert between absolute and relative extrusion. Use `-` for stdin.
    Extrude {
        path: PathBuf,
        #[arg(
            long,
            conflicts_with = "to_absolute",
            required_unless_present = "to_absolute"
        )]
        to_relative: bool,
        #[arg(long)]
        to_absolute: bool,
        #[arg(long, default_value = "marlin")]
        flavor: Flavor,
    },
    /// Write synthetic Sailfish/Marlin file pairs and a manifest.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        pairs: usize,
        #[arg(long, default_value_t = 10)]
        layers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        duplicate_rate: f64,
    },
}

#[derive(Clone, Copy, Debug)]
enum LayerSelection {
    All,
    One(usize),
}

impl std::str::FromStr for LayerSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(LayerSelection::All);
        }
        s.parse()
            .map(LayerSelection::One)
            .map_err(|_| format!("expected a layer index or `all`, got {s:?}"))
    }
}

enum Failure {
    Usage(String),
    Rejected(String),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Internal(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Rejected(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Parse {
            path,
            flavor,
            pretty,
        } => cmd_parse(&path, flavor, pretty),
        Command::Align {
            source,
            target,
            manifest,
            max_length,
            out,
            report,
            flavor_a,
            flavor_b,
        } => {
            let pairs = match (source, target, manifest) {
                (Some(a), Some(b), None) => vec![FilePair::new(a, b)],
                (None, None, Some(m)) => {
                    corpus::read_manifest(&m).map_err(|e| Failure::Rejected(e.to_string()))?
                }
                _ => {
                    return Err(Failure::Usage(
                        "give either SOURCE and TARGET or --manifest".into(),
                    ))
                }
            };
            if max_length < 2 {
                return Err(Failure::Usage("--max-length must be at least 2".into()));
            }
            let opts = CorpusOptions {
                max_length,
                source_flavor: flavor_a,
                target_flavor: flavor_b,
            };
            cmd_align(&pairs, &opts, out.as_deref(), report.as_deref())
        }
        Command::Render {
            path,
            layer,
            resolution,
            bead_width,
            out_dir,
            flavor,
        } => {
            let cfg = RasterConfig {
                resolution,
                bead_width,
                ..RasterConfig::default()
            };
            if !(resolution.is_finite() && resolution > 0.0) {
                return Err(Failure::Usage("--resolution must be positive".into()));
            }
            if !(bead_width.is_finite() && bead_width > 0.0) {
                return Err(Failure::Usage("--bead-width must be positive".into()));
            }
            cmd_render(&path, layer, &cfg, &out_dir, flavor)
        }
        Command::Iou {
            predicted,
            reference,
            thresholds,
            relative,
            resolution,
            bead_width,
            flavor_predicted,
            flavor_reference,
            pretty,
        } => {
            evaluate::validate_thresholds(&thresholds)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let cfg = RasterConfig {
                resolution,
                bead_width,
                ..RasterConfig::default()
            };
            let p = read_input(&predicted)?;
            let r = read_input(&reference)?;
            let table = evaluate::evaluate_texts(
                EvalInput {
                    text: &p,
                    flavor: flavor_predicted,
                    relative,
                },
                EvalInput {
                    text: &r,
                    flavor: flavor_reference,
                    relative: false,
                },
                &cfg,
                &thresholds,
            )
            .map_err(|e| match e {
                EvalError::Raster(
                    gflavor_core::RasterError::InvalidResolution(_)
                    | gflavor_core::RasterError::InvalidBeadWidth(_),
                ) => Failure::Usage(e.to_string()),
                _ => Failure::Rejected(e.to_string()),
            })?;
            let mut out = io::stdout().lock();
            if pretty {
                out.write_all(table.to_text_table().as_bytes())?;
            } else {
                serde_json::to_writer(&mut out, &table).context("writing metrics")?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
            Ok(())
        }
        Command::Extrude {
            path,
            to_relative: relative,
            to_absolute: _,
            flavor,
        } => cmd_extrude(&path, relative, flavor),
        Command::Synth {
            out_dir,
            pairs,
            layers,
            seed,
            duplicate_rate,
        } => {
            if !(0.0..=1.0).contains(&duplicate_rate) {
                return Err(Failure::Usage("--duplicate-rate must be in [0, 1]".into()));
            }
            cmd_synth(&out_dir, pairs, layers, seed, duplicate_rate)
        }
    }
}

/// Reads a file, or stdin for `-`. Unreadable input is a rejection.
fn read_input(path: &Path) -> Result<String, Failure> {
    let result = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map(|_| s)
    } else {
        fs::read_to_string(path)
    };
    result.map_err(|e| Failure::Rejected(format!("cannot read {}: {e}", path.display())))
}

fn cmd_parse(path: &Path, flavor: Flavor, pretty: bool) -> Outcome {
    let text = read_input(path)?;
    let parsed = parse_file(&text, flavor);
    for d in &parsed.diagnostics {
        eprintln!("{}: {d}", path.display());
    }
    let s = summary::summarize(&parsed);
    let mut out = io::stdout().lock();
    if pretty {
        out.write_all(s.to_text().as_bytes())?;
    } else {
        serde_json::to_writer(&mut out, &s).context("writing summary")?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_align(
    pairs: &[FilePair],
    opts: &CorpusOptions,
    out: Option<&Path>,
    report_path: Option<&Path>,
) -> Outcome {
    let report = match out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut sink = BufWriter::new(file);
            corpus::build_corpus(pairs, opts, &mut sink)?
        }
        None => {
            let mut sink = BufWriter::new(io::stdout().lock());
            corpus::build_corpus(pairs, opts, &mut sink)?
        }
    };

    let mut json = serde_json::to_string_pretty(&report).context("encoding report")?;
    json.push('\n');
    match report_path {
        Some(path) => {
            fs::write(path, json).with_context(|| format!("writing {}", path.display()))?
        }
        None => eprint!("{json}"),
    }

    for r in &report.rejected_files {
        eprintln!(
            "{} / {}: {} ({})",
            r.source_file, r.target_file, r.reason, r.detail
        );
    }
    if report.rejected_files.is_empty() {
        Ok(())
    } else {
        Err(Failure::Rejected(format!(
            "{} of {} file pairs rejected",
            report.rejected_files.len(),
            report.files
        )))
    }
}

fn cmd_render(
    path: &Path,
    selection: LayerSelection,
    cfg: &RasterConfig,
    out_dir: &Path,
    flavor: Flavor,
) -> Outcome {
    let text = read_input(path)?;
    let parsed = parse_file(&text, flavor);
    let file = split_layers(&parsed.lines).map_err(|e| Failure::Rejected(e.to_string()))?;
    let starts = evaluate::layer_start_positions(&file);
    let indices: Vec<usize> = match selection {
        LayerSelection::All => (0..file.layers.len()).collect(),
        LayerSelection::One(i) if i < file.layers.len() => vec![i],
        LayerSelection::One(i) => {
            return Err(Failure::Rejected(format!(
                "layer {i} out of range (file has {} layers)",
                file.layers.len()
            )))
        }
    };
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "layer".into());

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut stdout = io::stdout().lock();
    for i in indices {
        let (raster, _) = render_layer_from(&file.layers[i].lines, cfg, starts[i])
            .map_err(|e| Failure::Rejected(format!("layer {i}: {e}")))?;
        let target = pgm::layer_path(out_dir, &stem, i);
        fs::write(&target, pgm::encode_pgm(&raster))
            .with_context(|| format!("writing {}", target.display()))?;
        writeln!(stdout, "{}", target.display())?;
    }
    stdout.flush()?;
    Ok(())
}

fn cmd_extrude(path: &Path, relative: bool, flavor: Flavor) -> Outcome {
    let text = read_input(path)?;
    let parsed = parse_file(&text, flavor);
    let lines = if relative {
        to_relative(&parsed.lines).map_err(|e| Failure::Rejected(e.to_string()))?
    } else {
        to_absolute(&parsed.lines)
    };
    let mut out = io::stdout().lock();
    out.write_all(serialize_lines(&lines, parsed.trailing_newline).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn cmd_synth(
    out_dir: &Path,
    pairs: usize,
    layers: usize,
    seed: u64,
    duplicate_rate: f64,
) -> Outcome {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut manifest = String::new();
    for i in 0..pairs {
        let pair = synth::generate_pair(&SynthConfig {
            seed: seed.wrapping_add(i as u64),
            layers,
            duplicate_rate,
            ..SynthConfig::default()
        });
        let a = format!("pair{i:04}_sailfish.gcode");
        let b = format!("pair{i:04}_marlin.gcode");
        fs::write(out_dir.join(&a), pair.source).context("writing source file")?;
        fs::write(out_dir.join(&b), pair.target).context("writing target file")?;
        manifest.push_str(&format!("{a}\t{b}\n"));
    }
    fs::write(out_dir.join("manifest.tsv"), manifest).context("writing manifest")?;
    Ok(())
}
