//! Structural summary of a single file.

use std::collections::BTreeMap;
use std::fmt::Write;

use gflavor_core::{split_contours, split_layers, LineKind, ParsedFile};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerSummary {
    pub index: usize,
    /// Canonical decimal text, e.g. `"0.2"`.
    pub z: String,
    pub lines: usize,
    pub contours: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileSummary {
    pub flavor: String,
    pub lines: usize,
    pub trailing_newline: bool,
    pub header_lines: usize,
    pub footer_lines: usize,
    pub layers: usize,
    pub contours: usize,
    pub line_kinds: BTreeMap<&'static str, usize>,
    pub diagnostics: usize,
    pub layer_details: Vec<LayerSummary>,
}

pub fn summarize(parsed: &ParsedFile) -> FileSummary {
    let mut line_kinds: BTreeMap<&'static str, usize> =
        LineKind::ALL.iter().map(|k| (k.name(), 0)).collect();
    for line in &parsed.lines {
        *line_kinds.entry(line.kind().name()).or_default() += 1;
    }

    let (header_lines, footer_lines, layer_details) = match split_layers(&parsed.lines) {
        Ok(file) => {
            let details = file
                .layers
                .iter()
                .map(|layer| LayerSummary {
                    index: layer.index,
                    z: layer.z.to_string(),
                    lines: layer.lines.len(),
                    contours: split_contours(layer).len(),
                })
                .collect();
            (file.header.len(), file.footer.len(), details)
        }
        Err(_) => (parsed.lines.len(), 0, Vec::new()),
    };

    FileSummary {
        flavor: parsed.flavor.name().to_string(),
        lines: parsed.lines.len(),
        trailing_newline: parsed.trailing_newline,
        header_lines,
        footer_lines,
        layers: layer_details.len(),
        contours: layer_details.iter().map(|l| l.contours).sum(),
        line_kinds,
        diagnostics: parsed.diagnostics.len(),
        layer_details,
    }
}

impl FileSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "flavor       {}", self.flavor).unwrap();
        writeln!(out, "lines        {}", self.lines).unwrap();
        writeln!(out, "layers       {}", self.layers).unwrap();
        writeln!(out, "contours     {}", self.contours).unwrap();
        writeln!(out, "header       {}", self.header_lines).unwrap();
        writeln!(out, "footer       {}", self.footer_lines).unwrap();
        writeln!(out, "diagnostics  {}", self.diagnostics).unwrap();
        for (kind, count) in &self.line_kinds {
            writeln!(out, "  {kind:<16} {count}").unwrap();
        }
        out
    }
}
