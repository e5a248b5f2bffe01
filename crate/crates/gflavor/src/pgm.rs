//! Binary PGM (P5) output for layer rasters.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use gflavor_core::LayerRaster;

/// Pixel value of occupied cells. Empty cells are 0.
pub const INK: u8 = 255;

/// Writes `raster` as an 8-bit P5 image, top row first (maximum Y at the
/// top, as seen from above the bed).
pub fn write_pgm<W: Write>(out: &mut W, raster: &LayerRaster) -> io::Result<()> {
    let (w, h) = (raster.width(), raster.height());
    write!(out, "P5\n{w} {h}\n255\n")?;
    let cells = raster.cells();
    let mut row_buf = vec![0u8; w];
    for row in (0..h).rev() {
        for (dst, &src) in row_buf.iter_mut().zip(&cells[row * w..(row + 1) * w]) {
            *dst = if src != 0 { INK } else { 0 };
        }
        out.write_all(&row_buf)?;
    }
    Ok(())
}

pub fn encode_pgm(raster: &LayerRaster) -> Vec<u8> {
    let mut buf = Vec::with_capacity(raster.width() * raster.height() + 16);
    write_pgm(&mut buf, raster).expect("writing to a Vec cannot fail");
    buf
}

/// `<dir>/<stem>_layer<index>.pgm` with the index zero-padded to four
/// digits.
pub fn layer_path(dir: &Path, stem: &str, index: usize) -> PathBuf {
    dir.join(format!("{stem}_layer{index:04}.pgm"))
}
