//! VOL1 volume files and binary PGM previews.
//!
//! VOL1 layout: a single JSON header line
//! `{"magic":"VOL1","dims":[..],"dtype":"f64le","order":"row-major","grid":"node"}`,
//! a `\n`, then `prod(dims)` little-endian IEEE-754 doubles in row-major order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{GridKind, Volume};

const MAGIC: &str = "VOL1";

#[derive(Debug, Serialize, Deserialize)]
struct Vol1Header {
    magic: String,
    dims: Vec<usize>,
    dtype: String,
    order: String,
    grid: GridKind,
}

pub fn write_vol1<W: Write>(mut w: W, v: &Volume) -> Result<()> {
    let header = Vol1Header {
        magic: MAGIC.to_string(),
        dims: v.dims().to_vec(),
        dtype: "f64le".to_string(),
        order: "row-major".to_string(),
        grid: v.grid(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(v.len() * 8);
    for x in v.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_vol1<R: Read>(r: R) -> Result<Volume> {
    let mut r = BufReader::new(r);
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format(
            "VOL1 header is not newline-terminated".into(),
        ));
    }
    line.pop();
    let header: Vol1Header = serde_json::from_slice(&line)
        .map_err(|e| Error::Format(format!("bad VOL1 header: {e}")))?;
    if header.magic != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", header.magic)));
    }
    if header.dtype != "f64le" || header.order != "row-major" {
        return Err(Error::Format(format!(
            "unsupported dtype/order {}/{}",
            header.dtype, header.order
        )));
    }
    let n: usize = header.dims.iter().product();
    let mut bytes = Vec::with_capacity(n * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 8 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            n * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Volume::with_grid(header.dims, data, header.grid)
}

pub fn save_vol1(path: impl AsRef<Path>, v: &Volume) -> Result<()> {
    let f = fs::File::create(path)?;
    write_vol1(std::io::BufWriter::new(f), v)
}

pub fn load_vol1(path: impl AsRef<Path>) -> Result<Volume> {
    read_vol1(fs::File::open(path)?)
}

/// Intensity window mapped onto the 0..=255 gray range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrayRange {
    /// Linear map of the slice's own `[min, max]`.
    Auto,
    /// Linear map of a fixed `[lo, hi]`, values outside are clamped.
    Fixed(f64, f64),
}

/// Quantizes a 2-D slice to 8-bit gray: `floor(255 t + 0.5)` with `t` the
/// position of the sample in the window, clamped to `[0, 1]`.
pub fn to_gray8(v: &Volume, range: GrayRange) -> Result<Vec<u8>> {
    if v.ndim() != 2 {
        return Err(Error::InvalidDims(format!(
            "PGM export needs a 2-D slice, got {:?}",
            v.dims()
        )));
    }
    let (lo, hi) = match range {
        GrayRange::Auto => (v.min(), v.max()),
        GrayRange::Fixed(lo, hi) => (lo, hi),
    };
    let span = hi - lo;
    Ok(v.data()
        .iter()
        .map(|&x| {
            let t = if span > 0.0 { (x - lo) / span } else { 0.0 };
            (t.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
        })
        .collect())
}

pub fn write_pgm<W: Write>(mut w: W, v: &Volume, range: GrayRange) -> Result<()> {
    let pixels = to_gray8(v, range)?;
    let (h, wd) = (v.dims()[0], v.dims()[1]);
    write!(w, "P5\n{wd} {h}\n255\n")?;
    w.write_all(&pixels)?;
    w.flush()?;
    Ok(())
}

pub fn save_pgm(path: impl AsRef<Path>, v: &Volume, range: GrayRange) -> Result<()> {
    let f = fs::File::create(path)?;
    write_pgm(std::io::BufWriter::new(f), v, range)
}
