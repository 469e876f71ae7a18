//! Raw float and PGM image files, plus atomic file writes.
//!
//! Raw layout: `"GSEP"`, u32 side, u32 flags, u32 reserved, then row-major
//! little-endian f64 pairs (re, im).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, Image};

pub const MAGIC: &[u8; 4] = b"GSEP";
pub const HEADER_LEN: usize = 16;

/// Flag bit set when the samples are a spectrum-domain profile rather than an image.
pub const FLAG_PROFILE: u32 = 1;

/// Writes `bytes` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn encode_raw(img: &Image, flags: u32) -> Vec<u8> {
    let n = img.grid().n();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for z in img.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode_raw(bytes: &[u8], path: &Path) -> Result<(Image, u32)> {
    let bad = |msg: &str| Error::Format { path: path.to_path_buf(), msg: msg.to_string() };
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(bad("missing GSEP header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let n = word(4) as usize;
    let flags = word(8);
    let grid = Grid::new(n).map_err(|_| bad("invalid grid side"))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 16 * n * n {
        return Err(bad("sample count does not match header"));
    }
    let data = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok((Image::from_vec(grid, data)?, flags))
}

pub fn write_raw(path: &Path, img: &Image) -> Result<()> {
    write_atomic(path, &encode_raw(img, 0))
}

pub fn read_raw(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    Ok(decode_raw(&bytes, path)?.0)
}

/// 8-bit binary PGM of the real part, min-max scaled.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let n = img.grid().n();
    let re = img.real_part();
    let lo = re.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = re.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(re.iter().map(|&v| (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

pub fn write_pgm(path: &Path, img: &Image) -> Result<()> {
    write_atomic(path, &encode_pgm(img))
}
