use std::path::Path;

use num_complex::Complex64;

use super::{Frame, SubbandKind};
use crate::error::{Error, Result};
use crate::io::{write_atomic, MAGIC};

const FLAG_COEFFS: u32 = 2;

/// Analysis coefficients of one frame, stored subband after subband.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    frame_id: u64,
    data: Vec<Complex64>,
}

impl CoefficientSet {
    pub(crate) fn from_raw(frame_id: u64, data: Vec<Complex64>) -> Self {
        CoefficientSet { frame_id, data }
    }

    pub fn frame_id(&self) -> u64 {
        self.frame_id
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn l1(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn l2(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// l1 norm over the listed flat indices.
    pub fn l1_on(&self, members: &[usize]) -> f64 {
        members.iter().map(|&i| self.data[i].norm()).sum()
    }

    /// `sum self * conj(other)`.
    pub fn dot(&self, other: &CoefficientSet) -> Complex64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum()
    }
}

fn put(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn header_words(kind: SubbandKind) -> [u32; 5] {
    match kind {
        SubbandKind::LowPass => [0, 0, 0, 0, 0],
        SubbandKind::Wavelet { j } => [1, j, 0, 0, 0],
        SubbandKind::Shearlet { j, cone, l } => [2, j, l as u32, 0, cone.code()],
        SubbandKind::Gabor { band } => [3, 0, band.0 as u32, band.1 as u32, 0],
    }
}

/// Per-subband binary blocks: file header `"GSEP", n, flags, count`, then per
/// subband `kind, j, l or band1, band2, cone, n, L1, L2` and the complex samples.
pub fn write_coefficients(path: &Path, frame: &Frame, coeffs: &CoefficientSet) -> Result<()> {
    frame.check_coeffs(coeffs)?;
    let n = frame.grid().n() as u32;
    let mut out = Vec::with_capacity(16 + coeffs.len() * 16 + frame.subbands().len() * 32);
    out.extend_from_slice(MAGIC);
    put(&mut out, n);
    put(&mut out, FLAG_COEFFS);
    put(&mut out, frame.subbands().len() as u32);
    for (s, sb) in frame.subbands().iter().enumerate() {
        for w in header_words(sb.kind()) {
            put(&mut out, w);
        }
        put(&mut out, n);
        put(&mut out, sb.dims().0 as u32);
        put(&mut out, sb.dims().1 as u32);
        for z in &coeffs.data()[frame.offset(s)..frame.offset(s + 1)] {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    write_atomic(path, &out)
}

/// Reads a coefficient file written for a frame with the same layout.
pub fn read_coefficients(path: &Path, frame: &Frame) -> Result<CoefficientSet> {
    let bytes = std::fs::read(path)?;
    let bad = |msg: String| Error::Format { path: path.to_path_buf(), msg };
    let mut pos = 0usize;
    let word = |pos: &mut usize| -> Result<u32> {
        let w = bytes
            .get(*pos..*pos + 4)
            .ok_or_else(|| bad("truncated".into()))?;
        *pos += 4;
        Ok(u32::from_le_bytes(w.try_into().unwrap()))
    };
    if bytes.get(..4) != Some(MAGIC.as_slice()) {
        return Err(bad("missing GSEP header".into()));
    }
    pos += 4;
    let n = word(&mut pos)?;
    let flags = word(&mut pos)?;
    let count = word(&mut pos)? as usize;
    if n as usize != frame.grid().n() || flags != FLAG_COEFFS || count != frame.subbands().len() {
        return Err(bad("header does not match the frame".into()));
    }
    let mut data = Vec::with_capacity(frame.len());
    for sb in frame.subbands() {
        let mut h = [0u32; 8];
        for w in h.iter_mut() {
            *w = word(&mut pos)?;
        }
        let expect = header_words(sb.kind());
        if h[..5] != expect || h[5] != n || h[6] as usize != sb.dims().0 || h[7] as usize != sb.dims().1 {
            return Err(bad(format!("subband header mismatch for {:?}", sb.kind())));
        }
        let len = sb.len() * 16;
        let body = bytes.get(pos..pos + len).ok_or_else(|| bad("truncated samples".into()))?;
        pos += len;
        data.extend(body.chunks_exact(16).map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        }));
    }
    if pos != bytes.len() {
        return Err(bad("trailing bytes".into()));
    }
    frame.coeffs_from_vec(data)
}
