//! Frequency-domain Parseval frames: radial wavelets, cone-adapted shearlets,
//! Gabor systems and the low-pass block.
//!
//! Every frame is a list of subbands. A subband is a real frequency profile
//! together with a translation lattice; its atoms are the profile modulated to
//! each lattice point. The lattice of a subband is the coarsest power-of-two
//! grid onto which its profile folds without collisions, so analysis is one
//! small inverse FFT per subband and the family stays exactly tight.

mod atom;
mod coeffs;

pub use atom::{AtomIndex, Cone};
pub use coeffs::{read_coefficients, write_coefficients, CoefficientSet};

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fft::Fft2Plan;
use crate::grid::{Grid, Image, Spectrum};
use crate::windows::{upsilon, GaborWindow, WindowBank};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameKind {
    Wavelet,
    Shearlet,
    Gabor,
    LowPass,
}

impl FrameKind {
    pub fn name(&self) -> &'static str {
        match self {
            FrameKind::Wavelet => "wavelet",
            FrameKind::Shearlet => "shearlet",
            FrameKind::Gabor => "gabor",
            FrameKind::LowPass => "lowpass",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubbandKind {
    LowPass,
    Wavelet { j: u32 },
    Shearlet { j: u32, cone: Cone, l: i32 },
    Gabor { band: (i32, i32) },
}

impl SubbandKind {
    pub fn scale(&self) -> Option<usize> {
        match *self {
            SubbandKind::Wavelet { j } | SubbandKind::Shearlet { j, .. } => Some(j as usize),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Subband {
    kind: SubbandKind,
    dims: (usize, usize),
    support: Vec<u32>,
    fold: Vec<u32>,
    values: Vec<f64>,
    plan: usize,
}

impl Subband {
    pub fn kind(&self) -> SubbandKind {
        self.kind
    }

    /// Lattice shape `(L1, L2)`; atom `(a, b)` sits at pixel `(a n / L1, b n / L2)`.
    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nonzero profile entries as `(spectrum slot, value)`.
    pub fn profile(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().map(|&s| s as usize).zip(self.values.iter().copied())
    }

    /// Squared norm of each atom of this subband.
    pub fn atom_norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64
    }
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// An indexed family of atoms with analysis and synthesis.
#[derive(Clone, Debug)]
pub struct Frame {
    id: u64,
    grid: Grid,
    kind: FrameKind,
    j_max: usize,
    window: GaborWindow,
    subbands: Vec<Subband>,
    offsets: Vec<usize>,
    plans: Vec<Arc<Fft2Plan>>,
    gabor_index: HashMap<(i32, i32), usize>,
}

struct RawSubband {
    kind: SubbandKind,
    dims: (usize, usize),
    profile: Vec<(u32, f64)>,
}

fn check_scale(grid: Grid, j_max: usize) -> Result<()> {
    if j_max > grid.j_max() {
        Err(Error::ScaleTooLarge { j: j_max, max: grid.j_max() })
    } else {
        Ok(())
    }
}

fn dense_to_sparse(values: &[f64]) -> Vec<(u32, f64)> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i as u32, *v))
        .collect()
}

/// Smallest lattice, starting from `start`, on which the profile folds injectively.
fn fit_lattice(grid: Grid, profile: &[(u32, f64)], start: (usize, usize)) -> (usize, usize) {
    let n = grid.n();
    let (mut l1, mut l2) = (start.0.clamp(1, n), start.1.clamp(1, n));
    loop {
        let mut seen = vec![false; l1 * l2];
        let clash = profile.iter().any(|&(s, _)| {
            let (k1, k2) = grid.freq_at(s as usize);
            let f = k1.rem_euclid(l1 as i64) as usize * l2 + k2.rem_euclid(l2 as i64) as usize;
            std::mem::replace(&mut seen[f], true)
        });
        if !clash {
            return (l1, l2);
        }
        if l1 <= l2 && l1 < n {
            l1 *= 2;
        } else if l2 < n {
            l2 *= 2;
        } else {
            l1 *= 2;
        }
    }
}

impl Frame {
    fn assemble(
        grid: Grid,
        kind: FrameKind,
        j_max: usize,
        window: GaborWindow,
        raw: Vec<RawSubband>,
        renormalize: bool,
    ) -> Frame {
        let mut raw: Vec<RawSubband> = raw.into_iter().filter(|r| !r.profile.is_empty()).collect();
        if renormalize {
            let mut total = vec![0.0; grid.len()];
            for r in &raw {
                for &(s, v) in &r.profile {
                    total[s as usize] += v * v;
                }
            }
            for r in &mut raw {
                for (s, v) in &mut r.profile {
                    let t = total[*s as usize];
                    if t > 0.0 {
                        *v /= t.sqrt();
                    }
                }
            }
        }
        let mut plan_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut plans = Vec::new();
        let mut subbands = Vec::with_capacity(raw.len());
        for r in raw {
            let dims = fit_lattice(grid, &r.profile, r.dims);
            let plan = *plan_of.entry(dims).or_insert_with(|| {
                plans.push(Arc::new(Fft2Plan::new(dims.0, dims.1)));
                plans.len() - 1
            });
            let fold = r
                .profile
                .iter()
                .map(|&(s, _)| {
                    let (k1, k2) = grid.freq_at(s as usize);
                    (k1.rem_euclid(dims.0 as i64) as usize * dims.1
                        + k2.rem_euclid(dims.1 as i64) as usize) as u32
                })
                .collect();
            subbands.push(Subband {
                kind: r.kind,
                dims,
                support: r.profile.iter().map(|p| p.0).collect(),
                values: r.profile.iter().map(|p| p.1).collect(),
                fold,
                plan,
            });
        }
        subbands.sort_by_key(|s| s.kind);
        let mut frame = Frame {
            id: fresh_id(),
            grid,
            kind,
            j_max,
            window,
            subbands,
            offsets: Vec::new(),
            plans,
            gabor_index: HashMap::new(),
        };
        frame.reindex();
        frame
    }

    fn reindex(&mut self) {
        let mut acc = 0;
        self.offsets = self
            .subbands
            .iter()
            .map(|s| {
                let o = acc;
                acc += s.len();
                o
            })
            .chain(std::iter::once(0))
            .collect();
        *self.offsets.last_mut().unwrap() = acc;
        self.gabor_index = self
            .subbands
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s.kind {
                SubbandKind::Gabor { band } => Some((band, i)),
                _ => None,
            })
            .collect();
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn gabor_window(&self) -> GaborWindow {
        self.window
    }

    pub fn subbands(&self) -> &[Subband] {
        &self.subbands
    }

    pub fn subband(&self, s: usize) -> &Subband {
        &self.subbands[s]
    }

    /// Flat coefficient offset of subband `s`.
    pub fn offset(&self, s: usize) -> usize {
        self.offsets[s]
    }

    /// Total number of atoms.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn has_low_pass(&self) -> bool {
        self.subbands.iter().any(|s| s.kind == SubbandKind::LowPass)
    }

    /// Subband holding the Gabor band `n`, if present.
    pub fn gabor_subband(&self, band: (i32, i32)) -> Option<usize> {
        self.gabor_index.get(&band).copied()
    }

    pub fn gabor_bands(&self) -> Vec<(i32, i32)> {
        self.subbands
            .iter()
            .filter_map(|s| match s.kind {
                SubbandKind::Gabor { band } => Some(band),
                _ => None,
            })
            .collect()
    }

    /// Same atoms multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Frame {
        let mut out = self.clone();
        out.id = fresh_id();
        for sb in &mut out.subbands {
            sb.values.iter_mut().for_each(|v| *v *= s);
        }
        out
    }

    /// Same frame with the low-pass subband removed.
    pub fn without_low_pass(&self) -> Frame {
        let mut out = self.clone();
        out.id = fresh_id();
        out.subbands.retain(|s| s.kind != SubbandKind::LowPass);
        out.reindex();
        out
    }

    /// Subband and lattice position `(s, a, b)` of a flat coefficient index.
    pub fn locate(&self, flat: usize) -> (usize, usize, usize) {
        let s = self.offsets.partition_point(|&o| o <= flat) - 1;
        let local = flat - self.offsets[s];
        let l2 = self.subbands[s].dims.1;
        (s, local / l2, local % l2)
    }

    pub fn flat(&self, s: usize, a: usize, b: usize) -> usize {
        self.offsets[s] + a * self.subbands[s].dims.1 + b
    }

    pub fn atom_index(&self, flat: usize) -> AtomIndex {
        let (s, a, b) = self.locate(flat);
        let p = (a as u32, b as u32);
        match self.subbands[s].kind {
            SubbandKind::LowPass => AtomIndex::LowPass { p },
            SubbandKind::Wavelet { j } => AtomIndex::Wavelet { j, p },
            SubbandKind::Shearlet { j, cone, l } => AtomIndex::Shearlet { j, cone, l, k: p },
            SubbandKind::Gabor { band } => AtomIndex::Gabor { band, m: p },
        }
    }

    pub fn flat_of(&self, atom: &AtomIndex) -> Option<usize> {
        let (kind, p) = match *atom {
            AtomIndex::LowPass { p } => (SubbandKind::LowPass, p),
            AtomIndex::Wavelet { j, p } => (SubbandKind::Wavelet { j }, p),
            AtomIndex::Shearlet { j, cone, l, k } => (SubbandKind::Shearlet { j, cone, l }, k),
            AtomIndex::Gabor { band, m } => (SubbandKind::Gabor { band }, m),
        };
        let s = self.subbands.binary_search_by_key(&kind, |s| s.kind).ok()?;
        let (l1, l2) = self.subbands[s].dims;
        let (a, b) = (p.0 as usize, p.1 as usize);
        (a < l1 && b < l2).then(|| self.flat(s, a, b))
    }

    /// Pixel coordinates of the centre of atom `(a, b)` in subband `s`.
    pub fn position(&self, s: usize, a: usize, b: usize) -> (f64, f64) {
        let n = self.grid.n() as f64;
        let (l1, l2) = self.subbands[s].dims;
        (a as f64 * n / l1 as f64, b as f64 * n / l2 as f64)
    }

    /// Pointwise sum of squared profiles (1 everywhere for a Parseval family).
    pub fn tiling(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.grid.len()];
        for sb in &self.subbands {
            for (s, v) in sb.profile() {
                total[s] += v * v;
            }
        }
        total
    }

    /// Dense spectrum-domain profile of subband `s`.
    pub fn profile_image(&self, s: usize) -> Image {
        let mut data = vec![Complex64::default(); self.grid.len()];
        for (slot, v) in self.subbands[s].profile() {
            data[slot] = Complex64::new(v, 0.0);
        }
        Image::from_vec(self.grid, data).expect("profile has grid size")
    }

    pub fn check_image(&self, img_grid: Grid) -> Result<()> {
        self.grid.check(&img_grid)
    }

    pub fn analyze(&self, img: &Image) -> Result<CoefficientSet> {
        self.grid.check(&img.grid())?;
        Ok(self.analyze_spectrum(&img.spectrum()))
    }

    pub fn analyze_spectrum(&self, spec: &Spectrum) -> CoefficientSet {
        let mut out = vec![Complex64::default(); self.len()];
        self.analyze_into(spec.data(), &mut out);
        CoefficientSet::from_raw(self.id, out)
    }

    /// Analysis of a raw spectrum into a caller-owned buffer of `len()` coefficients.
    pub fn analyze_into(&self, src: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(src.len(), self.grid.len());
        assert_eq!(out.len(), self.len());
        let mut work = Vec::new();
        for (i, sb) in self.subbands.iter().enumerate() {
            let buf = &mut out[self.offsets[i]..self.offsets[i + 1]];
            buf.fill(Complex64::default());
            for ((&s, &f), &v) in sb.support.iter().zip(&sb.fold).zip(&sb.values) {
                buf[f as usize] += src[s as usize] * v;
            }
            self.plans[sb.plan].execute(buf, true, &mut work);
            let norm = 1.0 / (sb.len() as f64).sqrt();
            buf.iter_mut().for_each(|z| *z *= norm);
        }
    }

    pub fn synthesize(&self, coeffs: &CoefficientSet) -> Result<Image> {
        Ok(self.synthesize_spectrum(coeffs)?.image())
    }

    pub fn synthesize_spectrum(&self, coeffs: &CoefficientSet) -> Result<Spectrum> {
        self.check_coeffs(coeffs)?;
        let mut spec = vec![Complex64::default(); self.grid.len()];
        self.synthesize_into(coeffs.data(), &mut spec);
        Spectrum::from_vec(self.grid, spec)
    }

    /// Synthesis of raw coefficients into a caller-owned spectrum buffer (overwritten).
    pub fn synthesize_into(&self, coeffs: &[Complex64], spec: &mut [Complex64]) {
        assert_eq!(coeffs.len(), self.len());
        assert_eq!(spec.len(), self.grid.len());
        spec.fill(Complex64::default());
        let mut buf = Vec::new();
        let mut work = Vec::new();
        for (i, sb) in self.subbands.iter().enumerate() {
            let c = &coeffs[self.offsets[i]..self.offsets[i + 1]];
            if c.iter().all(|z| *z == Complex64::default()) {
                continue;
            }
            buf.clear();
            buf.extend_from_slice(c);
            self.plans[sb.plan].execute(&mut buf, false, &mut work);
            let norm = 1.0 / (sb.len() as f64).sqrt();
            for ((&s, &f), &v) in sb.support.iter().zip(&sb.fold).zip(&sb.values) {
                spec[s as usize] += buf[f as usize] * (v * norm);
            }
        }
    }

    pub fn check_coeffs(&self, coeffs: &CoefficientSet) -> Result<()> {
        if coeffs.frame_id() != self.id || coeffs.len() != self.len() {
            return Err(Error::FrameMismatch(format!(
                "coefficients belong to frame {} ({} atoms), not {} ({} atoms)",
                coeffs.frame_id(),
                coeffs.len(),
                self.id,
                self.len()
            )));
        }
        Ok(())
    }

    pub fn zero_coeffs(&self) -> CoefficientSet {
        CoefficientSet::from_raw(self.id, vec![Complex64::default(); self.len()])
    }

    pub fn coeffs_from_vec(&self, data: Vec<Complex64>) -> Result<CoefficientSet> {
        if data.len() != self.len() {
            return Err(Error::FrameMismatch(format!(
                "expected {} coefficients, got {}",
                self.len(),
                data.len()
            )));
        }
        Ok(CoefficientSet::from_raw(self.id, data))
    }

    /// The atom with flat index `flat`, as an image.
    pub fn atom(&self, flat: usize) -> Image {
        let mut c = self.zero_coeffs();
        c.data_mut()[flat] = Complex64::new(1.0, 0.0);
        self.synthesize(&c).expect("own coefficients")
    }

    /// Frame operator `S = Phi Phi*`.
    pub fn frame_operator(&self, img: &Image) -> Result<Image> {
        self.synthesize(&self.analyze(img)?)
    }

    /// Power-iteration estimates of the optimal frame bounds `(A, B)`.
    pub fn bounds_estimate(&self, iters: usize) -> (f64, f64) {
        let iters = iters.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0x6a09_e667_f3bc_c908);
        let mut random_unit = || {
            let v: Vec<Complex64> = (0..self.grid.len())
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let mut img = Image::from_vec(self.grid, v).expect("grid sized");
            let s = 1.0 / img.norm();
            img.scale(s);
            img
        };
        let apply = |x: &Image| self.frame_operator(x).expect("own grid");

        let mut x = random_unit();
        let mut upper = 0.0;
        for _ in 0..iters {
            let y = apply(&x);
            upper = y.dot(&x).re;
            let ny = y.norm();
            if ny == 0.0 {
                return (0.0, 0.0);
            }
            x = y.scaled(1.0 / ny);
        }
        let mut z = random_unit();
        let mut shifted = 0.0;
        for _ in 0..iters {
            let mut y = z.scaled(upper);
            y.axpy(-1.0, &apply(&z));
            shifted = y.dot(&z).re;
            let ny = y.norm();
            if ny == 0.0 {
                break;
            }
            z = y.scaled(1.0 / ny);
        }
        ((upper - shifted).max(0.0), upper)
    }
}

/// Radial wavelets on scales `0..=j_max` plus the low-pass block.
pub fn build_wavelet_frame(grid: Grid, j_max: usize) -> Result<Frame> {
    check_scale(grid, j_max)?;
    let bank = WindowBank::new(grid, j_max)?;
    let t = grid.side_int();
    let mut raw = vec![RawSubband { kind: SubbandKind::LowPass, dims: (1, 1), profile: dense_to_sparse(bank.low()) }];
    for j in 0..=j_max {
        let side = t << (2 * j);
        raw.push(RawSubband {
            kind: SubbandKind::Wavelet { j: j as u32 },
            dims: (side, side),
            profile: dense_to_sparse(bank.band(j)),
        });
    }
    Ok(Frame::assemble(grid, FrameKind::Wavelet, j_max, GaborWindow::default(), raw, true))
}

/// Cone-adapted shearlets with shears `|l| <= 2^j` on both cones, plus low-pass.
pub fn build_shearlet_frame(grid: Grid, j_max: usize) -> Result<Frame> {
    check_scale(grid, j_max)?;
    let bank = WindowBank::new(grid, j_max)?;
    let t = grid.side_int();
    let mut raw = vec![RawSubband { kind: SubbandKind::LowPass, dims: (1, 1), profile: dense_to_sparse(bank.low()) }];
    for j in 0..=j_max {
        let radial = dense_to_sparse(bank.band(j));
        if radial.is_empty() {
            continue;
        }
        let shear = 1i32 << j;
        for cone in [Cone::H, Cone::V] {
            for l in -shear..=shear {
                let profile = radial
                    .iter()
                    .filter_map(|&(s, w)| {
                        let (k1, k2) = grid.freq_at(s as usize);
                        let (k1, k2) = (k1 as f64, k2 as f64);
                        let v = match cone {
                            Cone::H if k1 != 0.0 => upsilon(shear as f64 * k2 / k1 - l as f64),
                            Cone::V if k2 != 0.0 => upsilon(shear as f64 * k1 / k2 - l as f64),
                            _ => 0.0,
                        };
                        (v != 0.0).then_some((s, w * v))
                    })
                    .collect();
                let (fine, coarse) = (t << (2 * j), t << j);
                let dims = match cone {
                    Cone::H => (fine, coarse),
                    Cone::V => (coarse, fine),
                };
                raw.push(RawSubband { kind: SubbandKind::Shearlet { j: j as u32, cone, l }, dims, profile });
            }
        }
    }
    Ok(Frame::assemble(grid, FrameKind::Shearlet, j_max, GaborWindow::default(), raw, true))
}

/// Half-open range of integer Gabor bands whose window meets the grid.
pub fn gabor_band_limit(grid: Grid) -> i32 {
    (grid.n() / (2 * grid.side_int())) as i32
}

/// Gabor system `g(xi - n) e^{2 pi i xi.m/2}`.
///
/// With `active = None` all bands meeting the grid are used and the family is
/// Parseval on the whole space; otherwise only the listed bands, which must
/// sit at least one unit inside the Nyquist square.
pub fn build_gabor_frame(grid: Grid, active: Option<&[(i32, i32)]>, window: GaborWindow) -> Result<Frame> {
    let lim = gabor_band_limit(grid);
    let bands: Vec<(i32, i32)> = match active {
        Some(list) => {
            for &(a, b) in list {
                if a.abs() > lim - 1 || b.abs() > lim - 1 {
                    return Err(Error::BandOutOfRange(a, b));
                }
            }
            let mut v = list.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        }
        None => (-lim..=lim).flat_map(|a| (-lim..=lim).map(move |b| (a, b))).collect(),
    };
    let t = grid.side_int() as i64;
    let ts = t as f64;
    let n = grid.n() as i64;
    let raw = bands
        .into_iter()
        .map(|(b1, b2)| {
            let mut profile = Vec::new();
            let (c1, c2) = (b1 as i64 * t, b2 as i64 * t);
            for k1 in (c1 - t + 1)..(c1 + t) {
                for k2 in (c2 - t + 1)..(c2 + t) {
                    if k1 < -n / 2 || k1 >= n / 2 || k2 < -n / 2 || k2 >= n / 2 {
                        continue;
                    }
                    let v = window.eval2(k1 as f64 / ts - b1 as f64, k2 as f64 / ts - b2 as f64);
                    if v != 0.0 {
                        profile.push(((grid.slot(k1) * grid.n() + grid.slot(k2)) as u32, v));
                    }
                }
            }
            let side = 2 * grid.side_int();
            RawSubband { kind: SubbandKind::Gabor { band: (b1, b2) }, dims: (side, side), profile }
        })
        .collect();
    Ok(Frame::assemble(grid, FrameKind::Gabor, grid.j_max(), window, raw, false))
}

/// The low-pass block alone.
pub fn build_lowpass_frame(grid: Grid) -> Result<Frame> {
    let bank = WindowBank::new(grid, grid.j_max())?;
    let raw = vec![RawSubband { kind: SubbandKind::LowPass, dims: (1, 1), profile: dense_to_sparse(bank.low()) }];
    Ok(Frame::assemble(grid, FrameKind::LowPass, grid.j_max(), GaborWindow::default(), raw, false))
}
