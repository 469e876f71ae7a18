//! Synthetic components (point singularities, a weighted line segment, Gabor
//! texture), degradation by strip mask and noise, and band energy balancing.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::frames::{gabor_band_limit, Frame};
use crate::grid::{Grid, Image, Part, Spectrum, StripMask};
use crate::multiscale::SubbandStack;
use crate::windows::{corona_j, GaborWindow};

/// Pixel positions `(row, col)` of point singularities.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<(usize, usize)>,
}

impl PointCloud {
    pub fn new(positions: Vec<(usize, usize)>) -> Self {
        PointCloud { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Fails if any point lies in the missing strip of `mask`.
    pub fn check_known(&self, mask: &StripMask) -> Result<()> {
        match self.positions.iter().find(|p| mask.is_missing(p.0)) {
            Some(&(r, c)) => Err(Error::PointInMask(r, c)),
            None => Ok(()),
        }
    }
}

/// `sum_i |xi|^exponent e^{-2 pi i xi.x_i}` with zero DC. The default exponent
/// `-1/2` is the transform of `|x|^{-3/2}`.
pub fn gen_points(grid: Grid, cloud: &PointCloud, exponent: f64, mask: Option<&StripMask>) -> Result<Image> {
    if cloud.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    let n = grid.n();
    let mut seen = std::collections::HashSet::new();
    for &(r, c) in &cloud.positions {
        if r >= n || c >= n {
            return Err(Error::Invalid(format!("point ({r}, {c}) outside the grid")));
        }
        if !seen.insert((r, c)) {
            return Err(Error::Invalid(format!("duplicate point ({r}, {c})")));
        }
    }
    if let Some(m) = mask {
        grid.check(&m.grid())?;
        cloud.check_known(m)?;
    }
    let t = grid.side();
    let mut data = vec![Complex64::default(); grid.len()];
    for (idx, z) in data.iter_mut().enumerate() {
        let (k1, k2) = grid.freq_at(idx);
        if k1 == 0 && k2 == 0 {
            continue;
        }
        let r = ((k1 * k1 + k2 * k2) as f64).sqrt() / t;
        let amp = r.powf(exponent);
        let phase: Complex64 = cloud
            .positions
            .iter()
            .map(|&(p1, p2)| {
                let arg = -2.0 * PI * ((k1 * p1 as i64 + k2 * p2 as i64).rem_euclid(n as i64)) as f64 / n as f64;
                Complex64::from_polar(1.0, arg)
            })
            .sum();
        *z = phase * amp;
    }
    let mut img = Spectrum::from_vec(grid, data)?.image();
    img.drop_imag();
    Ok(img)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LineProfile {
    /// `exp(1 - 1/(1 - (t/rho)^2))`.
    #[default]
    Bump,
    Constant,
}

impl LineProfile {
    pub fn eval(&self, t: f64, rho: f64) -> f64 {
        let u = t / rho;
        if u.abs() > 1.0 {
            return 0.0;
        }
        match self {
            LineProfile::Constant => 1.0,
            LineProfile::Bump => {
                let d = 1.0 - u * u;
                if d <= 0.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / d).exp()
                }
            }
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bump" => Some(LineProfile::Bump),
            "constant" | "one" => Some(LineProfile::Constant),
            _ => None,
        }
    }
}

/// Weighted segment along the `x1` axis through `center`, `|x1 - c1| <= rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSegment {
    pub rho: f64,
    pub profile: LineProfile,
    pub center: (usize, usize),
}

impl LineSegment {
    pub fn centered(grid: Grid, rho: f64, profile: LineProfile) -> Self {
        LineSegment { rho, profile, center: (grid.n() / 2, grid.n() / 2) }
    }
}

const LINE_OVERSAMPLING: usize = 8;

/// Spectrum `w_hat(xi1)` (constant in `xi2` up to the column shift), zero DC.
pub fn gen_line(grid: Grid, seg: &LineSegment) -> Result<Image> {
    let n = grid.n();
    if !(seg.rho > 0.0) || seg.rho >= n as f64 / 2.0 {
        return Err(Error::Invalid(format!("line half-length {} must lie in (0, n/2)", seg.rho)));
    }
    if seg.center.0 >= n || seg.center.1 >= n {
        return Err(Error::Invalid("line centre outside the grid".into()));
    }
    let steps = (2.0 * seg.rho * LINE_OVERSAMPLING as f64).ceil() as usize;
    let h = 2.0 * seg.rho / steps as f64;
    let nodes: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let t = -seg.rho + i as f64 * h;
            let wt = if i == 0 || i == steps { 0.5 * h } else { h };
            (t, wt * seg.profile.eval(t, seg.rho))
        })
        .filter(|(_, w)| *w != 0.0)
        .collect();
    let c1 = seg.center.0 as f64;
    let w_hat: Vec<Complex64> = (0..n)
        .map(|i| {
            let k1 = grid.freq(i) as f64;
            nodes
                .iter()
                .map(|&(t, w)| Complex64::from_polar(w, -2.0 * PI * k1 * (c1 + t) / n as f64))
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    let col_phase: Vec<Complex64> = (0..n)
        .map(|i| {
            let k2 = grid.freq(i);
            let arg = -2.0 * PI * ((k2 * seg.center.1 as i64).rem_euclid(n as i64)) as f64 / n as f64;
            Complex64::from_polar(1.0, arg)
        })
        .collect();
    let mut data = vec![Complex64::default(); grid.len()];
    for r in 0..n {
        for c in 0..n {
            data[r * n + c] = w_hat[r] * col_phase[c];
        }
    }
    data[0] = Complex64::default();
    let mut img = Spectrum::from_vec(grid, data)?.image();
    img.drop_imag();
    Ok(img)
}

/// Finite Gabor sum `sum_n d_n g(x - c) e^{2 pi i (x - c).n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TextureSpec {
    pub bands: Vec<(i32, i32)>,
    pub coeffs: Vec<Complex64>,
    pub window: GaborWindow,
    /// Window centre in pixels; must lie on the Gabor modulation lattice.
    pub center: (usize, usize),
}

impl TextureSpec {
    pub fn new(grid: Grid, bands: Vec<(i32, i32)>, coeffs: Vec<Complex64>, window: GaborWindow) -> Self {
        TextureSpec { bands, coeffs, window, center: (grid.n() / 2, grid.n() / 2) }
    }

    /// Unit neighbourhood `I_T^+-` (l2 radius 1) of the band set.
    pub fn neighbourhood(&self) -> Vec<(i32, i32)> {
        let mut out: Vec<(i32, i32)> = self
            .bands
            .iter()
            .flat_map(|&(a, b)| [(a, b), (a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Whether the physical frequency `band` lies in the open support of `W_j`.
pub fn in_corona(j: usize, band: (i32, i32)) -> bool {
    corona_j(j, band.0 as f64, band.1 as f64) > 0.0
}

/// `(|I_T^+- cap A_j|, 2^{(1 - eps) j})`.
pub fn texture_budget(spec: &TextureSpec, eps: f64, j: usize) -> (usize, f64) {
    let count = spec.neighbourhood().into_iter().filter(|&b| in_corona(j, b)).count();
    (count, 2f64.powf((1.0 - eps) * j as f64))
}

pub fn gen_texture(grid: Grid, spec: &TextureSpec) -> Result<Image> {
    if spec.bands.len() != spec.coeffs.len() {
        return Err(Error::Invalid("texture bands and coefficients differ in length".into()));
    }
    let lim = gabor_band_limit(grid);
    for &(a, b) in &spec.bands {
        if a.abs() > lim - 1 || b.abs() > lim - 1 {
            return Err(Error::BandOutOfRange(a, b));
        }
    }
    let n = grid.n() as i64;
    let t = grid.side_int() as i64;
    let ts = t as f64;
    let norm = 1.0 / (2.0 * ts);
    let (c1, c2) = (spec.center.0 as i64, spec.center.1 as i64);
    let mut data = vec![Complex64::default(); grid.len()];
    for (&(b1, b2), &d) in spec.bands.iter().zip(&spec.coeffs) {
        for k1 in (b1 as i64 * t - t + 1)..(b1 as i64 * t + t) {
            for k2 in (b2 as i64 * t - t + 1)..(b2 as i64 * t + t) {
                let g = spec.window.eval2(k1 as f64 / ts - b1 as f64, k2 as f64 / ts - b2 as f64);
                if g == 0.0 {
                    continue;
                }
                let arg = -2.0 * PI * ((k1 * c1 + k2 * c2).rem_euclid(n)) as f64 / n as f64;
                data[grid.slot(k1) * grid.n() + grid.slot(k2)] += d * Complex64::from_polar(g * norm, arg);
            }
        }
    }
    Spectrum::from_vec(grid, data).map(|s| s.image())
}

/// Draws a texture with bands in the flat part of each corona `j` in `scales`.
///
/// Per scale the count is `floor(2^{(1-eps) j} / 5)` (each band brings at most
/// five neighbourhood points), raised to `min_per_scale`; bands are kept two
/// units apart so their neighbourhoods do not touch. Coefficients are uniform
/// on the disc of radius `d_max`.
pub fn sample_texture(
    grid: Grid,
    eps: f64,
    scales: &[usize],
    min_per_scale: usize,
    d_max: f64,
    window: GaborWindow,
    seed: u64,
) -> TextureSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lim = gabor_band_limit(grid) - 1;
    let mut bands: Vec<(i32, i32)> = Vec::new();
    let mut coeffs = Vec::new();
    for &j in scales {
        let lo = (4f64.powi(j as i32) / 8.0).floor() as i32 + 1;
        let hi = ((4f64.powi(j as i32) / 4.0).ceil() as i32 - 1).min(lim - 1);
        let mut candidates: Vec<(i32, i32)> = (-hi..=hi)
            .flat_map(|a| (-hi..=hi).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                let r = a.abs().max(b.abs());
                r >= lo && r <= hi
            })
            .filter(|&b| in_corona(j, b))
            .collect();
        candidates.shuffle(&mut rng);
        let budget = 2f64.powf((1.0 - eps) * j as f64);
        let want = ((budget / 5.0).floor() as usize).max(min_per_scale);
        let mut taken = 0;
        for c in candidates {
            if taken == want {
                break;
            }
            if bands.iter().all(|b| (b.0 - c.0).abs().max((b.1 - c.1).abs()) >= 2) {
                bands.push(c);
                let r = d_max * rng.random::<f64>().sqrt();
                let th = 2.0 * PI * rng.random::<f64>();
                coeffs.push(Complex64::from_polar(r, th));
                taken += 1;
            }
        }
        if taken < want {
            warn!("texture: only {taken} of {want} bands fit in corona {j}");
        }
    }
    let spec = TextureSpec::new(grid, bands, coeffs, window);
    for &j in scales {
        let (count, budget) = texture_budget(&spec, eps, j);
        if count as f64 > budget {
            warn!("texture: |I_T+- cap A_{j}| = {count} exceeds 2^((1-eps)j) = {budget:.2}");
        }
    }
    spec
}

/// Observed data `P_K f + eta` and the injected noise.
#[derive(Clone, Debug, PartialEq)]
pub struct Degraded {
    pub observed: Image,
    pub noise: Image,
}

/// Masks `img` and adds white Gaussian noise on the known rows with
/// `||eta|| = noise_level * ||P_K img||`. Noise is complex when `img` is.
pub fn degrade(img: &Image, mask: &StripMask, noise_level: f64, seed: u64) -> Result<Degraded> {
    if !(noise_level >= 0.0) {
        return Err(Error::Invalid(format!("noise level {noise_level} must be >= 0")));
    }
    let known = mask.apply(img, Part::Known)?;
    let grid = img.grid();
    let mut noise = Image::zeros(grid);
    let target = noise_level * known.norm();
    if target > 0.0 {
        let complex = img.max_imag() > 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for z in noise.data_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = if complex { StandardNormal.sample(&mut rng) } else { 0.0 };
            *z = Complex64::new(re, im);
        }
        mask.apply_in_place(&mut noise, Part::Known);
        let s = target / noise.norm();
        noise.scale(s);
    }
    let observed = known.add(&noise);
    Ok(Degraded { observed, noise })
}

/// `||Phi* eta||_1` for each frame.
pub fn noise_l1(noise: &Image, frames: &[&Frame]) -> Result<Vec<f64>> {
    frames.iter().map(|f| f.analyze(noise).map(|c| c.l1())).collect()
}

/// Band `j` and component index skipped during balancing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkippedBand {
    pub j: usize,
    pub component: usize,
}

/// Rescales each component's band `j` to the largest band-`j` norm among the
/// components. Zero bands are left untouched and reported.
pub fn normalize_band_energies(stacks: &mut [SubbandStack]) -> Result<Vec<SkippedBand>> {
    let Some(first) = stacks.first() else { return Ok(Vec::new()) };
    let grid = first.grid();
    let scales: Vec<usize> = first.bands.iter().map(|(j, _)| *j).collect();
    for s in stacks.iter() {
        grid.check(&s.grid())?;
        if s.bands.iter().map(|(j, _)| *j).ne(scales.iter().copied()) {
            return Err(Error::Invalid("stacks are not aligned".into()));
        }
    }
    let mut skipped = Vec::new();
    for (bi, &j) in scales.iter().enumerate() {
        let norms: Vec<f64> = stacks.iter().map(|s| s.bands[bi].1.norm()).collect();
        let target = norms.iter().cloned().fold(0.0, f64::max);
        for (c, s) in stacks.iter_mut().enumerate() {
            if norms[c] == 0.0 {
                if target > 0.0 {
                    warn!("band {j}: component {c} has no energy, left unscaled");
                }
                skipped.push(SkippedBand { j, component: c });
                continue;
            }
            if norms[c] != target {
                s.bands[bi].1.scale(target / norms[c]);
            }
        }
    }
    Ok(skipped)
}
