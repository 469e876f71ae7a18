//! Periodic image domain, unitary spectra and the strip projections.
//!
//! Images live on an `n x n` pixel torus stored row-major; the row index is
//! the first coordinate `x1`. The torus is identified with a square of side
//! [`Grid::side`] so that the finest corona window ends exactly at Nyquist.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::fft2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Grid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest scale whose corona fits inside the Nyquist square: `4^j <= n`.
    pub fn j_max(&self) -> usize {
        (self.n.trailing_zeros() / 2) as usize
    }

    /// Physical side length of the torus, `n / 4^j_max` (1 or 2).
    pub fn side(&self) -> f64 {
        (self.n >> (2 * self.j_max())) as f64
    }

    /// Integer form of [`Grid::side`].
    pub fn side_int(&self) -> usize {
        self.n >> (2 * self.j_max())
    }

    /// Signed frequency index of storage slot `i`, in `[-n/2, n/2)`.
    #[inline]
    pub fn freq(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i >= n / 2 {
            i - n
        } else {
            i
        }
    }

    /// Storage slot of a (possibly out of range) signed frequency index.
    #[inline]
    pub fn slot(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Physical frequency of a signed index.
    #[inline]
    pub fn phys(&self, k: i64) -> f64 {
        k as f64 / self.side()
    }

    /// Physical frequency pair for a flat spectrum slot.
    #[inline]
    pub fn phys_at(&self, idx: usize) -> (f64, f64) {
        let (r, c) = (idx / self.n, idx % self.n);
        (self.phys(self.freq(r)), self.phys(self.freq(c)))
    }

    /// Signed index pair for a flat spectrum slot.
    #[inline]
    pub fn freq_at(&self, idx: usize) -> (i64, i64) {
        (self.freq(idx / self.n), self.freq(idx % self.n))
    }

    pub fn check(&self, other: &Grid) -> Result<()> {
        if self.n != other.n {
            Err(Error::GridMismatch(self.n, other.n))
        } else {
            Ok(())
        }
    }

    /// Periodic distance between two pixel coordinates along one axis.
    pub fn wrap_dist(&self, a: f64, b: f64) -> f64 {
        let n = self.n as f64;
        let d = (a - b).rem_euclid(n);
        d.min(n - d)
    }
}

/// Complex samples on the pixel lattice (spatial domain).
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    grid: Grid,
    data: Vec<Complex64>,
}

/// Unitary DFT of an [`Image`], stored in the usual FFT slot order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    data: Vec<Complex64>,
}

macro_rules! field_ops {
    ($t:ident) => {
        impl $t {
            pub fn zeros(grid: Grid) -> Self {
                $t { grid, data: vec![Complex64::default(); grid.len()] }
            }

            pub fn from_vec(grid: Grid, data: Vec<Complex64>) -> Result<Self> {
                if data.len() != grid.len() {
                    return Err(Error::Invalid(format!(
                        "expected {} samples, got {}",
                        grid.len(),
                        data.len()
                    )));
                }
                Ok($t { grid, data })
            }

            pub fn grid(&self) -> Grid {
                self.grid
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

            pub fn at(&self, r: usize, c: usize) -> Complex64 {
                self.data[r * self.grid.n() + c]
            }

            pub fn norm_sqr(&self) -> f64 {
                self.data.iter().map(|z| z.norm_sqr()).sum()
            }

            pub fn norm(&self) -> f64 {
                self.norm_sqr().sqrt()
            }

            pub fn l1(&self) -> f64 {
                self.data.iter().map(|z| z.norm()).sum()
            }

            /// `sum self * conj(other)`.
            pub fn dot(&self, other: &Self) -> Complex64 {
                self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum()
            }

            pub fn scale(&mut self, s: f64) {
                self.data.iter_mut().for_each(|z| *z *= s);
            }

            pub fn scaled(&self, s: f64) -> Self {
                let mut out = self.clone();
                out.scale(s);
                out
            }

            /// `self += a * other`.
            pub fn axpy(&mut self, a: f64, other: &Self) {
                for (x, y) in self.data.iter_mut().zip(&other.data) {
                    *x += y * a;
                }
            }

            pub fn sub(&self, other: &Self) -> Self {
                let mut out = self.clone();
                out.axpy(-1.0, other);
                out
            }

            pub fn add(&self, other: &Self) -> Self {
                let mut out = self.clone();
                out.axpy(1.0, other);
                out
            }
        }
    };
}

field_ops!(Image);
field_ops!(Spectrum);

impl Image {
    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Image::from_vec(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(grid: Grid, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let n = grid.n();
        let data = (0..n * n).map(|i| f(i / n, i % n)).collect();
        Image { grid, data }
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut data = self.data.clone();
        let n = self.grid.n();
        fft2(&mut data, n, n, false);
        let s = 1.0 / n as f64;
        data.iter_mut().for_each(|z| *z *= s);
        Spectrum { grid: self.grid, data }
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn drop_imag(&mut self) {
        self.data.iter_mut().for_each(|z| z.im = 0.0);
    }

    pub fn rel_err(&self, reference: &Image) -> f64 {
        let r = reference.norm();
        let d = self.sub(reference).norm();
        if r == 0.0 {
            d
        } else {
            d / r
        }
    }
}

impl Spectrum {
    pub fn image(&self) -> Image {
        let mut data = self.data.clone();
        let n = self.grid.n();
        fft2(&mut data, n, n, true);
        let s = 1.0 / n as f64;
        data.iter_mut().for_each(|z| *z *= s);
        Image { grid: self.grid, data }
    }

    /// Pointwise product with a real profile.
    pub fn multiply(&self, profile: &[f64]) -> Spectrum {
        let data = self.data.iter().zip(profile).map(|(z, p)| z * *p).collect();
        Spectrum { grid: self.grid, data }
    }

    pub fn at_freq(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.grid.n();
        self.data[self.grid.slot(k1) * n + self.grid.slot(k2)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Known,
    Missing,
}

/// Horizontal strip of missing rows `{x : |x1 - c| <= h}` (periodic distance).
#[derive(Clone, Debug, PartialEq)]
pub struct StripMask {
    grid: Grid,
    center: usize,
    h: f64,
    missing_rows: Vec<bool>,
}

impl StripMask {
    pub fn new(grid: Grid, h: f64) -> Result<Self> {
        Self::with_center(grid, h, grid.n() / 2)
    }

    pub fn with_center(grid: Grid, h: f64, center: usize) -> Result<Self> {
        if !(h >= 0.0) || !h.is_finite() {
            return Err(Error::Invalid(format!("strip half-width {h} must be finite and >= 0")));
        }
        if center >= grid.n() {
            return Err(Error::Invalid(format!("strip center {center} outside grid")));
        }
        let missing_rows = (0..grid.n())
            .map(|r| grid.wrap_dist(r as f64, center as f64) <= h)
            .collect();
        Ok(StripMask { grid, center, h, missing_rows })
    }

    /// A mask with no missing pixels.
    pub fn empty(grid: Grid) -> Self {
        StripMask { grid, center: grid.n() / 2, h: -1.0, missing_rows: vec![false; grid.n()] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.h.max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        !self.missing_rows.iter().any(|&m| m)
    }

    pub fn is_missing(&self, row: usize) -> bool {
        self.missing_rows[row]
    }

    pub fn missing_row_count(&self) -> usize {
        self.missing_rows.iter().filter(|&&m| m).count()
    }

    pub fn apply(&self, img: &Image, part: Part) -> Result<Image> {
        self.grid.check(&img.grid())?;
        let mut out = img.clone();
        self.apply_in_place(&mut out, part);
        Ok(out)
    }

    pub(crate) fn apply_in_place(&self, img: &mut Image, part: Part) {
        self.apply_slice(img.data_mut(), part);
    }

    pub(crate) fn apply_slice(&self, data: &mut [Complex64], part: Part) {
        let n = self.grid.n();
        for (r, row) in data.chunks_mut(n).enumerate() {
            let keep = match part {
                Part::Known => !self.missing_rows[r],
                Part::Missing => self.missing_rows[r],
            };
            if !keep {
                row.iter_mut().for_each(|z| *z = Complex64::default());
            }
        }
    }
}

/// `P_K f` or `P_M f` for the given strip.
pub fn apply_mask(mask: &StripMask, img: &Image, part: Part) -> Result<Image> {
    mask.apply(img, part)
}
