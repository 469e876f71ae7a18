#![allow(dead_code)]

pub mod lp;
pub mod toy;

use gsep::grid::{Grid, Image};
use gsep::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(grid: Grid, seed: u64) -> Image {
    let mut r = rng(seed);
    let data = (0..grid.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut r);
            let im: f64 = StandardNormal.sample(&mut r);
            Complex64::new(re, im)
        })
        .collect();
    Image::from_vec(grid, data).unwrap()
}

pub fn random_real_image(grid: Grid, seed: u64) -> Image {
    let mut r = rng(seed);
    let data = (0..grid.len()).map(|_| Complex64::new(StandardNormal.sample(&mut r), 0.0)).collect();
    Image::from_vec(grid, data).unwrap()
}

/// Image whose unitary spectrum at frequency `(k1, k2)` is `f(k1, k2)`.
pub fn from_spectrum(grid: Grid, f: impl Fn(i64, i64) -> Complex64) -> Image {
    let data = (0..grid.len())
        .map(|i| {
            let (k1, k2) = grid.freq_at(i);
            f(k1, k2)
        })
        .collect();
    gsep::grid::Spectrum::from_vec(grid, data).unwrap().image()
}

/// log2-slope of a least-squares line through `(j, log2 v)`.
pub fn log2_slope(js: &[f64], vs: &[f64]) -> f64 {
    let ys: Vec<f64> = vs.iter().map(|v| v.log2()).collect();
    let n = js.len() as f64;
    let mx = js.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = js.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = js.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
