//! Smooth windows: the Meyer step, the low-pass `Xi`, coronae, cone bumps
//! and the Gabor window, plus their grid-sampled radial bank.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Meyer step `t^4 (35 - 84 t + 70 t^2 - 20 t^3)`, clamped to `[0, 1]`.
pub fn meyer(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t)
    }
}

/// 1-D low-pass profile: 1 on `|u| <= 1/16`, 0 beyond `1/8`.
pub fn xi_hat(u: f64) -> f64 {
    let a = u.abs();
    if a <= 1.0 / 16.0 {
        1.0
    } else if a >= 0.125 {
        0.0
    } else {
        (FRAC_PI_2 * meyer((a - 1.0 / 16.0) * 16.0)).cos()
    }
}

pub fn theta_hat(x1: f64, x2: f64) -> f64 {
    xi_hat(x1) * xi_hat(x2)
}

/// Corona window `W(xi) = sqrt(Theta^2(xi/4) - Theta^2(xi))`.
pub fn corona(x1: f64, x2: f64) -> f64 {
    let a = theta_hat(x1 / 4.0, x2 / 4.0);
    let b = theta_hat(x1, x2);
    (a * a - b * b).max(0.0).sqrt()
}

/// `W_j(xi) = W(4^-j xi)`.
pub fn corona_j(j: usize, x1: f64, x2: f64) -> f64 {
    let s = 4f64.powi(j as i32);
    corona(x1 / s, x2 / s)
}

/// High-pass remainder `sqrt(1 - Theta^2(4^-j xi))`, used for the finest band.
pub fn corona_tail(j: usize, x1: f64, x2: f64) -> f64 {
    let s = 4f64.powi(j as i32);
    let t = theta_hat(x1 / s, x2 / s);
    (1.0 - t * t).max(0.0).sqrt()
}

/// Cone bump with `supp = [-1, 1]` and shifted squares summing to one.
pub fn upsilon(u: f64) -> f64 {
    if !(-1.0..=1.0).contains(&u) {
        0.0
    } else if u <= 0.0 {
        (FRAC_PI_2 * meyer(1.0 + u)).sin()
    } else {
        (FRAC_PI_2 * meyer(u)).cos()
    }
}

/// Horizontal cone function `upsilon(xi2 / xi1)`.
pub fn cone_h(x1: f64, x2: f64) -> f64 {
    if x1 == 0.0 {
        0.0
    } else {
        upsilon(x2 / x1)
    }
}

/// Vertical cone function `upsilon(xi1 / xi2)`.
pub fn cone_v(x1: f64, x2: f64) -> f64 {
    if x2 == 0.0 {
        0.0
    } else {
        upsilon(x1 / x2)
    }
}

/// 1-D Gabor window profiles supported on `[-1, 1]` with `sum_n g(u+n)^2 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GaborWindow {
    /// `cos(pi/2 * meyer(|u|))`.
    #[default]
    Meyer,
    /// `cos(pi u / 2)`.
    Cosine,
}

impl GaborWindow {
    pub fn eval(&self, u: f64) -> f64 {
        let a = u.abs();
        if a >= 1.0 {
            return 0.0;
        }
        match self {
            GaborWindow::Meyer => (FRAC_PI_2 * meyer(a)).cos(),
            GaborWindow::Cosine => (FRAC_PI_2 * a).cos(),
        }
    }

    pub fn eval2(&self, u1: f64, u2: f64) -> f64 {
        self.eval(u1) * self.eval(u2)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "meyer" => Some(GaborWindow::Meyer),
            "cosine" | "cos" => Some(GaborWindow::Cosine),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GaborWindow::Meyer => "meyer",
            GaborWindow::Cosine => "cosine",
        }
    }
}

/// Low-pass and corona profiles sampled on a grid and renormalized so that
/// `low^2 + sum_j band_j^2 = 1` at every frequency.
///
/// Band `j_max` is the high-pass remainder, so the bank tiles up to Nyquist
/// for any `j_max` not above the grid limit.
#[derive(Clone, Debug)]
pub struct WindowBank {
    grid: Grid,
    j_max: usize,
    low: Vec<f64>,
    bands: Vec<Vec<f64>>,
}

impl WindowBank {
    pub fn new(grid: Grid, j_max: usize) -> Result<Self> {
        if j_max > grid.j_max() {
            return Err(Error::ScaleTooLarge { j: j_max, max: grid.j_max() });
        }
        let len = grid.len();
        let mut low = vec![0.0; len];
        let mut bands = vec![vec![0.0; len]; j_max + 1];
        for idx in 0..len {
            let (x1, x2) = grid.phys_at(idx);
            low[idx] = theta_hat(x1, x2);
            for (j, band) in bands.iter_mut().enumerate() {
                band[idx] = if j == j_max { corona_tail(j, x1, x2) } else { corona_j(j, x1, x2) };
            }
        }
        for idx in 0..len {
            let total: f64 = low[idx].powi(2) + bands.iter().map(|b| b[idx].powi(2)).sum::<f64>();
            if total > 0.0 {
                let s = total.sqrt();
                low[idx] /= s;
                bands.iter_mut().for_each(|b| b[idx] /= s);
            }
        }
        Ok(WindowBank { grid, j_max, low, bands })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn low(&self) -> &[f64] {
        &self.low
    }

    pub fn band(&self, j: usize) -> &[f64] {
        &self.bands[j]
    }

    /// Pointwise `low^2 + sum_j band_j^2`.
    pub fn tiling(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.low[i].powi(2) + self.bands.iter().map(|b| b[i].powi(2)).sum::<f64>())
            .collect()
    }
}
