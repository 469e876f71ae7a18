//! Separation, inpainting and denoising of images made of point singularities,
//! curve-like structure and texture, by l1 analysis minimisation over
//! wavelet, shearlet and Gabor Parseval frames.

pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod frames;
pub mod grid;
pub mod io;
pub mod multiscale;
pub mod phantoms;
pub mod pipeline;
pub mod solver;
pub mod windows;

pub use error::{Error, Result};
pub use num_complex::Complex64;
