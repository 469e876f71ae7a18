//! Cached 1-D plans and an in-place 2-D transform over row-major buffers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, inverse: bool) -> Plan {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, plans) = &mut *guard;
    plans
        .entry((len, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Unnormalized 2-D DFT of a `rows x cols` row-major buffer.
///
/// Forward uses `exp(-2 pi i ...)`, inverse `exp(+2 pi i ...)`; neither scales.
pub fn fft2(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    debug_assert_eq!(data.len(), rows * cols);
    if rows * cols <= 1 {
        return;
    }
    if cols > 1 {
        let p = plan(cols, inverse);
        let mut scratch = vec![Complex64::default(); p.get_inplace_scratch_len()];
        p.process_with_scratch(data, &mut scratch);
    }
    if rows > 1 {
        let p = plan(rows, inverse);
        let mut t = vec![Complex64::default(); rows * cols];
        transpose(data, &mut t, rows, cols);
        let mut scratch = vec![Complex64::default(); p.get_inplace_scratch_len()];
        p.process_with_scratch(&mut t, &mut scratch);
        transpose(&t, data, cols, rows);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Pre-planned 2-D transform for a fixed `rows x cols` shape.
pub struct Fft2Plan {
    rows: usize,
    cols: usize,
    row: [Plan; 2],
    col: [Plan; 2],
    scratch_len: usize,
}

impl std::fmt::Debug for Fft2Plan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2Plan({}x{})", self.rows, self.cols)
    }
}

impl Fft2Plan {
    pub fn new(rows: usize, cols: usize) -> Self {
        let row = [plan(cols, false), plan(cols, true)];
        let col = [plan(rows, false), plan(rows, true)];
        let scratch_len = row
            .iter()
            .chain(col.iter())
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Fft2Plan { rows, cols, row, col, scratch_len }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Same conventions as [`fft2`]; `work` is resized as needed and reused.
    pub fn execute(&self, data: &mut [Complex64], inverse: bool, work: &mut Vec<Complex64>) {
        let (rows, cols) = (self.rows, self.cols);
        let len = rows * cols;
        debug_assert_eq!(data.len(), len);
        if len <= 1 {
            return;
        }
        let need = len + self.scratch_len;
        if work.len() < need {
            work.resize(need, Complex64::default());
        }
        let (t, scratch) = work.split_at_mut(len);
        let scratch = &mut scratch[..self.scratch_len];
        let d = inverse as usize;
        if cols > 1 {
            self.row[d].process_with_scratch(data, scratch);
        }
        if rows > 1 {
            if cols == 1 {
                self.col[d].process_with_scratch(data, scratch);
            } else {
                transpose(data, t, rows, cols);
                self.col[d].process_with_scratch(t, scratch);
                transpose(t, data, cols, rows);
            }
        }
    }
}
