//! Small dense real dictionaries acting on pixel vectors.

use gsep::solver::{solve_dictionaries, Dictionary, Mode, SignalDomain, SolverOptions};
use gsep::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub struct Dense {
    pub rows: usize,
    pub len: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| (0..self.len).map(|k| self.a[i * self.len + k] * x[k]).sum()).collect()
    }

    pub fn l1(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().map(|v| v.abs()).sum()
    }
}

impl Dictionary for Dense {
    fn signal_len(&self) -> usize {
        self.len
    }

    fn coeff_len(&self) -> usize {
        self.rows
    }

    fn analyze_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.a[i * self.len..(i + 1) * self.len];
            *o = row.iter().zip(x).map(|(a, z)| z * *a).sum();
        }
    }

    fn synthesize_into(&self, c: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::default());
        for (i, ci) in c.iter().enumerate() {
            let row = &self.a[i * self.len..(i + 1) * self.len];
            for (o, a) in out.iter_mut().zip(row) {
                *o += ci * *a;
            }
        }
    }
}

/// Random orthogonal `n x n` matrix by Gram-Schmidt on Gaussian rows.
pub fn orthogonal(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
            }
        }
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nv > 1e-8 {
            v.iter_mut().for_each(|a| *a /= nv);
            q.push(v);
        }
    }
    q.concat()
}

fn permutation(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    let mut m = vec![0.0; n * n];
    for (i, &j) in p.iter().enumerate() {
        m[i * n + j] = 1.0;
    }
    m
}

/// Two-band Parseval frame `[cos t B1; sin t B2]` of `R^n`.
pub fn two_band(b1: Vec<f64>, b2: Vec<f64>, n: usize, theta: f64) -> Dense {
    let mut a: Vec<f64> = b1.iter().map(|v| v * theta.cos()).collect();
    a.extend(b2.iter().map(|v| v * theta.sin()));
    Dense { rows: 2 * n, len: n, a }
}

/// A spike-like frame (identity and a permutation) and a dense one (two random
/// rotations) on `n` pixels.
pub fn toy_pair(n: usize, rng: &mut impl Rng) -> (Dense, Dense) {
    let mut id = vec![0.0; n * n];
    for i in 0..n {
        id[i * n + i] = 1.0;
    }
    let t1 = rng.random_range(0.3..1.2);
    let t2 = rng.random_range(0.3..1.2);
    let spikes = two_band(id, permutation(n, rng), n, t1);
    let dense = two_band(orthogonal(n, rng), orthogonal(n, rng), n, t2);
    (spikes, dense)
}

/// Solver objective and LP optimum on one random 8x8 two-frame instance.
pub fn lp_instance(seed: u64) -> (f64, f64) {
    let mut rng = super::rng(seed);
    let n = 64;
    let (spikes, dense) = toy_pair(n, &mut rng);
    let rows_missing: usize = rng.random_range(1..3);
    let start: usize = rng.random_range(0..8 - rows_missing);
    let known: Vec<bool> = (0..n).map(|i| !(start..start + rows_missing).contains(&(i / 8))).collect();
    let mut y = vec![0.0; n];
    for _ in 0..4 {
        y[rng.random_range(0..n)] += rng.random_range(-2.0..2.0);
    }
    let smooth: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s2: Vec<f64> = dense.apply(&smooth);
    let back: Vec<f64> = (0..n).map(|k| (0..2 * n).map(|i| dense.a[i * n + k] * s2[i]).sum::<f64>()).collect();
    y.iter_mut().zip(&back).for_each(|(a, b)| *a += 0.5 * b);

    let oracle = super::lp::l1_analysis_value(&[(spikes.rows, spikes.a.clone()), (dense.rows, dense.a.clone())], n, &y, &known);
    let observed: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let dicts: [&dyn Dictionary; 2] = [&spikes, &dense];
    let o = SolverOptions { max_iters: 200_000, tol: 1e-10, frame_bound: Some(1.0), ..Default::default() };
    let sol = solve_dictionaries(&dicts, SignalDomain::Pixels, &observed, &known, Mode::Constrained, &o).unwrap();
    let x1: Vec<f64> = sol.components[0].iter().map(|z| z.re).collect();
    let x2: Vec<f64> = sol.components[1].iter().map(|z| z.re).collect();
    for k in 0..n {
        if known[k] {
            assert!((x1[k] + x2[k] - y[k]).abs() < 1e-9, "infeasible at pixel {k}");
        }
    }
    (spikes.l1(&x1) + dense.l1(&x2), oracle)
}

