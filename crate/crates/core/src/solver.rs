//! l1-analysis separation: constrained, noisy-constrained and unconstrained modes.
//!
//! The minimisation runs a first-order primal-dual iteration over the product
//! of N signals. Each analysis operator is applied through its frame's own
//! analysis and synthesis; no operator is ever inverted.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Fft2Plan;
use crate::frames::Frame;
use crate::grid::{Grid, Image, StripMask};
use crate::io::write_atomic;

type C = Complex64;

/// A linear analysis operator together with its adjoint.
pub trait Dictionary: Sync {
    fn signal_len(&self) -> usize;
    fn coeff_len(&self) -> usize;
    fn analyze_into(&self, x: &[C], out: &mut [C]);
    /// Writes the adjoint of the analysis (overwrites `out`).
    fn synthesize_into(&self, c: &[C], out: &mut [C]);
}

/// Frames act on unitary spectra (see [`SignalDomain::Spectrum`]).
impl Dictionary for Frame {
    fn signal_len(&self) -> usize {
        self.grid().len()
    }

    fn coeff_len(&self) -> usize {
        self.len()
    }

    fn analyze_into(&self, x: &[C], out: &mut [C]) {
        Frame::analyze_into(self, x, out)
    }

    fn synthesize_into(&self, c: &[C], out: &mut [C]) {
        Frame::synthesize_into(self, c, out)
    }
}

/// Representation the dictionaries expect for a signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SignalDomain {
    Pixels,
    /// Unitary 2-D DFT of the pixel array.
    Spectrum(Grid),
}

struct DomainMap {
    plan: Option<(Fft2Plan, f64)>,
}

impl DomainMap {
    fn new(domain: SignalDomain) -> Self {
        let plan = match domain {
            SignalDomain::Pixels => None,
            SignalDomain::Spectrum(g) => Some((Fft2Plan::new(g.n(), g.n()), 1.0 / g.n() as f64)),
        };
        DomainMap { plan }
    }

    fn to_pixels(&self, x: &mut [C], work: &mut Vec<C>) {
        if let Some((plan, s)) = &self.plan {
            plan.execute(x, true, work);
            x.iter_mut().for_each(|z| *z *= *s);
        }
    }

    fn from_pixels(&self, x: &mut [C], work: &mut Vec<C>) {
        if let Some((plan, s)) = &self.plan {
            plan.execute(x, false, work);
            x.iter_mut().for_each(|z| *z *= *s);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularizer {
    L1,
    L2Sq,
}

impl Regularizer {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "l1" => Some(Regularizer::L1),
            "l2sq" => Some(Regularizer::L2Sq),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::L1 => "l1",
            Regularizer::L2Sq => "l2sq",
        }
    }

    fn value(&self, r: C) -> f64 {
        match self {
            Regularizer::L1 => r.norm(),
            Regularizer::L2Sq => r.norm_sqr(),
        }
    }

    /// `prox_{t R}(e)`.
    fn prox(&self, e: C, t: f64) -> C {
        match self {
            Regularizer::L1 => {
                let a = e.norm();
                if a <= t {
                    C::default()
                } else {
                    e * ((a - t) / a)
                }
            }
            Regularizer::L2Sq => e / (1.0 + 2.0 * t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    /// `P_K sum f_m = P_K f`.
    Constrained,
    /// Same constraint with a noisy right-hand side `P_K f + eta`.
    ConstrainedNoisy,
    /// `sum ||Phi_m* f_m||_1 + lambda R(P_K sum f_m - P_K f)`.
    Unconstrained { lambda: f64, regularizer: Regularizer },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Constrained => "constrained",
            Mode::ConstrainedNoisy => "noisy",
            Mode::Unconstrained { .. } => "unconstrained",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub burn_in: usize,
    /// Multiplies the automatic primal/dual step balance.
    pub step_ratio: f64,
    /// Upper frame bound; estimated by power iteration when `None`.
    pub frame_bound: Option<f64>,
    /// Seeds the power-iteration start vector.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iters: 2000, tol: 1e-6, burn_in: 50, step_ratio: 1.0, frame_bound: None, seed: 0 }
    }
}

/// Components in pixel order plus per-iteration traces.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub components: Vec<Vec<C>>,
    pub objective: Vec<f64>,
    pub residual: Vec<f64>,
    pub change: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn estimate_bound(dict: &dyn Dictionary, iters: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<C> = (0..dict.signal_len())
        .map(|_| C::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let mut c = vec![C::default(); dict.coeff_len()];
    let mut y = vec![C::default(); dict.signal_len()];
    let mut bound = 0.0;
    for _ in 0..iters {
        let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|z| *z /= nx);
        dict.analyze_into(&x, &mut c);
        dict.synthesize_into(&c, &mut y);
        bound = c.iter().map(|z| z.norm_sqr()).sum::<f64>();
        std::mem::swap(&mut x, &mut y);
    }
    // Power iteration approaches the top eigenvalue from below.
    bound * 1.01
}

fn l1(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

/// Core solver over arbitrary dictionaries.
///
/// `observed` and `known` are in pixel order; `observed` is ignored on
/// missing pixels.
pub fn solve_dictionaries(
    dicts: &[&dyn Dictionary],
    domain: SignalDomain,
    observed: &[C],
    known: &[bool],
    mode: Mode,
    opts: &SolverOptions,
) -> Result<Solution> {
    let n_comp = dicts.len();
    if n_comp == 0 {
        return Err(Error::Invalid("at least one frame is required".into()));
    }
    let len = observed.len();
    if known.len() != len || dicts.iter().any(|d| d.signal_len() != len) {
        return Err(Error::FrameMismatch("dictionaries, observation and mask differ in size".into()));
    }
    if let SignalDomain::Spectrum(g) = domain {
        if g.len() != len {
            return Err(Error::GridMismatch(g.len(), len));
        }
    }
    if let Mode::Unconstrained { lambda, .. } = mode {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
        }
    }
    if !(opts.tol >= 0.0) || !(opts.step_ratio > 0.0) {
        return Err(Error::Invalid("tol must be >= 0 and step_ratio > 0".into()));
    }

    let y: Vec<C> = observed.iter().zip(known).map(|(z, &k)| if k { *z } else { C::default() }).collect();
    let y_norm = l1(&y).max(y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    if y_norm == 0.0 {
        return Ok(Solution {
            components: vec![vec![C::default(); len]; n_comp],
            objective: Vec::new(),
            residual: Vec::new(),
            change: Vec::new(),
            iterations: 0,
            converged: true,
        });
    }
    let y_l2 = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let bound = match opts.frame_bound {
        Some(b) => b,
        None => dicts.iter().map(|d| estimate_bound(*d, 30, opts.seed)).fold(0.0, f64::max),
    };
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(Error::Invalid(format!("frame bound {bound} is not positive")));
    }
    let coeffs_total: usize = dicts.iter().map(|d| d.coeff_len()).sum();
    let ratio = opts.step_ratio * y_l2 / (coeffs_total as f64).sqrt();
    let tau = 0.95 * ratio / bound.sqrt();
    let sigma = 0.95 / (ratio * bound.sqrt());

    let map = DomainMap::new(domain);
    let mut work = Vec::new();
    let mut x: Vec<Vec<C>> = vec![vec![C::default(); len]; n_comp];
    let mut v: Vec<Vec<C>> = vec![vec![C::default(); len]; n_comp];
    let mut u: Vec<Vec<C>> = dicts.iter().map(|d| vec![C::default(); d.coeff_len()]).collect();
    let mut kx: Vec<Vec<C>> = u.clone();
    let mut kx_bar: Vec<Vec<C>> = u.clone();
    let mut sum = vec![C::default(); len];

    let mut sol = Solution {
        components: Vec::new(),
        objective: Vec::new(),
        residual: Vec::new(),
        change: Vec::new(),
        iterations: 0,
        converged: false,
    };
    let inv_n = 1.0 / n_comp as f64;
    for iter in 1..=opts.max_iters {
        // Dual ascent with projection onto the unit l-infinity ball, then the primal step.
        (&mut u, &kx_bar, &mut v, &x, dicts).into_par_iter().for_each(|(u, kb, v, x, d)| {
            for (a, b) in u.iter_mut().zip(kb.iter()) {
                let z = *a + *b * sigma;
                let m = z.norm();
                *a = if m > 1.0 { z / m } else { z };
            }
            d.synthesize_into(u, v);
            for (p, q) in v.iter_mut().zip(x.iter()) {
                *p = *q - *p * tau;
            }
        });

        sum.iter_mut().for_each(|z| *z = C::default());
        for vm in &v {
            for (s, z) in sum.iter_mut().zip(vm) {
                *s += *z;
            }
        }
        map.to_pixels(&mut sum, &mut work);
        let mut penalty = 0.0;
        let mut res_sqr = 0.0;
        for ((s, &yk), &k) in sum.iter_mut().zip(&y).zip(known) {
            if !k {
                *s = C::default();
                continue;
            }
            let e = *s - yk;
            let d = match mode {
                Mode::Constrained | Mode::ConstrainedNoisy => -e,
                Mode::Unconstrained { lambda, regularizer } => {
                    let z = regularizer.prox(e, tau * n_comp as f64 * lambda);
                    penalty += lambda * regularizer.value(z);
                    z - e
                }
            };
            res_sqr += (e + d).norm_sqr();
            *s = d * inv_n;
        }
        map.from_pixels(&mut sum, &mut work);

        let corr = &sum;
        let stats: Vec<(f64, f64, f64)> = (&mut x, &v, &mut kx, &mut kx_bar, dicts)
            .into_par_iter()
            .map(|(x, v, kx, kb, d)| {
                let mut diff = 0.0;
                let mut norm = 0.0;
                for ((xi, vi), ci) in x.iter_mut().zip(v.iter()).zip(corr.iter()) {
                    let new = *vi + *ci;
                    diff += (new - *xi).norm_sqr();
                    norm += new.norm_sqr();
                    *xi = new;
                }
                std::mem::swap(kx, kb);
                d.analyze_into(x, kx);
                for (b, a) in kb.iter_mut().zip(kx.iter()) {
                    *b = *a * 2.0 - *b;
                }
                (diff, norm, l1(kx))
            })
            .collect();
        let diff: f64 = stats.iter().map(|s| s.0).sum();
        let norm: f64 = stats.iter().map(|s| s.1).sum();
        let objective = stats.iter().map(|s| s.2).sum::<f64>() + penalty;
        let change = if norm > 0.0 { (diff / norm).sqrt() } else { diff.sqrt() };
        if !objective.is_finite() || !change.is_finite() {
            return Err(Error::Diverged(iter));
        }
        sol.objective.push(objective);
        sol.residual.push(res_sqr.sqrt());
        sol.change.push(change);
        sol.iterations = iter;
        if change < opts.tol {
            sol.converged = true;
            break;
        }
    }

    sol.components = x
        .into_iter()
        .map(|mut c| {
            map.to_pixels(&mut c, &mut work);
            c
        })
        .collect();
    Ok(sol)
}

/// One separation task on a common grid.
#[derive(Clone, Debug)]
pub struct SeparationProblem<'a> {
    pub observed: Image,
    pub mask: StripMask,
    pub frames: Vec<&'a Frame>,
    pub mode: Mode,
    pub options: SolverOptions,
}

impl<'a> SeparationProblem<'a> {
    pub fn new(
        observed: Image,
        mask: StripMask,
        frames: Vec<&'a Frame>,
        mode: Mode,
        options: SolverOptions,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Invalid("at least one frame is required".into()));
        }
        let grid = observed.grid();
        grid.check(&mask.grid())?;
        for f in &frames {
            grid.check(&f.grid())?;
        }
        if let Mode::Unconstrained { lambda, .. } = mode {
            if !(lambda > 0.0) {
                return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
            }
        }
        Ok(SeparationProblem { observed, mask, frames, mode, options })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationResult {
    pub components: Vec<Image>,
    pub objective: Vec<f64>,
    pub residual: Vec<f64>,
    pub change: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl SeparationResult {
    pub fn final_objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> Option<Image> {
        let mut it = self.components.iter();
        let mut acc = it.next()?.clone();
        for c in it {
            acc.axpy(1.0, c);
        }
        Some(acc)
    }
}

pub fn solve(problem: &SeparationProblem) -> Result<SeparationResult> {
    let grid = problem.observed.grid();
    let n = grid.n();
    let known: Vec<bool> = (0..grid.len()).map(|i| !problem.mask.is_missing(i / n)).collect();
    let dicts: Vec<&dyn Dictionary> = problem.frames.iter().map(|f| *f as &dyn Dictionary).collect();
    let sol = solve_dictionaries(
        &dicts,
        SignalDomain::Spectrum(grid),
        problem.observed.data(),
        &known,
        problem.mode,
        &problem.options,
    )?;
    let components = sol
        .components
        .into_iter()
        .map(|c| Image::from_vec(grid, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(SeparationResult {
        components,
        objective: sol.objective,
        residual: sol.residual,
        change: sol.change,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// `lambda_j` for the unconstrained per-scale solves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaSchedule {
    Fixed(f64),
    /// `lambda_j = base * 2^{2j}`.
    Dyadic { base: f64 },
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule::Dyadic { base: 1.0 }
    }
}

impl LambdaSchedule {
    pub fn at(&self, j: usize) -> f64 {
        match *self {
            LambdaSchedule::Fixed(l) => l,
            LambdaSchedule::Dyadic { base } => base * 4f64.powi(j as i32),
        }
    }
}

/// Independent solves of per-scale problems, in parallel.
///
/// Unconstrained problems take their lambda from `schedule` at their scale.
pub fn solve_per_scale(
    problems: &[(usize, SeparationProblem)],
    schedule: &LambdaSchedule,
) -> Vec<(usize, Result<SeparationResult>)> {
    problems
        .par_iter()
        .map(|(j, p)| {
            let res = match p.mode {
                Mode::Unconstrained { regularizer, .. } => {
                    let mut q = p.clone();
                    q.mode = Mode::Unconstrained { lambda: schedule.at(*j), regularizer };
                    solve(&q)
                }
                _ => solve(p),
            };
            (*j, res)
        })
        .collect()
}

/// Normalised per-component L2 errors and their sum.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    /// `None` where the ground truth is zero.
    pub errors: Vec<Option<f64>>,
    pub sum: f64,
    /// Unnormalised `sum ||f_m* - f_m||_2`.
    pub abs_sum: f64,
    /// Set when some component error reaches 1 (no better than returning zero).
    pub flagged: bool,
}

pub fn residual_report(components: &[Image], truth: &[Image]) -> Result<ResidualReport> {
    if components.len() != truth.len() {
        return Err(Error::Invalid(format!(
            "{} recovered components for {} ground-truth components",
            components.len(),
            truth.len()
        )));
    }
    let mut errors = Vec::with_capacity(truth.len());
    let mut abs_sum = 0.0;
    for (c, t) in components.iter().zip(truth) {
        c.grid().check(&t.grid())?;
        let d = c.sub(t).norm();
        abs_sum += d;
        let tn = t.norm();
        errors.push((tn > 0.0).then(|| d / tn));
    }
    let sum = errors.iter().flatten().sum();
    let flagged = errors.iter().flatten().any(|&e| e >= 1.0);
    Ok(ResidualReport { errors, sum, abs_sum, flagged })
}

pub const TRACE_HEADER: &str = "iter,objective,residual,step";

/// Solver trace as CSV with columns `iter,objective,residual,step`.
pub fn trace_csv(result: &SeparationResult) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for (i, ((o, r), s)) in result.objective.iter().zip(&result.residual).zip(&result.change).enumerate() {
        writeln!(out, "{},{:.17e},{:.17e},{:.17e}", i + 1, o, r, s).unwrap();
    }
    out
}

pub fn write_trace(path: &Path, result: &SeparationResult) -> Result<()> {
    write_atomic(path, trace_csv(result).as_bytes())
}
