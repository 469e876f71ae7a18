//! Relative sparsity, cluster coherence and joint-concentration bounds.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::clusters::ClusterSet;
use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::frames::{CoefficientSet, Frame};
use crate::grid::{Image, Part, StripMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Projection {
    None,
    Known,
    Missing,
}

impl Projection {
    pub fn name(&self) -> &'static str {
        match self {
            Projection::None => "none",
            Projection::Known => "P_K",
            Projection::Missing => "P_M",
        }
    }

    fn apply(&self, img: &mut Image, mask: &StripMask) {
        match self {
            Projection::None => {}
            Projection::Known => mask.apply_in_place(img, Part::Known),
            Projection::Missing => mask.apply_in_place(img, Part::Missing),
        }
    }
}

/// `delta = || 1_{Lambda^c} Phi* f ||_1`.
pub fn relative_sparsity(coeffs: &CoefficientSet, cluster: &ClusterSet) -> Result<f64> {
    if coeffs.frame_id() != cluster.frame_id() {
        return Err(Error::FrameMismatch("coefficients and cluster belong to different frames".into()));
    }
    Ok((coeffs.l1() - coeffs.l1_on(cluster.members())).max(0.0))
}

/// `sum_{i in Lambda} P phi_i`, synthesised once.
pub fn cluster_sum(frame: &Frame, cluster: &ClusterSet, projection: Projection, mask: &StripMask) -> Result<Image> {
    cluster.check(frame)?;
    frame.grid().check(&mask.grid())?;
    let mut c = frame.zero_coeffs();
    for &m in cluster.members() {
        c.data_mut()[m] = Complex64::new(1.0, 0.0);
    }
    let mut s = frame.synthesize(&c)?;
    projection.apply(&mut s, mask);
    Ok(s)
}

/// `mu_c(Lambda, P Phi_A; Phi_B) = max_j |< sum_{i in Lambda} P phi_i, psi_j >|`.
pub fn cluster_coherence(
    cluster: &ClusterSet,
    frame_a: &Frame,
    frame_b: &Frame,
    projection: Projection,
    mask: &StripMask,
) -> Result<f64> {
    frame_a.grid().check(&frame_b.grid())?;
    if cluster.is_empty() {
        cluster.check(frame_a)?;
        return Ok(0.0);
    }
    let s = cluster_sum(frame_a, cluster, projection, mask)?;
    Ok(frame_b.analyze(&s)?.max_abs())
}

/// Sum-outside variant `max_j sum_{i in Lambda} |< P phi_i, psi_j >|`, one
/// analysis per cluster atom. Meant for small instances.
pub fn cluster_coherence_outside(
    cluster: &ClusterSet,
    frame_a: &Frame,
    frame_b: &Frame,
    projection: Projection,
    mask: &StripMask,
) -> Result<f64> {
    cluster.check(frame_a)?;
    frame_a.grid().check(&frame_b.grid())?;
    let mut acc = vec![0.0; frame_b.len()];
    for &i in cluster.members() {
        let mut atom = frame_a.atom(i);
        projection.apply(&mut atom, mask);
        for (a, z) in acc.iter_mut().zip(frame_b.analyze(&atom)?.data()) {
            *a += z.norm();
        }
    }
    Ok(acc.into_iter().fold(0.0, f64::max))
}

/// Coherences `mu_c(Lambda_n, P Phi_n; Phi_m)` keyed by `(n, m, P)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoherenceTable {
    pub components: usize,
    pub entries: HashMap<(usize, usize, Projection), f64>,
}

impl CoherenceTable {
    /// All entries the bounds need: cross pairs under every projection and the
    /// self pairs under `P_M`.
    pub fn compute(frames: &[&Frame], clusters: &[&ClusterSet], mask: &StripMask) -> Result<Self> {
        if frames.len() != clusters.len() {
            return Err(Error::Invalid("one cluster per frame is required".into()));
        }
        let n = frames.len();
        let mut entries = HashMap::new();
        for (a, (fa, ca)) in frames.iter().zip(clusters).enumerate() {
            for proj in [Projection::None, Projection::Known, Projection::Missing] {
                let sum = if ca.is_empty() { None } else { Some(cluster_sum(fa, ca, proj, mask)?) };
                for (b, fb) in frames.iter().enumerate() {
                    if a == b && proj != Projection::Missing {
                        continue;
                    }
                    let mu = match &sum {
                        Some(s) => fb.analyze(s)?.max_abs(),
                        None => 0.0,
                    };
                    entries.insert((a, b, proj), mu);
                }
            }
        }
        Ok(CoherenceTable { components: n, entries })
    }

    pub fn get(&self, n: usize, m: usize, proj: Projection) -> Result<f64> {
        self.entries
            .get(&(n, m, proj))
            .copied()
            .ok_or_else(|| Error::MissingCoherence(format!("mu(Lambda_{n}, {}; Phi_{m})", proj.name())))
    }
}

/// `(mu_{c,N}, mu_{c,N}^sep, mu_{c,N}^inp)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaBounds {
    pub mu: f64,
    pub sep: f64,
    pub inp: f64,
}

/// Assembles the joint-concentration bounds from a coherence table.
///
/// Components flagged in `no_missing` are treated as lying entirely in the
/// known part: they contribute no inpainting term and their separation terms
/// use the unprojected coherence.
pub fn kappa_upper_bound(table: &CoherenceTable, no_missing: &[bool]) -> Result<KappaBounds> {
    let n = table.components;
    if no_missing.len() != n {
        return Err(Error::Invalid("one no-missing flag per component is required".into()));
    }
    let inp = |m: usize| -> Result<f64> {
        if no_missing[m] {
            Ok(0.0)
        } else {
            table.get(m, m, Projection::Missing)
        }
    };
    let known = |a: usize, b: usize| -> Result<f64> {
        table.get(a, b, if no_missing[a] { Projection::None } else { Projection::Known })
    };
    let missing = |a: usize, b: usize| -> Result<f64> {
        if no_missing[a] {
            Ok(0.0)
        } else {
            table.get(a, b, Projection::Missing)
        }
    };
    let (mut mu, mut sep, mut inp_max) = (0.0f64, 0.0f64, 0.0f64);
    for m in 0..n {
        let i = inp(m)?;
        let mut cross = 0.0;
        let mut split = 0.0;
        for k in (0..n).filter(|&k| k != m) {
            cross += known(k, m)?;
            split += table.get(k, m, Projection::None)? + missing(k, m)?;
        }
        mu = mu.max(i + cross);
        sep = sep.max(split);
        inp_max = inp_max.max(i);
    }
    Ok(KappaBounds { mu, sep, inp: inp_max })
}

fn heavy_tailed(rng: &mut ChaCha8Rng) -> Complex64 {
    let u: f64 = rng.random::<f64>().max(1e-12);
    let mag = u.powf(-1.0 / 1.5) - 1.0;
    Complex64::from_polar(mag, 2.0 * std::f64::consts::PI * rng.random::<f64>())
}

/// Largest concentration quotient over random admissible tuples.
///
/// Even trials draw heavy-tailed coefficients on the clusters only, odd
/// trials on all atoms. `sum f_n` is moved into the missing part by
/// subtracting its known part from `f_1`; components flagged in `no_missing`
/// are first restricted to the known part.
pub fn kappa_sampled_lower_bound(
    frames: &[&Frame],
    clusters: &[&ClusterSet],
    mask: &StripMask,
    no_missing: &[bool],
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Invalid("at least one trial is required".into()));
    }
    if frames.is_empty() || frames.len() != clusters.len() || no_missing.len() != frames.len() {
        return Err(Error::Invalid("frames, clusters and flags must align".into()));
    }
    for (f, c) in frames.iter().zip(clusters) {
        c.check(f)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut done = 0;
    let mut attempts = 0;
    while done < trials {
        attempts += 1;
        if attempts > 10 * trials + 10 {
            break;
        }
        let on_cluster = done % 2 == 0;
        let mut parts = Vec::with_capacity(frames.len());
        for (m, (f, c)) in frames.iter().zip(clusters).enumerate() {
            let mut coeffs = f.zero_coeffs();
            if on_cluster {
                for &i in c.members() {
                    coeffs.data_mut()[i] = heavy_tailed(&mut rng);
                }
            } else {
                for z in coeffs.data_mut() {
                    *z = heavy_tailed(&mut rng);
                }
            }
            let mut img = f.synthesize(&coeffs)?;
            if no_missing[m] {
                mask.apply_in_place(&mut img, Part::Known);
            }
            parts.push(img);
        }
        let mut total = Image::zeros(frames[0].grid());
        for p in &parts {
            total.axpy(1.0, p);
        }
        mask.apply_in_place(&mut total, Part::Known);
        parts[0].axpy(-1.0, &total);

        let mut num = 0.0;
        let mut den = 0.0;
        for ((f, c), p) in frames.iter().zip(clusters).zip(&parts) {
            den += f.analyze(p)?.l1();
            for part in [Part::Known, Part::Missing] {
                let q = mask.apply(p, part)?;
                num += f.analyze(&q)?.l1_on(c.members());
            }
        }
        if den > 1e-300 && den.is_finite() {
            best = best.max(num / den);
            done += 1;
        }
    }
    Ok(best)
}

/// Worst ratio of the lambda condition over delta probes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaReport {
    pub max_ratio: f64,
    pub worst_pixel: (usize, usize),
    pub lambda: f64,
    pub pass: bool,
}

/// Checks `sum_m ||1_{Lambda_m} Phi_m* z||_1 <= lambda ||z||_1` on every pixel delta.
///
/// The ratio at pixel `x` is `sum_m sum_{i in Lambda_m} |phi_i(x)|`. Atoms of a
/// subband are pixel translates of one kernel, so this is a sum of circular
/// convolutions of `|kernel|` with the member indicator.
pub fn check_lambda_condition(frames: &[&Frame], clusters: &[&ClusterSet], lambda: f64) -> Result<LambdaReport> {
    if frames.is_empty() || frames.len() != clusters.len() {
        return Err(Error::Invalid("one cluster per frame is required".into()));
    }
    let grid = frames[0].grid();
    let n = grid.n();
    let mut ratio = vec![0.0f64; grid.len()];
    for (f, c) in frames.iter().zip(clusters) {
        c.check(f)?;
        grid.check(&f.grid())?;
        let mut by_subband: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        for &m in c.members() {
            let (s, a, b) = f.locate(m);
            by_subband.entry(s).or_default().push((a, b));
        }
        let mut keys: Vec<usize> = by_subband.keys().copied().collect();
        keys.sort_unstable();
        for s in keys {
            let (l1, l2) = f.subband(s).dims();
            let kernel = f.atom(f.flat(s, 0, 0));
            let mut kk: Vec<Complex64> = kernel.data().iter().map(|z| Complex64::new(z.norm(), 0.0)).collect();
            let mut ind = vec![Complex64::default(); grid.len()];
            for &(a, b) in &by_subband[&s] {
                ind[(a * n / l1) * n + b * n / l2] += 1.0;
            }
            fft2(&mut kk, n, n, false);
            fft2(&mut ind, n, n, false);
            for (x, y) in kk.iter_mut().zip(&ind) {
                *x *= y;
            }
            fft2(&mut kk, n, n, true);
            let scale = 1.0 / grid.len() as f64;
            for (r, z) in ratio.iter_mut().zip(&kk) {
                *r += (z.re * scale).max(0.0);
            }
        }
    }
    let (idx, &max_ratio) = ratio
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    Ok(LambdaReport { max_ratio, worst_pixel: (idx / n, idx % n), lambda, pass: max_ratio <= lambda })
}
