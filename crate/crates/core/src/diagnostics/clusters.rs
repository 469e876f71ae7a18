//! Significant-coefficient clusters of the three component models.

use crate::error::{Error, Result};
use crate::frames::{Cone, Frame, FrameKind, SubbandKind};
use crate::phantoms::{in_corona, LineSegment, PointCloud, TextureSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClusterVariant {
    Wavelet,
    Shearlet,
    Gabor,
}

impl ClusterVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ClusterVariant::Wavelet => "wavelet",
            ClusterVariant::Shearlet => "shearlet",
            ClusterVariant::Gabor => "gabor",
        }
    }
}

/// Sorted set of flat atom indices of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSet {
    frame_id: u64,
    variant: ClusterVariant,
    j: usize,
    members: Vec<usize>,
}

impl ClusterSet {
    pub fn new(frame: &Frame, variant: ClusterVariant, j: usize, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.last().is_some_and(|&m| m >= frame.len()) {
            return Err(Error::FrameMismatch("cluster member outside the frame".into()));
        }
        Ok(ClusterSet { frame_id: frame.id(), variant, j, members })
    }

    pub fn frame_id(&self) -> u64 {
        self.frame_id
    }

    pub fn variant(&self) -> ClusterVariant {
        self.variant
    }

    pub fn scale(&self) -> usize {
        self.j
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.members.binary_search(&flat).is_ok()
    }

    pub fn check(&self, frame: &Frame) -> Result<()> {
        if self.frame_id != frame.id() {
            return Err(Error::FrameMismatch(format!(
                "{} cluster was built for frame {}, not {}",
                self.variant.name(),
                self.frame_id,
                frame.id()
            )));
        }
        Ok(())
    }

    /// True if every member of `self` is also in `other`.
    pub fn is_subset(&self, other: &ClusterSet) -> bool {
        self.members.iter().all(|&m| other.contains(m))
    }
}

/// Integer points `p` with `|p| <= r`.
pub fn lattice_points_in_disc(r: f64) -> Vec<(i64, i64)> {
    let h = r.floor().max(0.0) as i64;
    let mut out = Vec::new();
    for a in -h..=h {
        for b in -h..=h {
            if ((a * a + b * b) as f64) <= r * r + 1e-9 {
                out.push((a, b));
            }
        }
    }
    out
}

/// Signed periodic difference `a - b` on a circle of circumference `period`.
fn wrapped(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    if d > period / 2.0 {
        d - period
    } else {
        d
    }
}

fn scales_around(j: usize, frame: &Frame, union: bool) -> std::ops::RangeInclusive<usize> {
    if union {
        j.saturating_sub(1)..=(j + 1).min(frame.j_max())
    } else {
        j..=j
    }
}

fn subband_of(frame: &Frame, kind: SubbandKind) -> Option<usize> {
    frame.subbands().iter().position(|s| s.kind() == kind)
}

/// `Lambda_{1,j}^+-`: wavelet atoms at scales `j-1..=j+1` within physical
/// distance `2^{eps j'} 4^{-j'}` of some point.
pub fn cluster_wavelet(frame: &Frame, j: usize, eps: f64, points: &PointCloud) -> Result<ClusterSet> {
    wavelet_cluster(frame, j, eps, points, true)
}

/// `Lambda_{1,j}`: the scale-`j` part of [`cluster_wavelet`].
pub fn cluster_wavelet_single(frame: &Frame, j: usize, eps: f64, points: &PointCloud) -> Result<ClusterSet> {
    wavelet_cluster(frame, j, eps, points, false)
}

fn wavelet_cluster(frame: &Frame, j: usize, eps: f64, points: &PointCloud, union: bool) -> Result<ClusterSet> {
    if frame.kind() != FrameKind::Wavelet {
        return Err(Error::FrameMismatch(format!("wavelet cluster on a {} frame", frame.kind().name())));
    }
    if points.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    let grid = frame.grid();
    let n = grid.n() as f64;
    let t = grid.side();
    let mut members = Vec::new();
    if j > frame.j_max() {
        return Err(Error::ScaleTooLarge { j, max: frame.j_max() });
    }
    for jp in scales_around(j, frame, union) {
        let Some(s) = subband_of(frame, SubbandKind::Wavelet { j: jp as u32 }) else { continue };
        let (l1, l2) = frame.subband(s).dims();
        let radius = 2f64.powf(eps * jp as f64) / 4f64.powi(jp as i32);
        for &(p1, p2) in &points.positions {
            let (x1, x2) = (p1 as f64 * t / n, p2 as f64 * t / n);
            let (s1, s2) = (t / l1 as f64, t / l2 as f64);
            let (h1, h2) = ((radius / s1).ceil() as i64 + 1, (radius / s2).ceil() as i64 + 1);
            let (c1, c2) = ((x1 / s1).round() as i64, (x2 / s2).round() as i64);
            for a in (c1 - h1)..=(c1 + h1) {
                for b in (c2 - h2)..=(c2 + h2) {
                    let a = a.rem_euclid(l1 as i64) as usize;
                    let b = b.rem_euclid(l2 as i64) as usize;
                    let d1 = wrapped(a as f64 * s1, x1, t);
                    let d2 = wrapped(b as f64 * s2, x2, t);
                    if (d1 * d1 + d2 * d2).sqrt() <= radius * (1.0 + 1e-12) {
                        members.push(frame.flat(s, a, b));
                    }
                }
            }
        }
    }
    ClusterSet::new(frame, ClusterVariant::Wavelet, j, members)
}

/// `Lambda_{2,j}^+-`: vertical-cone shearlets with `|l| <= 1` at scales
/// `j-1..=j+1` whose centre satisfies `|k2 - l k1| = 4^{j'} |x2 - x2_line| <= 2^{eps j'}`.
pub fn cluster_shearlet(frame: &Frame, j: usize, eps: f64, line: &LineSegment) -> Result<ClusterSet> {
    shearlet_cluster(frame, j, eps, line, true)
}

/// `Lambda_{2,j}`: the scale-`j` part of [`cluster_shearlet`].
pub fn cluster_shearlet_single(frame: &Frame, j: usize, eps: f64, line: &LineSegment) -> Result<ClusterSet> {
    shearlet_cluster(frame, j, eps, line, false)
}

fn shearlet_cluster(frame: &Frame, j: usize, eps: f64, line: &LineSegment, union: bool) -> Result<ClusterSet> {
    if frame.kind() != FrameKind::Shearlet {
        return Err(Error::FrameMismatch(format!("shearlet cluster on a {} frame", frame.kind().name())));
    }
    let grid = frame.grid();
    let n = grid.n() as f64;
    let t = grid.side();
    let x2_line = line.center.1 as f64 * t / n;
    let mut members = Vec::new();
    if j > frame.j_max() {
        return Err(Error::ScaleTooLarge { j, max: frame.j_max() });
    }
    for jp in scales_around(j, frame, union) {
        let width = 2f64.powf(eps * jp as f64) / 4f64.powi(jp as i32);
        for l in -1..=1 {
            let kind = SubbandKind::Shearlet { j: jp as u32, cone: Cone::V, l };
            let Some(s) = subband_of(frame, kind) else { continue };
            let (l1, l2) = frame.subband(s).dims();
            let s2 = t / l2 as f64;
            for b in 0..l2 {
                if wrapped(b as f64 * s2, x2_line, t).abs() <= width * (1.0 + 1e-12) {
                    members.extend((0..l1).map(|a| frame.flat(s, a, b)));
                }
            }
        }
    }
    ClusterSet::new(frame, ClusterVariant::Shearlet, j, members)
}

/// `Lambda_{3,j}`: Gabor atoms with band in `I_T^+- cap A_j` and modulation
/// index within `M_j = 2^{eps j / 6}` of the texture centre.
pub fn cluster_gabor(frame: &Frame, j: usize, eps: f64, texture: &TextureSpec) -> Result<ClusterSet> {
    if frame.kind() != FrameKind::Gabor {
        return Err(Error::FrameMismatch(format!("gabor cluster on a {} frame", frame.kind().name())));
    }
    let grid = frame.grid();
    let n = grid.n() as f64;
    let t = grid.side();
    if j > frame.j_max() {
        return Err(Error::ScaleTooLarge { j, max: frame.j_max() });
    }
    let radius = 2f64.powf(eps * j as f64 / 6.0);
    let (x1, x2) = (texture.center.0 as f64 * t / n, texture.center.1 as f64 * t / n);
    let mut members = Vec::new();
    for band in texture.neighbourhood().into_iter().filter(|&b| in_corona(j, b)) {
        let Some(s) = frame.gabor_subband(band) else { continue };
        let (l1, l2) = frame.subband(s).dims();
        let (s1, s2) = (t / l1 as f64, t / l2 as f64);
        for a in 0..l1 {
            for b in 0..l2 {
                let d1 = wrapped(a as f64 * s1, x1, t) / s1;
                let d2 = wrapped(b as f64 * s2, x2, t) / s2;
                if (d1 * d1 + d2 * d2).sqrt() <= radius * (1.0 + 1e-12) {
                    members.push(frame.flat(s, a, b));
                }
            }
        }
    }
    ClusterSet::new(frame, ClusterVariant::Gabor, j, members)
}
