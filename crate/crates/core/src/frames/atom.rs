/// Shearlet cone: horizontal (`|xi2| <= |xi1|`) or vertical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cone {
    H,
    V,
}

impl Cone {
    pub fn code(&self) -> u32 {
        match self {
            Cone::H => 0,
            Cone::V => 1,
        }
    }
}

/// Index of a single atom. Positions are lattice coordinates within the
/// atom's subband; see [`crate::frames::Frame::position`] for pixels.
///
/// The derived order is lexicographic on (kind, scale, cone, shear, band, position).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomIndex {
    LowPass { p: (u32, u32) },
    Wavelet { j: u32, p: (u32, u32) },
    Shearlet { j: u32, cone: Cone, l: i32, k: (u32, u32) },
    /// Band `n` and modulation lattice point `m` (spatial position `m / 2`).
    Gabor { band: (i32, i32), m: (u32, u32) },
}
