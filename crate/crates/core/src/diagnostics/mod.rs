//! Clusters, relative sparsity, cluster coherence and recovery certificates.

mod clusters;
mod coherence;

pub use clusters::{
    cluster_gabor, cluster_shearlet, cluster_shearlet_single, cluster_wavelet, cluster_wavelet_single, lattice_points_in_disc, ClusterSet, ClusterVariant,
};
pub use coherence::{
    check_lambda_condition, cluster_coherence, cluster_coherence_outside, cluster_sum, kappa_sampled_lower_bound,
    kappa_upper_bound, relative_sparsity, CoherenceTable, KappaBounds, LambdaReport, Projection,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseMode {
    Noiseless,
    /// Noise level `eps = ||Phi* eta||_1` of the component carrying the noise.
    Noisy(f64),
}

/// Recovery-error certificate `sum ||f_m* - f_m|| <= bound`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub delta: f64,
    pub mu: f64,
    pub noise: f64,
    /// `None` when `mu >= 1/2`.
    pub bound: Option<f64>,
    pub unconstrained: bool,
}

impl Certificate {
    pub fn valid(&self) -> bool {
        self.bound.is_some()
    }
}

/// `2 delta / (1 - 2 mu)`, or `(2 delta + 2 mu eps) / (1 - 2 mu)` with noise.
pub fn error_certificate(deltas: &[f64], mu: f64, mode: NoiseMode, unconstrained: bool) -> Certificate {
    let delta: f64 = deltas.iter().sum();
    let noise = match mode {
        NoiseMode::Noiseless => 0.0,
        NoiseMode::Noisy(e) => e,
    };
    let bound = (mu < 0.5).then(|| (2.0 * delta + 2.0 * mu * noise) / (1.0 - 2.0 * mu));
    Certificate { delta, mu, noise, bound, unconstrained }
}
