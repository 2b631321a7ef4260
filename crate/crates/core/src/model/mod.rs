//! Downlink system model: scenario instances, QoS targets, beamformers and
//! the per-user quadratic-form rewrite of the SINR outage event.

mod beamformer;
mod channel;
pub(crate) mod outage;

pub use beamformer::{build_pcsi_directions, build_rci, build_zf, default_rci_alpha};
pub use channel::{estimation_error_variance, generate_rayleigh_channels, simulate_estimate, simulate_uplink_estimate};
pub use outage::{build_outage_form, init_powers_pcsi, sinr, InitFallback, InitialPowers};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eigen, psd_pinv_sqrt, psd_sqrt, CMatrix, CVector};

/// One simulated draw: true and estimated channels plus the error statistics.
///
/// Channel matrices are `K x N_t` with row `k` holding `h_k^H`.
#[derive(Debug, Clone)]
pub struct ScenarioInstance {
    n_tx: usize,
    n_users: usize,
    true_channels: CMatrix,
    est_channels: CMatrix,
    error_cov: Vec<CMatrix>,
    noise_var: Vec<f64>,
    cov_sqrt: Vec<CMatrix>,
    cov_pinv_sqrt: Vec<CMatrix>,
}

impl ScenarioInstance {
    pub fn new(
        true_channels: CMatrix,
        est_channels: CMatrix,
        error_cov: Vec<CMatrix>,
        noise_var: Vec<f64>,
    ) -> Result<Self> {
        let (n_users, n_tx) = est_channels.shape();
        if n_users == 0 || n_tx == 0 {
            return Err(Error::InvalidInput("empty channel matrix".into()));
        }
        if true_channels.shape() != (n_users, n_tx) {
            return Err(Error::InvalidInput(format!(
                "true channels are {:?}, estimates are {:?}",
                true_channels.shape(),
                est_channels.shape()
            )));
        }
        if error_cov.len() != n_users || noise_var.len() != n_users {
            return Err(Error::InvalidInput("need one error covariance and one noise variance per user".into()));
        }
        for (k, c) in error_cov.iter().enumerate() {
            if c.shape() != (n_tx, n_tx) {
                return Err(Error::InvalidInput(format!("C_{k} has shape {:?}", c.shape())));
            }
            if hermitian_defect(c) > 1e-12 {
                return Err(Error::InvalidInput(format!("C_{k} is not Hermitian")));
            }
            let min_eig = hermitian_eigen(c).values.last().copied().unwrap_or(0.0);
            if min_eig < -1e-12 {
                return Err(Error::InvalidInput(format!("C_{k} has negative eigenvalue {min_eig:e}")));
            }
        }
        if let Some(k) = noise_var.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput(format!("noise variance of user {k} must be positive")));
        }
        let cov_sqrt = error_cov.iter().map(psd_sqrt).collect();
        let cov_pinv_sqrt = error_cov.iter().map(psd_pinv_sqrt).collect();
        Ok(Self { n_tx, n_users, true_channels, est_channels, error_cov, noise_var, cov_sqrt, cov_pinv_sqrt })
    }

    /// Instance with `C_k = sigma_e2 * I` and a common noise variance.
    pub fn isotropic(true_channels: CMatrix, est_channels: CMatrix, sigma_e2: f64, noise_var: f64) -> Result<Self> {
        let (k, n) = est_channels.shape();
        let cov = CMatrix::identity(n, n) * crate::linalg::real(sigma_e2);
        Self::new(true_channels, est_channels, vec![cov; k], vec![noise_var; k])
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn true_channels(&self) -> &CMatrix {
        &self.true_channels
    }

    pub fn est_channels(&self) -> &CMatrix {
        &self.est_channels
    }

    pub fn error_cov(&self) -> &[CMatrix] {
        &self.error_cov
    }

    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    /// Column vector `ĥ_k`.
    pub fn est_channel(&self, k: usize) -> CVector {
        self.est_channels.row(k).adjoint()
    }

    /// Column vector `h_k`.
    pub fn true_channel(&self, k: usize) -> CVector {
        self.true_channels.row(k).adjoint()
    }

    /// Clamped principal square root `C_k^{1/2}`.
    pub fn cov_sqrt(&self, k: usize) -> &CMatrix {
        &self.cov_sqrt[k]
    }

    pub fn cov_pinv_sqrt(&self, k: usize) -> &CMatrix {
        &self.cov_pinv_sqrt[k]
    }

    /// Same channels with every error covariance replaced by `sigma_e2 * I`.
    pub fn with_isotropic_error(&self, sigma_e2: f64) -> Result<Self> {
        let cov = CMatrix::identity(self.n_tx, self.n_tx) * crate::linalg::real(sigma_e2);
        Self::new(
            self.true_channels.clone(),
            self.est_channels.clone(),
            vec![cov; self.n_users],
            self.noise_var.clone(),
        )
    }
}

/// Per-user SINR targets (linear) and outage tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct QosSpec {
    gamma: Vec<f64>,
    epsilon: Vec<f64>,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl QosSpec {
    pub fn new(gamma: Vec<f64>, epsilon: Vec<f64>) -> Result<Self> {
        if gamma.len() != epsilon.len() || gamma.is_empty() {
            return Err(Error::InvalidInput("gamma and epsilon lengths differ".into()));
        }
        if gamma.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidInput("SINR targets must be positive".into()));
        }
        if epsilon.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::InvalidInput("outage tolerances must lie in (0, 1)".into()));
        }
        Ok(Self { gamma, epsilon })
    }

    /// Targets given in dB.
    pub fn from_db(gamma_db: &[f64], epsilon: &[f64]) -> Result<Self> {
        Self::new(gamma_db.iter().copied().map(db_to_linear).collect(), epsilon.to_vec())
    }

    pub fn uniform_db(n_users: usize, gamma_db: f64, epsilon: f64) -> Result<Self> {
        Self::from_db(&vec![gamma_db; n_users], &vec![epsilon; n_users])
    }

    pub fn n_users(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    /// Required success probability `1 - epsilon_k`.
    pub fn target(&self, k: usize) -> f64 {
        1.0 - self.epsilon[k]
    }

    pub fn with_epsilon(&self, epsilon: Vec<f64>) -> Result<Self> {
        Self::new(self.gamma.clone(), epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamformerKind {
    Zf,
    Rci { alpha: f64 },
    Pcsi,
    Custom,
}

/// Fixed, not necessarily normalised, beamforming directions `B = [b_1 .. b_K]`.
#[derive(Debug, Clone)]
pub struct BeamformerMatrix {
    columns: CMatrix,
    kind: BeamformerKind,
}

impl BeamformerMatrix {
    pub fn new(columns: CMatrix, kind: BeamformerKind) -> Result<Self> {
        if columns.ncols() == 0 {
            return Err(Error::InvalidInput("beamformer has no columns".into()));
        }
        if let Some(k) = (0..columns.ncols()).find(|&k| columns.column(k).norm() == 0.0) {
            return Err(Error::InvalidInput(format!("beamformer column {k} is zero")));
        }
        Ok(Self { columns, kind })
    }

    pub fn columns(&self) -> &CMatrix {
        &self.columns
    }

    pub fn kind(&self) -> BeamformerKind {
        self.kind
    }

    pub fn n_users(&self) -> usize {
        self.columns.ncols()
    }

    pub fn column(&self, k: usize) -> CVector {
        self.columns.column(k).into_owned()
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        (0..self.n_users()).map(|k| self.columns.column(k).norm_squared()).collect()
    }
}

/// Nonnegative per-user powers, the diagonal of `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidInput("powers must be finite and nonnegative".into()));
        }
        Ok(Self(powers))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Tr(B P B^H) = sum_k p_k ||b_k||^2`.
    pub fn total_power(&self, b: &BeamformerMatrix) -> f64 {
        self.0.iter().zip(b.column_norms_sq()).map(|(p, n)| p * n).sum()
    }
}

impl std::ops::Index<usize> for PowerAllocation {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// `Pr(δ^H Q δ + 2 Re(δ^H r) + v >= 0)` for `δ ~ CN(0, I)`, together with the
/// completed-square data `a`, `τ` used by the CDF evaluation.
#[derive(Debug, Clone)]
pub struct QuadraticOutageForm {
    pub q: CMatrix,
    pub r: CVector,
    pub v: f64,
    pub a: CVector,
    pub tau: f64,
}

impl QuadraticOutageForm {
    /// `δ^H Q δ + 2 Re(δ^H r) + v`.
    pub fn evaluate(&self, delta: &CVector) -> f64 {
        crate::linalg::quad_form(&self.q, delta) + 2.0 * delta.dotc(&self.r).re + self.v
    }

    pub fn recomputed_tau(&self) -> f64 {
        self.v - crate::linalg::quad_form(&self.q, &self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;

    #[test]
    fn qos_validation() {
        assert!(QosSpec::new(vec![1.0], vec![0.05]).is_ok());
        assert!(QosSpec::new(vec![0.0], vec![0.05]).is_err());
        assert!(QosSpec::new(vec![1.0], vec![1.0]).is_err());
        assert!(QosSpec::new(vec![1.0], vec![0.0]).is_err());
        let q = QosSpec::uniform_db(2, 10.0, 0.05).unwrap();
        assert!((q.gamma()[1] - 10.0).abs() < 1e-12);
        assert!((q.target(0) - 0.95).abs() < 1e-15);
    }

    #[test]
    fn instance_rejects_bad_covariance() {
        let h = CMatrix::identity(2, 2);
        let mut c = CMatrix::identity(2, 2);
        c[(0, 1)] = real(0.5);
        assert!(ScenarioInstance::new(h.clone(), h.clone(), vec![c.clone(), c], vec![1.0; 2]).is_err());
        let neg = CMatrix::identity(2, 2) * real(-1.0);
        assert!(ScenarioInstance::new(h.clone(), h.clone(), vec![neg.clone(), neg], vec![1.0; 2]).is_err());
        assert!(ScenarioInstance::isotropic(h.clone(), h.clone(), 0.1, 0.0).is_err());
        assert!(ScenarioInstance::isotropic(h.clone(), h, 0.1, 0.01).is_ok());
    }

    #[test]
    fn total_power_weights_by_column_norm() {
        let mut b = CMatrix::identity(2, 2);
        b[(1, 1)] = real(2.0);
        let b = BeamformerMatrix::new(b, BeamformerKind::Custom).unwrap();
        let p = PowerAllocation::new(vec![1.0, 3.0]).unwrap();
        assert!((p.total_power(&b) - 13.0).abs() < 1e-15);
        assert!(PowerAllocation::new(vec![-1.0]).is_err());
        assert!(BeamformerMatrix::new(CMatrix::zeros(2, 1), BeamformerKind::Custom).is_err());
    }
}
