//! Zero-forcing specialisation.
//!
//! With `ĥ_k^H b_j = δ_kj` the linear term of the outage form is the only
//! obstacle to a closed form. Replacing `2 Re(δ^H r̃_k)` by the constant
//! `η_k < 0` leaves a pure quadratic form whose CDF is a finite sum of
//! residues, one per nonzero eigenvalue of `−Q_k`.

mod coord_descent;
mod coord_update;
mod params;
mod residue;

use std::cell::Cell;

pub use coord_descent::{solve_zf_coord_descent, solve_zf_coord_descent_from};
pub use coord_update::{
    coord_update_init, coord_update_step, single_user_power, solve_zf_coord_update, step_from_spectrum, CoordStep,
    CoordUpdateStart, StepBranch,
};
pub use params::{check_zero_forcing, zf_params, ZfApproxParams, DEFAULT_ETA_MULTIPLE};
pub use residue::{residue_probability, ResidueSpectrum};

use crate::descent::{DescentConfig, OutageModel};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, CMatrix, CVector};
use crate::model::outage::signal_minus_interference;
use crate::model::{BeamformerMatrix, QosSpec, ScenarioInstance};
use crate::quadratic::GaussianQuadratic;

/// Allowance below the target still counted as feasible by the residue model.
pub const APPROX_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ZfConfig {
    pub descent: DescentConfig,
    pub eta_multiple: f64,
    /// After a failed exact certification, scale `η` by 1.15 and re-solve (at most 3 times).
    pub eta_refinement: bool,
    /// Use `γ_k` instead of `γ'_k` in the fallback branch of the closed-form update.
    pub literal_gamma_update: bool,
    /// Cycle limit of the closed-form update.
    pub i_max: usize,
}

impl Default for ZfConfig {
    fn default() -> Self {
        Self {
            descent: DescentConfig::default(),
            eta_multiple: DEFAULT_ETA_MULTIPLE,
            eta_refinement: false,
            literal_gamma_update: false,
            i_max: 50,
        }
    }
}

pub(crate) const ETA_REFINE_FACTOR: f64 = 1.15;
pub(crate) const ETA_REFINE_ROUNDS: usize = 3;

/// `−Q_k` at the allocation `p`.
pub fn neg_q(inst: &ScenarioInstance, b: &BeamformerMatrix, gamma_k: f64, p: &[f64], k: usize) -> CMatrix {
    let s = inst.cov_sqrt(k);
    let a = signal_minus_interference(b, p, gamma_k, k);
    -hermitian_part(&(s * a * s))
}

/// Success probability of the approximated constraint, falling back to the
/// contour integral when the spectrum has coinciding eigenvalues.
pub struct ApproxModel<'a> {
    pub inst: &'a ScenarioInstance,
    pub b: &'a BeamformerMatrix,
    pub qos: &'a QosSpec,
    pub params: &'a ZfApproxParams,
    pub tol: f64,
    fallbacks: Cell<usize>,
}

impl<'a> ApproxModel<'a> {
    pub fn new(
        inst: &'a ScenarioInstance,
        b: &'a BeamformerMatrix,
        qos: &'a QosSpec,
        params: &'a ZfApproxParams,
        tol: f64,
    ) -> Self {
        Self { inst, b, qos, params, tol, fallbacks: Cell::new(0) }
    }

    /// Evaluations that needed the quadrature fallback.
    pub fn quadrature_fallbacks(&self) -> usize {
        self.fallbacks.get()
    }

    pub fn spectrum(&self, powers: &[f64], k: usize) -> Result<ResidueSpectrum> {
        ResidueSpectrum::from_matrix(&neg_q(self.inst, self.b, self.qos.gamma()[k], powers, k))
    }

    fn quadrature(&self, powers: &[f64], k: usize, t: f64) -> Result<f64> {
        self.fallbacks.set(self.fallbacks.get() + 1);
        let m = neg_q(self.inst, self.b, self.qos.gamma()[k], powers, k);
        let z = CVector::zeros(m.nrows());
        Ok(GaussianQuadratic::new(m, z, t)?.cdf(self.tol).or_else(Error::into_estimate)?.value)
    }
}

impl OutageModel for ApproxModel<'_> {
    fn n_users(&self) -> usize {
        self.b.n_users()
    }

    fn probability(&self, powers: &[f64], k: usize) -> Result<f64> {
        let t = self.params.v_prime(powers[k], self.inst.noise_var()[k], k);
        match self.spectrum(powers, k).and_then(|s| s.cdf(t)) {
            Err(Error::DegenerateSpectrum) => self.quadrature(powers, k, t),
            other => other,
        }
    }

    fn slack(&self) -> f64 {
        APPROX_SLACK
    }
}

/// Approximate probabilities of all users.
pub fn approx_probabilities(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    params: &ZfApproxParams,
    powers: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let model = ApproxModel::new(inst, b, qos, params, tol);
    (0..b.n_users()).map(|k| model.probability(powers, k)).collect()
}
