use nalgebra::{DMatrix, DVector};

use super::{BeamformerMatrix, PowerAllocation, QosSpec, QuadraticOutageForm, ScenarioInstance};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, quad_form, real, CMatrix, CVector};

/// `|h^H b_k|² p_k / (Σ_{j≠k} |h^H b_j|² p_j + σ²)` for a column channel `h`.
pub fn sinr(h: &CVector, b: &BeamformerMatrix, p: &PowerAllocation, sigma2: f64, k: usize) -> f64 {
    let gain = |j: usize| b.columns().column(j).dotc(h).norm_sqr();
    let interference: f64 = (0..b.n_users()).filter(|&j| j != k).map(|j| gain(j) * p[j]).sum();
    gain(k) * p[k] / (interference + sigma2)
}

/// `(p_k/γ_k) b_k b_k^H − Σ_{j≠k} p_j b_j b_j^H`.
pub(crate) fn signal_minus_interference(b: &BeamformerMatrix, p: &[f64], gamma_k: f64, k: usize) -> CMatrix {
    let n = b.columns().nrows();
    let mut a = CMatrix::zeros(n, n);
    for j in 0..b.n_users() {
        let w = if j == k { p[k] / gamma_k } else { -p[j] };
        if w != 0.0 {
            let col = b.columns().column(j);
            a += col * col.adjoint() * real(w);
        }
    }
    a
}

/// Rewrites `SINR_k ≥ γ_k` with `h_k = ĥ_k + C_k^{1/2} δ`, `δ ~ CN(0, I)`,
/// as `δ^H Q δ + 2 Re(δ^H r) + v ≥ 0`.
pub fn build_outage_form(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    p: &PowerAllocation,
    qos: &QosSpec,
    k: usize,
) -> QuadraticOutageForm {
    let a_mat = signal_minus_interference(b, p.as_slice(), qos.gamma()[k], k);
    let s = inst.cov_sqrt(k);
    let h = inst.est_channel(k);
    let sa = s * &a_mat;
    let q = hermitian_part(&(&sa * s));
    let r = &sa * &h;
    let v = quad_form(&a_mat, &h) - inst.noise_var()[k];
    let a = -(inst.cov_pinv_sqrt(k) * &h);
    let tau = v - quad_form(&q, &a);
    QuadraticOutageForm { q, r, v, a, tau }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitFallback {
    /// The linear system was numerically singular.
    SingularSystem,
    /// The solve produced a nonpositive power.
    NonpositivePower,
}

#[derive(Debug, Clone)]
pub struct InitialPowers {
    pub powers: PowerAllocation,
    pub fallback: Option<InitFallback>,
}

/// Powers that meet every SINR target with equality when `Ĥ` is taken as exact.
///
/// On a singular system or a nonpositive solution, falls back to the decoupled
/// value `γ_k σ_k² / |ĥ_k^H b_k|²` (`γ_k σ_k²` for zero-forcing directions).
pub fn init_powers_pcsi(
    est_channels: &CMatrix,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    noise_var: &[f64],
) -> Result<InitialPowers> {
    let k_users = b.n_users();
    if est_channels.nrows() != k_users || qos.n_users() != k_users || noise_var.len() != k_users {
        return Err(Error::InvalidInput("user counts disagree".into()));
    }
    let gamma = qos.gamma();
    let m2 = DMatrix::from_fn(k_users, k_users, |k, i| {
        b.columns().column(i).dotc(&est_channels.row(k).adjoint()).norm_sqr()
    });
    let system = DMatrix::from_fn(k_users, k_users, |k, i| if k == i { m2[(k, k)] / gamma[k] } else { -m2[(k, i)] });
    let rhs = DVector::from_column_slice(noise_var);

    let fallback_powers = || -> Result<PowerAllocation> {
        PowerAllocation::new((0..k_users).map(|k| gamma[k] * noise_var[k] / m2[(k, k)]).collect())
    };

    let sv = system.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0 && smin > 1e-12 * smax) {
        return Ok(InitialPowers { powers: fallback_powers()?, fallback: Some(InitFallback::SingularSystem) });
    }
    let Some(sol) = system.lu().solve(&rhs) else {
        return Ok(InitialPowers { powers: fallback_powers()?, fallback: Some(InitFallback::SingularSystem) });
    };
    if sol.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Ok(InitialPowers { powers: fallback_powers()?, fallback: Some(InitFallback::NonpositivePower) });
    }
    Ok(InitialPowers { powers: PowerAllocation::new(sol.iter().copied().collect())?, fallback: None })
}
