use crate::error::{Error, Result};
use crate::model::{BeamformerMatrix, QosSpec, ScenarioInstance};

/// Default multiple of `2||r̃_k||` used for `η_k`.
pub const DEFAULT_ETA_MULTIPLE: f64 = -1.3;

/// Constant replacement `η_k` of the linear term `2 Re(δ^H r̃_k)` and the
/// effective target `γ'_k = γ_k / (1 + η_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfApproxParams {
    pub eta: Vec<f64>,
    pub gamma_prime: Vec<f64>,
    pub eta_multiple: f64,
    /// `||C_k^{1/2} b_k||`.
    pub r_norm: Vec<f64>,
}

/// Checks `ĥ_k^H b_j = δ_kj`.
pub fn check_zero_forcing(inst: &ScenarioInstance, b: &BeamformerMatrix) -> Result<()> {
    for k in 0..inst.n_users() {
        let h = inst.est_channel(k);
        for j in 0..b.n_users() {
            let g = b.columns().column(j).dotc(&h).conj();
            let expect = if j == k { 1.0 } else { 0.0 };
            let scale = 1.0f64.max(h.norm() * b.columns().column(j).norm());
            if (g - crate::linalg::real(expect)).norm() > 1e-9 * scale {
                return Err(Error::InvalidInput(format!("directions are not zero-forcing: ĥ_{k}^H b_{j} = {g}")));
            }
        }
    }
    Ok(())
}

pub fn zf_params(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    eta_multiple: f64,
) -> Result<ZfApproxParams> {
    check_zero_forcing(inst, b)?;
    if qos.n_users() != inst.n_users() {
        return Err(Error::InvalidInput("QoS has the wrong number of users".into()));
    }
    let r_norm: Vec<f64> = (0..inst.n_users()).map(|k| (inst.cov_sqrt(k) * b.column(k)).norm()).collect();
    let eta: Vec<f64> = r_norm.iter().map(|r| eta_multiple * 2.0 * r).collect();
    if let Some(user) = eta.iter().position(|&e| 1.0 + e <= 0.0) {
        return Err(Error::ApproximationInapplicable { user, one_plus_eta: 1.0 + eta[user] });
    }
    let gamma_prime = qos.gamma().iter().zip(&eta).map(|(g, e)| g / (1.0 + e)).collect();
    Ok(ZfApproxParams { eta, gamma_prime, eta_multiple, r_norm })
}

impl ZfApproxParams {
    /// `v'_k = p_k/γ'_k − σ_k²`.
    pub fn v_prime(&self, p_k: f64, sigma2: f64, k: usize) -> f64 {
        p_k / self.gamma_prime[k] - sigma2
    }

    /// Same construction with `η` scaled by `factor`.
    pub fn scaled(&self, gamma: &[f64], factor: f64) -> Result<Self> {
        let eta: Vec<f64> = self.eta.iter().map(|e| e * factor).collect();
        if let Some(user) = eta.iter().position(|&e| 1.0 + e <= 0.0) {
            return Err(Error::ApproximationInapplicable { user, one_plus_eta: 1.0 + eta[user] });
        }
        let gamma_prime = gamma.iter().zip(&eta).map(|(g, e)| g / (1.0 + e)).collect();
        Ok(Self { eta, gamma_prime, eta_multiple: self.eta_multiple * factor, r_norm: self.r_norm.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::model::build_zf;

    fn unit_zf(sigma_e2: f64) -> (ScenarioInstance, BeamformerMatrix) {
        let h = CMatrix::identity(2, 2);
        let inst = ScenarioInstance::isotropic(h.clone(), h.clone(), sigma_e2, 0.01).unwrap();
        let b = build_zf(&h).unwrap();
        (inst, b)
    }

    #[test]
    fn no_uncertainty_means_no_shift() {
        let (inst, b) = unit_zf(0.0);
        let qos = QosSpec::uniform_db(2, 5.0, 0.05).unwrap();
        let p = zf_params(&inst, &b, &qos, DEFAULT_ETA_MULTIPLE).unwrap();
        assert_eq!(p.eta, vec![0.0, 0.0]);
        assert_eq!(p.gamma_prime, qos.gamma());
    }

    #[test]
    fn eta_arithmetic() {
        let (inst, b) = unit_zf(0.002);
        let qos = QosSpec::new(vec![2.0, 2.0], vec![0.05; 2]).unwrap();
        let p = zf_params(&inst, &b, &qos, DEFAULT_ETA_MULTIPLE).unwrap();
        let eta = -1.3 * 2.0 * 0.002f64.sqrt();
        assert!((p.eta[0] - eta).abs() < 1e-15);
        assert!((p.eta[0] + 0.11628).abs() < 1e-5);
        assert!((p.gamma_prime[1] - 2.0 / (1.0 + eta)).abs() < 1e-14);
        assert!((p.v_prime(0.5, 0.01, 0) - (0.5 / p.gamma_prime[0] - 0.01)).abs() < 1e-15);
    }

    #[test]
    fn boundary_is_inapplicable() {
        let (inst, b) = unit_zf(0.25);
        let qos = QosSpec::uniform_db(2, 5.0, 0.05).unwrap();
        assert!(matches!(
            zf_params(&inst, &b, &qos, DEFAULT_ETA_MULTIPLE),
            Err(Error::ApproximationInapplicable { user: 0, .. })
        ));
    }

    #[test]
    fn rejects_non_zf_directions() {
        let (inst, _) = unit_zf(0.01);
        let b = crate::model::build_rci(inst.est_channels(), 0.5).unwrap();
        let qos = QosSpec::uniform_db(2, 5.0, 0.05).unwrap();
        assert!(zf_params(&inst, &b, &qos, DEFAULT_ETA_MULTIPLE).is_err());
    }
}
