use super::{BeamformerKind, BeamformerMatrix, QosSpec};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, quad_form, real, CMatrix, CVector};

const MAX_CONDITION: f64 = 1e12;
const PCSI_TOL: f64 = 1e-10;
const PCSI_MAX_SWEEPS: usize = 10_000;
const PCSI_BLOWUP: f64 = 1e12;

/// Regulariser used by the RCI baseline: `α = K σ²`.
pub fn default_rci_alpha(n_users: usize, sigma2: f64) -> f64 {
    n_users as f64 * sigma2
}

fn condition(g: &CMatrix) -> f64 {
    let eig = hermitian_eigen(g);
    let hi = eig.values.first().copied().unwrap_or(0.0);
    let lo = eig.values.last().copied().unwrap_or(0.0);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn regularised_inverse(est: &CMatrix, alpha: f64) -> Result<CMatrix> {
    let k = est.nrows();
    let gram = est * est.adjoint();
    let reg = &gram + CMatrix::identity(k, k) * real(alpha);
    let cond = condition(&reg);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularChannel { condition: cond });
    }
    let inv = reg.try_inverse().ok_or(Error::SingularChannel { condition: cond })?;
    Ok(est.adjoint() * inv)
}

/// Zero-forcing directions `B = Ĥ^H (Ĥ Ĥ^H)^{-1}`.
pub fn build_zf(est_channels: &CMatrix) -> Result<BeamformerMatrix> {
    let b = regularised_inverse(est_channels, 0.0)?;
    BeamformerMatrix::new(b, BeamformerKind::Zf)
}

/// Regularised channel inversion `B = Ĥ^H (Ĥ Ĥ^H + α I)^{-1}`.
pub fn build_rci(est_channels: &CMatrix, alpha: f64) -> Result<BeamformerMatrix> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("RCI regulariser must be nonnegative, got {alpha}")));
    }
    let b = regularised_inverse(est_channels, alpha)?;
    let kind = if alpha == 0.0 { BeamformerKind::Zf } else { BeamformerKind::Rci { alpha } };
    BeamformerMatrix::new(b, kind)
}

/// Unit-norm MMSE directions that would be optimal if `Ĥ` were exact.
///
/// Runs the virtual-uplink fixed point on noise-normalised channels
/// `g_k = ĥ_k / σ_k` with `R = I + Σ_j q_j g_j g_j^H`. Because `R` includes
/// user `k` itself, the update carries a `1 + γ_k` factor.
pub fn build_pcsi_directions(est_channels: &CMatrix, qos: &QosSpec, noise_var: &[f64]) -> Result<BeamformerMatrix> {
    let (n_users, n_tx) = est_channels.shape();
    if qos.n_users() != n_users || noise_var.len() != n_users {
        return Err(Error::InvalidInput("user counts disagree".into()));
    }
    let g: Vec<CVector> =
        (0..n_users).map(|k| est_channels.row(k).adjoint() * real(1.0 / noise_var[k].sqrt())).collect();
    let gamma = qos.gamma();
    let covariance = |q: &[f64]| {
        let mut r = CMatrix::identity(n_tx, n_tx);
        for (gk, &qk) in g.iter().zip(q) {
            r += gk * gk.adjoint() * real(qk);
        }
        r
    };
    let inverse = |r: CMatrix| r.try_inverse().ok_or(Error::SingularSystem);

    let mut q = vec![0.0; n_users];
    let mut converged = false;
    for sweep in 1..=PCSI_MAX_SWEEPS {
        let r_inv = inverse(covariance(&q))?;
        let next: Vec<f64> = (0..n_users).map(|k| gamma[k] / ((1.0 + gamma[k]) * quad_form(&r_inv, &g[k]))).collect();
        if next.iter().any(|x| !(x.is_finite() && *x < PCSI_BLOWUP)) {
            return Err(Error::Diverged { sweeps: sweep });
        }
        let change =
            next.iter().zip(&q).map(|(a, b)| (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
        q = next;
        if change < PCSI_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Diverged { sweeps: PCSI_MAX_SWEEPS });
    }
    let r_inv = inverse(covariance(&q))?;
    let mut b = CMatrix::zeros(n_tx, n_users);
    for (k, gk) in g.iter().enumerate() {
        let w = &r_inv * gk;
        let w = &w * real(1.0 / w.norm());
        b.set_column(k, &w);
    }
    BeamformerMatrix::new(b, BeamformerKind::Pcsi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_rayleigh_channels;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zf_identity_and_diagonal() {
        let b = build_zf(&CMatrix::identity(2, 2)).unwrap();
        assert!(max_abs(&(b.columns() - CMatrix::identity(2, 2))) < 1e-15);
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 0)] = real(2.0);
        h[(1, 1)] = real(4.0);
        let b = build_zf(&h).unwrap();
        assert!((b.columns()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((b.columns()[(1, 1)].re - 0.25).abs() < 1e-15);
        assert!(b.columns()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn zf_inverts_random_channels() {
        for seed in 0..20 {
            let h = generate_rayleigh_channels(3, 3, seed);
            let b = build_zf(&h).unwrap();
            assert_eq!(b.kind(), BeamformerKind::Zf);
            assert!(max_abs(&(&h * b.columns() - CMatrix::identity(3, 3))) <= 1e-9);
        }
        let wide = generate_rayleigh_channels(4, 2, 3);
        let b = build_zf(&wide).unwrap();
        assert!(max_abs(&(&wide * b.columns() - CMatrix::identity(2, 2))) <= 1e-9);
    }

    #[test]
    fn zf_rejects_singular_channel() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 0)] = real(1.0);
        h[(1, 0)] = real(1.0);
        assert!(matches!(build_zf(&h), Err(Error::SingularChannel { .. })));
        assert!(build_zf(&generate_rayleigh_channels(2, 3, 0)).is_err());
        assert!(build_rci(&h, 0.1).is_ok());
    }

    #[test]
    fn rci_cases() {
        let b = build_rci(&CMatrix::identity(2, 2), 0.02).unwrap();
        assert!((b.columns()[(0, 0)].re - 1.0 / 1.02).abs() < 1e-15);
        let h = generate_rayleigh_channels(3, 3, 9);
        let zf = build_zf(&h).unwrap();
        let r0 = build_rci(&h, 0.0).unwrap();
        assert!(max_abs(&(zf.columns() - r0.columns())) < 1e-14);
        let alpha = 0.03;
        let b = build_rci(&h, alpha).unwrap();
        let inv = (&h * h.adjoint() + CMatrix::identity(3, 3) * real(alpha)).try_inverse().unwrap();
        for k in 0..3 {
            let expect = h.adjoint() * inv.column(k);
            assert!((b.column(k) - expect).norm() <= 1e-9);
        }
        assert!(build_rci(&h, -1.0).is_err());
    }

    #[test]
    fn pcsi_single_user_is_matched_filter() {
        let h = generate_rayleigh_channels(3, 1, 4);
        for g in [0.5, 2.0, 30.0] {
            let qos = QosSpec::new(vec![g], vec![0.05]).unwrap();
            let b = build_pcsi_directions(&h, &qos, &[0.01]).unwrap();
            let hk = h.row(0).adjoint();
            let expect = &hk * real(1.0 / hk.norm());
            assert!((b.column(0) - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn pcsi_orthogonal_users_decouple() {
        let mut h = CMatrix::zeros(2, 3);
        h[(0, 0)] = real(2.0);
        h[(1, 1)] = crate::linalg::C64::new(0.0, 1.5);
        let qos = QosSpec::new(vec![3.0, 5.0], vec![0.05; 2]).unwrap();
        let b = build_pcsi_directions(&h, &qos, &[0.01, 0.02]).unwrap();
        for k in 0..2 {
            let hk = h.row(k).adjoint();
            assert!((b.column(k) - &hk * real(1.0 / hk.norm())).norm() < 1e-10);
        }
    }

    #[test]
    fn pcsi_detects_infeasible_targets() {
        // Two users sharing one antenna: feasible iff Σ γ/(1+γ) < 1.
        let h = CMatrix::from_element(2, 1, real(1.0));
        let ok = QosSpec::new(vec![0.5, 0.5], vec![0.05; 2]).unwrap();
        assert!(build_pcsi_directions(&h, &ok, &[0.01, 0.01]).is_ok());
        let bad = QosSpec::new(vec![2.0, 2.0], vec![0.05; 2]).unwrap();
        assert!(matches!(build_pcsi_directions(&h, &bad, &[0.01, 0.01]), Err(Error::Diverged { .. })));
    }
}
