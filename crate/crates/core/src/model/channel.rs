use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{real, standard_complex_normal, CMatrix};

/// `K x N_t` matrix of i.i.d. `CN(0, 1)` entries, deterministic in `seed`.
pub fn generate_rayleigh_channels(n_tx: usize, n_users: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = standard_complex_normal(&mut rng, n_tx * n_users);
    CMatrix::from_fn(n_users, n_tx, |k, n| draws[k * n_tx + n])
}

/// Error variance of an orthogonal-pilot uplink estimate:
/// `σ_BS² / (σ_BS² + L_UT P_UT)`.
pub fn estimation_error_variance(sigma2_bs: f64, l_ut: u32, p_ut: f64) -> f64 {
    sigma2_bs / (sigma2_bs + f64::from(l_ut) * p_ut)
}

/// Additive estimate `ĥ_k = h_k + e_k` with `e_k ~ CN(0, σ_e² I)` drawn
/// independently per user. The same seed reuses the same unit-variance draws,
/// so estimates for different `σ_e²` are coupled.
pub fn simulate_estimate(true_channels: &CMatrix, sigma_e2: f64, seed: u64) -> CMatrix {
    let (k, n) = true_channels.shape();
    let noise = generate_rayleigh_channels(n, k, seed);
    true_channels + noise * real(sigma_e2.sqrt())
}

/// Uplink-training estimate; returns the estimated channels and `C_k = σ_e² I`.
pub fn simulate_uplink_estimate(
    true_channels: &CMatrix,
    sigma2_bs: f64,
    l_ut: u32,
    p_ut: f64,
    seed: u64,
) -> (CMatrix, Vec<CMatrix>) {
    let sigma_e2 = estimation_error_variance(sigma2_bs, l_ut, p_ut);
    let (k, n) = true_channels.shape();
    let est = simulate_estimate(true_channels, sigma_e2, seed);
    let cov = CMatrix::identity(n, n) * real(sigma_e2);
    (est, vec![cov; k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channels_are_deterministic() {
        assert_eq!(generate_rayleigh_channels(3, 3, 42), generate_rayleigh_channels(3, 3, 42));
        assert_ne!(generate_rayleigh_channels(3, 3, 42), generate_rayleigh_channels(3, 3, 43));
    }

    #[test]
    fn unit_average_power() {
        let mut acc = 0.0;
        let draws = 10_000;
        for seed in 0..draws {
            let h = generate_rayleigh_channels(3, 3, seed);
            acc += h.iter().map(|z| z.norm_sqr()).sum::<f64>() / 9.0;
        }
        let mean = acc / draws as f64;
        assert!((0.97..=1.03).contains(&mean), "mean |h|^2 = {mean}");
    }

    #[test]
    fn scalar_real_part_variance() {
        let draws = 10_000;
        let xs: Vec<f64> = (0..draws).map(|s| generate_rayleigh_channels(1, 1, s)[(0, 0)].re).collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws as f64 - 1.0);
        assert!((var - 0.5).abs() < 0.03, "var = {var}");
    }

    #[test]
    fn training_variance() {
        assert!((estimation_error_variance(0.01, 1, 4.99) - 0.002).abs() < 1e-15);
        let v = estimation_error_variance(0.01, 4, 4.99);
        assert!((v - 0.01 / 19.97).abs() < 1e-15);
        assert!((v - 5.008e-4).abs() < 1e-6);
        let h = generate_rayleigh_channels(3, 2, 1);
        let (est, cov) = simulate_uplink_estimate(&h, 0.01, 1, 1e9, 2);
        assert!(estimation_error_variance(0.01, 1, 1e9) < 1e-10);
        assert!((est - &h).iter().all(|z| z.norm() < 1e-3));
        assert_eq!(cov.len(), 2);
        assert!((cov[0][(0, 0)].re - 1e-11).abs() < 1e-15);
    }
}
