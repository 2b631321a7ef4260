#![allow(dead_code)]

use outage_core::linalg::{hermitian_part, real, standard_complex_normal, CMatrix, CVector};
use outage_core::model::{generate_rayleigh_channels, simulate_estimate};
use outage_core::{GaussianQuadratic, ScenarioInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `P(χ²_{2m} ≤ y)`.
pub fn central_chi2_even_cdf(m: usize, y: f64) -> f64 {
    statrs::function::gamma::gamma_lr(m as f64, 0.5 * y)
}

/// `P(χ'²_{2k}(nc) ≤ y)` as a Poisson mixture of central laws, weights in log space.
pub fn noncentral_chi2_even_cdf(k: usize, nc: f64, y: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let mean = 0.5 * nc;
    let spread = 40.0 * mean.sqrt() + 40.0;
    let lo = (mean - spread).max(0.0) as usize;
    let hi = (mean + spread) as usize;
    (lo..=hi)
        .map(|i| {
            let log_w = if mean > 0.0 {
                i as f64 * mean.ln() - mean - ln_gamma(i as f64 + 1.0)
            } else if i == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            log_w.exp() * central_chi2_even_cdf(k + i, y)
        })
        .sum()
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| standard_complex_normal(rng, 1)[0]);
    hermitian_part(&g)
}

/// Random indefinite instance with `τ` near the bulk of `||x − z||²_M`.
pub fn random_indefinite(rng: &mut impl Rng) -> GaussianQuadratic {
    loop {
        let n = rng.random_range(1..=4);
        let m = random_hermitian(rng, n);
        let eig = outage_core::linalg::hermitian_eigen(&m);
        if n > 1 && !(eig.values[0] > 0.0 && eig.values[n - 1] < 0.0) {
            continue;
        }
        let z = standard_complex_normal(rng, n) * real(rng.random_range(0.0..2.0));
        let mz = &m * &z;
        let m2 = &m * &m;
        let mean = m.trace().re + z.dotc(&mz).re;
        let var = m2.trace().re + 2.0 * z.dotc(&(&m2 * &z)).re;
        let tau = mean + rng.random_range(-1.0..1.0) * var.sqrt();
        return GaussianQuadratic::new(m, z, tau).unwrap();
    }
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&v| real(v))))
}

/// Rayleigh draw with an additive estimate and isotropic error covariance.
pub fn scenario(n_tx: usize, n_users: usize, sigma_e2: f64, seed: u64) -> ScenarioInstance {
    let h = generate_rayleigh_channels(n_tx, n_users, seed);
    let est = simulate_estimate(&h, sigma_e2, seed ^ 0x5eed);
    ScenarioInstance::isotropic(h, est, sigma_e2, 0.01).unwrap()
}
