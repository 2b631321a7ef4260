//! Seeded Monte Carlo estimators used as independent oracles.
//!
//! Samples are drawn in fixed-size chunks, each with its own ChaCha stream, so
//! the estimate depends only on the seed and not on how chunks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EstimateMethod, GaussianQuadratic, ProbabilityEstimate};
use crate::error::{Error, Result};
use crate::linalg::{quad_form, standard_complex_normal};
use crate::model::{BeamformerMatrix, PowerAllocation, QosSpec, ScenarioInstance};
use crate::parallel::{map_indexed, Execution};

pub const CHUNK: usize = 8192;

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn count_hits<F>(n_samples: usize, seed: u64, exec: Execution, hit: F) -> usize
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync + Send,
{
    let chunks = n_samples.div_ceil(CHUNK);
    map_indexed(chunks, exec, |c| {
        let mut rng = chunk_rng(seed, c);
        let len = CHUNK.min(n_samples - c * CHUNK);
        (0..len).filter(|_| hit(&mut rng)).count()
    })
    .into_iter()
    .sum()
}

fn estimate(hits: usize, n: usize) -> ProbabilityEstimate {
    let f = hits as f64 / n as f64;
    let se = (f * (1.0 - f) / n as f64).sqrt();
    ProbabilityEstimate::new(f, se, EstimateMethod::MonteCarlo, n)
}

/// Frequency of `SINR_k ≥ γ_k` with `h_k = ĥ_k − e_k`, `e_k ~ CN(0, C_k)`.
pub fn mc_probability(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    p: &PowerAllocation,
    qos: &QosSpec,
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    mc_probability_with(inst, b, p, qos, k, n_samples, seed, Execution::default())
}

#[allow(clippy::too_many_arguments)]
pub fn mc_probability_with(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    p: &PowerAllocation,
    qos: &QosSpec,
    k: usize,
    n_samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<ProbabilityEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    if k >= inst.n_users() || p.len() != b.n_users() {
        return Err(Error::InvalidInput("user index or power length out of range".into()));
    }
    let s = inst.cov_sqrt(k);
    let h_est = inst.est_channel(k);
    let bh = b.columns().adjoint();
    let gamma = qos.gamma()[k];
    let sigma2 = inst.noise_var()[k];
    let powers = p.as_slice();
    let hits = count_hits(n_samples, seed, exec, |rng| {
        let e = s * standard_complex_normal(rng, inst.n_tx());
        let g = &bh * (&h_est - e);
        let signal = g[k].norm_sqr() * powers[k];
        let interference: f64 = (0..powers.len()).filter(|&j| j != k).map(|j| g[j].norm_sqr() * powers[j]).sum();
        signal >= gamma * (interference + sigma2)
    });
    Ok(estimate(hits, n_samples))
}

/// Frequency of `||x − z||²_M ≤ τ` for `x ~ CN(0, I)`.
pub fn mc_quadratic(
    gq: &GaussianQuadratic,
    n_samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<ProbabilityEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let n = gq.z().len();
    let hits = count_hits(n_samples, seed, exec, |rng| {
        let d = standard_complex_normal(rng, n) - gq.z();
        quad_form(gq.m(), &d) <= gq.tau()
    });
    Ok(estimate(hits, n_samples))
}
