//! Paired-trial sweeps over SINR targets, error variances and methods.

use std::time::Instant;

use outage_core::descent::{solve_general, DescentConfig, SolveReport, SolveStatus};
use outage_core::model::{
    build_pcsi_directions, build_rci, build_zf, default_rci_alpha, generate_rayleigh_channels, simulate_estimate,
};
use outage_core::quadratic::mc_probability_with;
use outage_core::zf::{solve_zf_coord_descent, solve_zf_coord_update, ZfConfig};
use outage_core::{BeamformerMatrix, Error, Execution, QosSpec, ScenarioInstance};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Method};
use crate::export::round_sig;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub gamma_db: f64,
    pub sigma_e2: f64,
    pub trial: usize,
    pub feasible_start: bool,
    pub success: bool,
    pub total_power: f64,
    pub cycles: usize,
    pub bisection_steps: usize,
    pub integral_evals: usize,
    pub runtime_ms: f64,
}

/// Seeds of the channel draw and of the estimation error of one trial.
pub fn trial_seeds(seed: u64, trial: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    (rng.next_u64(), rng.next_u64())
}

/// The scenario of one trial. The error draw is shared across `σ_e²`, so
/// larger variances scale the same perturbation.
pub fn trial_instance(cfg: &ExperimentConfig, sigma_e2: f64, trial: usize) -> outage_core::Result<ScenarioInstance> {
    let (channel_seed, error_seed) = trial_seeds(cfg.seed, trial);
    let h = generate_rayleigh_channels(cfg.n_tx, cfg.n_users, channel_seed);
    let est = simulate_estimate(&h, sigma_e2, error_seed);
    ScenarioInstance::isotropic(h, est, sigma_e2, cfg.sigma2)
}

pub fn descent_config(cfg: &ExperimentConfig) -> DescentConfig {
    DescentConfig { delta_min: cfg.delta_min, quad_tol: cfg.quad_tol, ..Default::default() }
}

pub fn zf_config(cfg: &ExperimentConfig) -> ZfConfig {
    ZfConfig {
        descent: descent_config(cfg),
        eta_multiple: cfg.eta_multiple,
        eta_refinement: cfg.eta_refinement,
        i_max: cfg.i_max,
        ..Default::default()
    }
}

/// Directions used by a method.
pub fn directions(method: Method, inst: &ScenarioInstance, qos: &QosSpec) -> outage_core::Result<BeamformerMatrix> {
    match method {
        Method::PcsiGeneral => build_pcsi_directions(inst.est_channels(), qos, inst.noise_var()),
        Method::RciGeneral => build_rci(inst.est_channels(), default_rci_alpha(inst.n_users(), inst.noise_var()[0])),
        _ => build_zf(inst.est_channels()),
    }
}

/// Runs one method. The zero-forcing approximations fall back to the exact
/// solver when `1 + η_k ≤ 0`.
pub fn solve_method(
    method: Method,
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    cfg: &ExperimentConfig,
) -> outage_core::Result<SolveReport> {
    let zf = zf_config(cfg);
    let outcome = match method {
        Method::ZfCoordDescent => solve_zf_coord_descent(inst, b, qos, &zf),
        Method::ZfCoordUpdate => solve_zf_coord_update(inst, b, qos, &zf),
        _ => return solve_general(inst, b, qos, &zf.descent),
    };
    match outcome {
        Err(Error::ApproximationInapplicable { .. }) => solve_general(inst, b, qos, &zf.descent),
        other => other,
    }
}

/// Monte Carlo check that every user's outage is at most `ε + 4·SE`.
pub fn mc_certified(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    report: &SolveReport,
    qos: &QosSpec,
    n_samples: usize,
    seed: u64,
) -> outage_core::Result<bool> {
    for k in 0..b.n_users() {
        let eps = qos.epsilon()[k];
        let se = (eps * (1.0 - eps) / n_samples as f64).sqrt();
        let est =
            mc_probability_with(inst, b, &report.powers, qos, k, n_samples, seed ^ k as u64, Execution::Sequential)?;
        if 1.0 - est.value > eps + 4.0 * se {
            return Ok(false);
        }
    }
    Ok(true)
}

fn record(
    cfg: &ExperimentConfig,
    method: Method,
    gamma_db: f64,
    sigma_e2: f64,
    trial: usize,
    inst: &outage_core::Result<ScenarioInstance>,
    mc_samples: usize,
) -> TrialRecord {
    let clock = Instant::now();
    let mut rec = TrialRecord {
        method,
        gamma_db,
        sigma_e2,
        trial,
        feasible_start: false,
        success: false,
        total_power: 0.0,
        cycles: 0,
        bisection_steps: 0,
        integral_evals: 0,
        runtime_ms: 0.0,
    };
    let Ok(inst) = inst else { return rec };
    let Ok(qos) = QosSpec::uniform_db(cfg.n_users, gamma_db, cfg.epsilon) else { return rec };
    let solved = directions(method, inst, &qos).and_then(|b| solve_method(method, inst, &b, &qos, cfg).map(|r| (b, r)));
    if let Ok((b, report)) = solved {
        rec.feasible_start = match method {
            Method::ZfCoordUpdate => report.status == SolveStatus::Solved,
            _ => report.status != SolveStatus::InfeasibleStartNotFound,
        };
        rec.success = rec.feasible_start && report.exactly_feasible(&qos);
        if rec.success && mc_samples > 0 {
            let seed = trial_seeds(cfg.seed, trial).1 ^ 0x6d63;
            rec.success = mc_certified(inst, &b, &report, &qos, mc_samples, seed).unwrap_or(false);
        }
        rec.total_power = round_sig(report.total_power);
        rec.cycles = report.cycles;
        rec.bisection_steps = report.bisection_steps;
        rec.integral_evals = report.integral_evals;
    }
    if cfg.record_runtime {
        rec.runtime_ms = round_sig(clock.elapsed().as_secs_f64() * 1e3);
    }
    rec
}

/// Every record of one `(σ_e², trial)` unit, in `γ`-major, method-minor order.
pub fn run_unit(cfg: &ExperimentConfig, sigma_e2: f64, trial: usize, mc_samples: usize) -> Vec<TrialRecord> {
    let inst = trial_instance(cfg, sigma_e2, trial);
    let mut out = Vec::with_capacity(cfg.gamma_db.len() * cfg.methods.len());
    for &g in &cfg.gamma_db {
        for &m in &cfg.methods {
            out.push(record(cfg, m, round_sig(g), round_sig(sigma_e2), trial, &inst, mc_samples));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Overrides `mc_certify_samples` from the config.
    pub mc_certify: Option<usize>,
    pub execution: Execution,
}

/// Runs every `(σ_e², trial, γ, method)` combination. Failures are recorded,
/// never propagated. The output order does not depend on the thread count.
pub fn run_sweep(cfg: &ExperimentConfig, opts: SweepOptions) -> Result<Vec<TrialRecord>, crate::BenchError> {
    cfg.validate()?;
    let mc = opts.mc_certify.unwrap_or(cfg.mc_certify_samples);
    let units: Vec<(f64, usize)> =
        cfg.sigma_e2_values().into_iter().flat_map(|s| (0..cfg.n_trials).map(move |t| (s, t))).collect();
    let run = |&(s, t): &(f64, usize)| run_unit(cfg, s, t, mc);
    let nested: Vec<Vec<TrialRecord>> = match opts.execution {
        Execution::Sequential => units.iter().map(run).collect(),
        Execution::Parallel => parallel_map(&units, opts.threads, run)?,
    };
    Ok(nested.into_iter().flatten().collect())
}

#[cfg(feature = "parallel")]
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    threads: Option<usize>,
    f: impl Fn(&T) -> R + Sync + Send,
) -> Result<Vec<R>, crate::BenchError> {
    use rayon::prelude::*;
    match threads {
        None => Ok(items.par_iter().map(f).collect()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::BenchError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(|| items.par_iter().map(f).collect()))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    _threads: Option<usize>,
    f: impl Fn(&T) -> R + Sync + Send,
) -> Result<Vec<R>, crate::BenchError> {
    Ok(items.iter().map(f).collect())
}
