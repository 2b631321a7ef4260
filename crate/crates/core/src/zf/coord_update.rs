//! Closed-form cyclic update with `Q_k` frozen at the previous cycle.

use std::time::Instant;

use super::{neg_q, zf_params, ApproxModel, ResidueSpectrum, ZfApproxParams, ZfConfig};
use crate::descent::{check_dims, exact_probabilities, OutageModel, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::model::{BeamformerMatrix, PowerAllocation, QosSpec, ScenarioInstance};

const GROWTH_LIMIT: usize = 200;
const BISECTION_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepBranch {
    /// Solution below `γ'σ²` from the negative-eigenvalue residue.
    Tilde,
    /// Conservative solution from the leading positive residue.
    Breve,
    /// Bisection on the residue model (coinciding eigenvalues or no positive mode).
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordStep {
    pub power: f64,
    pub branch: StepBranch,
}

/// Upward rounding of closed-form powers, enough to cover the error of
/// `p/γ' − σ²` when the solution sits exactly on the target.
const ROUND_UP: f64 = 16.0 * f64::EPSILON;

/// `ln(scale · Π_{j≠l}(1 − λ_j/λ_l))`.
fn log_scaled_product(spec: &ResidueSpectrum, l: usize, scale: f64) -> f64 {
    (scale * spec.product(l)).ln()
}

/// Closed-form update from the eigenvalues of the frozen `−Q̂_k`. Returns
/// `None` when no closed form applies.
pub fn step_from_spectrum(
    spec: &ResidueSpectrum,
    gamma_prime: f64,
    gamma: f64,
    sigma2: f64,
    epsilon: f64,
    literal_gamma: bool,
) -> Option<CoordStep> {
    let floor = gamma_prime * sigma2;
    if let Some(r) = spec.r_index {
        let tilde = floor - gamma_prime * spec.eigenvalues[r] * log_scaled_product(spec, r, 1.0 - epsilon);
        if tilde > 0.0 && tilde < floor {
            let power = (tilde + ROUND_UP * (tilde + floor)).min(floor);
            return Some(CoordStep { power, branch: StepBranch::Tilde });
        }
    }
    if spec.positive_count() == 0 {
        return None;
    }
    let lead = (0..spec.eigenvalues.len()).find(|&i| !spec.zero_mask[i] && spec.eigenvalues[i] > 0.0)?;
    let g = if literal_gamma { gamma } else { gamma_prime };
    let breve = g * sigma2 - g * spec.eigenvalues[lead] * log_scaled_product(spec, lead, epsilon);
    let power = breve.max(floor);
    Some(CoordStep { power: power + ROUND_UP * (power + floor), branch: StepBranch::Breve })
}

/// Exact minimum power of a single user, for whom `−Q` has one negative
/// eigenvalue proportional to `p`.
pub fn single_user_power(params: &ZfApproxParams, gamma: f64, sigma2: f64, epsilon: f64) -> f64 {
    let r2 = params.r_norm[0] * params.r_norm[0];
    gamma * sigma2 / ((1.0 + params.eta[0]) - r2 * (1.0 - epsilon).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordUpdateStart {
    pub powers: PowerAllocation,
    /// Users whose closed form failed and who start from `γ_kσ_k²`.
    pub fallback_users: Vec<usize>,
}

/// Equal-power start: each user solves the leading-residue condition with
/// every power equal to its own.
pub fn coord_update_init(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    params: &ZfApproxParams,
) -> Result<CoordUpdateStart> {
    check_dims(inst, b, qos)?;
    let k_users = b.n_users();
    let unit = vec![1.0; k_users];
    let mut powers = Vec::with_capacity(k_users);
    let mut fallback_users = Vec::new();
    for k in 0..k_users {
        let gamma = qos.gamma()[k];
        let sigma2 = inst.noise_var()[k];
        let eps = qos.epsilon()[k];
        let p = ResidueSpectrum::from_matrix(&neg_q(inst, b, gamma, &unit, k)).ok().and_then(|spec| {
            let lead = (0..spec.eigenvalues.len()).find(|&i| !spec.zero_mask[i] && spec.eigenvalues[i] > 0.0);
            let denom = match (lead, spec.r_index) {
                (Some(l), _) => 1.0 / params.gamma_prime[k] + spec.eigenvalues[l] * log_scaled_product(&spec, l, eps),
                (None, Some(r)) => 1.0 / params.gamma_prime[k] + spec.eigenvalues[r] * (1.0 - eps).ln(),
                (None, None) => 1.0 / params.gamma_prime[k],
            };
            (denom > 0.0).then(|| sigma2 / denom)
        });
        match p {
            Some(p) if p.is_finite() => powers.push(p),
            _ => {
                fallback_users.push(k);
                powers.push(gamma * sigma2);
            }
        }
    }
    Ok(CoordUpdateStart { powers: PowerAllocation::new(powers)?, fallback_users })
}

/// Smallest `p_k` meeting the residue-model constraint with the other
/// powers fixed. Returns the power and the number of model evaluations.
fn bisect_coordinate(model: &ApproxModel, p: &[f64], k: usize, target: f64) -> Result<(f64, usize)> {
    let mut powers = p.to_vec();
    let mut hi = powers[k].max(model.params.gamma_prime[k] * model.inst.noise_var()[k]);
    let mut evals = 0;
    let mut ok = |powers: &mut Vec<f64>, x: f64| -> Result<bool> {
        powers[k] = x;
        evals += 1;
        Ok(model.probability(powers, k)? >= target - model.slack())
    };
    let mut grow = 0;
    while !ok(&mut powers, hi)? {
        hi *= 2.0;
        grow += 1;
        if grow > GROWTH_LIMIT {
            return Err(Error::InfeasibleStart { doublings: grow });
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ok(&mut powers, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, evals))
}

/// One coordinate update of user `k` with `Q̂_k` frozen at `p_prev`.
pub fn coord_update_step(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    params: &ZfApproxParams,
    p_prev: &PowerAllocation,
    k: usize,
    literal_gamma: bool,
) -> Result<CoordStep> {
    check_dims(inst, b, qos)?;
    let model = ApproxModel::new(inst, b, qos, params, crate::quadratic::DEFAULT_TOL);
    Ok(step_with(&model, p_prev.as_slice(), k, literal_gamma)?.0)
}

fn step_with(model: &ApproxModel, p_prev: &[f64], k: usize, literal_gamma: bool) -> Result<(CoordStep, usize)> {
    let qos = model.qos;
    let closed = match model.spectrum(p_prev, k) {
        Ok(spec) => step_from_spectrum(
            &spec,
            model.params.gamma_prime[k],
            qos.gamma()[k],
            model.inst.noise_var()[k],
            qos.epsilon()[k],
            literal_gamma,
        ),
        Err(Error::DegenerateSpectrum) => None,
        Err(e) => return Err(e),
    };
    match closed {
        Some(step) => Ok((step, 0)),
        None => {
            let (power, evals) = bisect_coordinate(model, p_prev, k, qos.target(k))?;
            Ok((CoordStep { power, branch: StepBranch::Bisection }, evals))
        }
    }
}

/// Closed-form cyclic update, stopping at the first allocation that meets
/// every residue-model constraint or after `cfg.i_max` cycles.
pub fn solve_zf_coord_update(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    cfg: &ZfConfig,
) -> Result<SolveReport> {
    let clock = Instant::now();
    check_dims(inst, b, qos)?;
    if cfg.i_max == 0 {
        return Err(Error::InvalidInput("i_max must be positive".into()));
    }
    let params = zf_params(inst, b, qos, cfg.eta_multiple)?;
    let model = ApproxModel::new(inst, b, qos, &params, cfg.descent.quad_tol);
    let k_users = b.n_users();
    let mut evals = 0;
    let mut bisection_evals = 0;

    let feasible = |p: &[f64], evals: &mut usize| -> Result<bool> {
        for k in 0..k_users {
            *evals += 1;
            if model.probability(p, k)? < qos.target(k) - model.slack() {
                return Ok(false);
            }
        }
        Ok(true)
    };

    let mut cycles = 1;
    let (p, status) = if k_users == 1 {
        let p = vec![single_user_power(&params, qos.gamma()[0], inst.noise_var()[0], qos.epsilon()[0])];
        let status = if feasible(&p, &mut evals)? { SolveStatus::Solved } else { SolveStatus::CycleLimit };
        (p, status)
    } else {
        // The initial allocation is not tested: feasibility is evaluated
        // only after an update, so at least one cycle always runs.
        let mut p = coord_update_init(inst, b, qos, &params)?.powers.into_vec();
        loop {
            let mut next = p.clone();
            for (k, slot) in next.iter_mut().enumerate() {
                let (step, n) = step_with(&model, &p, k, cfg.literal_gamma_update)?;
                bisection_evals += n;
                *slot = step.power;
            }
            p = next;
            if feasible(&p, &mut evals)? {
                break (p, SolveStatus::Solved);
            }
            if cycles >= cfg.i_max {
                break (p, SolveStatus::CycleLimit);
            }
            cycles += 1;
        }
    };

    let powers = PowerAllocation::new(p)?;
    let approx = (0..k_users).map(|k| model.probability(powers.as_slice(), k)).collect::<Result<Vec<_>>>()?;
    let exact = exact_probabilities(inst, b, qos, &powers, cfg.descent.quad_tol)?;
    Ok(SolveReport {
        status,
        total_power: powers.total_power(b),
        per_user_prob: exact,
        approx_prob: Some(approx),
        cycles,
        doublings: 0,
        bisection_steps: bisection_evals,
        integral_evals: evals + bisection_evals + 2 * k_users,
        init_fallback: None,
        invariant_violations: 0,
        trace: Vec::new(),
        powers,
        wall_time: clock.elapsed(),
    })
}
