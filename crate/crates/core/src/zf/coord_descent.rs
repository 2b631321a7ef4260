use std::time::Instant;

use super::{zf_params, ApproxModel, ZfApproxParams, ZfConfig, ETA_REFINE_FACTOR, ETA_REFINE_ROUNDS};
use crate::descent::{check_dims, exact_probabilities, run, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::model::{init_powers_pcsi, BeamformerMatrix, PowerAllocation, QosSpec, ScenarioInstance};

/// Cyclic coordinate descent against the residue closed form, certified
/// afterwards with the exact probabilities.
pub fn solve_zf_coord_descent(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    cfg: &ZfConfig,
) -> Result<SolveReport> {
    check_dims(inst, b, qos)?;
    let init = init_powers_pcsi(inst.est_channels(), b, qos, inst.noise_var())?;
    let mut report = solve_zf_coord_descent_from(inst, b, qos, cfg, &init.powers)?;
    report.init_fallback = init.fallback;
    Ok(report)
}

/// As [`solve_zf_coord_descent`], starting the doubling search from `start`.
pub fn solve_zf_coord_descent_from(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    cfg: &ZfConfig,
    start: &PowerAllocation,
) -> Result<SolveReport> {
    let clock = Instant::now();
    check_dims(inst, b, qos)?;
    if start.len() != b.n_users() {
        return Err(Error::InvalidInput("start allocation has the wrong length".into()));
    }
    let mut params = zf_params(inst, b, qos, cfg.eta_multiple)?;
    let mut report = attempt(inst, b, qos, cfg, &params, start)?;
    let mut rounds = 0;
    while cfg.eta_refinement
        && rounds < ETA_REFINE_ROUNDS
        && report.status == SolveStatus::Solved
        && !report.exactly_feasible(qos)
    {
        params = match params.scaled(qos.gamma(), ETA_REFINE_FACTOR) {
            Ok(p) => p,
            Err(_) => break,
        };
        let next = attempt(inst, b, qos, cfg, &params, start)?;
        report = SolveReport {
            cycles: report.cycles + next.cycles,
            doublings: report.doublings + next.doublings,
            bisection_steps: report.bisection_steps + next.bisection_steps,
            integral_evals: report.integral_evals + next.integral_evals,
            ..next
        };
        rounds += 1;
    }
    report.wall_time = clock.elapsed();
    Ok(report)
}

fn attempt(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    cfg: &ZfConfig,
    params: &ZfApproxParams,
    start: &PowerAllocation,
) -> Result<SolveReport> {
    let clock = Instant::now();
    let model = ApproxModel::new(inst, b, qos, params, cfg.descent.quad_tol);
    let (d, evals, bisections) = run(&model, qos, b, &cfg.descent, start.as_slice().to_vec())?;
    let powers = PowerAllocation::new(d.powers)?;
    let exact = exact_probabilities(inst, b, qos, &powers, cfg.descent.quad_tol)?;
    Ok(SolveReport {
        status: d.status,
        total_power: powers.total_power(b),
        per_user_prob: exact,
        approx_prob: Some(d.probs),
        cycles: d.cycles,
        doublings: d.doublings,
        bisection_steps: bisections,
        integral_evals: evals + b.n_users(),
        init_fallback: None,
        invariant_violations: d.invariant_violations,
        trace: d.trace,
        powers,
        wall_time: clock.elapsed(),
    })
}
