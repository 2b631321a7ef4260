//! Feasible cyclic coordinate descent on the per-user powers.
//!
//! Starting from an allocation that meets every outage constraint, each user's
//! power is reduced by bisection until its success probability falls into the
//! band `[1 − ε_k, 1 − ε_k + Δ_k]`. Lowering `p_k` only helps the other users, so
//! every intermediate allocation stays feasible. The same engine drives the
//! exact solver here and the zero-forcing variant in [`crate::zf`], which only
//! swaps the probability model.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::model::{
    build_outage_form, init_powers_pcsi, BeamformerMatrix, InitFallback, PowerAllocation, QosSpec, ScenarioInstance,
};
use crate::quadratic::{outage_probability_lenient, DEFAULT_TOL};

/// Relative bracket width below which bisection cannot make progress.
const RESOLUTION: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub enum DeltaSchedule {
    /// `Δ^(i) = Δ^min`.
    Constant,
    /// `Δ^(i) = max(Δ^min, Δ⁰ 2^{−i})`.
    Geometric { initial: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    pub delta_min: f64,
    /// Overrides `delta_min` per user when set.
    pub delta_min_per_user: Option<Vec<f64>>,
    pub delta_schedule: DeltaSchedule,
    pub max_cycles: usize,
    pub max_doublings: usize,
    pub power_cap: f64,
    pub quad_tol: f64,
    /// Bisection steps allowed per coordinate update.
    pub bisection_guard: usize,
    /// User order within a sweep; `0..K` when unset.
    pub sweep_order: Option<Vec<usize>>,
    /// Re-evaluate every constraint and the objective after each update.
    pub check_invariants: bool,
    pub record_trace: bool,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            delta_min: 1e-3,
            delta_min_per_user: None,
            delta_schedule: DeltaSchedule::Constant,
            max_cycles: 50,
            max_doublings: 30,
            power_cap: 1e6,
            quad_tol: DEFAULT_TOL,
            bisection_guard: 60,
            sweep_order: None,
            check_invariants: false,
            record_trace: false,
        }
    }
}

impl DescentConfig {
    pub fn delta_min(&self, k: usize) -> f64 {
        self.delta_min_per_user.as_ref().map_or(self.delta_min, |d| d[k])
    }

    /// Band width used in cycle `cycle` (1-based).
    pub fn delta(&self, k: usize, cycle: usize) -> f64 {
        let floor = self.delta_min(k);
        match self.delta_schedule {
            DeltaSchedule::Constant => floor,
            DeltaSchedule::Geometric { initial } => {
                let shift = cycle.saturating_sub(1).min(1000) as i32;
                (initial * 2f64.powi(-shift)).max(floor)
            }
        }
    }

    fn validate(&self, n_users: usize) -> Result<Vec<usize>> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.into()));
        if !(self.delta_min > 0.0) {
            return bad("delta_min must be positive");
        }
        if let Some(d) = &self.delta_min_per_user {
            if d.len() != n_users || d.iter().any(|&x| !(x > 0.0)) {
                return bad("per-user delta_min must be positive, one per user");
            }
        }
        if let DeltaSchedule::Geometric { initial } = self.delta_schedule {
            if !(initial > 0.0) {
                return bad("geometric schedule needs a positive initial width");
            }
        }
        if self.max_cycles == 0 || self.bisection_guard == 0 || !(self.power_cap > 0.0) || !(self.quad_tol > 0.0) {
            return bad("solver limits must be positive");
        }
        let order = self.sweep_order.clone().unwrap_or_else(|| (0..n_users).collect());
        let mut seen = vec![false; n_users];
        for &k in &order {
            if k >= n_users || seen[k] {
                return bad("sweep order must be a permutation of the users");
            }
            seen[k] = true;
        }
        if order.len() != n_users {
            return bad("sweep order must be a permutation of the users");
        }
        Ok(order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    InfeasibleStartNotFound,
    CycleLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub cycle: usize,
    pub user: usize,
    pub power: f64,
    pub total_power: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub powers: PowerAllocation,
    /// Exact success probabilities of the returned powers.
    pub per_user_prob: Vec<f64>,
    /// Probabilities under the approximate model, for the zero-forcing solvers.
    pub approx_prob: Option<Vec<f64>>,
    pub total_power: f64,
    pub cycles: usize,
    pub doublings: usize,
    pub bisection_steps: usize,
    pub integral_evals: usize,
    pub init_fallback: Option<InitFallback>,
    /// Constraint or objective violations seen with `check_invariants`.
    pub invariant_violations: usize,
    pub trace: Vec<TraceStep>,
    pub wall_time: Duration,
}

impl SolveReport {
    /// Every exact probability meets its target.
    pub fn exactly_feasible(&self, qos: &QosSpec) -> bool {
        self.per_user_prob.iter().enumerate().all(|(k, &p)| p >= qos.target(k))
    }
}

/// Per-user success probability as a function of the whole allocation.
pub trait OutageModel {
    fn n_users(&self) -> usize;

    fn probability(&self, powers: &[f64], k: usize) -> Result<f64>;

    /// Numerical allowance below the target still counted as feasible.
    fn slack(&self) -> f64 {
        0.0
    }
}

/// The exact contour-integral probability.
pub struct ExactModel<'a> {
    pub inst: &'a ScenarioInstance,
    pub b: &'a BeamformerMatrix,
    pub qos: &'a QosSpec,
    pub tol: f64,
}

impl OutageModel for ExactModel<'_> {
    fn n_users(&self) -> usize {
        self.b.n_users()
    }

    fn probability(&self, powers: &[f64], k: usize) -> Result<f64> {
        let p = PowerAllocation::new(powers.to_vec())?;
        let form = build_outage_form(self.inst, self.b, &p, self.qos, k);
        Ok(outage_probability_lenient(&form, self.tol)?.value)
    }
}

/// Exact probabilities of all users.
pub fn exact_probabilities(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    p: &PowerAllocation,
    tol: f64,
) -> Result<Vec<f64>> {
    let model = ExactModel { inst, b, qos, tol };
    (0..b.n_users()).map(|k| model.probability(p.as_slice(), k)).collect()
}

/// Counts model evaluations and bisection steps over one solve.
pub(crate) struct Engine<'a, M: OutageModel> {
    pub model: &'a M,
    pub qos: &'a QosSpec,
    pub cfg: &'a DescentConfig,
    pub evals: usize,
    pub bisections: usize,
}

pub(crate) struct Descent {
    pub status: SolveStatus,
    pub powers: Vec<f64>,
    pub probs: Vec<f64>,
    pub cycles: usize,
    pub doublings: usize,
    pub invariant_violations: usize,
    pub trace: Vec<TraceStep>,
}

impl<'a, M: OutageModel> Engine<'a, M> {
    pub fn new(model: &'a M, qos: &'a QosSpec, cfg: &'a DescentConfig) -> Self {
        Self { model, qos, cfg, evals: 0, bisections: 0 }
    }

    pub fn prob(&mut self, p: &[f64], k: usize) -> Result<f64> {
        self.evals += 1;
        self.model.probability(p, k)
    }

    fn feasible(&self, prob: f64, k: usize) -> bool {
        prob >= self.qos.target(k) - self.model.slack()
    }

    /// Doubles `p` until every constraint holds. Returns the allocation, the
    /// number of doublings and whether it is feasible.
    pub fn feasible_start(&mut self, mut p: Vec<f64>) -> Result<(Vec<f64>, usize, bool)> {
        let k_users = self.model.n_users();
        let mut doublings = 0;
        loop {
            let mut ok = true;
            for k in 0..k_users {
                let pr = self.prob(&p, k)?;
                if !self.feasible(pr, k) {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok((p, doublings, true));
            }
            if doublings >= self.cfg.max_doublings || p.iter().any(|&x| 2.0 * x > self.cfg.power_cap) {
                return Ok((p, doublings, false));
            }
            p.iter_mut().for_each(|x| *x *= 2.0);
            doublings += 1;
        }
    }

    /// Moves `p[k]` within `[0, p[k]]` into the band. `current` is the
    /// probability at the incoming `p[k]`, which must be feasible.
    pub fn bisect(&mut self, p: &mut [f64], k: usize, delta: f64, current: f64) -> Result<(f64, usize)> {
        self.bisect_resolved(p, k, delta, current).map(|(pr, steps, _)| (pr, steps))
    }

    /// As [`Self::bisect`]; the flag reports a bracket that shrank to floating
    /// point resolution without reaching the band.
    fn bisect_resolved(&mut self, p: &mut [f64], k: usize, delta: f64, current: f64) -> Result<(f64, usize, bool)> {
        let target = self.qos.target(k);
        let upper = target + delta;
        if current <= upper {
            return Ok((current, 0, false));
        }
        let mut lo = 0.0;
        let mut hi = p[k];
        let mut hi_prob = current;
        let mut steps = 0;
        while steps < self.cfg.bisection_guard {
            if hi - lo <= RESOLUTION * hi {
                p[k] = hi;
                self.bisections += steps;
                return Ok((hi_prob, steps, true));
            }
            let mid = 0.5 * (lo + hi);
            p[k] = mid;
            steps += 1;
            let pr = self.prob(p, k)?;
            if !self.feasible(pr, k) {
                lo = mid;
            } else if pr > upper {
                hi = mid;
                hi_prob = pr;
            } else {
                self.bisections += steps;
                return Ok((pr, steps, false));
            }
        }
        p[k] = hi;
        self.bisections += steps;
        Ok((hi_prob, steps, false))
    }

    fn in_band(&self, prob: f64, k: usize) -> bool {
        self.feasible(prob, k) && prob <= self.qos.target(k) + self.cfg.delta_min(k)
    }

    fn audit(&self, p: &[f64], total: f64, last_total: f64) -> Result<usize> {
        let mut bad = usize::from(total > last_total * (1.0 + 1e-12));
        for k in 0..self.model.n_users() {
            if !self.feasible(self.model.probability(p, k)?, k) {
                bad += 1;
            }
        }
        Ok(bad)
    }

    /// Cyclic sweeps from a feasible allocation.
    pub fn descend(&mut self, mut p: Vec<f64>, order: &[usize], weights: &[f64]) -> Result<Descent> {
        let k_users = self.model.n_users();
        let total = |p: &[f64]| p.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
        let mut fresh: Vec<Option<f64>> = vec![None; k_users];
        // Users whose bracket collapsed at the current allocation.
        let mut pinned = vec![false; k_users];
        let mut cycles = 0;
        let mut violations = 0;
        let mut trace = Vec::new();
        let mut last_total = total(&p);
        loop {
            let mut done = true;
            for k in 0..k_users {
                let pr = match fresh[k] {
                    Some(v) => v,
                    None => self.prob(&p, k)?,
                };
                fresh[k] = Some(pr);
                if !(self.in_band(pr, k) || pinned[k] && self.feasible(pr, k)) {
                    done = false;
                    break;
                }
            }
            if done {
                let probs = fresh.iter().map(|v| v.expect("all users checked")).collect();
                return Ok(Descent {
                    status: SolveStatus::Solved,
                    powers: p,
                    probs,
                    cycles,
                    doublings: 0,
                    invariant_violations: violations,
                    trace,
                });
            }
            if cycles >= self.cfg.max_cycles {
                let probs =
                    (0..k_users).map(|k| fresh[k].map_or_else(|| self.prob(&p, k), Ok)).collect::<Result<_>>()?;
                return Ok(Descent {
                    status: SolveStatus::CycleLimit,
                    powers: p,
                    probs,
                    cycles,
                    doublings: 0,
                    invariant_violations: violations,
                    trace,
                });
            }
            cycles += 1;
            for &k in order {
                let current = match fresh[k] {
                    Some(v) => v,
                    None => self.prob(&p, k)?,
                };
                let before = p[k];
                let (pr, steps, stuck) = self.bisect_resolved(&mut p, k, self.cfg.delta(k, cycles), current)?;
                fresh[k] = Some(pr);
                pinned[k] = stuck;
                if p[k] != before {
                    for j in (0..k_users).filter(|&j| j != k) {
                        fresh[j] = None;
                        pinned[j] = false;
                    }
                }
                let now = total(&p);
                if self.cfg.check_invariants {
                    violations += self.audit(&p, now, last_total)?;
                }
                if self.cfg.record_trace {
                    trace.push(TraceStep { cycle: cycles, user: k, power: p[k], total_power: now, steps });
                }
                last_total = now;
            }
        }
    }
}

/// Result of the doubling search.
#[derive(Debug, Clone)]
pub struct FeasibleStart {
    pub powers: PowerAllocation,
    pub doublings: usize,
    pub init_fallback: Option<InitFallback>,
    pub integral_evals: usize,
}

/// Doubles the equal-SINR initial allocation until every exact constraint holds.
pub fn find_feasible_start(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    cfg: &DescentConfig,
) -> Result<FeasibleStart> {
    check_dims(inst, b, qos)?;
    cfg.validate(b.n_users())?;
    let init = init_powers_pcsi(inst.est_channels(), b, qos, inst.noise_var())?;
    let model = ExactModel { inst, b, qos, tol: cfg.quad_tol };
    let mut engine = Engine::new(&model, qos, cfg);
    let (p, doublings, ok) = engine.feasible_start(init.powers.into_vec())?;
    if !ok {
        return Err(Error::InfeasibleStart { doublings });
    }
    Ok(FeasibleStart {
        powers: PowerAllocation::new(p)?,
        doublings,
        init_fallback: init.fallback,
        integral_evals: engine.evals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectOutcome {
    pub power: f64,
    pub probability: f64,
    pub steps: usize,
}

/// One coordinate update of user `k` with band width `delta`.
pub fn bisect_user_power(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    p: &PowerAllocation,
    k: usize,
    delta: f64,
    cfg: &DescentConfig,
) -> Result<BisectOutcome> {
    check_dims(inst, b, qos)?;
    let model = ExactModel { inst, b, qos, tol: cfg.quad_tol };
    let mut engine = Engine::new(&model, qos, cfg);
    let mut powers = p.as_slice().to_vec();
    let current = engine.prob(&powers, k)?;
    if current < qos.target(k) {
        return Err(Error::InvalidInput(format!("user {k} is infeasible at the incoming power")));
    }
    let (probability, steps) = engine.bisect(&mut powers, k, delta, current)?;
    Ok(BisectOutcome { power: powers[k], probability, steps })
}

pub(crate) fn check_dims(inst: &ScenarioInstance, b: &BeamformerMatrix, qos: &QosSpec) -> Result<()> {
    if b.n_users() != inst.n_users() || qos.n_users() != inst.n_users() || b.columns().nrows() != inst.n_tx() {
        return Err(Error::InvalidInput("instance, beamformer and QoS dimensions disagree".into()));
    }
    Ok(())
}

/// Runs the full doubling search and descent for an arbitrary probability model.
pub(crate) fn run<M: OutageModel>(
    model: &M,
    qos: &QosSpec,
    b: &BeamformerMatrix,
    cfg: &DescentConfig,
    start: Vec<f64>,
) -> Result<(Descent, usize, usize)> {
    let order = cfg.validate(b.n_users())?;
    let mut engine = Engine::new(model, qos, cfg);
    let (p, doublings, ok) = engine.feasible_start(start)?;
    if !ok {
        let probs = (0..b.n_users()).map(|k| model.probability(&p, k)).collect::<Result<_>>()?;
        let d = Descent {
            status: SolveStatus::InfeasibleStartNotFound,
            powers: p,
            probs,
            cycles: 0,
            doublings,
            invariant_violations: 0,
            trace: Vec::new(),
        };
        return Ok((d, engine.evals, engine.bisections));
    }
    let mut d = engine.descend(p, &order, &b.column_norms_sq())?;
    d.doublings = doublings;
    Ok((d, engine.evals, engine.bisections))
}

/// Minimises `Σ_k p_k ||b_k||²` subject to the exact outage constraints.
pub fn solve_general(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    cfg: &DescentConfig,
) -> Result<SolveReport> {
    check_dims(inst, b, qos)?;
    let init = init_powers_pcsi(inst.est_channels(), b, qos, inst.noise_var())?;
    let mut report = solve_general_from(inst, b, qos, cfg, &init.powers)?;
    report.init_fallback = init.fallback;
    Ok(report)
}

/// As [`solve_general`], starting the doubling search from `start`.
pub fn solve_general_from(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    cfg: &DescentConfig,
    start: &PowerAllocation,
) -> Result<SolveReport> {
    let clock = Instant::now();
    check_dims(inst, b, qos)?;
    if start.len() != b.n_users() {
        return Err(Error::InvalidInput("start allocation has the wrong length".into()));
    }
    let model = ExactModel { inst, b, qos, tol: cfg.quad_tol };
    let (d, evals, bisections) = run(&model, qos, b, cfg, start.as_slice().to_vec())?;
    let powers = PowerAllocation::new(d.powers)?;
    Ok(SolveReport {
        status: d.status,
        total_power: powers.total_power(b),
        powers,
        per_user_prob: d.probs,
        approx_prob: None,
        cycles: d.cycles,
        doublings: d.doublings,
        bisection_steps: bisections,
        integral_evals: evals,
        init_fallback: None,
        invariant_violations: d.invariant_violations,
        trace: d.trace,
        wall_time: clock.elapsed(),
    })
}

/// Smallest `p_k` meeting user `k`'s constraint with the other powers fixed,
/// resolved to a probability band of width `band`.
pub fn implicit_update(
    inst: &ScenarioInstance,
    b: &BeamformerMatrix,
    qos: &QosSpec,
    p: &PowerAllocation,
    k: usize,
    band: f64,
    tol: f64,
) -> Result<f64> {
    check_dims(inst, b, qos)?;
    let model = ExactModel { inst, b, qos, tol };
    let target = qos.target(k);
    let mut powers = p.as_slice().to_vec();
    let mut hi = powers[k].max(qos.gamma()[k] * inst.noise_var()[k]);
    powers[k] = hi;
    let mut hi_prob = model.probability(&powers, k)?;
    let mut grow = 0;
    while hi_prob < target {
        hi *= 2.0;
        powers[k] = hi;
        hi_prob = model.probability(&powers, k)?;
        grow += 1;
        if grow > 200 {
            return Err(Error::InfeasibleStart { doublings: grow });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if hi_prob <= target + band {
            break;
        }
        let mid = 0.5 * (lo + hi);
        powers[k] = mid;
        let pr = model.probability(&powers, k)?;
        if pr < target {
            lo = mid;
        } else {
            hi = mid;
            hi_prob = pr;
        }
    }
    Ok(hi)
}
