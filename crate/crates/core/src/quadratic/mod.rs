//! CDF of `||x − z||²_M` for `x ~ CN(0, I)` and Hermitian, possibly indefinite
//! or singular, `M`, evaluated as a Bromwich contour integral on the line
//! `Re s = β`.
//!
//! The integrand is `F(s) = e^{τs} e^{−c(s)} / (s det(I + sM))` with
//! `c(s) = Σ_m |z̃_m|² sλ_m / (1 + sλ_m)`, and
//! `Pr = (1/π) ∫_0^∞ Re F(β + iω) dω` for any `β > 0` with `I + βM ≻ 0`.

mod epsilon;
mod integrand;
mod kronrod;
pub mod monte_carlo;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eigen, CMatrix, CVector};
use crate::model::QuadraticOutageForm;
use integrand::{Integrand, Mode};

pub use monte_carlo::{mc_probability, mc_probability_with, mc_quadratic};

/// Default absolute tolerance for quadrature.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative weight below which an eigen-mode is dropped from the integrand.
const ZERO_MODE: f64 = 1e-12;
const MAX_SEGMENTS: usize = 4000;
const MAX_DOUBLINGS: usize = 200;
const MAX_TAIL_PANELS: usize = 500;
const WYNN_WINDOW: usize = 30;
/// Periods per doubling panel beyond which the tail is summed period by period.
const OSCILLATION_SWITCH: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Quadrature,
    Residue,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    /// Probability clamped to `[0, 1]`.
    pub value: f64,
    /// Unclamped result of the numerical evaluation.
    pub raw: f64,
    /// Estimated absolute error; the binomial standard error for Monte Carlo.
    pub abs_error_bound: f64,
    pub method: EstimateMethod,
    /// Integrand or sample evaluations spent.
    pub evals: usize,
}

impl ProbabilityEstimate {
    pub(crate) fn new(raw: f64, abs_error_bound: f64, method: EstimateMethod, evals: usize) -> Self {
        Self { value: raw.clamp(0.0, 1.0), raw, abs_error_bound, method, evals }
    }

    fn exact(value: f64) -> Self {
        Self::new(value, 0.0, EstimateMethod::Quadrature, 0)
    }
}

/// The event `||x − z||²_M ≤ τ`.
#[derive(Debug, Clone)]
pub struct GaussianQuadratic {
    m: CMatrix,
    z: CVector,
    tau: f64,
}

impl GaussianQuadratic {
    pub fn new(m: CMatrix, z: CVector, tau: f64) -> Result<Self> {
        if !m.is_square() || m.nrows() != z.len() || m.nrows() == 0 {
            return Err(Error::InvalidInput("M must be square and match z".into()));
        }
        let scale = m.iter().map(|x| x.norm()).fold(1.0, f64::max);
        if hermitian_defect(&m) > 1e-12 * scale {
            return Err(Error::InvalidInput("M is not Hermitian".into()));
        }
        if !tau.is_finite() {
            return Err(Error::InvalidInput("tau must be finite".into()));
        }
        Ok(Self { m, z, tau })
    }

    pub fn m(&self) -> &CMatrix {
        &self.m
    }

    pub fn z(&self) -> &CVector {
        &self.z
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn cdf(&self, tol: f64) -> Result<ProbabilityEstimate> {
        cdf_quadrature(&decompose(self), self.tau, tol)
    }
}

/// Eigen-data of `M` and the contour offset `β`.
#[derive(Debug, Clone)]
pub struct EigenSpectrum {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `V^H z`.
    pub z_tilde: CVector,
    pub beta: f64,
}

impl EigenSpectrum {
    fn modes(&self) -> Vec<Mode> {
        let weight = |l: f64, nc: f64| l.abs() * (1.0 + nc);
        let nc: Vec<f64> = self.z_tilde.iter().map(|c| c.norm_sqr()).collect();
        let top = self.eigenvalues.iter().zip(&nc).map(|(&l, &n)| weight(l, n)).fold(0.0, f64::max);
        self.eigenvalues
            .iter()
            .zip(&nc)
            .filter(|(&l, &n)| l != 0.0 && weight(l, n) > ZERO_MODE * top)
            .map(|(&lambda, &nc)| Mode { lambda, nc })
            .collect()
    }

    /// Largest admissible offset (`∞` when no active eigenvalue is negative).
    pub fn beta_max(&self) -> f64 {
        integrand::beta_max(&self.modes())
    }

    /// Same spectrum with another contour offset.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !integrand::admissible(&self.modes(), beta) {
            return Err(Error::InvalidInput(format!("contour offset {beta} is not admissible")));
        }
        Ok(Self { beta, ..self.clone() })
    }
}

fn fallback_beta(eigenvalues: &[f64]) -> f64 {
    match eigenvalues.last() {
        Some(&l) if l < 0.0 => 0.5 / l.abs(),
        _ => 1.0,
    }
}

/// Eigendecomposition of `M` with `β` at the saddle point of the real
/// integrand, which keeps the oscillating integral free of cancellation.
pub fn decompose(gq: &GaussianQuadratic) -> EigenSpectrum {
    let eig = hermitian_eigen(&gq.m);
    let z_tilde = eig.vectors.adjoint() * &gq.z;
    let mut spec = EigenSpectrum { eigenvalues: eig.values, z_tilde, beta: 1.0 };
    let modes = spec.modes();
    spec.beta = integrand::saddle_beta(&modes, gq.tau)
        .filter(|&b| integrand::admissible(&modes, b))
        .unwrap_or_else(|| fallback_beta(&spec.eigenvalues));
    spec
}

/// CDF values that need no integration.
fn trivial(modes: &[Mode], tau: f64) -> Option<f64> {
    if modes.is_empty() {
        return Some(if tau >= 0.0 { 1.0 } else { 0.0 });
    }
    if modes.iter().all(|m| m.lambda > 0.0) && tau <= 0.0 {
        return Some(0.0);
    }
    if modes.iter().all(|m| m.lambda < 0.0) && tau >= 0.0 {
        return Some(1.0);
    }
    None
}

/// `Pr(||x − z||²_M ≤ τ)` to absolute tolerance `tol`.
pub fn cdf_quadrature(spec: &EigenSpectrum, tau: f64, tol: f64) -> Result<ProbabilityEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let raw_modes = spec.modes();
    if let Some(v) = trivial(&raw_modes, tau) {
        return Ok(ProbabilityEstimate::exact(v));
    }
    if !integrand::admissible(&raw_modes, spec.beta) {
        return Err(Error::InvalidInput(format!("contour offset {} is not admissible", spec.beta)));
    }
    // The CDF is invariant under (M, τ) → (M/Λ, τ/Λ); work with unit spectral radius.
    let scale = raw_modes.iter().map(|m| m.lambda.abs()).fold(0.0, f64::max);
    let modes: Vec<Mode> = raw_modes.iter().map(|m| Mode { lambda: m.lambda / scale, nc: m.nc }).collect();
    let f = Integrand { tau: tau / scale, beta: spec.beta * scale, modes };
    let width = 1.0 / integrand::d2phi(&f.modes, f.beta).sqrt();
    integrate_contour(&f, width, tol)
}

fn integrate_contour(f: &Integrand, width: f64, tol: f64) -> Result<ProbabilityEstimate> {
    let eval = |w: f64| f.eval(w);
    let tail_target = tol * PI / 10.0;
    let asymptotic = f.asymptotic_from();
    let mut edges = vec![0.0];
    let mut omega = width;
    let mut oscillatory_from = None;
    let mut tail_err = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        edges.push(omega);
        let bound = f.tail_bound(omega);
        if bound <= tail_target {
            tail_err = bound;
            break;
        }
        if f.tau.abs() * omega / (2.0 * PI) >= OSCILLATION_SWITCH && omega >= asymptotic && omega >= 4.0 * width {
            oscillatory_from = Some(omega);
            break;
        }
        omega *= 2.0;
    }

    let core = kronrod::integrate(&eval, &edges, tol * PI / 2.0, MAX_SEGMENTS);
    let mut total = core.value;
    let mut err = core.err;
    let mut evals = core.evals;
    let mut converged = true;

    if let Some(start) = oscillatory_from {
        let tail = oscillatory_tail(f, start, tol);
        total += tail.value;
        err += tail.err;
        evals += tail.evals;
        converged = tail.converged;
    } else if !tail_err.is_finite() {
        converged = false;
    } else {
        err += tail_err;
    }

    let estimate = ProbabilityEstimate::new(total / PI, err / PI, EstimateMethod::Quadrature, evals);
    if converged && estimate.abs_error_bound <= tol {
        Ok(estimate)
    } else {
        Err(Error::ToleranceNotMet { tol, estimate })
    }
}

struct Tail {
    value: f64,
    err: f64,
    evals: usize,
    converged: bool,
}

/// Sums half-period panels of `e^{iτω}` from `start` and extrapolates the
/// partial sums.
fn oscillatory_tail(f: &Integrand, start: f64, tol: f64) -> Tail {
    let eval = |w: f64| f.eval(w);
    let h = PI / f.tau.abs();
    let target = tol * PI / 4.0;
    let panel_target = tol * PI * 1e-3;
    let mut sums = Vec::new();
    let mut estimates: Vec<f64> = Vec::new();
    let mut partial = 0.0;
    let mut panel_err = 0.0;
    let mut evals = 0;
    for n in 0..MAX_TAIL_PANELS {
        let a = start + n as f64 * h;
        let b = a + h;
        let r = kronrod::integrate(&eval, &[a, b], panel_target, 200);
        partial += r.value;
        panel_err += r.err;
        evals += r.evals;
        sums.push(partial);

        let bound = f.tail_bound(b);
        if bound <= target {
            return Tail { value: partial, err: panel_err + bound, evals, converged: true };
        }
        let window = &sums[sums.len().saturating_sub(WYNN_WINDOW)..];
        estimates.push(epsilon::wynn_epsilon(window));
        if estimates.len() >= 4 {
            let k = estimates.len();
            let e = estimates[k - 1];
            let spread = (e - estimates[k - 2]).abs().max((e - estimates[k - 3]).abs());
            if spread <= target {
                return Tail { value: e, err: panel_err + spread, evals, converged: true };
            }
        }
    }
    let value = estimates.last().copied().unwrap_or(partial);
    Tail { value, err: f64::INFINITY, evals, converged: false }
}

/// `Pr(SINR_k ≥ γ_k)`: the CDF with `M = −Q_k`, `z = a_k`, `τ = τ_k`.
pub fn outage_probability(form: &QuadraticOutageForm, tol: f64) -> Result<ProbabilityEstimate> {
    let gq = GaussianQuadratic::new(-form.q.clone(), form.a.clone(), form.tau)?;
    gq.cdf(tol)
}

/// As [`outage_probability`], keeping the best estimate when the tolerance
/// cannot be certified.
pub fn outage_probability_lenient(form: &QuadraticOutageForm, tol: f64) -> Result<ProbabilityEstimate> {
    outage_probability(form, tol).or_else(Error::into_estimate)
}
