//! Contour integrand of the quadratic-form CDF on a scale-normalised spectrum.

use crate::linalg::C64;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Mode {
    pub lambda: f64,
    /// `|z̃_m|²`.
    pub nc: f64,
}

/// `log F(s) = τ s − ln s − Σ_m [ |z̃_m|² sλ_m/(1+sλ_m) + ln(1+sλ_m) ]`.
#[derive(Debug, Clone)]
pub(crate) struct Integrand {
    pub tau: f64,
    pub beta: f64,
    pub modes: Vec<Mode>,
}

pub(crate) fn dphi(modes: &[Mode], tau: f64, beta: f64) -> f64 {
    let mut d = tau - 1.0 / beta;
    for m in modes {
        let g = 1.0 + beta * m.lambda;
        d -= m.nc * m.lambda / (g * g) + m.lambda / g;
    }
    d
}

pub(crate) fn d2phi(modes: &[Mode], beta: f64) -> f64 {
    let mut d = 1.0 / (beta * beta);
    for m in modes {
        let g = 1.0 + beta * m.lambda;
        let l2 = m.lambda * m.lambda;
        d += 2.0 * m.nc * l2 / (g * g * g) + l2 / (g * g);
    }
    d
}

pub(crate) fn beta_max(modes: &[Mode]) -> f64 {
    let lmin = modes.iter().map(|m| m.lambda).fold(f64::INFINITY, f64::min);
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

pub(crate) fn admissible(modes: &[Mode], beta: f64) -> bool {
    beta > 0.0 && beta.is_finite() && modes.iter().all(|m| 1.0 + beta * m.lambda > 0.0)
}

/// Minimiser of the real log-integrand on the admissible interval. `None` when
/// the CDF is trivially 0 or 1 and no interior minimum exists.
pub(crate) fn saddle_beta(modes: &[Mode], tau: f64) -> Option<f64> {
    if modes.is_empty() {
        return None;
    }
    let bmax = beta_max(modes);
    let mut hi = if bmax.is_finite() {
        bmax
    } else {
        if tau <= 0.0 {
            return None;
        }
        let mut hi = 1.0;
        while dphi(modes, tau, hi) <= 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return None;
            }
        }
        hi
    };
    let mut lo = 0.5 * hi.min(1.0);
    while dphi(modes, tau, lo) >= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return None;
        }
    }
    for _ in 0..400 {
        let mid = if hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if !(mid > lo && mid < hi) {
            break;
        }
        if dphi(modes, tau, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Some(if admissible(modes, mid) { mid } else { lo })
}

impl Integrand {
    pub fn log_f(&self, omega: f64) -> C64 {
        let s = C64::new(self.beta, omega);
        let mut acc = s * self.tau - s.ln();
        for m in &self.modes {
            let sl = s * m.lambda;
            let d = C64::new(1.0, 0.0) + sl;
            acc -= sl / d * m.nc + d.ln();
        }
        acc
    }

    /// `Re F(β + iω)`.
    pub fn eval(&self, omega: f64) -> f64 {
        self.log_f(omega).exp().re
    }

    /// Upper bound on `∫_Ω^∞ |F(β + iω)| dω`.
    ///
    /// Uses `|s| ≥ ω`, `|1 + sλ| ≥ max(1 + βλ, ω|λ|)` and the monotone growth of
    /// `Re c`, integrated piecewise between the mode breakpoints
    /// `ω_m = (1 + βλ_m)/|λ_m|`.
    pub fn tail_bound(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return f64::INFINITY;
        }
        let mut breaks: Vec<f64> =
            self.modes.iter().map(|m| (1.0 + self.beta * m.lambda) / m.lambda.abs()).filter(|&b| b > omega).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.push(f64::INFINITY);
        let mut total = 0.0;
        let mut a = omega;
        for b in breaks {
            let mut log_c = self.beta * self.tau - self.re_c(a);
            let mut q = 0i32;
            for m in &self.modes {
                let d0 = 1.0 + self.beta * m.lambda;
                if a * m.lambda.abs() >= d0 * (1.0 - 1e-12) {
                    log_c -= m.lambda.abs().ln();
                    q += 1;
                } else {
                    log_c -= d0.ln();
                }
            }
            // ∫_a^b ω^{−1−q} dω
            let log_int = if q == 0 {
                (b / a).ln().ln()
            } else if b.is_infinite() {
                -f64::from(q) * a.ln() - f64::from(q).ln()
            } else {
                let qf = f64::from(q);
                -qf * a.ln() - qf.ln() + (-(-qf * (b / a).ln()).exp_m1()).ln()
            };
            total += (log_c + log_int).exp();
            if b.is_infinite() {
                break;
            }
            a = b;
        }
        total
    }

    /// `Re c(β + iω)`, nondecreasing in `ω ≥ 0`.
    fn re_c(&self, omega: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let d0 = 1.0 + self.beta * m.lambda;
                let ol = omega * m.lambda;
                m.nc * (1.0 - d0 / (d0 * d0 + ol * ol))
            })
            .sum()
    }

    /// Frequency at or beyond which the integrand behaves like
    /// `e^{iτω}` times a slowly varying amplitude.
    pub fn asymptotic_from(&self) -> f64 {
        let corner = self.modes.iter().map(|m| (1.0 + self.beta * m.lambda) / m.lambda.abs()).fold(0.0, f64::max);
        // Phase drift of c(s) is about Σ |z̃|²/(|λ| ω²); keep it below |τ|/4.
        let drift: f64 = self.modes.iter().map(|m| m.nc / m.lambda.abs()).sum();
        let settle = if self.tau != 0.0 { (4.0 * drift / self.tau.abs()).sqrt() } else { 0.0 };
        4.0 * corner.max(settle)
    }
}
