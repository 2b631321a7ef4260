//! Closed-form CDF of `δ^H(−Q)δ` via residues at the simple poles
//! `s = −1/λ_ℓ` of `e^{ts} / (s Π_j (1 + sλ_j))`.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};

const ZERO_EIGEN: f64 = 1e-12;
const MIN_GAP: f64 = 1e-9;
const RANGE_SLACK: f64 = 1e-6;

/// Eigenvalues of `−Q_k`, descending, with the zero modes flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Index of the most negative eigenvalue, if any.
    pub r_index: Option<usize>,
    pub zero_mask: Vec<bool>,
}

impl ResidueSpectrum {
    /// Rejects nonzero eigenvalues closer than a relative gap of `1e-9`.
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let top = eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
        let zero_mask: Vec<bool> = eigenvalues.iter().map(|l| l.abs() <= ZERO_EIGEN * top).collect();
        let nonzero: Vec<f64> = eigenvalues.iter().zip(&zero_mask).filter(|(_, &z)| !z).map(|(&l, _)| l).collect();
        for w in nonzero.windows(2) {
            if (w[0] - w[1]).abs() <= MIN_GAP * w[0].abs().max(w[1].abs()) {
                return Err(Error::DegenerateSpectrum);
            }
        }
        let r_index = (0..eigenvalues.len()).rev().find(|&i| !zero_mask[i] && eigenvalues[i] < 0.0);
        Ok(Self { eigenvalues, r_index, zero_mask })
    }

    pub fn from_matrix(neg_q: &CMatrix) -> Result<Self> {
        Self::new(hermitian_eigen(neg_q).values)
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.eigenvalues.iter().copied().enumerate().filter(|(i, _)| !self.zero_mask[*i])
    }

    pub fn positive_count(&self) -> usize {
        self.nonzero().filter(|(_, l)| *l > 0.0).count()
    }

    pub fn negative_count(&self) -> usize {
        self.nonzero().filter(|(_, l)| *l < 0.0).count()
    }

    /// `Π_{j≠ℓ, λ_j≠0} (1 − λ_j/λ_ℓ)`.
    pub fn product(&self, l: usize) -> f64 {
        let ll = self.eigenvalues[l];
        self.nonzero().filter(|(j, _)| *j != l).map(|(_, lj)| 1.0 - lj / ll).product()
    }

    /// `f_ℓ(t) = −e^{−t/λ_ℓ} / Π_{j≠ℓ}(1 − λ_j/λ_ℓ)`, zero for zero modes.
    pub fn residue_term(&self, l: usize, t: f64) -> f64 {
        if self.zero_mask[l] {
            return 0.0;
        }
        -(-t / self.eigenvalues[l]).exp() / self.product(l)
    }

    /// Residue terms of the positive eigenvalues, in descending eigenvalue order.
    pub fn positive_terms(&self, t: f64) -> Vec<f64> {
        self.nonzero().filter(|(_, l)| *l > 0.0).map(|(i, _)| self.residue_term(i, t)).collect()
    }

    /// `Pr(δ^H(−Q)δ ≤ t)` before clamping.
    pub fn cdf_raw(&self, t: f64) -> f64 {
        if t >= 0.0 {
            1.0 + self.nonzero().filter(|(_, l)| *l > 0.0).map(|(i, _)| self.residue_term(i, t)).sum::<f64>()
        } else {
            -self.nonzero().filter(|(_, l)| *l < 0.0).map(|(i, _)| self.residue_term(i, t)).sum::<f64>()
        }
    }

    /// Clamped CDF; a raw value well outside `[0, 1]` signals cancellation
    /// and is reported as a degenerate spectrum.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        let raw = self.cdf_raw(t);
        if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&raw) {
            return Err(Error::DegenerateSpectrum);
        }
        Ok(raw.clamp(0.0, 1.0))
    }
}

/// Success probability of the approximated constraint `δ^H Q δ + v' ≥ 0` with
/// `v' = p_k/γ'_k − σ_k²`.
pub fn residue_probability(spec: &ResidueSpectrum, p_k: f64, gamma_prime_k: f64, sigma2_k: f64) -> Result<f64> {
    spec.cdf(p_k / gamma_prime_k - sigma2_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_mode_example() {
        let s = ResidueSpectrum::new(vec![1.0, -0.5]).unwrap();
        assert_eq!(s.r_index, Some(1));
        let expect = 1.0 - (-1.0f64).exp() / 1.5;
        assert!((s.cdf(1.0).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.754_747_039).abs() < 1e-9);
        assert!((residue_probability(&s, 2.0, 1.0, 1.0).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn continuous_at_branch_boundary() {
        let s = ResidueSpectrum::new(vec![0.7, 0.2, -0.4]).unwrap();
        let left = s.cdf_raw(-1e-300);
        let right = s.cdf_raw(0.0);
        assert!((left - right).abs() < 1e-12, "{left} vs {right}");
    }

    #[test]
    fn upper_limit() {
        let s = ResidueSpectrum::new(vec![0.7, 0.2, -0.4]).unwrap();
        assert!(s.cdf(1e3 * 0.7).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn zero_modes_are_excluded() {
        let with = ResidueSpectrum::new(vec![0.7, 1e-20, -0.4]).unwrap();
        let without = ResidueSpectrum::new(vec![0.7, -0.4]).unwrap();
        assert_eq!(with.zero_mask, vec![false, true, false]);
        for t in [-0.5, 0.0, 0.3] {
            assert_eq!(with.cdf_raw(t), without.cdf_raw(t));
        }
    }

    #[test]
    fn coincident_eigenvalues_are_degenerate() {
        assert!(matches!(ResidueSpectrum::new(vec![0.5, 0.5, -0.1]), Err(Error::DegenerateSpectrum)));
        assert!(ResidueSpectrum::new(vec![0.5, 0.5 * (1.0 - 1e-6), -0.1]).is_ok());
    }

    #[test]
    fn single_negative_mode_is_exponential_tail() {
        let s = ResidueSpectrum::new(vec![-2.0]).unwrap();
        assert_eq!(s.cdf(0.5).unwrap(), 1.0);
        assert!((s.cdf(-1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
    }
}
