//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `m` is the unit eigenvector of `values[m]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let scaled = CMatrix::from_fn(n, n, |r, c| self.vectors[(r, c)] * self.values[c]);
        scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

fn spectral_map(eig: &HermitianEigen, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = eig.values.len();
    let scaled = CMatrix::from_fn(n, n, |r, c| eig.vectors[(r, c)] * f(eig.values[c]));
    scaled * eig.vectors.adjoint()
}

/// Principal square root of a PSD matrix; negative eigenvalues are clamped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    spectral_map(&hermitian_eigen(m), |l| l.max(0.0).sqrt())
}

/// Pseudo-inverse square root; eigenvalues at or below `1e-12 * lambda_max` map to zero.
pub fn psd_pinv_sqrt(m: &CMatrix) -> CMatrix {
    let eig = hermitian_eigen(m);
    let top = eig.values.first().copied().unwrap_or(0.0);
    let cutoff = 1e-12 * top;
    spectral_map(&eig, |l| if top > 0.0 && l > cutoff { 1.0 / l.sqrt() } else { 0.0 })
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `x^H M x`, real part (exact for Hermitian `M`).
pub fn quad_form(m: &CMatrix, x: &CVector) -> f64 {
    x.dotc(&(m * x)).re
}

/// Draws a standard circular complex Gaussian vector `CN(0, I)`.
pub fn standard_complex_normal<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    use rand_distr::StandardNormal;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMatrix::from_fn(n, n, |_, _| {
            let v = standard_complex_normal(&mut rng, 1);
            v[0]
        });
        hermitian_part(&g)
    }

    #[test]
    fn eigen_reconstructs_and_sorts() {
        for seed in 0..20 {
            let m = random_hermitian(4, seed);
            let eig = hermitian_eigen(&m);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            let err = (eig.reconstruct() - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "reconstruction error {err}");
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let g = random_hermitian(3, 7);
        let psd = &g * g.adjoint();
        let s = psd_sqrt(&psd);
        let err = (&s * &s - &psd).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        assert!(hermitian_defect(&s) < 1e-12);
        let inv = psd_pinv_sqrt(&psd);
        let id = &inv * &s;
        let err = (id - CMatrix::identity(3, 3)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn pinv_sqrt_of_singular_matrix() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = real(4.0);
        let inv = psd_pinv_sqrt(&m);
        assert!((inv[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(inv[(1, 1)].norm() < 1e-15);
        assert_eq!(psd_pinv_sqrt(&CMatrix::zeros(2, 2)), CMatrix::zeros(2, 2));
    }
}
