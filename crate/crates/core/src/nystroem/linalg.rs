use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition-backed pseudo-inverse square root of a symmetric PSD matrix.
///
/// Keeps `U` and `λ` so the map `M ↦ M^{-1/2}` can be differentiated.
#[derive(Debug, Clone)]
pub struct InvSqrt {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// Eigenvalues at or below this are treated as zero.
    pub floor: f64,
    pub matrix: DMatrix<f64>,
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d > SYMMETRY_TOL || d.is_nan() {
                return Err(Error::invalid(format!(
                    "matrix not symmetric at ({i},{j}): difference {d:e}"
                )));
            }
        }
    }
    Ok(())
}

impl InvSqrt {
    /// Floor given as an absolute eigenvalue threshold.
    pub fn new(m: &DMatrix<f64>, epsilon: f64) -> Result<Self> {
        Self::build(m, |_| epsilon)
    }

    /// Floor given as a fraction of the largest eigenvalue.
    pub fn new_relative(m: &DMatrix<f64>, relative: f64) -> Result<Self> {
        Self::build(m, |max| relative * max.max(0.0))
    }

    fn build(m: &DMatrix<f64>, floor: impl Fn(f64) -> f64) -> Result<Self> {
        check_symmetric(m)?;
        let sym = (m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite eigenvalue".into()));
        }
        let floor = floor(eig.eigenvalues.max());
        let f = eig.eigenvalues.map(|l| inv_sqrt_scalar(l, floor));
        let u = &eig.eigenvectors;
        let scaled = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * f[j]);
        let matrix = &scaled * u.transpose();
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Ok(InvSqrt {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            floor,
            matrix,
        })
    }

    /// Pulls a gradient with respect to `M^{-1/2}` back to `M`.
    ///
    /// Uses `dR = U (F ∘ Uᵀ dM U) Uᵀ` with the divided differences
    /// `F_ij = (f(λ_i) − f(λ_j)) / (λ_i − λ_j)` and `F_ii = f'(λ_i)`. The result
    /// is symmetric, i.e. the gradient along symmetric perturbations.
    pub fn backward(&self, grad: &DMatrix<f64>) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let g = (grad + grad.transpose()) * 0.5;
        let inner = u.transpose() * g * u;
        let n = self.eigenvalues.len();
        let lam = &self.eigenvalues;
        let scaled = DMatrix::from_fn(n, n, |i, j| {
            inner[(i, j)] * divided_difference(lam[i], lam[j], self.floor)
        });
        u * scaled * u.transpose()
    }
}

fn inv_sqrt_scalar(l: f64, floor: f64) -> f64 {
    if l > floor && l > 0.0 {
        1.0 / l.sqrt()
    } else {
        0.0
    }
}

fn divided_difference(a: f64, b: f64, floor: f64) -> f64 {
    let live_a = a > floor && a > 0.0;
    let live_b = b > floor && b > 0.0;
    match (live_a, live_b) {
        // (a^{-1/2} − b^{-1/2}) / (a − b) without cancellation; f'(a) when a = b
        (true, true) => {
            let (sa, sb) = (a.sqrt(), b.sqrt());
            -1.0 / (sa * sb * (sa + sb))
        }
        (false, false) => 0.0,
        _ => {
            let d = a - b;
            if d == 0.0 {
                0.0
            } else {
                (inv_sqrt_scalar(a, floor) - inv_sqrt_scalar(b, floor)) / d
            }
        }
    }
}

/// `U diag(f(λ)) Uᵀ` with `f(λ) = λ^{-1/2}` above `epsilon`, 0 otherwise.
pub fn inv_sqrt_psd(m: &DMatrix<f64>, epsilon: f64) -> Result<DMatrix<f64>> {
    Ok(InvSqrt::new(m, epsilon)?.matrix)
}
