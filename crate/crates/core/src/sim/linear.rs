//! Exact transition of a linear Gaussian SDE `dx = A x dt + dW`, `<dW dWᵀ> = B dt`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `x(t+dt) = Φ x(t) + L z` with `L Lᵀ = Q` the exact noise covariance over `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStep<R> {
    dim: usize,
    phi: Vec<R>,
    root: Vec<R>,
    cov: Vec<f64>,
}

impl<R: Real> LinearStep<R> {
    /// Van Loan's block exponential on substeps with `‖A‖ h <= 1/2`, composed
    /// exactly, then a symmetric square root of the accumulated covariance.
    pub fn new(drift: &DMatrix<f64>, diffusion: &DMatrix<f64>, dt: f64) -> Result<Self> {
        let n = drift.nrows();
        if drift.ncols() != n || diffusion.shape() != (n, n) {
            return Err(Error::InvalidParameter { name: "drift", reason: "matrix shapes disagree".into() });
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter { name: "dt", reason: format!("step must be positive, got {dt}") });
        }
        if drift.iter().chain(diffusion.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear step coefficients"));
        }
        let norm = drift.iter().fold(0.0f64, |m, v| m.max(v.abs())) * n as f64;
        let substeps = ((norm * dt / 0.5).ceil() as usize).max(1);
        let h = dt / substeps as f64;

        let mut block = DMatrix::zeros(2 * n, 2 * n);
        block.view_mut((0, 0), (n, n)).copy_from(&(-drift * h));
        block.view_mut((0, n), (n, n)).copy_from(&(diffusion * h));
        block.view_mut((n, n), (n, n)).copy_from(&(drift.transpose() * h));
        let e = block.exp();
        let phi_h = e.view((n, n), (n, n)).transpose();
        let q_h = &phi_h * e.view((0, n), (n, n));

        let mut phi = DMatrix::identity(n, n);
        let mut q = DMatrix::zeros(n, n);
        for _ in 0..substeps {
            q = &phi_h * q * phi_h.transpose() + &q_h;
            phi = &phi_h * phi;
        }
        let q = (&q + q.transpose()) * 0.5;
        let eig = SymmetricEigen::new(q.clone());
        let mut root = eig.eigenvectors.clone();
        for (j, lambda) in eig.eigenvalues.iter().enumerate() {
            let s = lambda.max(0.0).sqrt();
            root.column_mut(j).scale_mut(s);
        }
        let flat = |m: &DMatrix<f64>| -> Vec<R> {
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| R::lit(m[(i, j)])).collect()
        };
        Ok(Self {
            dim: n,
            phi: flat(&phi),
            root: flat(&root),
            cov: (0..n * n).map(|k| q[(k / n, k % n)]).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major transition matrix.
    pub fn phi(&self) -> &[R] {
        &self.phi
    }

    /// Row-major noise covariance accumulated over the step.
    pub fn noise_cov(&self) -> &[f64] {
        &self.cov
    }

    /// Advances `x` in place; `z` holds `dim` standard normals, `scratch` at least `dim` slots.
    #[inline]
    pub fn apply(&self, x: &mut [R], z: &[R], scratch: &mut [R]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.phi[i * n..(i + 1) * n];
            let noise = &self.root[i * n..(i + 1) * n];
            let mut acc = R::zero();
            for k in 0..n {
                acc = acc + row[k] * x[k] + noise[k] * z[k];
            }
            scratch[i] = acc;
        }
        x[..n].copy_from_slice(&scratch[..n]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_ou_matches_closed_form() {
        let (k, temp, dt) = (1.7, 0.8, 0.3);
        let step = LinearStep::<f64>::new(
            &DMatrix::from_element(1, 1, -k),
            &DMatrix::from_element(1, 1, 2.0 * temp),
            dt,
        )
        .unwrap();
        assert!((step.phi()[0] - (-k * dt).exp()).abs() < 1e-14);
        let var = temp / k * (1.0 - (-2.0 * k * dt).exp());
        assert!((step.noise_cov()[0] / var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn long_step_reaches_stationary_covariance() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, -0.5, -1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let step = LinearStep::<f64>::new(&a, &b, 60.0).unwrap();
        let q = step.noise_cov();
        // Gibbs: T K⁻¹ with K = [[1, .5], [.5, 1]]
        assert!((q[0] - 4.0 / 3.0).abs() < 1e-10);
        assert!((q[1] + 2.0 / 3.0).abs() < 1e-10);
        assert!(step.phi().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_drift_is_brownian() {
        let step = LinearStep::<f64>::new(&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2), 2.5).unwrap();
        assert_eq!(step.phi(), &[1.0, 0.0, 0.0, 1.0]);
        assert!((step.noise_cov()[0] - 2.5).abs() < 1e-13);
        assert!(step.noise_cov()[1].abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_step() {
        let m = DMatrix::zeros(1, 1);
        assert!(LinearStep::<f64>::new(&m, &m, 0.0).is_err());
        assert!(LinearStep::<f64>::new(&m, &DMatrix::zeros(2, 2), 1.0).is_err());
    }
}
