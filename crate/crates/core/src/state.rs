//! Density matrices and Bloch vectors.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, dagger, eigvals_hermitian, hermiticity_deviation, trace, CMat, C64,
};

pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = -1e-9;

/// Hermitian, unit-trace, positive-semidefinite state matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Validate Hermiticity, unit trace, and positivity, then wrap.
    pub fn new(mat: CMat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NonSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let dev = hermiticity_deviation(&mat);
        if dev > linalg::HERMITICITY_TOL {
            return Err(Error::NonHermitian {
                dev,
                tol: linalg::HERMITICITY_TOL,
            });
        }
        let tr = trace(&mat);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NumericalFailure(format!(
                "density matrix trace {:.12}{:+.3e}i deviates from 1",
                tr.re, tr.im
            )));
        }
        let sym = (&mat + &dagger(&mat)).mapv(|z| z * 0.5);
        let w = eigvals_hermitian(&sym)?;
        if w[0] < POSITIVITY_TOL {
            return Err(Error::NumericalFailure(format!(
                "density matrix minimum eigenvalue {:.3e} below tolerance",
                w[0]
            )));
        }
        Ok(Self { mat: sym })
    }

    /// Pure state |psi><psi| from a (normalized or not) state vector.
    pub fn pure(psi: &Array1<C64>) -> Self {
        let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let d = psi.len();
        let mat = CMat::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj() / norm_sq);
        Self { mat }
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: linalg::identity(d).mapv(|z| z / d as f64),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        trace(&self.mat)
    }

    pub fn purity(&self) -> f64 {
        trace(&linalg::matmul(&self.mat, &self.mat)).re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigvals_hermitian(&self.mat)?[0])
    }

    /// det(rho) for a qubit state.
    pub fn det2(&self) -> Result<C64> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "det2 needs a 2x2 state, got {}x{}",
                self.dim(),
                self.dim()
            )));
        }
        Ok(self.mat[(0, 0)] * self.mat[(1, 1)] - self.mat[(0, 1)] * self.mat[(1, 0)])
    }

    /// Bloch vector r_i = Tr[rho sigma_i] (qubit states only).
    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch(
                "Bloch vector needs a 2x2 state".into(),
            ));
        }
        let rx = 2.0 * self.mat[(0, 1)].re;
        let ry = -2.0 * self.mat[(0, 1)].im;
        let rz = self.mat[(0, 0)].re - self.mat[(1, 1)].re;
        Ok([rx, ry, rz])
    }

    /// Qubit state from a Bloch vector, rho = (I + r.sigma)/2.
    pub fn from_bloch_vector(r: [f64; 3]) -> Result<Self> {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if norm > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "Bloch vector norm {norm} exceeds 1"
            )));
        }
        let mat = ndarray::array![
            [
                c(0.5 * (1.0 + r[2]), 0.0),
                c(0.5 * r[0], -0.5 * r[1])
            ],
            [c(0.5 * r[0], 0.5 * r[1]), c(0.5 * (1.0 - r[2]), 0.0)]
        ];
        Ok(Self { mat })
    }

    /// Hilbert-Schmidt distance max-entry metric to another state.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        linalg::max_abs_diff(&self.mat, &other.mat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn pure_state_is_valid() {
        let psi = arr1(&[c(1.0, 0.0), c(1.0, 0.0)]);
        let rho = DensityMatrix::pure(&psi);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        assert_eq!(rho.bloch_vector().unwrap(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn bloch_roundtrip() {
        let r = [0.3, -0.2, 0.5];
        let rho = DensityMatrix::from_bloch_vector(r).unwrap();
        let back = rho.bloch_vector().unwrap();
        for k in 0..3 {
            assert!((r[k] - back[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_trace() {
        let m = linalg::identity(2);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn rejects_negative_state() {
        let m = ndarray::array![
            [c(1.5, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(-0.5, 0.0)]
        ];
        assert!(DensityMatrix::new(m).is_err());
    }
}
