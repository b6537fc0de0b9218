//! State propagation: exact matrix-exponential evolution, an independent
//! adaptive Runge-Kutta cross-check, the noise-correction series via the
//! block superoperator array, factorized propagators, and the Bloch-sphere
//! affine map with its short-time expansion and SVD factorization.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::lapack;
use crate::linalg::{c, matexp, matmul, CMat, C64};
use crate::liouville::{devectorize, superop_commutator_norm, vectorize, Superoperator};
use crate::state::DensityMatrix;

pub use crate::state::{DensityMatrix as State, POSITIVITY_TOL};

const TRACE_DRIFT_TOL: f64 = 1e-8;

fn finish_state(v: &Array1<C64>, d: usize) -> Result<DensityMatrix> {
    let m = devectorize(v, d);
    let tr = crate::linalg::trace(&m);
    if (tr.re - 1.0).abs() > TRACE_DRIFT_TOL || tr.im.abs() > TRACE_DRIFT_TOL {
        return Err(Error::NumericalFailure(format!(
            "trace drift after propagation: {:.3e}",
            ((tr.re - 1.0).powi(2) + tr.im.powi(2)).sqrt()
        )));
    }
    let herm = (&m + &crate::linalg::dagger(&m)).mapv(|z| z * 0.5);
    // renormalize residual round-off so downstream validation sees trace 1
    let tr = crate::linalg::trace(&herm).re;
    DensityMatrix::new(herm.mapv(|z| z / tr))
}

/// Exact propagation: devectorize(exp(L t) vec(rho0)).
pub fn propagate_exact(
    total: &Superoperator,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    if total.dim != rho0.dim() {
        return Err(Error::DimensionMismatch(format!(
            "superoperator dim {} vs state dim {}",
            total.dim,
            rho0.dim()
        )));
    }
    let prop = matexp(&total.matrix.mapv(|z| z * t))?;
    let v0 = vectorize(rho0.matrix()).insert_axis(ndarray::Axis(1));
    let v = matmul(&prop, &v0);
    finish_state(&v.index_axis(ndarray::Axis(1), 0).to_owned(), total.dim)
}

/// Propagator matrix exp(L t); useful when sweeping many initial states at
/// a fixed time.
pub fn propagator(total: &Superoperator, t: f64) -> Result<CMat> {
    matexp(&total.matrix.mapv(|z| z * t))
}

/// Apply a precomputed propagator to a state.
pub fn apply_propagator(prop: &CMat, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    let d = rho0.dim();
    let v0 = vectorize(rho0.matrix()).insert_axis(ndarray::Axis(1));
    let v = matmul(prop, &v0);
    finish_state(&v.index_axis(ndarray::Axis(1), 0).to_owned(), d)
}

// Dormand-Prince 4(5) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn matvec(l: &CMat, v: &Array1<C64>) -> Array1<C64> {
    let col = v.clone().insert_axis(ndarray::Axis(1));
    lapack::matmul(l, &col)
        .index_axis(ndarray::Axis(1), 0)
        .to_owned()
}

fn inf_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Adaptive Dormand-Prince 4(5) integration of the vectorized master
/// equation; an independent cross-check for [`propagate_exact`].
pub fn propagate_rk(
    total: &Superoperator,
    rho0: &DensityMatrix,
    t: f64,
    tol: f64,
) -> Result<DensityMatrix> {
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(Error::InvalidParameter(format!(
            "rk tolerance {tol} outside [1e-12, 1e-4]"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    let l = &total.matrix;
    let mut y = vectorize(rho0.matrix());
    if t == 0.0 {
        return finish_state(&y, total.dim);
    }
    let scale = crate::linalg::max_abs(l).max(1e-30);
    let mut h = (0.1 / scale).min(t);
    let mut time = 0.0f64;
    let h_min = t * 1e-14;
    let mut k: Vec<Array1<C64>> = vec![Array1::zeros(y.len()); 7];
    while time < t {
        if h < h_min {
            return Err(Error::StepUnderflow(time));
        }
        if time + h > t {
            h = t - time;
        }
        k[0] = matvec(l, &y);
        for stage in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = DP_A[stage][j];
                if a != 0.0 {
                    ys = ys + kj.mapv(|z| z * (a * h));
                }
            }
            k[stage] = matvec(l, &ys);
        }
        let _ = DP_C; // stage times unused: the generator is autonomous
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if DP_B5[j] != 0.0 {
                y5 = y5 + kj.mapv(|z| z * (DP_B5[j] * h));
            }
            if DP_B4[j] != 0.0 {
                y4 = y4 + kj.mapv(|z| z * (DP_B4[j] * h));
            }
        }
        let err_abs = inf_norm(&(&y5 - &y4));
        let err = err_abs / (tol * (1.0 + inf_norm(&y5)));
        if err <= 1.0 {
            time += h;
            y = y5;
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    finish_state(&y, total.dim)
}

/// Block upper-bidiagonal superoperator array with the coherent generator on
/// the diagonal and the dissipator on the superdiagonal; the first block row
/// of its exponential carries the time-ordered noise corrections.
fn correction_array(h_super: &Superoperator, diss: &Superoperator, order: usize) -> CMat {
    let blk = h_super.matrix.nrows();
    let n = order + 1;
    let mut pi = CMat::zeros((n * blk, n * blk));
    for b in 0..n {
        for i in 0..blk {
            for j in 0..blk {
                pi[(b * blk + i, b * blk + j)] = h_super.matrix[(i, j)];
                if b + 1 < n {
                    pi[(b * blk + i, (b + 1) * blk + j)] = diss.matrix[(i, j)];
                }
            }
        }
    }
    pi
}

/// Partial series sum: noiseless evolution plus noise corrections up to the
/// given order. The result is Hermitian and unit-trace but may be slightly
/// non-positive at low order, so the raw matrix is returned.
pub fn series_correction(
    h_super: &Superoperator,
    diss: &Superoperator,
    rho0: &DensityMatrix,
    t: f64,
    order: usize,
) -> Result<CMat> {
    let d = h_super.dim;
    if diss.dim != d || rho0.dim() != d {
        return Err(Error::DimensionMismatch(
            "series_correction operand dims differ".into(),
        ));
    }
    let blk = d * d;
    let pi = correction_array(h_super, diss, order);
    let e = matexp(&pi.mapv(|z| z * t))?;
    let v0 = vectorize(rho0.matrix());
    let mut acc: Array1<C64> = Array1::zeros(blk);
    for m in 0..=order {
        for i in 0..blk {
            let mut s = c(0.0, 0.0);
            for j in 0..blk {
                s += e[(i, m * blk + j)] * v0[j];
            }
            acc[i] += s;
        }
    }
    Ok(devectorize(&acc, d))
}

/// Factorized propagation exp(L t) exp(H t); exact only for phase-covariant
/// pairs, which is enforced.
pub fn pc_factorized(
    h_super: &Superoperator,
    diss: &Superoperator,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    let norm = superop_commutator_norm(h_super, diss);
    if norm > crate::liouville::PC_COMMUTATOR_TOL {
        return Err(Error::NotPhaseCovariant(norm));
    }
    let coh = matexp(&h_super.matrix.mapv(|z| z * t))?;
    let dis = matexp(&diss.matrix.mapv(|z| z * t))?;
    let v0 = vectorize(rho0.matrix()).insert_axis(ndarray::Axis(1));
    let v = matmul(&dis, &matmul(&coh, &v0));
    finish_state(&v.index_axis(ndarray::Axis(1), 0).to_owned(), h_super.dim)
}

/// Short-time sequential approximation exp(H t) exp(L t); exact for
/// phase-covariant pairs, O(t^2) accurate otherwise.
pub fn short_time_state(
    h_super: &Superoperator,
    diss: &Superoperator,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    let coh = matexp(&h_super.matrix.mapv(|z| z * t))?;
    let dis = matexp(&diss.matrix.mapv(|z| z * t))?;
    let v0 = vectorize(rho0.matrix()).insert_axis(ndarray::Axis(1));
    let v = matmul(&coh, &matmul(&dis, &v0));
    finish_state(&v.index_axis(ndarray::Axis(1), 0).to_owned(), h_super.dim)
}

/// 3x3 affine map of the Bloch ball.
#[derive(Debug, Clone)]
pub struct BlochAffineMap {
    pub matrix: Array2<f64>,
}

impl BlochAffineMap {
    pub fn apply(&self, r: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            for (j, rj) in r.iter().enumerate() {
                out[i] += self.matrix[(i, j)] * rj;
            }
        }
        out
    }

    pub fn identity() -> Self {
        Self {
            matrix: Array2::eye(3),
        }
    }
}

/// Channel-mix coefficients of the jump operator
/// cos(a) sx + sin(a) sz at rate gamma.
pub fn channel_coefficients(alpha: f64, gamma: f64) -> (f64, f64, f64) {
    let s1 = gamma * alpha.sin().powi(2);
    let s2 = gamma * alpha.cos().powi(2);
    let s3 = 0.5 * gamma * (2.0 * alpha).sin();
    (s1, s2, s3)
}

/// Bloch-vector generator D for the field-along-Z geometry, so that
/// r(t) = exp(D t) r(0).
pub fn bloch_generator(b: f64, alpha: f64, gamma: f64) -> Array2<f64> {
    let (s1, s2, s3) = channel_coefficients(alpha, gamma);
    ndarray::array![
        [-2.0 * s1, -2.0 * b, 2.0 * s3],
        [2.0 * b, -2.0 * (s1 + s2), 0.0],
        [2.0 * s3, 0.0, -2.0 * s2]
    ]
}

/// Exact affine map exp(D t).
pub fn bloch_affine_exact(d: &Array2<f64>, t: f64) -> Result<BlochAffineMap> {
    let dc = d.mapv(|x| c(x * t, 0.0));
    let e = matexp(&dc)?;
    Ok(BlochAffineMap {
        matrix: e.mapv(|z| z.re),
    })
}

/// Cubic short-time expansion I + Dt + D^2 t^2/2 + D^3 t^3/6.
pub fn bloch_affine_short(b: f64, alpha: f64, gamma: f64, t: f64) -> BlochAffineMap {
    let d = bloch_generator(b, alpha, gamma);
    let d2 = d.dot(&d);
    let d3 = d2.dot(&d);
    let m = Array2::eye(3) + d.mapv(|x| x * t) + d2.mapv(|x| x * t * t / 2.0)
        + d3.mapv(|x| x * t * t * t / 6.0);
    BlochAffineMap { matrix: m }
}

/// Rotation-contraction-rotation factorization of an affine map.
#[derive(Debug, Clone)]
pub struct AffineFactorization {
    /// Proper rotation (det = +1).
    pub rotation1: Array2<f64>,
    /// Contraction amplitudes along the principal axes; sign flips absorbed
    /// from the rotations may leave one entry negative.
    pub contraction: [f64; 3],
    /// Proper rotation (det = +1).
    pub rotation2: Array2<f64>,
}

impl AffineFactorization {
    pub fn reconstruct(&self) -> Array2<f64> {
        let diag = Array2::from_diag(&ndarray::arr1(&self.contraction));
        self.rotation1.dot(&diag).dot(&self.rotation2)
    }

    /// Max-entry commutator norm of the two factors R1 and V (V as a full
    /// 3x3 diagonal matrix).
    pub fn rotation_contraction_commutator(&self) -> f64 {
        let v = Array2::from_diag(&ndarray::arr1(&self.contraction));
        let c1 = self.rotation1.dot(&v) - v.dot(&self.rotation1);
        c1.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

fn det3(m: &Array2<f64>) -> f64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// SVD factorization with both factors forced to proper rotations; any sign
/// flip moves into the contraction.
pub fn affine_factorize(map: &BlochAffineMap) -> Result<AffineFactorization> {
    let (mut u, s, mut vt) = lapack::dgesvd(&map.matrix)?;
    let mut sv = [s[0], s[1], s[2]];
    if det3(&u) < 0.0 {
        for i in 0..3 {
            u[(i, 2)] = -u[(i, 2)];
        }
        sv[2] = -sv[2];
    }
    if det3(&vt) < 0.0 {
        for j in 0..3 {
            vt[(2, j)] = -vt[(2, j)];
        }
        sv[2] = -sv[2];
    }
    Ok(AffineFactorization {
        rotation1: u,
        contraction: sv,
        rotation2: vt,
    })
}
