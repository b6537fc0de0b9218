//! Dense complex operator kernel: Pauli matrices, tensor products,
//! matrix exponentials, Hermitian and general eigendecompositions, and the
//! eigenvalue-spread seminorm.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lapack;

pub type C64 = Complex64;
pub type CMat = Array2<C64>;

pub const HERMITICITY_TOL: f64 = 1e-10;
const DEGENERACY_TOL: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    Array2::eye(n)
}

pub fn sigma_x() -> CMat {
    ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn sigma_y() -> CMat {
    ndarray::array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]
}

pub fn sigma_z() -> CMat {
    ndarray::array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
}

/// |e><g| with |e> = (1,0), |g> = (0,1).
pub fn sigma_plus() -> CMat {
    ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]
}

pub fn sigma_minus() -> CMat {
    ndarray::array![[c(0.0, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    lapack::matmul(a, b)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    matmul(a, b) - matmul(b, a)
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    matmul(a, b) + matmul(b, a)
}

pub fn trace(a: &CMat) -> C64 {
    a.diag().sum()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_deviation(a: &CMat) -> f64 {
    max_abs_diff(a, &dagger(a))
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square() && hermiticity_deviation(a) <= tol
}

fn require_square(a: &CMat) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

fn require_hermitian(a: &CMat) -> Result<CMat> {
    require_square(a)?;
    let dev = hermiticity_deviation(a);
    if dev > HERMITICITY_TOL {
        return Err(Error::NonHermitian {
            dev,
            tol: HERMITICITY_TOL,
        });
    }
    // symmetrize away round-off before handing to the Hermitian solver
    Ok((a + &dagger(a)).mapv(|z| z * 0.5))
}

/// Kronecker product; dims multiply.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMat::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a whole list, left to right.
pub fn kron_all(mats: &[CMat]) -> CMat {
    let mut out = identity(1);
    for m in mats {
        out = kron(&out, m);
    }
    out
}

fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

// Pade coefficients for the scaling-and-squaring matrix exponential
// (orders 3, 5, 7, 9, 13 with the usual 1-norm thresholds).
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade_uv(a: &CMat, powers: &[CMat], b: &[f64]) -> (CMat, CMat) {
    // powers = [A^2, A^4, ...] as needed; U = A * (odd part), V = even part
    let n = a.nrows();
    let mut u_inner = CMat::zeros((n, n));
    let mut v = CMat::zeros((n, n));
    for i in 0..n {
        u_inner[(i, i)] = c(b[1], 0.0);
        v[(i, i)] = c(b[0], 0.0);
    }
    for (k, p) in powers.iter().enumerate() {
        let odd = b[2 * k + 3];
        let even = b[2 * k + 2];
        u_inner = u_inner + p.mapv(|z| z * odd);
        v = v + p.mapv(|z| z * even);
    }
    (matmul(a, &u_inner), v)
}

fn pade_solve(u: CMat, v: CMat) -> Result<CMat> {
    let num = &v + &u;
    let den = &v - &u;
    lapack::solve(&den, &num)
}

/// Matrix exponential via scaling-and-squaring with Pade approximants.
pub fn matexp(a: &CMat) -> Result<CMat> {
    let n = require_square(a)?;
    if n == 0 {
        return Ok(CMat::zeros((0, 0)));
    }
    let norm = one_norm(a);
    if norm <= 1.495_585_217_958_292e-2 {
        let a2 = matmul(a, a);
        let (u, v) = pade_uv(a, &[a2], &PADE3);
        return pade_solve(u, v);
    }
    if norm <= 2.539_398_330_063_23e-1 {
        let a2 = matmul(a, a);
        let a4 = matmul(&a2, &a2);
        let (u, v) = pade_uv(a, &[a2, a4], &PADE5);
        return pade_solve(u, v);
    }
    if norm <= 9.504_178_996_162_932e-1 {
        let a2 = matmul(a, a);
        let a4 = matmul(&a2, &a2);
        let a6 = matmul(&a2, &a4);
        let (u, v) = pade_uv(a, &[a2, a4, a6], &PADE7);
        return pade_solve(u, v);
    }
    if norm <= 2.097_847_961_257_068 {
        let a2 = matmul(a, a);
        let a4 = matmul(&a2, &a2);
        let a6 = matmul(&a2, &a4);
        let a8 = matmul(&a4, &a4);
        let (u, v) = pade_uv(a, &[a2, a4, a6, a8], &PADE9);
        return pade_solve(u, v);
    }
    let theta13 = 5.371_920_351_148_152;
    let s = if norm > theta13 {
        ((norm / theta13).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let scale = c(0.5f64.powi(s), 0.0);
    let a_s = a.mapv(|z| z * scale);
    let a2 = matmul(&a_s, &a_s);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a2, &a4);
    let b = &PADE13;
    // order-13 evaluation splits the polynomial around A^6
    let w1 = a6.mapv(|z| z * b[13]) + a4.mapv(|z| z * b[11]) + a2.mapv(|z| z * b[9]);
    let mut w2 = a6.mapv(|z| z * b[7]) + a4.mapv(|z| z * b[5]) + a2.mapv(|z| z * b[3]);
    for i in 0..n {
        w2[(i, i)] += c(b[1], 0.0);
    }
    let u = matmul(&a_s, &(matmul(&a6, &w1) + w2));
    let z1 = a6.mapv(|z| z * b[12]) + a4.mapv(|z| z * b[10]) + a2.mapv(|z| z * b[8]);
    let mut v = matmul(&a6, &z1) + a6.mapv(|z| z * b[6]) + a4.mapv(|z| z * b[4]) + a2.mapv(|z| z * b[2]);
    for i in 0..n {
        v[(i, i)] += c(b[0], 0.0);
    }
    let mut x = pade_solve(u, v)?;
    for _ in 0..s {
        x = matmul(&x, &x);
    }
    Ok(x)
}

/// Eigendecomposition result. `right` holds right eigenvectors in its
/// columns; `left` holds the biorthogonal left system (general case only),
/// normalized so that left_i^dag · right_j = delta_ij.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<C64>,
    pub right: CMat,
    pub left: Option<CMat>,
}

impl EigenSystem {
    /// Number of eigenvalues with |lambda| below `tol`.
    pub fn near_zero_count(&self, tol: f64) -> usize {
        self.values.iter().filter(|z| z.norm() <= tol).count()
    }
}

/// Hermitian eigendecomposition: real eigenvalues ascending, orthonormal
/// eigenvectors. Inputs off-Hermitian beyond 1e-10 are rejected; smaller
/// deviations are symmetrized away.
pub fn eig_hermitian(a: &CMat) -> Result<EigenSystem> {
    let h = require_hermitian(a)?;
    let (w, v) = lapack::zheev(&h)?;
    Ok(EigenSystem {
        values: w.iter().map(|&x| c(x, 0.0)).collect(),
        right: v,
        left: None,
    })
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn eigvals_hermitian(a: &CMat) -> Result<Array1<f64>> {
    let h = require_hermitian(a)?;
    let (w, _) = lapack::zheev(&h)?;
    Ok(w)
}

fn defective_cluster(values: &[C64]) -> String {
    // report the closest eigenvalue pair as the offending cluster
    let mut best = (0usize, 1usize, f64::INFINITY);
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let gap = (values[i] - values[j]).norm();
            if gap < best.2 {
                best = (i, j, gap);
            }
        }
    }
    format!(
        "{:.6e}{:+.6e}i, {:.6e}{:+.6e}i (gap {:.3e})",
        values[best.0].re, values[best.0].im, values[best.1].re, values[best.1].im, best.2
    )
}

/// General (non-Hermitian) eigendecomposition with a complete
/// biorthogonalized left/right system. Eigenvalues are sorted by
/// descending real part (ties broken by descending imaginary part).
/// Defective inputs are rejected.
pub fn eig_general(a: &CMat) -> Result<EigenSystem> {
    let n = require_square(a)?;
    let (mut values, mut right) = lapack::zgeev(a)?;
    // sort by descending real part
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[j]
            .re
            .partial_cmp(&values[i].re)
            .unwrap()
            .then(values[j].im.partial_cmp(&values[i].im).unwrap())
    });
    let sorted_vals: Vec<C64> = order.iter().map(|&i| values[i]).collect();
    let mut sorted_right = CMat::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        sorted_right.column_mut(col).assign(&right.column(i));
    }
    values = sorted_vals;
    right = sorted_right;

    // rank check on the eigenvector Gram matrix; a deficient Gram matrix
    // means the eigenvector set does not span the space (defective input)
    let gram = matmul(&dagger(&right), &right);
    let gram_eigs = lapack::zheev(&gram)?.0;
    if gram_eigs[0] < DEGENERACY_TOL {
        return Err(Error::DefectiveSpectrum {
            cluster: defective_cluster(&values),
        });
    }

    // left system from the inverse of the right eigenvector matrix:
    // rows of V^-1 are the biorthogonal duals, so left_j = (V^-1)^dag columns
    let inv = lapack::solve(&right, &identity(n))?;
    let left = dagger(&inv);
    Ok(EigenSystem {
        values,
        right,
        left: Some(left),
    })
}

/// Eigenvalue-spread seminorm of a Hermitian operator: lambda_max - lambda_min.
pub fn seminorm(a: &CMat) -> Result<f64> {
    let w = eigvals_hermitian(a)?;
    Ok(w[w.len() - 1] - w[0])
}
