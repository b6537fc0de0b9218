//! Thin safe wrappers over the handful of LAPACK/BLAS routines the crate
//! needs. Buffers are converted between ndarray's row-major layout and
//! LAPACK's column-major convention at the boundary.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Array2<C64>;

// Fortran BLAS; liblapack pulls in the reference BLAS at link time.
extern "C" {
    fn zgemm_(
        transa: *const i8,
        transb: *const i8,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        alpha: *const C64,
        a: *const C64,
        lda: *const i32,
        b: *const C64,
        ldb: *const i32,
        beta: *const C64,
        c: *mut C64,
        ldc: *const i32,
    );
}

fn to_col_major(a: &CMat) -> Vec<C64> {
    let (rows, cols) = a.dim();
    let mut out = Vec::with_capacity(rows * cols);
    for j in 0..cols {
        for i in 0..rows {
            out.push(a[(i, j)]);
        }
    }
    out
}

fn from_col_major(v: &[C64], rows: usize, cols: usize) -> CMat {
    let mut out = CMat::zeros((rows, cols));
    for j in 0..cols {
        for i in 0..rows {
            out[(i, j)] = v[j * rows + i];
        }
    }
    out
}

/// Dense complex matrix product via `zgemm`.
///
/// Row-major inputs are fed to the column-major kernel as transposes:
/// C = A·B is computed as Cᵀ = Bᵀ·Aᵀ.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let (m, ka) = a.dim();
    let (kb, n) = b.dim();
    assert_eq!(ka, kb, "matmul dimension mismatch: {m}x{ka} * {kb}x{n}");
    if m == 0 || n == 0 || ka == 0 {
        return CMat::zeros((m, n));
    }
    let mut c = vec![C64::new(0.0, 0.0); m * n];
    let (mm, nn, kk) = (n as i32, m as i32, ka as i32);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let a_std = a.as_standard_layout();
    let b_std = b.as_standard_layout();
    let a_slice = a_std.as_slice().expect("contiguous lhs");
    let b_slice = b_std.as_slice().expect("contiguous rhs");
    unsafe {
        zgemm_(
            &(b'N' as i8),
            &(b'N' as i8),
            &mm,
            &nn,
            &kk,
            &one,
            b_slice.as_ptr(),
            &(n as i32),
            a_slice.as_ptr(),
            &(ka as i32),
            &zero,
            c.as_mut_ptr(),
            &(n as i32),
        );
    }
    Array2::from_shape_vec((m, n), c).expect("zgemm output shape")
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending,
/// eigenvectors orthonormal in the columns of the returned matrix.
pub fn zheev(a: &CMat) -> Result<(Array1<f64>, CMat)> {
    let n = a.nrows();
    let ni = n as i32;
    let mut buf = to_col_major(a);
    let mut w = vec![0f64; n];
    let mut rwork = vec![0f64; (3 * n).max(1)];
    let lwork = (4 * n).max(2) as i32;
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    let mut info = 0i32;
    unsafe {
        lapack_sys::zheev_(
            &(b'V' as i8),
            &(b'L' as i8),
            &ni,
            buf.as_mut_ptr() as *mut _,
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheev", info });
    }
    Ok((Array1::from_vec(w), from_col_major(&buf, n, n)))
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
/// Columns of the returned matrix are unit-norm eigenvectors.
pub fn zgeev(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let n = a.nrows();
    let ni = n as i32;
    let mut buf = to_col_major(a);
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut vr = vec![C64::new(0.0, 0.0); n * n];
    let mut vl = vec![C64::new(0.0, 0.0); 1];
    let lwork = (4 * n).max(2) as i32;
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    let mut rwork = vec![0f64; (2 * n).max(1)];
    let mut info = 0i32;
    unsafe {
        lapack_sys::zgeev_(
            &(b'N' as i8),
            &(b'V' as i8),
            &ni,
            buf.as_mut_ptr() as *mut _,
            &ni,
            w.as_mut_ptr() as *mut _,
            vl.as_mut_ptr() as *mut _,
            &1,
            vr.as_mut_ptr() as *mut _,
            &ni,
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zgeev", info });
    }
    Ok((w, from_col_major(&vr, n, n)))
}

/// Solve A·X = B for X with a single LU factorization.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let nrhs = b.ncols();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve: {}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let mut lu = to_col_major(a);
    let mut rhs = to_col_major(b);
    let mut ipiv = vec![0i32; n];
    let mut info = 0i32;
    unsafe {
        lapack_sys::zgesv_(
            &(n as i32),
            &(nrhs as i32),
            lu.as_mut_ptr() as *mut _,
            &(n as i32),
            ipiv.as_mut_ptr(),
            rhs.as_mut_ptr() as *mut _,
            &(n as i32),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zgesv", info });
    }
    Ok(from_col_major(&rhs, n, nrhs))
}

/// Full SVD of a real matrix: A = U·diag(s)·Vᵀ.
pub fn dgesvd(a: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (m, n) = a.dim();
    let k = m.min(n);
    // column-major copy
    let mut buf = Vec::with_capacity(m * n);
    for j in 0..n {
        for i in 0..m {
            buf.push(a[(i, j)]);
        }
    }
    let mut s = vec![0f64; k];
    let mut u = vec![0f64; m * m];
    let mut vt = vec![0f64; n * n];
    let lwork = (5 * (m + n)).max(8) as i32;
    let mut work = vec![0f64; lwork as usize];
    let mut info = 0i32;
    unsafe {
        lapack_sys::dgesvd_(
            &(b'A' as i8),
            &(b'A' as i8),
            &(m as i32),
            &(n as i32),
            buf.as_mut_ptr(),
            &(m as i32),
            s.as_mut_ptr(),
            u.as_mut_ptr(),
            &(m as i32),
            vt.as_mut_ptr(),
            &(n as i32),
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dgesvd", info });
    }
    let mut um = Array2::zeros((m, m));
    for j in 0..m {
        for i in 0..m {
            um[(i, j)] = u[j * m + i];
        }
    }
    let mut vtm = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            vtm[(i, j)] = vt[j * n + i];
        }
    }
    Ok((um, Array1::from_vec(s), vtm))
}
