//! Quantum Fisher information by three independent routes (spectral SLD
//! formula, qubit closed form, Bloch-vector form), finite-difference state
//! derivatives with Richardson control, channel maxima, and the
//! seminorm-integral upper bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lapack;
use crate::linalg::{
    dagger, eig_hermitian, hermiticity_deviation, identity, matmul, max_abs, seminorm, trace,
    CMat,
};
use crate::state::DensityMatrix;

/// Eigenvalue-sum floor excluding null-subspace 0/0 terms in the SLD sum.
pub const SLD_EIGENVALUE_FLOOR: f64 = 1e-12;
/// Below this determinant a qubit state is routed to the pure-state limit.
pub const PURE_DET_THRESHOLD: f64 = 1e-14;
/// Relative Richardson-error budget for finite-difference derivatives.
pub const DERIVATIVE_ERROR_LIMIT: f64 = 1e-5;
/// Negative QFI round-off clamped to zero within this margin.
pub const QFI_CLAMP_TOL: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamTag {
    #[serde(rename = "B")]
    B,
    Beta,
    Vartheta,
}

impl std::fmt::Display for ParamTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamTag::B => write!(f, "B"),
            ParamTag::Beta => write!(f, "beta"),
            ParamTag::Vartheta => write!(f, "vartheta"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QfiMethod {
    Sld,
    QubitClosed,
    Bloch,
    Analytic,
}

impl std::fmt::Display for QfiMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QfiMethod::Sld => write!(f, "sld"),
            QfiMethod::QubitClosed => write!(f, "qubit_closed"),
            QfiMethod::Bloch => write!(f, "bloch"),
            QfiMethod::Analytic => write!(f, "analytic"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QfiRecord {
    pub parameter: ParamTag,
    pub time: f64,
    pub value: f64,
    pub method: QfiMethod,
}

impl QfiRecord {
    /// Clamp small negative round-off; larger negatives are a genuine bug.
    pub fn new(parameter: ParamTag, time: f64, value: f64, method: QfiMethod) -> Result<Self> {
        if value < QFI_CLAMP_TOL {
            return Err(Error::NumericalFailure(format!(
                "QFI value {value:.3e} below clamp tolerance"
            )));
        }
        Ok(Self {
            parameter,
            time,
            value: value.max(0.0),
            method,
        })
    }
}

/// Finite-difference state derivative with one Richardson level.
#[derive(Debug, Clone)]
pub struct DerivativeEstimate {
    /// Hermitian, traceless d(rho)/d(theta).
    pub d_rho: CMat,
    pub step: f64,
    pub richardson_error: f64,
}

/// Default step policy for smooth (entire) parameter dependence.
pub fn default_fd_step(theta: f64) -> f64 {
    1e-4 * theta.abs().max(1.0)
}

fn central_difference(
    family: &dyn Fn(f64) -> Result<DensityMatrix>,
    theta: f64,
    h: f64,
) -> Result<CMat> {
    let plus = family(theta + h)?;
    let minus = family(theta - h)?;
    Ok((plus.matrix() - minus.matrix()).mapv(|z| z / (2.0 * h)))
}

/// Central-difference d(rho)/d(theta) at step h with a second evaluation at
/// h/2 for Richardson extrapolation; the result is Hermitized and projected
/// onto the traceless subspace.
pub fn dstate_fd(
    family: &dyn Fn(f64) -> Result<DensityMatrix>,
    theta: f64,
    h: f64,
) -> Result<DerivativeEstimate> {
    if h <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step {h} must be positive"
        )));
    }
    let coarse = central_difference(family, theta, h)?;
    let fine = central_difference(family, theta, h / 2.0)?;
    // eliminate the O(h^2) term
    let extrap = (&fine.mapv(|z| z * 4.0) - &coarse).mapv(|z| z / 3.0);
    let err = crate::linalg::max_abs_diff(&extrap, &fine);
    let norm = max_abs(&extrap);
    // the relative test is meaningless for a vanishing derivative, where
    // both sides are pure round-off; an absolute floor covers that case
    let limit = (DERIVATIVE_ERROR_LIMIT * norm).max(1e-9);
    if err > limit {
        return Err(Error::UnstableDerivative { err, limit });
    }
    let herm = (&extrap + &dagger(&extrap)).mapv(|z| z * 0.5);
    let d = herm.nrows();
    let tr = trace(&herm);
    let traceless = herm - identity(d).mapv(|z| z * (tr / d as f64));
    Ok(DerivativeEstimate {
        d_rho: traceless,
        step: h,
        richardson_error: err,
    })
}

/// Spectral evaluation of Tr[rho L^2]:
/// sum over eigenpairs of 2 |<i|drho|j>|^2 / (p_i + p_j).
pub fn qfi_sld(rho: &DensityMatrix, drho: &CMat) -> Result<f64> {
    let d = rho.dim();
    if drho.nrows() != d || drho.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "state {d}x{d} vs derivative {}x{}",
            drho.nrows(),
            drho.ncols()
        )));
    }
    let eig = eig_hermitian(rho.matrix())?;
    let v = &eig.right;
    let m = matmul(&dagger(v), &matmul(drho, v));
    let p: Vec<f64> = eig.values.iter().map(|z| z.re.max(0.0)).collect();
    let mut f = 0.0;
    for i in 0..d {
        for j in 0..d {
            let denom = p[i] + p[j];
            if denom > SLD_EIGENVALUE_FLOOR {
                f += 2.0 * m[(i, j)].norm_sqr() / denom;
            }
        }
    }
    Ok(f)
}

/// Basis-independent qubit closed form
/// Tr[(drho)^2] + Tr[(rho drho)^2] / det(rho); pure states (det below the
/// threshold) take the limit 2 Tr[(drho)^2], reported by the flag.
pub fn qfi_qubit_closed(rho: &DensityMatrix, drho: &CMat) -> Result<(f64, bool)> {
    if rho.dim() != 2 || drho.nrows() != 2 || drho.ncols() != 2 {
        return Err(Error::DimensionMismatch(
            "qubit closed form needs 2x2 operands".into(),
        ));
    }
    let d2 = lapack::matmul(drho, drho);
    let t1 = trace(&d2).re;
    let det = rho.det2()?.re;
    if det <= PURE_DET_THRESHOLD {
        return Ok((2.0 * t1, true));
    }
    let rd = lapack::matmul(rho.matrix(), drho);
    let t2 = trace(&lapack::matmul(&rd, &rd)).re;
    Ok((t1 + t2 / det, false))
}

/// Bloch-vector form |dr|^2 + (r.dr)^2 / (1 - |r|^2); on the sphere surface
/// only tangential derivatives are consistent and the first term survives.
pub fn qfi_bloch(r: [f64; 3], dr: [f64; 3]) -> Result<f64> {
    let n2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let dr2 = dr[0] * dr[0] + dr[1] * dr[1] + dr[2] * dr[2];
    let rdr = r[0] * dr[0] + r[1] * dr[1] + r[2] * dr[2];
    if n2 < (1.0 - 1e-12) * (1.0 - 1e-12) {
        Ok(dr2 + rdr * rdr / (1.0 - n2))
    } else if rdr.abs() < 1e-9 {
        Ok(dr2)
    } else {
        Err(Error::InconsistentPureState(rdr))
    }
}

/// Scalar central difference with one Richardson level.
fn scalar_derivative(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |s: f64| (f(x + s) - f(x - s)) / (2.0 * s);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Maximum channel QFI for a rotation family r(vt):
/// (d|R|/dvt)^2 t^2 + 4 (d e_R/dvt)^2 sin^2(|R| t / 2).
pub fn qfi_max_channel(
    family: &dyn Fn(f64) -> [f64; 3],
    vartheta: f64,
    t: f64,
) -> Result<f64> {
    let norm_of = |vt: f64| {
        let r = family(vt);
        (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
    };
    let rmag = norm_of(vartheta);
    if rmag < 1e-14 {
        return Err(Error::InvalidParameter(
            "rotation axis magnitude vanishes; unit vector undefined".into(),
        ));
    }
    let h = default_fd_step(vartheta);
    let dmag = scalar_derivative(&norm_of, vartheta, h);
    let mut de2 = 0.0;
    for k in 0..3 {
        let comp = |vt: f64| {
            let r = family(vt);
            let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            r[k] / n
        };
        de2 += scalar_derivative(&comp, vartheta, h).powi(2);
    }
    Ok(dmag * dmag * t * t + 4.0 * de2 * (rmag * t / 2.0).sin().powi(2))
}

/// Simpson's rule on an odd node count (even interval count).
fn simpson(values: &[f64], span: f64) -> f64 {
    let n = values.len() - 1;
    debug_assert!(n >= 2 && n % 2 == 0);
    let h = span / n as f64;
    let mut s = values[0] + values[n];
    for (k, v) in values.iter().enumerate().take(n).skip(1) {
        s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Channel QFI upper bound [int_0^t seminorm(dH/d(lambda))(s) ds]^2 via
/// composite Simpson on 101 nodes.
pub fn channel_qfi_upper_bound(dh_family: &dyn Fn(f64) -> CMat, t: f64) -> Result<f64> {
    const NODES: usize = 101;
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut vals = Vec::with_capacity(NODES);
    for k in 0..NODES {
        let s = t * k as f64 / (NODES - 1) as f64;
        let dh = dh_family(s);
        let dev = hermiticity_deviation(&dh);
        if dev > crate::linalg::HERMITICITY_TOL {
            return Err(Error::NonHermitian {
                dev,
                tol: crate::linalg::HERMITICITY_TOL,
            });
        }
        vals.push(seminorm(&dh)?);
    }
    let integral = simpson(&vals, t);
    Ok(integral * integral)
}

/// Scenario-1 dephasing analytics: (F_beta, F_B) =
/// (1, 4 sin^2(beta) exp(-4 gamma t) t^2).
pub fn qfi_dephasing_analytic(beta: f64, gamma: f64, t: f64) -> (f64, f64) {
    (
        1.0,
        4.0 * beta.sin().powi(2) * (-4.0 * gamma * t).exp() * t * t,
    )
}

/// Route a (state, derivative) pair through the requested method.
pub fn qfi_by_method(rho: &DensityMatrix, drho: &CMat, method: QfiMethod) -> Result<f64> {
    match method {
        QfiMethod::Sld => qfi_sld(rho, drho),
        QfiMethod::QubitClosed => Ok(qfi_qubit_closed(rho, drho)?.0),
        QfiMethod::Bloch => {
            let r = rho.bloch_vector()?;
            let dr = [
                2.0 * drho[(0, 1)].re,
                -2.0 * drho[(0, 1)].im,
                drho[(0, 0)].re - drho[(1, 1)].re,
            ];
            qfi_bloch(r, dr)
        }
        QfiMethod::Analytic => Err(Error::InvalidParameter(
            "analytic method needs the dephasing scenario entry point".into(),
        )),
    }
}
