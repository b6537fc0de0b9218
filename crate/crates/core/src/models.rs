//! Concrete physical models: the tilted-field spin (optionally N copies with
//! local uniform noise), canonical initial states, and the
//! reaction-coordinate polaron-transform effective Hamiltonian.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::dynamics::propagate_exact;
use crate::error::{Error, Result};
use crate::linalg::{
    c, dagger, identity, kron, matexp, matmul, sigma_x, sigma_z, CMat,
};
use crate::liouville::{coherent_superoperator, dissipator, Superoperator};
use crate::state::DensityMatrix;

pub const MAX_PARTICLES: usize = 4;
/// g_r / Omega_r above this is outside the perturbative window.
pub const RCPT_VALIDITY_RATIO: f64 = 0.3;

/// N identical spins in a tilted field, each coupled to its own bath through
/// the tilted jump operator cos(a) sx + sin(a) sz at uniform rate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpinModel {
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    #[serde(rename = "B")]
    pub b: f64,
    pub vartheta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

/// Kronecker-pad a single-site operator to site `site` of an n-site register.
fn embed(op: &CMat, site: usize, n: usize) -> CMat {
    let mut out = identity(1 << site);
    out = kron(&out, op);
    kron(&out, &identity(1 << (n - site - 1)))
}

impl SpinModel {
    pub fn new(n: usize, b: f64, vartheta: f64, alpha: f64, gamma: f64) -> Result<Self> {
        let m = Self {
            n,
            b,
            vartheta,
            alpha,
            gamma,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.n > MAX_PARTICLES {
            return Err(Error::InvalidParameter(format!(
                "particle count {} outside [1, {MAX_PARTICLES}]",
                self.n
            )));
        }
        if self.b <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "field amplitude {} must be positive",
                self.b
            )));
        }
        if self.gamma < 0.0 {
            return Err(Error::NegativeRate(self.gamma));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Single-site field term B [cos(vt) sx + sin(vt) sz].
    pub fn site_hamiltonian(&self) -> CMat {
        sigma_x().mapv(|z| z * self.b * self.vartheta.cos())
            + sigma_z().mapv(|z| z * self.b * self.vartheta.sin())
    }

    /// Single-site jump operator cos(a) sx + sin(a) sz.
    pub fn site_jump(&self) -> CMat {
        sigma_x().mapv(|z| z * self.alpha.cos()) + sigma_z().mapv(|z| z * self.alpha.sin())
    }

    pub fn hamiltonian(&self) -> CMat {
        let h1 = self.site_hamiltonian();
        let mut h = CMat::zeros((self.dim(), self.dim()));
        for i in 0..self.n {
            h = h + embed(&h1, i, self.n);
        }
        h
    }

    pub fn jump_operators(&self) -> Vec<CMat> {
        let g1 = self.site_jump();
        (0..self.n).map(|i| embed(&g1, i, self.n)).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        vec![self.gamma; self.n]
    }

    pub fn coherent_part(&self) -> Result<Superoperator> {
        coherent_superoperator(&self.hamiltonian())
    }

    pub fn dissipative_part(&self) -> Result<Superoperator> {
        dissipator(&self.jump_operators(), &self.rates())
    }

    pub fn liouvillian(&self) -> Result<Superoperator> {
        Ok(self.coherent_part()?.add(&self.dissipative_part()?)?)
    }

    /// Evolve a state; noiseless models take the unitary path so that sweeps
    /// over N = 4 registers never touch the 256x256 generator.
    pub fn evolve(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if self.gamma == 0.0 {
            let u = matexp(&self.hamiltonian().mapv(|z| z * c(0.0, -t)))?;
            let m = matmul(&matmul(&u, rho0.matrix()), &dagger(&u));
            DensityMatrix::new(m)
        } else {
            propagate_exact(&self.liouvillian()?, rho0, t)
        }
    }
}

/// Pure product state [cos(b/2)|e> + sin(b/2)|g>]^(x)n.
pub fn initial_product_state(n: usize, beta: f64) -> DensityMatrix {
    let single = ndarray::arr1(&[c((beta / 2.0).cos(), 0.0), c((beta / 2.0).sin(), 0.0)]);
    let mut psi = single.clone();
    for _ in 1..n {
        let mut next = Array1::zeros(psi.len() * 2);
        for (i, a) in psi.iter().enumerate() {
            for (j, s) in single.iter().enumerate() {
                next[i * 2 + j] = a * s;
            }
        }
        psi = next;
    }
    DensityMatrix::pure(&psi)
}

/// GHZ state (|e...e> + |g...g>)/sqrt(2).
pub fn initial_ghz_state(n: usize) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "GHZ state needs at least 2 particles".into(),
        ));
    }
    let d = 1 << n;
    let mut psi: Array1<crate::linalg::C64> = Array1::zeros(d);
    let amp = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    psi[0] = amp;
    psi[d - 1] = amp;
    Ok(DensityMatrix::pure(&psi))
}

/// Reaction-coordinate polaron-transform parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RcptParams {
    pub g_r: f64,
    pub omega_r: f64,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
}

impl RcptParams {
    pub fn from_coupling(g_r: f64, omega_r: f64) -> Result<Self> {
        if omega_r <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "reaction-coordinate frequency {omega_r} must be positive"
            )));
        }
        if g_r < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coupling {g_r} must be non-negative"
            )));
        }
        let x = (-2.0 * g_r * g_r / (omega_r * omega_r)).exp();
        Ok(Self {
            g_r,
            omega_r,
            zeta_plus: 0.5 * (1.0 + x),
            zeta_minus: 0.5 * (1.0 - x),
        })
    }

    /// True when g_r / Omega_r exceeds the perturbative window.
    pub fn validity_warning(&self) -> bool {
        self.g_r / self.omega_r > RCPT_VALIDITY_RATIO
    }
}

/// Effective single-spin Hamiltonian after the reaction-coordinate polaron
/// transform:
/// B[z+ cos(vt) + z- cos(2a - vt)] sx + B[z+ sin(vt) + z- sin(2a - vt)] sz.
pub fn rcpt_effective_hamiltonian(b: f64, vartheta: f64, alpha: f64, p: &RcptParams) -> CMat {
    let cx = p.zeta_plus * vartheta.cos() + p.zeta_minus * (2.0 * alpha - vartheta).cos();
    let cz = p.zeta_plus * vartheta.sin() + p.zeta_minus * (2.0 * alpha - vartheta).sin();
    sigma_x().mapv(|z| z * b * cx) + sigma_z().mapv(|z| z * b * cz)
}

/// Rotation-axis vector R' with H_eff = R'.sigma/2.
pub fn rcpt_field_vector(b: f64, vartheta: f64, alpha: f64, p: &RcptParams) -> [f64; 3] {
    let cx = p.zeta_plus * vartheta.cos() + p.zeta_minus * (2.0 * alpha - vartheta).cos();
    let cz = p.zeta_plus * vartheta.sin() + p.zeta_minus * (2.0 * alpha - vartheta).sin();
    [2.0 * b * cx, 0.0, 2.0 * b * cz]
}

/// Reaction-coordinate parameters from a sampled spectral density:
/// Omega_r^2 = int(w^3 J) / int(w J), g_r^2 = int(w J) / Omega_r.
pub fn reaction_coordinate_params(omega: &[f64], j: &[f64]) -> Result<RcptParams> {
    if omega.len() != j.len() || omega.len() < 2 {
        return Err(Error::InvalidParameter(
            "spectral density table needs matching (omega, J) columns, length >= 2".into(),
        ));
    }
    let mut m1 = 0.0f64; // int w J dw
    let mut m3 = 0.0f64; // int w^3 J dw
    for k in 1..omega.len() {
        let (w0, w1) = (omega[k - 1], omega[k]);
        if w1 < w0 || w0 < 0.0 {
            return Err(Error::InvalidParameter(
                "omega grid must be non-negative and ascending".into(),
            ));
        }
        if j[k - 1] < 0.0 || j[k] < 0.0 {
            return Err(Error::InvalidParameter(
                "spectral density must be non-negative".into(),
            ));
        }
        let dw = w1 - w0;
        m1 += 0.5 * dw * (w0 * j[k - 1] + w1 * j[k]);
        m3 += 0.5 * dw * (w0.powi(3) * j[k - 1] + w1.powi(3) * j[k]);
    }
    if m1 <= 0.0 {
        return Err(Error::InvalidParameter(
            "spectral density is identically zero".into(),
        ));
    }
    let omega_r = (m3 / m1).sqrt();
    let g_r = (m1 / omega_r).sqrt();
    RcptParams::from_coupling(g_r, omega_r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigvals_hermitian, max_abs, max_abs_diff};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn single_spin_field_along_z() {
        let m = SpinModel::new(1, 0.1, FRAC_PI_2, 0.0, 0.0).unwrap();
        let h = m.hamiltonian();
        assert!(max_abs_diff(&h, &sigma_z().mapv(|z| z * 0.1)) < 1e-15);
    }

    #[test]
    fn two_spin_spectrum() {
        let m = SpinModel::new(2, 0.1, 0.7, 0.0, 0.0).unwrap();
        let w = eigvals_hermitian(&m.hamiltonian()).unwrap();
        let expect = [-0.2, 0.0, 0.0, 0.2];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn vartheta_zero_is_transverse() {
        let m = SpinModel::new(2, 0.1, 0.0, 0.0, 0.0).unwrap();
        let sum_sx = kron(&sigma_x(), &identity(2)) + kron(&identity(2), &sigma_x());
        assert!(max_abs_diff(&m.hamiltonian(), &sum_sx.mapv(|z| z * 0.1)) < 1e-15);
    }

    #[test]
    fn jump_operators_are_hermitian_involutions() {
        let m = SpinModel::new(3, 0.1, 0.9, 1.2, 0.05).unwrap();
        for g in m.jump_operators() {
            assert!(crate::linalg::hermiticity_deviation(&g) < 1e-15);
            let sq = matmul(&g, &g);
            assert!(max_abs_diff(&sq, &identity(8)) < 1e-14);
        }
    }

    #[test]
    fn liouvillian_trace_preserving() {
        let m = SpinModel::new(2, 0.1, 0.7, 0.4, 0.1).unwrap();
        let l = m.liouvillian().unwrap();
        assert!(l.trace_preservation_defect() < 1e-12);
    }

    #[test]
    fn alpha_mirror_symmetry_at_transverse_field() {
        // alpha -> pi - alpha conjugates the N=1, vartheta=pi/2 generator by
        // sz (x sz on the doubled space), so the dynamics are equivalent
        let a = 0.6;
        let l1 = SpinModel::new(1, 0.1, FRAC_PI_2, a, 0.2)
            .unwrap()
            .liouvillian()
            .unwrap();
        let l2 = SpinModel::new(1, 0.1, FRAC_PI_2, PI - a, 0.2)
            .unwrap()
            .liouvillian()
            .unwrap();
        let s = kron(&sigma_z(), &sigma_z());
        let conj = matmul(&matmul(&s, &l1.matrix), &s);
        assert!(max_abs_diff(&conj, &l2.matrix) < 1e-13);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SpinModel::new(0, 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(SpinModel::new(5, 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(SpinModel::new(1, -0.1, 0.0, 0.0, 0.0).is_err());
        assert!(SpinModel::new(1, 0.1, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn product_state_cases() {
        let excited = initial_product_state(2, 0.0);
        assert!((excited.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
        let plus = initial_product_state(1, FRAC_PI_2);
        let r = plus.bloch_vector().unwrap();
        assert!((r[0] - 1.0).abs() < 1e-14 && r[1].abs() < 1e-14 && r[2].abs() < 1e-14);
        let third = initial_product_state(1, PI / 3.0);
        let expect = ndarray::array![
            [c(0.75, 0.0), c(3f64.sqrt() / 4.0, 0.0)],
            [c(3f64.sqrt() / 4.0, 0.0), c(0.25, 0.0)]
        ];
        assert!(max_abs_diff(third.matrix(), &expect) < 1e-14);
    }

    #[test]
    fn ghz_state_structure() {
        assert!(initial_ghz_state(1).is_err());
        let ghz = initial_ghz_state(2).unwrap();
        assert!((ghz.purity() - 1.0).abs() < 1e-14);
        let m = ghz.matrix();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((m[(i, j)].re - 0.5).abs() < 1e-14);
        }
        assert!(m[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn evolve_unitary_fast_path_matches_liouvillian() {
        let noiseless = SpinModel::new(2, 0.1, 0.8, 0.3, 0.0).unwrap();
        let rho0 = initial_product_state(2, 1.1);
        let fast = noiseless.evolve(&rho0, 4.0).unwrap();
        let total = noiseless.liouvillian().unwrap();
        let slow = propagate_exact(&total, &rho0, 4.0).unwrap();
        assert!(fast.max_abs_diff(&slow) < 1e-10);
    }

    #[test]
    fn rcpt_zeta_bookkeeping() {
        let p = RcptParams::from_coupling(0.2, 1.0).unwrap();
        assert!((p.zeta_plus + p.zeta_minus - 1.0).abs() < 1e-15);
        assert!(p.zeta_minus > 0.0 && p.zeta_minus < 0.5);
        assert!(p.zeta_plus > 0.5 && p.zeta_plus < 1.0);
        assert!(!p.validity_warning());
        assert!(RcptParams::from_coupling(0.5, 1.0).unwrap().validity_warning());
    }

    #[test]
    fn rcpt_zero_coupling_recovers_bare_hamiltonian() {
        let p = RcptParams::from_coupling(0.0, 1.0).unwrap();
        assert!(p.zeta_minus.abs() < 1e-15);
        let h_eff = rcpt_effective_hamiltonian(0.1, 0.9, 0.4, &p);
        let bare = SpinModel::new(1, 0.1, 0.9, 0.4, 0.0).unwrap().hamiltonian();
        assert!(max_abs_diff(&h_eff, &bare) < 1e-14);
    }

    #[test]
    fn rcpt_matches_operator_form() {
        // closed form equals z+ H + z- G H G
        let (b, vt, a) = (0.1, 0.55, 1.3);
        let p = RcptParams::from_coupling(0.25, 1.0).unwrap();
        let closed = rcpt_effective_hamiltonian(b, vt, a, &p);
        let m = SpinModel::new(1, b, vt, a, 0.0).unwrap();
        let (h, g) = (m.hamiltonian(), m.site_jump());
        let ghg = matmul(&matmul(&g, &h), &g);
        let op_form = h.mapv(|z| z * p.zeta_plus) + ghg.mapv(|z| z * p.zeta_minus);
        assert!(max_abs_diff(&closed, &op_form) < 1e-13);
    }

    #[test]
    fn rcpt_matched_angles_keep_direction() {
        let (b, a) = (0.1, 0.8);
        let p = RcptParams::from_coupling(0.2, 1.0).unwrap();
        let h_eff = rcpt_effective_hamiltonian(b, a, a, &p);
        let bare = SpinModel::new(1, b, a, a, 0.0).unwrap().hamiltonian();
        assert!(max_abs_diff(&h_eff, &bare) < 1e-14);
    }

    #[test]
    fn rcpt_field_magnitude() {
        let (b, vt, a) = (0.1, 0.4, 1.1);
        let p = RcptParams::from_coupling(0.3, 1.0).unwrap();
        let r = rcpt_field_vector(b, vt, a, &p);
        let mag = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let expect = 2.0
            * b
            * (p.zeta_plus.powi(2)
                + p.zeta_minus.powi(2)
                + 2.0 * p.zeta_plus * p.zeta_minus * (2.0 * a - 2.0 * vt).cos())
            .sqrt();
        assert!((mag - expect).abs() < 1e-14);
    }

    #[test]
    fn spectral_density_ohmic_moments() {
        // J = eta w exp(-w/wc): Omega_r^2 = Gamma(5)/Gamma(3) wc^2 = 12 wc^2
        let wc = 1.0;
        let n = 4000;
        let wmax = 40.0;
        let omega: Vec<f64> = (0..n).map(|k| wmax * k as f64 / (n - 1) as f64).collect();
        let j: Vec<f64> = omega.iter().map(|w| 0.5 * w * (-w / wc).exp()).collect();
        let p = reaction_coordinate_params(&omega, &j).unwrap();
        assert!((p.omega_r * p.omega_r - 12.0 * wc * wc).abs() < 1e-3);
        // g_r^2 = m1 / Omega_r with m1 = eta Gamma(3) wc^3 = 1
        assert!((p.g_r * p.g_r - 1.0 / p.omega_r).abs() < 1e-3);
    }

    #[test]
    fn spectral_density_rejects_zero() {
        let omega = [0.0, 1.0, 2.0];
        let j = [0.0, 0.0, 0.0];
        assert!(reaction_coordinate_params(&omega, &j).is_err());
    }

    #[test]
    fn narrow_peak_frequency() {
        // point-mass-like J at w0: Omega_r -> w0
        let w0 = 2.0;
        let omega: Vec<f64> = (0..200).map(|k| w0 - 0.01 + 0.0001 * k as f64).collect();
        let j: Vec<f64> = omega
            .iter()
            .map(|w| (-(w - w0).powi(2) / 1e-6).exp())
            .collect();
        let p = reaction_coordinate_params(&omega, &j).unwrap();
        assert!((p.omega_r - w0).abs() < 1e-4);
        let _ = max_abs(&identity(2));
    }
}
