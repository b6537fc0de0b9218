//! Superoperators in the vectorized (Liouville-space) representation:
//! coherent and dissipative generators, noise classification, spectra,
//! steady states, and relaxation timescales.
//!
//! Vectorization is column-stacking throughout: vec(A X B) = (B^T kron A) vec(X).

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, commutator, dagger, eig_general, identity, kron, matmul, max_abs, EigenSystem, CMat,
    C64,
};
use crate::state::DensityMatrix;

/// |Re| and |Im| threshold for zero Liouvillian eigenvalues, applied after
/// normalizing the matrix by its largest entry.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

pub const PC_COMMUTATOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperopKind {
    Coherent,
    Dissipative,
    Total,
}

/// A d^2 x d^2 matrix acting on column-stacked d x d operators.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: CMat,
    pub kind: SuperopKind,
}

/// Column-stacked vector form of a matrix.
pub fn vectorize(x: &CMat) -> Array1<C64> {
    let (d, _) = x.dim();
    Array1::from_shape_fn(d * d, |k| x[(k % d, k / d)])
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &Array1<C64>, d: usize) -> CMat {
    CMat::from_shape_fn((d, d), |(i, j)| v[j * d + i])
}

impl Superoperator {
    /// Apply to an operator via the vectorized representation.
    pub fn apply(&self, x: &CMat) -> CMat {
        let v = vectorize(x).insert_axis(ndarray::Axis(1));
        let out = matmul(&self.matrix, &v);
        devectorize(&out.index_axis(ndarray::Axis(1), 0).to_owned(), self.dim)
    }

    /// Sum of two superoperators of equal dimension; result is tagged Total.
    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator dims {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(Superoperator {
            dim: self.dim,
            matrix: &self.matrix + &other.matrix,
            kind: SuperopKind::Total,
        })
    }

    pub fn zero(dim: usize, kind: SuperopKind) -> Superoperator {
        Superoperator {
            dim,
            matrix: CMat::zeros((dim * dim, dim * dim)),
            kind,
        }
    }

    /// Max-entry norm of vec(I)^dag L, which vanishes for trace-preserving
    /// generators.
    pub fn trace_preservation_defect(&self) -> f64 {
        let vid = vectorize(&identity(self.dim));
        let mut worst = 0.0f64;
        for col in 0..self.matrix.ncols() {
            let s: C64 = vid
                .iter()
                .zip(self.matrix.column(col).iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            worst = worst.max(s.norm());
        }
        worst
    }
}

/// Coherent generator -i[H, .] as -i(I kron H - H^T kron I).
pub fn coherent_superoperator(h: &CMat) -> Result<Superoperator> {
    if !linalg::is_hermitian(h, linalg::HERMITICITY_TOL) {
        return Err(Error::NonHermitian {
            dev: linalg::hermiticity_deviation(h),
            tol: linalg::HERMITICITY_TOL,
        });
    }
    let d = h.nrows();
    let m = (kron(&identity(d), h) - kron(&h.t().to_owned(), &identity(d)))
        .mapv(|z| z * c(0.0, -1.0));
    Ok(Superoperator {
        dim: d,
        matrix: m,
        kind: SuperopKind::Coherent,
    })
}

/// Dissipative generator
/// sum_k gamma_k [G_k . G_k^dag - (1/2){G_k^dag G_k, .}] in vectorized form.
pub fn dissipator(jumps: &[CMat], rates: &[f64]) -> Result<Superoperator> {
    if jumps.len() != rates.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} jump operators vs {} rates",
            jumps.len(),
            rates.len()
        )));
    }
    if jumps.is_empty() {
        return Err(Error::InvalidParameter("empty jump operator list".into()));
    }
    let d = jumps[0].nrows();
    let id = identity(d);
    let mut m = CMat::zeros((d * d, d * d));
    for (g, &rate) in jumps.iter().zip(rates.iter()) {
        if rate < 0.0 {
            return Err(Error::NegativeRate(rate));
        }
        if g.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "jump operator is {}x{}, expected {d}x{d}",
                g.nrows(),
                g.ncols()
            )));
        }
        let gdg = matmul(&dagger(g), g);
        let sandwich = kron(&g.mapv(|z| z.conj()), g);
        let left = kron(&id, &gdg);
        let right = kron(&gdg.t().to_owned(), &id);
        m = m + (sandwich - (left + right).mapv(|z| z * 0.5)).mapv(|z| z * rate);
    }
    Ok(Superoperator {
        dim: d,
        matrix: m,
        kind: SuperopKind::Dissipative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseTag {
    PhaseCovariant,
    NonPhaseCovariant,
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseClass {
    pub tag: NoiseTag,
    pub commutator_norm: f64,
}

/// Classify noise by whether the dissipative superoperator commutes with
/// the coherent one generated by `h`.
pub fn classify_noise(h: &CMat, diss: &Superoperator) -> Result<NoiseClass> {
    let coh = coherent_superoperator(h)?;
    if coh.dim != diss.dim {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian dim {} vs dissipator dim {}",
            coh.dim, diss.dim
        )));
    }
    let norm = max_abs(&commutator(&coh.matrix, &diss.matrix));
    let tag = if norm <= PC_COMMUTATOR_TOL {
        NoiseTag::PhaseCovariant
    } else {
        NoiseTag::NonPhaseCovariant
    };
    Ok(NoiseClass {
        tag,
        commutator_norm: norm,
    })
}

/// Commutator max-entry norm of two superoperators (used by the factorized
/// propagators to enforce their preconditions).
pub fn superop_commutator_norm(a: &Superoperator, b: &Superoperator) -> f64 {
    max_abs(&commutator(&a.matrix, &b.matrix))
}

/// Full spectrum, eigenvalues sorted by descending real part.
pub fn spectrum(total: &Superoperator) -> Result<EigenSystem> {
    eig_general(&total.matrix)
}

#[derive(Debug, Clone)]
pub struct SteadyStateReport {
    pub zero_eigenvalue_count: usize,
    pub steady_states: Vec<DensityMatrix>,
    /// Set when the kernel could not be turned into valid density matrices;
    /// `raw_kernel` then carries the unprocessed basis.
    pub raw_kernel_flag: bool,
    pub raw_kernel: Vec<CMat>,
    pub relaxation_rate: f64,
    pub t_sts: f64,
}

fn min_eig(m: &CMat) -> Result<f64> {
    Ok(linalg::eigvals_hermitian(m)?[0])
}

/// Minimum eigenvalue of rho0 + s*delta; concave in s for Hermitian inputs.
fn family_min_eig(rho0: &CMat, delta: &CMat, s: f64) -> Result<f64> {
    min_eig(&(rho0 + &delta.mapv(|z| z * s)))
}

/// Locate the s maximizing the (concave) minimum eigenvalue by golden-section
/// search over a wide bracket.
fn most_positive_mix(rho0: &CMat, delta: &CMat) -> Result<f64> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-1e3f64, 1e3f64);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = family_min_eig(rho0, delta, x1)?;
    let mut f2 = family_min_eig(rho0, delta, x2)?;
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = family_min_eig(rho0, delta, x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = family_min_eig(rho0, delta, x1)?;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Walk from an interior PSD point to the positivity boundary in the given
/// direction (sign) by bisection.
fn boundary_state(rho0: &CMat, delta: &CMat, start: f64, sign: f64) -> Result<CMat> {
    let mut step = 1.0f64;
    let mut hi = start + sign * step;
    let mut grown = 0;
    while family_min_eig(rho0, delta, hi)? > 0.0 && grown < 60 {
        step *= 2.0;
        hi = start + sign * step;
        grown += 1;
    }
    let mut lo = start;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if family_min_eig(rho0, delta, mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < 1e-13 {
            break;
        }
    }
    Ok(rho0 + &delta.mapv(|z| z * lo))
}

/// Kernel extraction, steady-state density matrices, and relaxation
/// timescale from the Liouvillian spectrum.
pub fn steady_report(total: &Superoperator) -> Result<SteadyStateReport> {
    let scale = max_abs(&total.matrix).max(f64::MIN_POSITIVE);
    let es = spectrum(total)?;
    let d = total.dim;
    let tol = ZERO_EIGENVALUE_TOL;
    let zero_idx: Vec<usize> = es
        .values
        .iter()
        .enumerate()
        .filter(|(_, z)| (z.re / scale).abs() <= tol && (z.im / scale).abs() <= tol)
        .map(|(i, _)| i)
        .collect();
    let zero_count = zero_idx.len();

    // slowest nonzero mode sets the relaxation timescale
    let relaxation_rate = es
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| !zero_idx.contains(i))
        .map(|(_, z)| z.re.abs())
        .fold(f64::INFINITY, f64::min);
    let t_sts = 1.0 / relaxation_rate;

    // hermitized, trace-normalized kernel representatives
    let mut kernel: Vec<CMat> = zero_idx
        .iter()
        .map(|&i| {
            let m = devectorize(&es.right.column(i).to_owned(), d);
            (&m + &dagger(&m)).mapv(|z| z * 0.5)
        })
        .collect();

    let mut steady_states = Vec::new();
    let mut raw_flag = false;
    match zero_count {
        0 => {}
        1 => {
            let m = &kernel[0];
            let tr = linalg::trace(m).re;
            if tr.abs() < 1e-12 {
                raw_flag = true;
            } else {
                let rho = m.mapv(|z| z / tr);
                match DensityMatrix::new(rho) {
                    Ok(s) => steady_states.push(s),
                    Err(_) => raw_flag = true,
                }
            }
        }
        2 => {
            // one traceful representative plus a traceless direction; the two
            // extremal steady states sit on the positivity boundary of the
            // segment rho0 + s*delta
            let tr0 = linalg::trace(&kernel[0]).re;
            let tr1 = linalg::trace(&kernel[1]).re;
            let (mut base, mut other) = if tr0.abs() >= tr1.abs() {
                (kernel[0].clone(), kernel[1].clone())
            } else {
                (kernel[1].clone(), kernel[0].clone())
            };
            let trb = linalg::trace(&base).re;
            if trb.abs() < 1e-12 {
                raw_flag = true;
            } else {
                base = base.mapv(|z| z / trb);
                let tro = linalg::trace(&other).re;
                other = &other - &base.mapv(|z| z * tro);
                let onorm = max_abs(&other).max(f64::MIN_POSITIVE);
                other = other.mapv(|z| z / onorm);
                let center = most_positive_mix(&base, &other)?;
                if family_min_eig(&base, &other, center)? < -1e-12 {
                    raw_flag = true;
                } else {
                    let plus = boundary_state(&base, &other, center, 1.0)?;
                    let minus = boundary_state(&base, &other, center, -1.0)?;
                    for m in [plus, minus] {
                        match DensityMatrix::new(m) {
                            Ok(s) => steady_states.push(s),
                            Err(_) => raw_flag = true,
                        }
                    }
                }
            }
        }
        _ => {
            // larger kernels are reported raw
            raw_flag = true;
        }
    }
    if raw_flag {
        steady_states.clear();
    } else {
        kernel.clear();
    }
    Ok(SteadyStateReport {
        zero_eigenvalue_count: zero_count,
        steady_states,
        raw_kernel_flag: raw_flag,
        raw_kernel: kernel,
        relaxation_rate,
        t_sts,
    })
}

/// Biorthogonal projection weights Tr[chi_i^L^dag rho0] of an initial state
/// onto the zero modes. The projection rule onto a degenerate kernel is an
/// interpretation choice, not a closed formula of the model.
pub fn kernel_weights(total: &Superoperator, rho0: &DensityMatrix) -> Result<Vec<C64>> {
    let scale = max_abs(&total.matrix).max(f64::MIN_POSITIVE);
    let es = spectrum(total)?;
    let left = es.left.as_ref().expect("general eigensystem has left vectors");
    let v0 = vectorize(rho0.matrix());
    let mut out = Vec::new();
    for (i, z) in es.values.iter().enumerate() {
        if (z.re / scale).abs() <= ZERO_EIGENVALUE_TOL && (z.im / scale).abs() <= ZERO_EIGENVALUE_TOL
        {
            let w: C64 = left
                .column(i)
                .iter()
                .zip(v0.iter())
                .map(|(l, r)| l.conj() * r)
                .sum();
            out.push(w);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sigma_x, sigma_z};

    fn jump(alpha: f64) -> CMat {
        sigma_x().mapv(|z| z * alpha.cos()) + sigma_z().mapv(|z| z * alpha.sin())
    }

    fn e_g_coherence() -> CMat {
        // |e><g|
        crate::linalg::sigma_plus()
    }

    #[test]
    fn coherent_action_is_commutator() {
        let h = sigma_z().mapv(|z| z * 0.1);
        let sop = coherent_superoperator(&h).unwrap();
        // on |e><g|: -i[B sz, |e><g|] = -2iB |e><g|
        let out = sop.apply(&e_g_coherence());
        let expect = e_g_coherence().mapv(|z| z * c(0.0, -0.2));
        assert!(linalg::max_abs_diff(&out, &expect) < 1e-13);
    }

    #[test]
    fn coherent_zero_hamiltonian() {
        let sop = coherent_superoperator(&CMat::zeros((2, 2))).unwrap();
        assert_eq!(max_abs(&sop.matrix), 0.0);
    }

    #[test]
    fn coherent_matches_direct_commutator() {
        let vartheta = std::f64::consts::PI / 3.0;
        let b = 0.1;
        let h = sigma_x().mapv(|z| z * (b * vartheta.cos()))
            + sigma_z().mapv(|z| z * (b * vartheta.sin()));
        let sop = coherent_superoperator(&h).unwrap();
        let x = ndarray::array![
            [c(0.3, 0.0), c(0.2, -0.4)],
            [c(0.2, 0.4), c(0.7, 0.0)]
        ];
        let direct = commutator(&h, &x).mapv(|z| z * c(0.0, -1.0));
        assert!(linalg::max_abs_diff(&sop.apply(&x), &direct) < 1e-12);
    }

    #[test]
    fn dephasing_dissipator_action() {
        let sop = dissipator(&[sigma_z()], &[1.0]).unwrap();
        let out = sop.apply(&e_g_coherence());
        let expect = e_g_coherence().mapv(|z| z * -2.0);
        assert!(linalg::max_abs_diff(&out, &expect) < 1e-13);
    }

    #[test]
    fn dissipator_matches_direct_formula() {
        let g = jump(0.7);
        let gamma = 0.3;
        let sop = dissipator(&[g.clone()], &[gamma]).unwrap();
        let x = ndarray::array![
            [c(0.4, 0.0), c(0.1, 0.2)],
            [c(0.1, -0.2), c(0.6, 0.0)]
        ];
        let gd = dagger(&g);
        let direct = (matmul(&matmul(&g, &x), &gd)
            - linalg::anticommutator(&matmul(&gd, &g), &x).mapv(|z| z * 0.5))
        .mapv(|z| z * gamma);
        assert!(linalg::max_abs_diff(&sop.apply(&x), &direct) < 1e-12);
    }

    #[test]
    fn dissipator_rejects_negative_rate() {
        assert!(matches!(
            dissipator(&[sigma_z()], &[-0.1]),
            Err(Error::NegativeRate(_))
        ));
    }

    #[test]
    fn classify_scenario_boundaries() {
        let h = sigma_z().mapv(|z| z * 0.1);
        let pc = dissipator(&[sigma_z()], &[0.2]).unwrap();
        assert_eq!(
            classify_noise(&h, &pc).unwrap().tag,
            NoiseTag::PhaseCovariant
        );
        let npc = dissipator(&[jump(std::f64::consts::FRAC_PI_4)], &[0.2]).unwrap();
        assert_eq!(
            classify_noise(&h, &npc).unwrap().tag,
            NoiseTag::NonPhaseCovariant
        );
    }

    #[test]
    fn trace_preservation() {
        let h = jump(0.4).mapv(|z| z * 0.1);
        let coh = coherent_superoperator(&h).unwrap();
        let dis = dissipator(&[jump(1.1)], &[0.3]).unwrap();
        let total = coh.add(&dis).unwrap();
        assert!(total.trace_preservation_defect() < 1e-10);
        assert!(dis.trace_preservation_defect() < 1e-10);
    }

    #[test]
    fn dephasing_spectrum_analytic() {
        // H = B sz, G = sz: eigenvalues {0, 0, -2g +/- 2iB}
        let b = 0.1;
        let g = 0.2;
        let coh = coherent_superoperator(&sigma_z().mapv(|z| z * b)).unwrap();
        let dis = dissipator(&[sigma_z()], &[g]).unwrap();
        let total = coh.add(&dis).unwrap();
        let es = spectrum(&total).unwrap();
        let mut vals = es.values.clone();
        vals.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        assert!((vals[0] - c(-2.0 * g, -2.0 * b)).norm() < 1e-10);
        assert!((vals[1] - c(-2.0 * g, 2.0 * b)).norm() < 1e-10);
        assert!(vals[2].norm() < 1e-10);
        assert!(vals[3].norm() < 1e-10);
        // sorted ordering puts the zero modes first
        assert!(es.values[0].re.abs() < 1e-9);
    }

    #[test]
    fn unique_steady_state_off_critical() {
        let h = sigma_x().mapv(|z| z * (0.1 * (0.9f64).cos()))
            + sigma_z().mapv(|z| z * (0.1 * (0.9f64).sin()));
        let coh = coherent_superoperator(&h).unwrap();
        let dis = dissipator(&[jump(0.3)], &[0.2]).unwrap();
        let total = coh.add(&dis).unwrap();
        let report = steady_report(&total).unwrap();
        assert_eq!(report.zero_eigenvalue_count, 1);
        assert_eq!(report.steady_states.len(), 1);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(report.steady_states[0].max_abs_diff(&mixed) < 1e-8);
        assert!(report.t_sts.is_finite());
    }

    #[test]
    fn degenerate_kernel_at_matched_angles() {
        // vartheta = alpha: two zero modes; extremal states match the
        // dephasing fixed points with off-diagonal cos(vartheta)/2
        let vartheta = std::f64::consts::PI / 3.0;
        let h = sigma_x().mapv(|z| z * (0.1 * vartheta.cos()))
            + sigma_z().mapv(|z| z * (0.1 * vartheta.sin()));
        let coh = coherent_superoperator(&h).unwrap();
        let dis = dissipator(&[jump(vartheta)], &[0.2]).unwrap();
        let total = coh.add(&dis).unwrap();
        let report = steady_report(&total).unwrap();
        assert_eq!(report.zero_eigenvalue_count, 2);
        assert_eq!(report.steady_states.len(), 2);
        let off = vartheta.cos() / 2.0;
        let mut found = [false, false];
        for s in &report.steady_states {
            let m = s.matrix();
            if (m[(0, 1)].re - off).abs() < 1e-6 {
                found[0] = true;
            }
            if (m[(0, 1)].re + off).abs() < 1e-6 {
                found[1] = true;
            }
        }
        assert!(found[0] && found[1], "extremal states should carry +/- cos(v)/2 coherence");
    }
}
