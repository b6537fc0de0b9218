//! Property tests for the algebraic invariants of the kernel and the
//! physics layers.

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

use qmetrolab::dynamics::propagate_exact;
use qmetrolab::linalg::{
    c, dagger, eig_general, identity, matexp, matmul, max_abs, max_abs_diff, seminorm, CMat,
};
use qmetrolab::liouville::{classify_noise, NoiseTag};
use qmetrolab::models::{initial_product_state, SpinModel};
use qmetrolab::qfi::{qfi_by_method, qfi_qubit_closed, qfi_sld, QfiMethod};
use qmetrolab::runner::{qfi_point, InitialKind};
use qmetrolab::state::DensityMatrix;

fn hermitian_strategy(d: usize) -> impl Strategy<Value = CMat> {
    proptest::collection::vec(-1.0f64..1.0, d * d * 2).prop_map(move |v| {
        let mut a = CMat::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                a[(i, j)] = c(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]);
            }
        }
        let h = (&a + &dagger(&a)).mapv(|z| z * 0.5);
        h
    })
}

fn complex_matrix_strategy(d: usize) -> impl Strategy<Value = CMat> {
    proptest::collection::vec(-1.0f64..1.0, d * d * 2).prop_map(move |v| {
        let mut a = CMat::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                a[(i, j)] = c(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]);
            }
        }
        a
    })
}

fn model_strategy() -> impl Strategy<Value = (SpinModel, f64, f64)> {
    (
        0.05f64..0.3,
        0.0f64..std::f64::consts::PI,
        0.0f64..std::f64::consts::PI,
        0.0f64..0.3,
        0.1f64..3.0,
        0.0f64..std::f64::consts::PI,
    )
        .prop_map(|(b, vt, a, g, t, beta)| {
            (SpinModel::new(1, b, vt, a, g).unwrap(), t, beta)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn seminorm_triangle_and_scaling(a in hermitian_strategy(3), b in hermitian_strategy(3), s in -3.0f64..3.0) {
        let sa = seminorm(&a).unwrap();
        let sb = seminorm(&b).unwrap();
        let sum = seminorm(&(&a + &b)).unwrap();
        prop_assert!(sum <= sa + sb + 1e-10);
        let scaled = seminorm(&a.mapv(|z| z * s)).unwrap();
        prop_assert!((scaled - s.abs() * sa).abs() < 1e-10);
        // shifting by the identity never changes the spread
        let shifted = seminorm(&(&a + &identity(3).mapv(|z| z * s))).unwrap();
        prop_assert!((shifted - sa).abs() < 1e-9);
    }

    #[test]
    fn matexp_inverse(a in complex_matrix_strategy(4)) {
        let e = matexp(&a).unwrap();
        let em = matexp(&a.mapv(|z| -z)).unwrap();
        let prod = matmul(&e, &em);
        prop_assert!(max_abs_diff(&prod, &identity(4)) < 1e-12);
    }

    #[test]
    fn eig_general_reconstructs(a in complex_matrix_strategy(4)) {
        // skip the measure-zero defective cases the solver rejects
        if let Ok(es) = eig_general(&a) {
            for (k, &lam) in es.values.iter().enumerate() {
                let v = es.right.column(k);
                let mut worst = 0.0f64;
                for i in 0..4 {
                    let mut av = c(0.0, 0.0);
                    for j in 0..4 {
                        av += a[(i, j)] * v[j];
                    }
                    worst = worst.max((av - lam * v[i]).norm());
                }
                prop_assert!(worst < 1e-9);
            }
            // left and right eigenvectors are biorthonormal
            let left = es.left.as_ref().unwrap();
            let overlap = matmul(&dagger(left), &es.right);
            prop_assert!(max_abs_diff(&overlap, &identity(4)) < 1e-9);
        }
    }

    #[test]
    fn evolution_preserves_state_structure((m, t, beta) in model_strategy()) {
        let total = m.liouvillian().unwrap();
        let rho0 = initial_product_state(1, beta);
        let rho = propagate_exact(&total, &rho0, t).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(rho.min_eigenvalue().unwrap() > -1e-9);
        prop_assert!(rho.purity() <= 1.0 + 1e-10);
    }

    #[test]
    fn pc_classification_boundary(vt in 0.1f64..3.0, delta in 1e-3f64..0.5, g in 0.01f64..0.3) {
        let matched = SpinModel::new(1, 0.1, vt, vt, g).unwrap();
        let cls = classify_noise(&matched.hamiltonian(), &matched.dissipative_part().unwrap()).unwrap();
        prop_assert_eq!(cls.tag, NoiseTag::PhaseCovariant);
        let off = SpinModel::new(1, 0.1, vt, vt - delta, g).unwrap();
        let cls = classify_noise(&off.hamiltonian(), &off.dissipative_part().unwrap()).unwrap();
        prop_assert_eq!(cls.tag, NoiseTag::NonPhaseCovariant);
        // the matched case also commutes when alpha is mirrored through pi
        let mirrored = SpinModel::new(1, 0.1, vt, std::f64::consts::PI + vt, g).unwrap();
        let cls = classify_noise(&mirrored.hamiltonian(), &mirrored.dissipative_part().unwrap()).unwrap();
        prop_assert_eq!(cls.tag, NoiseTag::PhaseCovariant);
    }

    #[test]
    fn qfi_alpha_mirror_symmetry(a in 0.05f64..1.5, g in 0.02f64..0.2, t in 1.0f64..20.0) {
        use std::f64::consts::{FRAC_PI_2, PI};
        use qmetrolab::qfi::ParamTag;
        let m1 = SpinModel::new(1, 0.1, FRAC_PI_2, a, g).unwrap();
        let m2 = SpinModel::new(1, 0.1, FRAC_PI_2, PI - a, g).unwrap();
        let f1 = qfi_point(&m1, InitialKind::Product, PI, ParamTag::B, t, QfiMethod::Sld).unwrap();
        let f2 = qfi_point(&m2, InitialKind::Product, PI, ParamTag::B, t, QfiMethod::Sld).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-8 * f1.abs().max(1.0));
    }

    #[test]
    fn qfi_methods_agree(rx in -0.9f64..0.9, ry in -0.9f64..0.9, rz in -0.9f64..0.9,
                         dx in -1.0f64..1.0, dy in -1.0f64..1.0, dz in -1.0f64..1.0) {
        let n = (rx * rx + ry * ry + rz * rz).sqrt();
        prop_assume!(n < 0.95);
        let rho = DensityMatrix::from_bloch_vector([rx, ry, rz]).unwrap();
        let drho = ndarray::array![
            [c(dz / 2.0, 0.0), c(dx / 2.0, -dy / 2.0)],
            [c(dx / 2.0, dy / 2.0), c(-dz / 2.0, 0.0)]
        ];
        let f1 = qfi_sld(&rho, &drho).unwrap();
        let (f2, _) = qfi_qubit_closed(&rho, &drho).unwrap();
        let f3 = qfi_by_method(&rho, &drho, QfiMethod::Bloch).unwrap();
        let scale = f1.abs().max(1e-6);
        prop_assert!((f1 - f2).abs() / scale < 1e-7);
        prop_assert!((f1 - f3).abs() / scale < 1e-7);
    }

    #[test]
    fn dissipator_spectrum_in_left_half_plane((m, _t, _b) in model_strategy()) {
        let total = m.liouvillian().unwrap();
        let es = qmetrolab::liouville::spectrum(&total).unwrap();
        for z in &es.values {
            prop_assert!(z.re < 1e-9);
        }
    }
}

#[test]
fn matexp_large_block() {
    // 16x16 case exercising the scaling-and-squaring path
    let d = 16;
    let a = Array2::from_shape_fn((d, d), |(i, j)| {
        Complex64::new(
            ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.5,
            ((i * 7 + j * 29) % 11) as f64 / 11.0 - 0.5,
        )
    });
    let e = matexp(&a).unwrap();
    let em = matexp(&a.mapv(|z| -z)).unwrap();
    assert!(max_abs_diff(&matmul(&e, &em), &identity(d)) < 1e-11);
    assert!(max_abs(&e) > 0.0);
}
