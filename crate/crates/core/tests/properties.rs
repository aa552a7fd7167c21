use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xdyn::dynamics::{
    classify, detect_period, evolve_closed, evolve_oracle, scan, FidelityTrace, TimeGrid,
    STATIONARY_THRESHOLD,
};
use xdyn::fidelity::{fidelity_bell_closed, fidelity_wang, DensityMatrix};
use xdyn::linalg::{eigvals_hermitian, expm, trace_product, ComplexMatrix4, DEFAULT_TOL};
use xdyn::model::{hamiltonian, propagator, spectrum, CouplingParams};
use xdyn::sampling::{random_bell_diagonal, random_xstate};
use xdyn::states::{positivity_by_eigenvalues, positivity_closed_form, XState};

fn coupling() -> impl Strategy<Value = CouplingParams> {
    [-2.0..=2.0f64, -2.0..=2.0f64, -2.0..=2.0f64, -2.0..=2.0f64]
        .prop_map(|[jx, jy, jz, field]| CouplingParams { jx, jy, jz, field })
}

fn matrix() -> impl Strategy<Value = ComplexMatrix4> {
    proptest::array::uniform16((-1.0..1.0f64, -1.0..1.0f64)).prop_map(|e| {
        let mut m = ComplexMatrix4::zeros();
        for (k, (re, im)) in e.into_iter().enumerate() {
            m[(k / 4, k % 4)] = Complex64::new(re, im);
        }
        m
    })
}

fn hermitian() -> impl Strategy<Value = ComplexMatrix4> {
    matrix().prop_map(|m| (m + m.adjoint()).scale_real(0.5))
}

fn xstate() -> impl Strategy<Value = XState> {
    any::<u64>().prop_map(|seed| random_xstate(&mut ChaCha8Rng::seed_from_u64(seed)))
}

fn bell_state() -> impl Strategy<Value = XState> {
    any::<u64>().prop_map(|seed| random_bell_diagonal(&mut ChaCha8Rng::seed_from_u64(seed)))
}

fn evolution(h: &ComplexMatrix4, t: f64) -> ComplexMatrix4 {
    expm(&h.scale(Complex64::new(0.0, -t)), DEFAULT_TOL).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn star_algebra_identities(a in matrix(), b in matrix(), c in matrix()) {
        prop_assert!(((a * b) * c - a * (b * c)).max_norm() < 1e-14);
        prop_assert!((a * (b + c) - (a * b + a * c)).max_norm() < 1e-14);
        prop_assert!(((a * b).adjoint() - b.adjoint() * a.adjoint()).max_norm() < 1e-14);
        prop_assert!((trace_product(&a, &b) - (a * b).trace()).norm() < 1e-14);
        prop_assert!((trace_product(&a, &b) - trace_product(&b, &a)).norm() < 1e-14);
    }

    #[test]
    fn trace_product_of_hermitians_is_real(a in hermitian(), b in hermitian()) {
        prop_assert!(trace_product(&a, &b).im.abs() <= 1e-12);
    }

    #[test]
    fn expm_is_unitary_and_a_semigroup(p in coupling(), t1 in 0.0..10.0f64, t2 in 0.0..10.0f64) {
        let h = hamiltonian(&p);
        let u1 = evolution(&h, t1);
        prop_assert!(u1.unitarity_defect() <= 1e-10);
        let u2 = evolution(&h, t2);
        prop_assert!((evolution(&h, t1 + t2) - u1 * u2).max_norm() <= 1e-9);
    }

    #[test]
    fn eigenvalues_sum_to_trace_and_are_unitarily_invariant(h in hermitian(), k in hermitian()) {
        let vals = eigvals_hermitian(&h, DEFAULT_TOL).unwrap();
        prop_assert!((vals.iter().sum::<f64>() - h.trace().re).abs() <= 1e-10);
        let u = expm(&k.scale(Complex64::new(0.0, 1.0)), DEFAULT_TOL).unwrap();
        let rotated = h.conjugate_by(&u.adjoint());
        // rotation leaves O(ε) anti-Hermitian noise
        let rotated = (rotated + rotated.adjoint()).scale_real(0.5);
        let moved = eigvals_hermitian(&rotated, DEFAULT_TOL).unwrap();
        for (x, y) in vals.iter().zip(moved) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn propagator_equals_expm(p in coupling(), t in 0.0..10.0f64) {
        let oracle = evolution(&hamiltonian(&p), t);
        let with_phase = propagator(&p, t, true);
        prop_assert!((with_phase.matrix - oracle).max_norm() <= 1e-10);
        let bare = propagator(&p, t, false);
        let predicted = -0.5 * p.jz * t;
        let ratio = with_phase.matrix[(1, 1)] / bare.matrix[(1, 1)];
        let ratio = if ratio.is_finite() { ratio } else { with_phase.matrix[(1, 2)] / bare.matrix[(1, 2)] };
        prop_assert!((ratio.norm() - 1.0).abs() <= 1e-10);
        prop_assert!((ratio - Complex64::from_polar(1.0, predicted)).norm() <= 1e-10);
    }

    #[test]
    fn propagator_invariants_including_eta_zero(p in coupling(), t in 0.0..10.0f64, degenerate in any::<bool>()) {
        let p = if degenerate { CouplingParams { jy: p.jx, field: 0.0, ..p } } else { p };
        let u = propagator(&p, t, false);
        prop_assert_eq!(u.mu_plus, u.mu_minus.conj());
        prop_assert!(u.delta_entry.re.abs() <= 1e-14);
        prop_assert!((u.mu_plus.norm_sqr() + u.delta_entry.norm_sqr() - 1.0).abs() <= 1e-12);
        prop_assert!(u.matrix.unitarity_defect() <= 1e-10);
    }

    #[test]
    fn spectrum_eigenpairs_hold(p in coupling(), tiny in -1e-12..1e-12f64, degenerate in any::<bool>()) {
        let p = if degenerate { CouplingParams { jy: p.jx + tiny, ..p } } else { p };
        let h = hamiltonian(&p);
        let s = spectrum(&p);
        prop_assert!(s.energies.iter().sum::<f64>().abs() <= 1e-12);
        for i in 0..4 {
            let hv = h.apply(&s.eigenvectors[i]);
            let r: f64 = hv.iter().zip(&s.eigenvectors[i])
                .map(|(x, v)| (x - v * s.energies[i]).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(r <= 1e-10, "residual {r} for eigenpair {i}");
            for j in 0..4 {
                let ip: Complex64 = (0..4).map(|m| s.eigenvectors[i][m].conj() * s.eigenvectors[j][m]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - expected).norm() <= 1e-10);
            }
        }
        let f = p.frequencies();
        prop_assert!((f.eta * f.eta - (p.field * p.field + f.delta * f.delta)).abs() <= 1e-14 * f.eta.powi(2).max(1e-300));
        prop_assert!(f.eta >= f.delta.abs() && f.eta >= p.field.abs());
    }

    #[test]
    fn bloch_round_trip_and_purity(s in xstate()) {
        let v = s.to_bloch();
        let back = XState::from_bloch(&v).unwrap();
        for (x, y) in s.to_array().iter().zip(back.to_array()) {
            prop_assert!((x - y).abs() <= 1e-14);
        }
        prop_assert!((v.s1() - (s.a() + s.b() - s.c() - s.d())).abs() <= 1e-15);
        prop_assert!((v.s2() - (s.a() - s.b() + s.c() - s.d())).abs() <= 1e-15);
        prop_assert!((v.c3() - (s.a() - s.b() - s.c() + s.d())).abs() <= 1e-15);
        prop_assert!((s.purity_from_populations() - v.purity()).abs() <= 1e-12);
        prop_assert!((s.to_density().purity() - s.purity_from_populations()).abs() <= 1e-12);
        prop_assert!(s.to_density().min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn positivity_tests_agree(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.gen_range(-0.1..0.7);
        let b = rng.gen_range(-0.1..0.7);
        let c = rng.gen_range(-0.1..0.7);
        let d = 1.0 - a - b - c;
        let z = rng.gen_range(-0.4..0.4);
        let w = rng.gen_range(-0.4..0.4);
        prop_assert_eq!(
            positivity_closed_form(a, b, c, d, z, w),
            positivity_by_eigenvalues(a, b, c, d, z, w).unwrap()
        );
    }

    #[test]
    fn fidelity_symmetric_and_unitarily_invariant(s in xstate(), r in xstate(), k in hermitian()) {
        let (x, y) = (s.to_density(), r.to_density());
        let fxy = fidelity_wang(&x, &y).unwrap();
        prop_assert!((fxy - fidelity_wang(&y, &x).unwrap()).abs() <= 1e-14);
        let u = expm(&k.scale(Complex64::new(0.0, 1.0)), DEFAULT_TOL).unwrap();
        let herm = |m: ComplexMatrix4| (m + m.adjoint()).scale_real(0.5);
        let xu = DensityMatrix::new(herm(x.matrix().conjugate_by(&u))).unwrap();
        let yu = DensityMatrix::new(herm(y.matrix().conjugate_by(&u))).unwrap();
        prop_assert!((fxy - fidelity_wang(&xu, &yu).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn evolutions_agree_and_conserve(s in xstate(), p in coupling(), t in 0.0..10.0f64) {
        let a = evolve_closed(&s, &p, t).unwrap();
        let b = evolve_oracle(&s, &p, t).unwrap();
        prop_assert!((*a.matrix() - *b.matrix()).max_norm() <= 1e-10);
        for r in [&a, &b] {
            prop_assert!((r.matrix().trace().re - 1.0).abs() <= 1e-12);
            prop_assert!(r.matrix().hermiticity_defect() <= 1e-12);
            prop_assert!(r.min_eigenvalue() >= -1e-10);
            prop_assert!((r.purity() - s.purity_from_populations()).abs() <= 1e-12);
        }
    }

    #[test]
    fn bell_fidelity_closed_form_and_period(s in bell_state(), p in coupling(), t in 0.0..10.0f64) {
        let rho0 = s.to_density();
        let v = s.to_bloch();
        let f = fidelity_wang(&rho0, &evolve_closed(&s, &p, t).unwrap()).unwrap();
        prop_assert!((f - fidelity_bell_closed(&v, &p, t).unwrap()).abs() <= 1e-10);
        if let Some(period) = p.frequencies().bell_period() {
            let later = fidelity_wang(&rho0, &evolve_closed(&s, &p, t + period).unwrap()).unwrap();
            prop_assert!((f - later).abs() <= 1e-9);
        }
    }

    #[test]
    fn classify_period_scales_inversely(s in bell_state(), p in coupling(), lambda in 0.1..10.0f64) {
        let a = classify(&s, &p).unwrap();
        let b = classify(&s, &p.scaled(lambda)).unwrap();
        prop_assert_eq!(a.kind, b.kind);
        if let (Some(ta), Some(tb)) = (a.period, b.period) {
            prop_assert!((tb * lambda - ta).abs() <= 1e-10 * ta);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn detect_period_recovers_synthetic_period(amplitude in 0.01..=1.0f64, eta in 0.2..3.0f64) {
        let period = PI / eta;
        let g = TimeGrid::new(3.0 * period, 901).unwrap();
        let times = g.samples();
        let f_numeric = times.iter().map(|t| 1.0 - amplitude * (eta * t).sin().powi(2)).collect();
        let n = times.len();
        let trace = FidelityTrace { times, f_numeric, f_closed: None, purity: vec![1.0; n], c1_minus_c2: vec![0.0; n] };
        let got = detect_period(&trace, STATIONARY_THRESHOLD).unwrap().unwrap();
        prop_assert!((got - period).abs() / period <= 1e-6, "{got} vs {period}");
    }

    #[test]
    fn scan_columns_are_consistent(s in xstate(), p in coupling()) {
        let trace = scan(&s, &p, &TimeGrid::new(5.0, 64).unwrap()).unwrap();
        prop_assert_eq!(trace.f_numeric.len(), trace.len());
        prop_assert_eq!(trace.purity.len(), trace.len());
        prop_assert_eq!(trace.c1_minus_c2.len(), trace.len());
        prop_assert!((trace.f_numeric[0] - 1.0).abs() <= 1e-12);
        prop_assert!(trace.f_numeric.iter().all(|f| (0.0..=1.0).contains(f)));
        let p0 = trace.purity[0];
        prop_assert!(trace.purity.iter().all(|x| (x - p0).abs() <= 1e-12));
        prop_assert_eq!(trace.f_closed.is_some(), s.is_bell_diagonal());
    }
}
