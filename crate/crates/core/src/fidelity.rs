//! Density matrices, purity, and the normalized-overlap fidelity
//! 𝓕(ρ, σ) = Tr(ρσ) / √(Tr ρ² · Tr σ²).

use crate::dynamics::evolved_matrix;
use crate::error::{Error, Result};
use crate::linalg::{eigvals_hermitian, trace_product, ComplexMatrix4, DEFAULT_TOL};
use crate::model::{sinc, CouplingParams};
use crate::states::{BlochVector, XState, POSITIVITY_SLACK, TRACE_TOL};

pub const HERMITIAN_TOL: f64 = 1e-12;
/// Round-off allowed outside [0, 1] before a fidelity is treated as a bug.
pub const FIDELITY_CLAMP_TOL: f64 = 1e-12;

/// Hermitian, unit-trace, positive semidefinite 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix4,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix4) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::InvalidInput(
                "density matrix has non-finite entries".into(),
            ));
        }
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::Normalization { trace: trace.re });
        }
        let min = eigvals_hermitian(&matrix, DEFAULT_TOL)?[0];
        if min < -POSITIVITY_SLACK {
            return Err(Error::Positivity(format!("minimum eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix4 {
        &self.matrix
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        purity(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigvals_hermitian(&self.matrix, DEFAULT_TOL)
            .map(|v| v[0])
            .unwrap_or(f64::NAN)
    }
}

pub fn purity(r: &DensityMatrix) -> f64 {
    trace_product(&r.matrix, &r.matrix).re
}

pub fn fidelity_wang(r: &DensityMatrix, s: &DensityMatrix) -> Result<f64> {
    let overlap = trace_product(&r.matrix, &s.matrix).re;
    let f = overlap / (purity(r) * purity(s)).sqrt();
    if !(-FIDELITY_CLAMP_TOL..=1.0 + FIDELITY_CLAMP_TOL).contains(&f) {
        return Err(Error::Consistency(format!("fidelity {f} outside [0, 1]")));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Closed-form fidelity between a Bell-diagonal state and its evolution:
///
/// ```text
/// 𝓕(t) = 1 − (c₁ − c₂)² B² sin²(ηt) / [(1 + c₁² + c₂² + c₃²) η²]
/// ```
pub fn fidelity_bell_closed(v: &BlochVector, p: &CouplingParams, t: f64) -> Result<f64> {
    if !v.is_bell_diagonal() {
        return Err(Error::Domain(format!(
            "closed-form fidelity needs s1 = s2 = 0, got s1 = {}, s2 = {}",
            v.s1(),
            v.s2()
        )));
    }
    let f = p.frequencies();
    // B sin(ηt)/η, finite as η → 0
    let field_term = p.field * t * sinc(f.eta * t);
    let diff = v.c1() - v.c2();
    let norm = 1.0 + v.c1().powi(2) + v.c2().powi(2) + v.c3().powi(2);
    Ok(1.0 - diff * diff * field_term * field_term / norm)
}

/// Tr(ρ(0)ρ(t)) from the closed-form evolved matrix elements.
pub fn overlap_closed(s: &XState, p: &CouplingParams, t: f64) -> f64 {
    trace_product(&s.matrix(), &evolved_matrix(s, p, t)).re
}

/// 4 w (a − d) B Δ sin²(ηt) / η²: the term coupling the outer coherence to
/// the population imbalance. [`overlap_element_reference`] and
/// [`overlap_bloch_reference`] leave it out.
pub fn overlap_cross_term(s: &XState, p: &CouplingParams, t: f64) -> f64 {
    let f = p.frequencies();
    let st = t * sinc(f.eta * t); // sin(ηt)/η
    4.0 * s.w() * (s.a() - s.d()) * p.field * f.delta * st * st
}

/// Element-form overlap expression
/// `(a²+d²)μ₊μ₋ + (b−c)² cos²Ωt − 2ad δ² + 2bc + 2z² + 2w²(1 − 2B² sin²ηt/η²)`.
///
/// Exact only when w(a − d)BΔ = 0; see [`overlap_cross_term`].
pub fn overlap_element_reference(s: &XState, p: &CouplingParams, t: f64) -> f64 {
    let f = p.frequencies();
    let u = crate::model::propagator(p, t, false);
    let (a, b, c, d, z, w) = (s.a(), s.b(), s.c(), s.d(), s.z(), s.w());
    let bst = p.field * t * sinc(f.eta * t);
    (a * a + d * d) * (u.mu_plus * u.mu_minus).re + (b - c).powi(2) * (f.omega * t).cos().powi(2)
        - 2.0 * a * d * (u.delta_entry * u.delta_entry).re
        + 2.0 * b * c
        + 2.0 * z * z
        + 2.0 * w * w * (1.0 - 2.0 * bst * bst)
}

/// Bloch-form overlap expression in (s₁, s₂, c₁, c₂, c₃).
///
/// Algebraically identical to [`overlap_element_reference`] and missing the
/// same [`overlap_cross_term`]; exact on the Bell-diagonal family.
pub fn overlap_bloch_reference(v: &BlochVector, p: &CouplingParams, t: f64) -> f64 {
    let f = p.frequencies();
    let (s1, s2, c1, c2, c3) = (v.s1(), v.s2(), v.c1(), v.c2(), v.c3());
    let st = t * sinc(f.eta * t);
    let sin2_over_eta2 = st * st;
    let cos2_eta = (f.eta * t).cos().powi(2);
    let cos2_omega = (f.omega * t).cos().powi(2);
    let b2 = p.field * p.field;
    let d2 = f.delta * f.delta;
    let bracket = 2.0 * (2.0 + 2.0 * c3 * c3)
        + 2.0 * (s1 + s2).powi(2) * (cos2_eta + (b2 - d2) * sin2_over_eta2)
        - 2.0 * (s1 - s2).powi(2)
        + 4.0 * (s1 - s2).powi(2) * cos2_omega
        + 2.0 * (c1 + c2).powi(2)
        + 2.0 * (c1 - c2).powi(2);
    bracket / 16.0 - 0.25 * (c1 - c2).powi(2) * b2 * sin2_over_eta2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;
    use crate::model::hamiltonian;
    use crate::states::{preset_bell_diagonal, preset_p_mixture, BellKind};
    use num_complex::Complex64;

    fn mixed() -> DensityMatrix {
        DensityMatrix::new(ComplexMatrix4::identity().scale_real(0.25)).unwrap()
    }

    fn bell(kind: BellKind) -> DensityMatrix {
        DensityMatrix::new(kind.projector()).unwrap()
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&mixed()) - 0.25).abs() < 1e-15);
        for k in [
            BellKind::PhiPlus,
            BellKind::PhiMinus,
            BellKind::PsiPlus,
            BellKind::PsiMinus,
        ] {
            assert!((purity(&bell(k)) - 1.0).abs() < 1e-15);
        }
        let s = XState::new(0.4, 0.1, 0.2, 0.3, 0.12, -0.2).unwrap();
        assert!((s.to_density().purity() - s.purity_from_populations()).abs() < 1e-12);
    }

    #[test]
    fn wang_fidelity_examples() {
        let s = XState::new(0.4, 0.1, 0.2, 0.3, 0.12, -0.2)
            .unwrap()
            .to_density();
        assert!((fidelity_wang(&s, &s).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            fidelity_wang(&bell(BellKind::PhiPlus), &bell(BellKind::PhiMinus)).unwrap() < 1e-15
        );
        let f = fidelity_wang(&mixed(), &bell(BellKind::PhiPlus)).unwrap();
        assert!((f - 0.5).abs() < 1e-15);
    }

    #[test]
    fn density_validation() {
        let mut m = ComplexMatrix4::identity().scale_real(0.25);
        m[(0, 1)] = Complex64::new(0.0, 0.1);
        assert!(DensityMatrix::new(m).is_err());
        assert!(matches!(
            DensityMatrix::new(ComplexMatrix4::identity()),
            Err(Error::Normalization { .. })
        ));
        let m = ComplexMatrix4::from_real_rows([
            [0.5, 0.0, 0.0, 0.6],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.6, 0.0, 0.0, 0.5],
        ]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::Positivity(_))));
    }

    #[test]
    fn bell_closed_form_cases() {
        let v = BlochVector::bell_diagonal(0.3, -0.2, 0.1).unwrap();
        let zero_field = CouplingParams::new(1.0, 0.2, 0.5, 0.0).unwrap();
        for t in [0.0, 0.7, 3.1] {
            assert_eq!(fidelity_bell_closed(&v, &zero_field, t).unwrap(), 1.0);
        }
        let equal = BlochVector::bell_diagonal(0.3, 0.3, -0.4).unwrap();
        let p = CouplingParams::new(1.0, 0.2, 0.5, 1.4).unwrap();
        assert_eq!(fidelity_bell_closed(&equal, &p, 2.2).unwrap(), 1.0);

        // pure Φ⁺, Δ = 0, B = 1, ηt = π/2
        let phi = BlochVector::bell_diagonal(1.0, -1.0, 1.0).unwrap();
        let p = CouplingParams::new(0.8, 0.8, 0.3, 1.0).unwrap();
        let f = fidelity_bell_closed(&phi, &p, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(f.abs() < 1e-15);

        let not_bell = BlochVector::new(0.2, 0.0, 0.1, 0.1, 0.0).unwrap();
        assert!(matches!(
            fidelity_bell_closed(&not_bell, &p, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn p_mixture_fidelity_formula() {
        let pm = 0.7;
        let s = preset_p_mixture(BellKind::PhiPlus, pm).unwrap();
        let p = CouplingParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let eta = p.frequencies().eta;
        for t in [0.3, 1.1, 2.5] {
            let want = 1.0
                - 4.0 * pm * pm * p.field.powi(2) * (eta * t).sin().powi(2)
                    / ((1.0 + 3.0 * pm * pm) * eta * eta);
            let got = fidelity_bell_closed(&s.to_bloch(), &p, t).unwrap();
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn overlap_at_zero_time_is_purity() {
        let s = XState::new(0.4, 0.1, 0.2, 0.3, 0.12, -0.2).unwrap();
        let p = CouplingParams::new(0.3, -1.1, 0.7, 0.9).unwrap();
        assert!((overlap_closed(&s, &p, 0.0) - s.purity_from_populations()).abs() < 1e-15);
    }

    #[test]
    fn overlap_matches_expm_oracle() {
        let s = XState::new(0.4, 0.1, 0.2, 0.3, 0.12, -0.2).unwrap();
        let p = CouplingParams::new(0.3, -1.1, 0.7, 0.9).unwrap();
        let t = 0.7;
        let u = expm(&hamiltonian(&p).scale(Complex64::new(0.0, -t)), DEFAULT_TOL).unwrap();
        let rho_t = s.matrix().conjugate_by(&u);
        let oracle = trace_product(&s.matrix(), &rho_t).re;
        assert!((overlap_closed(&s, &p, t) - oracle).abs() < 1e-10);
        // the reference expressions are off by exactly the cross term here
        let gap = oracle - overlap_element_reference(&s, &p, t);
        assert!(overlap_cross_term(&s, &p, t).abs() > 1e-3);
        assert!((gap - overlap_cross_term(&s, &p, t)).abs() < 1e-12);
        let gap = oracle - overlap_bloch_reference(&s.to_bloch(), &p, t);
        assert!((gap - overlap_cross_term(&s, &p, t)).abs() < 1e-12);
    }

    #[test]
    fn overlap_over_purity_reproduces_bell_fidelity() {
        let s = preset_bell_diagonal(0.4, -0.3, 0.2).unwrap();
        let p = CouplingParams::new(1.2, 0.1, -0.4, 0.8).unwrap();
        for t in [0.4, 1.9, 6.0] {
            let f = overlap_closed(&s, &p, t) / s.purity_from_populations();
            let closed = fidelity_bell_closed(&s.to_bloch(), &p, t).unwrap();
            assert!((f - closed).abs() < 1e-12);
        }
    }
}
