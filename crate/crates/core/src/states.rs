//! X-states, their Bloch coefficients, and named state families.
//!
//! An X-state has non-zero entries only on the diagonal and anti-diagonal:
//!
//! ```text
//!     | a  0  0  w |
//! ρ = | 0  b  z  0 |
//!     | 0  z  c  0 |
//!     | w  0  0  d |
//! ```
//!
//! with real coherences `z` and `w`. Complex coherences are brought to this
//! form with [`gauge_fix`].

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::DensityMatrix;
use crate::linalg::{
    eigvals_hermitian, pauli_i, pauli_x, pauli_y, pauli_z, trace_product, ComplexMatrix4,
    DEFAULT_TOL,
};
use crate::model::CouplingParams;

/// Allowed deviation of the trace from 1.
pub const TRACE_TOL: f64 = 1e-12;
/// Slack on z² ≤ bc and w² ≤ ad.
pub const COHERENCE_SLACK: f64 = 1e-12;
/// Smallest eigenvalue accepted as non-negative.
pub const POSITIVITY_SLACK: f64 = 1e-10;
/// Tolerance for treating a Bloch coefficient (or coherence phase) as zero.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XState {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    z: f64,
    w: f64,
}

/// `z² ≤ bc`, `w² ≤ ad` and non-negative populations.
pub fn positivity_closed_form(a: f64, b: f64, c: f64, d: f64, z: f64, w: f64) -> bool {
    a >= 0.0
        && b >= 0.0
        && c >= 0.0
        && d >= 0.0
        && z * z <= b * c + COHERENCE_SLACK
        && w * w <= a * d + COHERENCE_SLACK
}

/// Smallest eigenvalue of the X matrix is at least −[`POSITIVITY_SLACK`].
pub fn positivity_by_eigenvalues(a: f64, b: f64, c: f64, d: f64, z: f64, w: f64) -> Result<bool> {
    let m = x_matrix(a, b, c, d, z, w);
    Ok(eigvals_hermitian(&m, DEFAULT_TOL)?[0] >= -POSITIVITY_SLACK)
}

fn x_matrix(a: f64, b: f64, c: f64, d: f64, z: f64, w: f64) -> ComplexMatrix4 {
    ComplexMatrix4::from_real_rows([
        [a, 0.0, 0.0, w],
        [0.0, b, z, 0.0],
        [0.0, z, c, 0.0],
        [w, 0.0, 0.0, d],
    ])
}

impl XState {
    /// Validated X-state. `z` and `w` are real; either sign is accepted.
    pub fn new(a: f64, b: f64, c: f64, d: f64, z: f64, w: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d), ("z", z), ("w", w)] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        let trace = a + b + c + d;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::Normalization { trace });
        }
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
            if v < 0.0 {
                return Err(Error::Positivity(format!(
                    "population {name} = {v} is negative"
                )));
            }
        }
        if z * z > b * c + COHERENCE_SLACK {
            return Err(Error::Positivity(format!(
                "inner coherence z² = {} exceeds bc = {}",
                z * z,
                b * c
            )));
        }
        if w * w > a * d + COHERENCE_SLACK {
            return Err(Error::Positivity(format!(
                "outer coherence w² = {} exceeds ad = {}",
                w * w,
                a * d
            )));
        }
        Ok(Self { a, b, c, d, z, w })
    }

    /// Reads an X-state back out of a density matrix. Fails with a domain
    /// error if the matrix has entries off the X pattern or complex
    /// coherences (use [`gauge_fix`] first).
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        let m = rho.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let on_x = i == j || i + j == 3;
                if !on_x && m[(i, j)].norm() > ZERO_TOL {
                    return Err(Error::Domain(format!(
                        "entry ({i},{j}) = {} lies outside the X pattern",
                        m[(i, j)]
                    )));
                }
            }
        }
        let z = m[(1, 2)];
        let w = m[(0, 3)];
        if z.im.abs() > ZERO_TOL || w.im.abs() > ZERO_TOL {
            return Err(Error::Domain(format!(
                "coherences z = {z}, w = {w} are not real; apply gauge_fix first"
            )));
        }
        Self::new(
            m[(0, 0)].re,
            m[(1, 1)].re,
            m[(2, 2)].re,
            m[(3, 3)].re,
            z.re,
            w.re,
        )
    }

    pub fn from_bloch(v: &BlochVector) -> Result<Self> {
        let BlochVector { s1, s2, c1, c2, c3 } = *v;
        Self::new(
            (1.0 + s1 + s2 + c3) / 4.0,
            (1.0 + s1 - s2 - c3) / 4.0,
            (1.0 - s1 + s2 - c3) / 4.0,
            (1.0 - s1 - s2 + c3) / 4.0,
            (c1 + c2) / 4.0,
            (c1 - c2) / 4.0,
        )
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    /// Inner (|01⟩⟨10|) coherence.
    pub fn z(&self) -> f64 {
        self.z
    }
    /// Outer (|00⟩⟨11|) coherence.
    pub fn w(&self) -> f64 {
        self.w
    }

    /// `[a, b, c, d, z, w]`
    pub fn to_array(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.z, self.w]
    }

    /// True when both coherences are non-negative.
    pub fn is_gauge_canonical(&self) -> bool {
        self.z >= 0.0 && self.w >= 0.0
    }

    pub fn matrix(&self) -> ComplexMatrix4 {
        x_matrix(self.a, self.b, self.c, self.d, self.z, self.w)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::new(self.matrix()).expect("validated X-state is a density matrix")
    }

    pub fn to_bloch(&self) -> BlochVector {
        BlochVector::from_density(&self.to_density())
    }

    /// a² + b² + c² + d² + 2w² + 2z².
    pub fn purity_from_populations(&self) -> f64 {
        let Self { a, b, c, d, z, w } = *self;
        a * a + b * b + c * c + d * d + 2.0 * w * w + 2.0 * z * z
    }

    pub fn is_bell_diagonal(&self) -> bool {
        self.to_bloch().is_bell_diagonal()
    }
}

/// Coefficients of ρ = ¼[I + s₁ σz⊗I + s₂ I⊗σz + c₁ σx⊗σx + c₂ σy⊗σy + c₃ σz⊗σz].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochVector {
    s1: f64,
    s2: f64,
    c1: f64,
    c2: f64,
    c3: f64,
}

impl BlochVector {
    pub fn new(s1: f64, s2: f64, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        for (name, v) in [("s1", s1), ("s2", s2), ("c1", c1), ("c2", c2), ("c3", c3)] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite, got {v}"
                )));
            }
            if v.abs() > 1.0 + ZERO_TOL {
                return Err(Error::Range {
                    name,
                    value: v,
                    lo: -1.0,
                    hi: 1.0,
                });
            }
        }
        let v = Self { s1, s2, c1, c2, c3 };
        if v.purity() > 1.0 + ZERO_TOL {
            return Err(Error::Positivity(format!(
                "Bloch vector implies purity {} > 1",
                v.purity()
            )));
        }
        Ok(v)
    }

    /// Bell-diagonal vector (s₁ = s₂ = 0).
    pub fn bell_diagonal(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        Self::new(0.0, 0.0, c1, c2, c3)
    }

    /// Coefficients by their trace definitions, e.g. c₂ = Tr(ρ σy⊗σy).
    /// Works for any density matrix; only the X-state components are kept.
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let k = ComplexMatrix4::kron;
        let (i, x, y, z) = (pauli_i(), pauli_x(), pauli_y(), pauli_z());
        let e = |op: ComplexMatrix4| trace_product(m, &op).re;
        Self {
            s1: e(k(&z, &i)),
            s2: e(k(&i, &z)),
            c1: e(k(&x, &x)),
            c2: e(k(&y, &y)),
            c3: e(k(&z, &z)),
        }
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }
    pub fn s2(&self) -> f64 {
        self.s2
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn c3(&self) -> f64 {
        self.c3
    }

    /// `[s1, s2, c1, c2, c3]`
    pub fn to_array(&self) -> [f64; 5] {
        [self.s1, self.s2, self.c1, self.c2, self.c3]
    }

    /// (1 + s₁² + s₂² + c₁² + c₂² + c₃²)/4.
    pub fn purity(&self) -> f64 {
        (1.0 + self.to_array().iter().map(|x| x * x).sum::<f64>()) / 4.0
    }

    pub fn is_bell_diagonal(&self) -> bool {
        self.s1.abs() <= ZERO_TOL && self.s2.abs() <= ZERO_TOL
    }
}

/// Result of removing the coherence phases with a local unitary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeFix {
    /// |z|
    pub z: f64,
    /// |w|
    pub w: f64,
    /// Angles of the local unitary e^{−iθ₁σz} ⊗ e^{−iθ₂σz}.
    pub theta1: f64,
    pub theta2: f64,
    /// True when the transformation is not the identity; dynamics computed
    /// afterwards may then be in a rotated frame, see
    /// [`GaugeFix::changes_hamiltonian`].
    pub frame_rotated: bool,
}

/// Maps complex coherences to their moduli.
///
/// The unitary `V = e^{−iθ₁σz} ⊗ e^{−iθ₂σz}` multiplies ρ₀₃ by
/// e^{−2i(θ₁+θ₂)} and ρ₁₂ by e^{−2i(θ₁−θ₂)}, so θ₁ + θ₂ = arg(w)/2 and
/// θ₁ − θ₂ = arg(z)/2 make both coherences real and non-negative.
pub fn gauge_fix(z: Complex64, w: Complex64) -> GaugeFix {
    let arg = |x: Complex64| if x.norm() == 0.0 { 0.0 } else { x.arg() };
    let (az, aw) = (arg(z), arg(w));
    GaugeFix {
        z: z.norm(),
        w: w.norm(),
        theta1: 0.25 * (aw + az),
        theta2: 0.25 * (aw - az),
        frame_rotated: az != 0.0 || aw != 0.0,
    }
}

impl GaugeFix {
    pub fn local_unitary(&self) -> ComplexMatrix4 {
        let rot = |theta: f64| {
            let mut m = pauli_i();
            m[0][0] = Complex64::from_polar(1.0, -theta);
            m[1][1] = Complex64::from_polar(1.0, theta);
            m
        };
        ComplexMatrix4::kron(&rot(self.theta1), &rot(self.theta2))
    }

    /// Whether `V H V† ≠ H`. The exchange term picks up the phase of z and
    /// the anisotropy term Δ the phase of w.
    pub fn changes_hamiltonian(&self, p: &CouplingParams) -> bool {
        let f = p.frequencies();
        let phase_z = 2.0 * (self.theta1 - self.theta2);
        let phase_w = 2.0 * (self.theta1 + self.theta2);
        let moves = |phase: f64| (Complex64::from_polar(1.0, phase) - 1.0).norm() > ZERO_TOL;
        (f.omega != 0.0 && moves(phase_z)) || (f.delta != 0.0 && moves(phase_w))
    }
}

/// Bell-diagonal state with Bloch coefficients (c₁, c₂, c₃).
/// Negative combinations c₁ ± c₂ are stored as signed coherences.
pub fn preset_bell_diagonal(c1: f64, c2: f64, c3: f64) -> Result<XState> {
    XState::from_bloch(&BlochVector {
        s1: 0.0,
        s2: 0.0,
        c1,
        c2,
        c3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub fn vector(&self) -> [Complex64; 4] {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let o = Complex64::new(0.0, 0.0);
        match self {
            BellKind::PhiPlus => [r, o, o, r],
            BellKind::PhiMinus => [r, o, o, -r],
            BellKind::PsiPlus => [o, r, r, o],
            BellKind::PsiMinus => [o, r, -r, o],
        }
    }

    pub fn projector(&self) -> ComplexMatrix4 {
        let v = self.vector();
        ComplexMatrix4::outer(&v, &v)
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "phi_plus" => Some(BellKind::PhiPlus),
            "phi_minus" => Some(BellKind::PhiMinus),
            "psi_plus" => Some(BellKind::PsiPlus),
            "psi_minus" => Some(BellKind::PsiMinus),
            _ => None,
        }
    }
}

/// p|φ⟩⟨φ| + (1 − p) I/4 for a Bell vector |φ⟩.
pub fn preset_p_mixture(kind: BellKind, p: f64) -> Result<XState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Range {
            name: "p",
            value: p,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let rho =
        kind.projector().scale_real(p) + ComplexMatrix4::identity().scale_real((1.0 - p) / 4.0);
    XState::from_density(&DensityMatrix::new(rho)?)
}

/// Swap operator P = Σ |αβ⟩⟨βα|.
pub fn flip_operator() -> ComplexMatrix4 {
    let mut p = ComplexMatrix4::zeros();
    for alpha in 0..2 {
        for beta in 0..2 {
            p[(2 * alpha + beta, 2 * beta + alpha)] = Complex64::new(1.0, 0.0);
        }
    }
    p
}

/// Werner state ((2 − x)/6) I + ((2x − 1)/6) P for x ∈ [−1, 1].
pub fn preset_werner(x: f64) -> Result<XState> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Range {
            name: "x",
            value: x,
            lo: -1.0,
            hi: 1.0,
        });
    }
    let rho = ComplexMatrix4::identity().scale_real((2.0 - x) / 6.0)
        + flip_operator().scale_real((2.0 * x - 1.0) / 6.0);
    XState::from_density(&DensityMatrix::new(rho)?)
}
