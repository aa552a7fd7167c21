//! Two-spin anisotropic Heisenberg Hamiltonian in a uniform z field.
//!
//! ```text
//! H = ½ [Jx σx⊗σx + Jy σy⊗σy + Jz σz⊗σz + B (σz⊗I + I⊗σz)]
//! ```
//!
//! H splits into two 2×2 blocks. On {|00⟩, |11⟩} it is `Jz/2 + B σz + Δ σx`
//! and on {|01⟩, |10⟩} it is `−Jz/2 + Ω σx`, with Δ = (Jx−Jy)/2,
//! Ω = (Jx+Jy)/2 and η = √(B² + Δ²). Units have ħ = 1, so time is the
//! reciprocal of the coupling unit.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{pauli_i, pauli_x, pauli_y, pauli_z, ComplexMatrix4};

/// Below this |ηt| the sinc factor is evaluated from its Taylor series.
const SINC_SERIES_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    /// Magnetic field strength B along z.
    pub field: f64,
}

impl CouplingParams {
    pub fn new(jx: f64, jy: f64, jz: f64, field: f64) -> Result<Self> {
        let p = Self { jx, jy, jz, field };
        p.check_finite()?;
        Ok(p)
    }

    pub fn check_finite(&self) -> Result<()> {
        for (name, v) in [
            ("jx", self.jx),
            ("jy", self.jy),
            ("jz", self.jz),
            ("field", self.field),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn frequencies(&self) -> DerivedFrequencies {
        DerivedFrequencies::from_params(self)
    }

    /// Same couplings with the field switched off.
    pub fn without_field(&self) -> Self {
        Self {
            field: 0.0,
            ..*self
        }
    }

    /// Every coupling multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            jx: self.jx * lambda,
            jy: self.jy * lambda,
            jz: self.jz * lambda,
            field: self.field * lambda,
        }
    }
}

/// η, Ω and Δ for a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedFrequencies {
    pub eta: f64,
    pub omega: f64,
    pub delta: f64,
}

impl DerivedFrequencies {
    pub fn from_params(p: &CouplingParams) -> Self {
        let delta = 0.5 * (p.jx - p.jy);
        Self {
            eta: p.field.hypot(delta),
            omega: 0.5 * (p.jx + p.jy),
            delta,
        }
    }

    /// Fidelity period π/η of the Bell-diagonal family, equal to
    /// 2π/√(4B² + (Jx−Jy)²). `None` when η = 0.
    pub fn bell_period(&self) -> Option<f64> {
        (self.eta > 0.0).then(|| std::f64::consts::PI / self.eta)
    }
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_SERIES_THRESHOLD {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub fn hamiltonian(p: &CouplingParams) -> ComplexMatrix4 {
    let k = ComplexMatrix4::kron;
    let (i, x, y, z) = (pauli_i(), pauli_x(), pauli_y(), pauli_z());
    (k(&x, &x).scale_real(p.jx)
        + k(&y, &y).scale_real(p.jy)
        + k(&z, &z).scale_real(p.jz)
        + (k(&z, &i) + k(&i, &z)).scale_real(p.field))
    .scale_real(0.5)
}

/// Closed-form eigensystem of [`hamiltonian`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// E₁ = Jz/2 + η, E₂ = Jz/2 − η, E₃ = −Jz/2 + Ω, E₄ = −Jz/2 − Ω.
    pub energies: [f64; 4],
    /// Unit eigenvectors matching `energies`, components in the product basis.
    #[serde(serialize_with = "serialize_vectors")]
    pub eigenvectors: [[Complex64; 4]; 4],
    /// N₊, N₋: the |11⟩ amplitudes of φ₁ and φ₂, i.e. the 2-norm
    /// normalization of `((B ± η)/Δ)|00⟩ + |11⟩`.
    pub norms: [f64; 2],
}

fn serialize_vectors<S: serde::Serializer>(
    v: &[[Complex64; 4]; 4],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<Vec<[f64; 2]>> = v
        .iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect();
    serde::Serialize::serialize(&pairs, s)
}

pub fn spectrum(p: &CouplingParams) -> Spectrum {
    let f = p.frequencies();
    let (b, d, eta) = (p.field, f.delta, f.eta);

    let upper = outer_eigenvector(b, d, eta, 1.0);
    let lower = outer_eigenvector(b, d, eta, -1.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = |x: f64| Complex64::new(x, 0.0);
    let zero = c(0.0);

    Spectrum {
        energies: [
            0.5 * p.jz + eta,
            0.5 * p.jz - eta,
            -0.5 * p.jz + f.omega,
            -0.5 * p.jz - f.omega,
        ],
        eigenvectors: [
            [c(upper.0), zero, zero, c(upper.1)],
            [c(lower.0), zero, zero, c(lower.1)],
            [zero, c(r), c(r), zero],
            [zero, c(r), c(-r), zero],
        ],
        norms: [upper.1.abs(), lower.1.abs()],
    }
}

/// Unit eigenvector (|00⟩, |11⟩ amplitudes) of `[[B, Δ], [Δ, −B]]` for
/// eigenvalue `sign·η`.
///
/// The ratio (B ± η)/Δ is replaced by whichever of the two equivalent
/// unnormalized vectors `(B ± η, Δ)` and `(Δ, ±η − B)` has the larger norm,
/// so the result stays accurate as Δ → 0 and reduces to |00⟩ or |11⟩ there.
fn outer_eigenvector(b: f64, d: f64, eta: f64, sign: f64) -> (f64, f64) {
    let lam = sign * eta;
    let first = (b + lam, d);
    let second = (d, lam - b);
    let n1 = first.0.hypot(first.1);
    let n2 = second.0.hypot(second.1);
    let (mut x, mut y, n) = if n1 >= n2 {
        (first.0, first.1, n1)
    } else {
        (second.0, second.1, n2)
    };
    if n == 0.0 {
        // B = Δ = 0: fully degenerate block
        return if sign > 0.0 { (1.0, 0.0) } else { (0.0, 1.0) };
    }
    x /= n;
    y /= n;
    // keep the |11⟩ amplitude non-negative, or |00⟩ when |11⟩ vanishes
    if y < 0.0 || (y == 0.0 && x < 0.0) {
        x = -x;
        y = -y;
    }
    (x, y)
}

/// Closed-form e^{−iHt}, optionally without the scalar e^{−iJz t/2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    /// μ₊ = cos ηt + i(B/η) sin ηt
    pub mu_plus: Complex64,
    /// μ₋ = cos ηt − i(B/η) sin ηt
    pub mu_minus: Complex64,
    /// δ = i(Δ/η) sin ηt
    pub delta_entry: Complex64,
    pub matrix: ComplexMatrix4,
    pub global_phase_included: bool,
}

pub fn propagator(p: &CouplingParams, t: f64, include_global_phase: bool) -> Propagator {
    let f = p.frequencies();
    let eta_t = f.eta * t;
    let sc = sinc(eta_t) * t; // sin(ηt)/η
    let cos = eta_t.cos();
    let mu_plus = Complex64::new(cos, p.field * sc);
    let mu_minus = mu_plus.conj();
    let delta_entry = Complex64::new(0.0, f.delta * sc);

    let inner_phase = Complex64::from_polar(1.0, p.jz * t);
    let (so, co) = (f.omega * t).sin_cos();
    let diag = inner_phase * co;
    let off = inner_phase * Complex64::new(0.0, -so);
    let zero = Complex64::new(0.0, 0.0);

    let mut matrix = ComplexMatrix4::from_rows([
        [mu_minus, zero, zero, -delta_entry],
        [zero, diag, off, zero],
        [zero, off, diag, zero],
        [-delta_entry, zero, zero, mu_plus],
    ]);
    if include_global_phase {
        matrix = matrix.scale(Complex64::from_polar(1.0, -0.5 * p.jz * t));
    }
    Propagator {
        mu_plus,
        mu_minus,
        delta_entry,
        matrix,
        global_phase_included: include_global_phase,
    }
}
