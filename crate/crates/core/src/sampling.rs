//! Random draws of parameters and states for property checks.

use rand::Rng;

use crate::model::CouplingParams;
use crate::states::{preset_bell_diagonal, XState};

/// Jx, Jy, Jz, B uniform in [−range, range].
pub fn random_params<R: Rng + ?Sized>(rng: &mut R, range: f64) -> CouplingParams {
    let mut u = || rng.gen_range(-range..=range);
    CouplingParams {
        jx: u(),
        jy: u(),
        jz: u(),
        field: u(),
    }
}

/// Populations uniform on the simplex, coherences uniform in
/// [−√(bc), √(bc)] and [−√(ad), √(ad)].
pub fn random_xstate<R: Rng + ?Sized>(rng: &mut R) -> XState {
    loop {
        let e: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.gen::<f64>()).ln());
        let sum: f64 = e.iter().sum();
        let [a, b, c, d] = e.map(|x| x / sum);
        let z = rng.gen_range(-1.0..=1.0) * (b * c).sqrt();
        let w = rng.gen_range(-1.0..=1.0) * (a * d).sqrt();
        if let Ok(s) = XState::new(a, b, c, d, z, w) {
            return s;
        }
    }
}

/// (c₁, c₂, c₃) uniform inside the Bell-diagonal tetrahedron.
pub fn random_bell_diagonal<R: Rng + ?Sized>(rng: &mut R) -> XState {
    loop {
        let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        if let Ok(s) = preset_bell_diagonal(c[0], c[1], c[2]) {
            return s;
        }
    }
}

/// Bell-diagonal state with c₁ = c₂.
pub fn random_bell_diagonal_equal<R: Rng + ?Sized>(rng: &mut R) -> XState {
    loop {
        let c = rng.gen_range(-1.0..=1.0);
        let c3 = rng.gen_range(-1.0..=1.0);
        if let Ok(s) = preset_bell_diagonal(c, c, c3) {
            return s;
        }
    }
}
