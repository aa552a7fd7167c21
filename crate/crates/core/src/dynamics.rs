//! Time evolution of X-states, fidelity traces, stationarity and periods.
//!
//! Two independent evolutions are provided: [`evolve_closed`] assembles ρ(t)
//! entry by entry from closed-form expressions, [`evolve_oracle`] conjugates
//! ρ(0) with a numerically exponentiated Hamiltonian. They must agree.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::{fidelity_bell_closed, fidelity_wang, DensityMatrix};
use crate::linalg::{expm, ComplexMatrix4, DEFAULT_TOL};
use crate::model::{hamiltonian, propagator, sinc, CouplingParams};
use crate::states::{BlochVector, XState, ZERO_TOL};

/// max(1 − 𝓕) below which a trace counts as stationary.
pub const STATIONARY_THRESHOLD: f64 = 1e-10;
/// Bound on ‖Hρ − ρH‖_max for the zero-field commutator check.
pub const COMMUTATOR_TOL: f64 = 1e-12;
pub const DEFAULT_STEPS: usize = 5000;
pub const FALLBACK_T_MAX: f64 = 10.0;
/// Samples per shortest period for empirical classification.
const SAMPLES_PER_PERIOD: f64 = 300.0;
const MAX_EMPIRICAL_STEPS: usize = 200_000;

/// Uniform grid `k · t_max / (steps − 1)`, k = 0..steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    t_max: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<Self> {
        if !t_max.is_finite() || t_max <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "t_max must be positive and finite, got {t_max}"
            )));
        }
        if steps < 2 {
            return Err(Error::InvalidInput(format!(
                "steps must be at least 2, got {steps}"
            )));
        }
        Ok(Self { t_max, steps })
    }

    /// Three Bell-diagonal fidelity periods 3·2π/√(4B² + (Jx−Jy)²) when
    /// that is finite, otherwise [`FALLBACK_T_MAX`]; [`DEFAULT_STEPS`] samples.
    pub fn default_for(p: &CouplingParams) -> Self {
        let t_max = p
            .frequencies()
            .bell_period()
            .map(|t| 3.0 * t)
            .filter(|t| t.is_finite() && *t > 0.0)
            .unwrap_or(FALLBACK_T_MAX);
        Self {
            t_max,
            steps: DEFAULT_STEPS,
        }
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn sample(&self, k: usize) -> f64 {
        if k + 1 == self.steps {
            self.t_max
        } else {
            k as f64 * self.t_max / (self.steps - 1) as f64
        }
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..self.steps).map(|k| self.sample(k)).collect()
    }
}

/// ρ(t) entries from the closed-form element expressions, without
/// validation. Uses the phase-free propagator quantities μ±, δ.
pub fn evolved_matrix(s: &XState, p: &CouplingParams, t: f64) -> ComplexMatrix4 {
    let u = propagator(p, t, false);
    let (mp, mm, dl) = (u.mu_plus, u.mu_minus, u.delta_entry);
    let (a, b, c, d, z, w) = (s.a(), s.b(), s.c(), s.d(), s.z(), s.w());
    let omega = p.frequencies().omega;
    let (so, co) = (omega * t).sin_cos();

    let r11 = mp * mm * a - dl * dl * d - dl * (mp - mm) * w;
    let r14 = (mm * mm - dl * dl) * w + dl * mm * (a - d);
    let r41 = (mp * mp - dl * dl) * w - dl * mp * (a - d);
    let r44 = mp * mm * d - dl * dl * a + dl * (mp - mm) * w;
    let r22 = b - (b - c) * so * so;
    let r33 = c + (b - c) * so * so;
    // z + i(b − c) sin(2Ωt)/2
    let r23 = Complex64::new(z, (b - c) * so * co);

    let re = |x: f64| Complex64::new(x, 0.0);
    let zero = re(0.0);
    ComplexMatrix4::from_rows([
        [re(r11.re), zero, zero, r14],
        [zero, re(r22), r23, zero],
        [zero, r23.conj(), re(r33), zero],
        [r41, zero, zero, re(r44.re)],
    ])
}

fn checked(m: ComplexMatrix4, what: &str) -> Result<DensityMatrix> {
    DensityMatrix::new(m)
        .map_err(|e| Error::Consistency(format!("{what} produced an invalid state: {e}")))
}

pub fn evolve_closed(s: &XState, p: &CouplingParams, t: f64) -> Result<DensityMatrix> {
    checked(evolved_matrix(s, p, t), "closed-form evolution")
}

/// e^{−iHt} ρ(0) e^{iHt} with the exponential from [`expm`].
pub fn evolve_oracle(s: &XState, p: &CouplingParams, t: f64) -> Result<DensityMatrix> {
    let u = expm(&hamiltonian(p).scale(Complex64::new(0.0, -t)), DEFAULT_TOL)?;
    checked(s.matrix().conjugate_by(&u), "oracle evolution")
}

/// Sampled fidelity, purity and c₁ − c₂ along a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityTrace {
    pub times: Vec<f64>,
    pub f_numeric: Vec<f64>,
    /// Closed-form Bell-diagonal fidelity; present only for s₁ = s₂ = 0.
    pub f_closed: Option<Vec<f64>>,
    pub purity: Vec<f64>,
    pub c1_minus_c2: Vec<f64>,
}

impl FidelityTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

struct SampleRow {
    f_numeric: f64,
    f_closed: Option<f64>,
    purity: f64,
    c1_minus_c2: f64,
}

pub fn scan(s: &XState, p: &CouplingParams, g: &TimeGrid) -> Result<FidelityTrace> {
    let rho0 = s.to_density();
    let v0 = s.to_bloch();
    let bell = v0.is_bell_diagonal();
    let times = g.samples();

    let rows = times
        .par_iter()
        .enumerate()
        .map(|(index, &t)| {
            let sample = || -> Result<SampleRow> {
                let rho_t = evolve_closed(s, p, t)?;
                let vt = BlochVector::from_density(&rho_t);
                Ok(SampleRow {
                    f_numeric: fidelity_wang(&rho0, &rho_t)?,
                    f_closed: if bell {
                        Some(fidelity_bell_closed(&v0, p, t)?)
                    } else {
                        None
                    },
                    purity: rho_t.purity(),
                    c1_minus_c2: vt.c1() - vt.c2(),
                })
            };
            sample().map_err(|e| Error::Sample {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FidelityTrace {
        f_numeric: rows.iter().map(|r| r.f_numeric).collect(),
        f_closed: bell.then(|| {
            rows.iter()
                .map(|r| r.f_closed.unwrap_or(f64::NAN))
                .collect()
        }),
        purity: rows.iter().map(|r| r.purity).collect(),
        c1_minus_c2: rows.iter().map(|r| r.c1_minus_c2).collect(),
        times,
    })
}

fn require_bell(v: &BlochVector) -> Result<()> {
    if v.is_bell_diagonal() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "expected a Bell-diagonal vector (s1 = s2 = 0), got s1 = {}, s2 = {}",
            v.s1(),
            v.s2()
        )))
    }
}

/// c₁(t) − c₂(t) = 4 Re ρ₀₃(t) for a Bell-diagonal initial state.
pub fn c_diff_law(v: &BlochVector, p: &CouplingParams, t: f64) -> Result<f64> {
    require_bell(v)?;
    let s = XState::from_bloch(v)?;
    let rho = evolve_closed(&s, p, t)?;
    Ok(4.0 * rho.matrix()[(0, 3)].re)
}

/// [c₁(0) − c₂(0)] · (1 − 2B² sin²(ηt)/η²).
///
/// The factor turns negative once B² > Δ², so the trajectory does cross the
/// plane c₁ = c₂ for strong enough fields.
pub fn c_diff_predicted(v: &BlochVector, p: &CouplingParams, t: f64) -> Result<f64> {
    require_bell(v)?;
    let bst = p.field * t * sinc(p.frequencies().eta * t);
    Ok((v.c1() - v.c2()) * (1.0 - 2.0 * bst * bst))
}

/// [c₁(0) − c₂(0)] · cos²(ηt). Kept for comparison only; it does not
/// describe the evolution (compare [`c_diff_predicted`]).
pub fn c_diff_cos_squared_reference(v: &BlochVector, p: &CouplingParams, t: f64) -> Result<f64> {
    require_bell(v)?;
    Ok((v.c1() - v.c2()) * (p.frequencies().eta * t).cos().powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Stationary,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictReason {
    ZeroField,
    C1EqualsC2,
    MaximallyMixed,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityVerdict {
    pub kind: VerdictKind,
    pub reason: VerdictReason,
    pub period: Option<f64>,
}

impl StationarityVerdict {
    fn stationary(reason: VerdictReason) -> Self {
        Self {
            kind: VerdictKind::Stationary,
            reason,
            period: None,
        }
    }

    fn periodic(reason: VerdictReason, period: f64) -> Self {
        Self {
            kind: VerdictKind::Periodic,
            reason,
            period: Some(period),
        }
    }
}

/// Classifies the fidelity dynamics of `s` under `p`.
///
/// Bell-diagonal states are decided analytically. Anything else is scanned
/// and handed to [`detect_period`].
pub fn classify(s: &XState, p: &CouplingParams) -> Result<StationarityVerdict> {
    let v = s.to_bloch();
    if v.to_array().iter().all(|x| x.abs() <= ZERO_TOL) {
        return Ok(StationarityVerdict::stationary(
            VerdictReason::MaximallyMixed,
        ));
    }
    let f = p.frequencies();
    if v.is_bell_diagonal() {
        if p.field.abs() <= ZERO_TOL {
            let h0 = hamiltonian(&p.without_field());
            let comm = h0.commutator(&s.matrix()).max_norm();
            if comm > COMMUTATOR_TOL {
                return Err(Error::Consistency(format!(
                    "Bell-diagonal state does not commute with the zero-field Hamiltonian (‖[H, ρ]‖ = {comm:e})"
                )));
            }
            return Ok(StationarityVerdict::stationary(VerdictReason::ZeroField));
        }
        if (v.c1() - v.c2()).abs() <= ZERO_TOL {
            return Ok(StationarityVerdict::stationary(VerdictReason::C1EqualsC2));
        }
        let period = f
            .bell_period()
            .ok_or_else(|| Error::Consistency("non-zero field with η = 0".into()))?;
        return Ok(StationarityVerdict::periodic(
            VerdictReason::Generic,
            period,
        ));
    }

    // empirical branch
    let mut t_max = 0.0;
    let mut fastest: f64 = 0.0;
    if f.eta > 0.0 {
        t_max += 3.0 * std::f64::consts::PI / f.eta;
        fastest = fastest.max(f.eta);
    }
    if f.omega != 0.0 {
        let rate = f.omega.abs().max(f.eta);
        t_max += 3.0 * std::f64::consts::TAU / rate;
        fastest = fastest.max(f.omega.abs());
    }
    if t_max == 0.0 {
        // H is constant on each X block, so every X-state is left alone
        return Ok(StationarityVerdict::stationary(VerdictReason::Generic));
    }
    let shortest_period = std::f64::consts::PI / fastest;
    let steps = ((t_max / shortest_period * SAMPLES_PER_PERIOD).ceil() as usize + 1)
        .clamp(DEFAULT_STEPS, MAX_EMPIRICAL_STEPS);
    let trace = scan(s, p, &TimeGrid::new(t_max, steps)?)?;
    Ok(match detect_period(&trace, STATIONARY_THRESHOLD)? {
        None => StationarityVerdict::stationary(VerdictReason::Generic),
        Some(period) => StationarityVerdict::periodic(VerdictReason::Generic, period),
    })
}

/// Mean spacing of the fidelity minima, or `None` if max(1 − 𝓕) < `tol`.
///
/// Minima are interior grid points that are local minima and reach at least
/// half the trace's maximum depth; each is refined by fitting a parabola
/// through it and its two neighbours.
pub fn detect_period(trace: &FidelityTrace, tol: f64) -> Result<Option<f64>> {
    let f = &trace.f_numeric;
    let t = &trace.times;
    let depth = f.iter().map(|x| 1.0 - x).fold(0.0, f64::max);
    if depth < tol {
        return Ok(None);
    }
    let cutoff = 1.0 - 0.5 * depth;

    let mut minima = Vec::new();
    for i in 1..f.len().saturating_sub(1) {
        if f[i] <= cutoff && f[i] <= f[i - 1] && f[i] < f[i + 1] {
            minima.push(parabolic_vertex(
                (t[i - 1], f[i - 1]),
                (t[i], f[i]),
                (t[i + 1], f[i + 1]),
            ));
        }
    }
    if minima.len() < 2 {
        return Err(Error::InsufficientSpan {
            found: minima.len(),
        });
    }
    Ok(Some(
        (minima[minima.len() - 1] - minima[0]) / (minima.len() - 1) as f64,
    ))
}

fn parabolic_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> f64 {
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        x1
    } else {
        x1 - 0.5 * num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{preset_bell_diagonal, preset_p_mixture, preset_werner, BellKind};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn params(jx: f64, jy: f64, jz: f64, b: f64) -> CouplingParams {
        CouplingParams::new(jx, jy, jz, b).unwrap()
    }

    fn synthetic(amplitude: f64, eta: f64, t_max: f64, steps: usize) -> FidelityTrace {
        let times = TimeGrid::new(t_max, steps).unwrap().samples();
        let f_numeric: Vec<f64> = times
            .iter()
            .map(|t| 1.0 - amplitude * (eta * t).sin().powi(2))
            .collect();
        let n = times.len();
        FidelityTrace {
            times,
            f_numeric,
            f_closed: None,
            purity: vec![1.0; n],
            c1_minus_c2: vec![0.0; n],
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = TimeGrid::new(3.0, 7).unwrap();
        let s = g.samples();
        assert_eq!(s[0], 0.0);
        assert_eq!(*s.last().unwrap(), 3.0);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn bell_diagonal_without_field_is_frozen() {
        let s = preset_bell_diagonal(0.4, -0.3, 0.2).unwrap();
        let p = params(1.3, -0.2, 0.6, 0.0);
        for t in [0.5, 2.0, 7.3] {
            let r = evolve_closed(&s, &p, t).unwrap();
            assert!((*r.matrix() - s.matrix()).max_norm() < 1e-12);
        }
    }

    #[test]
    fn balanced_inner_block_keeps_z() {
        let s = XState::new(0.3, 0.2, 0.2, 0.3, 0.15, 0.1).unwrap();
        let p = params(0.9, 0.1, 0.4, 0.7);
        for t in [0.3, 1.7] {
            let r = evolve_closed(&s, &p, t).unwrap();
            assert_eq!(r.matrix()[(1, 2)], Complex64::new(0.15, 0.0));
        }
    }

    #[test]
    fn closed_and_oracle_agree() {
        let s = XState::new(0.35, 0.15, 0.3, 0.2, -0.2, 0.18).unwrap();
        let p = params(1.4, -0.6, 0.3, -1.1);
        for t in [0.0, 0.9, 4.4, 9.7] {
            let a = evolve_closed(&s, &p, t).unwrap();
            let b = evolve_oracle(&s, &p, t).unwrap();
            assert!((*a.matrix() - *b.matrix()).max_norm() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn oracle_sends_phi_plus_to_phi_minus() {
        let s = preset_p_mixture(BellKind::PhiPlus, 1.0).unwrap();
        let p = params(0.5, 0.5, 0.2, 1.0);
        let r = evolve_oracle(&s, &p, FRAC_PI_2).unwrap();
        let target = preset_p_mixture(BellKind::PhiMinus, 1.0).unwrap().matrix();
        assert!((*r.matrix() - target).max_norm() < 1e-12);
        assert!(fidelity_wang(&s.to_density(), &r).unwrap() < 1e-12);
        let r0 = evolve_oracle(&s, &p, 0.0).unwrap();
        assert!((*r0.matrix() - s.matrix()).max_norm() < 1e-15);
    }

    #[test]
    fn scan_of_stationary_bell_state() {
        let s = preset_bell_diagonal(0.3, 0.3, -0.2).unwrap();
        let p = params(1.0, 0.0, 0.5, 1.5);
        let trace = scan(&s, &p, &TimeGrid::new(10.0, 200).unwrap()).unwrap();
        assert_eq!(trace.len(), 200);
        assert!(trace.f_numeric.iter().all(|f| (1.0 - f).abs() < 1e-12));
        assert!(trace.f_closed.as_ref().unwrap().iter().all(|f| *f == 1.0));
    }

    #[test]
    fn scan_of_phi_plus_mixture_matches_formula() {
        let pm = 0.7;
        let s = preset_p_mixture(BellKind::PhiPlus, pm).unwrap();
        let p = params(1.0, 1.0, 0.5, 1.0);
        let eta = 1.0;
        let trace = scan(&s, &p, &TimeGrid::new(10.0, 400).unwrap()).unwrap();
        let p0 = trace.purity[0];
        for (k, &t) in trace.times.iter().enumerate() {
            let want = 1.0 - 4.0 * pm * pm * (eta * t).sin().powi(2) / (1.0 + 3.0 * pm * pm);
            assert!((trace.f_numeric[k] - want).abs() < 1e-10);
            assert!((trace.purity[k] - p0).abs() < 1e-12);
        }
    }

    #[test]
    fn scan_non_bell_has_no_closed_column() {
        let s = XState::new(0.4, 0.1, 0.2, 0.3, 0.1, 0.2).unwrap();
        let trace = scan(
            &s,
            &params(1.0, 0.5, 0.1, 0.3),
            &TimeGrid::new(1.0, 5).unwrap(),
        )
        .unwrap();
        assert!(trace.f_closed.is_none());
        assert!((trace.f_numeric[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c_diff_examples() {
        let v = BlochVector::bell_diagonal(0.5, -0.3, 0.1).unwrap();
        let p = params(1.0, 0.4, 0.2, 0.0);
        for t in [0.0, 1.0, 5.0] {
            assert!((c_diff_law(&v, &p, t).unwrap() - 0.8).abs() < 1e-14);
        }
        let p = params(0.6, 0.6, 0.2, 1.0);
        assert!((c_diff_law(&v, &p, 0.0).unwrap() - 0.8).abs() < 1e-15);
        // Δ = 0, B = 1, t = π/2: factor 1 − 2 sin² = −1
        let got = c_diff_law(&v, &p, FRAC_PI_2).unwrap();
        assert!((got + 0.8).abs() < 1e-12);
        assert!((c_diff_predicted(&v, &p, FRAC_PI_2).unwrap() - got).abs() < 1e-12);
        assert!(
            c_diff_cos_squared_reference(&v, &p, FRAC_PI_2)
                .unwrap()
                .abs()
                < 1e-12
        );
        let not_bell = BlochVector::new(0.1, 0.0, 0.1, 0.0, 0.0).unwrap();
        assert!(matches!(
            c_diff_law(&not_bell, &p, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let v = classify(&preset_werner(0.8).unwrap(), &params(1.0, 0.3, 0.2, 1.5)).unwrap();
        assert_eq!(v.kind, VerdictKind::Stationary);
        assert_eq!(v.reason, VerdictReason::C1EqualsC2);
        assert_eq!(v.period, None);

        let mix = preset_p_mixture(BellKind::PhiPlus, 0.5).unwrap();
        let v = classify(&mix, &params(0.7, 0.7, 0.1, 0.5)).unwrap();
        assert_eq!(v.kind, VerdictKind::Periodic);
        assert!((v.period.unwrap() - 2.0 * PI).abs() < 1e-12);

        let v = classify(&mix, &params(2.0, 0.0, 0.1, 1.0)).unwrap();
        assert!((v.period.unwrap() - 2.0 * PI / 8f64.sqrt()).abs() < 1e-12);
        assert!((v.period.unwrap() - 2.2214).abs() < 1e-4);

        let v = classify(&mix, &params(2.0, 0.0, 0.1, 0.0)).unwrap();
        assert_eq!(v.reason, VerdictReason::ZeroField);

        let v = classify(&preset_werner(0.5).unwrap(), &params(2.0, 0.0, 0.1, 1.0)).unwrap();
        assert_eq!(v.reason, VerdictReason::MaximallyMixed);
    }

    #[test]
    fn classify_non_bell_empirically() {
        // Ω = 0, b = c, w = 0: only the outer populations move, period π/η
        let s = XState::new(0.5, 0.2, 0.2, 0.1, 0.0, 0.0).unwrap();
        let p = params(1.0, -1.0, 0.3, 0.0);
        let v = classify(&s, &p).unwrap();
        assert_eq!(v.kind, VerdictKind::Periodic);
        assert_eq!(v.reason, VerdictReason::Generic);
        let eta = p.frequencies().eta;
        assert!((v.period.unwrap() - PI / eta).abs() / (PI / eta) < 1e-4);

        // H acts as a constant on each block
        let v = classify(&s, &params(0.0, 0.0, 0.8, 0.0)).unwrap();
        assert_eq!(v.kind, VerdictKind::Stationary);
    }

    #[test]
    fn detect_period_synthetic() {
        for amplitude in [0.01, 0.3, 1.0] {
            let eta = 0.75;
            let period = PI / eta;
            let trace = synthetic(amplitude, eta, 3.0 * period, 901);
            let got = detect_period(&trace, STATIONARY_THRESHOLD)
                .unwrap()
                .unwrap();
            assert!(
                (got - period).abs() / period < 1e-6,
                "A = {amplitude}: {got}"
            );
        }
    }

    #[test]
    fn detect_period_flat_and_short() {
        let flat = synthetic(0.0, 1.0, 10.0, 100);
        assert_eq!(detect_period(&flat, STATIONARY_THRESHOLD).unwrap(), None);
        let short = synthetic(0.5, 1.0, 2.0, 100);
        assert!(matches!(
            detect_period(&short, STATIONARY_THRESHOLD),
            Err(Error::InsufficientSpan { found: 1 })
        ));
    }
}
