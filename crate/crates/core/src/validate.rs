//! Randomized oracle-equivalence suite and adjudication of reference
//! expressions.
//!
//! Binding checks compare each closed form with the matrix-exponential and
//! eigensolver route and decide the exit status of `xdyn validate`. The
//! errata items compare published reference expressions with the same
//! oracle. Each item is reported as consistent or, when it disagrees, as a
//! corrected form with a coefficient fitted to the oracle by least squares.
//! Errata items never fail the run.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{c_diff_cos_squared_reference, evolve_closed, evolve_oracle};
use crate::error::Result;
use crate::fidelity::{
    fidelity_bell_closed, fidelity_wang, overlap_bloch_reference, overlap_element_reference,
};
use crate::linalg::{expm, trace_product, DEFAULT_TOL};
use crate::model::{hamiltonian, propagator, sinc, spectrum, CouplingParams};
use crate::sampling::{random_bell_diagonal, random_params, random_xstate};
use crate::states::{preset_p_mixture, preset_werner, BellKind, XState};

/// Agreement threshold for reference expressions.
pub const ERRATA_TOL: f64 = 1e-10;
const PARAM_RANGE: f64 = 2.0;
const T_MAX: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrataStatus {
    Consistent,
    InconsistentCorrected,
    InconsistentUnresolved,
}

impl ErrataStatus {
    pub fn label(&self) -> &'static str {
        match self {
            ErrataStatus::Consistent => "consistent",
            ErrataStatus::InconsistentCorrected => "inconsistent, corrected form fitted",
            ErrataStatus::InconsistentUnresolved => "inconsistent, no corrected form found",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrataFinding {
    pub item: &'static str,
    pub reference_form: &'static str,
    pub status: ErrataStatus,
    /// Largest disagreement of the reference form with the oracle.
    pub max_deviation: f64,
    pub corrected_form: Option<String>,
    /// Largest disagreement of the corrected form with the oracle.
    pub corrected_deviation: Option<f64>,
    pub note: Option<String>,
}

impl ErrataFinding {
    fn judge(
        item: &'static str,
        reference_form: &'static str,
        max_deviation: f64,
        corrected: impl FnOnce() -> (String, f64),
    ) -> Self {
        if max_deviation <= ERRATA_TOL {
            return Self {
                item,
                reference_form,
                status: ErrataStatus::Consistent,
                max_deviation,
                corrected_form: None,
                corrected_deviation: None,
                note: None,
            };
        }
        let (form, dev) = corrected();
        Self {
            item,
            reference_form,
            status: if dev <= ERRATA_TOL {
                ErrataStatus::InconsistentCorrected
            } else {
                ErrataStatus::InconsistentUnresolved
            },
            max_deviation,
            corrected_form: Some(form),
            corrected_deviation: Some(dev),
            note: None,
        }
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub cases: usize,
    pub checks: Vec<CheckOutcome>,
    pub errata: Vec<ErrataFinding>,
}

impl Report {
    pub fn all_binding_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "xdyn validate: seed {} cases {}",
            self.seed, self.cases
        );
        let _ = writeln!(out, "binding checks:");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  [{}] {:<28} cases={:<6} max_dev={:.3e} tol={:.0e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.cases,
                c.max_deviation,
                c.tolerance
            );
        }
        let _ = writeln!(out, "reference expressions:");
        for e in &self.errata {
            let _ = writeln!(out, "  {}: {}", e.item, e.status.label());
            let _ = writeln!(
                out,
                "      reference: {}  (max deviation {:.3e})",
                e.reference_form, e.max_deviation
            );
            if let (Some(form), Some(dev)) = (&e.corrected_form, e.corrected_deviation) {
                let _ = writeln!(out, "      corrected: {form}  (max deviation {dev:.3e})");
            }
            if let Some(note) = &e.note {
                let _ = writeln!(out, "      note: {note}");
            }
        }
        let _ = writeln!(
            out,
            "result: {}",
            if self.all_binding_passed() {
                "PASS"
            } else {
                "FAIL"
            }
        );
        out
    }
}

/// Least-squares slope through the origin of `ys` against `xs`.
fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let den: f64 = xs.iter().map(|x| x * x).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn max_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, x| {
        if x.is_nan() {
            f64::INFINITY
        } else {
            m.max(x.abs())
        }
    })
}

fn check(name: &'static str, cases: usize, tolerance: f64, max_deviation: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        cases,
        max_deviation,
        tolerance,
        passed: max_deviation <= tolerance,
    }
}

fn oracle_propagator(p: &CouplingParams, t: f64) -> Result<crate::linalg::ComplexMatrix4> {
    expm(&hamiltonian(p).scale(Complex64::new(0.0, -t)), DEFAULT_TOL)
}

pub fn run_suite(seed: u64, cases: usize) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = cases.max(1);
    let mut checks = Vec::new();

    // propagator vs expm
    let mut dev: f64 = 0.0;
    for _ in 0..cases {
        let p = random_params(&mut rng, PARAM_RANGE);
        let t = rng.gen_range(0.0..=T_MAX);
        let u = propagator(&p, t, true);
        dev = dev.max((u.matrix - oracle_propagator(&p, t)?).max_norm());
    }
    checks.push(check("propagator_vs_expm", cases, 1e-10, dev));

    // closed vs oracle evolution, with degenerate slices
    let mut dev: f64 = 0.0;
    for k in 0..cases {
        let s = random_xstate(&mut rng);
        let mut p = random_params(&mut rng, PARAM_RANGE);
        match k % 10 {
            0 => p.jy = p.jx + rng.gen_range(-1e-11..=1e-11),
            1 => p.field = 0.0,
            2 => {
                p.jy = p.jx;
                p.field = 0.0;
            }
            _ => {}
        }
        let t = rng.gen_range(0.0..=T_MAX);
        let a = evolve_closed(&s, &p, t)?;
        let b = evolve_oracle(&s, &p, t)?;
        dev = dev.max((*a.matrix() - *b.matrix()).max_norm());
    }
    checks.push(check("evolve_closed_vs_oracle", cases, 1e-10, dev));

    // Bloch round trip
    let mut dev: f64 = 0.0;
    for _ in 0..cases {
        let s = random_xstate(&mut rng);
        let back = XState::from_bloch(&s.to_bloch())?;
        let d = s
            .to_array()
            .iter()
            .zip(back.to_array())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        dev = dev.max(d);
    }
    checks.push(check("bloch_round_trip", cases, 1e-14, dev));

    // spectrum residuals and orthonormality
    let mut dev: f64 = 0.0;
    for k in 0..cases {
        let mut p = random_params(&mut rng, PARAM_RANGE);
        if k % 5 == 0 {
            p.jy = p.jx + rng.gen_range(-1e-12..=1e-12);
        }
        let h = hamiltonian(&p);
        let s = spectrum(&p);
        for i in 0..4 {
            let hv = h.apply(&s.eigenvectors[i]);
            let r = hv
                .iter()
                .zip(&s.eigenvectors[i])
                .map(|(x, v)| (x - v * s.energies[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            dev = dev.max(r);
            for j in 0..4 {
                let ip: Complex64 = (0..4)
                    .map(|m| s.eigenvectors[i][m].conj() * s.eigenvectors[j][m])
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((ip - want).norm());
            }
        }
    }
    checks.push(check("spectrum_eigenpairs", cases, 1e-10, dev));

    // Bell-diagonal closed-form fidelity
    let mut dev: f64 = 0.0;
    for _ in 0..cases {
        let s = random_bell_diagonal(&mut rng);
        let p = random_params(&mut rng, PARAM_RANGE);
        let t = rng.gen_range(0.0..=T_MAX);
        let f = fidelity_wang(&s.to_density(), &evolve_oracle(&s, &p, t)?)?;
        dev = dev.max((f - fidelity_bell_closed(&s.to_bloch(), &p, t)?).abs());
    }
    checks.push(check("bell_fidelity_closed_form", cases, 1e-10, dev));

    let errata = vec![
        adjudicate_overlap_bloch(&mut rng, cases)?,
        adjudicate_overlap_elements(&mut rng, cases)?,
        adjudicate_inner_coherence_sign(&mut rng, cases)?,
        adjudicate_c2_definition(&mut rng, cases),
        adjudicate_werner_coefficient(),
        adjudicate_psi_mixture_pattern()?,
        adjudicate_normalization(&mut rng, cases),
        adjudicate_c_diff_law(&mut rng, cases)?,
    ];

    Ok(Report {
        seed,
        cases,
        checks,
        errata,
    })
}

/// w(a − d) B Δ sin²(ηt)/η², the feature the overlap residual is fitted on.
fn cross_feature(s: &XState, p: &CouplingParams, t: f64) -> f64 {
    let f = p.frequencies();
    let st = t * sinc(f.eta * t);
    s.w() * (s.a() - s.d()) * p.field * f.delta * st * st
}

fn oracle_overlap(s: &XState, p: &CouplingParams, t: f64) -> Result<f64> {
    let rho_t = evolve_oracle(s, p, t)?;
    Ok(trace_product(&s.matrix(), rho_t.matrix()).re)
}

fn adjudicate_overlap<F>(
    rng: &mut ChaCha8Rng,
    cases: usize,
    item: &'static str,
    reference_form: &'static str,
    reference: F,
) -> Result<ErrataFinding>
where
    F: Fn(&XState, &CouplingParams, f64) -> f64,
{
    let mut residual = Vec::with_capacity(cases);
    let mut feature = Vec::with_capacity(cases);
    for _ in 0..cases {
        let s = random_xstate(rng);
        let p = random_params(rng, PARAM_RANGE);
        let t = rng.gen_range(0.0..=T_MAX);
        residual.push(oracle_overlap(&s, &p, t)? - reference(&s, &p, t));
        feature.push(cross_feature(&s, &p, t));
    }
    let mut bell_dev: f64 = 0.0;
    for _ in 0..cases {
        let s = random_bell_diagonal(rng);
        let p = random_params(rng, PARAM_RANGE);
        let t = rng.gen_range(0.0..=T_MAX);
        bell_dev = bell_dev.max((oracle_overlap(&s, &p, t)? - reference(&s, &p, t)).abs());
    }
    let finding = ErrataFinding::judge(
        item,
        reference_form,
        max_abs(residual.iter().copied()),
        || {
            let k = fit_slope(&feature, &residual);
            let dev = max_abs(residual.iter().zip(&feature).map(|(r, f)| r - k * f));
            (format!("reference + {k:.6}·w(a−d)BΔ·sin²(ηt)/η²"), dev)
        },
    );
    Ok(finding.with_note(format!(
        "Bell-diagonal subfamily max deviation {bell_dev:.3e} ({})",
        if bell_dev <= ERRATA_TOL {
            "consistent"
        } else {
            "inconsistent"
        }
    )))
}

fn adjudicate_overlap_bloch(rng: &mut ChaCha8Rng, cases: usize) -> Result<ErrataFinding> {
    adjudicate_overlap(
        rng,
        cases,
        "overlap_bloch_form",
        "Tr(ρ(0)ρ(t)) = [2(2+2c3²) + 2(s1+s2)²(cos²ηt + (B²−Δ²)sin²ηt/η²) − 2(s1−s2)² + 4(s1−s2)²cos²Ωt + 2(c1+c2)² + 2(c1−c2)²]/16 − (c1−c2)²B²sin²ηt/(4η²)",
        |s, p, t| overlap_bloch_reference(&s.to_bloch(), p, t),
    )
}

fn adjudicate_overlap_elements(rng: &mut ChaCha8Rng, cases: usize) -> Result<ErrataFinding> {
    adjudicate_overlap(
        rng,
        cases,
        "overlap_element_form",
        "Tr(ρ(0)ρ(t)) = (a²+d²)μ₊μ₋ + (b−c)²cos²Ωt − 2adδ² + 2bc + 2z² + 2w²(1 − 2B²sin²ηt/η²)",
        overlap_element_reference,
    )
}

fn adjudicate_inner_coherence_sign(rng: &mut ChaCha8Rng, cases: usize) -> Result<ErrataFinding> {
    let mut residual = Vec::with_capacity(cases);
    let mut feature = Vec::with_capacity(cases);
    for _ in 0..cases {
        let s = random_xstate(rng);
        let p = random_params(rng, PARAM_RANGE);
        let t = rng.gen_range(0.0..=T_MAX);
        let oracle = evolve_oracle(&s, &p, t)?.matrix()[(1, 2)];
        let half_sin = (s.b() - s.c()) * (2.0 * p.frequencies().omega * t).sin() / 2.0;
        // reference: z − i(b − c) sin(2Ωt)/2
        let reference_value = Complex64::new(s.z(), -half_sin);
        residual.push((oracle - reference_value).norm());
        // fit the sign s in z + i·s·(b − c) sin(2Ωt)/2 on the imaginary part
        feature.push((half_sin, oracle.im));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = feature.iter().copied().unzip();
    Ok(ErrataFinding::judge(
        "inner_coherence_element",
        "ρ23(t) = z − i(b−c)sin(2Ωt)/2",
        max_abs(residual.into_iter()),
        || {
            let k = fit_slope(&xs, &ys);
            let dev = max_abs(xs.iter().zip(&ys).map(|(x, y)| y - k * x));
            (format!("ρ23(t) = z + i·({k:.6})·(b−c)sin(2Ωt)/2"), dev)
        },
    ))
}

fn adjudicate_c2_definition(rng: &mut ChaCha8Rng, cases: usize) -> ErrataFinding {
    let mut xs = Vec::with_capacity(cases);
    let mut ys = Vec::with_capacity(cases);
    for _ in 0..cases {
        let s = random_xstate(rng);
        xs.push(s.z() - s.w());
        ys.push(s.to_bloch().c2());
    }
    ErrataFinding::judge(
        "c2_definition",
        "c2 = z − w",
        max_abs(xs.iter().zip(&ys).map(|(x, y)| y - x)),
        || {
            let k = fit_slope(&xs, &ys);
            let dev = max_abs(xs.iter().zip(&ys).map(|(x, y)| y - k * x));
            (format!("c2 = Tr(ρ σy⊗σy) = {k:.6}·(z − w)"), dev)
        },
    )
}

fn adjudicate_werner_coefficient() -> ErrataFinding {
    let xs: Vec<f64> = (0..=40).map(|k| -1.0 + k as f64 * 0.05).collect();
    let lin: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
    let mut coeffs = Vec::with_capacity(3 * xs.len());
    let mut feats = Vec::with_capacity(3 * xs.len());
    for (x, l) in xs.iter().zip(&lin) {
        let v = preset_werner(*x).expect("x in range").to_bloch();
        for c in [v.c1(), v.c2(), v.c3()] {
            coeffs.push(c);
            feats.push(*l);
        }
    }
    ErrataFinding::judge(
        "werner_bloch_coefficient",
        "c1 = c2 = c3 = (2x − 1)/12",
        max_abs(coeffs.iter().zip(&feats).map(|(c, l)| c - l / 12.0)),
        || {
            let k = fit_slope(&feats, &coeffs);
            let dev = max_abs(coeffs.iter().zip(&feats).map(|(c, l)| c - k * l));
            (format!("c1 = c2 = c3 = (2x − 1)/{:.6}", 1.0 / k), dev)
        },
    )
    .with_note("c1 = c2 holds for every x, so the stationarity conclusion is unaffected".into())
}

fn adjudicate_psi_mixture_pattern() -> Result<ErrataFinding> {
    let mut dev: f64 = 0.0;
    let mut corrected_dev: f64 = 0.0;
    for k in 0..=20 {
        let p = k as f64 / 20.0;
        for (kind, sign) in [(BellKind::PsiPlus, 1.0), (BellKind::PsiMinus, -1.0)] {
            let v = preset_p_mixture(kind, p)?.to_bloch();
            // read as c_i = p for |01⟩ ± |10⟩ with the sign of the superposition
            for c in [v.c1(), v.c2(), v.c3()] {
                dev = dev.max((c - sign * p).abs());
            }
            for (c, want) in [v.c1(), v.c2(), v.c3()]
                .iter()
                .zip([sign * p, sign * p, -p])
            {
                corrected_dev = corrected_dev.max((c - want).abs());
            }
        }
    }
    Ok(ErrataFinding::judge(
        "psi_mixture_bloch_pattern",
        "c1 = c2 = c3 = ±p for p|ψ±⟩⟨ψ±| + (1−p)I/4",
        dev,
        || {
            (
                "(c1, c2, c3) = (±p, ±p, −p); c1 = c2 in both cases".into(),
                corrected_dev,
            )
        },
    ))
}

fn adjudicate_normalization(rng: &mut ChaCha8Rng, cases: usize) -> ErrataFinding {
    let mut dev: f64 = 0.0;
    let mut fitted_exponents = Vec::new();
    let mut ratios = Vec::new();
    for _ in 0..cases {
        let p = random_params(rng, PARAM_RANGE);
        let f = p.frequencies();
        if f.delta.abs() < 1e-6 {
            continue;
        }
        let s = spectrum(&p);
        for (k, sign) in [(0usize, 1.0), (1, -1.0)] {
            let r = (p.field + sign * f.eta) / f.delta;
            let reference_value = (1.0 + r).powf(-0.5);
            // unit norm of N·(r, 1) is the oracle requirement
            let norm = reference_value * (1.0 + r * r).sqrt();
            dev = dev.max(if norm.is_finite() {
                (norm - 1.0).abs()
            } else {
                f64::INFINITY
            });
            let oracle_n = s.norms[k];
            let lhs = 1.0 / (oracle_n * oracle_n) - 1.0;
            if r.abs() > 1e-3 && (r.abs() - 1.0).abs() > 1e-2 && lhs > 0.0 {
                fitted_exponents.push(lhs.ln() / r.abs().ln());
            }
            ratios.push((r, oracle_n));
        }
    }
    ErrataFinding::judge(
        "eigenvector_normalization",
        "N± = (1 + (B ± η)/Δ)^(−1/2)",
        dev,
        || {
            let q = fitted_exponents.iter().sum::<f64>() / fitted_exponents.len().max(1) as f64;
            let corrected = max_abs(
                ratios
                    .iter()
                    .map(|(r, n)| (1.0 + r.abs().powf(q)).powf(-0.5) - n),
            );
            (format!("N± = (1 + |(B ± η)/Δ|^{q:.6})^(−1/2)"), corrected)
        },
    )
    .with_note("the reference expression is undefined (NaN) whenever 1 + (B ± η)/Δ < 0".into())
}

fn adjudicate_c_diff_law(rng: &mut ChaCha8Rng, cases: usize) -> Result<ErrataFinding> {
    let mut ys = Vec::with_capacity(cases);
    let mut reference_residuals = Vec::with_capacity(cases);
    let mut base = Vec::with_capacity(cases);
    let mut feature = Vec::with_capacity(cases);
    let mut crossings = 0usize;
    for _ in 0..cases {
        let s = random_bell_diagonal(rng);
        let p = random_params(rng, PARAM_RANGE);
        let t = rng.gen_range(0.0..=T_MAX);
        let v = s.to_bloch();
        let oracle = 4.0 * evolve_oracle(&s, &p, t)?.matrix()[(0, 3)].re;
        let d0 = v.c1() - v.c2();
        let st = t * sinc(p.frequencies().eta * t);
        ys.push(oracle - d0);
        feature.push(-d0 * p.field * p.field * st * st);
        reference_residuals.push(c_diff_cos_squared_reference(&v, &p, t)? - oracle);
        base.push(d0);
        if d0 * oracle < 0.0 && d0.abs() > 1e-6 {
            crossings += 1;
        }
    }
    let finding = ErrataFinding::judge(
        "c1_minus_c2_law",
        "c1(t) − c2(t) = [c1(0) − c2(0)]·cos²(ηt)",
        max_abs(reference_residuals.into_iter()),
        || {
            let k = fit_slope(&feature, &ys);
            let dev = max_abs(ys.iter().zip(&feature).map(|(y, f)| y - k * f));
            (
                format!("c1(t) − c2(t) = [c1(0) − c2(0)]·(1 − {k:.6}·B²sin²(ηt)/η²)"),
                dev,
            )
        },
    );
    Ok(finding.with_note(format!(
        "sign of c1 − c2 flipped in {crossings} of {cases} draws (possible whenever B² > Δ²)"
    )))
}
