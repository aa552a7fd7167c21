//! Dense complex 4×4 arithmetic for two-qubit operators.
//!
//! Everything here is fixed-size and allocation free. Basis order is
//! |00⟩, |01⟩, |10⟩, |11⟩ (first qubit is the most significant bit).
//!
//! [`expm`] and [`eigvals_hermitian`] are deliberately generic numerical
//! routines: they know nothing about the Heisenberg model and serve as the
//! reference against which the closed forms in [`crate::model`] and
//! [`crate::dynamics`] are checked.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance for [`expm`] and [`eigvals_hermitian`].
pub const DEFAULT_TOL: f64 = 1e-12;

/// Sweep limit for the cyclic Jacobi eigensolver.
pub const MAX_JACOBI_SWEEPS: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2×2 complex matrix, used only to build Kronecker products.
pub type Matrix2 = [[Complex64; 2]; 2];

pub fn pauli_i() -> Matrix2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn pauli_x() -> Matrix2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn pauli_y() -> Matrix2 {
    [[ZERO, -I], [I, ZERO]]
}

pub fn pauli_z() -> Matrix2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

/// Row-major complex 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix4 {
    entries: [[Complex64; 4]; 4],
}

impl Default for ComplexMatrix4 {
    fn default() -> Self {
        Self::zeros()
    }
}

impl ComplexMatrix4 {
    pub const fn from_rows(entries: [[Complex64; 4]; 4]) -> Self {
        Self { entries }
    }

    pub fn from_real_rows(rows: [[f64; 4]; 4]) -> Self {
        let mut m = Self::zeros();
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.entries[i][j] = Complex64::new(x, 0.0);
            }
        }
        m
    }

    pub const fn zeros() -> Self {
        Self {
            entries: [[ZERO; 4]; 4],
        }
    }

    pub fn identity() -> Self {
        Self::from_diag([ONE; 4])
    }

    pub fn from_diag(diag: [Complex64; 4]) -> Self {
        let mut m = Self::zeros();
        for (k, d) in diag.into_iter().enumerate() {
            m.entries[k][k] = d;
        }
        m
    }

    /// Kronecker product `a ⊗ b`.
    pub fn kron(a: &Matrix2, b: &Matrix2) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.entries[i][j] = a[i / 2][j / 2] * b[i % 2][j % 2];
            }
        }
        m
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: &[Complex64; 4], v: &[Complex64; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.entries[i][j] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> &[[Complex64; 4]; 4] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.entries[i][j] = self.entries[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|k| self.entries[k][k]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut m = *self;
        m.entries.iter_mut().flatten().for_each(|x| *x *= s);
        m
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .fold(0.0, |acc: f64, x| acc.hypot(x.norm()))
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn one_norm(&self) -> f64 {
        (0..4)
            .map(|j| (0..4).map(|i| self.entries[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(|x| x.is_finite())
    }

    /// ‖m − m†‖_max.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).max_norm()
    }

    /// ‖m·m† − I‖_max.
    pub fn unitarity_defect(&self) -> f64 {
        (*self * self.adjoint() - Self::identity()).max_norm()
    }

    /// Commutator `self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64; 4]) -> [Complex64; 4] {
        let mut out = [ZERO; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| self.entries[i][j] * v[j]).sum();
        }
        out
    }

    /// `u · self · u†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        *u * *self * u.adjoint()
    }
}

impl Index<(usize, usize)> for ComplexMatrix4 {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i][j]
    }
}

impl Add for ComplexMatrix4 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ComplexMatrix4 {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..4 {
            for j in 0..4 {
                self.entries[i][j] += rhs.entries[i][j];
            }
        }
    }
}

impl Sub for ComplexMatrix4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for ComplexMatrix4 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_real(-1.0)
    }
}

impl Mul for ComplexMatrix4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.entries[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..4 {
                    m.entries[i][j] += a * rhs.entries[k][j];
                }
            }
        }
        m
    }
}

/// Tr(a·b), summed directly without forming the product.
pub fn trace_product(a: &ComplexMatrix4, b: &ComplexMatrix4) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The input is scaled by 2^-s so that its 1-norm is at most 1/2. The Taylor
/// series of the scaled matrix is then summed until the tail bound
/// `x^(m+1) / (m+1)! / (1 - x/(m+2))` drops below `tol / 2^s` and the last
/// term no longer changes the sum in floating point.
pub fn expm(m: &ComplexMatrix4, tol: f64) -> Result<ComplexMatrix4> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "expm tolerance must be positive and finite, got {tol}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidInput(
            "expm input has non-finite entries".into(),
        ));
    }

    let norm = m.one_norm();
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = m.scale_real(0.5f64.powi(squarings as i32));
    let x = scaled.one_norm();
    let target = tol / 2f64.powi(squarings as i32);

    let mut sum = ComplexMatrix4::identity();
    let mut term = ComplexMatrix4::identity();
    // x^k / k! for the current k, tracked alongside the matrix terms
    let mut bound = 1.0;
    for k in 1..=40u32 {
        term = (term * scaled).scale_real(1.0 / k as f64);
        sum += term;
        bound *= x / k as f64;
        let tail = bound * x / (k + 1) as f64 / (1.0 - x / (k + 2) as f64);
        // also run to round-off so the squarings do not amplify truncation
        if tail <= target && term.max_norm() <= f64::EPSILON * sum.max_norm() {
            break;
        }
    }

    for _ in 0..squarings {
        sum = sum * sum;
    }
    Ok(sum)
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// returned in ascending order.
///
/// Iterates until the off-diagonal Frobenius mass is at most
/// `tol · max(1, ‖m‖_F)`; more than [`MAX_JACOBI_SWEEPS`] sweeps is an error.
pub fn eigvals_hermitian(m: &ComplexMatrix4, tol: f64) -> Result<[f64; 4]> {
    if !m.is_finite() {
        return Err(Error::InvalidInput(
            "eigensolver input has non-finite entries".into(),
        ));
    }
    let defect = m.hermiticity_defect();
    if defect > tol {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (defect {defect:e} > {tol:e})"
        )));
    }

    let mut a = m.entries;
    // symmetrize so the diagonal is exactly real
    for i in 0..4 {
        a[i][i] = Complex64::new(a[i][i].re, 0.0);
        for j in (i + 1)..4 {
            let avg = (a[i][j] + a[j][i].conj()) * 0.5;
            a[i][j] = avg;
            a[j][i] = avg.conj();
        }
    }

    let threshold = tol * m.frobenius_norm().max(1.0);
    let off_diagonal = |a: &[[Complex64; 4]; 4]| -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    s += a[i][j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_diagonal(&a) > threshold {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NotConverged {
                sweeps,
                off_diagonal: off_diagonal(&a),
            });
        }
        sweeps += 1;
        for p in 0..3 {
            for q in (p + 1)..4 {
                jacobi_rotate(&mut a, p, q);
            }
        }
    }

    let mut vals = [a[0][0].re, a[1][1].re, a[2][2].re, a[3][3].re];
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Annihilates `a[p][q]` with the unitary similarity `J† a J`, where
/// `J = D·R` combines a phase on column `q` with a real plane rotation.
fn jacobi_rotate(a: &mut [[Complex64; 4]; 4], p: usize, q: usize) {
    let apq = a[p][q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag; // e^{iφ}
    let theta = (a[q][q].re - a[p][p].re) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    // a ← a·J
    for row in a.iter_mut() {
        let (xp, xq) = (row[p], row[q]);
        row[p] = xp * jpp + xq * jqp;
        row[q] = xp * jpq + xq * jqq;
    }
    // a ← J†·a
    for k in 0..4 {
        let (xp, xq) = (a[p][k], a[q][k]);
        a[p][k] = jpp.conj() * xp + jqp.conj() * xq;
        a[q][k] = jpq.conj() * xp + jqq.conj() * xq;
    }
    a[p][q] = ZERO;
    a[q][p] = ZERO;
    a[p][p].im = 0.0;
    a[q][q].im = 0.0;
}
