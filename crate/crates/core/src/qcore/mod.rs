//! Dense complex linear algebra for the emitter: 2×2 operators, density
//! matrices, and 4×4 superoperators acting on column-stacked `vec(ρ)`.
//!
//! Basis order is fixed crate-wide: index 0 is the excited state `|e⟩`,
//! index 1 the ground state `|g⟩`. Vectorization stacks columns, so
//! `vec(ρ) = [ρ_ee, ρ_ge, ρ_eg, ρ_gg]` and `vec(AρB) = (Bᵀ⊗A) vec(ρ)`.

mod eigen;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eigen::{eigen4, eigenvalues4, leading_real_eigenvalue, Eigen4};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance for Hermiticity and unit trace of a density matrix.
pub const STATE_TOL: f64 = 1e-12;
/// Smallest eigenvalue a density matrix may have before it counts as negative.
pub const POSITIVITY_TOL: f64 = -1e-12;

/// A 2×2 complex operator on the emitter.
#[derive(Clone, Copy, PartialEq)]
pub struct Operator2 {
    m: [[C64; 2]; 2],
}

impl Operator2 {
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self> {
        for (i, row) in m.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Operator2 { m })
    }

    /// Builds an operator without the finiteness check. Callers must only
    /// pass entries computed from finite inputs.
    pub(crate) const fn from_entries(m: [[C64; 2]; 2]) -> Self {
        Operator2 { m }
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Result<Self> {
        Self::new([
            [C64::new(m[0][0], 0.0), C64::new(m[0][1], 0.0)],
            [C64::new(m[1][0], 0.0), C64::new(m[1][1], 0.0)],
        ])
    }

    pub const fn zero() -> Self {
        Operator2 { m: [[ZERO, ZERO], [ZERO, ZERO]] }
    }

    pub const fn identity() -> Self {
        Operator2 { m: [[ONE, ZERO], [ZERO, ONE]] }
    }

    /// `σ_x = |e⟩⟨g| + |g⟩⟨e|`
    pub const fn sigma_x() -> Self {
        Operator2 { m: [[ZERO, ONE], [ONE, ZERO]] }
    }

    /// Raising operator `σ₊ = |e⟩⟨g|`.
    pub const fn sigma_plus() -> Self {
        Operator2 { m: [[ZERO, ONE], [ZERO, ZERO]] }
    }

    /// Lowering operator `σ₋ = |g⟩⟨e|`.
    pub const fn sigma_minus() -> Self {
        Operator2 { m: [[ZERO, ZERO], [ONE, ZERO]] }
    }

    /// `|e⟩⟨e|`
    pub const fn proj_excited() -> Self {
        Operator2 { m: [[ONE, ZERO], [ZERO, ZERO]] }
    }

    /// `|g⟩⟨g|`
    pub const fn proj_ground() -> Self {
        Operator2 { m: [[ZERO, ZERO], [ZERO, ONE]] }
    }

    pub fn diag(a: C64, b: C64) -> Self {
        Operator2 { m: [[a, ZERO], [ZERO, b]] }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[row][col]
    }

    #[inline]
    pub fn entries(&self) -> &[[C64; 2]; 2] {
        &self.m
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Operator2 {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
        }
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Operator2 { m: [[m[0][0], m[1][0]], [m[0][1], m[1][1]]] }
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.m;
        Operator2 {
            m: [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]],
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn commutator(&self, other: &Operator2) -> Self {
        *self * *other - *other * *self
    }

    pub fn anticommutator(&self, other: &Operator2) -> Self {
        *self * *other + *other * *self
    }

    /// `A ρ A†`
    pub fn sandwich(&self, rho: &Operator2) -> Self {
        *self * *rho * self.adjoint()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest elementwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator2) -> f64 {
        (*self - *other).max_abs()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest deviation from Hermiticity, `max |A_ij − conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.m;
        let off = (m[0][1] - m[1][0].conj()).norm();
        off.max(m[0][0].im.abs()).max(m[1][1].im.abs())
    }

    /// Hermitian part `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale_re(0.5)
    }

    /// Eigenvalues of the Hermitian part, in ascending order.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = 0.5 * (self.m[0][1] + self.m[1][0].conj());
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mid - rad, mid + rad]
    }
}

impl fmt::Debug for Operator2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

impl Add for Operator2 {
    type Output = Operator2;
    fn add(self, rhs: Operator2) -> Operator2 {
        let (a, b) = (&self.m, &rhs.m);
        Operator2 {
            m: [
                [a[0][0] + b[0][0], a[0][1] + b[0][1]],
                [a[1][0] + b[1][0], a[1][1] + b[1][1]],
            ],
        }
    }
}

impl Sub for Operator2 {
    type Output = Operator2;
    fn sub(self, rhs: Operator2) -> Operator2 {
        self + (-rhs)
    }
}

impl Neg for Operator2 {
    type Output = Operator2;
    fn neg(self) -> Operator2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Operator2 {
    type Output = Operator2;
    fn mul(self, rhs: Operator2) -> Operator2 {
        let (a, b) = (&self.m, &rhs.m);
        Operator2 {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
        }
    }
}

/// A validated emitter state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    op: Operator2,
}

impl DensityMatrix {
    pub fn new(op: Operator2) -> Result<Self> {
        check_state(&op)?;
        Ok(DensityMatrix { op })
    }

    /// Normalizes an unnormalized positive operator (as produced by a Kraus
    /// sandwich) to unit trace and strips the roundoff anti-Hermitian part.
    pub(crate) fn from_unnormalized(op: &Operator2, trace: f64) -> Self {
        let rho = op.hermitian_part().scale_re(1.0 / trace);
        let rho = DensityMatrix { op: rho };
        rho.debug_validate();
        rho
    }

    /// Wraps an operator that is a density matrix by construction (for
    /// example the image of one under a trace-preserving channel).
    pub(crate) fn from_channel_output(op: Operator2) -> Self {
        let rho = DensityMatrix { op: op.hermitian_part() };
        rho.debug_validate();
        rho
    }

    pub fn excited() -> Self {
        DensityMatrix { op: Operator2::proj_excited() }
    }

    pub fn ground() -> Self {
        DensityMatrix { op: Operator2::proj_ground() }
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix { op: Operator2::identity().scale_re(0.5) }
    }

    /// `diag(p, 1 − p)` in the `{|e⟩, |g⟩}` basis.
    pub fn diagonal(p_excited: f64) -> Result<Self> {
        Self::new(Operator2::diag(
            C64::new(p_excited, 0.0),
            C64::new(1.0 - p_excited, 0.0),
        ))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) amplitude pair `(α, β)`
    /// on `(|e⟩, |g⟩)`.
    pub fn pure(alpha: C64, beta: C64) -> Result<Self> {
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("zero or non-finite amplitudes".into()));
        }
        let (a, b) = (alpha / n, beta / n);
        Self::new(Operator2::new([
            [a * a.conj(), a * b.conj()],
            [b * a.conj(), b * b.conj()],
        ])?)
    }

    /// σ_x eigenstate `|±⟩ = (|e⟩ ± |g⟩)/√2`.
    pub fn sigma_x_eigenstate(sign: f64) -> Self {
        let s = sign.signum();
        DensityMatrix {
            op: Operator2::from_entries([
                [C64::new(0.5, 0.0), C64::new(0.5 * s, 0.0)],
                [C64::new(0.5 * s, 0.0), C64::new(0.5, 0.0)],
            ]),
        }
    }

    #[inline]
    pub fn op(&self) -> &Operator2 {
        &self.op
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.op.get(row, col)
    }

    pub fn excited_population(&self) -> f64 {
        self.op.get(0, 0).re
    }

    pub fn ground_population(&self) -> f64 {
        self.op.get(1, 1).re
    }

    /// `⟨σ_x⟩ = 2 Re ρ_eg`
    pub fn sigma_x_expectation(&self) -> f64 {
        2.0 * self.op.get(0, 1).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.op.hermitian_eigenvalues()[0]
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        trace_distance(&self.op, &other.op)
    }

    /// Re-checks the three state invariants.
    pub fn validate(&self) -> Result<()> {
        check_state(&self.op)
    }

    #[inline]
    pub(crate) fn debug_validate(&self) {
        #[cfg(debug_assertions)]
        if let Err(e) = check_state(&self.op) {
            panic!("density-matrix invariant violated: {e}; state {:?}", self.op);
        }
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix{:?}", self.op)
    }
}

fn check_state(op: &Operator2) -> Result<()> {
    let herm = op.hermiticity_defect();
    if !(herm <= STATE_TOL) {
        return Err(Error::InvalidState(format!("Hermiticity defect {herm:e}")));
    }
    let tr = op.trace();
    if !((tr.re - 1.0).abs() <= STATE_TOL && tr.im.abs() <= STATE_TOL) {
        return Err(Error::InvalidState(format!("trace {tr}")));
    }
    let min = op.hermitian_eigenvalues()[0];
    if !(min >= POSITIVITY_TOL) {
        return Err(Error::InvalidState(format!("minimum eigenvalue {min:e}")));
    }
    Ok(())
}

/// Trace distance `½‖A − B‖₁` between two Hermitian operators.
pub fn trace_distance(a: &Operator2, b: &Operator2) -> f64 {
    let [lo, hi] = (*a - *b).hermitian_eigenvalues();
    0.5 * (lo.abs() + hi.abs())
}

/// Column-stacked `vec(ρ)`.
pub fn vectorize(op: &Operator2) -> [C64; 4] {
    [op.get(0, 0), op.get(1, 0), op.get(0, 1), op.get(1, 1)]
}

pub fn unvectorize(v: &[C64; 4]) -> Operator2 {
    Operator2::from_entries([[v[0], v[2]], [v[1], v[3]]])
}

/// A 4×4 complex matrix acting on `vec(ρ)`.
#[derive(Clone, Copy, PartialEq)]
pub struct Superoperator4 {
    m: [[C64; 4]; 4],
}

impl Superoperator4 {
    pub fn new(m: [[C64; 4]; 4]) -> Result<Self> {
        for (i, row) in m.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Superoperator4 { m })
    }

    pub const fn zero() -> Self {
        Superoperator4 { m: [[ZERO; 4]; 4] }
    }

    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Superoperator4 { m }
    }

    pub fn diag(d: [C64; 4]) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = d[i];
        }
        Superoperator4 { m }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[row][col]
    }

    #[inline]
    pub fn entries(&self) -> &[[C64; 4]; 4] {
        &self.m
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn apply_vec(&self, v: &[C64; 4]) -> [C64; 4] {
        let mut out = [ZERO; 4];
        for (o, row) in out.iter_mut().zip(&self.m) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Applies the superoperator to an operator via `unvec(S · vec(ρ))`.
    pub fn apply(&self, op: &Operator2) -> Operator2 {
        unvectorize(&self.apply_vec(&vectorize(op)))
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.m[i][i]).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Superoperator4) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> C64 {
        let mut a = self.m;
        let mut det = ONE;
        for k in 0..4 {
            let p = (k..4)
                .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
                .unwrap_or(k);
            if a[p][k] == ZERO {
                return ZERO;
            }
            if p != k {
                a.swap(p, k);
                det = -det;
            }
            det *= a[k][k];
            for i in k + 1..4 {
                let f = a[i][k] / a[k][k];
                for j in k..4 {
                    let t = a[k][j];
                    a[i][j] -= f * t;
                }
            }
        }
        det
    }

    /// Solves `S x = b`; `None` when `S` is numerically singular.
    pub fn solve(&self, b: &[C64; 4]) -> Option<[C64; 4]> {
        lu_solve(self.m, *b)
    }
}

impl fmt::Debug for Superoperator4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.m.iter()).finish()
    }
}

impl Add for Superoperator4 {
    type Output = Superoperator4;
    fn add(self, rhs: Superoperator4) -> Superoperator4 {
        let mut out = self;
        for (a, b) in out.m.iter_mut().flatten().zip(rhs.m.iter().flatten()) {
            *a += b;
        }
        out
    }
}

impl Sub for Superoperator4 {
    type Output = Superoperator4;
    fn sub(self, rhs: Superoperator4) -> Superoperator4 {
        self + rhs.scale_re(-1.0)
    }
}

impl Mul for Superoperator4 {
    type Output = Superoperator4;
    fn mul(self, rhs: Superoperator4) -> Superoperator4 {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, z) in row.iter_mut().enumerate() {
                *z = (0..4).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        Superoperator4 { m }
    }
}

pub(crate) fn lu_solve(mut a: [[C64; 4]; 4], mut b: [C64; 4]) -> Option<[C64; 4]> {
    let scale = a
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for k in 0..4 {
        let p = (k..4).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))?;
        if a[p][k].norm() <= 1e-300 * scale {
            return None;
        }
        a.swap(p, k);
        b.swap(p, k);
        for i in k + 1..4 {
            let f = a[i][k] / a[k][k];
            for j in k..4 {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
            let t = b[k];
            b[i] -= f * t;
        }
    }
    let mut x = [ZERO; 4];
    for i in (0..4).rev() {
        let s: C64 = (i + 1..4).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// The superoperator of `ρ ↦ A ρ B`, i.e. `Bᵀ ⊗ A` in the column-stacking
/// convention.
pub fn sandwich_superop(a: &Operator2, b: &Operator2) -> Superoperator4 {
    let mut m = [[ZERO; 4]; 4];
    for cb in 0..2 {
        for ra in 0..2 {
            for qb in 0..2 {
                for pa in 0..2 {
                    // out index (col c, row r) = 2c + r; in index (col q, row p) = 2q + p
                    m[2 * cb + ra][2 * qb + pa] = b.get(qb, cb) * a.get(ra, pa);
                }
            }
        }
    }
    Superoperator4 { m }
}

/// Superoperator of the commutator map `ρ ↦ Hρ − ρH`.
pub fn commutator_superop(h: &Operator2) -> Superoperator4 {
    let id = Operator2::identity();
    sandwich_superop(h, &id) - sandwich_superop(&id, h)
}

/// Superoperator of the anticommutator map `ρ ↦ Aρ + ρA`.
pub fn anticommutator_superop(a: &Operator2) -> Superoperator4 {
    let id = Operator2::identity();
    sandwich_superop(a, &id) + sandwich_superop(&id, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_sandwich_is_identity() {
        let id = Operator2::identity();
        let s = sandwich_superop(&id, &id);
        assert_eq!(s, Superoperator4::identity());
    }

    #[test]
    fn sigma_x_conjugation_flips_populations() {
        let sx = Operator2::sigma_x();
        let s = sandwich_superop(&sx, &sx);
        let out = s.apply(DensityMatrix::excited().op());
        assert!(out.max_abs_diff(DensityMatrix::ground().op()) < 1e-15);
        // permutation matrix: every row has exactly one unit entry
        for i in 0..4 {
            let row: Vec<f64> = (0..4).map(|j| s.get(i, j).norm()).collect();
            assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn vectorization_is_column_stacking() {
        let a = Operator2::new([[c(1.0, 0.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]]).unwrap();
        let v = vectorize(&a);
        assert_eq!(v, [c(1.0, 0.0), c(3.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert_eq!(unvectorize(&v), a);
    }

    #[test]
    fn non_finite_entries_rejected() {
        let bad = Operator2::new([[c(f64::NAN, 0.0), ZERO], [ZERO, ONE]]);
        assert!(matches!(bad, Err(Error::NonFinite { row: 0, col: 0 })));
        let mut m = [[ZERO; 4]; 4];
        m[2][3] = c(0.0, f64::INFINITY);
        assert!(matches!(Superoperator4::new(m), Err(Error::NonFinite { row: 2, col: 3 })));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::diagonal(0.3).is_ok());
        assert!(DensityMatrix::diagonal(1.2).is_err());
        let non_herm = Operator2::new([[c(0.5, 0.0), c(0.1, 0.0)], [c(0.2, 0.0), c(0.5, 0.0)]]).unwrap();
        assert!(DensityMatrix::new(non_herm).is_err());
        let bad_trace = Operator2::diag(c(0.5, 0.0), c(0.6, 0.0));
        assert!(DensityMatrix::new(bad_trace).is_err());
        // tiny negative eigenvalue within tolerance is accepted
        let nearly = Operator2::diag(c(1.0 + 5e-13, 0.0), c(-5e-13, 0.0));
        assert!(DensityMatrix::new(nearly).is_ok());
    }

    #[test]
    fn trace_distance_of_orthogonal_states_is_one() {
        let d = DensityMatrix::excited().trace_distance(&DensityMatrix::ground());
        assert!((d - 1.0).abs() < 1e-15);
        let p = DensityMatrix::sigma_x_eigenstate(1.0);
        let m = DensityMatrix::sigma_x_eigenstate(-1.0);
        assert!((p.trace_distance(&m) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn determinant_of_triangular_matrix() {
        let mut m = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                m[i][j] = c((i + j + 1) as f64, 0.5);
            }
        }
        let s = Superoperator4::new(m).unwrap();
        let expected: C64 = (0..4).map(|i| m[i][i]).product();
        assert!((s.det() - expected).norm() < 1e-12);
    }
}
