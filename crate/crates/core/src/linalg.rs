//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex<f64>`. Operators on
//! `C^d` are vectorized in row-major order, so `vec(A X B) = (A ⊗ Bᵀ) vec(X)`
//! and the conjugation superoperator of `U` is `U ⊗ conj(U)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for the unitarity contract of every produced unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Grid used when hashing phase-canonical objects.
pub const KEY_GRID: f64 = 1e-6;
/// Entries below this magnitude are skipped when choosing the phase reference.
pub const PHASE_REF_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Seeded, splittable source of reproducible random streams.
///
/// Identical `(seed, stream)` pairs always produce identical sequences, so a
/// Monte Carlo loop split into fixed chunks gives the same answer regardless
/// of how chunks are scheduled across threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Child source for sub-task `index`; deterministic in `(self, index)`.
    pub fn split(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(1))),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector(CVector);

impl UnitVector {
    /// Normalizes `v`; fails on the zero vector or non-finite entries.
    pub fn normalize(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm <= f64::MIN_POSITIVE {
            return Err(DesignError::InvalidInput(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        Ok(Self(v.unscale(norm)))
    }

    /// Wraps a vector that must already be normalized to 1e-12.
    pub fn from_normalized(v: CVector) -> Result<Self> {
        let err = (v.norm() - 1.0).abs();
        if err > 1e-12 {
            return Err(DesignError::ContractViolation(format!(
                "vector norm deviates from 1 by {err:e}"
            )));
        }
        Ok(Self(v))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &UnitVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn projector(&self) -> CMatrix {
        &self.0 * self.0.adjoint()
    }
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().sum()
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `‖U†U − I‖_max`
pub fn unitarity_error(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn is_unitary(u: &CMatrix) -> bool {
    unitarity_error(u) <= UNITARY_TOL
}

pub fn hermiticity_error(h: &CMatrix) -> f64 {
    if !h.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(h, &h.adjoint())
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Kronecker product; the left factor carries the slow index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `m ⊗ m ⊗ … ⊗ m` (`power` factors, `power ≥ 1`).
pub fn kron_power(m: &CMatrix, power: usize) -> CMatrix {
    assert!(power >= 1, "kron_power needs at least one factor");
    let mut acc = m.clone();
    for _ in 1..power {
        acc = kron(&acc, m);
    }
    acc
}

/// Row-major vectorization of an operator.
pub fn vectorize(m: &CMatrix) -> CVector {
    let (r, cols) = m.shape();
    CVector::from_fn(r * cols, |k, _| m[(k / cols, k % cols)])
}

/// Inverse of [`vectorize`] for a square `d × d` operator.
pub fn unvectorize(v: &CVector, d: usize) -> CMatrix {
    assert_eq!(v.len(), d * d, "vector length must be d²");
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Superoperator of `X ↦ U X U†` acting on row-major vectorized operators.
pub fn conjugation_superop(u: &CMatrix) -> CMatrix {
    kron(u, &u.map(|z| z.conj()))
}

/// Haar-random `d × d` unitary.
///
/// Complex Ginibre matrix, Householder QR, then each column of `Q` is rotated
/// by the phase of the matching diagonal entry of `R`. Without the phase fix
/// the output is orthonormal but not Haar distributed.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<CMatrix> {
    if d == 0 {
        return Err(DesignError::InvalidDimension(d));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Haar-random pure state (first column of a Haar unitary).
pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitVector> {
    if d == 0 {
        return Err(DesignError::InvalidDimension(d));
    }
    let v = CVector::from_fn(d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    UnitVector::normalize(v)
}

/// `exp(i·s·H)` for Hermitian `H`, through its eigendecomposition.
pub fn hermitian_exp(h: &CMatrix, s: f64) -> Result<CMatrix> {
    let err = hermiticity_error(h);
    if err > UNITARY_TOL {
        return Err(DesignError::ContractViolation(format!(
            "matrix is not Hermitian (‖H − H†‖_max = {err:e})"
        )));
    }
    Ok(HermitianSpectrum::new(h).exp_i(s))
}

/// Cached eigendecomposition of a Hermitian matrix for repeated exponentials.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianSpectrum {
    pub fn new(h: &CMatrix) -> Self {
        // symmetrize so round-off in the input cannot leak into the solver
        let sym = (h + h.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        }
    }

    /// `exp(i·s·H)`
    pub fn exp_i(&self, s: f64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let ph = cis(s * lam);
            for i in 0..v.nrows() {
                scaled[(i, j)] *= ph;
            }
        }
        scaled * v.adjoint()
    }
}

/// Hash key of a phase-canonical object: entries rounded to [`KEY_GRID`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhaseKey(Vec<i64>);

fn grid(x: f64) -> i64 {
    (x / KEY_GRID).round() as i64
}

/// Position of the first entry above [`PHASE_REF_TOL`] in `entries`.
fn reference_position<'a, I>(entries: I) -> Option<(usize, C64)>
where
    I: Iterator<Item = &'a C64>,
{
    entries.enumerate().find(|(_, z)| z.norm() > PHASE_REF_TOL).map(|(k, z)| (k, *z))
}

/// Rotates `values` (given in row-major order) so the reference entry is real
/// and positive. The reference itself is pinned to `(|z|, 0)`, which makes
/// canonicalization bit-for-bit idempotent.
fn canonicalize(values: &mut [C64]) -> Option<()> {
    let (k, z) = reference_position(values.iter())?;
    if !(z.im == 0.0 && z.re > 0.0) {
        let phase = z.conj() / z.norm();
        values.iter_mut().for_each(|v| *v *= phase);
        values[k] = c(z.norm(), 0.0);
    }
    Some(())
}

fn key_of(values: &[C64]) -> PhaseKey {
    PhaseKey(values.iter().flat_map(|z| [grid(z.re), grid(z.im)]).collect())
}

/// Objects that can be stripped of their global phase.
pub trait PhaseCanonical: Sized {
    /// Multiplies by the global phase that makes the first entry of magnitude
    /// above 1e-9 (row-major order) real and positive, and returns the result
    /// with its hash key.
    fn canonical_phase(&self) -> Result<(Self, PhaseKey)>;
}

impl PhaseCanonical for CMatrix {
    fn canonical_phase(&self) -> Result<(Self, PhaseKey)> {
        let (rows, cols) = self.shape();
        let mut values: Vec<C64> = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| self[(i, j)])
            .collect();
        canonicalize(&mut values)
            .ok_or_else(|| DesignError::InvalidInput("all-zero matrix has no phase".into()))?;
        let key = key_of(&values);
        Ok((CMatrix::from_row_slice(rows, cols, &values), key))
    }
}

impl PhaseCanonical for CVector {
    fn canonical_phase(&self) -> Result<(Self, PhaseKey)> {
        let mut values: Vec<C64> = self.iter().copied().collect();
        canonicalize(&mut values)
            .ok_or_else(|| DesignError::InvalidInput("all-zero vector has no phase".into()))?;
        let key = key_of(&values);
        Ok((CVector::from_vec(values), key))
    }
}

impl PhaseCanonical for UnitVector {
    fn canonical_phase(&self) -> Result<(Self, PhaseKey)> {
        let (v, key) = self.0.canonical_phase()?;
        Ok((UnitVector(v), key))
    }
}

/// Exact (non-phase) key, used where `g` and `−g` must stay distinct.
pub fn exact_key(m: &CMatrix) -> PhaseKey {
    let (rows, cols) = m.shape();
    let values: Vec<C64> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| m[(i, j)]))
        .collect();
    key_of(&values)
}

/// Flattens a matrix into `[re, im, re, im, …]` in row-major order, rounded to
/// the export grid.
pub fn export_entries(m: &CMatrix) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(2 * rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(round_export(m[(i, j)].re));
            out.push(round_export(m[(i, j)].im));
        }
    }
    out
}

pub fn round_export(x: f64) -> f64 {
    let r = (x / KEY_GRID).round() * KEY_GRID;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn matrix_from_entries(d: usize, entries: &[f64]) -> Result<CMatrix> {
    if entries.len() != 2 * d * d {
        return Err(DesignError::InvalidInput(format!(
            "expected {} numbers for a {d}×{d} matrix, found {}",
            2 * d * d,
            entries.len()
        )));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| {
        let k = 2 * (i * d + j);
        c(entries[k], entries[k + 1])
    }))
}

/// Moore–Penrose pseudo-inverse of a real symmetric matrix; eigenvalues below
/// `rel_tol · max|λ|` are treated as zero.
pub fn symmetric_pinv(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let cutoff = rel_tol * lmax;
    let n = m.nrows();
    let mut out = DMatrix::<f64>::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= cutoff {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        out += (v * v.transpose()) / lam;
    }
    out
}
