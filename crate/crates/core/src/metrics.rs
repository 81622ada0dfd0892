//! Frame potentials, Welch tests, Haar reference values, moment operators and
//! related distances.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{DesignError, Result};
use crate::groups::FiniteUnitaryGroup;
use crate::linalg::{
    c, conjugation_superop, haar_unitary, kron_power, spectral_norm, symmetric_pinv,
    trace, unitarity_error, vectorize, CMatrix, CVector, RandomSource, UnitVector, C64,
    UNITARY_TOL,
};

/// Largest `d^{2t}` handled by the dense twirl machinery.
pub const MAX_SUPEROP_DIM: usize = 4096;
/// Samples per deterministic Monte Carlo chunk.
pub const MC_CHUNK: usize = 1 << 14;

/// Pure states with nonnegative weights summing to one.
#[derive(Clone, Debug)]
pub struct WeightedStateEnsemble {
    dim: usize,
    states: Vec<UnitVector>,
    weights: Vec<f64>,
}

impl WeightedStateEnsemble {
    pub fn new(states: Vec<UnitVector>, weights: Vec<f64>) -> Result<Self> {
        let dim = states
            .first()
            .map(UnitVector::dim)
            .ok_or(DesignError::EmptyEnsemble)?;
        if states.len() != weights.len() {
            return Err(DesignError::InvalidInput(format!(
                "{} states but {} weights",
                states.len(),
                weights.len()
            )));
        }
        if states.iter().any(|s| s.dim() != dim) {
            return Err(DesignError::InvalidInput("states have mixed dimensions".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(DesignError::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DesignError::ContractViolation(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { dim, states, weights })
    }

    pub fn uniform(states: Vec<UnitVector>) -> Result<Self> {
        let n = states.len();
        Self::new(states, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[UnitVector] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_j w_j (|ψ_j⟩⟨ψ_j|)^{⊗t}`
    pub fn moment(&self, t: usize) -> Result<CMatrix> {
        let big = checked_pow(self.dim, t, MAX_SUPEROP_DIM)?;
        let mut acc = CMatrix::zeros(big, big);
        for (s, &w) in self.states.iter().zip(&self.weights) {
            let v = tensor_power_vector(s.as_vector(), t);
            acc += (&v * v.adjoint()) * c(w, 0.0);
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&EnsembleFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: EnsembleFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// On-disk form `{dim, states: [[re, im, …]], weights}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub dim: usize,
    pub states: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl From<&WeightedStateEnsemble> for EnsembleFile {
    fn from(e: &WeightedStateEnsemble) -> Self {
        EnsembleFile {
            dim: e.dim,
            states: e
                .states
                .iter()
                .map(|s| s.as_vector().iter().flat_map(|z| [z.re, z.im]).collect())
                .collect(),
            weights: e.weights.clone(),
        }
    }
}

impl TryFrom<EnsembleFile> for WeightedStateEnsemble {
    type Error = DesignError;

    fn try_from(f: EnsembleFile) -> Result<Self> {
        let states = f
            .states
            .iter()
            .map(|raw| {
                if raw.len() != 2 * f.dim {
                    return Err(DesignError::InvalidInput(format!(
                        "state has {} numbers, expected {}",
                        raw.len(),
                        2 * f.dim
                    )));
                }
                let v = CVector::from_iterator(f.dim, raw.chunks(2).map(|p| c(p[0], p[1])));
                UnitVector::normalize(v)
            })
            .collect::<Result<Vec<_>>>()?;
        WeightedStateEnsemble::new(states, f.weights)
    }
}

/// Unitaries with real weights summing to one.
#[derive(Clone, Debug)]
pub struct WeightedUnitaryEnsemble {
    dim: usize,
    unitaries: Vec<CMatrix>,
    weights: Vec<f64>,
}

impl WeightedUnitaryEnsemble {
    pub fn new(unitaries: Vec<CMatrix>, weights: Vec<f64>) -> Result<Self> {
        let dim = unitaries.first().map(|u| u.nrows()).ok_or(DesignError::EmptyEnsemble)?;
        if unitaries.len() != weights.len() {
            return Err(DesignError::InvalidInput("unitary/weight length mismatch".into()));
        }
        for (k, u) in unitaries.iter().enumerate() {
            if u.shape() != (dim, dim) {
                return Err(DesignError::InvalidInput("mixed unitary dimensions".into()));
            }
            let err = unitarity_error(u);
            if err > UNITARY_TOL {
                return Err(DesignError::ContractViolation(format!(
                    "member {k} is not unitary (error {err:e})"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DesignError::ContractViolation(format!("weights sum to {total}")));
        }
        Ok(Self { dim, unitaries, weights })
    }

    pub fn uniform(unitaries: Vec<CMatrix>) -> Result<Self> {
        let n = unitaries.len();
        Self::new(unitaries, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn from_group(g: &FiniteUnitaryGroup) -> Result<Self> {
        Self::uniform(g.elements().to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn checked_pow(d: usize, t: usize, limit: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..t {
        acc = acc.checked_mul(d).filter(|&x| x <= limit).ok_or_else(|| {
            DesignError::ResourceBound(format!("{d}^{t} exceeds the dense limit {limit}"))
        })?;
    }
    Ok(acc)
}

fn tensor_power_vector(v: &CVector, t: usize) -> CVector {
    let mut acc = CVector::from_element(1, c(1.0, 0.0));
    for _ in 0..t {
        acc = acc.kronecker(v);
    }
    acc
}

/// Integer power for small nonnegative `t`, real power otherwise.
fn pow_t(x: f64, t: f64) -> f64 {
    if t.fract() == 0.0 && t.abs() < 64.0 {
        x.powi(t as i32)
    } else {
        x.powf(t)
    }
}

/// `Σ_{j,k} w_j w_k |⟨ψ_j|ψ_k⟩|^{2t}` by direct double sum.
pub fn welch_lhs(ens: &WeightedStateEnsemble, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(DesignError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let d = ens.dim;
    let flat: Vec<C64> = ens.states.iter().flat_map(|s| s.as_vector().iter().copied()).collect();
    let w = &ens.weights;
    let n = ens.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let a = &flat[j * d..(j + 1) * d];
            let mut row = w[j] * w[j] * pow_t(a.iter().map(|z| z.norm_sqr()).sum(), t);
            for k in (j + 1)..n {
                let b = &flat[k * d..(k + 1) * d];
                let ov: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                row += 2.0 * w[j] * w[k] * pow_t(ov.norm_sqr(), t);
            }
            row
        })
        .collect();
    Ok(rows.iter().sum())
}

/// `Γ(t+1)Γ(d)/Γ(t+d)`; equals `1/binom(d+t−1, t)` at integer `t`.
pub fn welch_rhs(d: usize, t: f64) -> Result<f64> {
    if d == 0 {
        return Err(DesignError::InvalidDimension(d));
    }
    if !(t > 0.0) {
        return Err(DesignError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if t.fract() == 0.0 && t <= 64.0 {
        return Ok(1.0 / binomial(d + t as usize - 1, t as usize));
    }
    let df = d as f64;
    Ok((ln_gamma(t + 1.0) + ln_gamma(df) - ln_gamma(t + df)).exp())
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(1/|G|) Σ_g |Tr g|^{2t}`
pub fn frame_potential_group(g: &FiniteUnitaryGroup, t: f64) -> f64 {
    let traces: Vec<f64> = g.elements().iter().map(|m| trace(m).norm_sqr()).collect();
    traces.iter().map(|&x| pow_t(x, t)).sum::<f64>() / traces.len() as f64
}

/// `Σ_{i,j} w_i w_j |Tr(U_i† U_j)|^{2t}` by direct double sum.
pub fn frame_potential(ens: &WeightedUnitaryEnsemble, t: f64) -> f64 {
    let n = ens.unitaries.len();
    let w = &ens.weights;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = &ens.unitaries[i];
            let mut row = w[i] * w[i] * pow_t(hs_inner(a, a).norm_sqr(), t);
            for j in (i + 1)..n {
                let x = hs_inner(a, &ens.unitaries[j]).norm_sqr();
                row += 2.0 * w[i] * w[j] * pow_t(x, t);
            }
            row
        })
        .collect();
    rows.iter().sum()
}

/// `Tr(A† B)`
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Unbiased estimate `(1/(n(n−1))) Σ_{i≠j} |Tr(U_i†U_j)|^{2t}` from i.i.d. draws.
///
/// The diagonal terms equal `d^{2t}` and would bias a finite-sample average.
pub fn frame_potential_sampled(unitaries: &[CMatrix], t: f64) -> Result<f64> {
    let n = unitaries.len();
    if n < 2 {
        return Err(DesignError::InvalidArgument("need at least two samples".into()));
    }
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| pow_t(hs_inner(&unitaries[i], &unitaries[j]).norm_sqr(), t))
                .sum::<f64>()
        })
        .collect();
    Ok(2.0 * rows.iter().sum::<f64>() / (n * (n - 1)) as f64)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Every permutation of `0..t` in lexicographic order.
pub fn permutations(t: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..t).collect();
    let mut out = vec![p.clone()];
    while next_permutation(&mut p) {
        out.push(p.clone());
    }
    out
}

fn longest_increasing_subsequence(p: &[usize]) -> usize {
    let mut tails: Vec<usize> = Vec::new();
    for &x in p {
        match tails.binary_search(&x) {
            Ok(_) => {}
            Err(pos) if pos == tails.len() => tails.push(x),
            Err(pos) => tails[pos] = x,
        }
    }
    tails.len()
}

/// Number of permutations of `t` letters with no increasing subsequence
/// longer than `d`; the Haar frame potential at integer `t`.
pub fn haar_reference_integer(d: usize, t: usize) -> Result<u64> {
    if t == 0 || d == 0 {
        return Err(DesignError::InvalidArgument("need d ≥ 1 and t ≥ 1".into()));
    }
    if t > 8 {
        return Err(DesignError::ResourceBound(format!(
            "permutation enumeration is limited to t ≤ 8, got {t}"
        )));
    }
    Ok(permutations(t)
        .iter()
        .filter(|p| longest_increasing_subsequence(p) <= d)
        .count() as u64)
}

/// Haar reference value at real `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalReference {
    pub value: f64,
    /// `false` when the value is the `Γ(t+1)` surrogate, valid for `t ≤ d`.
    pub exact: bool,
}

pub fn haar_reference_fractional(d: usize, t: f64) -> Result<FractionalReference> {
    if !(t > 0.0) {
        return Err(DesignError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    match d {
        0 => Err(DesignError::InvalidDimension(0)),
        1 => Ok(FractionalReference { value: 1.0, exact: true }),
        2 => Ok(FractionalReference {
            value: (ln_gamma(2.0 * t + 1.0) - ln_gamma(t + 1.0) - ln_gamma(t + 2.0)).exp(),
            exact: true,
        }),
        _ => Ok(FractionalReference { value: ln_gamma(t + 1.0).exp(), exact: false }),
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Runs `samples` draws of `draw` in fixed chunks with one random stream per
/// chunk and an ordered reduction, so the result does not depend on the
/// thread count. Returns per-statistic `(Σx, Σx²)`.
pub fn chunked_moments<F>(samples: usize, source: RandomSource, stats: usize, draw: F) -> Vec<(f64, f64)>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut [f64]) + Sync,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = source.split(ci as u64).rng();
            let count = MC_CHUNK.min(samples - ci * MC_CHUNK);
            let mut acc = vec![(0.0, 0.0); stats];
            let mut buf = vec![0.0; stats];
            for _ in 0..count {
                draw(&mut rng, &mut buf);
                for (a, &x) in acc.iter_mut().zip(&buf) {
                    a.0 += x;
                    a.1 += x * x;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![(0.0, 0.0); stats];
    for chunk in partial {
        for (t, p) in total.iter_mut().zip(chunk) {
            t.0 += p.0;
            t.1 += p.1;
        }
    }
    total
}

fn estimates(ts: &[f64], sums: &[(f64, f64)], n: usize) -> Vec<McEstimate> {
    let nf = n as f64;
    ts.iter()
        .zip(sums)
        .map(|(&t, &(s, s2))| {
            let mean = s / nf;
            let var = ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
            McEstimate { t, mean, stderr: (var / nf).sqrt(), samples: n as u64 }
        })
        .collect()
}

/// Monte Carlo estimates of `∫ |Tr U|^{2t} dU` over Haar `U(d)` for every
/// `t` in `ts`, all from the same samples.
pub fn haar_trace_moments_mc(
    d: usize,
    ts: &[f64],
    samples: usize,
    source: RandomSource,
) -> Result<Vec<McEstimate>> {
    if d == 0 {
        return Err(DesignError::InvalidDimension(d));
    }
    if samples < 1000 {
        return Err(DesignError::InvalidArgument("need at least 1000 samples".into()));
    }
    if ts.iter().any(|&t| !(t > 0.0)) {
        return Err(DesignError::InvalidArgument("t values must be positive".into()));
    }
    let sums = chunked_moments(samples, source, ts.len(), |rng, out| {
        let u = haar_unitary(d, rng).expect("d ≥ 1");
        let x = trace(&u).norm_sqr();
        for (o, &t) in out.iter_mut().zip(ts) {
            *o = pow_t(x, t);
        }
    });
    Ok(estimates(ts, &sums, samples))
}

pub fn haar_trace_moment_mc(d: usize, t: f64, samples: usize, source: RandomSource) -> Result<McEstimate> {
    Ok(haar_trace_moments_mc(d, &[t], samples, source)?[0])
}

/// Density of the eigenangle gap of Haar `U(2)`.
pub fn spacing_density(x: f64) -> f64 {
    if !(0.0..=2.0 * PI).contains(&x) {
        return 0.0;
    }
    (1.0 - x / (2.0 * PI)) * (1.0 - x.cos()) / PI
}

/// Closed-form CDF of [`spacing_density`].
pub fn spacing_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 2.0 * PI {
        return 1.0;
    }
    (x - x * x / (4.0 * PI) - x.sin() + (x * x.sin() + x.cos() - 1.0) / (2.0 * PI)) / PI
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    /// α = 0.01 critical value `1.63/√n`.
    pub critical: f64,
    pub samples: u64,
}

impl KsReport {
    pub fn passes(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// Kolmogorov–Smirnov statistic of `data` against `cdf`.
pub fn ks_statistic(data: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    data.sort_by(|a, b| a.total_cmp(b));
    let n = data.len() as f64;
    data.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

fn eigen_angles_2x2(u: &CMatrix) -> (f64, f64) {
    let tr = u[(0, 0)] + u[(1, 1)];
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let disc = (tr * tr - det * 4.0).sqrt();
    let wrap = |z: C64| z.arg().rem_euclid(2.0 * PI);
    (wrap((tr + disc) * 0.5), wrap((tr - disc) * 0.5))
}

/// Gap statistic of Haar `U(2)` eigenangles against the analytic law.
pub fn spacing_density_test(samples: usize, source: RandomSource) -> Result<KsReport> {
    if samples < 10_000 {
        return Err(DesignError::InvalidArgument("need at least 10⁴ samples".into()));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let gaps: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = source.split(ci as u64).rng();
            let count = MC_CHUNK.min(samples - ci * MC_CHUNK);
            (0..count)
                .map(|_| {
                    let u = haar_unitary(2, &mut rng).expect("d = 2");
                    let (a, b) = eigen_angles_2x2(&u);
                    (a - b).abs()
                })
                .collect()
        })
        .collect();
    let mut all: Vec<f64> = gaps.into_iter().flatten().collect();
    let statistic = ks_statistic(&mut all, spacing_cdf);
    Ok(KsReport { statistic, critical: 1.63 / (samples as f64).sqrt(), samples: samples as u64 })
}

/// Operator `W_π |i₁ … i_t⟩ = |i_{π⁻¹(1)} … i_{π⁻¹(t)}⟩` on `(C^d)^{⊗t}`.
pub fn permutation_operator(d: usize, perm: &[usize]) -> CMatrix {
    let t = perm.len();
    let big = d.pow(t as u32);
    let mut m = CMatrix::zeros(big, big);
    let mut digits = vec![0usize; t];
    let mut out = vec![0usize; t];
    for col in 0..big {
        let mut x = col;
        for k in (0..t).rev() {
            digits[k] = x % d;
            x /= d;
        }
        for k in 0..t {
            out[perm[k]] = digits[k];
        }
        let row = out.iter().fold(0, |acc, &v| acc * d + v);
        m[(row, col)] = c(1.0, 0.0);
    }
    m
}

/// `(1/t!) Σ_π W_π`
pub fn symmetric_projector(d: usize, t: usize) -> Result<CMatrix> {
    let big = checked_pow(d, t, MAX_SUPEROP_DIM)?;
    let perms = permutations(t);
    let mut acc = CMatrix::zeros(big, big);
    for p in &perms {
        acc += permutation_operator(d, p);
    }
    Ok(acc / c(perms.len() as f64, 0.0))
}

fn cycle_count(p: &[usize]) -> usize {
    let mut seen = vec![false; p.len()];
    let mut cycles = 0;
    for s in 0..p.len() {
        if !seen[s] {
            cycles += 1;
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                x = p[x];
            }
        }
    }
    cycles
}

fn compose_inverse_left(a: &[usize], b: &[usize]) -> Vec<usize> {
    // a⁻¹ ∘ b
    let mut inv = vec![0; a.len()];
    for (i, &x) in a.iter().enumerate() {
        inv[x] = i;
    }
    b.iter().map(|&x| inv[x]).collect()
}

/// A t-th moment superoperator on row-major vectorized operators of
/// `(C^d)^{⊗t}`: `X ↦ Σ_i w_i U_i^{†⊗t} X U_i^{⊗t}`, or its Haar average.
#[derive(Clone, Debug)]
pub struct MomentOperator {
    pub t: usize,
    pub dim: usize,
    pub delta: CMatrix,
}

impl MomentOperator {
    /// The twirl applied to an operator on `(C^d)^{⊗t}`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let big = x.nrows();
        crate::linalg::unvectorize(&(&self.delta * vectorize(x)), big)
    }

    pub fn of_ensemble(ens: &WeightedUnitaryEnsemble, t: usize) -> Result<Self> {
        let big = checked_pow(ens.dim, 2 * t, MAX_SUPEROP_DIM)?;
        let mut delta = CMatrix::zeros(big, big);
        for (u, &w) in ens.unitaries.iter().zip(&ens.weights) {
            delta += conjugation_superop(&kron_power(&u.adjoint(), t)) * c(w, 0.0);
        }
        Ok(Self { t, dim: ens.dim, delta })
    }
}

/// Exact Haar `t`-fold twirl: orthogonal projection onto `span{W_π}`.
pub fn haar_twirl(d: usize, t: usize) -> Result<MomentOperator> {
    let big = checked_pow(d, 2 * t, MAX_SUPEROP_DIM)?;
    let perms = permutations(t);
    let n = perms.len();
    let gram = DMatrix::<f64>::from_fn(n, n, |i, j| {
        (d as f64).powi(cycle_count(&compose_inverse_left(&perms[i], &perms[j])) as i32)
    });
    let ginv = symmetric_pinv(&gram, 1e-10);
    let vecs: Vec<CVector> = perms.iter().map(|p| vectorize(&permutation_operator(d, p))).collect();
    let mut delta = CMatrix::zeros(big, big);
    for i in 0..n {
        for j in 0..n {
            let g = ginv[(i, j)];
            if g == 0.0 {
                continue;
            }
            delta += (&vecs[i] * vecs[j].adjoint()) * c(g, 0.0);
        }
    }
    Ok(MomentOperator { t, dim: d, delta })
}

/// Spectral-norm distance `‖Δ_E − Δ_Haar‖`.
pub fn tpe_eta(ens: &WeightedUnitaryEnsemble, t: usize) -> Result<f64> {
    let e = MomentOperator::of_ensemble(ens, t)?;
    let h = haar_twirl(ens.dim, t)?;
    Ok(spectral_norm(&(e.delta - h.delta)))
}

/// Minimal `‖Σ_g w_g T_g − T_Haar‖_F` over real weights with `Σ w_g = 1`,
/// where `T_g` is the superoperator of `X ↦ g^{⊗t} X g^{†⊗t}`.
///
/// The objective is invariant under conjugating the weight function, so the
/// optimum is a class function; the problem is solved on class totals.
pub fn best_weighting_residual(g: &FiniteUnitaryGroup, t: usize) -> Result<f64> {
    let d = g.dim();
    let n = g.len();
    let big = checked_pow(d, 2 * t, usize::MAX)?;
    if (n as u128) * (big as u128) > 100_000_000 {
        return Err(DesignError::ResourceBound(format!(
            "|G|·d^(2t) = {} exceeds 10⁸",
            n as u128 * big as u128
        )));
    }
    let classes = g.conjugacy_classes()?;
    let nc = classes.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; nc];
    for &k in &classes {
        sizes[k] += 1;
    }
    let haar_rank = haar_reference_integer(d, t)? as f64;
    let tf = t as f64;
    let elements = g.elements();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; nc];
            for (j, h) in elements.iter().enumerate() {
                row[classes[j]] += pow_t(hs_inner(&elements[i], h).norm_sqr(), tf);
            }
            row
        })
        .collect();
    let mut k = DMatrix::<f64>::zeros(nc, nc);
    for (i, row) in rows.iter().enumerate() {
        for (cj, &v) in row.iter().enumerate() {
            k[(classes[i], cj)] += v;
        }
    }
    for a in 0..nc {
        for b in 0..nc {
            k[(a, b)] /= (sizes[a] * sizes[b]) as f64;
        }
    }
    // KKT system for min uᵀKu − 2F_H·1ᵀu subject to 1ᵀu = 1
    let mut kkt = DMatrix::<f64>::zeros(nc + 1, nc + 1);
    kkt.view_mut((0, 0), (nc, nc)).copy_from(&k);
    for a in 0..nc {
        kkt[(a, nc)] = 1.0;
        kkt[(nc, a)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(nc + 1);
    rhs[nc] = 1.0;
    let sol = symmetric_pinv(&kkt, 1e-12) * rhs;
    let u: Vec<f64> = (0..nc).map(|a| sol[a]).collect();

    if (n as u128) * (big as u128) * (big as u128) <= 200_000_000 {
        let haar = haar_twirl(d, t)?;
        let mut acc = CMatrix::zeros(big, big);
        for (i, el) in elements.iter().enumerate() {
            let w = u[classes[i]] / sizes[classes[i]] as f64;
            acc += conjugation_superop(&kron_power(el, t)) * c(w, 0.0);
        }
        return Ok((acc - haar.delta).norm());
    }
    let ku = &k * nalgebra::DVector::from_vec(u.clone());
    let quad: f64 = u.iter().zip(ku.iter()).map(|(a, b)| a * b).sum();
    Ok((quad - haar_rank).max(0.0).sqrt())
}

/// Number of Haar-invariant directions `F_H` used by the residual.
pub fn haar_commutant_dim(d: usize, t: usize) -> Result<u64> {
    haar_reference_integer(d, t)
}

/// Nonincreasing integer tuple.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionSequence(Vec<i64>);

impl PartitionSequence {
    pub fn new(parts: Vec<i64>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(DesignError::InvalidInput(format!("{parts:?} is not nonincreasing")));
        }
        Ok(Self(parts))
    }

    pub fn parts(&self) -> &[i64] {
        &self.0
    }

    /// Weyl dimension `∏_{i<j} (μ_i − μ_j + j − i)/(j − i)`.
    pub fn dimension(&self) -> u128 {
        let mu = &self.0;
        let mut num: u128 = 1;
        let mut den: u128 = 1;
        for i in 0..mu.len() {
            for j in (i + 1)..mu.len() {
                num *= (mu[i] - mu[j] + (j - i) as i64) as u128;
                den *= (j - i) as u128;
                let g = gcd_u128(num, den);
                num /= g;
                den /= g;
            }
        }
        num / den
    }
}

fn gcd_u128(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd_u128(b, a % b)
    }
}

fn nonincreasing(len: usize, hi: i64, lo: i64, out: &mut Vec<Vec<i64>>, cur: &mut Vec<i64>) {
    if cur.len() == len {
        out.push(cur.clone());
        return;
    }
    let top = cur.last().copied().unwrap_or(hi);
    for v in (lo..=top).rev() {
        cur.push(v);
        nonincreasing(len, hi, lo, out, cur);
        cur.pop();
    }
}

/// `D(d, r, s) = Σ d_μ²` over nonincreasing `μ ∈ [−s, r]^d` with
/// `Σμ = r − s` and positive part at most `r`.
pub fn cardinality_sum(d: usize, r: usize, s: usize) -> u128 {
    let mut seqs = Vec::new();
    nonincreasing(d, r as i64, -(s as i64), &mut seqs, &mut Vec::new());
    seqs.into_iter()
        .filter(|mu| mu.iter().sum::<i64>() == r as i64 - s as i64)
        .filter(|mu| mu.iter().filter(|&&x| x > 0).sum::<i64>() <= r as i64)
        .map(|mu| {
            let dim = PartitionSequence(mu).dimension();
            dim * dim
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalityBounds {
    pub lower: u128,
    pub upper: u128,
}

pub fn cardinality_bounds(d: usize, t: usize) -> Result<CardinalityBounds> {
    if d == 0 || d > 6 || t == 0 || t > 4 {
        return Err(DesignError::InvalidArgument(format!(
            "cardinality bounds need 1 ≤ d ≤ 6 and 1 ≤ t ≤ 4, got d={d}, t={t}"
        )));
    }
    Ok(CardinalityBounds {
        lower: cardinality_sum(d, t.div_ceil(2), t / 2),
        upper: cardinality_sum(d, t, t),
    })
}

/// One row of a frame-potential sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePotentialRow {
    pub t: f64,
    pub value: f64,
    pub reference: f64,
    pub ratio: f64,
    pub exact: bool,
    pub samples: Option<u64>,
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePotentialReport {
    pub id: String,
    pub dim: usize,
    pub rows: Vec<FramePotentialRow>,
}

impl FramePotentialReport {
    /// Exact sweep over a finite group.
    pub fn for_group(id: &str, g: &FiniteUnitaryGroup, ts: &[f64]) -> Result<Self> {
        let rows = ts
            .iter()
            .map(|&t| {
                let value = frame_potential_group(g, t);
                let r = haar_reference_fractional(g.dim(), t)?;
                Ok(FramePotentialRow {
                    t,
                    value,
                    reference: r.value,
                    ratio: value / r.value,
                    exact: r.exact,
                    samples: None,
                    stderr: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { id: id.into(), dim: g.dim(), rows })
    }

    pub fn from_estimates(id: &str, dim: usize, est: &[McEstimate]) -> Result<Self> {
        let rows = est
            .iter()
            .map(|e| {
                let r = haar_reference_fractional(dim, e.t)?;
                Ok(FramePotentialRow {
                    t: e.t,
                    value: e.mean,
                    reference: r.value,
                    ratio: e.mean / r.value,
                    exact: r.exact,
                    samples: Some(e.samples),
                    stderr: Some(e.stderr),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { id: id.into(), dim, rows })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,F,reference,ratio,exactness,samples,stderr\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.t,
                r.value,
                r.reference,
                r.ratio,
                if r.exact { "exact" } else { "approximate" },
                r.samples.map_or(String::new(), |s| s.to_string()),
                r.stderr.map_or(String::new(), |s| s.to_string()),
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Distance from `Σ_j w_j (|ψ_j⟩⟨ψ_j|)^{⊗t}` to the normalized symmetric
/// projector, in max norm, plus the reconstructed operator.
pub fn reconstruct_symmetric_projector(
    ens: &WeightedStateEnsemble,
    t: usize,
) -> Result<(CMatrix, f64)> {
    let m = ens.moment(t)?;
    let target = symmetric_projector(ens.dim, t)? * c(welch_rhs(ens.dim, t as f64)?, 0.0);
    let dist = crate::linalg::max_abs_diff(&m, &target);
    Ok((m, dist))
}

/// Groups real `t` values into an ordered map keyed by their bit pattern;
/// useful for de-duplicating user grids.
pub fn dedup_grid(ts: &[f64]) -> Vec<f64> {
    let map: BTreeMap<u64, f64> = ts.iter().map(|&t| (t.to_bits(), t)).collect();
    let mut out: Vec<f64> = map.into_values().collect();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || DesignError::InvalidArgument(format!("bad grid `{spec}`, expected start:stop:step"));
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match nums.as_slice() {
        [x] => Ok(vec![*x]),
        [a, b, s] if *s > 0.0 && b >= a => {
            let n = ((b - a) / s + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| a + k as f64 * s).collect())
        }
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{clifford_group, cyclic_group, pauli_group};
    use crate::linalg::{haar_state, identity, max_abs_diff};
    use crate::quadrature::gauss_legendre_on;

    fn qubit_sic() -> WeightedStateEnsemble {
        let r = (1.0f64 / 3.0).sqrt();
        let s = (2.0f64 / 3.0).sqrt();
        let states = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]
            .iter()
            .map(|&phi| CVector::from_vec(vec![c(r, 0.0), crate::linalg::cis(phi) * s]))
            .chain(std::iter::once(CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])))
            .map(|v| UnitVector::normalize(v).unwrap())
            .collect();
        WeightedStateEnsemble::uniform(states).unwrap()
    }

    #[test]
    fn welch_lhs_cases() {
        let psi = UnitVector::basis(3, 1);
        let rep = WeightedStateEnsemble::uniform(vec![psi.clone(), psi.clone(), psi]).unwrap();
        assert!((welch_lhs(&rep, 2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((welch_lhs(&qubit_sic(), 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let basis = WeightedStateEnsemble::uniform((0..5).map(|k| UnitVector::basis(5, k)).collect()).unwrap();
        assert!((welch_lhs(&basis, 1.0).unwrap() - 0.2).abs() < 1e-14);
    }

    #[test]
    fn welch_rhs_values() {
        assert!((welch_rhs(2, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((welch_rhs(3, 3.0).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn welch_rhs_fractional_matches_beta_integral() {
        // t·B(t, d) = t ∫₀¹ r^{t−1}(1−r)^{d−1} dr; with r = s² the integrand
        // 2 s^{2t−1}(1−s²)^{d−1} is polynomial at t = 1.5
        let (d, t) = (4usize, 1.5f64);
        let (x, w) = gauss_legendre_on(20, 0.0, 1.0);
        let beta: f64 = x
            .iter()
            .zip(&w)
            .map(|(&s, &wi)| wi * 2.0 * s.powf(2.0 * t - 1.0) * (1.0 - s * s).powi(d as i32 - 1))
            .sum();
        let oracle = t * beta;
        assert!((welch_rhs(d, t).unwrap() - oracle).abs() < 1e-12, "{oracle}");
    }

    #[test]
    fn frame_potential_cases() {
        let single = WeightedUnitaryEnsemble::uniform(vec![identity(3)]).unwrap();
        assert!((frame_potential(&single, 1.5) - 3f64.powf(3.0)).abs() < 1e-10);
        let cl = clifford_group(2).unwrap();
        assert!((frame_potential_group(&cl, 2.0) - 2.0).abs() < 1e-9);
        // class sum (64 + 8·1 + 6·8)/24; the qubit Clifford group is a 3-design
        // and t = 3 > d, so the Haar value is the Catalan number 5, not 3!
        assert!((frame_potential_group(&cl, 3.0) - 5.0).abs() < 1e-9);
        let pair = frame_potential(&WeightedUnitaryEnsemble::from_group(&cl).unwrap(), 2.0);
        assert!((pair - 2.0).abs() < 1e-9);
        let cyc = cyclic_group(4).unwrap();
        for t in [0.3, 1.0, 1.7, 2.5] {
            let want = 4f64.powf(2.0 * t - 1.0);
            assert!((frame_potential_group(&cyc, t) - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn haar_reference_counts() {
        for t in 1..=5 {
            let fact: u64 = (1..=t as u64).product();
            assert_eq!(haar_reference_integer(t, t).unwrap(), fact);
        }
        let cat: Vec<u64> = (1..=6).map(|t| haar_reference_integer(2, t).unwrap()).collect();
        assert_eq!(cat, vec![1, 2, 5, 14, 42, 132]);
        assert_eq!(haar_reference_integer(3, 4).unwrap(), 23);
        assert!(matches!(haar_reference_integer(3, 9), Err(DesignError::ResourceBound(_))));
    }

    #[test]
    fn fractional_reference() {
        let r = haar_reference_fractional(2, 2.0).unwrap();
        assert!(r.exact && (r.value - 2.0).abs() < 1e-12);
        assert!((haar_reference_fractional(2, 3.0).unwrap().value - 5.0).abs() < 1e-11);
        let r = haar_reference_fractional(5, 1.0).unwrap();
        assert!(!r.exact && (r.value - 1.0).abs() < 1e-14);
        for t in 1..=6 {
            let cat = haar_reference_integer(2, t).unwrap() as f64;
            assert!((haar_reference_fractional(2, t as f64).unwrap().value - cat).abs() < 1e-9 * cat);
        }
    }

    #[test]
    fn haar_mc_d2_t1() {
        let e = haar_trace_moment_mc(2, 1.0, 100_000, RandomSource::new(3)).unwrap();
        assert!((e.mean - 1.0).abs() <= 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn mc_is_thread_count_independent() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| haar_trace_moment_mc(2, 1.3, 40_000, RandomSource::new(5)).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn spacing_density_properties() {
        let (x, w) = gauss_legendre_on(40, 0.0, 2.0 * PI);
        let norm: f64 = x.iter().zip(&w).map(|(&a, &b)| b * spacing_density(a)).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(spacing_density(0.0), 0.0);
        assert!((spacing_cdf(2.0 * PI - 1e-12) - 1.0).abs() < 1e-9);
        for &p in &[0.5, 1.0, 3.0, 5.5] {
            let (x, w) = gauss_legendre_on(40, 0.0, p);
            let integral: f64 = x.iter().zip(&w).map(|(&a, &b)| b * spacing_density(a)).sum();
            assert!((integral - spacing_cdf(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_projector_properties() {
        assert!(max_abs_diff(&symmetric_projector(3, 1).unwrap(), &identity(3)) < 1e-15);
        let p = symmetric_projector(4, 3).unwrap();
        assert!((trace(&p).re - 20.0).abs() < 1e-10);
        assert!(max_abs_diff(&(&p * &p), &p) < 1e-10);
    }

    #[test]
    fn twirl_first_moment() {
        let tw = haar_twirl(3, 1).unwrap();
        let mut rng = RandomSource::new(9).rng();
        let x = haar_unitary(3, &mut rng).unwrap() + identity(3) * c(0.4, 0.2);
        let want = identity(3) * (trace(&x) / c(3.0, 0.0));
        assert!(max_abs_diff(&tw.apply(&x), &want) < 1e-12);
    }

    #[test]
    fn twirl_second_moment_of_product_state() {
        let tw = haar_twirl(2, 2).unwrap();
        let mut x = CMatrix::zeros(4, 4);
        x[(0, 0)] = c(1.0, 0.0);
        let want = symmetric_projector(2, 2).unwrap() / c(3.0, 0.0);
        assert!(max_abs_diff(&tw.apply(&x), &want) < 1e-12);
        let twice = &tw.delta * &tw.delta;
        assert!(max_abs_diff(&twice, &tw.delta) < 1e-9);
    }

    #[test]
    fn twirl_rank_deficient_case() {
        // t = 3 > d = 2: the six permutation operators span a 5-dimensional space
        let tw = haar_twirl(2, 3).unwrap();
        assert!((trace(&tw.delta).re - 5.0).abs() < 1e-9);
        assert!(max_abs_diff(&(&tw.delta * &tw.delta), &tw.delta) < 1e-9);
    }

    #[test]
    fn twirl_matches_monte_carlo() {
        let d = 2;
        let t = 2;
        let tw = haar_twirl(d, t).unwrap();
        let mut rng = RandomSource::new(12).rng();
        let xs: Vec<CMatrix> = (0..20)
            .map(|_| {
                let u = haar_unitary(4, &mut rng).unwrap();
                (&u + u.adjoint()) * c(0.5, 0.0)
            })
            .collect();
        let n = 100_000;
        let mut sums = vec![CMatrix::zeros(4, 4); xs.len()];
        let mut sq = vec![DMatrix::<f64>::zeros(4, 4); xs.len()];
        for _ in 0..n {
            let u = kron_power(&haar_unitary(d, &mut rng).unwrap(), t);
            let ud = u.adjoint();
            for (k, x) in xs.iter().enumerate() {
                let y = &ud * x * &u;
                sq[k] += y.map(|z| z.re * z.re);
                sums[k] += y;
            }
        }
        for (k, x) in xs.iter().enumerate() {
            let exact = tw.apply(x);
            for i in 0..4 {
                for j in 0..4 {
                    let mean = sums[k][(i, j)].re / n as f64;
                    let var = sq[k][(i, j)] / n as f64 - mean * mean;
                    let se = (var / n as f64).sqrt().max(1e-12);
                    assert!((mean - exact[(i, j)].re).abs() <= 3.5 * se + 1e-12);
                }
            }
        }
    }

    #[test]
    fn tpe_cases() {
        let cl = WeightedUnitaryEnsemble::from_group(&clifford_group(2).unwrap()).unwrap();
        assert!(tpe_eta(&cl, 2).unwrap() <= 1e-9);
        let pauli = WeightedUnitaryEnsemble::from_group(&pauli_group(2).unwrap()).unwrap();
        let eta = tpe_eta(&pauli, 2).unwrap();
        assert!(eta > 0.1, "{eta}");
        let id = WeightedUnitaryEnsemble::uniform(vec![identity(2)]).unwrap();
        assert!((tpe_eta(&id, 1).unwrap() - 1.0).abs() < 1e-10);
    }

    /// Full per-element affine least squares with explicit superoperators.
    fn brute_residual(g: &FiniteUnitaryGroup, t: usize) -> f64 {
        let d = g.dim();
        let haar = haar_twirl(d, t).unwrap().delta;
        let cols: Vec<CVector> = g
            .elements()
            .iter()
            .map(|el| vectorize(&conjugation_superop(&kron_power(el, t))))
            .collect();
        let n = cols.len();
        let target = vectorize(&haar);
        // substitute w_n = 1 − Σ_{k<n} w_k
        let base = &cols[n - 1];
        let a = DMatrix::<f64>::from_fn(2 * target.len(), n - 1, |r, k| {
            let z = cols[k][r % target.len()] - base[r % target.len()];
            if r < target.len() { z.re } else { z.im }
        });
        let b = nalgebra::DVector::<f64>::from_fn(2 * target.len(), |r, _| {
            let z = target[r % target.len()] - base[r % target.len()];
            if r < target.len() { z.re } else { z.im }
        });
        if n == 1 {
            return b.norm();
        }
        let svd = a.clone().svd(true, true);
        let x = svd.solve(&b, 1e-10).unwrap();
        (a * x - b).norm()
    }

    #[test]
    fn weighting_residual_matches_brute_force() {
        let cl = clifford_group(2).unwrap();
        let r = best_weighting_residual(&cl, 2).unwrap();
        assert!(r <= 1e-8, "{r}");
        let c3 = cyclic_group(3).unwrap();
        let r = best_weighting_residual(&c3, 2).unwrap();
        let brute = brute_residual(&c3, 2);
        assert!((r - brute).abs() < 1e-8, "{r} vs {brute}");
        assert!(r > 0.01);
        let p2 = pauli_group(2).unwrap();
        let r = best_weighting_residual(&p2, 2).unwrap();
        assert!((r - brute_residual(&p2, 2)).abs() < 1e-8);
    }

    #[test]
    fn uniform_weighting_closed_form() {
        // uniform weights give √(F_G − F_H); the optimum can only be lower
        let c3 = cyclic_group(3).unwrap();
        let uniform = (frame_potential_group(&c3, 2.0) - 2.0).sqrt();
        assert!(best_weighting_residual(&c3, 2).unwrap() <= uniform + 1e-9);
    }

    #[test]
    fn cardinality_values() {
        for d in 2..=5usize {
            let d4 = (d * d * d * d) as u128;
            assert_eq!(cardinality_sum(d, 1, 1), d4 - 2 * (d * d) as u128 + 2);
            assert_eq!(cardinality_sum(d, 1, 0), (d * d) as u128);
        }
        assert_eq!(cardinality_sum(2, 1, 1), 10);
        let b = cardinality_bounds(2, 2).unwrap();
        assert_eq!(b.lower, 10);
        assert!(b.upper >= b.lower);
    }

    #[test]
    fn weyl_dimensions() {
        assert_eq!(PartitionSequence::new(vec![1, 0, 0]).unwrap().dimension(), 3);
        assert_eq!(PartitionSequence::new(vec![1, 0, -1]).unwrap().dimension(), 8);
        assert_eq!(PartitionSequence::new(vec![2, 0]).unwrap().dimension(), 3);
        assert!(PartitionSequence::new(vec![0, 1]).is_err());
    }

    #[test]
    fn ensemble_json_round_trip() {
        let e = qubit_sic();
        let back = WeightedStateEnsemble::from_json(&e.to_json().unwrap()).unwrap();
        assert!((welch_lhs(&back, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn report_csv_has_header_and_rows() {
        let g = cyclic_group(3).unwrap();
        let rep = FramePotentialReport::for_group("cyclic:3", &g, &[1.0, 2.0]).unwrap();
        let csv = rep.to_csv();
        assert!(csv.starts_with("t,F,reference,ratio,exactness,samples,stderr\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1:5:1").unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(parse_grid("0.1:3:0.05").unwrap().len(), 59);
        assert!(parse_grid("1:2").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn welch_lower_bound(seed in any::<u64>(), n in 2usize..12, d in 2usize..5, t in 1usize..4) {
                let mut rng = RandomSource::new(seed).rng();
                let states: Vec<UnitVector> = (0..n).map(|_| haar_state(d, &mut rng).unwrap()).collect();
                let raw: Vec<f64> = (0..n).map(|k| 1.0 + (k % 3) as f64).collect();
                let total: f64 = raw.iter().sum();
                let ens = WeightedStateEnsemble::new(states, raw.iter().map(|w| w / total).collect()).unwrap();
                prop_assert!(welch_lhs(&ens, t as f64).unwrap() >= welch_rhs(d, t as f64).unwrap() - 1e-10);
            }

            #[test]
            fn group_frame_potential_lower_bound(t in 1usize..5) {
                for g in [clifford_group(2).unwrap(), pauli_group(3).unwrap(), cyclic_group(4).unwrap()] {
                    let f = frame_potential_group(&g, t as f64);
                    let h = haar_reference_integer(g.dim(), t).unwrap() as f64;
                    prop_assert!(f >= h - 1e-9);
                }
            }

            #[test]
            fn sampled_frame_potential_is_symmetric_in_order(seed in any::<u64>()) {
                let mut rng = RandomSource::new(seed).rng();
                let mut us: Vec<CMatrix> = (0..6).map(|_| haar_unitary(2, &mut rng).unwrap()).collect();
                let a = frame_potential_sampled(&us, 2.0).unwrap();
                us.reverse();
                let b = frame_potential_sampled(&us, 2.0).unwrap();
                prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
            }
        }
    }
}
