//! Character randomized benchmarking: irrep blocks of the conjugation action,
//! noise channels, sequence simulation and exponential-decay fits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector2};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::groups::{pauli_orbits, pauli_unitary, quadratic_phase_gate, su2_spin_ops, FiniteUnitaryGroup, Spin};
use crate::linalg::{
    c, conjugation_superop, identity, kron, max_abs_diff, trace, unvectorize, vectorize, CMatrix, RandomSource,
    C64,
};
use crate::metrics::McEstimate;
use crate::quadrature::gauss_legendre;
use crate::spin::{haar_euler_angles, su2_rotation};

const BLOCK_TOL: f64 = 1e-9;
const KRAUS_TOL: f64 = 1e-10;
const OVERLAP_FLOOR: f64 = 1e-12;

/// Multiplicity-free invariant subspace of the conjugation action on `d × d`
/// operators, as an orthogonal projector on row-major vectorized operators.
#[derive(Clone, Debug)]
pub struct IrrepBlock {
    label: usize,
    dim: usize,
    projector: CMatrix,
}

impl IrrepBlock {
    /// The orbit divisor `r` for Clifford blocks, the total spin `J` for SU(2).
    pub fn label(&self) -> usize {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn projector(&self) -> &CMatrix {
        &self.projector
    }

    /// `Tr(P ∘ Ad_U)`
    pub fn character(&self, u: &CMatrix) -> C64 {
        trace_product(&self.projector, &conjugation_superop(u))
    }

    /// Applies the projector to an operator.
    pub fn project(&self, x: &CMatrix) -> CMatrix {
        unvectorize(&(&self.projector * vectorize(x)), x.nrows())
    }
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// One block per divisor `r` of `d`, spanned by `X^aZ^b` with `gcd(a, b, d) = r`.
pub fn clifford_blocks(d: usize) -> Result<Vec<IrrepBlock>> {
    if !(2..=8).contains(&d) {
        return Err(DesignError::InvalidDimension(d));
    }
    let norm = c(1.0 / (d as f64).sqrt(), 0.0);
    let mut out = Vec::new();
    for (r, labels) in pauli_orbits(d)? {
        let mut projector = CMatrix::zeros(d * d, d * d);
        for label in &labels {
            let v = vectorize(&(pauli_unitary(d, *label)? * norm));
            projector += &v * v.adjoint();
        }
        out.push(IrrepBlock { label: r, dim: labels.len(), projector });
    }
    Ok(out)
}

/// Smallest `k ≥ 1` with `Ad_L^k` acting as the identity on block `r`.
pub fn l_gate_block_order(d: usize, r: usize) -> Result<usize> {
    let block = clifford_blocks(d)?
        .into_iter()
        .find(|b| b.label == r)
        .ok_or_else(|| DesignError::InvalidArgument(format!("{r} does not divide {d}")))?;
    let ad = conjugation_superop(&quadratic_phase_gate(d)?);
    let p = block.projector();
    let mut power = ad.clone();
    for k in 1..=4 * d {
        if max_abs_diff(&(&power * p), p) < BLOCK_TOL {
            return Ok(k);
        }
        power = &ad * power;
    }
    Err(DesignError::ContractViolation(format!("L has no finite order on block {r} of d = {d}")))
}

/// Order of `Ad_L` on block `r`: `d/r` for odd `d`; for even `d`, `d/r` when
/// `r` is even and `2d/r` when `r` is odd.
pub fn l_gate_parity_rule(d: usize, r: usize) -> usize {
    if d % 2 == 1 || r % 2 == 0 {
        d / r
    } else {
        2 * d / r
    }
}

/// `X ↦ [A, X]` on row-major vectorized operators.
fn commutator_superop(a: &CMatrix) -> CMatrix {
    let id = identity(a.nrows());
    kron(a, &id) - kron(&id, &a.transpose())
}

/// Blocks `J = 0..=2S` of the conjugation action of the spin-`S`
/// representation, from the eigenspaces of the adjoint Casimir.
pub fn su2_blocks(spin: Spin) -> Result<Vec<IrrepBlock>> {
    if spin.twice() > 8 {
        return Err(DesignError::ResourceBound(format!("spin {spin} exceeds 4")));
    }
    let ops = su2_spin_ops(spin);
    let casimir = [&ops.x, &ops.y, &ops.z]
        .iter()
        .map(|s| {
            let a = commutator_superop(s);
            &a * &a
        })
        .fold(CMatrix::zeros(spin.dim().pow(2), spin.dim().pow(2)), |acc, m| acc + m);
    let eig = SymmetricEigen::new(casimir);
    let max_j = spin.twice() as usize;
    let mut out = Vec::new();
    for j in 0..=max_j {
        let target = (j * (j + 1)) as f64;
        let cols: Vec<_> = (0..eig.eigenvalues.len())
            .filter(|&k| (eig.eigenvalues[k] - target).abs() < 1e-6)
            .map(|k| eig.eigenvectors.column(k).into_owned())
            .collect();
        if cols.len() != 2 * j + 1 {
            return Err(DesignError::ContractViolation(format!(
                "block J = {j} has {} Casimir eigenvectors",
                cols.len()
            )));
        }
        let basis = CMatrix::from_columns(&cols);
        out.push(IrrepBlock { label: j, dim: 2 * j + 1, projector: &basis * basis.adjoint() });
    }
    Ok(out)
}

/// Unit vector of block `J` commuting with `S_z` (the weight-zero vector),
/// as a `d × d` operator; fixed up to a phase.
pub fn weight_zero_operator(spin: Spin, block: &IrrepBlock) -> Result<CMatrix> {
    let d = spin.dim();
    let mut best: Option<CMatrix> = None;
    for k in 0..d {
        let mut e = CMatrix::zeros(d, d);
        e[(k, k)] = c(1.0, 0.0);
        let v = block.project(&e);
        if v.norm() > best.as_ref().map_or(1e-8, |b| b.norm()) {
            best = Some(v);
        }
    }
    let v = best.ok_or_else(|| DesignError::ContractViolation("block has no weight-zero vector".into()))?;
    let n = v.norm();
    Ok(v / c(n, 0.0))
}

/// `√((2J+1)(2S)!² / ((2S+J+1)!(2S−J)!))`
pub fn clebsch_gordan_overlap(spin: Spin, j: usize) -> f64 {
    let n = spin.twice() as f64;
    let jf = j as f64;
    let lg = statrs::function::gamma::ln_gamma;
    ((2.0 * jf + 1.0).ln() + 2.0 * lg(n + 1.0) - lg(n + jf + 2.0) - lg(n - jf + 1.0))
        .exp()
        .sqrt()
}

/// Haar-SU(2) Monte Carlo of `|χ_S(g)|^{2t}` with `χ_S` the trace of the
/// spin-`S` representation.
pub fn su2_frame_potential_mc(spin: Spin, t: f64, samples: usize, source: RandomSource) -> Result<McEstimate> {
    if samples < 10_000 {
        return Err(DesignError::InvalidArgument("need at least 10⁴ samples".into()));
    }
    let sums = crate::metrics::chunked_moments(samples, source, 1, |rng, out| {
        let (a, b, g) = haar_euler_angles(rng);
        out[0] = trace(&su2_rotation(spin, a, b, g)).norm_sqr().powf(t);
    });
    let n = samples as f64;
    let (s, s2) = sums[0];
    let mean = s / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(McEstimate { t, mean, stderr: (var / n).sqrt(), samples: samples as u64 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Identity,
    /// `ρ ↦ (1−p)ρ + p Tr(ρ) I/d`
    Depolarizing { p: f64 },
    /// `ρ ↦ e^{−iδN} ρ e^{iδN}` with `N = diag(0, 1, …, d−1)`
    Overrotation { delta: f64 },
    /// Ladder decay `|k⟩ → |k−1⟩` with probability `γ` for every `k ≥ 1`.
    Damping { gamma: f64 },
}

/// Gate-independent noise channel given by Kraus operators.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    kind: NoiseKind,
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(DesignError::InvalidDimension(dim));
        }
        let prob = |x: f64, name: &str| {
            if (0.0..=1.0).contains(&x) {
                Ok(x)
            } else {
                Err(DesignError::InvalidArgument(format!("{name} must lie in [0, 1], got {x}")))
            }
        };
        let kraus = match kind {
            NoiseKind::Identity => vec![identity(dim)],
            NoiseKind::Depolarizing { p } => {
                let p = prob(p, "depolarizing probability")?;
                let d2 = (dim * dim) as f64;
                let mut ks = vec![identity(dim) * c((1.0 - p + p / d2).sqrt(), 0.0)];
                let s = c(p.sqrt() / dim as f64, 0.0);
                for a in 0..dim {
                    for b in 0..dim {
                        if a + b > 0 {
                            ks.push(pauli_unitary(dim, crate::groups::PauliLabel::new(dim, a, b))? * s);
                        }
                    }
                }
                ks
            }
            NoiseKind::Overrotation { delta } => {
                if !delta.is_finite() {
                    return Err(DesignError::InvalidArgument("overrotation angle must be finite".into()));
                }
                vec![CMatrix::from_fn(dim, dim, |i, j| {
                    if i == j {
                        crate::linalg::cis(-delta * i as f64)
                    } else {
                        c(0.0, 0.0)
                    }
                })]
            }
            NoiseKind::Damping { gamma } => {
                let g = prob(gamma, "damping rate")?;
                let mut k0 = CMatrix::zeros(dim, dim);
                let mut k1 = CMatrix::zeros(dim, dim);
                k0[(0, 0)] = c(1.0, 0.0);
                for k in 1..dim {
                    k0[(k, k)] = c((1.0 - g).sqrt(), 0.0);
                    k1[(k - 1, k)] = c(g.sqrt(), 0.0);
                }
                vec![k0, k1]
            }
        };
        Self::from_kraus(kind, kraus)
    }

    fn from_kraus(kind: NoiseKind, kraus: Vec<CMatrix>) -> Result<Self> {
        let dim = kraus[0].nrows();
        let sum = kraus.iter().fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        let err = max_abs_diff(&sum, &identity(dim));
        if err > KRAUS_TOL {
            return Err(DesignError::ContractViolation(format!("Kraus completeness error {err:.2e}")));
        }
        Ok(Self { kind, dim, kraus })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(NoiseKind::Identity, dim)
    }

    pub fn depolarizing(dim: usize, p: f64) -> Result<Self> {
        Self::new(NoiseKind::Depolarizing { p }, dim)
    }

    /// Parses `none`, `depol:p`, `over:δ` or `damp:γ`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
        let value = || {
            arg.parse::<f64>()
                .map_err(|_| DesignError::InvalidArgument(format!("bad noise parameter in '{spec}'")))
        };
        let kind = match name {
            "none" | "identity" => NoiseKind::Identity,
            "depol" => NoiseKind::Depolarizing { p: value()? },
            "over" => NoiseKind::Overrotation { delta: value()? },
            "damp" => NoiseKind::Damping { gamma: value()? },
            _ => return Err(DesignError::InvalidArgument(format!("unknown noise '{spec}'"))),
        };
        Self::new(kind, dim)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `Σ K ⊗ K̄`
    pub fn superop(&self) -> CMatrix {
        let n = self.dim * self.dim;
        self.kraus.iter().fold(CMatrix::zeros(n, n), |acc, k| acc + conjugation_superop(k))
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        match self.kraus.as_slice() {
            [k] => k * x * k.adjoint(),
            ks => ks.iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k * x * k.adjoint()),
        }
    }

    /// Heisenberg-picture action `X ↦ Σ K† X K`.
    pub fn apply_adjoint(&self, x: &CMatrix) -> CMatrix {
        self.kraus.iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * x * k)
    }
}

/// `Tr(P ∘ Λ̂) / dim P`, the scalar by which the twirled channel acts on a
/// multiplicity-free block.
pub fn twirl_eigenvalue(noise: &NoiseModel, block: &IrrepBlock) -> f64 {
    (trace_product(block.projector(), &noise.superop()) / c(block.dim as f64, 0.0)).re
}

#[derive(Clone, Debug)]
pub struct RBConfig {
    pub group_id: String,
    pub lengths: Vec<usize>,
    pub sequences: usize,
    /// `None` uses outcome probabilities directly.
    pub shots: Option<u64>,
    pub state: CMatrix,
    pub measurement: CMatrix,
    pub source: RandomSource,
}

impl RBConfig {
    /// `ρ = M = |0⟩⟨0|`
    pub fn ground_state(group_id: &str, dim: usize, lengths: Vec<usize>, sequences: usize, source: RandomSource) -> Self {
        let mut rho = CMatrix::zeros(dim, dim);
        rho[(0, 0)] = c(1.0, 0.0);
        Self {
            group_id: group_id.to_string(),
            lengths,
            sequences,
            shots: None,
            state: rho.clone(),
            measurement: rho,
            source,
        }
    }

    /// `ρ = M = |S,S⟩⟨S,S|`.
    pub fn spin_highest_weight(spin: Spin, lengths: Vec<usize>, sequences: usize, source: RandomSource) -> Self {
        Self::ground_state(&format!("su2:{spin}"), spin.dim(), lengths, sequences, source)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.lengths.is_empty() || self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DesignError::InvalidArgument("lengths must be non-empty and strictly increasing".into()));
        }
        if self.sequences == 0 {
            return Err(DesignError::InvalidArgument("need at least one sequence per length".into()));
        }
        if self.shots == Some(0) {
            return Err(DesignError::InvalidArgument("shot count must be positive".into()));
        }
        for (m, name) in [(&self.state, "state"), (&self.measurement, "measurement")] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(DesignError::InvalidInput(format!("{name} is not {dim}×{dim}")));
            }
        }
        Ok(())
    }
}

/// Character-weighted survival signal at one sequence length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub length: usize,
    pub signal: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDecay {
    pub label: usize,
    pub dim: usize,
    pub points: Vec<DecayPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbData {
    pub group_id: String,
    pub sequences: usize,
    pub shots: Option<u64>,
    pub blocks: Vec<BlockDecay>,
}

impl RbData {
    pub const CSV_HEADER: &'static str = "block_label,length,signal,sequences,shots";

    pub fn to_csv(&self) -> String {
        let shots = self.shots.map_or("exact".to_string(), |s| s.to_string());
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for b in &self.blocks {
            for p in &b.points {
                out.push_str(&format!("{},{},{:.17e},{},{}\n", b.label, p.length, p.signal, self.sequences, shots));
            }
        }
        out
    }

    /// Fits `A·f^N` to every block.
    pub fn fit(&self) -> Result<Vec<BlockFit>> {
        self.blocks
            .iter()
            .map(|b| {
                let pts: Vec<(usize, f64)> = b.points.iter().map(|p| (p.length, p.signal)).collect();
                Ok(BlockFit { label: b.label, fit: fit_decay(&pts)? })
            })
            .collect()
    }
}

/// Gate source for one RB protocol.
trait GateSampler: Sync {
    fn dim(&self) -> usize;
    /// Random sequence of `n` gates and the exact inverse of their product.
    fn sequence<R: Rng>(&self, n: usize, rng: &mut R) -> Result<(Vec<CMatrix>, CMatrix)>;
}

struct FiniteSampler<'a>(&'a FiniteUnitaryGroup);

impl GateSampler for FiniteSampler<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn sequence<R: Rng>(&self, n: usize, rng: &mut R) -> Result<(Vec<CMatrix>, CMatrix)> {
        let g = self.0;
        let mut gates = Vec::with_capacity(n);
        let mut acc: Option<usize> = None;
        for _ in 0..n {
            let i = g.random_index(rng);
            gates.push(g.element(i).clone());
            acc = Some(match acc {
                None => i,
                Some(a) => g.product(i, a)?,
            });
        }
        let inv = acc.map_or_else(|| identity(g.dim()), |a| g.element(g.inverse(a)).clone());
        Ok((gates, inv))
    }
}

struct Su2Sampler(Spin);

impl GateSampler for Su2Sampler {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn sequence<R: Rng>(&self, n: usize, rng: &mut R) -> Result<(Vec<CMatrix>, CMatrix)> {
        let mut gates = Vec::with_capacity(n);
        let mut acc = identity(self.0.dim());
        for _ in 0..n {
            let (a, b, g) = haar_euler_angles(rng);
            let u = su2_rotation(self.0, a, b, g);
            acc = &u * acc;
            gates.push(u);
        }
        Ok((gates, acc.adjoint()))
    }
}

/// Schrödinger-picture noisy sequence: `Λ∘Ad_inv ∘ Λ∘Ad_{U_N} ∘ ⋯ ∘ Λ∘Ad_{U_1}`.
fn run_noisy(x: &CMatrix, gates: &[CMatrix], inv: &CMatrix, noise: &NoiseModel) -> CMatrix {
    let mut x = x.clone();
    for u in gates.iter().chain(std::iter::once(inv)) {
        x = noise.apply(&(u * &x * u.adjoint()));
    }
    x
}

/// Heisenberg-picture sequence applied to the measurement operator.
fn run_noisy_adjoint(m: &CMatrix, gates: &[CMatrix], inv: &CMatrix, noise: &NoiseModel) -> CMatrix {
    let mut x = m.clone();
    for u in std::iter::once(inv).chain(gates.iter().rev()) {
        x = noise.apply_adjoint(&x);
        x = u.adjoint() * &x * u;
    }
    x
}

/// The first gate `U₁U₀` is a single noisy gate, so length `N` has `N + 1`
/// noisy gates including the inverse; length 0 applies `U₀` and the noise once.
fn sequence_signal<S: GateSampler, R: Rng>(
    sampler: &S,
    n: usize,
    rng: &mut R,
    noise: &NoiseModel,
    weighted: &[CMatrix],
    cfg: &RBConfig,
    shot_terms: Option<&ShotTerms>,
) -> Result<Vec<f64>> {
    let (gates, inv) = if n == 0 {
        (Vec::new(), identity(sampler.dim()))
    } else {
        sampler.sequence(n, rng)?
    };
    match (cfg.shots, shot_terms) {
        (Some(shots), Some(terms)) => {
            let heis = if n == 0 {
                noise.apply_adjoint(&cfg.measurement)
            } else {
                run_noisy_adjoint(&cfg.measurement, &gates, &inv, noise)
            };
            let mut out = vec![0.0; weighted.len()];
            for (rho0, weights) in terms.states.iter().zip(&terms.weights) {
                let p = trace_product(&heis, rho0).re.clamp(0.0, 1.0);
                let k = Binomial::new(shots, p)
                    .map_err(|e| DesignError::InvalidArgument(e.to_string()))?
                    .sample(rng);
                let est = k as f64 / shots as f64;
                for (o, w) in out.iter_mut().zip(weights) {
                    *o += w * est;
                }
            }
            Ok(out)
        }
        _ => Ok(weighted
            .iter()
            .map(|v| {
                let out = if n == 0 { noise.apply(v) } else { run_noisy(v, &gates, &inv, noise) };
                trace_product(&cfg.measurement, &out).re
            })
            .collect()),
    }
}

/// `U₀ρU₀†` and character weights per block for shot-mode sampling.
struct ShotTerms {
    states: Vec<CMatrix>,
    weights: Vec<Vec<f64>>,
}

fn simulate<S: GateSampler>(
    sampler: &S,
    blocks: &[IrrepBlock],
    weighted: Vec<CMatrix>,
    shot_terms: Option<ShotTerms>,
    cfg: &RBConfig,
    noise: &NoiseModel,
) -> Result<RbData> {
    let d = sampler.dim();
    cfg.validate(d)?;
    if noise.dim() != d {
        return Err(DesignError::InvalidInput(format!("noise acts on dimension {}, gates on {d}", noise.dim())));
    }
    for (b, v) in blocks.iter().zip(&weighted) {
        if trace_product(&cfg.measurement, v).norm() < OVERLAP_FLOOR {
            return Err(DesignError::DegenerateSignal(format!(
                "state and measurement do not overlap block {}",
                b.label
            )));
        }
    }
    let mut series: Vec<Vec<DecayPoint>> = vec![Vec::new(); blocks.len()];
    for (li, &n) in cfg.lengths.iter().enumerate() {
        let per_seq: Vec<Vec<f64>> = (0..cfg.sequences)
            .into_par_iter()
            .map(|s| {
                let mut rng = cfg.source.split(((li as u64) << 32) | s as u64).rng();
                sequence_signal(sampler, n, &mut rng, noise, &weighted, cfg, shot_terms.as_ref())
            })
            .collect::<Result<_>>()?;
        let m = cfg.sequences as f64;
        for (bi, points) in series.iter_mut().enumerate() {
            let vals = per_seq.iter().map(|v| v[bi]);
            let mean = vals.clone().sum::<f64>() / m;
            let var = if cfg.sequences > 1 {
                vals.map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            points.push(DecayPoint { length: n, signal: mean, stderr: (var / m).sqrt() });
        }
    }
    Ok(RbData {
        group_id: cfg.group_id.clone(),
        sequences: cfg.sequences,
        shots: cfg.shots,
        blocks: blocks
            .iter()
            .zip(series)
            .map(|(b, points)| BlockDecay { label: b.label, dim: b.dim, points })
            .collect(),
    })
}

/// `(dim/|G|) Σ_g conj(χ(g)) gρg†` for every block: the character-weighted
/// average of the first gate over the whole group.
pub fn character_weighted_states(g: &FiniteUnitaryGroup, blocks: &[IrrepBlock], rho: &CMatrix) -> Vec<CMatrix> {
    let d = g.dim();
    let n = g.len() as f64;
    let partial: Vec<Vec<CMatrix>> = g
        .elements()
        .par_iter()
        .map(|u| {
            let ad = conjugation_superop(u);
            let moved = u * rho * u.adjoint();
            blocks
                .iter()
                .map(|b| moved.clone() * (trace_product(&b.projector, &ad).conj() * (b.dim as f64 / n)))
                .collect()
        })
        .collect();
    let mut acc = vec![CMatrix::zeros(d, d); blocks.len()];
    for terms in partial {
        for (a, t) in acc.iter_mut().zip(terms) {
            *a += t;
        }
    }
    acc
}

/// Character RB over a finite group with the first gate averaged exactly.
pub fn rb_simulate(g: &FiniteUnitaryGroup, blocks: &[IrrepBlock], cfg: &RBConfig, noise: &NoiseModel) -> Result<RbData> {
    let weighted = character_weighted_states(g, blocks, &cfg.state);
    let shot_terms = cfg.shots.map(|_| {
        let n = g.len() as f64;
        let states = g.elements().iter().map(|u| u * &cfg.state * u.adjoint()).collect();
        let weights = g
            .elements()
            .iter()
            .map(|u| {
                let ad = conjugation_superop(u);
                blocks.iter().map(|b| (trace_product(&b.projector, &ad).conj() * (b.dim as f64 / n)).re).collect()
            })
            .collect();
        ShotTerms { states, weights }
    });
    simulate(&FiniteSampler(g), blocks, weighted, shot_terms, cfg, noise)
}

/// Euler-angle rule for Haar `SU(2)` on integer-spin integrands: 16 uniform
/// `α`, 16 uniform `γ`, 16 Gauss–Legendre nodes in `cos β`.
pub fn su2_quadrature() -> Vec<((f64, f64, f64), f64)> {
    const ORDER: usize = 16;
    let (x, w) = gauss_legendre(ORDER);
    let step = 2.0 * PI / ORDER as f64;
    let mut out = Vec::with_capacity(ORDER.pow(3));
    for (&xi, &wi) in x.iter().zip(&w) {
        let beta = xi.clamp(-1.0, 1.0).acos();
        for i in 0..ORDER {
            for j in 0..ORDER {
                out.push(((i as f64 * step, beta, j as f64 * step), wi / (2.0 * (ORDER * ORDER) as f64)));
            }
        }
    }
    out
}

fn su2_weighted_states(spin: Spin, blocks: &[IrrepBlock], rho: &CMatrix) -> Vec<CMatrix> {
    let d = spin.dim();
    let partial: Vec<Vec<CMatrix>> = su2_quadrature()
        .par_iter()
        .map(|&((a, b, g), w)| {
            let u = su2_rotation(spin, a, b, g);
            let ad = conjugation_superop(&u);
            let moved = &u * rho * u.adjoint();
            blocks
                .iter()
                .map(|blk| moved.clone() * (trace_product(&blk.projector, &ad).conj() * (w * blk.dim as f64)))
                .collect()
        })
        .collect();
    let mut acc = vec![CMatrix::zeros(d, d); blocks.len()];
    for terms in partial {
        for (a, t) in acc.iter_mut().zip(terms) {
            *a += t;
        }
    }
    acc
}

/// Character RB with Haar-random spin-`S` rotations; the first gate is
/// averaged by [`su2_quadrature`].
pub fn su2_rb_simulate(spin: Spin, noise: &NoiseModel, cfg: &RBConfig) -> Result<RbData> {
    if spin.twice() > 6 {
        return Err(DesignError::ResourceBound(format!("spin {spin} exceeds 3")));
    }
    if cfg.shots.is_some() {
        return Err(DesignError::InvalidArgument("SU(2) RB runs in exact mode only".into()));
    }
    let blocks = su2_blocks(spin)?;
    let weighted = su2_weighted_states(spin, &blocks, &cfg.state);
    simulate(&Su2Sampler(spin), &blocks, weighted, None, cfg, noise)
}

/// Least-squares fit of `A·f^N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    pub residual: f64,
    /// Covariance of `(A, f)`.
    pub covariance: [[f64; 2]; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockFit {
    pub label: usize,
    #[serde(flatten)]
    pub fit: DecayFit,
}

fn rss(data: &[(usize, f64)], a: f64, f: f64) -> f64 {
    data.iter().map(|&(n, y)| (y - a * f.powi(n as i32)).powi(2)).sum()
}

fn loglinear_start(data: &[(usize, f64)]) -> Option<(f64, f64)> {
    if data.iter().any(|&(_, y)| !(y > 0.0)) {
        return None;
    }
    let m = data.len() as f64;
    let mx = data.iter().map(|p| p.0 as f64).sum::<f64>() / m;
    let my = data.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let sxy: f64 = data.iter().map(|p| (p.0 as f64 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = data.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Some(((my - slope * mx).exp(), slope.exp()))
}

/// Fits `y = A·f^N` by Levenberg–Marquardt from a log-linear start (or from
/// `(y₀, 0.9)` when some signal is not positive).
pub fn fit_decay(data: &[(usize, f64)]) -> Result<DecayFit> {
    let mut lengths: Vec<usize> = data.iter().map(|p| p.0).collect();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.len() < 3 {
        return Err(DesignError::FitFailure("need at least three distinct lengths".into()));
    }
    if data.iter().any(|p| !p.1.is_finite()) {
        return Err(DesignError::FitFailure("signal contains non-finite values".into()));
    }
    let (mut a, mut f) = loglinear_start(data).unwrap_or((data[0].1, 0.9));
    let mut lambda = 1e-3;
    let mut cost = rss(data, a, f);
    for _ in 0..500 {
        let mut jtj = Matrix2::<f64>::zeros();
        let mut jtr = Vector2::<f64>::zeros();
        for &(n, y) in data {
            let fn_ = f.powi(n as i32);
            let dfn = if n == 0 { 0.0 } else { n as f64 * f.powi(n as i32 - 1) };
            let jrow = Vector2::new(fn_, a * dfn);
            jtj += jrow * jrow.transpose();
            jtr += jrow * (y - a * fn_);
        }
        if jtr.norm() <= 1e-15 * (1.0 + cost.sqrt()) {
            break;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            damped[(0, 0)] *= 1.0 + lambda;
            damped[(1, 1)] *= 1.0 + lambda;
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let (na, nf) = (a + step[0], f + step[1]);
            let new_cost = rss(data, na, nf);
            if new_cost.is_finite() && new_cost <= cost {
                let rel = (step[0].abs() / (1.0 + a.abs())).max(step[1].abs() / (1.0 + f.abs()));
                a = na;
                f = nf;
                cost = new_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !a.is_finite() || !f.is_finite() {
        return Err(DesignError::FitFailure("fit diverged".into()));
    }
    let mut jtj = DMatrix::<f64>::zeros(2, 2);
    for &(n, _) in data {
        let fn_ = f.powi(n as i32);
        let dfn = if n == 0 { 0.0 } else { n as f64 * f.powi(n as i32 - 1) };
        let j = [fn_, a * dfn];
        for r in 0..2 {
            for s in 0..2 {
                jtj[(r, s)] += j[r] * j[s];
            }
        }
    }
    let dof = data.len().saturating_sub(2).max(1) as f64;
    let inv = crate::linalg::symmetric_pinv(&jtj, 1e-14);
    let s2 = cost / dof;
    let covariance = [[inv[(0, 0)] * s2, inv[(0, 1)] * s2], [inv[(1, 0)] * s2, inv[(1, 1)] * s2]];
    Ok(DecayFit { amplitude: a, rate: f, residual: cost.sqrt(), covariance })
}

/// Fitted and oracle decay rates for one block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub label: usize,
    pub fitted: f64,
    pub oracle: f64,
    pub abs_error: f64,
}

pub fn compare_with_oracle(fits: &[BlockFit], blocks: &[IrrepBlock], noise: &NoiseModel) -> Vec<OracleComparison> {
    fits.iter()
        .zip(blocks)
        .map(|(fit, b)| {
            let oracle = twirl_eigenvalue(noise, b);
            OracleComparison { label: fit.label, fitted: fit.fit.rate, oracle, abs_error: (fit.fit.rate - oracle).abs() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{clifford_group, divisors, generate_group};
    use proptest::prelude::*;

    fn check_blocks(blocks: &[IrrepBlock], d: usize) {
        let n = d * d;
        let mut sum = CMatrix::zeros(n, n);
        for (i, a) in blocks.iter().enumerate() {
            let p = a.projector();
            assert!(max_abs_diff(&(p * p), p) < 1e-9);
            assert!(max_abs_diff(&p.adjoint(), p) < 1e-9);
            assert!((trace(p).re - a.dim() as f64).abs() < 1e-9);
            for b in &blocks[..i] {
                assert!(crate::linalg::max_abs(&(p * b.projector())) < 1e-9);
            }
            sum += p;
        }
        assert!(max_abs_diff(&sum, &identity(n)) < 1e-9);
        assert_eq!(blocks.iter().map(|b| b.dim()).sum::<usize>(), n);
    }

    #[test]
    fn clifford_block_structure() {
        for d in 2..=6 {
            let blocks = clifford_blocks(d).unwrap();
            assert_eq!(blocks.len(), divisors(d).len());
            check_blocks(&blocks, d);
        }
        let dims: Vec<usize> = clifford_blocks(6).unwrap().iter().map(|b| b.dim()).collect();
        assert_eq!(dims, vec![24, 8, 3, 1]);
    }

    #[test]
    fn characters_sum_to_trace_square() {
        let g = clifford_group(4).unwrap();
        let blocks = clifford_blocks(4).unwrap();
        let mut rng = RandomSource::new(1).rng();
        for _ in 0..50 {
            let u = g.element(g.random_index(&mut rng));
            let total: C64 = blocks.iter().map(|b| b.character(u)).sum();
            assert!((total - c(trace(u).norm_sqr(), 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn blocks_are_invariant_under_generators() {
        let blocks = clifford_blocks(6).unwrap();
        for gen in crate::groups::clifford_generators(6).unwrap() {
            let ad = conjugation_superop(&gen);
            for b in &blocks {
                let p = b.projector();
                assert!(max_abs_diff(&(&ad * p), &(p * &ad)) < 1e-9);
            }
        }
    }

    #[test]
    fn clifford_character_orthogonality() {
        for d in [2, 3, 4, 6] {
            let g = clifford_group(d).unwrap();
            let blocks = clifford_blocks(d).unwrap();
            let chars: Vec<Vec<C64>> =
                g.elements().iter().map(|u| blocks.iter().map(|b| b.character(u)).collect()).collect();
            for i in 0..blocks.len() {
                for j in 0..blocks.len() {
                    let s: C64 = chars.iter().map(|row| row[i] * row[j].conj()).sum::<C64>() / c(g.len() as f64, 0.0);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((s - c(want, 0.0)).norm() < 1e-8, "d={d} ({i},{j}): {s}");
                }
            }
        }
    }

    #[test]
    fn l_gate_orders() {
        let table = |d: usize| -> Vec<(usize, usize)> {
            divisors(d).into_iter().map(|r| (r, l_gate_block_order(d, r).unwrap())).collect()
        };
        assert_eq!(table(5), vec![(1, 5), (5, 1)]);
        assert_eq!(table(6), vec![(1, 12), (2, 3), (3, 4), (6, 1)]);
        assert_eq!(table(4), vec![(1, 8), (2, 2), (4, 1)]);
        for d in [3, 4, 5, 6, 7, 8] {
            for r in divisors(d) {
                assert_eq!(l_gate_block_order(d, r).unwrap(), l_gate_parity_rule(d, r), "d={d} r={r}");
            }
        }
    }

    #[test]
    fn su2_block_structure() {
        for twice in 1..=4 {
            let s = Spin::from_twice(twice);
            let blocks = su2_blocks(s).unwrap();
            assert_eq!(blocks.len(), twice as usize + 1);
            check_blocks(&blocks, s.dim());
        }
        let dims: Vec<usize> = su2_blocks(Spin::from_twice(2)).unwrap().iter().map(|b| b.dim()).collect();
        assert_eq!(dims, vec![1, 3, 5]);
    }

    #[test]
    fn clebsch_gordan_overlaps() {
        for twice in 1..=4u32 {
            let s = Spin::from_twice(twice);
            let d = s.dim();
            let mut top = CMatrix::zeros(d, d);
            top[(0, 0)] = c(1.0, 0.0);
            for b in su2_blocks(s).unwrap() {
                let w = weight_zero_operator(s, &b).unwrap();
                let got = vectorize(&w).dotc(&vectorize(&top)).norm();
                let want = clebsch_gordan_overlap(s, b.label());
                assert!((got - want).abs() < 1e-8, "2S={twice} J={}: {got} vs {want}", b.label());
            }
        }
    }

    #[test]
    fn su2_frame_potential_estimates() {
        let cases = [(1, 2.0, 2.0), (2, 2.0, 3.0), (4, 1.0, 1.0)];
        for (twice, t, want) in cases {
            let e = su2_frame_potential_mc(Spin::from_twice(twice), t, 200_000, RandomSource::new(17)).unwrap();
            assert!((e.mean - want).abs() <= 3.0 * e.stderr, "2S={twice} t={t}: {} ± {}", e.mean, e.stderr);
        }
    }

    #[test]
    fn noise_channels_are_complete() {
        for d in 2..=6 {
            for spec in ["none", "depol:0.1", "over:0.3", "damp:0.2"] {
                let n = NoiseModel::parse(spec, d).unwrap();
                let sum = n.kraus().iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
                assert!(max_abs_diff(&sum, &identity(d)) < 1e-10);
            }
        }
        assert!(NoiseModel::parse("depol:1.5", 3).is_err());
        assert!(NoiseModel::parse("bogus:1", 3).is_err());
    }

    #[test]
    fn depolarizing_acts_on_traceless_part() {
        let n = NoiseModel::depolarizing(3, 0.2).unwrap();
        let mut rng = RandomSource::new(3).rng();
        let v = crate::linalg::haar_state(3, &mut rng).unwrap();
        let rho = v.projector();
        let want = &rho * c(0.8, 0.0) + identity(3) * c(0.2 / 3.0, 0.0);
        assert!(max_abs_diff(&n.apply(&rho), &want) < 1e-12);
    }

    #[test]
    fn twirl_eigenvalue_oracles() {
        let blocks = clifford_blocks(3).unwrap();
        let id = NoiseModel::identity(3).unwrap();
        assert!(blocks.iter().all(|b| (twirl_eigenvalue(&id, b) - 1.0).abs() < 1e-12));
        let dep = NoiseModel::depolarizing(3, 0.05).unwrap();
        for b in &blocks {
            let want = if b.label() == 3 { 1.0 } else { 0.95 };
            assert!((twirl_eigenvalue(&dep, b) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn overrotation_eigenvalue_matches_full_twirl() {
        let d = 3;
        let g = clifford_group(d).unwrap();
        let noise = NoiseModel::new(NoiseKind::Overrotation { delta: 0.17 }, d).unwrap();
        let lam = noise.superop();
        let n = d * d;
        let twirl = g.elements().iter().fold(CMatrix::zeros(n, n), |acc, u| {
            let ad = conjugation_superop(u);
            acc + ad.adjoint() * &lam * ad
        }) / c(g.len() as f64, 0.0);
        for b in clifford_blocks(d).unwrap() {
            let p = b.projector();
            let f = twirl_eigenvalue(&noise, &b);
            assert!(max_abs_diff(&(&twirl * p), &(p * c(f, 0.0))) < 1e-9);
        }
    }

    #[test]
    fn weighted_states_equal_block_projections() {
        let g = clifford_group(3).unwrap();
        let blocks = clifford_blocks(3).unwrap();
        let cfg = RBConfig::ground_state("clifford:3", 3, vec![1, 2, 3], 1, RandomSource::new(0));
        for (b, v) in blocks.iter().zip(character_weighted_states(&g, &blocks, &cfg.state)) {
            assert!(max_abs_diff(&v, &b.project(&cfg.state)) < 1e-10);
        }
        let s = Spin::from_twice(2);
        let blocks = su2_blocks(s).unwrap();
        let cfg = RBConfig::spin_highest_weight(s, vec![1, 2, 3], 1, RandomSource::new(0));
        for (b, v) in blocks.iter().zip(su2_weighted_states(s, &blocks, &cfg.state)) {
            assert!(max_abs_diff(&v, &b.project(&cfg.state)) < 1e-10);
        }
    }

    #[test]
    fn spin_measurement_overlaps_every_block() {
        for twice in 1..=4 {
            let s = Spin::from_twice(twice);
            let cfg = RBConfig::spin_highest_weight(s, vec![1, 2, 3], 1, RandomSource::new(0));
            for b in su2_blocks(s).unwrap() {
                let got = trace_product(&cfg.measurement, &b.project(&cfg.state));
                assert!((got.re - clebsch_gordan_overlap(s, b.label()).powi(2)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn extreme_pair_measurement_cancels_odd_blocks() {
        let s = Spin::from_twice(3);
        let d = s.dim();
        let cfg = RBConfig::spin_highest_weight(s, vec![1, 2, 3], 1, RandomSource::new(0));
        let mut m = cfg.measurement.clone();
        m[(d - 1, d - 1)] = c(1.0, 0.0);
        for b in su2_blocks(s).unwrap() {
            let got = trace_product(&m, &b.project(&cfg.state)).norm();
            if b.label() % 2 == 1 {
                assert!(got < 1e-12);
            } else {
                assert!(got > 1e-3);
            }
        }
    }

    #[test]
    fn noiseless_rb_is_flat() {
        let g = clifford_group(3).unwrap();
        let blocks = clifford_blocks(3).unwrap();
        let cfg = RBConfig::ground_state("clifford:3", 3, vec![0, 1, 2, 4, 8], 20, RandomSource::new(4));
        let data = rb_simulate(&g, &blocks, &cfg, &NoiseModel::identity(3).unwrap()).unwrap();
        for fit in data.fit().unwrap() {
            assert!((fit.fit.rate - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn depolarized_rb_matches_oracle() {
        let g = clifford_group(3).unwrap();
        let blocks = clifford_blocks(3).unwrap();
        let noise = NoiseModel::depolarizing(3, 0.01).unwrap();
        let cfg = RBConfig::ground_state("clifford:3", 3, vec![1, 2, 4, 8, 16, 32], 200, RandomSource::new(5));
        let data = rb_simulate(&g, &blocks, &cfg, &noise).unwrap();
        for cmp in compare_with_oracle(&data.fit().unwrap(), &blocks, &noise) {
            assert!(cmp.abs_error <= 0.02 * cmp.oracle, "{cmp:?}");
        }
    }

    #[test]
    fn overrotation_rb_tracks_oracle() {
        let g = clifford_group(2).unwrap();
        let blocks = clifford_blocks(2).unwrap();
        let noise = NoiseModel::new(NoiseKind::Overrotation { delta: 0.05 }, 2).unwrap();
        let cfg = RBConfig::ground_state("clifford:2", 2, vec![1, 2, 4, 8, 16, 32], 400, RandomSource::new(6));
        let data = rb_simulate(&g, &blocks, &cfg, &noise).unwrap();
        for cmp in compare_with_oracle(&data.fit().unwrap(), &blocks, &noise) {
            assert!(cmp.abs_error <= 0.02 * cmp.oracle, "{cmp:?}");
        }
    }

    #[test]
    fn shot_mode_is_close_to_exact() {
        let g = clifford_group(2).unwrap();
        let blocks = clifford_blocks(2).unwrap();
        let noise = NoiseModel::depolarizing(2, 0.02).unwrap();
        let mut cfg = RBConfig::ground_state("clifford:2", 2, vec![1, 4, 16], 40, RandomSource::new(7));
        let exact = rb_simulate(&g, &blocks, &cfg, &noise).unwrap();
        cfg.shots = Some(2000);
        let shots = rb_simulate(&g, &blocks, &cfg, &noise).unwrap();
        for (a, b) in exact.blocks.iter().zip(&shots.blocks) {
            for (p, q) in a.points.iter().zip(&b.points) {
                assert!((p.signal - q.signal).abs() < 0.02, "{p:?} vs {q:?}");
            }
        }
    }

    #[test]
    fn degenerate_configuration_is_rejected() {
        let g = clifford_group(2).unwrap();
        let blocks = clifford_blocks(2).unwrap();
        let mut cfg = RBConfig::ground_state("clifford:2", 2, vec![1, 2, 3], 2, RandomSource::new(0));
        cfg.state = identity(2) * c(0.5, 0.0);
        let err = rb_simulate(&g, &blocks, &cfg, &NoiseModel::identity(2).unwrap()).unwrap_err();
        assert!(matches!(err, DesignError::DegenerateSignal(_)));
        cfg.lengths = vec![2, 1];
        assert!(rb_simulate(&g, &blocks, &cfg, &NoiseModel::identity(2).unwrap()).is_err());
    }

    #[test]
    fn su2_rb_matches_oracle() {
        let s = Spin::from_twice(2);
        let noise = NoiseModel::depolarizing(3, 0.02).unwrap();
        let cfg = RBConfig::spin_highest_weight(s, vec![1, 2, 4, 8, 16], 50, RandomSource::new(8));
        let data = su2_rb_simulate(s, &noise, &cfg).unwrap();
        assert_eq!(data.blocks.len(), 3);
        let blocks = su2_blocks(s).unwrap();
        for cmp in compare_with_oracle(&data.fit().unwrap(), &blocks, &noise) {
            assert!(cmp.abs_error <= 0.03 * cmp.oracle, "{cmp:?}");
        }
        let flat = su2_rb_simulate(s, &NoiseModel::identity(3).unwrap(), &cfg).unwrap();
        assert!(flat.fit().unwrap().iter().all(|f| (f.fit.rate - 1.0).abs() < 1e-9));
    }

    #[test]
    fn finite_sampler_inverse_is_exact() {
        let g = generate_group(2, &crate::groups::clifford_generators(2).unwrap(), 100).unwrap();
        let mut rng = RandomSource::new(2).rng();
        let (gates, inv) = FiniteSampler(&g).sequence(7, &mut rng).unwrap();
        let prod = gates.iter().fold(identity(2), |acc, u| u * acc);
        let total = inv * prod;
        let phase = total[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-10);
        assert!(max_abs_diff(&total, &(identity(2) * phase)) < 1e-10);
    }

    #[test]
    fn fit_exact_and_constant() {
        let data: Vec<(usize, f64)> = (1..10).map(|n| (n, 0.9 * 0.95f64.powi(n as i32))).collect();
        let fit = fit_decay(&data).unwrap();
        assert!((fit.amplitude - 0.9).abs() < 1e-6 && (fit.rate - 0.95).abs() < 1e-6);
        let flat: Vec<(usize, f64)> = (1..6).map(|n| (n, 0.3)).collect();
        assert!((fit_decay(&flat).unwrap().rate - 1.0).abs() < 1e-9);
        assert!(fit_decay(&[(1, 0.5), (2, 0.4)]).is_err());
    }

    #[test]
    fn fit_handles_negative_signals() {
        let data: Vec<(usize, f64)> = (0..12).map(|n| (n, -0.4 * 0.9f64.powi(n as i32))).collect();
        let fit = fit_decay(&data).unwrap();
        assert!((fit.rate - 0.9).abs() < 1e-6 && (fit.amplitude + 0.4).abs() < 1e-6);
    }

    #[test]
    fn fit_with_noise() {
        use rand_distr::Normal;
        let mut rng = RandomSource::new(12).rng();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let data: Vec<(usize, f64)> = (1..=20)
            .map(|k| {
                let n = 2 * k;
                let y = 0.8 * 0.97f64.powi(n as i32);
                (n, y * (1.0 + 0.01 * normal.sample(&mut rng)))
            })
            .collect();
        let fit = fit_decay(&data).unwrap();
        assert!((fit.rate - 0.97).abs() <= 0.005 * 0.97);
        assert!(fit.covariance[1][1] > 0.0);
    }

    #[test]
    fn decay_csv_layout() {
        let data = RbData {
            group_id: "clifford:2".into(),
            sequences: 3,
            shots: None,
            blocks: vec![BlockDecay { label: 1, dim: 3, points: vec![DecayPoint { length: 4, signal: 0.5, stderr: 0.0 }] }],
        };
        let csv = data.to_csv();
        assert!(csv.starts_with("block_label,length,signal,sequences,shots\n1,4,"));
        assert!(csv.trim_end().ends_with(",3,exact"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fit_recovers_synthetic_decays(a in 0.1f64..2.0, f in 0.5f64..0.999) {
            let data: Vec<(usize, f64)> = [1usize, 2, 4, 8, 16, 32].iter().map(|&n| (n, a * f.powi(n as i32))).collect();
            let fit = fit_decay(&data).unwrap();
            prop_assert!((fit.rate - f).abs() < 1e-8);
            prop_assert!((fit.amplitude - a).abs() < 1e-8 * a.max(1.0));
        }

        #[test]
        fn twirl_eigenvalues_are_physical(p in 0.0f64..1.0, gamma in 0.0f64..1.0) {
            for noise in [NoiseModel::depolarizing(4, p).unwrap(), NoiseModel::new(NoiseKind::Damping { gamma }, 4).unwrap()] {
                for b in clifford_blocks(4).unwrap() {
                    let f = twirl_eigenvalue(&noise, &b);
                    prop_assert!(f <= 1.0 + 1e-6 && f >= -1.0 - 1e-6);
                }
            }
        }
    }
}
