//! Spin-coherent states, SNAP and displacement gates, and random native-gate
//! circuits on a spin-S qudit.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::groups::{fourier_gate, su2_spin_ops, Spin};
use crate::linalg::{
    c, cis, hermitian_exp, identity, CMatrix, CVector, HermitianSpectrum, RandomSource,
    UnitVector, C64,
};
use crate::metrics::welch_rhs;
use crate::quadrature::gauss_legendre;

/// Per-level phases of a SNAP gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapAngles(Vec<f64>);

impl SnapAngles {
    pub fn new(angles: Vec<f64>) -> Self {
        Self(angles)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Phases `(k+1)·φ` on level `k` (levels counted from `m = S`).
    pub fn linear(dim: usize, phi: f64) -> Self {
        Self((0..dim).map(|k| (k + 1) as f64 * phi).collect())
    }

    /// Phase `ε` on levels `0..=n`, zero above.
    pub fn step(dim: usize, n: usize, eps: f64) -> Self {
        Self((0..dim).map(|k| if k <= n { eps } else { 0.0 }).collect())
    }

    pub fn uniform<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self((0..dim).map(|_| rng.random::<f64>() * 2.0 * PI).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }
}

/// `diag(e^{iθ_k})`
pub fn snap_gate(angles: &SnapAngles) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        angles.dim(),
        angles.0.iter().map(|&a| cis(a)),
    ))
}

fn apply_snap(v: &mut CVector, angles: &[f64]) {
    for (z, &a) in v.iter_mut().zip(angles) {
        *z *= cis(a);
    }
}

/// `D(θ, φ) = exp[(θ/2)(e^{iφ}S₋ − e^{−iφ}S₊)]`, computed as `exp(i·H)` with
/// the Hermitian generator `H = −(i θ/2)(e^{iφ}S₋ − e^{−iφ}S₊)`.
pub fn displacement(spin: Spin, theta: f64, phi: f64) -> Result<CMatrix> {
    let ops = su2_spin_ops(spin);
    let anti = (&ops.minus * cis(phi) - &ops.plus * cis(-phi)) * c(theta / 2.0, 0.0);
    let h = anti * c(0.0, -1.0);
    hermitian_exp(&h, 1.0)
}

/// Polar and azimuthal angles of a point on the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochDirection {
    theta: f64,
    phi: f64,
}

impl BlochDirection {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !(-PI..PI).contains(&phi) {
            return Err(DesignError::InvalidArgument(format!(
                "direction ({theta}, {phi}) outside θ ∈ [0, π], φ ∈ [−π, π)"
            )));
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit(&self) -> [f64; 3] {
        let s = self.theta.sin();
        [s * self.phi.cos(), s * self.phi.sin(), self.theta.cos()]
    }
}

/// `|n⟩ = D(θ, φ)|S, S⟩`
pub fn spin_coherent(spin: Spin, n: BlochDirection) -> Result<UnitVector> {
    let d = displacement(spin, n.theta, n.phi)?;
    UnitVector::normalize(d.column(0).into_owned())
}

/// Max-norm error of `(1/4π)∫|n⟩⟨n| dn − I/(2S+1)` on a Gauss–Legendre grid
/// of `order` nodes in `cos θ` and `2·order` uniform azimuths.
pub fn scs_resolution_error(spin: Spin, order: usize) -> Result<f64> {
    let dim = spin.dim();
    let (x, w) = gauss_legendre(order);
    let nphi = 2 * order;
    let mut acc = CMatrix::zeros(dim, dim);
    for (&xi, &wi) in x.iter().zip(&w) {
        let theta = xi.clamp(-1.0, 1.0).acos();
        for k in 0..nphi {
            let phi = -PI + 2.0 * PI * k as f64 / nphi as f64;
            let v = spin_coherent(spin, BlochDirection::new(theta, phi)?)?;
            // dn = d(cos θ) dφ, and the φ grid carries weight 2π/nphi
            acc += v.projector() * c(wi / (2.0 * nphi as f64), 0.0);
        }
    }
    let target = identity(dim) / c(dim as f64, 0.0);
    Ok(crate::linalg::max_abs_diff(&acc, &target))
}

/// `E|⟨n₁|n₂⟩|⁴` over independent uniform directions, from actual state
/// overlaps. By rotation invariance this is `∫ |⟨S,S|n(θ)⟩|⁴ ½ sin θ dθ`.
pub fn scs_welch_t2(spin: Spin) -> Result<f64> {
    let top = spin_coherent(spin, BlochDirection::new(0.0, 0.0)?)?;
    let (x, w) = gauss_legendre(2 * spin.dim() + 8);
    let mut total = 0.0;
    for (&xi, &wi) in x.iter().zip(&w) {
        let v = spin_coherent(spin, BlochDirection::new(xi.clamp(-1.0, 1.0).acos(), 0.0)?)?;
        total += 0.5 * wi * top.inner(&v).norm_sqr().powi(2);
    }
    Ok(total)
}

/// `‖D(ε)R_n(ε)D(−ε)R_n(−ε) − exp(iJ_nε²)‖₂` with `R_n(ε)` the SNAP placing
/// `e^{iε}` on levels `0..=n` and `J_n = −i[S_y, Q_n]`.
pub fn group_commutator_error(spin: Spin, n: usize, eps: f64) -> Result<f64> {
    let dim = spin.dim();
    if n + 1 >= dim {
        return Err(DesignError::InvalidArgument(format!(
            "level {n} needs a level above it (2S = {})",
            spin.twice()
        )));
    }
    if !(eps > 0.0) {
        return Err(DesignError::InvalidArgument("ε must be positive".into()));
    }
    let d_plus = displacement(spin, eps, 0.0)?;
    let d_minus = displacement(spin, -eps, 0.0)?;
    let r_plus = snap_gate(&SnapAngles::step(dim, n, eps));
    let r_minus = snap_gate(&SnapAngles::step(dim, n, -eps));
    let lhs = d_plus * r_plus * d_minus * r_minus;
    let rhs = hermitian_exp(&commutator_generator(spin, n), eps * eps)?;
    Ok(crate::linalg::spectral_norm(&(lhs - rhs)))
}

/// `Q_n = Σ_{k ≤ n} |k⟩⟨k|`
pub fn level_projector(dim: usize, n: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| if i == j && i <= n { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// `J_n = −i[S_y, Q_n]`
pub fn commutator_generator(spin: Spin, n: usize) -> CMatrix {
    let sy = su2_spin_ops(spin).y;
    let q = level_projector(spin.dim(), n);
    (&sy * &q - &q * &sy) * c(0.0, -1.0)
}

/// Layer recipe for native-gate circuits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LayerRecipe {
    /// `D(θ, 0)` with density `½ sin θ`, then SNAP with i.i.d. uniform phases.
    Random,
    /// Every layer applies the same displacement angle and SNAP phases.
    Fixed { theta: f64, snap: SnapAngles },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub spin: Spin,
    pub depth: usize,
    pub recipe: LayerRecipe,
    pub source: RandomSource,
}

impl CircuitSpec {
    pub fn random(dim: usize, depth: usize, source: RandomSource) -> Result<Self> {
        if dim < 2 {
            return Err(DesignError::InvalidDimension(dim));
        }
        Ok(Self {
            spin: Spin::from_twice(dim as u32 - 1),
            depth,
            recipe: LayerRecipe::Random,
            source,
        })
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }
}

/// Reusable `e^{−iθS_y}` generator for many displacement draws.
struct RealDisplacement(HermitianSpectrum);

impl RealDisplacement {
    fn new(spin: Spin) -> Self {
        Self(HermitianSpectrum::new(&su2_spin_ops(spin).y))
    }

    fn at(&self, theta: f64) -> CMatrix {
        self.0.exp_i(-theta)
    }
}

fn run_circuit(spec: &CircuitSpec, disp: &RealDisplacement, initial: &CVector) -> CVector {
    let dim = spec.dim();
    let mut v = initial.clone();
    let mut rng = spec.source.rng();
    for _ in 0..spec.depth {
        match &spec.recipe {
            LayerRecipe::Random => {
                // inverse CDF of ½ sin θ on [0, π]
                let u: f64 = rng.random();
                let theta = (1.0 - 2.0 * u).clamp(-1.0, 1.0).acos();
                v = disp.at(theta) * v;
                let angles: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
                apply_snap(&mut v, &angles);
            }
            LayerRecipe::Fixed { theta, snap } => {
                v = disp.at(*theta) * v;
                apply_snap(&mut v, snap.angles());
            }
        }
    }
    v
}

/// Applies `spec.depth` displacement+SNAP layers to `initial`.
pub fn random_snap_disp_state(spec: &CircuitSpec, initial: &UnitVector) -> Result<UnitVector> {
    if initial.dim() != spec.dim() {
        return Err(DesignError::InvalidInput(format!(
            "initial state has dimension {}, circuit has {}",
            initial.dim(),
            spec.dim()
        )));
    }
    if let LayerRecipe::Fixed { snap, .. } = &spec.recipe {
        if snap.dim() != spec.dim() {
            return Err(DesignError::InvalidInput("SNAP length differs from dimension".into()));
        }
    }
    let disp = RealDisplacement::new(spec.spin);
    UnitVector::normalize(run_circuit(spec, &disp, initial.as_vector()))
}

/// `D_ℓ (F D′_ℓ F†) ⋯ D_1 (F D′_1 F†) D_0` with independent uniformly random
/// diagonal phases in every factor.
pub fn mub_alternation_unitary<R: Rng + ?Sized>(d: usize, layers: usize, rng: &mut R) -> Result<CMatrix> {
    let f = fourier_gate(d)?;
    let fd = f.adjoint();
    let diag = |rng: &mut R| snap_gate(&SnapAngles::uniform(d, rng));
    let mut u = diag(rng);
    for _ in 0..layers {
        let inner = &f * diag(rng) * &fd;
        u = diag(rng) * inner * u;
    }
    Ok(u)
}

/// One row of a Welch-ratio sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchPoint {
    pub n: usize,
    pub ratio: f64,
}

/// `R_w(N′)` on prefixes `N′ = 2, 4, 8, …, ≤ N` of `N` circuit outputs,
/// starting from `|S, S⟩`. State `j` uses random stream `j` of `source`.
pub fn welch_ratio_experiment(
    d: usize,
    t: usize,
    depth: usize,
    samples: usize,
    source: RandomSource,
) -> Result<Vec<WelchPoint>> {
    if !(1..=3).contains(&t) {
        return Err(DesignError::InvalidArgument(format!("t must be 1, 2 or 3, got {t}")));
    }
    if samples < 2 {
        return Err(DesignError::InvalidArgument("need at least two samples".into()));
    }
    let base = CircuitSpec::random(d, depth, source)?;
    let disp = RealDisplacement::new(base.spin);
    let start = UnitVector::basis(d, 0).into_vector();
    let states: Vec<CVector> = (0..samples)
        .into_par_iter()
        .map(|j| {
            let spec = CircuitSpec { source: source.split(j as u64), ..base.clone() };
            run_circuit(&spec, &disp, &start)
        })
        .collect();
    let rhs = welch_rhs(d, t as f64)?;
    let mut out = Vec::new();
    let mut pair_sum = 0.0;
    let mut next = 2;
    for k in 0..samples {
        let a = &states[k];
        let cross: f64 = states[..k]
            .iter()
            .map(|b| {
                let ov: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
                ov.norm_sqr().powi(t as i32)
            })
            .sum();
        pair_sum += 2.0 * cross + a.norm_squared().powi(t as i32);
        let n = k + 1;
        if n == next {
            let lhs = pair_sum / (n * n) as f64;
            out.push(WelchPoint { n, ratio: lhs / rhs });
            next *= 2;
        }
    }
    Ok(out)
}

/// Least-squares slope of `log(R_w − 1)` against `log N` over `lo ≤ N ≤ hi`.
pub fn loglog_slope(points: &[WelchPoint], lo: usize, hi: usize) -> Result<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.n >= lo && p.n <= hi)
        .map(|p| ((p.n as f64).ln(), p.ratio - 1.0))
        .collect();
    if xy.len() < 2 || xy.iter().any(|&(_, y)| !(y > 0.0)) {
        return Err(DesignError::DegenerateSignal(
            "slope needs at least two points with R_w > 1".into(),
        ));
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// `e^{−iαS_z} e^{−iβS_y} e^{−iγS_z}` in the spin-`S` representation.
pub fn su2_rotation(spin: Spin, alpha: f64, beta: f64, gamma: f64) -> CMatrix {
    let dim = spin.dim();
    let zphase = |a: f64| {
        CMatrix::from_diagonal(&CVector::from_iterator(
            dim,
            (0..dim).map(|k| cis(-a * spin.m_at(k))),
        ))
    };
    let ry = HermitianSpectrum::new(&su2_spin_ops(spin).y).exp_i(-beta);
    zphase(alpha) * ry * zphase(gamma)
}

/// Haar-distributed Euler angles on `SU(2)`: `β` has density `½ sin β`.
pub fn haar_euler_angles<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64, f64) {
    let alpha = rng.random::<f64>() * 2.0 * PI;
    let beta = (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos();
    let gamma = rng.random::<f64>() * 4.0 * PI;
    (alpha, beta, gamma)
}
