//! Explicit state-design constructions and POVMs built from design orbits.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::groups::{is_prime, FiniteUnitaryGroup};
use crate::linalg::{c, cis, hermiticity_error, identity, max_abs_diff, trace, CMatrix, CVector, UnitVector};
use crate::metrics::WeightedStateEnsemble;

const PROJECTOR_TOL: f64 = 1e-10;
const DROP_NORM: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-9;
const NOT_A_DESIGN_TOL: f64 = 1e-6;

fn require_odd_prime(p: usize) -> Result<()> {
    if p < 3 || !is_prime(p) {
        return Err(DesignError::InvalidArgument(format!("{p} is not an odd prime")));
    }
    Ok(())
}

/// `(1/√d) Σ_n exp[2πi(a·n + b·n²)/p] |n⟩` for `n < d`.
fn quadratic_phase_state(d: usize, p: usize, a: usize, b: usize) -> Result<UnitVector> {
    let scale = 1.0 / (d as f64).sqrt();
    let v = CVector::from_iterator(
        d,
        (0..d).map(|n| {
            let e = (a * n + b * ((n * n) % p)) % p;
            cis(2.0 * PI * e as f64 / p as f64) * scale
        }),
    );
    UnitVector::from_normalized(v)
}

fn computational_basis(d: usize) -> impl Iterator<Item = UnitVector> {
    (0..d).map(move |i| UnitVector::basis(d, i))
}

/// The `p²` quadratic-phase states `|q₁, q₂⟩` followed by the computational
/// basis, uniformly weighted. An exact 2-design for odd prime `p`.
pub fn wootters_fields(p: usize) -> Result<WeightedStateEnsemble> {
    require_odd_prime(p)?;
    let mut states = Vec::with_capacity(p * (p + 1));
    for q2 in 0..p {
        for q1 in 0..p {
            states.push(quadratic_phase_state(p, p, q1, q2)?);
        }
    }
    states.extend(computational_basis(p));
    WeightedStateEnsemble::uniform(states)
}

/// Weighted 2-design in any dimension `d ≤ p`: the `d` Fock states with weight
/// `1/(d(d+1))` and the `p²` truncated phase states with weight `d/(p²(d+1))`.
pub fn phase_state_ensemble(d: usize, p: usize) -> Result<WeightedStateEnsemble> {
    if d < 2 {
        return Err(DesignError::InvalidDimension(d));
    }
    require_odd_prime(p)?;
    if p < d {
        return Err(DesignError::InvalidArgument(format!("prime {p} is below dimension {d}")));
    }
    let df = d as f64;
    let w_fock = 1.0 / (df * (df + 1.0));
    let w_phase = df / ((p * p) as f64 * (df + 1.0));
    let mut states: Vec<UnitVector> = computational_basis(d).collect();
    let mut weights = vec![w_fock; d];
    for phi in 0..p {
        for theta in 0..p {
            states.push(quadratic_phase_state(d, p, theta, phi)?);
            weights.push(w_phase);
        }
    }
    WeightedStateEnsemble::new(states, weights)
}

/// Smallest odd prime `≥ d`.
pub fn smallest_admissible_prime(d: usize) -> usize {
    (d.max(3)..).find(|&p| is_prime(p)).expect("primes are unbounded")
}

/// Phase states `(1/√d) Σ e^{i(θn + φn²)}|n⟩` on a uniform `m_θ × m_φ` grid of
/// `[−π, π)²`, total weight `d/(d+1)`, plus Fock states at `1/(d(d+1))`.
///
/// The grid integrates the continuous ensemble exactly once
/// `m_θ ≥ 2d − 1` and `m_φ ≥ 2d² − 1`.
pub fn phase_grid_ensemble(d: usize, m_theta: usize, m_phi: usize) -> Result<WeightedStateEnsemble> {
    if d < 2 {
        return Err(DesignError::InvalidDimension(d));
    }
    if m_theta < 2 * d - 1 || m_phi < 2 * d * d - 1 {
        return Err(DesignError::InvalidArgument(format!(
            "grid {m_theta}×{m_phi} too coarse for d = {d} (need {}×{})",
            2 * d - 1,
            2 * d * d - 1
        )));
    }
    let df = d as f64;
    let mut states: Vec<UnitVector> = computational_basis(d).collect();
    let mut weights = vec![1.0 / (df * (df + 1.0)); d];
    let w = df / (df + 1.0) / (m_theta * m_phi) as f64;
    let scale = 1.0 / df.sqrt();
    for j in 0..m_phi {
        let phi = -PI + 2.0 * PI * j as f64 / m_phi as f64;
        for i in 0..m_theta {
            let theta = -PI + 2.0 * PI * i as f64 / m_theta as f64;
            let v = CVector::from_iterator(
                d,
                (0..d).map(|n| {
                    let nf = n as f64;
                    cis(theta * nf + phi * nf * nf) * scale
                }),
            );
            states.push(UnitVector::from_normalized(v)?);
            weights.push(w);
        }
    }
    WeightedStateEnsemble::new(states, weights)
}

/// Orthogonal projector of rank `target` on a `ambient`-dimensional space,
/// together with an orthonormal basis of its range.
#[derive(Clone, Debug)]
pub struct ProjectionSpec {
    ambient: usize,
    target: usize,
    projector: CMatrix,
    range: CMatrix,
}

impl ProjectionSpec {
    /// Projector onto the first `target` computational basis states.
    pub fn leading(ambient: usize, target: usize) -> Result<Self> {
        if target == 0 || target > ambient {
            return Err(DesignError::InvalidArgument(format!(
                "cannot project {ambient} dimensions onto {target}"
            )));
        }
        let range = CMatrix::from_fn(ambient, target, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let projector = &range * range.adjoint();
        Ok(Self { ambient, target, projector, range })
    }

    /// Any orthogonal projector; coordinates in the range come from its
    /// eigenvectors with eigenvalue one.
    pub fn from_projector(projector: CMatrix) -> Result<Self> {
        if !projector.is_square() {
            return Err(DesignError::InvalidInput("projector must be square".into()));
        }
        let q = projector.nrows();
        let idem = max_abs_diff(&(&projector * &projector), &projector);
        if idem > PROJECTOR_TOL || hermiticity_error(&projector) > PROJECTOR_TOL {
            return Err(DesignError::InvalidInput(format!(
                "not an orthogonal projector (idempotence error {idem:.2e})"
            )));
        }
        let tr = trace(&projector).re;
        let rank = tr.round();
        if (tr - rank).abs() > 1e-8 || rank < 1.0 {
            return Err(DesignError::InvalidInput(format!("projector trace {tr} is not a positive integer")));
        }
        let eig = SymmetricEigen::new(projector.clone());
        let cols: Vec<CVector> = (0..q)
            .filter(|&k| eig.eigenvalues[k] > 0.5)
            .map(|k| eig.eigenvectors.column(k).into_owned())
            .collect();
        let range = CMatrix::from_columns(&cols);
        Ok(Self { ambient: q, target: rank as usize, projector, range })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn projector(&self) -> &CMatrix {
        &self.projector
    }

    /// `ambient × target` isometry whose columns span the range.
    pub fn range(&self) -> &CMatrix {
        &self.range
    }
}

/// Projects a design into the range of `spec`: each surviving state is
/// renormalized and weighted by `w_j‖Pψ_j‖^{2t}`, then all weights are
/// rescaled to sum to one. States with `‖Pψ‖ ≤ 1e-12` are dropped.
pub fn project_ensemble(ens: &WeightedStateEnsemble, spec: &ProjectionSpec, t: usize) -> Result<WeightedStateEnsemble> {
    if ens.dim() != spec.ambient {
        return Err(DesignError::InvalidInput(format!(
            "ensemble dimension {} differs from projector dimension {}",
            ens.dim(),
            spec.ambient
        )));
    }
    let coords = spec.range.adjoint();
    let mut states = Vec::with_capacity(ens.len());
    let mut raw = Vec::with_capacity(ens.len());
    for (psi, &w) in ens.states().iter().zip(ens.weights()) {
        let v = &coords * psi.as_vector();
        let norm = v.norm();
        if norm <= DROP_NORM {
            continue;
        }
        raw.push(w * norm.powi(2 * t as i32));
        states.push(UnitVector::normalize(v)?);
    }
    let total: f64 = raw.iter().sum();
    if states.is_empty() || total <= 0.0 {
        return Err(DesignError::EmptyEnsemble);
    }
    let weights = raw.into_iter().map(|r| r / total).collect();
    WeightedStateEnsemble::new(states, weights)
}

/// The four tetrahedral qubit states.
pub fn sic_qubit() -> Result<WeightedStateEnsemble> {
    let a = 1.0 / 3f64.sqrt();
    let b = (2.0 / 3.0f64).sqrt();
    let mut states = vec![UnitVector::basis(2, 0)];
    for k in 0..3 {
        let v = CVector::from_vec(vec![c(a, 0.0), cis(2.0 * PI * k as f64 / 3.0) * b]);
        states.push(UnitVector::normalize(v)?);
    }
    WeightedStateEnsemble::uniform(states)
}

/// `p + 1` mutually unbiased bases, uniformly weighted. For odd `p` these are
/// the quadratic-phase bases and the computational basis; for `p = 2` the
/// eigenbases of `X`, `Y` and `Z`.
pub fn mub_ensemble(p: usize) -> Result<WeightedStateEnsemble> {
    if p == 2 {
        let s = 1.0 / 2f64.sqrt();
        let states = [
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1.0, 0.0)],
            [c(s, 0.0), c(s, 0.0)],
            [c(s, 0.0), c(-s, 0.0)],
            [c(s, 0.0), c(0.0, s)],
            [c(s, 0.0), c(0.0, -s)],
        ]
        .into_iter()
        .map(|v| UnitVector::normalize(CVector::from_vec(v.to_vec())))
        .collect::<Result<Vec<_>>>()?;
        return WeightedStateEnsemble::uniform(states);
    }
    wootters_fields(p)
}

/// Positive operators summing to the identity.
#[derive(Clone, Debug)]
pub struct PovmSet {
    elements: Vec<CMatrix>,
}

impl PovmSet {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let d = elements.first().ok_or(DesignError::EmptyEnsemble)?.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for e in &elements {
            if e.nrows() != d || !e.is_square() {
                return Err(DesignError::InvalidInput("POVM elements differ in shape".into()));
            }
            if min_eigenvalue(e)? < -PSD_TOL {
                return Err(DesignError::InvalidInput("POVM element is not positive semidefinite".into()));
            }
            sum += e;
        }
        let residual = max_abs_diff(&sum, &identity(d));
        if residual > COMPLETENESS_TOL {
            return Err(DesignError::InvalidInput(format!("POVM completeness error {residual:.2e}")));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn completeness_error(&self) -> f64 {
        let d = self.elements[0].nrows();
        let sum = self.elements.iter().fold(CMatrix::zeros(d, d), |acc, e| acc + e);
        max_abs_diff(&sum, &identity(d))
    }
}

fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    if hermiticity_error(m) > PSD_TOL {
        return Err(DesignError::InvalidInput("operator is not Hermitian".into()));
    }
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    Ok(SymmetricEigen::new(h).eigenvalues.min())
}

/// Orbit `{(d/(|E| Tr M)) U M U†}` of a positive operator under a uniformly
/// weighted unitary 1-design.
pub fn povm_from_design(unitaries: &[CMatrix], seed: &CMatrix) -> Result<PovmSet> {
    let d = seed.nrows();
    if unitaries.is_empty() {
        return Err(DesignError::EmptyEnsemble);
    }
    if min_eigenvalue(seed)? < -PSD_TOL {
        return Err(DesignError::InvalidInput("seed operator is not positive semidefinite".into()));
    }
    let tr = trace(seed).re;
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(DesignError::InvalidArgument(format!("seed operator has trace {tr}")));
    }
    let scale = c(d as f64 / (unitaries.len() as f64 * tr), 0.0);
    let elements: Vec<CMatrix> = unitaries.iter().map(|u| u * seed * u.adjoint() * scale).collect();
    let sum = elements.iter().fold(CMatrix::zeros(d, d), |acc, e| acc + e);
    let residual = max_abs_diff(&sum, &identity(d));
    if residual > NOT_A_DESIGN_TOL {
        return Err(DesignError::NotA1Design { residual });
    }
    PovmSet::new(elements)
}

/// [`povm_from_design`] over every element of a finite group.
pub fn povm_from_group(g: &FiniteUnitaryGroup, seed: &CMatrix) -> Result<PovmSet> {
    povm_from_design(g.elements(), seed)
}

/// Serializable row of a Welch check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchRow {
    pub ensemble: String,
    pub dim: usize,
    pub size: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

impl WelchRow {
    pub const CSV_HEADER: &'static str = "ensemble,dim,size,t,lhs,rhs,ratio,pass";

    pub fn evaluate(name: &str, ens: &WeightedStateEnsemble, t: f64, tol: f64) -> Result<Self> {
        let lhs = crate::metrics::welch_lhs(ens, t)?;
        let rhs = crate::metrics::welch_rhs(ens.dim(), t)?;
        let ratio = lhs / rhs;
        Ok(Self {
            ensemble: name.to_string(),
            dim: ens.dim(),
            size: ens.len(),
            t,
            lhs,
            rhs,
            ratio,
            pass: (ratio - 1.0).abs() <= tol,
        })
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.17e},{:.17e},{:.17e},{}",
            self.ensemble, self.dim, self.size, self.t, self.lhs, self.rhs, self.ratio, self.pass
        )
    }
}
