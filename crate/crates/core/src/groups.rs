//! Qudit Paulis, the single-qudit Clifford group, stabilizer states, the
//! binary icosahedral group and spin operators.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::linalg::{
    c, cis, exact_key, export_entries, identity, kron, max_abs_diff, unitarity_error,
    CMatrix, CVector, HermitianSpectrum, PhaseCanonical, PhaseKey, UnitVector, C64,
    UNITARY_TOL,
};

/// Default element cap for closures.
pub const DEFAULT_MAX_GROUP: usize = 200_000;
/// Two canonical matrices with the same key are the same element if they
/// agree entrywise to this tolerance.
pub const CONFIRM_TOL: f64 = 1e-9;

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn divisors(d: usize) -> Vec<usize> {
    (1..=d).filter(|r| d % r == 0).collect()
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| n % k != 0)
}

/// Exponents `(a, b)` of `X^a Z^b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliLabel {
    pub a: usize,
    pub b: usize,
}

impl PauliLabel {
    pub fn new(d: usize, a: usize, b: usize) -> Self {
        Self { a: a % d, b: b % d }
    }

    /// `gcd(a, b, d)`; the zero label maps to `d`.
    pub fn orbit(&self, d: usize) -> usize {
        gcd(gcd(self.a, self.b), d)
    }

    pub fn all(d: usize) -> impl Iterator<Item = PauliLabel> {
        (0..d).flat_map(move |a| (0..d).map(move |b| PauliLabel { a, b }))
    }
}

/// `[[w, x], [y, z]]` over `Z_d` with unit determinant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymplecticMatrix {
    pub w: usize,
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl SymplecticMatrix {
    pub fn new(d: usize, w: usize, x: usize, y: usize, z: usize) -> Result<Self> {
        let m = Self { w: w % d, x: x % d, y: y % d, z: z % d };
        if m.det(d) != 1 % d {
            return Err(DesignError::InvalidArgument(format!(
                "determinant of {m:?} is not 1 mod {d}"
            )));
        }
        Ok(m)
    }

    pub fn det(&self, d: usize) -> usize {
        (self.w * self.z % d + d - self.x * self.y % d) % d
    }

    pub fn apply(&self, d: usize, p: PauliLabel) -> PauliLabel {
        PauliLabel::new(d, self.w * p.a + self.x * p.b, self.y * p.a + self.z * p.b)
    }
}

/// Every element of `SL₂(Z_d)`.
pub fn sl2_enumerate(d: usize) -> Result<Vec<SymplecticMatrix>> {
    if d < 2 {
        return Err(DesignError::InvalidDimension(d));
    }
    let mut out = Vec::new();
    for w in 0..d {
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    let m = SymplecticMatrix { w, x, y, z };
                    if m.det(d) == 1 {
                        out.push(m);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `|SL₂(Z_d)| = d³ ∏_{p | d} (1 − p⁻²)`
pub fn sl2_order(d: usize) -> usize {
    let mut order = d * d * d;
    let mut n = d;
    let mut p = 2;
    while n > 1 {
        if n % p == 0 {
            order = order / (p * p) * (p * p - 1);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    order
}

/// Labels grouped by `r = gcd(a, b, d)`.
pub fn pauli_orbits(d: usize) -> Result<BTreeMap<usize, Vec<PauliLabel>>> {
    if d < 2 {
        return Err(DesignError::InvalidDimension(d));
    }
    let mut out: BTreeMap<usize, Vec<PauliLabel>> =
        divisors(d).into_iter().map(|r| (r, Vec::new())).collect();
    for p in PauliLabel::all(d) {
        out.get_mut(&p.orbit(d)).expect("orbit is a divisor").push(p);
    }
    Ok(out)
}

fn root_of_unity(d: usize, k: usize) -> C64 {
    cis(2.0 * PI * (k % d) as f64 / d as f64)
}

/// `X_d |j⟩ = |j+1⟩`
pub fn shift(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// `Z_d |j⟩ = ω^j |j⟩`
pub fn clock(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i == j { root_of_unity(d, j) } else { c(0.0, 0.0) })
}

/// `X_d^a Z_d^b`
pub fn pauli_unitary(d: usize, label: PauliLabel) -> Result<CMatrix> {
    if d < 2 {
        return Err(DesignError::InvalidDimension(d));
    }
    let (a, b) = (label.a % d, label.b % d);
    // column j of Z^b is ω^{bj}|j⟩, then X^a moves it to row j+a
    Ok(CMatrix::from_fn(d, d, |i, j| {
        if i == (j + a) % d {
            root_of_unity(d, b * j)
        } else {
            c(0.0, 0.0)
        }
    }))
}

/// Discrete Fourier transform `F[j,k] = ω^{jk}/√d`.
pub fn fourier_gate(d: usize) -> Result<CMatrix> {
    if d < 2 {
        return Err(DesignError::InvalidDimension(d));
    }
    let s = 1.0 / (d as f64).sqrt();
    Ok(CMatrix::from_fn(d, d, |j, k| root_of_unity(d, j * k) * s))
}

/// Diagonal quadratic phase: `ω^{j(j+1)/2}` for odd `d`, `ζ^{j²}` with
/// `ζ = e^{iπ/d}` for even `d`.
pub fn quadratic_phase_gate(d: usize) -> Result<CMatrix> {
    if d < 2 {
        return Err(DesignError::InvalidDimension(d));
    }
    let phase = |j: usize| -> C64 {
        if d % 2 == 1 {
            root_of_unity(d, j * (j + 1) / 2)
        } else {
            cis(PI * ((j * j) % (2 * d)) as f64 / d as f64)
        }
    };
    Ok(CMatrix::from_fn(d, d, |i, j| if i == j { phase(j) } else { c(0.0, 0.0) }))
}

/// How group elements are identified during closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseMode {
    /// `U` and `e^{iα}U` are the same element.
    ModPhase,
    /// Elements are compared as matrices.
    Exact,
}

/// Deduplicated finite set of unitaries closed under multiplication.
#[derive(Clone, Debug)]
pub struct FiniteUnitaryGroup {
    dim: usize,
    mode: PhaseMode,
    elements: Vec<CMatrix>,
    index: HashMap<PhaseKey, Vec<usize>>,
    generators: Vec<CMatrix>,
    parents: Vec<Option<(usize, usize)>>,
    inverses: Vec<usize>,
}

fn lookup(
    index: &HashMap<PhaseKey, Vec<usize>>,
    elements: &[CMatrix],
    key: &PhaseKey,
    m: &CMatrix,
) -> Option<usize> {
    index
        .get(key)?
        .iter()
        .copied()
        .find(|&i| max_abs_diff(&elements[i], m) <= CONFIRM_TOL)
}

fn keyed(m: &CMatrix, mode: PhaseMode) -> Result<(CMatrix, PhaseKey)> {
    match mode {
        PhaseMode::ModPhase => m.canonical_phase(),
        PhaseMode::Exact => Ok((m.clone(), exact_key(m))),
    }
}

/// Breadth-first closure of `generators` modulo global phase.
pub fn generate_group(
    dim: usize,
    generators: &[CMatrix],
    max_size: usize,
) -> Result<FiniteUnitaryGroup> {
    generate_group_with(dim, generators, max_size, PhaseMode::ModPhase, true)
}

/// Closure with an explicit identification rule. `require_unitary = false`
/// admits non-unitary matrix representations of finite groups (inverses are
/// then resolved by matrix inversion).
pub fn generate_group_with(
    dim: usize,
    generators: &[CMatrix],
    max_size: usize,
    mode: PhaseMode,
    require_unitary: bool,
) -> Result<FiniteUnitaryGroup> {
    if max_size == 0 {
        return Err(DesignError::InvalidArgument("max_size must be at least 1".into()));
    }
    for (k, g) in generators.iter().enumerate() {
        if g.shape() != (dim, dim) {
            return Err(DesignError::InvalidInput(format!(
                "generator {k} has shape {:?}, expected {dim}×{dim}",
                g.shape()
            )));
        }
        if require_unitary {
            let err = unitarity_error(g);
            if err > UNITARY_TOL {
                return Err(DesignError::ContractViolation(format!(
                    "generator {k} is not unitary (error {err:e})"
                )));
            }
        }
    }
    let mut elements = Vec::new();
    let mut parents = Vec::new();
    let mut index: HashMap<PhaseKey, Vec<usize>> = HashMap::new();
    let (id, key) = keyed(&identity(dim), mode)?;
    index.entry(key).or_default().push(0);
    elements.push(id);
    parents.push(None);
    let mut queue = VecDeque::from([0usize]);
    while let Some(e) = queue.pop_front() {
        for (gi, g) in generators.iter().enumerate() {
            let prod = g * &elements[e];
            let (canon, key) = keyed(&prod, mode)?;
            if lookup(&index, &elements, &key, &canon).is_some() {
                continue;
            }
            if elements.len() >= max_size {
                return Err(DesignError::GroupOverflow { limit: max_size });
            }
            let id = elements.len();
            index.entry(key).or_default().push(id);
            elements.push(canon);
            parents.push(Some((e, gi)));
            queue.push_back(id);
        }
    }
    let mut group = FiniteUnitaryGroup {
        dim,
        mode,
        elements,
        index,
        generators: generators.to_vec(),
        parents,
        inverses: Vec::new(),
    };
    group.resolve_inverses(require_unitary)?;
    Ok(group)
}

impl FiniteUnitaryGroup {
    fn resolve_inverses(&mut self, unitary: bool) -> Result<()> {
        let mut inverses = Vec::with_capacity(self.elements.len());
        for (i, g) in self.elements.iter().enumerate() {
            let inv = if unitary {
                g.adjoint()
            } else {
                g.clone().try_inverse().ok_or_else(|| {
                    DesignError::ConstructionFailure(format!("element {i} is singular"))
                })?
            };
            let j = self.find(&inv)?.ok_or_else(|| {
                DesignError::ConstructionFailure(format!("inverse of element {i} not in the set"))
            })?;
            inverses.push(j);
        }
        self.inverses = inverses;
        Ok(())
    }

    /// Re-expresses every element as `T g T⁻¹`, keeping words and ordering.
    pub fn conjugated(&self, t: &CMatrix, t_inv: &CMatrix) -> Result<FiniteUnitaryGroup> {
        let mut index: HashMap<PhaseKey, Vec<usize>> = HashMap::new();
        let mut elements = Vec::with_capacity(self.elements.len());
        for (i, g) in self.elements.iter().enumerate() {
            let (canon, key) = keyed(&(t * g * t_inv), self.mode)?;
            index.entry(key).or_default().push(i);
            elements.push(canon);
        }
        let mut group = FiniteUnitaryGroup {
            dim: self.dim,
            mode: self.mode,
            elements,
            index,
            generators: self.generators.iter().map(|g| t * g * t_inv).collect(),
            parents: self.parents.clone(),
            inverses: Vec::new(),
        };
        group.resolve_inverses(true)?;
        Ok(group)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn mode(&self) -> PhaseMode {
        self.mode
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// Index of the element inverse to `i`.
    pub fn inverse(&self, i: usize) -> usize {
        self.inverses[i]
    }

    /// Index of `m` (up to phase in `ModPhase` mode), if present.
    pub fn find(&self, m: &CMatrix) -> Result<Option<usize>> {
        let (canon, key) = keyed(m, self.mode)?;
        Ok(lookup(&self.index, &self.elements, &key, &canon))
    }

    /// Index of the product `elements[i] · elements[j]`.
    pub fn product(&self, i: usize, j: usize) -> Result<usize> {
        let m = &self.elements[i] * &self.elements[j];
        self.find(&m)?.ok_or_else(|| {
            DesignError::ContractViolation(format!("product of {i} and {j} left the group"))
        })
    }

    /// Generator indices `[g₁, g₂, …]` with `element = … g₂ g₁` (up to phase).
    pub fn word(&self, i: usize) -> Vec<usize> {
        let mut word = Vec::new();
        let mut cur = i;
        while let Some((parent, g)) = self.parents[cur] {
            word.push(g);
            cur = parent;
        }
        word.reverse();
        word
    }

    pub fn random_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.elements.len())
    }

    /// Checks closure on `pairs` random products; returns the first failure.
    pub fn spot_check_closure<R: Rng + ?Sized>(&self, pairs: usize, rng: &mut R) -> Result<()> {
        for _ in 0..pairs {
            let i = self.random_index(rng);
            let j = self.random_index(rng);
            self.product(i, j)?;
        }
        Ok(())
    }

    /// Conjugacy classes, found by closing each element under conjugation by
    /// the generators. Returned as a class id per element.
    pub fn conjugacy_classes(&self) -> Result<Vec<usize>> {
        let n = self.elements.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let gens: Vec<(CMatrix, CMatrix)> = self
            .generators
            .iter()
            .map(|g| {
                let inv = if self.mode == PhaseMode::ModPhase || unitarity_error(g) <= UNITARY_TOL {
                    g.adjoint()
                } else {
                    g.clone().try_inverse().unwrap_or_else(|| g.adjoint())
                };
                (g.clone(), inv)
            })
            .collect();
        for i in 0..n {
            for (g, ginv) in &gens {
                let m = g * &self.elements[i] * ginv;
                let j = self.find(&m)?.ok_or_else(|| {
                    DesignError::ContractViolation("conjugate left the group".into())
                })?;
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let mut ids: HashMap<usize, usize> = HashMap::new();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let r = root(&mut parent, i);
            let next = ids.len();
            out.push(*ids.entry(r).or_insert(next));
        }
        Ok(out)
    }

    pub fn export(&self) -> GroupExport {
        GroupExport {
            dim: self.dim,
            size: self.elements.len(),
            elements: self.elements.iter().map(export_entries).collect(),
        }
    }
}

/// JSON form of a group or state set: entries as `[re, im, …]` in row-major
/// order, rounded to 1e-6.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupExport {
    pub dim: usize,
    pub size: usize,
    pub elements: Vec<Vec<f64>>,
}

pub fn pauli_group(d: usize) -> Result<FiniteUnitaryGroup> {
    generate_group(d, &[shift(d), clock(d)], DEFAULT_MAX_GROUP)
}

pub fn cyclic_group(d: usize) -> Result<FiniteUnitaryGroup> {
    if d < 2 {
        return Err(DesignError::InvalidDimension(d));
    }
    generate_group(d, &[shift(d)], DEFAULT_MAX_GROUP)
}

/// Generators `[F, L, X, Z]` of the Clifford group.
pub fn clifford_generators(d: usize) -> Result<Vec<CMatrix>> {
    Ok(vec![fourier_gate(d)?, quadratic_phase_gate(d)?, shift(d), clock(d)])
}

pub fn clifford_group(d: usize) -> Result<FiniteUnitaryGroup> {
    generate_group(d, &clifford_generators(d)?, DEFAULT_MAX_GROUP)
}

/// Pauli label `l` with `m ∝ X^a Z^b`, if any.
pub fn pauli_label_of(d: usize, m: &CMatrix) -> Option<PauliLabel> {
    let a = (0..d).find(|&i| m[(i, 0)].norm() > 1e-9)?;
    let ratio = m[(((1 + a) % d), 1)] / m[(a, 0)];
    let b = (0..d).find(|&b| (root_of_unity(d, b) - ratio).norm() < 1e-9)?;
    let p = PauliLabel { a, b };
    let want = pauli_unitary(d, p).ok()?;
    let scale = m[(a, 0)];
    (max_abs_diff(&want.map(|z| z * scale), m) < 1e-9).then_some(p)
}

/// Exact stabilizer states on `n` qubits.
#[derive(Clone, Debug)]
pub struct StabilizerStateSet {
    pub n: usize,
    pub states: Vec<UnitVector>,
}

impl StabilizerStateSet {
    /// `2ⁿ ∏_{k=1..n} (2^k + 1)`
    pub fn expected_count(n: usize) -> usize {
        (1..=n).fold(1usize << n, |acc, k| acc * ((1usize << k) + 1))
    }

    pub fn export(&self) -> GroupExport {
        let dim = 1usize << self.n;
        GroupExport {
            dim,
            size: self.states.len(),
            elements: self
                .states
                .iter()
                .map(|s| {
                    s.as_vector()
                        .iter()
                        .flat_map(|z| [crate::linalg::round_export(z.re), crate::linalg::round_export(z.im)])
                        .collect()
                })
                .collect(),
        }
    }
}

fn single_qubit_on(n: usize, q: usize, gate: &CMatrix) -> CMatrix {
    let id = identity(2);
    (1..n).fold(if q == 0 { gate.clone() } else { id.clone() }, |acc, k| {
        kron(&acc, if k == q { gate } else { &id })
    })
}

fn cnot(n: usize, control: usize, target: usize) -> CMatrix {
    let dim = 1usize << n;
    let bit = |q: usize| 1usize << (n - 1 - q);
    CMatrix::from_fn(dim, dim, |i, j| {
        let image = if j & bit(control) != 0 { j ^ bit(target) } else { j };
        if i == image {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Orbit of `|0…0⟩` under Hadamard, phase and CNOT gates, modulo phase.
pub fn stabilizer_states(n: usize) -> Result<StabilizerStateSet> {
    if n == 0 {
        return Err(DesignError::InvalidArgument("need at least one qubit".into()));
    }
    if n > 3 {
        return Err(DesignError::ResourceBound(format!(
            "stabilizer enumeration is limited to 3 qubits, got {n}"
        )));
    }
    let h = fourier_gate(2)?;
    let s = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]));
    let mut gates = Vec::new();
    for q in 0..n {
        gates.push(single_qubit_on(n, q, &h));
        gates.push(single_qubit_on(n, q, &s));
    }
    for a in 0..n {
        for b in 0..n {
            if a != b {
                gates.push(cnot(n, a, b));
            }
        }
    }
    let dim = 1usize << n;
    let start = UnitVector::basis(dim, 0).into_vector();
    let mut states: Vec<CVector> = Vec::new();
    let mut index: HashMap<PhaseKey, Vec<usize>> = HashMap::new();
    let (canon, key) = start.canonical_phase()?;
    index.entry(key).or_default().push(0);
    states.push(canon);
    let mut queue = VecDeque::from([0usize]);
    let cap = StabilizerStateSet::expected_count(n) * 2;
    while let Some(i) = queue.pop_front() {
        for g in &gates {
            let (canon, key) = (g * &states[i]).canonical_phase()?;
            let seen = index.get(&key).is_some_and(|bucket| {
                bucket
                    .iter()
                    .any(|&j| states[j].iter().zip(canon.iter()).all(|(x, y)| (x - y).norm() <= CONFIRM_TOL))
            });
            if seen {
                continue;
            }
            if states.len() >= cap {
                return Err(DesignError::GroupOverflow { limit: cap });
            }
            index.entry(key).or_default().push(states.len());
            queue.push_back(states.len());
            states.push(canon);
        }
    }
    let states = states
        .into_iter()
        .map(UnitVector::normalize)
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilizerStateSet { n, states })
}

/// Spin quantum number stored as `2S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Spin(u32);

impl Spin {
    pub fn from_twice(twice: u32) -> Self {
        Spin(twice)
    }

    /// Parses `"1"`, `"3/2"` or `"1.5"`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || DesignError::InvalidArgument(format!("not a spin value: {s}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            match den.trim() {
                "2" => Ok(Spin(num)),
                "1" => Ok(Spin(2 * num)),
                _ => Err(bad()),
            }
        } else {
            let x: f64 = s.trim().parse().map_err(|_| bad())?;
            let twice = 2.0 * x;
            if x < 0.0 || (twice - twice.round()).abs() > 1e-12 {
                return Err(bad());
            }
            Ok(Spin(twice.round() as u32))
        }
    }

    pub fn twice(&self) -> u32 {
        self.0
    }

    pub fn value(&self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.0 as usize + 1
    }

    /// Magnetic quantum number at basis index `k` (ordering `m = S, …, −S`).
    pub fn m_at(&self, k: usize) -> f64 {
        self.value() - k as f64
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Spin matrices in the `|S, m⟩` basis, `m = S, S−1, …, −S`.
#[derive(Clone, Debug)]
pub struct SpinOps {
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
    pub plus: CMatrix,
    pub minus: CMatrix,
}

pub fn su2_spin_ops(spin: Spin) -> SpinOps {
    let d = spin.dim();
    let s = spin.value();
    let mut plus = CMatrix::zeros(d, d);
    for k in 1..d {
        let m = spin.m_at(k);
        plus[(k - 1, k)] = c(((s - m) * (s + m + 1.0)).sqrt(), 0.0);
    }
    let minus = plus.adjoint();
    let z = CMatrix::from_fn(d, d, |i, j| if i == j { c(spin.m_at(i), 0.0) } else { c(0.0, 0.0) });
    let x = (&plus + &minus).scale(0.5);
    let y = (&plus - &minus) * c(0.0, -0.5);
    SpinOps { x, y, z, plus, minus }
}

/// The two published generator sets of the binary icosahedral group
/// `SL(2, F₅)` in a two-dimensional non-unitary representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sl2f5Generators {
    /// `{g₁, g₂, −I}` with relation words `s = g₁g₂³g₁`, `t = g₁²g₂²`.
    First,
    /// `{−I, k₁, k₂, k₃}` with relation words `s = k₂³k₃²`, `t = k₃³`.
    Second,
}

fn w15(k: usize) -> C64 {
    root_of_unity(15, k)
}

fn w15_sum(ks: &[usize]) -> C64 {
    ks.iter().map(|&k| w15(k)).sum()
}

fn mat2(a: C64, b: C64, cc: C64, d: C64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[a, b, cc, d])
}

impl Sl2f5Generators {
    pub fn matrices(&self) -> Vec<CMatrix> {
        let minus_id = identity(2) * c(-1.0, 0.0);
        match self {
            Sl2f5Generators::First => {
                let g1 = mat2(
                    -w15_sum(&[11, 14]),
                    -w15_sum(&[11, 14]),
                    w15(10),
                    -w15_sum(&[1, 4]),
                );
                let g2 = mat2(
                    -w15_sum(&[1, 2, 4, 8]) - w15_sum(&[11, 14]) * 2.0,
                    w15_sum(&[6, 9]),
                    // printed as ω¹¹ − ω¹⁴, which has det ≠ 1; the sum closes to 120
                    w15_sum(&[11, 14]),
                    -w15(5),
                );
                vec![g1, g2, minus_id]
            }
            Sl2f5Generators::Second => {
                let k1 = mat2(
                    -w15_sum(&[11, 14]),
                    w15_sum(&[6, 9]),
                    -w15_sum(&[1, 2, 4, 7, 8, 13]),
                    w15_sum(&[11, 14]),
                );
                let k2 = mat2(w15(10), w15_sum(&[11, 14]), -w15_sum(&[2, 8]), -w15(10));
                let k3 = mat2(c(0.0, 0.0), w15(5), -w15(10), -w15_sum(&[3, 12]));
                vec![minus_id, k1, k2, k3]
            }
        }
    }

    /// The relation pair `(s, t)` satisfying `(st)² = s³ = t⁵`.
    pub fn relation_pair(&self) -> (CMatrix, CMatrix) {
        let g = self.matrices();
        match self {
            Sl2f5Generators::First => {
                let (g1, g2) = (&g[0], &g[1]);
                let s = g1 * g2 * g2 * g2 * g1;
                let t = g1 * g1 * g2 * g2;
                (s, t)
            }
            Sl2f5Generators::Second => {
                let (k2, k3) = (&g[2], &g[3]);
                let s = k2 * k2 * k2 * k3 * k3;
                let t = k3 * k3 * k3;
                (s, t)
            }
        }
    }
}

/// The 120 raw (non-unitary) matrices generated by `set`.
pub fn sl2f5_raw(set: Sl2f5Generators) -> Result<FiniteUnitaryGroup> {
    let raw = generate_group_with(2, &set.matrices(), 1000, PhaseMode::Exact, false)?;
    if raw.len() != 120 {
        return Err(DesignError::ConstructionFailure(format!(
            "closure of the SL(2,F5) generators has {} elements, expected 120",
            raw.len()
        )));
    }
    Ok(raw)
}

/// `P = (1/|G|) Σ g†g` for the raw representation.
pub fn sl2f5_gram(set: Sl2f5Generators) -> Result<CMatrix> {
    let raw = sl2f5_raw(set)?;
    Ok(gram_average(raw.elements()))
}

fn gram_average(elements: &[CMatrix]) -> CMatrix {
    let mut p = CMatrix::zeros(2, 2);
    for g in elements {
        p += g.adjoint() * g;
    }
    p / c(elements.len() as f64, 0.0)
}

/// `SL(2, F₅)` as a 120-element group of 2×2 unitaries (no phase quotient),
/// obtained by conjugating the raw representation with `√P`.
pub fn sl2f5_group() -> Result<FiniteUnitaryGroup> {
    sl2f5_group_from(Sl2f5Generators::Second)
}

pub fn sl2f5_group_from(set: Sl2f5Generators) -> Result<FiniteUnitaryGroup> {
    let raw = sl2f5_raw(set)?;
    let p = gram_average(raw.elements());
    let spec = HermitianSpectrum::new(&p);
    if spec.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(DesignError::ConstructionFailure(
            "averaged Gram matrix is not positive definite".into(),
        ));
    }
    let v = &spec.eigenvectors;
    let diag = |f: &dyn Fn(f64) -> f64| {
        CMatrix::from_diagonal(&CVector::from_iterator(
            2,
            spec.eigenvalues.iter().map(|&l| c(f(l), 0.0)),
        ))
    };
    let sqrt_p = v * diag(&|l| l.sqrt()) * v.adjoint();
    let inv_sqrt_p = v * diag(&|l| 1.0 / l.sqrt()) * v.adjoint();
    let group = raw.conjugated(&sqrt_p, &inv_sqrt_p)?;
    let worst = group
        .elements()
        .iter()
        .map(unitarity_error)
        .fold(0.0, f64::max);
    if worst > UNITARY_TOL {
        return Err(DesignError::ConstructionFailure(format!(
            "unitarized elements deviate from unitarity by {worst:e}"
        )));
    }
    Ok(group)
}
