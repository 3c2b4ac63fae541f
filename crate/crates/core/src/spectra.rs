//! Value types for truncated quantum states.
//!
//! Matrices are dense and double precision. Bipartite operators act on
//! `A ⊗ B` with the composite index `i * dim_b + j` for `|i⟩_A |j⟩_B`.
//! All types are immutable after construction.

use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::linalg::{self, c, CMatrix, CVector};
use crate::{Error, Result};

/// Construction tolerance for Hermiticity, positivity and trace.
pub const STATE_TOL: f64 = 1e-12;
/// Tolerance on ensemble weight sums.
pub const WEIGHT_TOL: f64 = 1e-10;

/// Which side of a bipartition to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Non-increasing sequence of non-negative reals plus the mass declared to lie
/// beyond the truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumJson")]
pub struct Spectrum {
    values: Vec<f64>,
    tail_mass: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpectrumJson {
    Bare(Vec<f64>),
    Full {
        values: Vec<f64>,
        #[serde(default)]
        tail_mass: f64,
    },
}

impl TryFrom<SpectrumJson> for Spectrum {
    type Error = Error;

    fn try_from(j: SpectrumJson) -> Result<Self> {
        match j {
            SpectrumJson::Bare(values) => Spectrum::new(values, 0.0),
            SpectrumJson::Full { values, tail_mass } => Spectrum::new(values, tail_mass),
        }
    }
}

impl Spectrum {
    /// Validates ordering and signs. Entries in `[-1e-12, 0)` are clamped to zero.
    pub fn new(mut values: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if !(tail_mass >= 0.0) || !tail_mass.is_finite() {
            return Err(Error::InvalidInput(format!("tail_mass must be finite and >= 0, got {tail_mass}")));
        }
        for v in values.iter_mut() {
            if !v.is_finite() || *v < -STATE_TOL {
                return Err(Error::InvalidInput(format!("spectrum entry {v} is negative or not finite")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        if let Some(w) = values.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(format!(
                "spectrum not non-increasing at index {w}: {} < {}",
                values[w],
                values[w + 1]
            )));
        }
        Ok(Self { values, tail_mass })
    }

    /// Sorts into non-increasing order first.
    pub fn from_unsorted(mut values: Vec<f64>, tail_mass: f64) -> Result<Self> {
        values.sort_by(|a, b| b.total_cmp(a));
        Self::new(values, tail_mass)
    }

    /// A state spectrum: total mass must be `1 ± 1e-12`.
    pub fn normalized(values: Vec<f64>, tail_mass: f64) -> Result<Self> {
        let s = Self::from_unsorted(values, tail_mass)?;
        if !s.is_normalized() {
            return Err(Error::InvalidInput(format!("spectrum total {} is not 1", s.total())));
        }
        Ok(s)
    }

    /// Spectrum of a Hermitian PSD matrix.
    pub fn of_matrix(m: &CMatrix) -> Result<Self> {
        Self::new(linalg::eigvalsh(m), 0.0)
    }

    pub fn pure() -> Self {
        Self { values: vec![1.0], tail_mass: 0.0 }
    }

    pub fn uniform(d: usize) -> Self {
        Self { values: vec![1.0 / d as f64; d], tail_mass: 0.0 }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() + self.tail_mass
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= STATE_TOL
    }

    /// Drops trailing zeros.
    pub fn trimmed(&self) -> Self {
        let end = self.values.iter().rposition(|&v| v > 0.0).map_or(0, |i| i + 1);
        Self { values: self.values[..end].to_vec(), tail_mass: self.tail_mass }
    }
}

/// Density operator on `A ⊗ B`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    matrix: CMatrix,
}

impl BipartiteState {
    /// Symmetrizes and validates Hermiticity, positivity and unit trace.
    pub fn new(dim_a: usize, dim_b: usize, matrix: CMatrix) -> Result<Self> {
        let d = dim_a * dim_b;
        if dim_a == 0 || dim_b == 0 || matrix.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "declared {dim_a}x{dim_b} needs a {d}x{d} matrix, got {:?}",
                matrix.shape()
            )));
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let matrix = linalg::hermitian_part(&matrix);
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = linalg::eigvalsh(&matrix).last().copied().unwrap_or(0.0);
        if min_eig < -STATE_TOL {
            return Err(Error::InvalidState(format!("not PSD (min eigenvalue {min_eig:e})")));
        }
        Ok(Self { dim_a, dim_b, matrix })
    }

    /// Divides by the trace before validating.
    pub fn from_unnormalized(dim_a: usize, dim_b: usize, matrix: CMatrix) -> Result<Self> {
        let tr = linalg::trace(&matrix).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        Self::new(dim_a, dim_b, linalg::hermitian_part(&matrix).unscale(tr))
    }

    /// `|a⟩⟨a| ⊗ |b⟩⟨b|` for computational basis labels.
    pub fn product_basis(dim_a: usize, dim_b: usize, a: usize, b: usize) -> Result<Self> {
        let mut m = CMatrix::zeros(dim_a * dim_b, dim_a * dim_b);
        let k = a * dim_b + b;
        if a >= dim_a || b >= dim_b {
            return Err(Error::DimensionMismatch(format!("basis label ({a},{b}) outside {dim_a}x{dim_b}")));
        }
        m[(k, k)] = linalg::ONE;
        Self::new(dim_a, dim_b, m)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn reduced(&self, keep: Subsystem) -> CMatrix {
        partial_trace_matrix(&self.matrix, self.dim_a, self.dim_b, keep)
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::of_matrix(&self.matrix).expect("validated PSD state")
    }

    pub fn local_spectrum(&self, keep: Subsystem) -> Spectrum {
        Spectrum::of_matrix(&self.reduced(keep)).expect("reduced state of a PSD state is PSD")
    }

    /// `ρ ⊗ σ` regrouped as `(A₁A₂) : (B₁B₂)`.
    pub fn tensor(&self, other: &Self) -> Self {
        let (a1, b1, a2, b2) = (self.dim_a, self.dim_b, other.dim_a, other.dim_b);
        let (da, db) = (a1 * a2, b1 * b2);
        let idx = |i1: usize, i2: usize, j1: usize, j2: usize| (i1 * a2 + i2) * db + j1 * b2 + j2;
        let mut m = CMatrix::zeros(da * db, da * db);
        for (r1, c1) in (0..a1 * b1).flat_map(|r| (0..a1 * b1).map(move |c| (r, c))) {
            let x = self.matrix[(r1, c1)];
            if x == linalg::ZERO {
                continue;
            }
            let (ri1, rj1, ci1, cj1) = (r1 / b1, r1 % b1, c1 / b1, c1 % b1);
            for (r2, c2) in (0..a2 * b2).flat_map(|r| (0..a2 * b2).map(move |c| (r, c))) {
                let (ri2, rj2, ci2, cj2) = (r2 / b2, r2 % b2, c2 / b2, c2 % b2);
                m[(idx(ri1, ri2, rj1, rj2), idx(ci1, ci2, cj1, cj2))] = x * other.matrix[(r2, c2)];
            }
        }
        Self { dim_a: da, dim_b: db, matrix: m }
    }

    /// `ρ^{⊗n}` regrouped as `(A…A) : (B…B)`.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("tensor power needs n >= 1".into()));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self);
        }
        Ok(acc)
    }
}

/// `Tr_B` or `Tr_A` of a `(dim_a·dim_b)²` matrix.
pub fn partial_trace_matrix(m: &CMatrix, dim_a: usize, dim_b: usize, keep: Subsystem) -> CMatrix {
    match keep {
        Subsystem::A => CMatrix::from_fn(dim_a, dim_a, |i, k| {
            (0..dim_b).map(|j| m[(i * dim_b + j, k * dim_b + j)]).sum()
        }),
        Subsystem::B => CMatrix::from_fn(dim_b, dim_b, |j, l| {
            (0..dim_a).map(|i| m[(i * dim_b + j, i * dim_b + l)]).sum()
        }),
    }
}

/// Reduced state on the kept side.
pub fn partial_trace(state: &BipartiteState, keep: Subsystem) -> CMatrix {
    state.reduced(keep)
}

/// Unit vector in `A ⊗ B` stored as its coefficient matrix, with its Schmidt data.
#[derive(Debug, Clone, PartialEq)]
pub struct PureBipartite {
    amplitudes: CMatrix,
    schmidt: Spectrum,
    left: CMatrix,
    right: CMatrix,
}

impl PureBipartite {
    /// Same as [`schmidt_decompose`].
    pub fn new(amplitudes: CMatrix) -> Result<Self> {
        schmidt_decompose(amplitudes)
    }

    pub fn product_basis(dim_a: usize, dim_b: usize, a: usize, b: usize) -> Result<Self> {
        if a >= dim_a || b >= dim_b {
            return Err(Error::DimensionMismatch(format!("basis label ({a},{b}) outside {dim_a}x{dim_b}")));
        }
        let mut m = CMatrix::zeros(dim_a, dim_b);
        m[(a, b)] = linalg::ONE;
        schmidt_decompose(m)
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn ebit() -> Self {
        Self::maximally_entangled(2)
    }

    pub fn maximally_entangled(d: usize) -> Self {
        schmidt_decompose(CMatrix::identity(d, d).unscale((d as f64).sqrt())).expect("nonzero")
    }

    /// `Σ √p_i |ii⟩` for a probability vector.
    pub fn from_schmidt_coefficients(p: &[f64]) -> Result<Self> {
        let d = p.len();
        if p.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidInput("negative Schmidt weight".into()));
        }
        schmidt_decompose(CMatrix::from_fn(d, d, |i, j| if i == j { c(p[i].sqrt(), 0.0) } else { linalg::ZERO }))
    }

    pub fn amplitudes(&self) -> &CMatrix {
        &self.amplitudes
    }

    /// Squared Schmidt coefficients.
    pub fn schmidt(&self) -> &Spectrum {
        &self.schmidt
    }

    /// Left Schmidt vectors (columns), one per Schmidt coefficient.
    pub fn left_vectors(&self) -> &CMatrix {
        &self.left
    }

    /// Conjugate-transposed right Schmidt vectors (rows).
    pub fn right_vectors_adjoint(&self) -> &CMatrix {
        &self.right
    }

    pub fn dim_a(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn dim_b(&self) -> usize {
        self.amplitudes.ncols()
    }

    pub fn vector(&self) -> CVector {
        linalg::vec_row_major(&self.amplitudes)
    }

    pub fn reduced_a(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn reduced_b(&self) -> CMatrix {
        (self.amplitudes.adjoint() * &self.amplitudes).transpose()
    }

    /// `S(ψ_A)` in bits.
    pub fn entanglement_entropy(&self) -> f64 {
        entropy::shannon_bits(self.schmidt.values())
    }

    pub fn to_state(&self) -> BipartiteState {
        let v = self.vector();
        BipartiteState {
            dim_a: self.dim_a(),
            dim_b: self.dim_b(),
            matrix: linalg::hermitian_part(&linalg::projector(&v)),
        }
    }

    /// `ψ ⊗ φ` regrouped as `(A₁A₂) : (B₁B₂)`.
    pub fn tensor(&self, other: &Self) -> Self {
        schmidt_decompose(self.amplitudes.kronecker(&other.amplitudes)).expect("product of unit vectors is nonzero")
    }

    /// Reassembles `U · diag(√p) · V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let s = CMatrix::from_diagonal(&CVector::from_iterator(
            self.schmidt.len(),
            self.schmidt.values().iter().map(|p| c(p.sqrt(), 0.0)),
        ));
        &self.left * s * &self.right
    }
}

/// Singular value decomposition of an amplitude matrix. The input is rescaled to
/// unit Frobenius norm.
pub fn schmidt_decompose(amplitudes: CMatrix) -> Result<PureBipartite> {
    let (da, db) = amplitudes.shape();
    if da == 0 || db == 0 {
        return Err(Error::DimensionMismatch("empty amplitude matrix".into()));
    }
    let norm = linalg::frobenius(&amplitudes);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidState("zero amplitude matrix".into()));
    }
    let amplitudes = amplitudes.unscale(norm);
    let linalg::Svd { u: left, sigma, v_adjoint: right } = linalg::svd(&amplitudes);
    let squares: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    let schmidt = Spectrum::new(squares, 0.0)?;
    let psi = PureBipartite { amplitudes, schmidt, left, right };
    let err = linalg::frobenius(&(psi.reconstruct() - &psi.amplitudes));
    if err > 1e-10 {
        return Err(Error::Invariant(format!("Schmidt reconstruction error {err:e}")));
    }
    Ok(psi)
}

/// `½‖x − y‖₁`.
pub fn trace_distance(x: &CMatrix, y: &CMatrix) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", x.shape(), y.shape())));
    }
    Ok(0.5 * linalg::singular_values(&(x - y)).iter().sum::<f64>())
}

/// Member of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum Member {
    Pure(PureBipartite),
    Mixed(BipartiteState),
}

impl Member {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Member::Pure(p) => (p.dim_a(), p.dim_b()),
            Member::Mixed(s) => (s.dim_a(), s.dim_b()),
        }
    }

    pub fn density(&self) -> CMatrix {
        match self {
            Member::Pure(p) => p.to_state().matrix,
            Member::Mixed(s) => s.matrix.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&PureBipartite> {
        match self {
            Member::Pure(p) => Some(p),
            Member::Mixed(_) => None,
        }
    }

    pub fn local_spectrum(&self, keep: Subsystem) -> Spectrum {
        match self {
            Member::Pure(p) => p.schmidt.clone(),
            Member::Mixed(s) => s.local_spectrum(keep),
        }
    }
}

/// Finite weighted family `{p(x), member_x}` on a common `dim_a × dim_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    weights: Vec<f64>,
    members: Vec<Member>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, members: Vec<Member>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidInput("empty ensemble".into()));
        }
        if weights.len() != members.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} members",
                weights.len(),
                members.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("ensemble weights must be finite and >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidInput(format!("ensemble weights sum to {total}")));
        }
        let dims = members[0].dims();
        if let Some(bad) = members.iter().find(|m| m.dims() != dims) {
            return Err(Error::DimensionMismatch(format!("member dims {:?} vs {:?}", bad.dims(), dims)));
        }
        Ok(Self { weights, members })
    }

    pub fn pure(weights: Vec<f64>, members: Vec<PureBipartite>) -> Result<Self> {
        Self::new(weights, members.into_iter().map(Member::Pure).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.members[0].dims()
    }

    pub fn is_pure(&self) -> bool {
        self.members.iter().all(|m| matches!(m, Member::Pure(_)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Member)> {
        self.weights.iter().copied().zip(self.members.iter())
    }
}

/// `Σ p(x) ρ_x`, renormalized by the weight sum.
pub fn ensemble_average(e: &Ensemble) -> Result<BipartiteState> {
    let (da, db) = e.dims();
    let total: f64 = e.weights.iter().sum();
    let mut acc = CMatrix::zeros(da * db, da * db);
    for (w, m) in e.iter() {
        if w > 0.0 {
            acc += m.density().scale(w / total);
        }
    }
    BipartiteState::new(da, db, acc)
}

/// Row-major nested arrays of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<[f64; 2]>>);

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        MatrixJson((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
    }
}

impl TryFrom<&MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        let rows = j.0.len();
        let cols = j.0.first().map_or(0, |r| r.len());
        if rows == 0 || cols == 0 || j.0.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged or empty matrix".into()));
        }
        Ok(CMatrix::from_fn(rows, cols, |r, col| c(j.0[r][col][0], j.0[r][col][1])))
    }
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    dim_a: usize,
    dim_b: usize,
    matrix: MatrixJson,
}

impl Serialize for BipartiteState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateJson { dim_a: self.dim_a, dim_b: self.dim_b, matrix: (&self.matrix).into() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BipartiteState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = StateJson::deserialize(d)?;
        let m = CMatrix::try_from(&j.matrix).map_err(serde::de::Error::custom)?;
        BipartiteState::new(j.dim_a, j.dim_b, m).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct PureJson {
    amplitudes: MatrixJson,
}

impl Serialize for PureBipartite {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PureJson { amplitudes: (&self.amplitudes).into() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureBipartite {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PureJson::deserialize(d)?;
        let m = CMatrix::try_from(&j.amplitudes).map_err(serde::de::Error::custom)?;
        schmidt_decompose(m).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize)]
struct EnsembleMemberJson<'a> {
    weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pure: Option<&'a PureBipartite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<&'a BipartiteState>,
}

impl Serialize for Ensemble {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let items: Vec<EnsembleMemberJson<'_>> = self
            .iter()
            .map(|(weight, m)| match m {
                Member::Pure(p) => EnsembleMemberJson { weight, pure: Some(p), state: None },
                Member::Mixed(st) => EnsembleMemberJson { weight, pure: None, state: Some(st) },
            })
            .collect();
        items.serialize(s)
    }
}
