//! Majorization tools for separable (product-Kraus) operations on pure states.
//!
//! A branch `L ⊗ M` maps the amplitude matrix `Ψ` of `|ψ⟩ = Σ Ψ_ij |i⟩|j⟩` to
//! `L Ψ Mᵀ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::entropy::{shannon_bits, TailSumTable};
use crate::linalg::{self, CMatrix};
use crate::rng;
use crate::sampling;
use crate::spectra::{BipartiteState, Ensemble, Member, MatrixJson, PureBipartite, Spectrum, Subsystem};
use crate::{Error, Result};

/// Completeness slack for a valid instrument.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Branches within one outcome are merged as a pure state above this fidelity.
pub const PURE_FIDELITY: f64 = 1.0 - 1e-10;
/// Outcomes with smaller probability are dropped.
pub const DROP_PROBABILITY: f64 = 1e-14;
const MARGIN_TOL: f64 = 1e-10;
const ENTROPY_TOL: f64 = 1e-9;

#[derive(Serialize, Deserialize)]
struct RawPair {
    l: MatrixJson,
    m: MatrixJson,
}

/// Finite family of product Kraus operators `{L_k ⊗ M_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductKrausInstrument {
    pairs: Vec<(CMatrix, CMatrix)>,
    completeness_defect: f64,
}

/// `R = Σ_k L_k†L_k ⊗ M_k†M_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ROperator {
    pub matrix: CMatrix,
    pub operator_norm: f64,
}

impl ProductKrausInstrument {
    /// All `L_k` must share one shape and all `M_k` another. The completeness
    /// defect is recorded, not enforced; see [`Self::validate`].
    pub fn new(pairs: Vec<(CMatrix, CMatrix)>) -> Result<Self> {
        let Some((l0, m0)) = pairs.first() else {
            return Err(Error::InvalidInput("instrument needs at least one Kraus pair".into()));
        };
        let (ls, ms) = (l0.shape(), m0.shape());
        if let Some(k) = pairs.iter().position(|(l, m)| l.shape() != ls || m.shape() != ms) {
            return Err(Error::DimensionMismatch(format!("Kraus pair {k} has inconsistent shapes")));
        }
        let mut inst = Self { pairs, completeness_defect: 0.0 };
        let r = inst.r_operator();
        let id = linalg::identity(r.matrix.nrows());
        inst.completeness_defect = linalg::hermitian_operator_norm(&(&r.matrix - id));
        Ok(inst)
    }

    /// The single pair `𝟙 ⊗ 𝟙`.
    pub fn identity(da: usize, db: usize) -> Self {
        Self::new(vec![(linalg::identity(da), linalg::identity(db))]).expect("non-empty")
    }

    /// Local projective measurement in Alice's computational basis.
    pub fn local_basis_measurement_a(da: usize, db: usize) -> Self {
        let pairs = (0..da)
            .map(|i| {
                let mut p = CMatrix::zeros(da, da);
                p[(i, i)] = linalg::ONE;
                (p, linalg::identity(db))
            })
            .collect();
        Self::new(pairs).expect("non-empty")
    }

    pub fn pairs(&self) -> &[(CMatrix, CMatrix)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn completeness_defect(&self) -> f64 {
        self.completeness_defect
    }

    /// Input dimensions `(d_A, d_B)`.
    pub fn input_dims(&self) -> (usize, usize) {
        (self.pairs[0].0.ncols(), self.pairs[0].1.ncols())
    }

    /// Output dimensions `(d_A′, d_B′)`.
    pub fn output_dims(&self) -> (usize, usize) {
        (self.pairs[0].0.nrows(), self.pairs[0].1.nrows())
    }

    pub fn r_operator(&self) -> ROperator {
        let (da, db) = self.input_dims();
        let mut r = CMatrix::zeros(da * db, da * db);
        for (l, m) in &self.pairs {
            r += linalg::kron(&(l.adjoint() * l), &(m.adjoint() * m));
        }
        let operator_norm = linalg::eigvalsh(&r)[0];
        ROperator { matrix: r, operator_norm }
    }

    pub fn validate(&self) -> Result<()> {
        if self.completeness_defect > COMPLETENESS_TOL {
            return Err(Error::InvalidInput(format!(
                "instrument completeness defect {} exceeds {COMPLETENESS_TOL}",
                self.completeness_defect
            )));
        }
        Ok(())
    }
}

impl Serialize for ProductKrausInstrument {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<RawPair> = self.pairs.iter().map(|(l, m)| RawPair { l: l.into(), m: m.into() }).collect();
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProductKrausInstrument {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<RawPair>::deserialize(d)?;
        let pairs = raw
            .into_iter()
            .map(|p| Ok((CMatrix::try_from(&p.l)?, CMatrix::try_from(&p.m)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Self::new(pairs).map_err(serde::de::Error::custom)
    }
}

/// Sum of all but the `n` largest entries of a non-increasing list.
fn tail_sum(desc: &[f64], n: usize) -> f64 {
    desc.iter().skip(n).sum()
}

fn check_orthonormal(v: &CMatrix) -> Result<()> {
    let g = v.adjoint() * v - linalg::identity(v.ncols());
    let worst = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if worst > 1e-10 {
        return Err(Error::InvalidInput(format!("vectors are not orthonormal (defect {worst:.3e})")));
    }
    Ok(())
}

/// `Σ_{n<N} λ_n(m) − Σ_n ⟨v_n|m|v_n⟩` for the columns `v_n` of `vectors`.
pub fn schur_horn_margin(m: &CMatrix, vectors: &CMatrix) -> Result<f64> {
    if !m.is_square() || vectors.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix {:?} vs vectors {:?}",
            m.shape(),
            vectors.shape()
        )));
    }
    check_orthonormal(vectors)?;
    let eig = linalg::eigvalsh(m);
    let top: f64 = eig.iter().take(vectors.ncols()).sum();
    let diag: f64 = (vectors.adjoint() * m * vectors).diagonal().iter().map(|z| z.re).sum();
    Ok(top - diag)
}

/// Whether the `N` largest eigenvalues dominate the compression of `m` onto
/// any `N` orthonormal vectors.
pub fn schur_horn_check(m: &CMatrix, vectors: &CMatrix) -> Result<bool> {
    Ok(schur_horn_margin(m, vectors)? >= -MARGIN_TOL)
}

/// Both sides of `χ̃_N[A K B B† K A†] ≤ Tr[A K_N B B† K_N A†]`, where `K_N`
/// removes the top-`N` eigenspace of `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorInequalitySides {
    pub left: f64,
    pub right: f64,
    /// `Tr[A K B B† K A†]`, which scales the tolerance.
    pub left_trace: f64,
}

impl OperatorInequalitySides {
    pub fn margin(&self) -> f64 {
        self.right - self.left
    }

    pub fn holds(&self) -> bool {
        self.margin() >= -MARGIN_TOL * (self.left_trace + 1.0)
    }
}

pub fn operator_inequality_sides(a: &CMatrix, b: &CMatrix, k: &CMatrix, n: usize) -> Result<OperatorInequalitySides> {
    let d = k.nrows();
    if !k.is_square() || a.ncols() != d || b.nrows() != d {
        return Err(Error::DimensionMismatch(format!(
            "A {:?}, K {:?}, B {:?}",
            a.shape(),
            k.shape(),
            b.shape()
        )));
    }
    if linalg::hermiticity_defect(k) > 1e-10 * (1.0 + linalg::frobenius(k)) {
        return Err(Error::InvalidInput("K must be Hermitian".into()));
    }
    let (vals, vecs) = linalg::eigh(k);
    let scale = vals.first().copied().unwrap_or(0.0).abs().max(1.0);
    if vals.last().is_some_and(|&v| v < -1e-10 * scale) {
        return Err(Error::InvalidInput("K must be positive semidefinite".into()));
    }
    let mut k_n = k.clone();
    for (i, &val) in vals.iter().enumerate().take(n.min(d)) {
        let v = vecs.column(i);
        k_n -= (v * v.adjoint()).scale(val);
    }
    let bb = b * b.adjoint();
    let lhs = a * k * &bb * k * a.adjoint();
    let rhs = a * &k_n * &bb * &k_n * a.adjoint();
    let lhs_eig = linalg::eigvalsh(&lhs);
    Ok(OperatorInequalitySides {
        left: tail_sum(&lhs_eig, n),
        right: linalg::trace(&rhs).re,
        left_trace: linalg::trace(&lhs).re,
    })
}

pub fn lemma1_inequality_check(a: &CMatrix, b: &CMatrix, k: &CMatrix, n: usize) -> Result<bool> {
    Ok(operator_inequality_sides(a, b, k, n)?.holds())
}

/// Result of applying an instrument to a pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentOutcome {
    pub ensemble: Ensemble,
    /// Outcome label of each ensemble member.
    pub labels: Vec<usize>,
    /// Outcomes dropped because their probability was at most `DROP_PROBABILITY`.
    pub dropped: Vec<(usize, f64)>,
}

/// Applies `inst` to `psi` and coarse-grains branch `k` into outcome `labels[k]`.
/// Outcomes whose branches are all proportional become pure members.
pub fn apply_instrument(inst: &ProductKrausInstrument, psi: &PureBipartite, labels: &[usize]) -> Result<InstrumentOutcome> {
    inst.validate()?;
    if labels.len() != inst.len() {
        return Err(Error::DimensionMismatch(format!("{} labels for {} Kraus pairs", labels.len(), inst.len())));
    }
    if inst.input_dims() != (psi.dim_a(), psi.dim_b()) {
        return Err(Error::DimensionMismatch(format!(
            "instrument acts on {:?}, state is {}x{}",
            inst.input_dims(),
            psi.dim_a(),
            psi.dim_b()
        )));
    }
    let (oa, ob) = inst.output_dims();
    let amp = psi.amplitudes();
    let branches: Vec<CMatrix> = inst.pairs().iter().map(|(l, m)| l * amp * m.transpose()).collect();

    let mut outcome_ids: Vec<usize> = labels.to_vec();
    outcome_ids.sort_unstable();
    outcome_ids.dedup();

    let mut weights = Vec::new();
    let mut members = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for &x in &outcome_ids {
        let group: Vec<&CMatrix> = branches.iter().zip(labels).filter(|(_, &l)| l == x).map(|(b, _)| b).collect();
        let norms: Vec<f64> = group.iter().map(|b| b.norm_squared()).collect();
        let p: f64 = norms.iter().sum();
        if p <= DROP_PROBABILITY {
            dropped.push((x, p));
            continue;
        }
        let live: Vec<(&CMatrix, f64)> = group.iter().copied().zip(norms.iter().copied()).filter(|(_, n)| *n > 0.0).collect();
        let reference = live[0].0;
        let proportional = live.iter().all(|(b, n)| {
            let overlap = reference.dotc(b).norm_sqr();
            overlap / (live[0].1 * n) >= PURE_FIDELITY
        });
        let member = if proportional {
            Member::Pure(PureBipartite::new(reference.clone())?)
        } else {
            let mut rho = CMatrix::zeros(oa * ob, oa * ob);
            for (b, _) in &live {
                rho += linalg::projector(&linalg::vec_row_major(b));
            }
            Member::Mixed(BipartiteState::new(oa, ob, linalg::hermitian_part(&rho.unscale(p)))?)
        };
        weights.push(p);
        members.push(member);
        kept.push(x);
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Invariant(format!("outcome probabilities sum to {total}")));
    }
    // absorb rounding so the ensemble weights sum to 1
    for w in &mut weights {
        *w /= total;
    }
    Ok(InstrumentOutcome { ensemble: Ensemble::new(weights, members)?, labels: kept, dropped })
}

/// `margins[N] = χ̃_N(ψ_A) − Σ_x p(x) χ̃_N(φ_x^A)` for `N = 0..=dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationReport {
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub holds: bool,
}

pub fn majorization_condition_check(psi: &PureBipartite, ensemble: &Ensemble) -> Result<MajorizationReport> {
    if !ensemble.is_pure() {
        return Err(Error::InvalidInput("majorization condition needs pure ensemble members".into()));
    }
    let source = TailSumTable::new(psi.schmidt());
    let targets: Vec<(f64, TailSumTable)> =
        ensemble.iter().map(|(w, m)| (w, TailSumTable::new(&m.local_spectrum(Subsystem::A)))).collect();
    let dim = psi.dim_a().max(ensemble.dims().0);
    let margins: Vec<f64> = (0..=dim)
        .map(|n| source.get(n) - targets.iter().map(|(w, t)| w * t.get(n)).sum::<f64>())
        .collect();
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MajorizationReport { holds: min_margin >= -MARGIN_TOL, margins, min_margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConversionOutcome {
    /// `S(ρ) − Σ p(x) S(ω_x) ≥ −1e-9`.
    Holds { margin: f64 },
    Violated { margin: f64 },
    /// Some χ̃ inequality fails, so nothing is asserted.
    Inconclusive { worst_chi_margin: f64 },
}

impl ConversionOutcome {
    pub fn is_violated(&self) -> bool {
        matches!(self, ConversionOutcome::Violated { .. })
    }
}

/// If `χ̃_N(ρ) ≥ Σ p(x) χ̃_N(ω_x)` for every `N`, checks `S(ρ) ≥ Σ p(x) S(ω_x)`.
pub fn chi_to_entropy_conversion_check(rho: &Spectrum, spectra: &[Spectrum], weights: &[f64]) -> Result<ConversionOutcome> {
    if spectra.len() != weights.len() || spectra.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} spectra for {} weights", spectra.len(), weights.len())));
    }
    if rho.tail_mass() > 0.0 || spectra.iter().any(|s| s.tail_mass() > 0.0) {
        return Err(Error::InvalidInput("conversion check needs fully resolved spectra".into()));
    }
    let source = TailSumTable::new(rho);
    let targets: Vec<TailSumTable> = spectra.iter().map(TailSumTable::new).collect();
    let len = spectra.iter().map(Spectrum::len).chain([rho.len()]).max().unwrap_or(0);
    let worst_chi_margin = (0..=len)
        .map(|n| source.get(n) - targets.iter().zip(weights).map(|(t, w)| w * t.get(n)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if worst_chi_margin < -MARGIN_TOL {
        return Ok(ConversionOutcome::Inconclusive { worst_chi_margin });
    }
    let margin = shannon_bits(rho.values())
        - spectra.iter().zip(weights).map(|(s, w)| w * shannon_bits(s.values())).sum::<f64>();
    Ok(if margin >= -ENTROPY_TOL { ConversionOutcome::Holds { margin } } else { ConversionOutcome::Violated { margin } })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// `S(ψ_A) − Σ p(x) S(φ_x^A)` in bits.
    pub margin: f64,
    pub holds: bool,
}

/// Checks `S(ψ_A) ≥ Σ p(x) S(φ_x^A)` on the outcomes of `inst`, one outcome
/// per branch unless `labels` groups them.
pub fn sep_entropy_monotonicity_check(
    psi: &PureBipartite,
    inst: &ProductKrausInstrument,
    labels: Option<&[usize]>,
) -> Result<MonotonicityReport> {
    let fine: Vec<usize> = (0..inst.len()).collect();
    let out = apply_instrument(inst, psi, labels.unwrap_or(&fine))?;
    if !out.ensemble.is_pure() {
        return Err(Error::InvalidInput("entropy monotonicity needs pure outcomes".into()));
    }
    let after: f64 = out
        .ensemble
        .iter()
        .map(|(w, m)| w * m.as_pure().expect("pure").entanglement_entropy())
        .sum();
    let margin = psi.entanglement_entropy() - after;
    Ok(MonotonicityReport { margin, holds: margin >= -ENTROPY_TOL })
}

/// Aggregate of a randomized sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub trials: u64,
    pub seed: u64,
    pub violations: u64,
    pub min_margin: f64,
    /// First failing trial, by index.
    pub counterexample: Option<serde_json::Value>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Trial {
    margin: f64,
    ok: bool,
    dump: Option<serde_json::Value>,
}

fn run_sweep(name: &str, trials: u64, seed: u64, f: impl Fn(u64) -> Result<Trial> + Sync) -> Result<SweepReport> {
    let results: Vec<Trial> = (0..trials).into_par_iter().map(&f).collect::<Result<_>>()?;
    let mut report = SweepReport {
        name: name.to_string(),
        trials,
        seed,
        violations: 0,
        min_margin: f64::INFINITY,
        counterexample: None,
    };
    for (i, t) in results.into_iter().enumerate() {
        report.min_margin = report.min_margin.min(t.margin);
        if !t.ok {
            report.violations += 1;
            if report.counterexample.is_none() {
                report.counterexample = Some(json!({ "trial": i, "margin": t.margin, "data": t.dump }));
            }
        }
    }
    Ok(report)
}

fn check_max_dim(max_dim: usize) -> Result<()> {
    if max_dim < 1 {
        return Err(Error::InvalidInput("max_dim must be >= 1".into()));
    }
    Ok(())
}

fn random_trial_instrument(r: &mut rng::StreamRng, da: usize, db: usize) -> Result<ProductKrausInstrument> {
    use rand::Rng;
    let outcomes = r.random_range(1..=3);
    let rounds = r.random_range(1..=3);
    sampling::random_locc_instrument(r, da, db, outcomes, rounds)
}

fn random_trial_state(r: &mut rng::StreamRng, max_dim: usize) -> Result<PureBipartite> {
    use rand::Rng;
    let da = r.random_range(1..=max_dim);
    let db = r.random_range(1..=max_dim);
    let rank = r.random_range(1..=da.min(db));
    sampling::random_pure_state_with_rank(r, da, db, rank)
}

/// Random pure states through random multi-round LOCC instruments; every
/// outcome is checked against the majorization condition.
pub fn majorization_sweep(trials: u64, max_dim: usize, seed: u64) -> Result<SweepReport> {
    check_max_dim(max_dim)?;
    run_sweep("majorization", trials, seed, |i| {
        let mut r = rng::stream(seed, i);
        let psi = random_trial_state(&mut r, max_dim)?;
        let inst = random_trial_instrument(&mut r, psi.dim_a(), psi.dim_b())?;
        let labels: Vec<usize> = (0..inst.len()).collect();
        let out = apply_instrument(&inst, &psi, &labels)?;
        let rep = majorization_condition_check(&psi, &out.ensemble)?;
        let dump = (!rep.holds).then(|| {
            json!({ "psi": MatrixJson::from(psi.amplitudes()), "instrument": &inst, "margins": &rep.margins })
        });
        Ok(Trial { margin: rep.min_margin, ok: rep.holds, dump })
    })
}

/// Random PSD matrices against random orthonormal frames.
pub fn schur_horn_sweep(trials: u64, max_dim: usize, seed: u64) -> Result<SweepReport> {
    use rand::Rng;
    check_max_dim(max_dim)?;
    run_sweep("schur_horn", trials, seed, |i| {
        let mut r = rng::stream(seed, i);
        let d = r.random_range(1..=max_dim);
        let rank = r.random_range(1..=d);
        let n = r.random_range(1..=d);
        let m = sampling::random_psd(&mut r, d, rank);
        let v = sampling::random_frame(&mut r, d, n)?;
        let margin = schur_horn_margin(&m, &v)?;
        let ok = margin >= -MARGIN_TOL;
        let dump = (!ok).then(|| json!({ "m": MatrixJson::from(&m), "vectors": MatrixJson::from(&v) }));
        Ok(Trial { margin, ok, dump })
    })
}

/// Random `(A, B, K)` triples with `N ≤ rank K`.
pub fn tail_sum_operator_sweep(trials: u64, max_dim: usize, seed: u64) -> Result<SweepReport> {
    use rand::Rng;
    check_max_dim(max_dim)?;
    run_sweep("tail_sum_operator", trials, seed, |i| {
        let mut r = rng::stream(seed, i);
        let d = r.random_range(1..=max_dim);
        let p = r.random_range(1..=max_dim);
        let q = r.random_range(1..=max_dim);
        let rank = r.random_range(1..=d);
        let n = r.random_range(0..=rank);
        let a = sampling::gaussian_matrix(&mut r, p, d);
        let b = sampling::gaussian_matrix(&mut r, d, q);
        let k = sampling::random_psd(&mut r, d, rank);
        let sides = operator_inequality_sides(&a, &b, &k, n)?;
        let ok = sides.holds();
        let dump = (!ok).then(|| {
            json!({ "a": MatrixJson::from(&a), "b": MatrixJson::from(&b), "k": MatrixJson::from(&k), "n": n })
        });
        Ok(Trial { margin: sides.margin() / (sides.left_trace + 1.0), ok, dump })
    })
}

/// Entanglement entropy before and after random LOCC instruments.
pub fn monotonicity_sweep(trials: u64, max_dim: usize, seed: u64) -> Result<SweepReport> {
    check_max_dim(max_dim)?;
    run_sweep("entropy_monotonicity", trials, seed, |i| {
        let mut r = rng::stream(seed, i);
        let psi = random_trial_state(&mut r, max_dim)?;
        let inst = random_trial_instrument(&mut r, psi.dim_a(), psi.dim_b())?;
        let rep = sep_entropy_monotonicity_check(&psi, &inst, None)?;
        let dump = (!rep.holds).then(|| json!({ "psi": MatrixJson::from(psi.amplitudes()), "instrument": &inst }));
        Ok(Trial { margin: rep.margin, ok: rep.holds, dump })
    })
}
