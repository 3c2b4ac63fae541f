//! Diagonal Hamiltonians, Gibbs states and the entropy-energy function `F_H`.
//!
//! Energies are in natural units; entropies are reported in bits.

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::entropy::{g_function, nats_to_bits};
use crate::spectra::Spectrum;
use crate::{Error, Result};

/// Growth law for levels beyond the explicit energy list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TailModel {
    /// The Hamiltonian has exactly the listed levels.
    #[default]
    None,
    /// `e_n = a·n + b` for every index `n` past the explicit list.
    Affine { a: f64, b: f64 },
}

#[derive(Deserialize)]
struct RawHamiltonian {
    energies: Vec<f64>,
    #[serde(default)]
    tail_model: TailModel,
}

/// Grounded diagonal Hamiltonian with non-decreasing energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHamiltonian")]
pub struct DiagonalHamiltonian {
    energies: Vec<f64>,
    tail_model: TailModel,
}

impl TryFrom<RawHamiltonian> for DiagonalHamiltonian {
    type Error = Error;
    fn try_from(r: RawHamiltonian) -> Result<Self> {
        Self::new(r.energies, r.tail_model)
    }
}

impl DiagonalHamiltonian {
    pub fn new(energies: Vec<f64>, tail_model: TailModel) -> Result<Self> {
        match energies.first() {
            None => return Err(Error::InvalidInput("Hamiltonian needs at least one level".into())),
            Some(&e0) if e0 != 0.0 => {
                return Err(Error::InvalidInput(format!("ground energy must be 0, got {e0}")))
            }
            _ => {}
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInput("energies must be finite".into()));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("energies must be non-decreasing".into()));
        }
        if let TailModel::Affine { a, b } = tail_model {
            if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidInput(format!("affine tail needs finite a > 0 and b, got a={a}, b={b}")));
            }
            let first = a * energies.len() as f64 + b;
            if first < *energies.last().expect("non-empty") {
                return Err(Error::InvalidInput("affine tail must continue the energies non-decreasingly".into()));
            }
        }
        Ok(Self { energies, tail_model })
    }

    /// Harmonic oscillator `e_n = n` with the first `levels` listed explicitly.
    pub fn harmonic(levels: usize) -> Self {
        let levels = levels.max(1);
        Self {
            energies: (0..levels).map(|n| n as f64).collect(),
            tail_model: TailModel::Affine { a: 1.0, b: 0.0 },
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn tail_model(&self) -> TailModel {
        self.tail_model
    }

    /// Energy of level `n`, including levels described by the tail model.
    pub fn level_energy(&self, n: usize) -> Option<f64> {
        match (self.energies.get(n), self.tail_model) {
            (Some(&e), _) => Some(e),
            (None, TailModel::Affine { a, b }) => Some(a * n as f64 + b),
            (None, TailModel::None) => None,
        }
    }

    /// Supremum of the mean energy over Gibbs states.
    pub fn max_energy(&self) -> f64 {
        match self.tail_model {
            TailModel::Affine { .. } => f64::INFINITY,
            TailModel::None => self.energies.iter().sum::<f64>() / self.energies.len() as f64,
        }
    }

    fn ground_degeneracy(&self) -> usize {
        self.energies.iter().take_while(|&&e| e == 0.0).count()
    }

    /// Partition function, mean energy and the tail contribution to `Z` at `beta`.
    fn thermal(&self, beta: f64) -> Thermal {
        let (mut z, mut ez) = (0.0, 0.0);
        for &e in &self.energies {
            let w = (-beta * e).exp();
            z += w;
            ez += e * w;
        }
        let mut tail_z = 0.0;
        if let TailModel::Affine { a, b } = self.tail_model {
            let l = self.energies.len() as f64;
            let one_minus_q = -(-beta * a).exp_m1();
            let q = 1.0 - one_minus_q;
            let head = (-beta * (a * l + b)).exp();
            tail_z = head / one_minus_q;
            // Σ_{n≥L} (a n + b) q^n e^{-βb}, with Σ_{n≥L} n q^n = q^L (L/(1-q) + q/(1-q)²)
            let tail_e = head * (b / one_minus_q + a * (l / one_minus_q + q / (one_minus_q * one_minus_q)));
            z += tail_z;
            ez += tail_e;
        }
        Thermal { z, energy: ez / z, tail_z }
    }
}

struct Thermal {
    z: f64,
    energy: f64,
    tail_z: f64,
}

impl Thermal {
    fn entropy_bits(&self, beta: f64) -> f64 {
        nats_to_bits(self.z.ln() + beta * self.energy)
    }
}

/// Inverse temperature; `E = 0` maps to the infinite sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn finite(self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(b),
            Beta::Infinite => None,
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => s.serialize_f64(*b),
            Beta::Infinite => s.serialize_str("infinity"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(b) => Ok(Beta::Finite(b)),
            Raw::Str(s) if s == "infinity" => Ok(Beta::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("unknown beta {s:?}"))),
        }
    }
}

/// A point on the Gibbs curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsPoint {
    pub beta: Beta,
    pub energy: f64,
    pub entropy_bits: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be finite and > 0, got {beta}")));
    }
    Ok(())
}

/// Gibbs state `e^{−βH}/Z` as a spectrum; levels past the explicit list are
/// reported as `tail_mass`.
pub fn gibbs_state(h: &DiagonalHamiltonian, beta: f64) -> Result<Spectrum> {
    check_beta(beta)?;
    let t = h.thermal(beta);
    if !t.z.is_finite() {
        return Err(Error::Domain(format!("partition function diverges at beta = {beta}")));
    }
    let values = h.energies.iter().map(|&e| (-beta * e).exp() / t.z).collect();
    Spectrum::new(values, t.tail_z / t.z)
}

/// Mean energy `Tr[Hγ_β]`.
pub fn gibbs_energy(h: &DiagonalHamiltonian, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(h.thermal(beta).energy)
}

/// Solves `Tr[Hγ_β] = E` for β by bisection in `ln β`.
pub fn beta_of_energy(h: &DiagonalHamiltonian, energy: f64) -> Result<GibbsPoint> {
    if !(energy >= 0.0) || !energy.is_finite() {
        return Err(Error::Domain(format!("energy must be finite and >= 0, got {energy}")));
    }
    if energy == 0.0 {
        return Ok(GibbsPoint {
            beta: Beta::Infinite,
            energy: 0.0,
            entropy_bits: (h.ground_degeneracy() as f64).log2(),
        });
    }
    if energy >= h.max_energy() {
        return Err(Error::Domain(format!(
            "energy {energy} not below the representable maximum {}",
            h.max_energy()
        )));
    }
    let e_at = |b: f64| h.thermal(b).energy;
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    let mut guard = 0;
    while e_at(lo) < energy {
        lo /= 10.0;
        guard += 1;
        if guard > 300 || lo == 0.0 {
            return Err(Error::Domain(format!("could not bracket energy {energy} from above")));
        }
    }
    guard = 0;
    while e_at(hi) > energy {
        hi *= 10.0;
        guard += 1;
        if guard > 300 || !hi.is_finite() {
            return Err(Error::Domain(format!("could not bracket energy {energy} from below")));
        }
    }
    for _ in 0..400 {
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        if mid <= lo || mid >= hi {
            break;
        }
        if e_at(mid) > energy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (el, eh) = (e_at(lo) - energy, e_at(hi) - energy);
    let beta = if el.abs() <= eh.abs() { lo } else { hi };
    let t = h.thermal(beta);
    if (t.energy - energy).abs() > 1e-10 * energy.max(1.0) {
        return Err(Error::Invariant(format!(
            "bisection reached energy {} for target {energy}",
            t.energy
        )));
    }
    Ok(GibbsPoint { beta: Beta::Finite(beta), energy, entropy_bits: t.entropy_bits(beta) })
}

/// `F_H(E)`: entropy in bits of the Gibbs state with mean energy `E`.
pub fn f_h(h: &DiagonalHamiltonian, energy: f64) -> Result<f64> {
    Ok(beta_of_energy(h, energy)?.entropy_bits)
}

/// Table of `F_H(E)/E` over an energy grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublinearityProbe {
    pub rows: Vec<(f64, f64)>,
    /// Whether the ratio strictly decreases over grid points within the top decade.
    pub top_decade_decreasing: bool,
}

pub fn f_h_sublinearity_probe(h: &DiagonalHamiltonian, grid: &[f64]) -> Result<SublinearityProbe> {
    if grid.len() < 2 || grid.iter().any(|&e| !(e > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("energy grid must be positive and strictly increasing".into()));
    }
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    if last / first < 1e3 {
        return Err(Error::InvalidInput(format!(
            "energy grid spans {:.3} decades, need at least 3",
            (last / first).log10()
        )));
    }
    let rows: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&e| f_h(h, e).map(|f| (e, f / e)))
        .collect::<Result<_>>()?;
    let top: Vec<f64> = rows.iter().filter(|(e, _)| *e >= last / 10.0).map(|r| r.1).collect();
    let top_decade_decreasing = top.windows(2).all(|w| w[1] < w[0]);
    Ok(SublinearityProbe { rows, top_decade_decreasing })
}

/// Terms of the one-sided continuity bound `ε′F_H(E/ε′) + g(ε′)`, `ε′ = √(ε(2−ε))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityTerms {
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub energy_term_bits: f64,
    pub g_term_bits: f64,
    pub total_bits: f64,
}

pub fn one_sided_continuity_terms(h: &DiagonalHamiltonian, energy: f64, epsilon: f64) -> Result<ContinuityTerms> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    let epsilon_prime = (epsilon * (2.0 - epsilon)).sqrt();
    if epsilon_prime == 0.0 {
        return Ok(ContinuityTerms { epsilon, epsilon_prime, energy_term_bits: 0.0, g_term_bits: 0.0, total_bits: 0.0 });
    }
    let energy_term_bits = epsilon_prime * f_h(h, energy / epsilon_prime)?;
    let g_term_bits = g_function(epsilon_prime)?;
    Ok(ContinuityTerms {
        epsilon,
        epsilon_prime,
        energy_term_bits,
        g_term_bits,
        total_bits: energy_term_bits + g_term_bits,
    })
}

/// One-sided continuity bound in bits for states with `Tr[ρH] ≤ E` at trace
/// distance `ε`.
pub fn one_sided_continuity_bound(h: &DiagonalHamiltonian, energy: f64, epsilon: f64) -> Result<f64> {
    Ok(one_sided_continuity_terms(h, energy, epsilon)?.total_bits)
}

/// `F_{H^{(n)}}(nE′)` for the non-interacting n-copy Hamiltonian, which equals
/// `n·F_H(E′)`; no tensor power is built.
pub fn n_copy_f_h(h: &DiagonalHamiltonian, n: u64, energy_per_copy: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    Ok(n as f64 * f_h(h, energy_per_copy)?)
}

/// Divergent weights `b` with `Σ a_n b_n ≤ c Σ a_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesWeights {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl SeriesWeights {
    /// `Σ a_n b_n / Σ a_n`.
    pub fn slack_ratio(&self) -> f64 {
        let sa: f64 = self.a.iter().sum();
        self.a.iter().zip(&self.b).map(|(a, b)| a * b).sum::<f64>() / sa
    }
}

/// Builds `b_n = 1 − log₂(Σ_{m≥n} a_m / Σ a)`, which gives slack at most 5, then
/// mixes `b′ = p + (1−p) b` with `p = (5−c)/4` when `c < 5`. Past the last
/// non-zero `a_n` the weights grow by one per index.
pub fn series_weights(a: &[f64], c: f64) -> Result<SeriesWeights> {
    if !(c > 1.0) {
        return Err(Error::Domain(format!("slack constant c must exceed 1, got {c}")));
    }
    if a.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidInput("series terms must be finite and >= 0".into()));
    }
    let total: f64 = a.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput("series must not be identically zero".into()));
    }
    let mut suffix = vec![0.0; a.len()];
    let mut acc = 0.0;
    for i in (0..a.len()).rev() {
        acc += a[i];
        suffix[i] = acc;
    }
    let mut b = Vec::with_capacity(a.len());
    for (i, &s) in suffix.iter().enumerate() {
        let bi = if s > 0.0 { (1.0 - (s / total).log2()).max(1.0) } else { b[i - 1] + 1.0 };
        b.push(bi);
    }
    let p = ((5.0 - c) / 4.0).max(0.0);
    if p > 0.0 {
        for x in &mut b {
            *x = p + (1.0 - p) * *x;
        }
    }
    let w = SeriesWeights { a: a.to_vec(), b, c };
    if w.slack_ratio() > c * (1.0 + 1e-12) {
        return Err(Error::Invariant(format!("series weights slack {} exceeds c = {c}", w.slack_ratio())));
    }
    Ok(w)
}

/// Outcome of one partition-function probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsCheck {
    pub beta: f64,
    pub z: f64,
    /// `1 + #{n ≥ 1 : βb_n < 1} + Σ_{βb_n ≥ 1} p_n`, which dominates `Z` since
    /// `e^{−β b_n ln(1/p_n)} = p_n^{β b_n}`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociatedHamiltonian {
    pub hamiltonian: DiagonalHamiltonian,
    pub weights: SeriesWeights,
    /// `Tr[ρH]` in natural units.
    pub mean_energy: f64,
    pub checks: Vec<GibbsCheck>,
}

impl AssociatedHamiltonian {
    pub fn gibbs_hypothesis_holds(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

pub const DEFAULT_BETA_GRID: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

/// Hamiltonian with `Tr[ρH] < ∞` that satisfies the Gibbs hypothesis, built from
/// the eigenvalues of `ρ`: `e_n = b_n ln(1/p_n)` with series weights on `a = p`
/// and the largest-eigenvalue level grounded at zero.
pub fn associated_hamiltonian(spectrum: &Spectrum) -> Result<AssociatedHamiltonian> {
    associated_hamiltonian_with_grid(spectrum, &DEFAULT_BETA_GRID)
}

pub fn associated_hamiltonian_with_grid(spectrum: &Spectrum, grid: &[f64]) -> Result<AssociatedHamiltonian> {
    if spectrum.tail_mass() > 0.0 {
        return Err(Error::InvalidInput("associated Hamiltonian needs a fully resolved spectrum".into()));
    }
    if !spectrum.is_normalized() {
        return Err(Error::InvalidState(format!("spectrum has total {}", spectrum.total())));
    }
    for &beta in grid {
        check_beta(beta)?;
    }
    let p = spectrum.trimmed().values().to_vec();
    let weights = series_weights(&p, 5.0)?;
    let mut energies: Vec<f64> = p.iter().zip(&weights.b).map(|(&pn, &bn)| bn * (1.0 / pn).ln()).collect();
    energies[0] = 0.0;
    // equal eigenvalues can give energies that differ by rounding only
    for i in 1..energies.len() {
        energies[i] = energies[i].max(energies[i - 1]);
    }
    let mean_energy = p.iter().zip(&energies).map(|(pn, e)| pn * e).sum();
    let hamiltonian = DiagonalHamiltonian::new(energies, TailModel::None)?;
    let checks = grid
        .iter()
        .map(|&beta| {
            let z = hamiltonian.thermal(beta).z;
            let mut bound = 1.0;
            for (&pn, &bn) in p.iter().zip(&weights.b).skip(1) {
                bound += if beta * bn < 1.0 { 1.0 } else { pn };
            }
            GibbsCheck { beta, z, bound, holds: z.is_finite() && z <= bound * (1.0 + 1e-12) }
        })
        .collect();
    Ok(AssociatedHamiltonian { hamiltonian, weights, mean_energy, checks })
}

/// `F_H` of the harmonic oscillator in closed form, `g(E)`.
pub fn harmonic_f_h(energy: f64) -> Result<f64> {
    g_function(energy)
}
