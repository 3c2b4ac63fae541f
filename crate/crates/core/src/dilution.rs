//! Rate and error accounting for dilution protocols, computed from spectra and
//! combinatorics only; no n-copy state is ever built.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::shannon_bits;
use crate::eof::{self, EofOptions};
use crate::gibbs::{self, DiagonalHamiltonian};
use crate::linalg::{self, CMatrix};
use crate::rng;
use crate::spectra::{BipartiteState, Ensemble, PureBipartite, Spectrum, Subsystem};
use crate::typicality::{self, ln_factorials, ModeReport, SourceDistribution, TypicalityMode, TYPICAL_TOL};
use crate::{Error, Result};

/// Whether a reported error is the protocol's exact error or an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Exact,
    Bound,
}

/// Resources and error of one protocol run on `n` copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilutionTrace {
    pub n: u64,
    pub ebits: u64,
    /// One-way classical bits; teleporting each qubit of Alice's share costs two.
    pub cbits: u64,
    /// Trace distance to the target `ψ^{⊗n}`.
    pub error: f64,
    pub error_kind: ErrorKind,
    pub rate: f64,
    pub typical_mass: f64,
    pub log2_cardinality: Option<f64>,
}

/// `⌈x⌉`, snapping values within `1e-9` of an integer onto it.
fn snapped_ceil(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 {
        r.max(0.0) as u64
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// Typical-subspace dilution of `ψ^{⊗n}`: Alice prepares the state projected on
/// the weakly typical subspace locally and teleports her share, using
/// `⌈log₂|W_δ|⌉` ebits, with error `√(1 − p_n(W_δ))`.
///
/// In Monte Carlo mode the cardinality is replaced by `2^{n(S+δ)}` and the error
/// by the upper end of the 99% interval, flagged as a bound.
pub fn pure_dilution(psi: &PureBipartite, delta: f64, n: u64, mode: TypicalityMode) -> Result<DilutionTrace> {
    let schmidt = psi.schmidt().trimmed();
    let total: f64 = schmidt.values().iter().sum();
    let dist = SourceDistribution::new(schmidt.values().iter().map(|p| p / total).collect())?;
    let s = dist.entropy_bits();
    let report = typicality::weak_typical_mass(&dist, n, delta, mode)?;
    let cap = snapped_ceil(n as f64 * (s + delta));
    let (ebits, error, error_kind, log2_cardinality) = match report.report {
        ModeReport::Exact { .. } => {
            let ebits = report.log2_cardinality_bound.map_or(0, snapped_ceil).min(cap);
            let error = report.atypical_mass.clamp(0.0, 1.0).sqrt();
            (ebits, error, ErrorKind::Exact, report.log2_cardinality_bound)
        }
        ModeReport::MonteCarlo { ci_low, .. } => (cap, (1.0 - ci_low).clamp(0.0, 1.0).sqrt(), ErrorKind::Bound, None),
    };
    Ok(DilutionTrace {
        n,
        ebits,
        cbits: 2 * ebits,
        error,
        error_kind,
        rate: ebits as f64 / n as f64,
        typical_mass: report.mass,
        log2_cardinality,
    })
}

/// Common/rare split of a pure-state decomposition at `n_cut`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedDilution {
    pub n_cut: usize,
    /// `(1−δ_N) Σ_{x≤N} p̃(x) S(ψ_x^A) + δ_N S(ω_N^A)`.
    pub rate_bound: f64,
    pub common_term: f64,
    /// `δ_N S(ω_N^A)`: cost of preparing the rare part through its purification.
    pub wasteful_term: f64,
    /// `δ_N = Σ_{x>N} p(x)`.
    pub delta_n: f64,
}

pub fn mixed_dilution_rate(decomposition: &Ensemble, n_cut: usize) -> Result<MixedDilution> {
    let members: Vec<(f64, &PureBipartite)> = decomposition
        .iter()
        .map(|(w, m)| {
            m.as_pure()
                .map(|p| (w, p))
                .ok_or_else(|| Error::InvalidInput("mixed dilution needs pure ensemble members".into()))
        })
        .collect::<Result<_>>()?;
    let common_term: f64 = members.iter().take(n_cut + 1).map(|(w, p)| w * p.entanglement_entropy()).sum();
    let rare = &members[(n_cut + 1).min(members.len())..];
    let delta_n: f64 = rare.iter().map(|(w, _)| w).sum();
    let wasteful_term = if delta_n > 0.0 {
        let da = decomposition.dims().0;
        let mut omega = CMatrix::zeros(da, da);
        for (w, p) in rare {
            omega += p.reduced_a().scale(*w / delta_n);
        }
        delta_n * shannon_bits(&linalg::eigvalsh(&omega).iter().map(|v| v.max(0.0)).collect::<Vec<_>>())
    } else {
        0.0
    };
    Ok(MixedDilution { n_cut, rate_bound: common_term + wasteful_term, common_term, wasteful_term, delta_n })
}

/// Error of the symmetrized mixing construction for a binary mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingError {
    /// `p_n(T_ξ)`: binomial mass of `{k : |k/n − p0| ≤ ξ}`.
    pub mass: f64,
    /// `2(1 − mass)`, with `1 − mass` summed directly over the excluded counts.
    pub raw_bound: f64,
    /// `min(1, raw_bound)`, the bound as a trace distance.
    pub trace_distance_bound: f64,
    pub error_kind: ErrorKind,
}

fn check_mixing(p0: f64, xi: f64, n: u64) -> Result<()> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Domain(format!("p0 must lie in (0, 1), got {p0}")));
    }
    if !(xi > 0.0) || xi > p0.min(1.0 - p0) {
        return Err(Error::Domain(format!("xi must lie in (0, min(p0, 1-p0)], got {xi}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    Ok(())
}

fn in_window(k: u64, n: u64, p0: f64, xi: f64) -> bool {
    (k as f64 / n as f64 - p0).abs() <= xi + TYPICAL_TOL
}

/// `ln [C(n,k) p0^k (1−p0)^{n−k}]` for `k = 0..=n`.
fn log_binomial_pmf(p0: f64, n: u64) -> Vec<f64> {
    let lf = ln_factorials(n);
    let (lp, lq) = (p0.ln(), (1.0 - p0).ln());
    (0..=n)
        .map(|k| lf[n as usize] - lf[k as usize] - lf[(n - k) as usize] + k as f64 * lp + (n - k) as f64 * lq)
        .collect()
}

pub fn convexity_mixing_error(p0: f64, xi: f64, n: u64) -> Result<MixingError> {
    check_mixing(p0, xi, n)?;
    let (mut mass, mut outside) = (0.0, 0.0);
    for (k, l) in log_binomial_pmf(p0, n).into_iter().enumerate() {
        if in_window(k as u64, n, p0, xi) {
            mass += l.exp();
        } else {
            outside += l.exp();
        }
    }
    let raw_bound = 2.0 * outside.min(1.0);
    Ok(MixingError { mass: mass.min(1.0), raw_bound, trace_distance_bound: raw_bound.min(1.0), error_kind: ErrorKind::Bound })
}

/// Binomial(n, p0) conditioned on `|k/n − p0| ≤ ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurtailedBinomial {
    support_start: u64,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl CurtailedBinomial {
    pub fn new(p0: f64, xi: f64, n: u64) -> Result<Self> {
        check_mixing(p0, xi, n)?;
        let logs = log_binomial_pmf(p0, n);
        let ks: Vec<u64> = (0..=n).filter(|&k| in_window(k, n, p0, xi)).collect();
        let Some(&start) = ks.first() else {
            return Err(Error::Domain(format!("no count k satisfies |k/{n} - {p0}| <= {xi}")));
        };
        let max = ks.iter().map(|&k| logs[k as usize]).fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = ks.iter().map(|&k| (logs[k as usize] - max).exp()).collect();
        let total: f64 = w.iter().sum();
        let pmf: Vec<f64> = w.iter().map(|x| x / total).collect();
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { support_start: start, pmf, cdf })
    }

    /// `(k, P(K = k))` over the support.
    pub fn pmf(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.pmf.iter().enumerate().map(|(i, &p)| (self.support_start + i as u64, p))
    }

    pub fn support(&self) -> (u64, u64) {
        (self.support_start, self.support_start + self.pmf.len() as u64 - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        let i = self.cdf.partition_point(|&c| c <= u).min(self.pmf.len() - 1);
        self.support_start + i as u64
    }

    /// Total-variation distance between the empirical law of `samples` draws and
    /// the exact pmf. Draws come in chunks of 4096, chunk `i` on stream `i`.
    pub fn empirical_tv(&self, samples: u64, seed: u64) -> f64 {
        const CHUNK: u64 = 4096;
        let len = self.pmf.len();
        let counts = (0..samples.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut r = rng::stream(seed, chunk);
                let mut c = vec![0u64; len];
                for _ in 0..CHUNK.min(samples - chunk * CHUNK) {
                    c[(self.sample(&mut r) - self.support_start) as usize] += 1;
                }
                c
            })
            .reduce(
                || vec![0u64; len],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        0.5 * counts.iter().zip(&self.pmf).map(|(&c, &p)| (c as f64 / samples as f64 - p).abs()).sum::<f64>()
    }
}

pub fn curtailed_binomial_sample(p0: f64, xi: f64, n: u64, seed: u64) -> Result<u64> {
    Ok(CurtailedBinomial::new(p0, xi, n)?.sample(&mut rng::stream(seed, 0)))
}

/// Shared randomness of one round of the mixing construction: `k` copies of the
/// first component, placed on the positions chosen by a uniform permutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingSchedule {
    pub k: u64,
    pub permutation: Vec<usize>,
    /// `labels[i] = 0` when copy `i` receives the first component.
    pub labels: Vec<u8>,
}

pub fn mixing_schedule(p0: f64, xi: f64, n: u64, seed: u64) -> Result<MixingSchedule> {
    let dist = CurtailedBinomial::new(p0, xi, n)?;
    let mut r = rng::stream(seed, 0);
    let k = dist.sample(&mut r);
    let mut permutation: Vec<usize> = (0..n as usize).collect();
    permutation.shuffle(&mut r);
    let mut labels = vec![1u8; n as usize];
    for &pos in permutation.iter().take(k as usize) {
        labels[pos] = 0;
    }
    Ok(MixingSchedule { k, permutation, labels })
}

/// Reduces an `m`-component mixture to a chain of binary splits: step `i`
/// separates component `i` from the rest with weight `p_i / Σ_{j≥i} p_j`.
pub fn binary_split_chain(probs: &[f64]) -> Result<Vec<f64>> {
    if probs.is_empty() || probs.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidInput("split chain needs a non-empty probability vector".into()));
    }
    let mut rest: f64 = probs.iter().sum();
    if (rest - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("probabilities sum to {rest}")));
    }
    let mut chain = Vec::with_capacity(probs.len().saturating_sub(1));
    for &p in &probs[..probs.len() - 1] {
        chain.push(if rest > 0.0 { (p / rest).min(1.0) } else { 0.0 });
        rest -= p;
    }
    Ok(chain)
}

/// Every term of `⌊rn⌋ ≥ E_f(ρ^{⊗n}) − ε′F_{H^{(n)}}(nE/ε′) − g(ε′)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseReport {
    pub n: u64,
    pub r: f64,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    /// `E = Tr[ρ_A H]`.
    pub energy: f64,
    /// `⌊rn⌋ = E_f(Φ^{⊗⌊rn⌋})`.
    pub lhs: f64,
    /// Stand-in for `E_f(ρ^{⊗n})`; exact for pure targets, otherwise `n` times a
    /// one-copy upper bound, which is itself an upper bound.
    pub eof_surrogate: f64,
    pub surrogate_exact: bool,
    /// `ε′F_{H^{(n)}}(nE/ε′) = n ε′ F_H(E/ε′)`.
    pub energy_term: f64,
    pub g_term: f64,
    pub rhs: f64,
    /// `lhs − rhs`.
    pub slack: f64,
    /// `surrogate/n − ε′F_H(E/ε′) − g(ε′)/n`.
    pub rate_lower_bound: f64,
}

/// Mean energy `Tr[ρ_A H]` with `H` diagonal in Alice's computational basis.
pub fn local_energy(rho: &BipartiteState, h: &DiagonalHamiltonian) -> Result<f64> {
    let ra = rho.reduced(Subsystem::A);
    (0..rho.dim_a())
        .map(|i| {
            h.level_energy(i)
                .map(|e| e * ra[(i, i)].re)
                .ok_or_else(|| Error::DimensionMismatch(format!("Hamiltonian has no level {i}")))
        })
        .sum()
}

/// Pure state of a rank-one density matrix.
fn as_pure(rho: &BipartiteState) -> Option<PureBipartite> {
    let (vals, vecs) = linalg::eigh(rho.matrix());
    if vals.iter().skip(1).any(|&v| v > 1e-12) {
        return None;
    }
    let v = vecs.column(0).into_owned();
    PureBipartite::new(linalg::unvec_row_major(&v, rho.dim_a(), rho.dim_b())).ok()
}

pub fn converse_bound(
    rho: &BipartiteState,
    r: f64,
    epsilon: f64,
    h: &DiagonalHamiltonian,
    n: u64,
    eof_opts: &EofOptions,
) -> Result<ConverseReport> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidInput(format!("rate r must be finite and >= 0, got {r}")));
    }
    let energy = local_energy(rho, h)?;
    if !energy.is_finite() {
        return Err(Error::Domain("local energy is infinite".into()));
    }
    let (one_copy, surrogate_exact) = match as_pure(rho) {
        Some(psi) => (eof::eof_pure(&psi), true),
        None => (eof::eof_estimate_with(rho, eof_opts, None)?.upper_bound_bits, false),
    };
    let eof_surrogate = n as f64 * one_copy;
    let t = gibbs::one_sided_continuity_terms(h, energy, epsilon)?;
    let energy_term = n as f64 * t.energy_term_bits;
    let g_term = t.g_term_bits;
    let lhs = (r * n as f64).floor();
    let rhs = eof_surrogate - energy_term - g_term;
    Ok(ConverseReport {
        n,
        r,
        epsilon,
        epsilon_prime: t.epsilon_prime,
        energy,
        lhs,
        eof_surrogate,
        surrogate_exact,
        energy_term,
        g_term,
        rhs,
        slack: lhs - rhs,
        rate_lower_bound: eof_surrogate / n as f64 - t.energy_term_bits - g_term / n as f64,
    })
}

/// Upper-bound surrogates for the dilution rate of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateSurrogate {
    /// `S(ψ_A)`, exact for pure states.
    PureEntropy,
    /// Convex-roof search upper bound.
    Eof(EofOptions),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdditivityReport {
    pub n: usize,
    pub single_copy: f64,
    pub per_copy: f64,
    pub holds: bool,
}

/// Checks `rate(ρ^{⊗n})/n ≤ rate(ρ) + 1e-9`. Equality is a property of the true
/// cost; on upper-bound surrogates only this direction is assertable.
pub fn additivity_check(surrogate: &RateSurrogate, rho: &BipartiteState, n: usize) -> Result<AdditivityReport> {
    if !(1..=2).contains(&n) {
        return Err(Error::InvalidInput(format!("n must be 1 or 2, got {n}")));
    }
    let (single_copy, per_copy) = match surrogate {
        RateSurrogate::PureEntropy => {
            let psi = as_pure(rho).ok_or_else(|| Error::InvalidInput("pure-entropy surrogate needs a pure state".into()))?;
            let s1 = psi.entanglement_entropy();
            let sn = if n == 2 { psi.tensor(&psi).entanglement_entropy() / 2.0 } else { s1 };
            (s1, sn)
        }
        RateSurrogate::Eof(opts) => {
            let probe = eof::regularized_probe(rho, n, opts)?;
            (probe.per_copy_bits[0], probe.per_copy_bits[n - 1])
        }
    };
    Ok(AdditivityReport { n, single_copy, per_copy, holds: per_copy <= single_copy + 1e-9 })
}

/// Pure state `Σ √p_i |ii⟩` for Schmidt weights summing to 1.
pub fn schmidt_state(p: &[f64]) -> Result<PureBipartite> {
    let s = Spectrum::normalized(p.to_vec(), 0.0)?;
    PureBipartite::from_schmidt_coefficients(s.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;

    #[test]
    fn ebit_and_product_dilution() {
        for n in [1u64, 5, 17, 40] {
            let t = pure_dilution(&PureBipartite::ebit(), 0.01, n, TypicalityMode::Exact).unwrap();
            assert_eq!(t.ebits, n);
            assert_eq!(t.cbits, 2 * n);
            assert_eq!(t.error, 0.0);
            assert_eq!(t.rate, 1.0);
        }
        let prod = PureBipartite::product_basis(2, 2, 0, 1).unwrap();
        let t = pure_dilution(&prod, 0.1, 30, TypicalityMode::Exact).unwrap();
        assert_eq!((t.ebits, t.cbits, t.error), (0, 0, 0.0));
    }

    #[test]
    fn skewed_dilution_converges() {
        let psi = schmidt_state(&[0.8, 0.2]).unwrap();
        let h = psi.entanglement_entropy();
        let mut hit = None;
        for n in (50..=2000).step_by(50) {
            let t = pure_dilution(&psi, 0.05, n, TypicalityMode::Exact).unwrap();
            assert!(t.rate <= h + 0.05 + 1.0 / n as f64 + 1e-12);
            if t.error < 0.1 && hit.is_none() {
                hit = Some(n);
            }
        }
        assert!(hit.is_some());
    }

    #[test]
    fn dilution_error_trend_on_dyadic_grid() {
        let psi = schmidt_state(&[0.7, 0.2, 0.1]).unwrap();
        let errs: Vec<f64> = (4..=9)
            .map(|k| pure_dilution(&psi, 0.1, 1 << k, TypicalityMode::Exact).unwrap().error)
            .collect();
        let mut best = f64::INFINITY;
        for e in errs {
            assert!(e < best, "{e} !< {best}");
            best = e;
        }
    }

    #[test]
    fn monte_carlo_dilution_is_flagged() {
        let psi = schmidt_state(&[0.8, 0.2]).unwrap();
        let t = pure_dilution(&psi, 0.05, 500, TypicalityMode::MonteCarlo { samples: 5000, seed: 1 }).unwrap();
        assert_eq!(t.error_kind, ErrorKind::Bound);
        let exact = pure_dilution(&psi, 0.05, 500, TypicalityMode::Exact).unwrap();
        assert!(t.error >= exact.error);
    }

    #[test]
    fn mixed_rate_examples() {
        let psi = schmidt_state(&[0.6, 0.4]).unwrap();
        let single = Ensemble::pure(vec![1.0], vec![psi.clone()]).unwrap();
        let m = mixed_dilution_rate(&single, 0).unwrap();
        assert!((m.rate_bound - psi.entanglement_entropy()).abs() < 1e-12);
        assert_eq!(m.wasteful_term, 0.0);

        let two = Ensemble::pure(vec![0.3, 0.7], vec![psi.clone(), PureBipartite::ebit()]).unwrap();
        let m = mixed_dilution_rate(&two, 1).unwrap();
        assert!((m.rate_bound - eof::dilution_rate_upper_bound(&two).unwrap()).abs() < 1e-12);
        assert_eq!(m.delta_n, 0.0);

        // rare part {ebit} has ω = 𝟙/2, so the wasteful term is 0.7·1
        let m = mixed_dilution_rate(&two, 0).unwrap();
        assert!((m.delta_n - 0.7).abs() < 1e-15);
        assert!((m.wasteful_term - 0.7).abs() < 1e-12);
    }

    #[test]
    fn geometric_wasteful_term_vanishes() {
        let mut r = rng::stream(31, 0);
        let count = 64;
        let raw: Vec<f64> = (0..count).map(|x| 0.5f64.powi(x as i32 + 1)).collect();
        let total: f64 = raw.iter().sum();
        let members: Vec<PureBipartite> = (0..count).map(|_| sampling::random_pure_state(&mut r, 4, 4).unwrap()).collect();
        assert!(members.iter().all(|p| p.entanglement_entropy() <= 2.0 + 1e-12));
        let e = Ensemble::pure(raw.iter().map(|p| p / total).collect(), members).unwrap();
        let terms: Vec<f64> = (0..=40).map(|n| mixed_dilution_rate(&e, n).unwrap().wasteful_term).collect();
        assert!(terms.windows(2).all(|w| w[1] < w[0]));
        assert!(terms[40] < 1e-3);
        let full = mixed_dilution_rate(&e, count - 1).unwrap();
        assert_eq!(full.wasteful_term, 0.0);
        assert!((full.rate_bound - eof::dilution_rate_upper_bound(&e).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mixing_error_examples() {
        let m = convexity_mixing_error(0.5, 0.49, 1).unwrap();
        assert_eq!(m.mass, 0.0);
        assert_eq!(m.raw_bound, 2.0);
        assert_eq!(m.trace_distance_bound, 1.0);
        let m = convexity_mixing_error(0.5, 0.5, 2).unwrap();
        assert!(m.raw_bound.abs() < 1e-15);
        let m = convexity_mixing_error(0.3, 0.05, 10_000).unwrap();
        assert!(m.raw_bound < 1e-2);
        assert!(convexity_mixing_error(0.3, 0.31, 10).is_err());
        assert!(convexity_mixing_error(0.3, 0.0, 10).is_err());
    }

    #[test]
    fn mixing_error_matches_direct_sum() {
        // C(20,k) 0.3^k 0.7^{20-k} summed over |k/20 - 0.3| <= 0.1, i.e. k = 4..=8
        let mut mass = 0.0;
        for k in 4..=8u32 {
            let binom = (1..=k).fold(1.0, |acc, i| acc * (20 - k + i) as f64 / i as f64);
            mass += binom * 0.3f64.powi(k as i32) * 0.7f64.powi(20 - k as i32);
        }
        let m = convexity_mixing_error(0.3, 0.1, 20).unwrap();
        assert!((m.mass - mass).abs() < 1e-13);
        assert!((m.raw_bound - 2.0 * (1.0 - mass)).abs() < 1e-13);
    }

    #[test]
    fn curtailed_sampler() {
        for seed in 0..20 {
            assert!(curtailed_binomial_sample(0.5, 0.5, 2, seed).unwrap() <= 2);
            let k = curtailed_binomial_sample(0.3, 0.1, 100, seed).unwrap();
            assert!((20..=40).contains(&k));
        }
        // n = 4, p0 = 0.5, ξ = 0.1 leaves only k = 2
        let d = CurtailedBinomial::new(0.5, 0.1, 4).unwrap();
        assert_eq!(d.support(), (2, 2));
        assert_eq!(curtailed_binomial_sample(0.5, 0.1, 4, 9).unwrap(), 2);
        assert!(CurtailedBinomial::new(0.5, 0.1, 3).is_err());
        let d = CurtailedBinomial::new(0.3, 0.05, 200).unwrap();
        assert!(d.empirical_tv(100_000, 7) <= 0.01);
    }

    #[test]
    fn schedules_and_chains() {
        let s = mixing_schedule(0.3, 0.1, 50, 4).unwrap();
        assert_eq!(s.labels.iter().filter(|&&l| l == 0).count() as u64, s.k);
        let mut sorted = s.permutation.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        let c = binary_split_chain(&[0.5, 0.25, 0.25]).unwrap();
        assert_eq!(c, vec![0.5, 0.5]);
        assert!(binary_split_chain(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn converse_examples() {
        let h = DiagonalHamiltonian::harmonic(1);
        let opts = EofOptions::new(4, 1, 0);
        let psi = schmidt_state(&[0.8, 0.2]).unwrap();
        let rep = converse_bound(&psi.to_state(), 0.8, 1e-4, &h, 4, &opts).unwrap();
        assert!(rep.surrogate_exact);
        assert!((rep.energy - 0.2).abs() < 1e-12);
        assert_eq!(rep.lhs, 3.0);
        assert!(rep.slack >= 0.0);

        let ebit = PureBipartite::ebit().to_state();
        let mut prev: Option<ConverseReport> = None;
        for eps in [1e-2, 1e-3, 1e-4] {
            let rep = converse_bound(&ebit, 1.0, eps, &h, 100, &opts).unwrap();
            assert!((rep.energy - 0.5).abs() < 1e-12);
            if let Some(p) = &prev {
                assert!(rep.energy_term < p.energy_term && rep.g_term < p.g_term);
                assert!(rep.rate_lower_bound > p.rate_lower_bound);
            }
            prev = Some(rep);
        }
        let tiny = converse_bound(&ebit, 1.0, 1e-14, &h, 100, &opts).unwrap();
        assert!(tiny.rate_lower_bound > 0.99);

        let sep = BipartiteState::product_basis(2, 2, 0, 0).unwrap();
        let rep = converse_bound(&sep, 0.0, 1e-3, &h, 10, &opts).unwrap();
        assert!(rep.eof_surrogate.abs() < 1e-12 && rep.rhs <= 0.0);
    }

    #[test]
    fn additivity_examples() {
        let psi = schmidt_state(&[0.6, 0.3, 0.1]).unwrap();
        let rep = additivity_check(&RateSurrogate::PureEntropy, &psi.to_state(), 2).unwrap();
        assert!(rep.holds && (rep.per_copy - rep.single_copy).abs() < 1e-12);
        let rep = additivity_check(&RateSurrogate::PureEntropy, &PureBipartite::ebit().to_state(), 2).unwrap();
        assert!(rep.holds && (rep.per_copy - 1.0).abs() < 1e-12);
        let mut r = rng::stream(32, 0);
        let rho = BipartiteState::new(2, 2, sampling::random_density(&mut r, 4, 2)).unwrap();
        let mut opts = EofOptions::new(4, 2, 5);
        opts.anneal_sweeps = 10;
        opts.polish_sweeps = 3;
        let rep = additivity_check(&RateSurrogate::Eof(opts), &rho, 2).unwrap();
        assert!(rep.holds, "{rep:?}");
    }
}
