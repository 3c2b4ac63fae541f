//! Weak and strong typicality over finite alphabets.
//!
//! Sequences of one empirical type share their probability and their typicality
//! status, so the exact masses are sums over compositions of `n` into `K` parts
//! weighted by multinomial coefficients. Enumeration is parallel over the first
//! count and reduced in type order, so results do not depend on the thread count.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::entropy::{shannon_bits, LN_2};
use crate::rng;
use crate::spectra::Spectrum;
use crate::{Error, Result};

/// Largest number of empirical types enumerated in exact mode.
pub const MAX_EXACT_TYPES: u128 = 10_000_000;
/// Largest alphabet (support size) accepted in exact mode.
pub const MAX_EXACT_ALPHABET: usize = 12;
/// Slack on the typicality inequalities, absorbing rounding in the rates.
pub const TYPICAL_TOL: f64 = 1e-12;
const MC_CHUNK: u64 = 4096;

/// Probability vector over `{0, …, K−1}` with its cached entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDistribution {
    probs: Vec<f64>,
    entropy_bits: f64,
}

impl SourceDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidInput("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}")));
        }
        let entropy_bits = shannon_bits(&probs);
        Ok(Self { probs, entropy_bits })
    }

    /// Head of a truncated spectrum, renormalized. The returned tail mass is the
    /// probability of symbols merged beyond the truncation; they are never typical.
    pub fn from_truncated(spectrum: &Spectrum) -> Result<(Self, f64)> {
        let head: f64 = spectrum.values().iter().sum();
        if !(head > 0.0) {
            return Err(Error::InvalidInput("spectrum has no resolved mass".into()));
        }
        let probs = spectrum.values().iter().map(|p| p / head).collect();
        Ok((Self::new(probs)?, spectrum.tail_mass()))
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn entropy_bits(&self) -> f64 {
        self.entropy_bits
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    fn support(&self) -> Vec<f64> {
        self.probs.iter().copied().filter(|&p| p > 0.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypicalKind {
    Weak,
    Strong,
}

/// How to compute a typical-set mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum TypicalityMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ModeReport {
    Exact { types: u64 },
    MonteCarlo { samples: u64, seed: u64, hits: u64, ci_low: f64, ci_high: f64, confidence: f64 },
}

/// Mass and size of a typical set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalReport {
    pub kind: TypicalKind,
    pub n: u64,
    pub delta: f64,
    /// Probability of the typical set (point estimate in Monte Carlo mode).
    pub mass: f64,
    /// `1 − mass`, summed directly over atypical types in exact mode.
    pub atypical_mass: f64,
    /// `log₂` of the number of typical sequences in exact mode, otherwise an
    /// upper bound. `None` when the set is empty.
    pub log2_cardinality_bound: Option<f64>,
    pub cardinality_exact: bool,
    /// Additive error on `mass` from symbols merged into a truncation tail.
    pub tail_error_bound: f64,
    pub report: ModeReport,
}

/// Streaming log-sum-exp accumulator: value = `exp(max) · scaled`.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    const EMPTY: LogSum = LogSum { max: f64::NEG_INFINITY, scaled: 0.0 };

    fn add(self, x: f64) -> Self {
        self.merge(LogSum { max: x, scaled: 1.0 })
    }

    fn merge(self, o: Self) -> Self {
        if o.scaled == 0.0 {
            return self;
        }
        if self.scaled == 0.0 {
            return o;
        }
        if o.max > self.max {
            LogSum { max: o.max, scaled: self.scaled * (self.max - o.max).exp() + o.scaled }
        } else {
            LogSum { max: self.max, scaled: self.scaled + o.scaled * (o.max - self.max).exp() }
        }
    }

    fn ln(self) -> Option<f64> {
        (self.scaled > 0.0).then(|| self.max + self.scaled.ln())
    }
}

/// `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: u64) -> Vec<f64> {
    let mut t = Vec::with_capacity(n as usize + 1);
    t.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        t.push(acc);
    }
    t
}

/// Number of compositions of `n` into `k` non-negative parts, saturating.
pub fn type_count(n: u64, k: usize) -> u128 {
    if k == 0 {
        return 0;
    }
    // C(n + k - 1, k - 1)
    let r = (k - 1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=r {
        acc = acc.saturating_mul(n as u128 + i) / i;
        if acc > u64::MAX as u128 {
            return acc;
        }
    }
    acc
}

fn visit(buf: &mut Vec<u64>, remaining: u64, parts_left: usize, f: &mut impl FnMut(&[u64])) {
    if parts_left == 1 {
        buf.push(remaining);
        f(buf);
        buf.pop();
        return;
    }
    for c in 0..=remaining {
        buf.push(c);
        visit(buf, remaining - c, parts_left - 1, f);
        buf.pop();
    }
}

/// Parallel map-reduce over all compositions of `n` into `k` parts, combined in
/// lexicographic order of the first count.
fn reduce_types<A, V, C>(n: u64, k: usize, identity: impl Fn() -> A + Sync, visit_one: V, combine: C) -> A
where
    A: Send,
    V: Fn(A, &[u64]) -> A + Sync,
    C: Fn(A, A) -> A + Sync,
{
    if k == 1 {
        return visit_one(identity(), &[n]);
    }
    let partials: Vec<A> = (0..=n)
        .into_par_iter()
        .map(|first| {
            let mut acc = Some(identity());
            let mut buf = vec![first];
            visit(&mut buf, n - first, k - 1, &mut |t| {
                acc = Some(visit_one(acc.take().expect("accumulator"), t));
            });
            acc.expect("accumulator")
        })
        .collect();
    partials.into_iter().fold(identity(), combine)
}

fn check_exact_limits(support: usize, n: u64) -> Result<()> {
    if support > MAX_EXACT_ALPHABET {
        return Err(Error::LimitExceeded(format!(
            "support of size {support} exceeds the exact-mode alphabet limit {MAX_EXACT_ALPHABET}; use Monte Carlo"
        )));
    }
    let count = type_count(n, support);
    if count > MAX_EXACT_TYPES {
        return Err(Error::LimitExceeded(format!(
            "{count} empirical types exceed the exact-mode limit {MAX_EXACT_TYPES}; use Monte Carlo"
        )));
    }
    Ok(())
}

fn check_params(n: u64, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("block length n must be >= 1".into()));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!("delta must be finite and >= 0, got {delta}")));
    }
    Ok(())
}

/// Empirical rate `−(1/n) log₂ p_n(xⁿ)` of a type over the support.
fn type_rate(counts: &[u64], ln_p: &[f64], n: u64) -> f64 {
    -counts.iter().zip(ln_p).map(|(&c, &l)| c as f64 * l).sum::<f64>() / (n as f64 * LN_2)
}

fn weak_pred(h: f64, delta: f64) -> impl Fn(&[u64], &[f64], &[f64], u64) -> bool {
    move |counts, _p, ln_p, n| (type_rate(counts, ln_p, n) - h).abs() <= delta + TYPICAL_TOL
}

fn strong_pred(delta: f64) -> impl Fn(&[u64], &[f64], &[f64], u64) -> bool {
    move |counts, p, _ln_p, n| {
        counts.iter().zip(p).all(|(&c, &px)| (px - c as f64 / n as f64).abs() <= delta + TYPICAL_TOL)
    }
}

#[derive(Clone, Copy)]
struct ExactAcc {
    mass: f64,
    atypical: f64,
    log_card: LogSum,
}

fn exact_mass(
    dist: &SourceDistribution,
    n: u64,
    pred: impl Fn(&[u64], &[f64], &[f64], u64) -> bool + Sync,
) -> Result<(ExactAcc, u64)> {
    let p = dist.support();
    check_exact_limits(p.len(), n)?;
    let ln_p: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    let lf = ln_factorials(n);
    let acc = reduce_types(
        n,
        p.len(),
        || ExactAcc { mass: 0.0, atypical: 0.0, log_card: LogSum::EMPTY },
        |mut acc, counts| {
            let ln_count = lf[n as usize] - counts.iter().map(|&c| lf[c as usize]).sum::<f64>();
            let ln_seq: f64 = counts.iter().zip(&ln_p).map(|(&c, &l)| c as f64 * l).sum();
            let mass = (ln_count + ln_seq).exp();
            if pred(counts, &p, &ln_p, n) {
                acc.mass += mass;
                acc.log_card = acc.log_card.add(ln_count);
            } else {
                acc.atypical += mass;
            }
            acc
        },
        |a, b| ExactAcc { mass: a.mass + b.mass, atypical: a.atypical + b.atypical, log_card: a.log_card.merge(b.log_card) },
    );
    Ok((acc, type_count(n, p.len()) as u64))
}

/// Samples `samples` empirical types and counts typical ones. Chunk `i` uses
/// stream `i` of `seed`.
fn monte_carlo_hits(
    dist: &SourceDistribution,
    n: u64,
    samples: u64,
    seed: u64,
    pred: impl Fn(&[u64], &[f64], &[f64], u64) -> bool + Sync,
) -> Result<u64> {
    if samples == 0 {
        return Err(Error::InvalidInput("Monte Carlo needs samples >= 1".into()));
    }
    let p = dist.support();
    let ln_p: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    // conditional probabilities for sequential binomial sampling of the counts
    let mut cond = Vec::with_capacity(p.len());
    let mut rest = 1.0f64;
    for &x in &p {
        cond.push(if rest > 0.0 { (x / rest).clamp(0.0, 1.0) } else { 0.0 });
        rest -= x;
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut r = rng::stream(seed, chunk);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut counts = vec![0u64; p.len()];
            let mut hits = 0;
            for _ in 0..count {
                let mut left = n;
                for (i, &q) in cond.iter().enumerate() {
                    let c = if i + 1 == cond.len() || q >= 1.0 {
                        left
                    } else if left == 0 || q <= 0.0 {
                        0
                    } else {
                        Binomial::new(left, q).expect("valid binomial").sample(&mut r)
                    };
                    counts[i] = c;
                    left -= c;
                }
                if pred(&counts, &p, &ln_p, n) {
                    hits += 1;
                }
            }
            hits
        })
        .collect();
    Ok(hits.into_iter().sum())
}

/// Two-sided Clopper–Pearson interval for `hits` successes in `trials`.
pub fn clopper_pearson(hits: u64, trials: u64, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let (x, n) = (hits as f64, trials as f64);
    let lo = if hits == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).expect("positive shape").inverse_cdf(alpha / 2.0)
    };
    let hi = if hits == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x).expect("positive shape").inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

fn typical_mass(
    dist: &SourceDistribution,
    n: u64,
    delta: f64,
    kind: TypicalKind,
    mode: TypicalityMode,
) -> Result<TypicalReport> {
    check_params(n, delta)?;
    let h = dist.entropy_bits();
    let weak = weak_pred(h, delta);
    let strong = strong_pred(delta);
    let pred = |c: &[u64], p: &[f64], l: &[f64], n: u64| match kind {
        TypicalKind::Weak => weak(c, p, l, n),
        TypicalKind::Strong => strong(c, p, l, n),
    };
    match mode {
        TypicalityMode::Exact => {
            let (acc, types) = exact_mass(dist, n, pred)?;
            let log2_card = acc.log_card.ln().map(|x| x / LN_2);
            Ok(TypicalReport {
                kind,
                n,
                delta,
                mass: acc.mass.min(1.0),
                atypical_mass: acc.atypical.min(1.0),
                log2_cardinality_bound: log2_card,
                cardinality_exact: true,
                tail_error_bound: 0.0,
                report: ModeReport::Exact { types },
            })
        }
        TypicalityMode::MonteCarlo { samples, seed } => {
            let hits = monte_carlo_hits(dist, n, samples, seed, pred)?;
            let (ci_low, ci_high) = clopper_pearson(hits, samples, 0.99);
            let mass = hits as f64 / samples as f64;
            let bound = match kind {
                TypicalKind::Weak => n as f64 * (h + delta),
                TypicalKind::Strong => n as f64 * (dist.support().len() as f64).log2(),
            };
            Ok(TypicalReport {
                kind,
                n,
                delta,
                mass,
                atypical_mass: 1.0 - mass,
                log2_cardinality_bound: Some(bound),
                cardinality_exact: false,
                tail_error_bound: 0.0,
                report: ModeReport::MonteCarlo { samples, seed, hits, ci_low, ci_high, confidence: 0.99 },
            })
        }
    }
}

/// Whether `|−(1/n) log₂ p_n(xⁿ) − H(X)| ≤ δ`. Sequences containing a
/// zero-probability symbol are not typical.
pub fn is_weakly_typical(dist: &SourceDistribution, seq: &[usize], delta: f64) -> Result<bool> {
    check_params(seq.len() as u64, delta)?;
    let mut log2p = 0.0;
    for &x in seq {
        let p = *dist
            .probs
            .get(x)
            .ok_or_else(|| Error::InvalidInput(format!("symbol {x} outside alphabet of size {}", dist.alphabet_size())))?;
        if p == 0.0 {
            return Ok(false);
        }
        log2p += p.log2();
    }
    Ok((-log2p / seq.len() as f64 - dist.entropy_bits).abs() <= delta + TYPICAL_TOL)
}

/// Whether `|p(x) − q(x|xⁿ)| ≤ δ` for every symbol, with `q(x|xⁿ) = 0` required
/// when `p(x) = 0`.
pub fn is_strongly_typical(dist: &SourceDistribution, seq: &[usize], delta: f64) -> Result<bool> {
    check_params(seq.len() as u64, delta)?;
    let mut counts = vec![0u64; dist.alphabet_size()];
    for &x in seq {
        *counts
            .get_mut(x)
            .ok_or_else(|| Error::InvalidInput(format!("symbol {x} outside alphabet of size {}", dist.alphabet_size())))? += 1;
    }
    let n = seq.len() as f64;
    Ok(counts.iter().zip(&dist.probs).all(|(&c, &p)| {
        if p == 0.0 {
            c == 0
        } else {
            (p - c as f64 / n).abs() <= delta + TYPICAL_TOL
        }
    }))
}

/// Probability of the weakly typical set at block length `n`.
pub fn weak_typical_mass(dist: &SourceDistribution, n: u64, delta: f64, mode: TypicalityMode) -> Result<TypicalReport> {
    typical_mass(dist, n, delta, TypicalKind::Weak, mode)
}

/// Probability of the strongly typical set at block length `n`.
pub fn strong_typical_mass(dist: &SourceDistribution, n: u64, delta: f64, mode: TypicalityMode) -> Result<TypicalReport> {
    typical_mass(dist, n, delta, TypicalKind::Strong, mode)
}

/// Weak typicality for a truncated source: the head is renormalized and any
/// sequence touching the tail counts as atypical, so the reported mass is off by
/// at most `n · tail_mass` (union bound).
pub fn weak_typical_mass_truncated(spectrum: &Spectrum, n: u64, delta: f64, mode: TypicalityMode) -> Result<TypicalReport> {
    let (dist, tail) = SourceDistribution::from_truncated(spectrum)?;
    let mut r = weak_typical_mass(&dist, n, delta, mode)?;
    r.tail_error_bound = (n as f64 * tail).min(1.0);
    Ok(r)
}

/// Checks `2^{−n(H+δ)} ≤ p_n(xⁿ) ≤ 2^{−n(H−δ)}` on every weakly typical type.
pub fn aep_bounds_check(dist: &SourceDistribution, n: u64, delta: f64) -> Result<bool> {
    aep_bounds_check_tightened(dist, n, delta, 0.0)
}

/// As [`aep_bounds_check`], but the bounds are tightened by `2^{−n·tighten}` on
/// each side while the typical set stays the one for `delta`.
pub fn aep_bounds_check_tightened(dist: &SourceDistribution, n: u64, delta: f64, tighten: f64) -> Result<bool> {
    check_params(n, delta)?;
    let h = dist.entropy_bits();
    let p = dist.support();
    check_exact_limits(p.len(), n)?;
    let ln_p: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    let nf = n as f64;
    let eff = delta + TYPICAL_TOL - tighten;
    // relative slack 1e-12 on probabilities, in log2 units
    let slack = 1e-12 / LN_2;
    let weak = weak_pred(h, delta);
    let violations = reduce_types(
        n,
        p.len(),
        || 0u64,
        |acc, counts| {
            if !weak(counts, &p, &ln_p, n) {
                return acc;
            }
            let log2p = -nf * type_rate(counts, &ln_p, n);
            let ok = log2p >= -nf * (h + eff) - slack && log2p <= -nf * (h - eff) + slack;
            acc + u64::from(!ok)
        },
        |a, b| a + b,
    );
    Ok(violations == 0)
}
