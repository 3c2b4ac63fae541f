//! Scalar entropy functionals on spectra.
//!
//! Conventions: `0·log 0 = 0`; all public outputs are in bits. Tail sums are
//! stored 0-indexed: `tails[k]` is the total mass minus the `k` largest values,
//! so `chi_tilde(s, 0)` is the trace.

use serde::{Deserialize, Serialize};

use crate::spectra::{Spectrum, STATE_TOL};
use crate::{Error, Result};

pub const LN_2: f64 = std::f64::consts::LN_2;

#[inline]
pub fn nats_to_bits(x: f64) -> f64 {
    x / LN_2
}

#[inline]
pub fn bits_to_nats(x: f64) -> f64 {
    x * LN_2
}

/// `-x log₂ x` with the `0 log 0 = 0` convention.
#[inline]
pub fn eta_bits(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

/// `−Σ p log₂ p` over raw values, no validation.
pub fn shannon_bits(values: &[f64]) -> f64 {
    values.iter().map(|&p| eta_bits(p)).sum()
}

/// An entropy value that may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bits {
    Finite(f64),
    Infinite,
}

impl Bits {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bits::Finite(x) => Some(x),
            Bits::Infinite => None,
        }
    }
}

/// Entropy of the resolved part of a spectrum, plus what the tail could add.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub entropy_bits: f64,
    pub tail_uncertainty_bits: Bits,
}

/// `S = −Σ p log₂ p` over the resolved values.
pub fn von_neumann_entropy(spectrum: &Spectrum) -> Result<f64> {
    if spectrum.values().iter().any(|&v| v < -STATE_TOL) {
        return Err(Error::InvalidInput("negative eigenvalue".into()));
    }
    Ok(shannon_bits(spectrum.values()))
}

/// Entropy with the tail contribution reported separately. `tail_levels` is the
/// number of levels the tail mass may occupy; without it the tail is unbounded.
pub fn entropy_report(spectrum: &Spectrum, tail_levels: Option<u64>) -> Result<EntropyReport> {
    let entropy_bits = von_neumann_entropy(spectrum)?;
    let t = spectrum.tail_mass();
    let tail_uncertainty_bits = if t == 0.0 {
        Bits::Finite(0.0)
    } else {
        match tail_levels {
            Some(m) if m > 0 => Bits::Finite((t * ((m as f64) / t).log2()).max(0.0)),
            _ => Bits::Infinite,
        }
    };
    Ok(EntropyReport { entropy_bits, tail_uncertainty_bits })
}

/// `h₂(x) = −x log₂ x − (1−x) log₂(1−x)` on `[0, 1]`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary entropy needs x in [0,1], got {x}")));
    }
    Ok(eta_bits(x) + eta_bits(1.0 - x))
}

/// `g(x) = (x+1) log₂(x+1) − x log₂ x` on `[0, ∞)`. This is the entropy in bits of
/// a geometric distribution with mean `x`.
pub fn g_function(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("g needs finite x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // (x+1)log(x+1) - x log x = log(x+1) + x log(1 + 1/x)
    Ok(((x + 1.0).ln() + x * (1.0 / x).ln_1p()) / LN_2)
}

/// Suffix sums of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSumTable {
    spectrum: Spectrum,
    tails: Vec<f64>,
}

impl TailSumTable {
    pub fn new(spectrum: &Spectrum) -> Self {
        let v = spectrum.values();
        let mut tails = vec![0.0; v.len() + 1];
        tails[v.len()] = spectrum.tail_mass();
        for k in (0..v.len()).rev() {
            tails[k] = tails[k + 1] + v[k];
        }
        Self { spectrum: spectrum.clone(), tails }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn tails(&self) -> &[f64] {
        &self.tails
    }

    /// `tails[k]`, with `tail_mass` for `k` past the resolved length.
    pub fn get(&self, k: usize) -> f64 {
        self.tails.get(k).copied().unwrap_or(self.spectrum.tail_mass())
    }

    /// `inf_{k ≥ 0} { tails[k] + k μ }` by direct scan.
    pub fn lower_envelope(&self, mu: f64) -> f64 {
        self.tails.iter().enumerate().map(|(k, &t)| t + k as f64 * mu).fold(f64::INFINITY, f64::min)
    }
}

/// Total mass minus the `n` largest values; `chi_tilde(s, 0)` is the trace.
pub fn chi_tilde(spectrum: &Spectrum, n: usize) -> f64 {
    TailSumTable::new(spectrum).get(n)
}

fn require_finite_normalized(spectrum: &Spectrum) -> Result<Vec<f64>> {
    if spectrum.tail_mass() != 0.0 {
        return Err(Error::InvalidInput("integral representation needs a fully resolved spectrum (tail_mass = 0)".into()));
    }
    let s: f64 = spectrum.values().iter().sum();
    if (s - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidInput(format!("spectrum sums to {s}, expected 1")));
    }
    Ok(spectrum.trimmed().values().to_vec())
}

/// Summation-by-parts form of the integral representation:
/// `(1/ln2) (Σ_{n≥0} [ n (p_n − p_{n+1}) + tails[n] ln(p_n / p_{n+1}) ] − 1)`
/// with 1-indexed `p_1 ≥ p_2 ≥ …`, `p_0 := 1`, and `tails[n] = Σ_{m>n} p_m`.
pub fn entropy_integral_closed_form(spectrum: &Spectrum) -> Result<f64> {
    let v = require_finite_normalized(spectrum)?;
    let table = TailSumTable::new(&Spectrum::new(v.clone(), 0.0)?);
    let len = v.len();
    let p = |n: usize| -> f64 {
        match n {
            0 => 1.0,
            n if n <= len => v[n - 1],
            _ => 0.0,
        }
    };
    let mut sum = 0.0;
    for n in 0..=len {
        let (hi, lo) = (p(n), p(n + 1));
        sum += n as f64 * (hi - lo);
        let t = table.get(n);
        if t > 0.0 {
            sum += t * (hi / lo).ln();
        }
    }
    Ok((sum - 1.0) / LN_2)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            return (vec![0.0], vec![2.0]);
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Numerical evaluation of `∫₀¹ (dμ/μ) inf_k { tails[k] + k μ }`, converted to bits.
///
/// The domain is split at the eigenvalues, where the minimizing `k` changes.
/// Each piece `[p_{n+1}, p_n]` is integrated in `t = ln μ` with `grid_size`
/// Gauss–Legendre nodes per unit of `t`; the envelope is evaluated by scanning
/// every `k` at each node. The last piece `[0, p_L]` has a constant integrand.
pub fn entropy_integral_quadrature(spectrum: &Spectrum, grid_size: usize) -> Result<f64> {
    let v = require_finite_normalized(spectrum)?;
    let table = TailSumTable::new(&Spectrum::new(v.clone(), 0.0)?);
    let (nodes, weights) = gauss_legendre(grid_size.max(1));
    let mut total = 0.0;
    let mut upper = 1.0f64;
    for &lower in &v {
        if lower < upper {
            let (a, b) = (lower.ln(), upper.ln());
            let pieces = (b - a).ceil().max(1.0) as usize;
            let h = (b - a) / pieces as f64;
            for s in 0..pieces {
                let (lo, hi) = (a + s as f64 * h, a + (s + 1) as f64 * h);
                let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                // dμ/μ = dt
                total += half
                    * nodes
                        .iter()
                        .zip(&weights)
                        .map(|(&x, &w)| w * table.lower_envelope((mid + half * x).exp()))
                        .sum::<f64>();
            }
        }
        upper = lower;
    }
    if upper > 0.0 {
        let half = 0.5 * upper;
        total += half
            * nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &w)| {
                    let mu = half + half * x;
                    w * table.lower_envelope(mu) / mu
                })
                .sum::<f64>();
    }
    Ok((total - 1.0) / LN_2)
}
