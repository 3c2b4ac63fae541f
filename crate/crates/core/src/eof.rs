//! Entanglement of formation: exact for pure states, upper bounds for mixed states.
//!
//! Every size-`m` decomposition `ρ = Σ_j ψ̃_j ψ̃_j†` (unnormalized `ψ̃_j`) is
//! `ψ̃_j = Σ_i U_ji √λ_i e_i` for an `m × r` isometry `U` acting on the
//! purification ancilla. The search moves through that set with two-level
//! unitary rotations of pairs of decomposition vectors, which leave `Σ ψ̃ψ̃†`
//! unchanged: annealed random rotations first, then golden-section sweeps.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::eta_bits;
use crate::linalg::{self, c, CMatrix};
use crate::rng;
use crate::sampling;
use crate::spectra::{trace_distance, BipartiteState, Ensemble, Member, PureBipartite};
use crate::{Error, Result};

pub const MAX_RANK: usize = 16;
pub const MAX_PROBE_DIM: usize = 256;
const RANK_TOL: f64 = 1e-13;
const DROP_WEIGHT: f64 = 1e-15;

/// `S(ψ_A)` in bits.
pub fn eof_pure(psi: &PureBipartite) -> f64 {
    psi.entanglement_entropy()
}

/// `Σ p(x) S(ψ_x^A)` over a pure-member ensemble: the cost of preparing each
/// member by pure-state dilution.
pub fn dilution_rate_upper_bound(decomposition: &Ensemble) -> Result<f64> {
    decomposition
        .iter()
        .map(|(w, m)| {
            m.as_pure()
                .map(|p| w * p.entanglement_entropy())
                .ok_or_else(|| Error::InvalidInput("rate bound needs pure ensemble members".into()))
        })
        .sum()
}

/// Search budget for [`eof_estimate_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EofOptions {
    pub ensemble_size: usize,
    pub restarts: usize,
    pub seed: u64,
    pub anneal_sweeps: usize,
    pub polish_sweeps: usize,
}

impl EofOptions {
    pub fn new(ensemble_size: usize, restarts: usize, seed: u64) -> Self {
        Self { ensemble_size, restarts, seed, anneal_sweeps: 40, polish_sweeps: 12 }
    }
}

/// Best decomposition found; `upper_bound_bits ≥ E_f(ρ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EofEstimate {
    pub upper_bound_bits: f64,
    pub decomposition: Ensemble,
    pub restarts: usize,
    pub ensemble_size: usize,
    /// Final polishing sweep improved the objective by less than `1e-12`.
    pub converged: bool,
    /// Best value reached by each restart.
    pub restart_values: Vec<f64>,
    /// Trace distance between the decomposition average and `ρ`.
    pub reconstruction_error: f64,
}

/// `p·S(ψ^A)` for an unnormalized amplitude matrix with `p = ‖ψ‖²`.
fn weighted_entropy(a: &CMatrix) -> f64 {
    let gram = if a.nrows() <= a.ncols() { a * a.adjoint() } else { a.adjoint() * a };
    let vals = linalg::eigvalsh(&gram);
    let p: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    if p <= 0.0 {
        return 0.0;
    }
    p * vals.iter().map(|&v| eta_bits((v / p).clamp(0.0, 1.0))).sum::<f64>()
}

fn rotate(vj: &CMatrix, vk: &CMatrix, theta: f64, phi: f64) -> (CMatrix, CMatrix) {
    let (s, co) = theta.sin_cos();
    let e = c(phi.cos(), phi.sin());
    (vj.scale(co) - vk * (e * s), vj * (e.conj() * s) + vk.scale(co))
}

struct Search {
    vecs: Vec<CMatrix>,
    terms: Vec<f64>,
}

impl Search {
    fn new(vecs: Vec<CMatrix>) -> Self {
        let terms = vecs.iter().map(weighted_entropy).collect();
        Self { vecs, terms }
    }

    fn value(&self) -> f64 {
        self.terms.iter().sum()
    }

    fn pair_value(&self, j: usize, k: usize, theta: f64, phi: f64) -> (f64, CMatrix, CMatrix, f64, f64) {
        let (a, b) = rotate(&self.vecs[j], &self.vecs[k], theta, phi);
        let (ta, tb) = (weighted_entropy(&a), weighted_entropy(&b));
        (ta + tb - self.terms[j] - self.terms[k], a, b, ta, tb)
    }

    fn commit(&mut self, j: usize, k: usize, a: CMatrix, b: CMatrix, ta: f64, tb: f64) {
        self.vecs[j] = a;
        self.vecs[k] = b;
        self.terms[j] = ta;
        self.terms[k] = tb;
    }

    fn anneal(&mut self, r: &mut rng::StreamRng, sweeps: usize, best: &mut (f64, Vec<CMatrix>)) {
        let m = self.vecs.len();
        if m < 2 {
            return;
        }
        let t0 = 0.05 * self.value() + 1e-3;
        for sweep in 0..sweeps {
            let frac = sweep as f64 / sweeps.max(1) as f64;
            let temp = t0 * (1e-6f64).powf(frac);
            let step = 0.6 * (0.02f64).powf(frac);
            for j in 0..m {
                for k in j + 1..m {
                    let z: f64 = StandardNormal.sample(r);
                    let theta = step * z;
                    let phi = r.random_range(0.0..2.0 * PI);
                    let (delta, a, b, ta, tb) = self.pair_value(j, k, theta, phi);
                    if delta < 0.0 || r.random::<f64>() < (-delta / temp).exp() {
                        self.commit(j, k, a, b, ta, tb);
                        let v = self.value();
                        if v < best.0 {
                            *best = (v, self.vecs.clone());
                        }
                    }
                }
            }
        }
    }

    /// Golden-section minimization over the rotation angle for a few phases on
    /// every pair. Returns the total improvement.
    fn polish_sweep(&mut self) -> f64 {
        let m = self.vecs.len();
        let before = self.value();
        for j in 0..m {
            for k in j + 1..m {
                for phi in [0.0, FRAC_PI_2, PI / 4.0, -PI / 4.0] {
                    let f = |t: f64| self.pair_value(j, k, t, phi).0;
                    let theta = golden_section(f, -FRAC_PI_2, FRAC_PI_2, 40);
                    let (delta, a, b, ta, tb) = self.pair_value(j, k, theta, phi);
                    if delta < -1e-15 {
                        self.commit(j, k, a, b, ta, tb);
                    }
                }
            }
        }
        before - self.value()
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let (xm, fm) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    // never return a worse angle than doing nothing
    if fm < f(0.0) {
        xm
    } else {
        0.0
    }
}

/// `√λ_i e_i` for the non-negligible eigenpairs of `ρ`, as amplitude matrices.
fn eigen_vectors(rho: &BipartiteState) -> Vec<CMatrix> {
    let (vals, vecs) = linalg::eigh(rho.matrix());
    vals.iter()
        .enumerate()
        .filter(|(_, &v)| v > RANK_TOL)
        .map(|(i, &v)| linalg::unvec_row_major(&vecs.column(i).scale(v.sqrt()), rho.dim_a(), rho.dim_b()))
        .collect()
}

fn pad(mut vecs: Vec<CMatrix>, m: usize, da: usize, db: usize) -> Vec<CMatrix> {
    while vecs.len() < m {
        vecs.push(CMatrix::zeros(da, db));
    }
    vecs
}

fn decomposition_density(vecs: &[CMatrix]) -> CMatrix {
    let d = vecs[0].nrows() * vecs[0].ncols();
    let mut acc = CMatrix::zeros(d, d);
    for v in vecs {
        acc += linalg::projector(&linalg::vec_row_major(v));
    }
    acc
}

fn to_ensemble(vecs: &[CMatrix]) -> Result<Ensemble> {
    let mut weights = Vec::new();
    let mut members = Vec::new();
    for v in vecs {
        let p = v.norm_squared();
        if p > DROP_WEIGHT {
            weights.push(p);
            members.push(Member::Pure(PureBipartite::new(v.clone())?));
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ensemble::new(weights, members)
}

struct RestartResult {
    value: f64,
    vecs: Vec<CMatrix>,
    converged: bool,
}

fn run_restart(start: Vec<CMatrix>, opts: &EofOptions, stream: u64) -> RestartResult {
    let mut r = rng::stream(opts.seed, stream);
    let mut search = Search::new(start);
    let mut best = (search.value(), search.vecs.clone());
    search.anneal(&mut r, opts.anneal_sweeps, &mut best);
    let mut search = Search::new(best.1.clone());
    let mut converged = opts.polish_sweeps == 0;
    for _ in 0..opts.polish_sweeps {
        let gain = search.polish_sweep();
        if gain < 1e-12 {
            converged = true;
            break;
        }
    }
    let v = search.value();
    if v < best.0 {
        best = (v, search.vecs);
    }
    RestartResult { value: best.0, vecs: best.1, converged }
}

/// Convex-roof upper bound with default sweep budget.
pub fn eof_estimate(rho: &BipartiteState, ensemble_size: usize, restarts: usize, seed: u64) -> Result<EofEstimate> {
    eof_estimate_with(rho, &EofOptions::new(ensemble_size, restarts, seed), None)
}

/// Convex-roof upper bound. Restart 0 starts from the eigen-decomposition (or
/// from `warm_start` when given, which must decompose `ρ`); the others start
/// from Haar-random isometries on the ancilla.
pub fn eof_estimate_with(rho: &BipartiteState, opts: &EofOptions, warm_start: Option<&[CMatrix]>) -> Result<EofEstimate> {
    let (da, db) = (rho.dim_a(), rho.dim_b());
    let eig = eigen_vectors(rho);
    let rank = eig.len();
    if rank > MAX_RANK {
        return Err(Error::LimitExceeded(format!("rank {rank} exceeds the estimator limit {MAX_RANK}")));
    }
    if opts.ensemble_size < rank {
        return Err(Error::InvalidInput(format!(
            "ensemble_size {} is below rank {rank}",
            opts.ensemble_size
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidInput("restarts must be >= 1".into()));
    }
    let m = match warm_start {
        Some(w) => opts.ensemble_size.max(w.len()),
        None => opts.ensemble_size,
    };
    if let Some(w) = warm_start {
        if w.is_empty() || w.iter().any(|v| v.shape() != (da, db)) {
            return Err(Error::DimensionMismatch("warm start vectors have the wrong shape".into()));
        }
        let err = trace_distance(&decomposition_density(w), rho.matrix())?;
        if err > 1e-9 {
            return Err(Error::InvalidInput(format!("warm start does not decompose the state (distance {err:.3e})")));
        }
    }

    let results: Vec<RestartResult> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let start = if i == 0 {
                pad(warm_start.map_or_else(|| eig.clone(), |w| w.to_vec()), m, da, db)
            } else {
                let mut r = rng::stream(rng::child_seed(opts.seed, 1), i as u64);
                let u = sampling::random_isometry(&mut r, m, rank).expect("m >= rank");
                (0..m)
                    .map(|j| (0..rank).fold(CMatrix::zeros(da, db), |acc, k| acc + &eig[k] * u[(j, k)]))
                    .collect()
            };
            run_restart(start, opts, i as u64)
        })
        .collect();

    let restart_values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let best_idx = restart_values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v < restart_values[b] { i } else { b });
    let best = &results[best_idx];
    let reconstruction_error = trace_distance(&decomposition_density(&best.vecs), rho.matrix())?;
    if reconstruction_error > 1e-9 {
        return Err(Error::Invariant(format!("decomposition drifted from the state by {reconstruction_error:.3e}")));
    }
    Ok(EofEstimate {
        upper_bound_bits: best.value.max(0.0),
        decomposition: to_ensemble(&best.vecs)?,
        restarts: opts.restarts,
        ensemble_size: m,
        converged: best.converged,
        restart_values,
        reconstruction_error,
    })
}

fn ensemble_vectors(e: &Ensemble) -> Vec<CMatrix> {
    e.iter()
        .map(|(w, m)| m.as_pure().expect("estimator decompositions are pure").amplitudes().scale(w.sqrt()))
        .collect()
}

/// `E_f(ρ^{⊗n})/n` upper bounds for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizedProbe {
    pub per_copy_bits: Vec<f64>,
    pub estimates: Vec<EofEstimate>,
}

/// The two-copy search is warm-started from the product of the best one-copy
/// decomposition, so its bound never exceeds twice the one-copy bound.
pub fn regularized_probe(rho: &BipartiteState, n_max: usize, opts: &EofOptions) -> Result<RegularizedProbe> {
    if !(1..=2).contains(&n_max) {
        return Err(Error::InvalidInput(format!("n_max must be 1 or 2, got {n_max}")));
    }
    let d = rho.dim_a() * rho.dim_b();
    if d.pow(n_max as u32) > MAX_PROBE_DIM {
        return Err(Error::LimitExceeded(format!("dimension {}^{n_max} exceeds {MAX_PROBE_DIM}", d)));
    }
    let one = eof_estimate_with(rho, opts, None)?;
    let mut per_copy_bits = vec![one.upper_bound_bits];
    let mut estimates = vec![one];
    if n_max == 2 {
        let v = ensemble_vectors(&estimates[0].decomposition);
        let warm: Vec<CMatrix> = v.iter().flat_map(|x| v.iter().map(move |y| x.kronecker(y))).collect();
        let two_state = rho.tensor(rho);
        let mut o2 = opts.clone();
        o2.ensemble_size = o2.ensemble_size.max(warm.len());
        o2.seed = rng::child_seed(opts.seed, 2);
        let two = eof_estimate_with(&two_state, &o2, Some(&warm))?;
        per_copy_bits.push(two.upper_bound_bits / 2.0);
        estimates.push(two);
    }
    Ok(RegularizedProbe { per_copy_bits, estimates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::shannon_bits;
    use crate::linalg::CVector;

    fn diag_state(p: &[f64], da: usize, db: usize) -> BipartiteState {
        let m = CMatrix::from_diagonal(&CVector::from_iterator(p.len(), p.iter().map(|&x| c(x, 0.0))));
        BipartiteState::new(da, db, m).unwrap()
    }

    fn werner(p: f64) -> BipartiteState {
        let phi = PureBipartite::ebit().to_state();
        let m = phi.matrix().scale(p) + linalg::identity(4).scale((1.0 - p) / 4.0);
        BipartiteState::new(2, 2, m).unwrap()
    }

    #[test]
    fn pure_values() {
        assert!((eof_pure(&PureBipartite::ebit()) - 1.0).abs() < 1e-15);
        assert!(eof_pure(&PureBipartite::product_basis(2, 3, 1, 2).unwrap()).abs() < 1e-15);
        let psi = PureBipartite::from_schmidt_coefficients(&[0.8, 0.2]).unwrap();
        let h = -(0.8f64 * 0.8f64.log2() + 0.2 * 0.2f64.log2());
        assert!((eof_pure(&psi) - h).abs() < 1e-12);
        assert!((eof_pure(&psi) - 0.721928).abs() < 1e-6);
    }

    #[test]
    fn rate_bound_examples() {
        let e = Ensemble::pure(vec![1.0], vec![PureBipartite::ebit()]).unwrap();
        assert!((dilution_rate_upper_bound(&e).unwrap() - 1.0).abs() < 1e-12);
        let prod = Ensemble::pure(
            vec![0.5, 0.5],
            vec![PureBipartite::product_basis(2, 2, 0, 0).unwrap(), PureBipartite::product_basis(2, 2, 1, 1).unwrap()],
        )
        .unwrap();
        assert!(dilution_rate_upper_bound(&prod).unwrap().abs() < 1e-12);
        let half = Ensemble::pure(vec![0.5, 0.5], vec![PureBipartite::ebit(), PureBipartite::product_basis(2, 2, 0, 0).unwrap()]).unwrap();
        assert!((dilution_rate_upper_bound(&half).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn estimator_on_pure_and_ebit() {
        let e = eof_estimate(&PureBipartite::ebit().to_state(), 2, 3, 1).unwrap();
        assert!((e.upper_bound_bits - 1.0).abs() < 1e-6);
        let mut r = rng::stream(21, 0);
        for _ in 0..5 {
            let psi = sampling::random_pure_state(&mut r, 3, 2).unwrap();
            let e = eof_estimate(&psi.to_state(), 2, 2, 2).unwrap();
            assert!((e.upper_bound_bits - eof_pure(&psi)).abs() < 1e-6);
        }
    }

    #[test]
    fn separable_diagonal_mixtures() {
        for p in [0.5, 0.3] {
            let rho = diag_state(&[p, 0.0, 0.0, 1.0 - p], 2, 2);
            let e = eof_estimate(&rho, 4, 3, 5).unwrap();
            assert!(e.upper_bound_bits <= 1e-6, "p={p}: {}", e.upper_bound_bits);
            assert!(e.reconstruction_error <= 1e-9);
        }
    }

    #[test]
    fn werner_bounds_are_consistent() {
        let rho = werner(0.8);
        let e = eof_estimate(&rho, 8, 4, 9).unwrap();
        let sa = shannon_bits(rho.local_spectrum(crate::spectra::Subsystem::A).values());
        assert!(e.upper_bound_bits <= sa + 1e-8);
        // Wootters: C = (3p-1)/2 = 0.7, E_f = h((1+√(1-C²))/2) ≈ 0.5813
        let cc: f64 = 0.7;
        let x = (1.0 + (1.0 - cc * cc).sqrt()) / 2.0;
        let exact = -(x * x.log2() + (1.0 - x) * (1.0 - x).log2());
        assert!(e.upper_bound_bits >= exact - 1e-9);
        assert!(e.upper_bound_bits <= exact + 2e-2, "{} vs {exact}", e.upper_bound_bits);
        let ens_avg = crate::spectra::ensemble_average(&e.decomposition).unwrap();
        assert!(trace_distance(ens_avg.matrix(), rho.matrix()).unwrap() < 1e-9);
    }

    #[test]
    fn restart_values_are_deterministic() {
        let rho = werner(0.6);
        let a = eof_estimate(&rho, 6, 3, 4).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| eof_estimate(&rho, 6, 3, 4).unwrap());
        assert_eq!(a.restart_values, b.restart_values);
        assert_eq!(a.upper_bound_bits, b.upper_bound_bits);
        // a prefix of the restart schedule gives the same per-restart values
        let c = eof_estimate(&rho, 6, 2, 4).unwrap();
        assert_eq!(&a.restart_values[..2], &c.restart_values[..]);
        assert!(a.upper_bound_bits <= c.upper_bound_bits);
    }

    #[test]
    fn errors() {
        let rho = werner(0.5);
        assert!(eof_estimate(&rho, 3, 1, 0).is_err());
        assert!(eof_estimate(&rho, 4, 0, 0).is_err());
        assert!(regularized_probe(&rho, 3, &EofOptions::new(4, 1, 0)).is_err());
        let big = BipartiteState::new(3, 3, linalg::identity(9).unscale(9.0)).unwrap();
        assert!(matches!(regularized_probe(&big, 2, &EofOptions::new(9, 1, 0)), Err(Error::LimitExceeded(_))));
    }

    #[test]
    fn regularized_probe_is_subadditive() {
        let mut opts = EofOptions::new(4, 2, 3);
        opts.anneal_sweeps = 10;
        opts.polish_sweeps = 3;
        let p = regularized_probe(&PureBipartite::ebit().to_state(), 2, &opts).unwrap();
        assert!((p.per_copy_bits[0] - 1.0).abs() < 1e-6 && (p.per_copy_bits[1] - 1.0).abs() < 1e-6);
        let p = regularized_probe(&werner(0.7), 2, &opts).unwrap();
        assert!(p.per_copy_bits[1] <= p.per_copy_bits[0] + 1e-6);
        let sep = diag_state(&[0.5, 0.0, 0.0, 0.5], 2, 2);
        let p = regularized_probe(&sep, 2, &opts).unwrap();
        assert!(p.per_copy_bits.iter().all(|&v| v <= 1e-6));
    }
}
