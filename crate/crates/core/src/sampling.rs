//! Random matrices, states and instruments for property sweeps.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::linalg::{c, CMatrix};
use crate::majorization::ProductKrausInstrument;
use crate::spectra::{PureBipartite, Spectrum};
use crate::{Error, Result};

/// Matrix with i.i.d. standard complex Gaussian entries (`E|z|² = 1`).
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re * s, im * s)
    })
}

/// Haar-random unitary via QR with the phase correction on `R`'s diagonal.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, d, d).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Isometry `V` (`rows × cols`, `rows ≥ cols`) with `V†V = 𝟙`.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Result<CMatrix> {
    if rows < cols {
        return Err(Error::InvalidInput(format!("isometry needs rows >= cols, got {rows}x{cols}")));
    }
    Ok(haar_unitary(rng, rows).columns(0, cols).into_owned())
}

/// `cols` orthonormal vectors in `ℂ^d`, as columns.
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R, d: usize, cols: usize) -> Result<CMatrix> {
    random_isometry(rng, d, cols)
}

/// Uniformly random pure state on `ℂ^{da} ⊗ ℂ^{db}`.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, da: usize, db: usize) -> Result<PureBipartite> {
    PureBipartite::new(gaussian_matrix(rng, da, db))
}

/// Random pure state whose Schmidt rank is at most `rank`.
pub fn random_pure_state_with_rank<R: Rng + ?Sized>(
    rng: &mut R,
    da: usize,
    db: usize,
    rank: usize,
) -> Result<PureBipartite> {
    let rank = rank.clamp(1, da.min(db));
    let amp = gaussian_matrix(rng, da, rank) * gaussian_matrix(rng, rank, db);
    PureBipartite::new(amp)
}

/// Wishart-type PSD matrix `G G†` of rank at most `rank`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> CMatrix {
    let g = gaussian_matrix(rng, d, rank.max(1));
    &g * g.adjoint()
}

/// Random density matrix of rank at most `rank`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> CMatrix {
    let m = random_psd(rng, d, rank);
    let t = crate::linalg::trace(&m).re;
    m.unscale(t)
}

/// Flat-Dirichlet probability vector of length `len`, sorted non-increasing.
pub fn random_spectrum<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Result<Spectrum> {
    if len == 0 {
        return Err(Error::InvalidInput("spectrum length must be >= 1".into()));
    }
    let w: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    let mut v: Vec<f64> = w.iter().map(|x| x / s).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = v.iter().sum();
    v[0] += 1.0 - total;
    Spectrum::new(v, 0.0)
}

/// Kraus operators `{K_i}` on `ℂ^d` with `Σ K_i†K_i = 𝟙`, obtained by cutting a
/// random isometry `ℂ^d → ℂ^{d·outcomes}` into square blocks.
pub fn random_complete_measurement<R: Rng + ?Sized>(rng: &mut R, d: usize, outcomes: usize) -> Result<Vec<CMatrix>> {
    if outcomes == 0 || d == 0 {
        return Err(Error::InvalidInput("measurement needs d >= 1 and outcomes >= 1".into()));
    }
    let v = random_isometry(rng, d * outcomes, d)?;
    Ok((0..outcomes).map(|i| v.rows(i * d, d).into_owned()).collect())
}

/// Product-Kraus instrument realised by `rounds` of alternating local
/// measurements (Alice first), each conditioned on all earlier outcomes. Every
/// branch is a product `L ⊗ M`, and completeness holds exactly in product form.
pub fn random_locc_instrument<R: Rng + ?Sized>(
    rng: &mut R,
    da: usize,
    db: usize,
    outcomes_per_round: usize,
    rounds: usize,
) -> Result<ProductKrausInstrument> {
    let mut pairs = vec![(CMatrix::identity(da, da), CMatrix::identity(db, db))];
    for round in 0..rounds {
        let alice = round % 2 == 0;
        let mut next = Vec::with_capacity(pairs.len() * outcomes_per_round);
        for (l, m) in pairs {
            let d = if alice { da } else { db };
            for k in random_complete_measurement(rng, d, outcomes_per_round)? {
                next.push(if alice { (&k * &l, m.clone()) } else { (l.clone(), &k * &m) });
            }
        }
        pairs = next;
    }
    ProductKrausInstrument::new(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, identity};
    use crate::rng;

    #[test]
    fn unitary_and_isometry() {
        let mut r = rng::stream(1, 0);
        for d in [1, 2, 5, 9] {
            let u = haar_unitary(&mut r, d);
            assert!(frobenius(&(u.adjoint() * &u - identity(d))) < 1e-12);
        }
        let v = random_isometry(&mut r, 7, 3).unwrap();
        assert!(frobenius(&(v.adjoint() * &v - identity(3))) < 1e-12);
        assert!(random_isometry(&mut r, 2, 3).is_err());
    }

    #[test]
    fn measurements_are_complete() {
        let mut r = rng::stream(2, 0);
        let ks = random_complete_measurement(&mut r, 4, 3).unwrap();
        let sum = ks.iter().fold(CMatrix::zeros(4, 4), |acc, k| acc + k.adjoint() * k);
        assert!(frobenius(&(sum - identity(4))) < 1e-12);
    }

    #[test]
    fn locc_instruments_are_complete() {
        let mut r = rng::stream(3, 0);
        for rounds in 1..=3 {
            let inst = random_locc_instrument(&mut r, 3, 2, 2, rounds).unwrap();
            assert_eq!(inst.len(), 1 << rounds);
            assert!(inst.completeness_defect() < 1e-10);
        }
    }

    #[test]
    fn states_and_spectra() {
        let mut r = rng::stream(4, 0);
        let psi = random_pure_state_with_rank(&mut r, 4, 5, 2).unwrap();
        assert!(psi.schmidt().values().iter().skip(2).all(|&x| x < 1e-12));
        let rho = random_density(&mut r, 4, 2);
        assert!((crate::linalg::trace(&rho).re - 1.0).abs() < 1e-12);
        let s = random_spectrum(&mut r, 6).unwrap();
        assert!(s.is_normalized());
        assert!(random_spectrum(&mut r, 0).is_err());
    }
}
