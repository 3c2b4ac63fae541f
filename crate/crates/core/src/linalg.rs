//! Dense complex linear algebra shared by the state types.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Hermitian eigendecomposition with eigenvalues sorted non-increasing.
/// Column `i` of the returned matrix is the eigenvector of `values[i]`.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = hermitian_part(m);
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues only, sorted non-increasing.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entry-wise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Thin SVD `m = U diag(σ) V†` with `σ` sorted non-increasing.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    /// `k × cols` with orthonormal rows.
    pub v_adjoint: CMatrix,
}

const JACOBI_SWEEPS: usize = 60;

/// One-sided (Hestenes) Jacobi SVD. Column pairs are rotated until every pair is
/// orthogonal to working precision, which keeps small singular values accurate.
pub fn svd(m: &CMatrix) -> Svd {
    let (rows, cols) = m.shape();
    if rows < cols {
        let t = svd(&m.adjoint());
        return Svd { u: t.v_adjoint.adjoint(), sigma: t.sigma, v_adjoint: t.u.adjoint() };
    }
    let mut g = m.clone();
    let mut v = identity(cols);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dotc(&g.column(q));
                let gnorm = gamma.norm();
                if gnorm == 0.0 || gnorm <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.unscale(gnorm).conj();
                let zeta = (beta - alpha) / (2.0 * gnorm);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut g, &mut v] {
                    for i in 0..mat.nrows() {
                        let a = mat[(i, p)];
                        let b = mat[(i, q)] * phase;
                        mat[(i, p)] = a.scale(cs) - b.scale(sn);
                        mat[(i, q)] = a.scale(sn) + b.scale(cs);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| g.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = CMatrix::zeros(rows, cols);
    let mut v_sorted = CMatrix::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    let scale = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut filled = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        sigma.push(norms[src]);
        v_sorted.set_column(dst, &v.column(src));
        if norms[src] > 1e-300 && norms[src] > scale * 1e-14 {
            u.set_column(dst, &g.column(src).unscale(norms[src]));
            filled.push(dst);
        }
    }
    complete_orthonormal(&mut u, &filled);
    Svd { u, sigma, v_adjoint: v_sorted.adjoint() }
}

/// Fills the columns of `u` not listed in `filled` with unit vectors orthogonal
/// to every other column.
fn complete_orthonormal(u: &mut CMatrix, filled: &[usize]) {
    let (rows, cols) = u.shape();
    let mut done: Vec<usize> = filled.to_vec();
    let mut basis = 0;
    for j in (0..cols).filter(|j| !filled.contains(j)) {
        while basis < rows {
            let mut cand = CVector::zeros(rows);
            cand[basis] = ONE;
            basis += 1;
            for _ in 0..2 {
                for &k in &done {
                    let proj = u.column(k).dotc(&cand);
                    cand -= u.column(k) * proj;
                }
            }
            let n = cand.norm();
            if n > 1e-8 {
                u.set_column(j, &cand.unscale(n));
                done.push(j);
                break;
            }
        }
    }
}

/// Singular values, sorted non-increasing.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    svd(m).sigma
}

/// Operator norm of a Hermitian matrix (largest |eigenvalue|).
pub fn hermitian_operator_norm(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// `m^{-1/2}` for a positive definite matrix.
pub fn inverse_sqrt_pd(m: &CMatrix) -> Option<CMatrix> {
    let (vals, vecs) = eigh(m);
    if vals.iter().any(|&v| v <= 1e-300) {
        return None;
    }
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| c(1.0 / v.sqrt(), 0.0)),
    ));
    Some(&vecs * d * vecs.adjoint())
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outer product `|v⟩⟨v|`.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Row-major vectorisation of an amplitude matrix: index `i * cols + j`.
pub fn vec_row_major(m: &CMatrix) -> CVector {
    let (r, c) = m.shape();
    CVector::from_iterator(r * c, (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|ij| m[ij]))
}

/// Inverse of [`vec_row_major`].
pub fn unvec_row_major(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unitary_defect(m: &CMatrix) -> f64 {
        frobenius(&(m.adjoint() * m - identity(m.ncols())))
    }

    #[test]
    fn jacobi_svd_on_degenerate_inputs() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..600 {
            let (r, k) = (1 + trial % 6, 1 + (trial / 6) % 6);
            let mut m = crate::sampling::gaussian_matrix(&mut rng, r, k);
            if trial % 3 == 0 && k > 1 {
                let c0 = m.column(0).into_owned();
                m.set_column(1, &c0);
            }
            if trial % 5 == 0 {
                m.row_mut(0).scale_mut(1e-9);
            }
            if trial % 7 == 0 {
                m.column_mut(0).scale_mut(1e-12);
            }
            let d = svd(&m);
            let sigma = CMatrix::from_diagonal(&CVector::from_iterator(d.sigma.len(), d.sigma.iter().map(|&s| c(s, 0.0))));
            let err = frobenius(&(&d.u * sigma * &d.v_adjoint - &m));
            assert!(err < 1e-13 * frobenius(&m).max(1.0), "{r}x{k}: {err:e}");
            assert!(unitary_defect(&d.u) < 1e-12);
            assert!(unitary_defect(&d.v_adjoint.adjoint()) < 1e-12);
            assert!(d.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_of_zero_matrix_has_orthonormal_factors() {
        let d = svd(&CMatrix::zeros(3, 2));
        assert_eq!(d.sigma, vec![0.0, 0.0]);
        assert!(unitary_defect(&d.u) < 1e-15);
    }

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.0, 1.0),
                c(0.5, 0.0),
                c(0.0, -1.0),
                c(3.0, 0.0),
                c(0.0, 0.0),
                c(0.5, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
            ],
        );
        let (vals, vecs) = eigh(&m);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let d = CMatrix::from_diagonal(&CVector::from_iterator(3, vals.iter().map(|&v| c(v, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!(frobenius(&(back - m)) < 1e-12);
    }

    #[test]
    fn vec_roundtrip() {
        let m = CMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        assert_eq!(unvec_row_major(&vec_row_major(&m), 2, 3), m);
        assert_eq!(vec_row_major(&m)[4], m[(1, 1)]);
    }

    #[test]
    fn inverse_sqrt_rejects_singular() {
        let mut m = identity(2);
        m[(1, 1)] = ZERO;
        assert!(inverse_sqrt_pd(&m).is_none());
        let m = identity(2).scale(4.0);
        let r = inverse_sqrt_pd(&m).unwrap();
        assert!((r[(0, 0)].re - 0.5).abs() < 1e-14);
    }
}
