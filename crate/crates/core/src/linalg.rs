//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Left singular system of `m` (`n × c`): an orthogonal `n × n` matrix and the
/// `n` singular values, nonincreasing and padded with zeros when `c < n`.
///
/// Each left singular vector is signed so that its largest-magnitude entry is
/// positive. Missing columns (rank-deficient or wide-short cases) are filled
/// with an orthonormal completion.
pub fn left_singular_system(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = m.nrows();
    let svd = m.clone().svd(true, false);
    let u_thin = svd.u.expect("left vectors requested");
    let k = svd.singular_values.len();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut u = DMatrix::zeros(n, n);
    let mut sigma = vec![0.0; n];
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_thin.column(src));
        sigma[dst] = svd.singular_values[src].max(0.0);
    }
    if k < n {
        complete_basis(&mut u, k);
    }
    for j in 0..n {
        fix_column_sign(&mut u, j);
    }
    (u, sigma)
}

/// Singular values of `m`, nonincreasing.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().map(|v| v.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Thin SVD `m = U diag(s) Vᵀ` with singular values nonincreasing.
pub fn thin_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v requested");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut us = DMatrix::zeros(u.nrows(), k);
    let mut vts = DMatrix::zeros(k, vt.ncols());
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        us.set_column(dst, &u.column(src));
        vts.set_row(dst, &vt.row(src));
        s.push(svd.singular_values[src].max(0.0));
    }
    (us, s, vts)
}

/// Replace columns `k..n` of `u` with an orthonormal basis of the orthogonal
/// complement of its first `k` columns.
fn complete_basis(u: &mut DMatrix<f64>, k: usize) {
    let n = u.nrows();
    let mut aug = DMatrix::zeros(n, k + n);
    aug.view_mut((0, 0), (n, k)).copy_from(&u.columns(0, k));
    aug.view_mut((0, k), (n, n)).fill_with_identity();
    let q = aug.qr().q();
    // Householder QR of [U | I]: the trailing columns of Q are orthogonal to span(U)
    for j in k..n {
        u.set_column(j, &q.column(j));
    }
}

fn fix_column_sign(u: &mut DMatrix<f64>, j: usize) {
    let col = u.column(j);
    let mut best = 0;
    for i in 1..col.len() {
        if col[i].abs() > col[best].abs() {
            best = i;
        }
    }
    if col[best] < 0.0 {
        u.column_mut(j).neg_mut();
    }
}

/// Orthonormal `n × r` matrix from the QR of a Gaussian draw.
pub fn random_orthonormal(n: usize, r: usize, rng: &mut impl rand::Rng) -> DMatrix<f64> {
    let g = crate::tensor::gaussian_matrix(n, r, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let rdiag = qr.r().diagonal();
    // sign convention making the draw Haar-distributed
    for j in 0..r {
        if rdiag[j] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn unit_vector(v: DVector<f64>) -> Option<DVector<f64>> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::tensor::gaussian_matrix;

    #[test]
    fn tall_matrix_gets_completed_orthogonal_factor() {
        let mut rng = rng_from_seed(3);
        let m = gaussian_matrix(6, 2, &mut rng);
        let (u, s) = left_singular_system(&m);
        assert_eq!(u.shape(), (6, 6));
        assert!((u.transpose() * &u - DMatrix::identity(6, 6)).norm() < 1e-12);
        assert_eq!(s.len(), 6);
        assert!(s[2..].iter().all(|&v| v == 0.0));
        assert!(s[0] >= s[1]);
        // U_k U_kᵀ m = m
        let proj = u.columns(0, 2) * (u.columns(0, 2).transpose() * &m);
        assert!((proj - &m).norm() < 1e-12);
    }

    #[test]
    fn sign_convention() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -3.0, -1.0, 0.0]);
        let (u, s) = left_singular_system(&m);
        assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        for j in 0..2 {
            let c = u.column(j);
            let imax = c.iamax();
            assert!(c[imax] > 0.0);
        }
    }

    #[test]
    fn random_orthonormal_columns() {
        let mut rng = rng_from_seed(1);
        let q = random_orthonormal(5, 3, &mut rng);
        assert!((q.transpose() * q - DMatrix::identity(3, 3)).norm() < 1e-12);
    }
}
