//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Default relative tolerance for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values strictly above `rel_tol * σ_max`. A zero
/// matrix has rank 0.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Orthonormal basis of the numerical null space (columns), using the same
/// threshold as [`numerical_rank`].
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    // Pad to square so the SVD returns the full right singular basis.
    let mut sq = DMatrix::zeros(m.nrows().max(cols), cols);
    sq.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..cols)
        .filter(|&i| smax <= 0.0 || svd.singular_values[i] <= rel_tol * smax)
        .collect();
    let mut basis = DMatrix::zeros(cols, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &v_t.row(i).transpose());
    }
    basis
}

/// Eigenvalues and eigenvectors of the symmetric part of `m`, eigenvalues
/// ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (values, vectors)
}

/// Max-abs entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// Induced infinity norm (max absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
