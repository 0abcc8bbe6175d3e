//! Dense decompositions built on the symmetric eigensolver.
//!
//! The general SVD in nalgebra 0.35 can converge to a wrong factorization on
//! tall, nearly rank-deficient matrices, which is exactly the shape of a PCA
//! data matrix. These routines go through small Gram matrices instead.

use nalgebra::{DMatrix, DVector};

/// Thin left singular pairs of `a`, descending, restricted to
/// `σ > rel_tol · σ_max` (and `σ > 0`). Returns `(σ, U)`.
pub(crate) fn left_singular(a: &DMatrix<f64>, rel_tol: f64) -> (Vec<f64>, DMatrix<f64>) {
    let (sigmas, cols) = if a.nrows() <= a.ncols() { from_row_gram(a) } else { from_column_gram(a) };
    let sigma_max = sigmas.iter().copied().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..sigmas.len())
        .filter(|&i| sigmas[i] > 0.0 && sigmas[i] > rel_tol * sigma_max)
        .collect();
    order.sort_by(|&x, &y| sigmas[y].total_cmp(&sigmas[x]));
    let u = DMatrix::from_fn(a.nrows(), order.len(), |r, c| cols[order[c]][r]);
    (order.iter().map(|&i| sigmas[i]).collect(), u)
}

/// Wide matrices: `U` are eigenvectors of `A·Aᵀ`, `σ = |Aᵀu|`.
fn from_row_gram(a: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let eig = (a * a.transpose()).symmetric_eigen();
    eig.eigenvectors
        .column_iter()
        .map(|u| ((a.tr_mul(&u)).norm(), u.into_owned()))
        .unzip()
}

/// Tall matrices: `V` from `AᵀA`, `U = A·V` re-orthogonalized in order of
/// decreasing eigenvalue.
fn from_column_gram(a: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let eig = a.tr_mul(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut sigmas = Vec::new();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for i in order {
        let mut u = a * eig.eigenvectors.column(i);
        for prev in &cols {
            let proj = prev.dot(&u);
            u.axpy(-proj, prev, 1.0);
        }
        let sigma = u.norm();
        sigmas.push(sigma);
        cols.push(if sigma > 0.0 { u / sigma } else { u });
    }
    (sigmas, cols)
}

/// Minimum-norm least-squares solution `X` of `A·X ≈ B`.
pub(crate) fn min_norm_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    // with full column rank the solution is unique, so columns may be
    // rescaled to keep the normal equations well conditioned
    let scale: Vec<f64> = a.column_iter().map(|c| c.amax()).map(|m| if m > 0.0 { m } else { 1.0 }).collect();
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)] / scale[c]);
    if let Some(mut x) = pinv_solve(&scaled, b, rel_tol, true) {
        for (r, s) in scale.iter().enumerate() {
            x.row_mut(r).unscale_mut(*s);
        }
        return x;
    }
    pinv_solve(a, b, rel_tol, false).expect("rank-deficient solve always succeeds")
}

fn pinv_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64, require_full_rank: bool) -> Option<DMatrix<f64>> {
    let eig = a.tr_mul(a).symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let rhs = a.tr_mul(b);
    let mut x = DMatrix::zeros(a.ncols(), b.ncols());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > rel_tol * lambda_max && lambda > 0.0 {
            let v = eig.eigenvectors.column(i);
            x += v * (v.tr_mul(&rhs) / lambda);
        } else if require_full_rank {
            return None;
        }
    }
    Some(x)
}
