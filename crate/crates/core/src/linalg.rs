//! Dense least squares with a minimum-norm answer for rank-deficient systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: DVector<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
}

/// Solves `min ||a x - b||` and, among minimizers, returns the one of least
/// norm. Singular values below `max(m, n) · ε · σ_max` are treated as zero.
///
/// Tall systems are reduced with a Householder QR first so the SVD only
/// sees the small triangular factor.
pub fn lstsq(a: DMatrix<f64>, b: &DVector<f64>) -> Result<LeastSquares> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Input(format!("least squares: {m} rows but {} right-hand sides", b.len())));
    }
    if m == 0 || n == 0 {
        return Err(Error::Input("least squares on an empty system".into()));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("least squares system contains non-finite values".into()));
    }

    let (reduced, rhs) = if m > n {
        let qr = a.qr();
        let mut qtb = b.clone();
        qr.q_tr_mul(&mut qtb);
        (qr.r(), qtb.rows(0, n).into_owned())
    } else {
        (a, b.clone())
    };

    let svd = reduced.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let tol = m.max(n) as f64 * f64::EPSILON * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let solution = svd
        .solve(&rhs, tol)
        .map_err(|e| Error::Numerical(format!("least squares solve failed: {e}")))?;
    Ok(LeastSquares {
        solution,
        rank,
        rank_deficient: rank < n,
    })
}
