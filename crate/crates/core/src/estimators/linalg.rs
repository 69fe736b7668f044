//! Dense least-squares helpers.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Relative threshold on the diagonal of R below which the design is declared
/// rank deficient.
const RANK_RTOL: f64 = 1e-10;

/// Weighted least squares `argmin_b sum_i w_i (y_i - z_i'b)^2` via a QR
/// factorization of the row-scaled design.
pub fn weighted_least_squares(design: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Result<DVector<f64>> {
    let (n, k) = design.shape();
    if n < k {
        return Err(Error::RankDeficientDesign { columns: k });
    }
    let mut a = design.clone();
    let mut rhs = DVector::from_column_slice(y);
    for i in 0..n {
        let s = w[i].sqrt();
        a.row_mut(i).scale_mut(s);
        rhs[i] *= s;
    }
    let qr = a.qr();
    let r = qr.r();
    let max_diag = (0..k).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 || (0..k).any(|j| r[(j, j)].abs() <= RANK_RTOL * max_diag) {
        return Err(Error::RankDeficientDesign { columns: k });
    }
    let qty = qr.q().transpose() * rhs;
    r.solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficientDesign { columns: k })
}

/// Ordinary least squares.
pub fn least_squares(design: &DMatrix<f64>, y: &[f64]) -> Result<DVector<f64>> {
    weighted_least_squares(design, y, &vec![1.0; y.len()])
}
