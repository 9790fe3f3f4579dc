//! Damped least-squares solves shared by the control law and rate resolution.

use nalgebra::{DMatrix, DVector};

/// Relative eigenvalue floor below which an undamped normal matrix is
/// treated as singular.
const SINGULAR_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("normal matrix is singular (smallest/largest eigenvalue = {rcond:e})")]
pub struct Singular {
    pub rcond: f64,
}

/// Minimizes `|A x - b|^2 + damping^2 |x|^2`.
///
/// Tall or square systems solve `(AᵀA + μ²I) x = Aᵀb`; wide systems use the
/// equivalent `x = Aᵀ (AAᵀ + μ²I)⁻¹ b` so that an undamped call returns the
/// minimum-norm solution whenever `A` has full row rank.
pub fn damped_least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    damping: f64,
) -> Result<DVector<f64>, Singular> {
    debug_assert_eq!(a.nrows(), b.len());
    let mu2 = damping * damping;
    if a.nrows() >= a.ncols() {
        let normal = a.transpose() * a + DMatrix::identity(a.ncols(), a.ncols()) * mu2;
        let rhs = a.transpose() * b;
        solve_spd(normal, &rhs, damping == 0.0)
    } else {
        let normal = a * a.transpose() + DMatrix::identity(a.nrows(), a.nrows()) * mu2;
        let y = solve_spd(normal, b, damping == 0.0)?;
        Ok(a.transpose() * y)
    }
}

fn solve_spd(
    normal: DMatrix<f64>,
    rhs: &DVector<f64>,
    check_rank: bool,
) -> Result<DVector<f64>, Singular> {
    if check_rank {
        let eig = normal.clone().symmetric_eigenvalues();
        let max = eig.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        let min = eig.iter().fold(f64::INFINITY, |m, e| m.min(*e));
        let rcond = if max > 0.0 { min / max } else { 0.0 };
        if !(rcond > SINGULAR_RCOND) {
            return Err(Singular { rcond });
        }
    }
    let chol = normal.cholesky().ok_or(Singular { rcond: 0.0 })?;
    Ok(chol.solve(rhs))
}
