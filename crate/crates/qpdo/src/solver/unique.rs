//! Unique solve in the admissible window `|kappa - s| < 1/2`.
//!
//! The solution spectrum is `A_plus^-1 B_+ (A_minus^-1 (l v)~)` where `l v`
//! is any continuation of the right-hand side off the quadrant; the default
//! continuation is the zero extension, and the result does not depend on the
//! choice.

use crate::error::{QpdoError, Result};
use crate::grid::{GridFunction, QuadrantConvention};
use crate::projector::project_plus_spatial;
use crate::solver::{check_unique_admissible, open_quadrant_residual, solution_exterior_mass};
use crate::symbol::WaveFactorization;
use crate::transform::{dft_forward, dft_inverse};

pub struct UniqueSolveOutput {
    pub u: GridFunction,
    /// Relative equation residual over the open quadrant.
    pub residual: f64,
    /// Relative solution mass outside the closed quadrant.
    pub exterior_mass: f64,
}

/// Solve with the zero-extension continuation.
pub fn solve_unique(
    fact: &WaveFactorization,
    s: f64,
    v: &GridFunction,
    conv: QuadrantConvention,
) -> Result<UniqueSolveOutput> {
    solve_unique_with_continuation(fact, s, v, v, conv)
}

/// Solve with an explicit continuation `ell_v` of `v` (must agree with `v`
/// on the quadrant).
pub fn solve_unique_with_continuation(
    fact: &WaveFactorization,
    s: f64,
    v: &GridFunction,
    ell_v: &GridFunction,
    conv: QuadrantConvention,
) -> Result<UniqueSolveOutput> {
    check_unique_admissible(fact.index, s)?;
    if fact.grid() != v.grid {
        return Err(QpdoError::GridMismatch("factorization vs rhs".into()));
    }
    let ext = v.exterior_mass(conv);
    if ext > 1e-13 {
        return Err(QpdoError::SupportViolation(format!(
            "right-hand side has relative exterior modulus {ext:.3e} outside the {conv} quadrant"
        )));
    }
    // The continuation must restrict back to v.
    let restricted = ell_v.restrict_quadrant(conv);
    let mut defect: f64 = 0.0;
    for (a, b) in restricted.values.iter().zip(v.restrict_quadrant(conv).values.iter()) {
        defect = defect.max((a - b).norm());
    }
    if defect > 1e-12 * (1.0 + v.max_abs()) {
        return Err(QpdoError::SupportViolation(format!(
            "continuation does not restrict to the right-hand side (defect {defect:.3e})"
        )));
    }

    let minus_inv = fact.minus.inverse()?;
    let plus_inv = fact.plus.inverse()?;
    let w = minus_inv.mul_spectrum(&dft_forward(ell_v))?;
    let w_plus = project_plus_spatial(&w, conv);
    let u = dft_inverse(&plus_inv.mul_spectrum(&w_plus)?);

    let residual = open_quadrant_residual(&fact.product(), &u, v)?;
    let exterior_mass = solution_exterior_mass(&u);
    Ok(UniqueSolveOutput {
        u,
        residual,
        exterior_mass,
    })
}
