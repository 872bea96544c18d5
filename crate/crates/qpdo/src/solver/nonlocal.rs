//! The nonlocal boundary value problem: homogeneous equation on the quadrant
//! with prescribed h-weighted line sums and a vanishing total sum.
//!
//! The solution spectrum is
//! `A_plus^-1(xi) (A_plus(xi_1, 0) g~(xi_1) + A_plus(0, xi_2) f~(xi_2))`.
//! With the compatibility `f~(0) = g~(0) = 0` the transformed conditions
//! `u~(0, xi_2) = f~`, `u~(xi_1, 0) = g~`, `u~(0,0) = 0` hold as algebraic
//! identities on the grid; the spatial line-sum conditions follow from the
//! plus-type support of the solution.

use num_complex::Complex64;

use crate::error::{QpdoError, Result};
use crate::grid::{GridFunction, SpectrumFunction};
use crate::sobolev::{norm_1d_of_spectrum, norm_hs, SobolevParams, WeightMode};
use crate::solver::{
    check_general_admissible, open_quadrant_residual, solution_exterior_mass, BoundaryData,
};
use crate::symbol::WaveFactorization;
use crate::transform::dft_inverse;

pub struct NonlocalOutput {
    pub u: GridFunction,
    /// Worst relative defect of the three transformed conditions.
    pub spectral_defect: f64,
    /// Relative l2 defect of the two spatial line-sum conditions.
    pub line_sum_defect: f64,
    /// Relative defect of the vanishing total quadrant sum.
    pub total_sum_defect: f64,
    /// Homogeneous equation residual over the open quadrant.
    pub residual: f64,
    pub exterior_mass: f64,
    /// `|u|_s / (|f|_{s+1/2} + |g|_{s+1/2})`.
    pub apriori_ratio: f64,
    pub delta: f64,
}

pub fn solve_nonlocal(
    fact: &WaveFactorization,
    s: f64,
    bdata: &BoundaryData,
) -> Result<NonlocalOutput> {
    solve_nonlocal_with_options(fact, s, bdata, 1e-12, 1e-10)
}

/// Variant with explicit tolerances for the half-line support check and the
/// zero-frequency compatibility check (lifted continuous data carries
/// exponentially small but nonzero negative-side tails).
pub fn solve_nonlocal_with_options(
    fact: &WaveFactorization,
    s: f64,
    bdata: &BoundaryData,
    half_line_tol: f64,
    compat_tol: f64,
) -> Result<NonlocalOutput> {
    let grid = fact.grid();
    if grid != bdata.grid {
        return Err(QpdoError::GridMismatch("factorization vs boundary data".into()));
    }
    let delta = check_general_admissible(fact.index, s, 1)?;

    let spec_peak = bdata
        .f_spec
        .iter()
        .chain(bdata.g_spec.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let (f0, g0) = bdata.compatibility_defect();
    if f0.norm() > compat_tol * spec_peak.max(1e-300)
        || g0.norm() > compat_tol * spec_peak.max(1e-300)
    {
        return Err(QpdoError::Compatibility(format!(
            "nonlocal data must have vanishing zero-frequency transforms; \
             measured f~(0) = {:.3e}, g~(0) = {:.3e} against spectrum peak {:.3e}",
            f0.norm(),
            g0.norm(),
            spec_peak
        )));
    }
    let half = bdata.half_line_defect();
    if half > half_line_tol {
        return Err(QpdoError::SupportViolation(format!(
            "boundary data has relative mass {half:.3e} on the negative half-line"
        )));
    }

    let plus_inv = fact.plus.inverse()?;
    let len = grid.len();
    let zero_pos = grid.pos_of(0);
    // Axis restrictions of the plus factor.
    let plus_on_axis1: Vec<Complex64> = (0..len).map(|i| fact.plus.values[[i, zero_pos]]).collect();
    let plus_on_axis2: Vec<Complex64> = (0..len).map(|j| fact.plus.values[[zero_pos, j]]).collect();

    let mut values = ndarray::Array2::from_elem((len, len), Complex64::ZERO);
    for i in 0..len {
        for j in 0..len {
            values[[i, j]] = plus_inv.values[[i, j]]
                * (plus_on_axis1[i] * bdata.g_spec[i] + plus_on_axis2[j] * bdata.f_spec[j]);
        }
    }
    let u_spec = SpectrumFunction { grid, values };

    // Transformed conditions.
    let mut spectral_defect: f64 = 0.0;
    for j in 0..len {
        spectral_defect =
            spectral_defect.max((u_spec.values[[zero_pos, j]] - bdata.f_spec[j]).norm());
    }
    for i in 0..len {
        spectral_defect =
            spectral_defect.max((u_spec.values[[i, zero_pos]] - bdata.g_spec[i]).norm());
    }
    spectral_defect = spectral_defect.max(u_spec.values[[zero_pos, zero_pos]].norm());
    if spec_peak > 0.0 {
        spectral_defect /= spec_peak;
    }

    let u = dft_inverse(&u_spec);

    // Spatial line-sum conditions.
    let n = grid.half_window() as i64;
    let h = grid.h();
    let mut num_f = 0.0;
    let mut num_g = 0.0;
    let mut den = 0.0;
    for m in -n..n {
        let mut row = Complex64::ZERO;
        let mut col = Complex64::ZERO;
        for k in 0..n {
            row += u.get(k, m) * h;
            col += u.get(m, k) * h;
        }
        let fm = bdata.f[grid.pos_of(m)];
        let gm = bdata.g[grid.pos_of(m)];
        num_f += (row - fm).norm_sqr();
        num_g += (col - gm).norm_sqr();
        den += fm.norm_sqr() + gm.norm_sqr();
    }
    let line_sum_defect = ((num_f + num_g) / den.max(f64::MIN_POSITIVE)).sqrt();

    let mut total = Complex64::ZERO;
    for m1 in 0..n {
        for m2 in 0..n {
            total += u.get(m1, m2) * (h * h);
        }
    }
    let data_scale = bdata
        .f
        .iter()
        .chain(bdata.g.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let total_sum_defect = total.norm() / (data_scale * h).max(f64::MIN_POSITIVE);

    let residual = open_quadrant_residual(&fact.product(), &u, &GridFunction::zeros(grid))?;
    let exterior_mass = solution_exterior_mass(&u);

    let num = norm_hs(&u, SobolevParams::new(s, WeightMode::ModulusSum));
    let den_norm = norm_1d_of_spectrum(&bdata.f_spec, grid, s + 0.5)
        + norm_1d_of_spectrum(&bdata.g_spec, grid, s + 0.5);
    let apriori_ratio = if den_norm > 0.0 { num / den_norm } else { 0.0 };

    Ok(NonlocalOutput {
        u,
        spectral_defect,
        line_sum_defect,
        total_sum_defect,
        residual,
        exterior_mass,
        apriori_ratio,
        delta,
    })
}
