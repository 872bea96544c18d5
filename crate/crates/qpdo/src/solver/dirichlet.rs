//! Reduction of the Dirichlet problem to a dense system of two coupled
//! linear integral equations for the layer functions, and its direct solve.
//!
//! With `kappa - s = 1 + delta` and a homogeneous equation, the solution
//! spectrum is `A_plus^-1 (c_0~(xi_1) + d_0~(xi_2))`.  The transformed
//! Dirichlet traces prescribe the one-variable integrals of `u~`, and
//! normalizing by the one-variable integrals of `A_plus^-1` yields the
//! block system
//!
//! ```text
//! int M_1(xi) c_0~(xi_1) dxi_1 + d_0~(xi_2) = F~(xi_2)
//! c_0~(xi_1) + int M_2(xi) d_0~(xi_2) dxi_2 = G~(xi_1)
//! ```
//!
//! discretized by the exact frequency-node sum (optionally oversampled for
//! the one-variable integrals `a_0~`, `b_0~`).
//!
//! Because each normalized kernel row integrates to one by the definition of
//! `a_0~` and `b_0~`, the block matrix always annihilates the constant gauge
//! vector `[1, -1]`: the shift `(c_0~ + k, d_0~ - k)` maps solutions to
//! solutions and leaves the reconstructed `u~` unchanged.  The solve
//! therefore works with the rank-completed matrix `A + sigma e e^H` (`e` the
//! normalized gauge vector), which picks the gauge-orthogonal representative;
//! the reported system residual is measured against the original matrix, so
//! it doubles as the data-consistency check (a corner-compatibility
//! functional that genuine Dirichlet traces satisfy automatically).

use nalgebra::{DMatrix, DVector};
use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{QpdoError, Result};
use crate::grid::{GridFunction, LatticeGrid, SpectrumFunction};
use crate::solver::BoundaryData;
use crate::symbol::{PeriodicSymbol, WaveFactorization};
use crate::transform::{dft_inverse, interpolate_line};

pub struct DirichletSystem {
    pub grid: LatticeGrid,
    /// One-variable integral of the inverse plus factor over `xi_1`.
    pub a0: Array1<Complex64>,
    /// One-variable integral over `xi_2`.
    pub b0: Array1<Complex64>,
    pub oversample: usize,
    matrix: DMatrix<Complex64>,
    rhs: DVector<Complex64>,
    plus_inv: PeriodicSymbol,
    f_spec: Array1<Complex64>,
    g_spec: Array1<Complex64>,
}

impl DirichletSystem {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<Complex64> {
        &self.rhs
    }

    /// Normalized constant gauge vector `[1, ..., 1, -1, ..., -1]`.
    pub fn gauge_vector(&self) -> DVector<Complex64> {
        let len = self.grid.len();
        let scale = 1.0 / ((2 * len) as f64).sqrt();
        DVector::from_fn(2 * len, |r, _| {
            Complex64::new(if r < len { scale } else { -scale }, 0.0)
        })
    }

    /// The gauge-completed matrix used by the direct solve.
    pub fn completed_matrix(&self) -> DMatrix<Complex64> {
        let e = self.gauge_vector();
        &self.matrix + &e * e.adjoint()
    }

    /// One-norm condition estimate of the gauge-completed system.
    pub fn cond_estimate(&self) -> f64 {
        one_norm_cond(&self.completed_matrix())
    }
}

pub(crate) fn one_norm_cond(m: &DMatrix<Complex64>) -> f64 {
    let (rows, cols) = m.shape();
    let norm = |mat: &DMatrix<Complex64>| -> f64 {
        (0..mat.ncols())
            .map(|c| (0..mat.nrows()).map(|r| mat[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let a1 = norm(m);
    debug_assert_eq!(rows, cols);
    match m.clone().try_inverse() {
        Some(inv) => a1 * norm(&inv),
        None => f64::INFINITY,
    }
}

/// One-variable node-sum integrals of a symbol along one axis, optionally on
/// a trig-interpolated finer grid.
fn axis_integral(
    sym: &PeriodicSymbol,
    axis: usize,
    oversample: usize,
) -> Array1<Complex64> {
    let grid = sym.grid;
    let coarse = grid.len();
    let fine = coarse * oversample.max(1);
    let dfine = 2.0 * std::f64::consts::PI * grid.hbar() / fine as f64;
    let mut out = Array1::from_elem(coarse, Complex64::ZERO);
    let mut line = vec![Complex64::ZERO; coarse];
    for other in 0..coarse {
        for (p, slot) in line.iter_mut().enumerate() {
            let (i, j) = if axis == 0 { (p, other) } else { (other, p) };
            *slot = sym.values[[i, j]];
        }
        let acc: Complex64 = if oversample <= 1 {
            line.iter().sum::<Complex64>() * Complex64::new(grid.freq_step(), 0.0)
        } else {
            interpolate_line(&line, fine).iter().sum::<Complex64>() * Complex64::new(dfine, 0.0)
        };
        out[other] = acc;
    }
    out
}

/// Assemble the dense block system for the Dirichlet layer functions.
pub fn dirichlet_assemble(
    fact: &WaveFactorization,
    bdata: &BoundaryData,
    s: f64,
    oversample: usize,
) -> Result<DirichletSystem> {
    let grid = fact.grid();
    if grid != bdata.grid {
        return Err(QpdoError::GridMismatch("factorization vs boundary data".into()));
    }
    crate::solver::check_general_admissible(fact.index, s, 1)?;
    let plus_inv = fact.plus.inverse()?;

    // a0~(xi_2) integrates over xi_1 (axis 0), b0~(xi_1) over xi_2 (axis 1).
    let a0 = axis_integral(&plus_inv, 0, oversample);
    let b0 = axis_integral(&plus_inv, 1, oversample);
    // Natural magnitude of these integrals for a well-behaved factor.
    let scale = 2.0 * std::f64::consts::PI
        * grid.hbar()
        * plus_inv.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (name, arr) in [("a0", &a0), ("b0", &b0)] {
        let max = arr.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let min = arr.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if min < 1e-10 * max || max < 1e-10 * scale {
            return Err(QpdoError::SingularAssembly(format!(
                "{name} has a numerical zero (min {min:.3e}, max {max:.3e}, \
                 natural scale {scale:.3e}); the one-variable integral \
                 hypothesis fails for this factor"
            )));
        }
    }

    let len = grid.len();
    let dxi = grid.freq_step();
    let size = 2 * len;
    let mut matrix = DMatrix::from_element(size, size, Complex64::ZERO);
    let mut rhs = DVector::from_element(size, Complex64::ZERO);
    // Rows 0..len: trace in xi_2; unknown order [c0 (len), d0 (len)].
    for q2 in 0..len {
        for k1 in 0..len {
            matrix[(q2, k1)] = plus_inv.values[[k1, q2]] * dxi / a0[q2];
        }
        matrix[(q2, len + q2)] = Complex64::ONE;
        rhs[q2] = bdata.f_spec[q2] / a0[q2];
    }
    // Rows len..2len: trace in xi_1.
    for q1 in 0..len {
        matrix[(len + q1, q1)] = Complex64::ONE;
        for k2 in 0..len {
            matrix[(len + q1, len + k2)] = plus_inv.values[[q1, k2]] * dxi / b0[q1];
        }
        rhs[len + q1] = bdata.g_spec[q1] / b0[q1];
    }

    Ok(DirichletSystem {
        grid,
        a0,
        b0,
        oversample: oversample.max(1),
        matrix,
        rhs,
        plus_inv,
        f_spec: bdata.f_spec.clone(),
        g_spec: bdata.g_spec.clone(),
    })
}

pub struct DirichletOutput {
    pub c0: Array1<Complex64>,
    pub d0: Array1<Complex64>,
    pub u: GridFunction,
    /// Relative residual of the assembled linear system.
    pub system_residual: f64,
    /// Relative l2 defects of the two reconstructed traces.
    pub trace_f_err: f64,
    pub trace_g_err: f64,
    pub cond: f64,
}

/// Dense solve of the gauge-completed system plus reconstruction and trace
/// verification.
pub fn dirichlet_solve(system: &DirichletSystem) -> Result<DirichletOutput> {
    let cond = system.cond_estimate();
    if cond > 1e12 || cond.is_nan() {
        return Err(QpdoError::IllConditioned(format!(
            "Dirichlet system condition estimate {cond:.3e} exceeds 1e12"
        )));
    }
    let lu = system.completed_matrix().lu();
    let x = lu
        .solve(&system.rhs)
        .ok_or_else(|| QpdoError::SingularAssembly("Dirichlet LU solve failed".into()))?;
    // Residual against the original block system: the data-consistency check.
    let r = &system.matrix * &x - &system.rhs;
    let rhs_norm = system.rhs.norm();
    let system_residual = if rhs_norm > 0.0 { r.norm() / rhs_norm } else { r.norm() };

    let grid = system.grid;
    let len = grid.len();
    let c0 = Array1::from_shape_fn(len, |i| x[i]);
    let d0 = Array1::from_shape_fn(len, |j| x[len + j]);

    // Reconstruct u~ = A_plus^-1 (c0~(xi_1) + d0~(xi_2)).
    let values = ndarray::Array2::from_shape_fn((len, len), |(i, j)| {
        system.plus_inv.values[[i, j]] * (c0[i] + d0[j])
    });
    let u_spec = SpectrumFunction { grid, values };
    let u = dft_inverse(&u_spec);

    // Verify the transformed traces as exact node sums: the trace identity
    // of the cyclic model.  An oversampled assembly deviates from the node
    // sums by its quadrature correction, so the hard gate applies only to
    // the node-exact assembly; oversampled trace errors are reported.
    let u_as_symbol = PeriodicSymbol {
        grid,
        values: u_spec.values.clone(),
        declared_order: 0.0,
        ellipticity_floor: 0.0,
    };
    let trace_f = axis_integral(&u_as_symbol, 0, 1);
    let trace_g = axis_integral(&u_as_symbol, 1, 1);
    let mut num_f = 0.0;
    let mut den_f = 0.0;
    for q2 in 0..len {
        num_f += (trace_f[q2] - system.f_spec[q2]).norm_sqr();
        den_f += system.f_spec[q2].norm_sqr();
    }
    let trace_f_err = (num_f / den_f.max(f64::MIN_POSITIVE)).sqrt();
    let mut num_g = 0.0;
    let mut den_g = 0.0;
    for q1 in 0..len {
        num_g += (trace_g[q1] - system.g_spec[q1]).norm_sqr();
        den_g += system.g_spec[q1].norm_sqr();
    }
    let trace_g_err = (num_g / den_g.max(f64::MIN_POSITIVE)).sqrt();

    let data_present = den_f + den_g > 0.0;
    if data_present && system.oversample == 1 && (trace_f_err > 1e-6 || trace_g_err > 1e-6) {
        return Err(QpdoError::Numerical(format!(
            "trace verification failed: {trace_f_err:.3e} / {trace_g_err:.3e} above 1e-6 \
             (quadrature or conditioning issue)"
        )));
    }

    Ok(DirichletOutput {
        c0,
        d0,
        u,
        system_residual,
        trace_f_err,
        trace_g_err,
        cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{half_line_data, SymbolExpr};
    use crate::grid::QuadrantConvention;
    use std::f64::consts::PI;

    fn catalog_fact(grid: LatticeGrid) -> WaveFactorization {
        SymbolExpr::parse("product(exp_split(5,1.0),plus(32.0,1))")
            .unwrap()
            .build_factorization(grid, QuadrantConvention::Closed)
            .unwrap()
    }

    fn catalog_data(grid: LatticeGrid, seed: u64) -> BoundaryData {
        BoundaryData::new(grid, half_line_data(grid, seed), half_line_data(grid, seed + 3))
            .unwrap()
    }

    /// Dirichlet data manufactured as the traces of an actual solution of
    /// the homogeneous equation: automatically consistent.
    fn manufactured_traces(
        fact: &WaveFactorization,
        seed: u64,
    ) -> (BoundaryData, GridFunction) {
        let grid = fact.grid();
        let len = grid.len();
        let plus_inv = fact.plus.inverse().unwrap();
        let c0 = crate::transform::dft1_forward(&half_line_data(grid, seed), grid);
        let d0 = crate::transform::dft1_forward(&half_line_data(grid, seed + 17), grid);
        let values = ndarray::Array2::from_shape_fn((len, len), |(i, j)| {
            plus_inv.values[[i, j]] * (c0[i] + d0[j])
        });
        let u_spec = SpectrumFunction { grid, values };
        let dxi = Complex64::new(grid.freq_step(), 0.0);
        let f_spec = Array1::from_shape_fn(len, |q2| {
            (0..len).map(|k1| u_spec.values[[k1, q2]]).sum::<Complex64>() * dxi
        });
        let g_spec = Array1::from_shape_fn(len, |q1| {
            (0..len).map(|k2| u_spec.values[[q1, k2]]).sum::<Complex64>() * dxi
        });
        let u_star = dft_inverse(&u_spec);
        (
            BoundaryData::from_spectra(grid, f_spec, g_spec).unwrap(),
            u_star,
        )
    }

    #[test]
    fn identity_factor_integrals_are_constant() {
        let grid = LatticeGrid::new(0.125, 16).unwrap();
        let fact = WaveFactorization::trivial(grid);
        let bd = catalog_data(grid, 1);
        let system = dirichlet_assemble(&fact, &bd, fact.index - 1.0, 1).unwrap();
        let expect = 2.0 * PI * grid.hbar();
        for v in system.a0.iter().chain(system.b0.iter()) {
            assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-10 * expect);
        }
        // Kernel entries are (2 pi hbar)^-1 dxi.
        let want = grid.freq_step() / expect;
        assert!((system.matrix()[(0, 1)] - Complex64::new(want, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gauge_vector_spans_the_kernel_and_hand_reduction_agrees() {
        // Every assembled block matrix annihilates [1,...,1, -1,...,-1]; for
        // the identity factor the hand reduction of the constant-coefficient
        // case shows consistency holds exactly when the two normalized data
        // means agree.
        let grid = LatticeGrid::new(0.125, 16).unwrap();
        let fact = WaveFactorization::trivial(grid);
        let len = grid.len();
        let hbar = grid.hbar();
        let phi = Complex64::new(1.5, 0.5);
        let gamma = Complex64::new(-0.25, 1.0);
        let make = |a: Complex64, b: Complex64| {
            BoundaryData::from_spectra(
                grid,
                Array1::from_elem(len, a),
                Array1::from_elem(len, b),
            )
            .unwrap()
        };
        let system = dirichlet_assemble(&fact, &make(phi, gamma), fact.index - 1.0, 1).unwrap();
        let image = system.matrix() * system.gauge_vector();
        assert!(image.norm() < 1e-12);
        // Hand reduction: with constant data and constant unknowns c, d the
        // completed system gives c + d = (phi' + gamma')/2, c - d = phi' -
        // gamma', and the consistency defect against the original system is
        // |phi - gamma| / (sqrt(2) sqrt(|phi|^2 + |gamma|^2)).  Inconsistent
        // data is rejected by the trace verification; reproduce the solve
        // through the public pieces to check the number.
        let _ = hbar;
        let x = system
            .completed_matrix()
            .lu()
            .solve(system.rhs())
            .unwrap();
        let r = system.matrix() * &x - system.rhs();
        let measured = r.norm() / system.rhs().norm();
        let expected =
            (phi - gamma).norm() / (2.0f64.sqrt() * (phi.norm_sqr() + gamma.norm_sqr()).sqrt());
        assert!(
            (measured - expected).abs() < 1e-8 * expected,
            "residual {measured} vs hand value {expected}"
        );
        assert!(matches!(
            dirichlet_solve(&system),
            Err(QpdoError::Numerical(_))
        ));
        // Equal constants are consistent and reproduce the constant solution.
        let system = dirichlet_assemble(&fact, &make(phi, phi), fact.index - 1.0, 1).unwrap();
        let out = dirichlet_solve(&system).unwrap();
        assert!(out.system_residual < 1e-12);
        assert!(out.trace_f_err < 1e-10 && out.trace_g_err < 1e-10);
    }

    #[test]
    fn catalog_factor_solves_and_reproduces_traces() {
        let grid = LatticeGrid::new(0.125, 32).unwrap();
        let fact = catalog_fact(grid);
        let (bd, u_star) = manufactured_traces(&fact, 7);
        let system = dirichlet_assemble(&fact, &bd, fact.index - 1.0, 1).unwrap();
        let out = dirichlet_solve(&system).unwrap();
        assert!(out.system_residual < 1e-10, "residual {}", out.system_residual);
        assert!(out.trace_f_err < 1e-6, "trace f {}", out.trace_f_err);
        assert!(out.trace_g_err < 1e-6, "trace g {}", out.trace_g_err);
        assert!(out.cond < 1e8, "cond {}", out.cond);
        // The reconstruction is gauge-invariant, so it recovers the
        // manufactured solution.
        let mut worst: f64 = 0.0;
        let scale = u_star.max_abs();
        for (a, b) in out.u.values.iter().zip(u_star.values.iter()) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-8 * scale, "reconstruction {worst:.3e}");
        // The returned pair is the gauge-orthogonal representative.
        let len = grid.len();
        let x = DVector::from_fn(2 * len, |r, _| {
            if r < len {
                out.c0[r]
            } else {
                out.d0[r - len]
            }
        });
        let gauge_component = system.gauge_vector().adjoint() * &x;
        assert!(gauge_component[(0, 0)].norm() < 1e-10 * x.norm());
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let grid = LatticeGrid::new(0.125, 32).unwrap();
        let fact = catalog_fact(grid);
        let zero = Array1::from_elem(grid.len(), Complex64::ZERO);
        let bd = BoundaryData::new(grid, zero.clone(), zero).unwrap();
        let system = dirichlet_assemble(&fact, &bd, fact.index - 1.0, 1).unwrap();
        let out = dirichlet_solve(&system).unwrap();
        assert!(out.c0.iter().all(|v| v.norm() < 1e-12));
        assert!(out.d0.iter().all(|v| v.norm() < 1e-12));
        assert!(out.u.max_abs() < 1e-12);
    }

    #[test]
    fn forced_zero_integral_detected() {
        // The pure shift factor integrates to zero over each period line.
        let grid = LatticeGrid::new(0.125, 16).unwrap();
        let fact = SymbolExpr::parse("shift1(1.0)")
            .unwrap()
            .build_factorization(grid, QuadrantConvention::Closed)
            .unwrap();
        let bd = catalog_data(grid, 2);
        assert!(matches!(
            dirichlet_assemble(&fact, &bd, fact.index - 1.0, 1),
            Err(QpdoError::SingularAssembly(_))
        ));
    }

    #[test]
    fn oversampled_assembly_stays_consistent() {
        let grid = LatticeGrid::new(0.125, 32).unwrap();
        let fact = catalog_fact(grid);
        let bd = catalog_data(grid, 9);
        let base = dirichlet_assemble(&fact, &bd, fact.index - 1.0, 1).unwrap();
        let fine = dirichlet_assemble(&fact, &bd, fact.index - 1.0, 4).unwrap();
        // The integrals agree within the factor's spectral interpolation
        // accuracy and the traces still verify.
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (a, b) in base.a0.iter().zip(fine.a0.iter()) {
            worst = worst.max((a - b).norm());
            scale = scale.max(b.norm());
        }
        assert!(worst < 1e-3 * scale, "oversampling shift {worst:.3e}");
        let out = dirichlet_solve(&fine).unwrap();
        // Oversampled trace errors reflect the quadrature correction and are
        // reported rather than gated.
        assert!(out.trace_f_err < 1e-3, "oversampled trace {}", out.trace_f_err);
    }
}
