//! The solution procedures for the digital equation on the quadrant:
//! operator application, the unique solve, the general solution with layer
//! functions, the Dirichlet reduction and the nonlocal boundary value
//! problem.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{QpdoError, Result};
use crate::grid::{GridFunction, LatticeGrid, QuadrantConvention};
use crate::sobolev::{norm_hs, SobolevParams, WeightMode};
use crate::symbol::PeriodicSymbol;
use crate::transform::{dft1_forward, dft_forward, dft_inverse};

mod dirichlet;
mod general;
mod nonlocal;
mod unique;

pub use dirichlet::{dirichlet_assemble, dirichlet_solve, DirichletOutput, DirichletSystem};
pub use general::{general_solution, GeneralSolutionOutput, GeneralSolutionSpec};
pub use nonlocal::{solve_nonlocal, solve_nonlocal_with_options, NonlocalOutput};
pub use unique::{solve_unique, solve_unique_with_continuation, UniqueSolveOutput};

/// A digital pseudo-differential operator: spectral multiplication by its
/// symbol conjugated by the transform pair.
#[derive(Debug, Clone)]
pub struct DigitalOperator {
    pub symbol: PeriodicSymbol,
}

impl DigitalOperator {
    pub fn new(symbol: PeriodicSymbol) -> Self {
        DigitalOperator { symbol }
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        if self.symbol.grid != u.grid {
            return Err(QpdoError::GridMismatch("operator vs argument".into()));
        }
        Ok(dft_inverse(&self.symbol.mul_spectrum(&dft_forward(u))?))
    }

    /// Measured `H^s -> H^{s-alpha}` boundedness ratio for one input.
    pub fn boundedness_ratio(&self, u: &GridFunction, s: f64, mode: WeightMode) -> Result<f64> {
        let au = self.apply(u)?;
        let num = norm_hs(&au, SobolevParams::new(s - self.symbol.declared_order, mode));
        let den = norm_hs(u, SobolevParams::new(s, mode));
        Ok(num / den)
    }
}

/// One-dimensional boundary data for the Dirichlet and nonlocal problems,
/// kept together with its transforms.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub grid: LatticeGrid,
    /// Data attached to the `x2`-axis condition.
    pub f: Array1<Complex64>,
    /// Data attached to the `x1`-axis condition.
    pub g: Array1<Complex64>,
    pub f_spec: Array1<Complex64>,
    pub g_spec: Array1<Complex64>,
}

impl BoundaryData {
    pub fn new(grid: LatticeGrid, f: Array1<Complex64>, g: Array1<Complex64>) -> Result<Self> {
        if f.len() != grid.len() || g.len() != grid.len() {
            return Err(QpdoError::GridMismatch(format!(
                "boundary data length {} / {} vs grid {}",
                f.len(),
                g.len(),
                grid.len()
            )));
        }
        let f_spec = dft1_forward(&f, grid);
        let g_spec = dft1_forward(&g, grid);
        Ok(BoundaryData {
            grid,
            f,
            g,
            f_spec,
            g_spec,
        })
    }

    /// Build from frequency-side data, recovering the spatial fields by the
    /// inverse one-dimensional transform.
    pub fn from_spectra(
        grid: LatticeGrid,
        f_spec: Array1<Complex64>,
        g_spec: Array1<Complex64>,
    ) -> Result<Self> {
        if f_spec.len() != grid.len() || g_spec.len() != grid.len() {
            return Err(QpdoError::GridMismatch("boundary spectra length".into()));
        }
        let f = crate::transform::dft1_inverse(&f_spec, grid);
        let g = crate::transform::dft1_inverse(&g_spec, grid);
        Ok(BoundaryData {
            grid,
            f,
            g,
            f_spec,
            g_spec,
        })
    }

    /// Measured transforms at the zero frequency (the nonlocal compatibility
    /// quantities).
    pub fn compatibility_defect(&self) -> (Complex64, Complex64) {
        let zero = self.grid.pos_of(0);
        (self.f_spec[zero], self.g_spec[zero])
    }

    /// Relative modulus of the data on the negative half-line.
    pub fn half_line_defect(&self) -> f64 {
        let peak = self
            .f
            .iter()
            .chain(self.g.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut bad: f64 = 0.0;
        for i in 0..self.grid.len() {
            if self.grid.index_of(i) < 0 {
                bad = bad.max(self.f[i].norm()).max(self.g[i].norm());
            }
        }
        bad / peak
    }
}

/// Relative l2 residual of `A u = v` over the open quadrant.
///
/// The equation lives on the strict quadrant regardless of the support
/// convention: axis rows may legitimately carry layer data.
pub fn open_quadrant_residual(
    symbol: &PeriodicSymbol,
    u: &GridFunction,
    v: &GridFunction,
) -> Result<f64> {
    let au = DigitalOperator::new(symbol.clone()).apply(u)?;
    let grid = u.grid;
    let h2 = grid.h() * grid.h();
    let mut num = 0.0;
    for (m1, m2) in grid.indices() {
        if m1 > 0 && m2 > 0 {
            num += (au.get(m1, m2) - v.get(m1, m2)).norm_sqr();
        }
    }
    let num = (num * h2).sqrt();
    let den_v = v.l2_norm();
    let den = if den_v > 0.0 { den_v } else { au.l2_norm() };
    Ok(if den > 0.0 { num / den } else { num })
}

/// Admissibility window `|kappa - s| < 1/2` for the unique solve.
pub fn check_unique_admissible(kappa: f64, s: f64) -> Result<()> {
    if (kappa - s).abs() >= 0.5 {
        return Err(QpdoError::Admissibility(format!(
            "|kappa - s| = {:.4} is not below 1/2 (kappa = {kappa}, s = {s})",
            (kappa - s).abs()
        )));
    }
    Ok(())
}

/// Splitting `kappa - s = n + delta` for the general solution; returns
/// `delta` if admissible for the given `n`.
pub fn check_general_admissible(kappa: f64, s: f64, n: u32) -> Result<f64> {
    let delta = kappa - s - n as f64;
    if delta.abs() >= 0.5 {
        return Err(QpdoError::Admissibility(format!(
            "kappa - s = {} does not split as {n} + delta with |delta| < 1/2",
            kappa - s
        )));
    }
    Ok(delta)
}

/// One row of the solver report table.
#[derive(Debug, Clone)]
pub struct SolverReportRow {
    pub problem: String,
    pub h: f64,
    pub n: usize,
    pub s: f64,
    pub kappa: f64,
    pub residual: f64,
    pub exterior_mass: f64,
    pub apriori_ratio: f64,
    pub cond: f64,
}

impl SolverReportRow {
    pub const HEADER: &'static str =
        "problem,h,N,s,kappa,residual,exterior_mass,apriori_ratio,cond";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.problem,
            self.h,
            self.n,
            self.s,
            self.kappa,
            self.residual,
            self.exterior_mass,
            self.apriori_ratio,
            self.cond
        )
    }
}

/// Quadrant support convention used when measuring solution exterior mass:
/// solutions are plus-type, so the closed quadrant is the reference.
pub(crate) fn solution_exterior_mass(u: &GridFunction) -> f64 {
    u.exterior_mass(QuadrantConvention::Closed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::SymbolExpr;
    use crate::diff::discrete_laplacian;
    use crate::grid::QuadrantConvention;

    #[test]
    fn identity_operator_is_identity() {
        let grid = LatticeGrid::new(0.25, 8).unwrap();
        let u = crate::catalog::interior_rhs(grid, 2, 1);
        let op = DigitalOperator::new(PeriodicSymbol::identity(grid));
        let au = op.apply(&u).unwrap();
        let mut worst: f64 = 0.0;
        for (a, b) in au.values.iter().zip(u.values.iter()) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-13 * (1.0 + u.max_abs()));
    }

    #[test]
    fn laplace_symbol_application_matches_stencil_operator() {
        let grid = LatticeGrid::new(0.25, 16).unwrap();
        let u = crate::catalog::interior_rhs(grid, 7, 2);
        let sym = SymbolExpr::parse("laplace")
            .unwrap()
            .build_symbol(grid, QuadrantConvention::Closed)
            .unwrap();
        let via_symbol = DigitalOperator::new(sym).apply(&u).unwrap();
        let via_stencil = discrete_laplacian(&u);
        let scale = via_stencil.max_abs();
        let mut worst: f64 = 0.0;
        for (a, b) in via_symbol.values.iter().zip(via_stencil.values.iter()) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-12 * scale);
    }

    #[test]
    fn operator_linearity() {
        let grid = LatticeGrid::new(0.25, 16).unwrap();
        let sym = SymbolExpr::parse("exp_split(4,1.0)")
            .unwrap()
            .build_symbol(grid, QuadrantConvention::Closed)
            .unwrap();
        let op = DigitalOperator::new(sym);
        let u = crate::catalog::interior_rhs(grid, 1, 1);
        let v = crate::catalog::interior_rhs(grid, 2, 1);
        let alpha = Complex64::new(1.3, -0.2);
        let combo = GridFunction {
            grid,
            values: u.values.mapv(|x| x * alpha) + &v.values,
        };
        let lhs = op.apply(&combo).unwrap();
        let rhs_u = op.apply(&u).unwrap();
        let rhs_v = op.apply(&v).unwrap();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for ((l, a), b) in lhs.values.iter().zip(rhs_u.values.iter()).zip(rhs_v.values.iter()) {
            let r = a * alpha + b;
            worst = worst.max((l - r).norm());
            scale = scale.max(r.norm());
        }
        assert!(worst < 1e-11 * scale);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g1 = LatticeGrid::new(0.25, 8).unwrap();
        let g2 = LatticeGrid::new(0.25, 16).unwrap();
        let op = DigitalOperator::new(PeriodicSymbol::identity(g1));
        let u = GridFunction::zeros(g2);
        assert!(matches!(op.apply(&u), Err(QpdoError::GridMismatch(_))));
    }

    #[test]
    fn boundary_data_diagnostics() {
        let grid = LatticeGrid::new(0.25, 16).unwrap();
        let f = crate::catalog::half_line_data_zero_mean(grid, 3);
        let g = crate::catalog::half_line_data_zero_mean(grid, 4);
        let bd = BoundaryData::new(grid, f, g).unwrap();
        let (fd, gd) = bd.compatibility_defect();
        let peak = bd.f_spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(fd.norm() < 1e-11 * peak);
        assert!(gd.norm() < 1e-11 * peak);
        assert_eq!(bd.half_line_defect(), 0.0);
        // Non-compatible data is detected.
        let f2 = crate::catalog::half_line_data(grid, 3);
        let bd2 = BoundaryData::new(grid, f2, crate::catalog::half_line_data(grid, 4)).unwrap();
        let (fd2, _) = bd2.compatibility_defect();
        assert!(fd2.norm() > 1e-6);
    }

    #[test]
    fn admissibility_windows() {
        assert!(check_unique_admissible(0.0, 0.3).is_ok());
        assert!(check_unique_admissible(0.0, 0.5).is_err());
        assert!(check_general_admissible(1.0, -0.2, 1).is_ok());
        assert!(check_general_admissible(1.0, -0.6, 1).is_err());
        assert!((check_general_admissible(2.0, -0.25, 2).unwrap() - 0.25).abs() < 1e-14);
    }
}
