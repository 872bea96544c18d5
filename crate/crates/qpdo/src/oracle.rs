//! Ground truth by brute force: dense kernel-matrix assembly of a digital
//! operator on a truncated quadrant window plus a direct solve.
//!
//! The matrix is block-Toeplitz with Toeplitz blocks since the kernel is
//! translation invariant.  Assembly reads kernel values well inside the
//! cyclic window (`M <= N/2`), and a decay guard rejects kernels that are
//! still large at offset radius `M`.  The oracle solves the truncated-domain
//! problem, which differs from the quarter-plane problem by a boundary-layer
//! truncation error, so solver comparisons assert convergence with `M`
//! rather than fixed equality.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{QpdoError, Result};
use crate::grid::{GridFunction, LatticeGrid, QuadrantConvention};
use crate::symbol::PeriodicSymbol;

/// Dense finite-section realization of a digital operator on a quadrant
/// sub-window.
pub struct DenseProblem {
    pub grid: LatticeGrid,
    pub window: usize,
    pub conv: QuadrantConvention,
    matrix: DMatrix<Complex64>,
}

impl DenseProblem {
    /// Lattice index pairs of the window, row-major; `{0..M-1}^2` under the
    /// closed convention, `{1..M}^2` under the open one.
    pub fn window_indices(&self) -> Vec<(i64, i64)> {
        let m = self.window as i64;
        let base = match self.conv {
            QuadrantConvention::Closed => 0i64,
            QuadrantConvention::Open => 1i64,
        };
        let mut out = Vec::with_capacity(self.window * self.window);
        for a in 0..m {
            for b in 0..m {
                out.push((base + a, base + b));
            }
        }
        out
    }

    pub fn size(&self) -> usize {
        self.window * self.window
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Matrix-vector product against window samples.
    pub fn matvec(&self, w: &Array2<Complex64>) -> Array2<Complex64> {
        let n = self.size();
        let x = DVector::from_fn(n, |r, _| w[[r / self.window, r % self.window]]);
        let y = &self.matrix * x;
        Array2::from_shape_fn((self.window, self.window), |(a, b)| y[a * self.window + b])
    }

    /// One-norm of the matrix (max column sum).
    pub fn norm_one(&self) -> f64 {
        let (rows, cols) = self.matrix.shape();
        (0..cols)
            .map(|c| (0..rows).map(|r| self.matrix[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Assemble the dense problem for a symbol.  `window` is the per-axis size
/// of the quadrant sub-window.
pub fn assemble_dense(
    sym: &PeriodicSymbol,
    window: usize,
    conv: QuadrantConvention,
) -> Result<DenseProblem> {
    let grid = sym.grid;
    let n = grid.half_window();
    if window == 0 || window > n / 2 {
        return Err(QpdoError::InvalidGrid(format!(
            "dense window {window} must satisfy 1 <= M <= N/2 = {}",
            n / 2
        )));
    }
    let kernel = sym.kernel();
    let peak = kernel.max_abs();
    let mut spread: f64 = 0.0;
    for (m1, m2) in grid.indices() {
        if m1.unsigned_abs() as usize >= window || m2.unsigned_abs() as usize >= window {
            spread = spread.max(kernel.get(m1, m2).norm());
        }
    }
    if peak > 0.0 && spread / peak > 1e-8 {
        return Err(QpdoError::Numerical(format!(
            "kernel decay guard: relative mass {:.3e} at offset radius {window}; \
             increase the window or N",
            spread / peak
        )));
    }
    let h2 = grid.h() * grid.h();
    let base = match conv {
        QuadrantConvention::Closed => 0i64,
        QuadrantConvention::Open => 1i64,
    };
    let mw = window as i64;
    let size = window * window;
    let matrix = DMatrix::from_fn(size, size, |r, c| {
        let (x1, x2) = (base + (r / window) as i64, base + (r % window) as i64);
        let (y1, y2) = (base + (c / window) as i64, base + (c % window) as i64);
        debug_assert!((x1 - y1).abs() < mw && (x2 - y2).abs() < mw);
        kernel.get(x1 - y1, x2 - y2) * h2
    });
    Ok(DenseProblem {
        grid,
        window,
        conv,
        matrix,
    })
}

/// Output of the direct solve.
pub struct DenseSolveOutput {
    /// Window samples of the solution.
    pub values: Array2<Complex64>,
    /// Relative residual of the linear system.
    pub residual: f64,
    /// One-norm condition estimate.
    pub cond: f64,
    /// Solution embedded into the full grid (zero outside the window).
    pub embedded: GridFunction,
}

/// Direct LU solve of the truncated system.
pub fn dense_solve(p: &DenseProblem, rhs: &Array2<Complex64>) -> Result<DenseSolveOutput> {
    let n = p.size();
    assert_eq!(rhs.dim(), (p.window, p.window));
    let b = DVector::from_fn(n, |r, _| rhs[[r / p.window, r % p.window]]);
    let lu = p.matrix.clone().lu();
    let x = lu
        .solve(&b)
        .ok_or_else(|| QpdoError::SingularAssembly("dense LU solve failed".into()))?;

    let cond = estimate_cond(p, &lu);
    if cond > 1e12 {
        return Err(QpdoError::IllConditioned(format!(
            "dense system condition estimate {cond:.3e} exceeds 1e12"
        )));
    }

    let r = &p.matrix * &x - &b;
    let residual = r.norm() / b.norm().max(f64::MIN_POSITIVE);
    if b.norm() > 0.0 && residual > 1e-10 {
        return Err(QpdoError::Numerical(format!(
            "dense solve residual {residual:.3e} above 1e-10"
        )));
    }

    let values = Array2::from_shape_fn((p.window, p.window), |(a, b)| x[a * p.window + b]);
    let mut embedded = GridFunction::zeros(p.grid);
    for (pos, (m1, m2)) in p.window_indices().into_iter().enumerate() {
        embedded.set(m1, m2, x[pos]);
    }
    Ok(DenseSolveOutput {
        values,
        residual,
        cond,
        embedded,
    })
}

fn estimate_cond(p: &DenseProblem, lu: &nalgebra::linalg::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let n = p.size();
    let a1 = p.norm_one();
    if n <= 400 {
        if let Some(inv) = p.matrix.clone().try_inverse() {
            let inv1 = (0..n)
                .map(|c| (0..n).map(|r| inv[(r, c)].norm()).sum::<f64>())
                .fold(0.0, f64::max);
            return a1 * inv1;
        }
        return f64::INFINITY;
    }
    // Stochastic lower bound on |A^-1|_1 from a few sign-vector solves.
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xc0de);
    let mut best: f64 = 0.0;
    for _ in 0..4 {
        let x = DVector::from_fn(n, |_, _| {
            Complex64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0)
        });
        if let Some(y) = lu.solve(&x) {
            let num: f64 = y.iter().map(|v| v.norm()).sum();
            let den: f64 = x.iter().map(|v| v.norm()).sum();
            best = best.max(num / den);
        }
    }
    a1 * best
}
