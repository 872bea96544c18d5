//! Divided differences and the discrete Laplacian, with their exact spectral
//! multipliers on the cyclic window.
//!
//! The first-order divided difference is the forward difference
//! `h^-1 (u(x + h e_a) - u(x))` with cyclic wrap at the window edge; its
//! spectral multiplier is `h^-1 (exp(+i h xi_a) - 1)`.  The symbol-algebra
//! variable `zeta_a = h^-1 (exp(-i h xi_a) - 1)` used elsewhere in the crate
//! is the multiplier of the reflected difference; the two have equal modulus
//! at every frequency node, so every norm weight built from them agrees.

use num_complex::Complex64;

use crate::grid::{GridFunction, LatticeGrid};

/// Which lattice axis an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    One,
    Two,
}

/// Multiplier of the forward divided difference, `h^-1 (exp(+i h xi) - 1)`.
pub fn forward_multiplier(grid: LatticeGrid, xi: f64) -> Complex64 {
    (Complex64::new(0.0, grid.h() * xi).exp() - 1.0) * grid.hbar()
}

/// Symbol-algebra variable `zeta = h^-1 (exp(-i h xi) - 1)`; kernel on the
/// nonnegative side, conjugate to [`forward_multiplier`] on the real axis.
pub fn zeta(grid: LatticeGrid, xi: f64) -> Complex64 {
    (Complex64::new(0.0, -grid.h() * xi).exp() - 1.0) * grid.hbar()
}

/// Mirror variable `eta = h^-1 (exp(+i h xi) - 1)`, kernel on the nonpositive side.
pub fn eta(grid: LatticeGrid, xi: f64) -> Complex64 {
    forward_multiplier(grid, xi)
}

/// Divided difference of order 1 or 2 along `axis`, cyclic at the window edge.
pub fn divided_difference(u: &GridFunction, axis: Axis, order: u32) -> GridFunction {
    assert!(order == 1 || order == 2, "order must be 1 or 2");
    let first = forward_difference(u, axis);
    if order == 1 {
        first
    } else {
        forward_difference(&first, axis)
    }
}

fn forward_difference(u: &GridFunction, axis: Axis) -> GridFunction {
    let grid = u.grid;
    let n = grid.half_window() as i64;
    let hbar = grid.hbar();
    let wrap = |m: i64| if m >= n { m - 2 * n } else { m };
    GridFunction::from_fn(grid, |m1, m2| {
        let ahead = match axis {
            Axis::One => u.get(wrap(m1 + 1), m2),
            Axis::Two => u.get(m1, wrap(m2 + 1)),
        };
        (ahead - u.get(m1, m2)) * hbar
    })
}

/// Discrete Laplacian, the sum of second-order differences along both axes.
pub fn discrete_laplacian(u: &GridFunction) -> GridFunction {
    let a = divided_difference(u, Axis::One, 2);
    let b = divided_difference(u, Axis::Two, 2);
    GridFunction {
        grid: u.grid,
        values: &a.values + &b.values,
    }
}

/// Spectral multiplier of [`discrete_laplacian`] at a frequency point.
pub fn laplacian_multiplier(grid: LatticeGrid, xi1: f64, xi2: f64) -> Complex64 {
    let z1 = forward_multiplier(grid, xi1);
    let z2 = forward_multiplier(grid, xi2);
    z1 * z1 + z2 * z2
}

/// The norm-weight combination `zeta^2 = zeta_1^2 + zeta_2^2`; its modulus
/// equals that of [`laplacian_multiplier`] at every real frequency.
pub fn zeta_squared(grid: LatticeGrid, xi1: f64, xi2: f64) -> Complex64 {
    let z1 = zeta(grid, xi1);
    let z2 = zeta(grid, xi2);
    z1 * z1 + z2 * z2
}
