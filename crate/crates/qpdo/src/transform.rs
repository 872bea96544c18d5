//! The discrete Fourier transform pair on the cyclic window.
//!
//! Forward: `s(xi_k) = h^2 sum_m u(m h) exp(-i m.k pi/N)`.
//! Inverse: `u(m h) = (dxi)^2/(2 pi)^2 sum_k s(xi_k) exp(+i m.k pi/N)`,
//! the exact quadrature of the inversion integral over one period square.
//! Both reduce to standard FFTs after rotating the centered index range
//! `{-N..N-1}` to `{0..2N-1}`, so the pair is mutually inverse to machine
//! precision and Parseval holds exactly on the cyclic group.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use crate::grid::{GridFunction, LatticeGrid, SpectrumFunction};

thread_local! {
    static PLANS: RefCell<PlanCache> = RefCell::new(PlanCache::default());
}

#[derive(Default)]
struct PlanCache {
    planner: Option<FftPlanner<f64>>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

fn with_plan(len: usize, forward: bool, f: impl FnOnce(&Arc<dyn Fft<f64>>)) {
    PLANS.with(|cache| {
        let mut cache = cache.borrow_mut();
        let planner = cache.planner.get_or_insert_with(FftPlanner::new);
        let plan = if forward {
            planner.plan_fft_forward(len)
        } else {
            planner.plan_fft_inverse(len)
        };
        let map = if forward { &mut cache.forward } else { &mut cache.inverse };
        let plan = map.entry(len).or_insert(plan).clone();
        drop(cache);
        f(&plan);
    });
}

/// Rotate both axes by half the length, moving the centered origin to index 0
/// (its own inverse for even lengths).
fn rotate_half_2d(a: &Array2<Complex64>) -> Array2<Complex64> {
    let (r, c) = a.dim();
    Array2::from_shape_fn((r, c), |(i, j)| a[[(i + r / 2) % r, (j + c / 2) % c]])
}

fn rotate_half_1d(a: &Array1<Complex64>) -> Array1<Complex64> {
    let n = a.len();
    Array1::from_shape_fn(n, |i| a[(i + n / 2) % n])
}

fn fft2_in_place(data: &mut Array2<Complex64>, forward: bool) {
    let (rows, cols) = data.dim();
    with_plan(cols, forward, |plan| {
        for mut row in data.rows_mut() {
            let slice = row.as_slice_mut().expect("row-major layout");
            plan.process(slice);
        }
    });
    with_plan(rows, forward, |plan| {
        let mut scratch = vec![Complex64::ZERO; rows];
        for j in 0..cols {
            for i in 0..rows {
                scratch[i] = data[[i, j]];
            }
            plan.process(&mut scratch);
            for i in 0..rows {
                data[[i, j]] = scratch[i];
            }
        }
    });
}

/// Forward discrete Fourier transform `F_d`.
pub fn dft_forward(u: &GridFunction) -> SpectrumFunction {
    let grid = u.grid;
    let mut work = rotate_half_2d(&u.values);
    fft2_in_place(&mut work, true);
    let scale = Complex64::new(grid.h() * grid.h(), 0.0);
    let mut values = rotate_half_2d(&work);
    values.mapv_inplace(|v| v * scale);
    SpectrumFunction { grid, values }
}

/// Inverse discrete Fourier transform `F_d^{-1}`.
pub fn dft_inverse(s: &SpectrumFunction) -> GridFunction {
    let grid = s.grid;
    let mut work = rotate_half_2d(&s.values);
    fft2_in_place(&mut work, false);
    let n = grid.half_window() as f64;
    let scale = Complex64::new(grid.hbar() * grid.hbar() / (4.0 * n * n), 0.0);
    let mut values = rotate_half_2d(&work);
    values.mapv_inplace(|v| v * scale);
    GridFunction { grid, values }
}

/// Trigonometric interpolation of one coarse frequency line onto a fine grid
/// (`fine` a multiple of the coarse length); exact for the band the coarse
/// grid carries.
pub(crate) fn interpolate_line(line: &[Complex64], fine: usize) -> Vec<Complex64> {
    let coarse = line.len();
    debug_assert!(fine.is_multiple_of(coarse));
    // Coefficients c_m = (1/2N) sum_p w_p exp(+i pi m p / N), m centered.
    let mut work: Vec<Complex64> = (0..coarse)
        .map(|p| line[(p + coarse / 2) % coarse])
        .collect();
    with_plan(coarse, false, |plan| plan.process(&mut work));
    let scale = 1.0 / coarse as f64;
    let mut coeffs = vec![Complex64::ZERO; fine];
    for (idx, v) in work.iter().enumerate() {
        let m = if idx < coarse / 2 {
            idx as i64
        } else {
            idx as i64 - coarse as i64
        };
        let fine_idx = m.rem_euclid(fine as i64) as usize;
        coeffs[fine_idx] = v * scale;
    }
    with_plan(fine, true, |plan| plan.process(&mut coeffs));
    // Values on the centered fine grid.
    (0..fine).map(|q| coeffs[(q + fine / 2) % fine]).collect()
}

/// One-dimensional forward transform `c~(xi_k) = h sum_m c(m h) exp(-i m k pi/N)`.
pub fn dft1_forward(values: &Array1<Complex64>, grid: LatticeGrid) -> Array1<Complex64> {
    assert_eq!(values.len(), grid.len());
    let mut work = rotate_half_1d(values);
    with_plan(grid.len(), true, |plan| {
        plan.process(work.as_slice_mut().expect("contiguous"));
    });
    let scale = Complex64::new(grid.h(), 0.0);
    let mut out = rotate_half_1d(&work);
    out.mapv_inplace(|v| v * scale);
    out
}

/// One-dimensional inverse transform with weight `dxi/(2 pi)` per node.
pub fn dft1_inverse(values: &Array1<Complex64>, grid: LatticeGrid) -> Array1<Complex64> {
    assert_eq!(values.len(), grid.len());
    let mut work = rotate_half_1d(values);
    with_plan(grid.len(), false, |plan| {
        plan.process(work.as_slice_mut().expect("contiguous"));
    });
    let scale = Complex64::new(grid.hbar() / (2.0 * grid.half_window() as f64), 0.0);
    let mut out = rotate_half_1d(&work);
    out.mapv_inplace(|v| v * scale);
    out
}
