//! Cross-module invariants: oracle equivalence across window sizes, operator
//! boundedness across lattice steps, projector norm bounds, and the
//! plus-norm upper-bound property against a parametric continuation family.

use ndarray::Array2;
use num_complex::Complex64;
use qpdo::catalog::{interior_rhs, SymbolExpr};
use qpdo::grid::{GridFunction, LatticeGrid, QuadrantConvention};
use qpdo::oracle::{assemble_dense, dense_solve};
use qpdo::projector::{project_plus, ProjectorConfig};
use qpdo::sobolev::{norm_hs, norm_hs_plus, SobolevParams, WeightMode};
use qpdo::solver::{solve_unique, DigitalOperator};
use qpdo::transform::{dft_forward, dft_inverse};

fn random_grid_fn(grid: LatticeGrid, seed: u64) -> GridFunction {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    GridFunction::from_fn(grid, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}

/// The dense finite-section solution approaches the spectral solve as the
/// window grows, under both conventions.
#[test]
fn oracle_equivalence_improves_with_window() {
    let grid = LatticeGrid::new(0.125, 64).unwrap();
    // Elementary product: the kernel has exact one-cell support, so every
    // window passes the decay guard.
    let expr = SymbolExpr::parse("product(plus(16.0,1),minus(16.0,1))").unwrap();
    for conv in [QuadrantConvention::Closed, QuadrantConvention::Open] {
        let fact = expr.build_factorization(grid, conv).unwrap();
        let sym = fact.product();
        let s = fact.index;
        let mut errs = Vec::new();
        for m in [8usize, 16, 32] {
            let p = assemble_dense(&sym, m, conv).unwrap();
            let v_full = interior_rhs(grid, 21, 2);
            let mut v_win = Array2::from_elem((m, m), Complex64::ZERO);
            let mut v_grid = GridFunction::zeros(grid);
            for (pos, (m1, m2)) in p.window_indices().iter().enumerate() {
                let val = v_full.get(*m1, *m2);
                v_win[[pos / m, pos % m]] = val;
                v_grid.set(*m1, *m2, val);
            }
            let dense = dense_solve(&p, &v_win).unwrap();
            let spectral = solve_unique(&fact, s, &v_grid, conv).unwrap();
            let mut err: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for (pos, (m1, m2)) in p.window_indices().iter().enumerate() {
                let su = spectral.u.get(*m1, *m2);
                scale = scale.max(su.norm());
                if (pos / m) < m / 2 && (pos % m) < m / 2 {
                    err = err.max((dense.values[[pos / m, pos % m]] - su).norm());
                }
            }
            errs.push(err / scale);
        }
        assert!(
            errs[1] < errs[0] && errs[2] <= errs[1],
            "not improving under {conv}: {errs:?}"
        );
    }
}

/// Operator norm ratio `|A u|_{s-alpha} / |u|_s` stays within a narrow band
/// across lattice steps for order-certified catalog symbols.
#[test]
fn operator_boundedness_uniform_in_h() {
    let window = 4.0;
    for name in ["weight(1)", "exp_split(5,1.0)"] {
        let expr = SymbolExpr::parse(name).unwrap();
        let mut ratios = Vec::new();
        for k in 3..=5 {
            let h = 2f64.powi(-k);
            let n = (window / h) as usize;
            let grid = LatticeGrid::new(h, n).unwrap();
            let sym = expr.build_symbol(grid, QuadrantConvention::Closed).unwrap();
            let op = DigitalOperator::new(sym);
            // Fixed physical data across the sweep.
            let u = GridFunction::from_fn(grid, |m1, m2| {
                let (x, y) = (grid.coord(m1), grid.coord(m2));
                Complex64::new(
                    (-(x * x + y * y) / 0.32).exp(),
                    0.5 * (-((x - 0.4).powi(2) + y * y) / 0.18).exp(),
                )
            });
            let ratio = op
                .boundedness_ratio(&u, 0.3, WeightMode::ModulusSum)
                .unwrap();
            ratios.push(ratio);
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            (max - min) / min <= 0.10,
            "{name}: boundedness ratio drifts {ratios:?}"
        );
    }
}

/// Projector norm bound inside the admissible smoothness band: the ratio
/// `|B u|_s / |u|_s` stays below an h-independent ceiling for |s| < 1/2.
/// Outside the band (s = 0.9) the ratio is reported only.
#[test]
fn projector_norm_bounds_inside_band() {
    let mut report = Vec::new();
    for s in [-0.4, 0.0, 0.4] {
        let mut worst: f64 = 0.0;
        for k in 2..=4 {
            let h = 2f64.powi(-k);
            let grid = LatticeGrid::new(h, 16).unwrap();
            for seed in 0..6u64 {
                let u = random_grid_fn(grid, 100 * k as u64 + seed);
                let spec = dft_forward(&u);
                let p = project_plus(&spec, &ProjectorConfig::spatial(QuadrantConvention::Closed))
                    .unwrap();
                let pu = dft_inverse(&p);
                let params = SobolevParams::new(s, WeightMode::ModulusSum);
                let ratio = norm_hs(&pu, params) / norm_hs(&u, params);
                worst = worst.max(ratio);
            }
        }
        assert!(worst <= 4.0, "s={s}: projector ratio {worst}");
        report.push(format!("s={s}: {worst:.3}"));
    }
    // Outside the band: measured and reported, not asserted.
    let mut outside: f64 = 0.0;
    for k in 2..=4 {
        let grid = LatticeGrid::new(2f64.powi(-k), 16).unwrap();
        for seed in 0..6u64 {
            let u = random_grid_fn(grid, 77 + seed);
            let spec = dft_forward(&u);
            let p = project_plus(&spec, &ProjectorConfig::spatial(QuadrantConvention::Closed))
                .unwrap();
            let pu = dft_inverse(&p);
            let params = SobolevParams::new(0.9, WeightMode::ModulusSum);
            outside = outside.max(norm_hs(&pu, params) / norm_hs(&u, params));
        }
    }
    println!("projector norm ratios: {}, s=0.9 (reported): {outside:.3}", report.join(", "));
}

/// The zero-extension plus-norm dominates the infimum over a five-parameter
/// family of smooth exterior continuations; the family minimum is computed
/// exactly from the induced quadratic form.
#[test]
fn plus_norm_dominates_parametric_continuations() {
    let grid = LatticeGrid::new(0.25, 16).unwrap();
    let conv = QuadrantConvention::Closed;
    let s_vals = [-0.7, -0.3, 0.0];
    // Five smooth bumps supported strictly outside the closed quadrant.
    let tails: Vec<GridFunction> = [(-5i64, -5i64), (-8, 2), (2, -8), (-4, 6), (6, -4)]
        .iter()
        .map(|&(cx, cy)| {
            GridFunction::from_fn(grid, |m1, m2| {
                if conv.contains(m1, m2) {
                    return Complex64::ZERO;
                }
                let r2 = ((m1 - cx).pow(2) + (m2 - cy).pow(2)) as f64;
                Complex64::new((-r2 / 4.0).exp(), 0.0)
            })
        })
        .collect();

    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for &s in &s_vals {
        let params = SobolevParams::new(s, WeightMode::ModulusSum);
        for trial in 0..4 {
            let v = GridFunction::from_fn(grid, |m1, m2| {
                if m1 >= 1 && m2 >= 1 && m1 <= 6 && m2 <= 6 {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                } else {
                    Complex64::ZERO
                }
            });
            let upper = norm_hs_plus(&v, params, conv).unwrap();

            // Norm^2 of v + sum t_i tail_i is a quadratic form in t; minimize
            // it exactly through the weighted spectral inner products.
            let weight = |k1: i64, k2: i64| {
                qpdo::sobolev::weight_value(grid, params.mode, grid.freq(k1), grid.freq(k2))
                    .powf(params.s)
            };
            let sv = dft_forward(&v);
            let st: Vec<_> = tails.iter().map(dft_forward).collect();
            let dim = st.len();
            let mut gram = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
            let mut cross = nalgebra::DVector::<Complex64>::zeros(dim);
            for (k1, k2) in grid.indices() {
                let w = weight(k1, k2);
                for i in 0..dim {
                    let ti = st[i].get(k1, k2);
                    cross[i] += ti.conj() * sv.get(k1, k2) * w;
                    for j in 0..dim {
                        gram[(i, j)] += ti.conj() * st[j].get(k1, k2) * w;
                    }
                }
            }
            let t = gram
                .clone()
                .lu()
                .solve(&cross.map(|c| -c))
                .expect("gram solve");
            // Minimum value of the quadratic form.
            let mut min_sq = 0.0;
            let dxi = grid.freq_step();
            for (k1, k2) in grid.indices() {
                let w = weight(k1, k2);
                let mut val = sv.get(k1, k2);
                for i in 0..dim {
                    val += t[i] * st[i].get(k1, k2);
                }
                min_sq += w * val.norm_sqr();
            }
            let family_min = (min_sq * dxi * dxi).sqrt();
            assert!(
                upper >= family_min - 1e-10 * upper,
                "trial {trial} s={s}: zero-extension {upper} below family minimum {family_min}"
            );
            // For negative smoothness a genuinely better continuation exists,
            // so the bound is not vacuous.
            if s < 0.0 {
                assert!(family_min < upper, "family failed to improve at s={s}");
            }
        }
    }
}
