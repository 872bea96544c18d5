//! Discrete-versus-continuous comparison: the lifting operator, restricted
//! symbols, the continuous solution of the nonlocal problem by quadrature,
//! the tail-integral oracle, and the convergence study.
//!
//! The catalog continuous factor is separable, `(a - i xi_1)(b - i xi_2)`,
//! analytic and nonvanishing over the quadrant tube; its minus counterpart is
//! the reflected conjugate.  Separability factorizes every two-dimensional
//! Fourier integral of the solution formula into products of one-dimensional
//! integrals, which the quadrature engine evaluates with a smooth tail taper.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{QpdoError, Result};
use crate::grid::LatticeGrid;
use crate::quad::{fourier_box, fourier_line};
use crate::solver::{solve_nonlocal_with_options, BoundaryData, NonlocalOutput};
use crate::symbol::{PeriodicSymbol, WaveFactorization};
use crate::transform::dft1_inverse;

/// Closed-form continuous wave-factorized symbol.
///
/// With this crate's forward kernel `exp(-i x.xi)`, one-sided kernels on the
/// nonnegative side pair with factors of the form `(a + i xi)`: the grid
/// variable `zeta = (exp(-i h xi) - 1)/h` tends to `-i xi`, so the discrete
/// plus factor `c - zeta_1 - zeta_2` tends to `c + i xi_1 + i xi_2`.
#[derive(Debug, Clone, Copy)]
pub enum ContinuousFactor {
    /// `A_plus = c`, `A_minus = 1`; order zero, no integrable decay.
    Constant { c: f64 },
    /// `A_plus = ((a + i xi_1)(b + i xi_2))^power` and the reflected
    /// conjugate for the minus factor; index `2 power`.
    Separable { a: f64, b: f64, power: u32 },
}

impl ContinuousFactor {
    pub fn plus_value(&self, xi1: f64, xi2: f64) -> Complex64 {
        match *self {
            ContinuousFactor::Constant { c } => Complex64::new(c, 0.0),
            ContinuousFactor::Separable { a, b, power } => {
                (Complex64::new(a, xi1) * Complex64::new(b, xi2)).powu(power)
            }
        }
    }

    pub fn minus_value(&self, xi1: f64, xi2: f64) -> Complex64 {
        match *self {
            ContinuousFactor::Constant { .. } => Complex64::ONE,
            ContinuousFactor::Separable { a, b, power } => {
                (Complex64::new(a, -xi1) * Complex64::new(b, -xi2)).powu(power)
            }
        }
    }

    /// Index of the continuous factorization.
    pub fn index(&self) -> f64 {
        match self {
            ContinuousFactor::Constant { .. } => 0.0,
            ContinuousFactor::Separable { power, .. } => 2.0 * *power as f64,
        }
    }

    /// Intrinsic frequency scale of the factor, used to size quadrature
    /// panels.
    fn scale(&self) -> f64 {
        match *self {
            ContinuousFactor::Constant { .. } => 1.0,
            ContinuousFactor::Separable { a, b, .. } => a.min(b),
        }
    }
}

/// Closed-form boundary data with an exactly vanishing zero-frequency
/// transform (the nonlocal compatibility condition).
#[derive(Debug, Clone, Copy)]
pub enum ContinuousData {
    /// Derivative of a Gaussian: `amp (d/dx) exp(-(x-mu)^2 / (2 sigma^2))`;
    /// transform `amp i xi sigma sqrt(2 pi) exp(-sigma^2 xi^2 / 2) exp(-i mu xi)`.
    GaussDeriv { amp: f64, mu: f64, sigma: f64 },
    /// Band-limited data: transform `amp (xi/band) bump(xi/band) exp(-i mu xi)`
    /// with the standard smooth bump, compactly supported in `|xi| < band`.
    BandLimited { amp: f64, mu: f64, band: f64 },
}

impl ContinuousData {
    /// Continuous Fourier transform `int f(x) exp(-i x xi) dx`.
    pub fn transform(&self, xi: f64) -> Complex64 {
        match *self {
            ContinuousData::GaussDeriv { amp, mu, sigma } => {
                let gauss = sigma * (2.0 * std::f64::consts::PI).sqrt()
                    * (-sigma * sigma * xi * xi / 2.0).exp();
                Complex64::new(0.0, amp * xi * gauss) * Complex64::new(0.0, -mu * xi).exp()
            }
            ContinuousData::BandLimited { amp, mu, band } => {
                let t = xi / band;
                if t.abs() >= 1.0 {
                    return Complex64::ZERO;
                }
                let bump = (-1.0 / (1.0 - t * t)).exp();
                Complex64::new(amp * t * bump, 0.0) * Complex64::new(0.0, -mu * xi).exp()
            }
        }
    }

    /// Spatial values by quadrature of the inverse transform (reference for
    /// the lifting tests).
    pub fn value(&self, x: f64, lambda: f64) -> Complex64 {
        fourier_line(|xi| self.transform(xi), x, lambda, self.freq_scale())
    }

    /// Intrinsic frequency scale for panel sizing.
    pub fn freq_scale(&self) -> f64 {
        match *self {
            ContinuousData::GaussDeriv { sigma, .. } => sigma.recip().min(4.0),
            ContinuousData::BandLimited { band, .. } => band / 4.0,
        }
    }

    /// Half-width of the frequency support when compact.
    pub fn band_limit(&self) -> Option<f64> {
        match *self {
            ContinuousData::GaussDeriv { .. } => None,
            ContinuousData::BandLimited { band, .. } => Some(band),
        }
    }
}

/// Lifting operator: restrict the continuous transform to one period of the
/// dual grid and invert discretely.
pub fn lift_lh(data: &ContinuousData, grid: LatticeGrid) -> Array1<Complex64> {
    let samples = Array1::from_shape_fn(grid.len(), |i| {
        data.transform(grid.freq(grid.index_of(i)))
    });
    dft1_inverse(&samples, grid)
}

/// Sample the continuous factors on the frequency grid.  The support
/// surrogate of the result is measured by the factorization constructor and
/// reported, not asserted: a restriction need not be exactly one-sided on the
/// grid.
pub fn restrict_symbol(cf: &ContinuousFactor, grid: LatticeGrid) -> Result<WaveFactorization> {
    let order = cf.index();
    let plus = PeriodicSymbol::from_fn(grid, order, |xi1, xi2| cf.plus_value(xi1, xi2));
    let minus = PeriodicSymbol::from_fn(grid, order, |xi1, xi2| cf.minus_value(xi1, xi2));
    if !plus.is_elliptic() || !minus.is_elliptic() {
        return Err(QpdoError::Ellipticity(
            "restricted continuous factor vanishes on a node".into(),
        ));
    }
    WaveFactorization::new(plus, minus, cf.index())
}

/// Values of the continuous solution of the nonlocal problem at a product
/// point set, with a Richardson consistency check.
pub struct ContinuousSolution {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// `values[i][j]` at `(x1[i], x2[j])`.
    pub values: Vec<Vec<Complex64>>,
    /// Relative change under doubling the cutoff and panel density.
    pub richardson_gap: f64,
}

/// Evaluate formula-level `u(x)` for the separable factor by factorized
/// one-dimensional quadratures over `[-2 Lambda, 2 Lambda]` with the smooth
/// taper beyond `Lambda`.
#[allow(clippy::too_many_arguments)]
pub fn continuous_solution(
    cf: &ContinuousFactor,
    f_data: &ContinuousData,
    g_data: &ContinuousData,
    x1: &[f64],
    x2: &[f64],
    lambda: f64,
    hbar_max: f64,
    tol: f64,
) -> Result<ContinuousSolution> {
    if cf.index() <= 1.0 {
        return Err(QpdoError::Admissibility(format!(
            "continuous solution needs factorization index above one, got {}",
            cf.index()
        )));
    }
    if lambda < 4.0 * std::f64::consts::PI * hbar_max {
        return Err(QpdoError::Admissibility(format!(
            "cutoff {lambda} below 4 pi hbar = {}",
            4.0 * std::f64::consts::PI * hbar_max
        )));
    }
    let (a, b, power) = match *cf {
        ContinuousFactor::Separable { a, b, power } => (a, b, power),
        ContinuousFactor::Constant { .. } => unreachable!("rejected by the index guard"),
    };

    let eval = |lam: f64, scale_div: f64| -> Vec<Vec<Complex64>> {
        // Term from g: (1/2pi int g^(xi1) e^{i x1 xi1}) (1/2pi int b/(b - i xi2) e^{i x2 xi2})
        // and symmetrically for f.
        let g_scale = g_data.freq_scale() / scale_div;
        let f_scale = f_data.freq_scale() / scale_div;
        let cauchy_scale = cf.scale() / scale_div;
        let ig: Vec<Complex64> = x1
            .iter()
            .map(|&x| fourier_line(|xi| g_data.transform(xi), x, lam, g_scale))
            .collect();
        let cb: Vec<Complex64> = x2
            .iter()
            .map(|&x| {
                fourier_line(
                    |xi| (Complex64::new(b, 0.0) / Complex64::new(b, xi)).powu(power),
                    x,
                    lam,
                    cauchy_scale,
                )
            })
            .collect();
        let jf: Vec<Complex64> = x2
            .iter()
            .map(|&x| fourier_line(|xi| f_data.transform(xi), x, lam, f_scale))
            .collect();
        let ca: Vec<Complex64> = x1
            .iter()
            .map(|&x| {
                fourier_line(
                    |xi| (Complex64::new(a, 0.0) / Complex64::new(a, xi)).powu(power),
                    x,
                    lam,
                    cauchy_scale,
                )
            })
            .collect();
        x1.iter()
            .enumerate()
            .map(|(i, _)| {
                x2.iter()
                    .enumerate()
                    .map(|(j, _)| ig[i] * cb[j] + ca[i] * jf[j])
                    .collect()
            })
            .collect()
    };

    let coarse = eval(lambda, 1.0);
    let fine = eval(2.0 * lambda, 2.0);
    let mut gap: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (rc, rf) in coarse.iter().zip(fine.iter()) {
        for (c, f) in rc.iter().zip(rf.iter()) {
            gap = gap.max((c - f).norm());
            scale = scale.max(f.norm());
        }
    }
    let richardson_gap = if scale > 0.0 { gap / scale } else { gap };
    if richardson_gap > tol {
        return Err(QpdoError::QuadratureNonConverged(format!(
            "Richardson gap {richardson_gap:.3e} above tolerance {tol:.3e}"
        )));
    }
    Ok(ContinuousSolution {
        x1: x1.to_vec(),
        x2: x2.to_vec(),
        values: fine,
        richardson_gap,
    })
}

/// Modulus of the proof's tail integral
/// `(1/4pi^2) int_{R^2 \ hbar T^2} u~(xi) exp(i x xi) dxi`
/// at each point of the product set, evaluated as full-line products minus
/// box products (separable integrands).
pub fn tail_integral(
    cf: &ContinuousFactor,
    f_data: &ContinuousData,
    g_data: &ContinuousData,
    x1: &[f64],
    x2: &[f64],
    hbar: f64,
    lambda: f64,
) -> Result<Vec<Vec<f64>>> {
    let (a, b, power) = match *cf {
        ContinuousFactor::Separable { a, b, power } => (a, b, power),
        ContinuousFactor::Constant { .. } => {
            return Err(QpdoError::Admissibility(
                "tail integral needs the separable factor".into(),
            ))
        }
    };
    let box_half = std::f64::consts::PI * hbar;
    let cauchy =
        |c: f64| move |xi: f64| (Complex64::new(c, 0.0) / Complex64::new(c, xi)).powu(power);

    let ig_full: Vec<Complex64> = x1
        .iter()
        .map(|&x| fourier_line(|xi| g_data.transform(xi), x, lambda, g_data.freq_scale()))
        .collect();
    let ig_box: Vec<Complex64> = x1
        .iter()
        .map(|&x| fourier_box(|xi| g_data.transform(xi), x, box_half, g_data.freq_scale()))
        .collect();
    let cb_full: Vec<Complex64> = x2
        .iter()
        .map(|&x| fourier_line(cauchy(b), x, lambda, cf.scale()))
        .collect();
    let cb_box: Vec<Complex64> = x2
        .iter()
        .map(|&x| fourier_box(cauchy(b), x, box_half, cf.scale()))
        .collect();
    let jf_full: Vec<Complex64> = x2
        .iter()
        .map(|&x| fourier_line(|xi| f_data.transform(xi), x, lambda, f_data.freq_scale()))
        .collect();
    let jf_box: Vec<Complex64> = x2
        .iter()
        .map(|&x| fourier_box(|xi| f_data.transform(xi), x, box_half, f_data.freq_scale()))
        .collect();
    let ca_full: Vec<Complex64> = x1
        .iter()
        .map(|&x| fourier_line(cauchy(a), x, lambda, cf.scale()))
        .collect();
    let ca_box: Vec<Complex64> = x1
        .iter()
        .map(|&x| fourier_box(cauchy(a), x, box_half, cf.scale()))
        .collect();

    Ok(x1
        .iter()
        .enumerate()
        .map(|(i, _)| {
            x2.iter()
                .enumerate()
                .map(|(j, _)| {
                    let full = ig_full[i] * cb_full[j] + ca_full[i] * jf_full[j];
                    let boxed = ig_box[i] * cb_box[j] + ca_box[i] * jf_box[j];
                    (full - boxed).norm()
                })
                .collect()
        })
        .collect())
}

/// One row of the convergence study.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub h: f64,
    pub n: usize,
    pub lambda: f64,
    pub sup_error: f64,
    pub tail_bound: f64,
    pub fitted_beta_so_far: f64,
}

pub struct StudyOutput {
    pub rows: Vec<StudyRow>,
    pub fitted_beta: f64,
    pub r_squared: f64,
    /// Worst relative defect of the node spectra coincidence across grids.
    pub spectrum_coincidence: f64,
}

/// Least-squares fit of `log E = beta log h + c`; returns `(beta, r^2)`.
fn fit_rate(hs: &[f64], errs: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errs.iter())
        .filter(|(_, &e)| e > 0.0)
        .map(|(&h, &e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return (0.0, 0.0);
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let beta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - beta * sx) / n;
    let mean_y = sy / n;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - beta * p.0 - intercept).powi(2))
        .sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (beta, r2)
}

/// Run the discrete-versus-continuous study over a decreasing list of lattice
/// steps with the physical window held fixed.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    cf: &ContinuousFactor,
    f_data: &ContinuousData,
    g_data: &ContinuousData,
    h_list: &[f64],
    window: f64,
    points: &[f64],
    quad_tol: f64,
    half_line_tol: f64,
) -> Result<StudyOutput> {
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(QpdoError::Parse("h list must decrease strictly".into()));
    }
    let hbar_max = 1.0 / h_list.last().copied().unwrap_or(1.0);
    let lambda = 4.0 * std::f64::consts::PI * hbar_max;
    let continuous =
        continuous_solution(cf, f_data, g_data, points, points, lambda, hbar_max, quad_tol)?;

    let s = cf.index() - 1.0; // delta = 0
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    let mut spectrum_coincidence: f64 = 0.0;
    for &h in h_list {
        let n_f = window / h;
        let n = n_f.round() as usize;
        if (n_f - n as f64).abs() > 1e-9 || !n.is_power_of_two() {
            return Err(QpdoError::InvalidGrid(format!(
                "window {window} / h {h} must be a power of two, got {n_f}"
            )));
        }
        let grid = LatticeGrid::new(h, n)?;
        let fact = restrict_symbol(cf, grid)?;
        let f_d = lift_lh(f_data, grid);
        let g_d = lift_lh(g_data, grid);
        let bdata = BoundaryData::new(grid, f_d, g_d)?;
        let out: NonlocalOutput = solve_nonlocal_with_options(&fact, s, &bdata, half_line_tol, 1e-10)?;

        // Node coincidence of the discrete and continuous solution spectra.
        let u_spec = dft1_like_2d_spectrum(&out);
        let mut coin: f64 = 0.0;
        let mut coin_scale: f64 = 0.0;
        for (k1, k2) in grid.indices() {
            let xi1 = grid.freq(k1);
            let xi2 = grid.freq(k2);
            let cont = cf.plus_value(xi1, xi2).finv()
                * (cf.plus_value(xi1, 0.0) * g_data.transform(xi1)
                    + cf.plus_value(0.0, xi2) * f_data.transform(xi2));
            coin = coin.max((u_spec.get(k1, k2) - cont).norm());
            coin_scale = coin_scale.max(cont.norm());
        }
        spectrum_coincidence = spectrum_coincidence.max(coin / coin_scale.max(1e-300));

        let mut sup_error: f64 = 0.0;
        for (i, &x1) in points.iter().enumerate() {
            for (j, &x2) in points.iter().enumerate() {
                let m1 = (x1 / h).round() as i64;
                let m2 = (x2 / h).round() as i64;
                if ((x1 / h) - m1 as f64).abs() > 1e-9 || ((x2 / h) - m2 as f64).abs() > 1e-9 {
                    return Err(QpdoError::InvalidGrid(format!(
                        "comparison point ({x1}, {x2}) is not a lattice point at h = {h}"
                    )));
                }
                let diff = (out.u.get(m1, m2) - continuous.values[i][j]).norm();
                sup_error = sup_error.max(diff);
            }
        }
        let tails = tail_integral(cf, f_data, g_data, points, points, grid.hbar(), lambda)?;
        let tail_bound = tails
            .iter()
            .flat_map(|r| r.iter())
            .cloned()
            .fold(0.0, f64::max);
        errs.push(sup_error);
        let hs: Vec<f64> = h_list[..errs.len()].to_vec();
        let (beta_so_far, _) = fit_rate(&hs, &errs);
        rows.push(StudyRow {
            h,
            n,
            lambda,
            sup_error,
            tail_bound,
            fitted_beta_so_far: beta_so_far,
        });
    }
    let (fitted_beta, r_squared) = fit_rate(h_list, &errs);
    Ok(StudyOutput {
        rows,
        fitted_beta,
        r_squared,
        spectrum_coincidence,
    })
}

/// Forward transform of the nonlocal solution (helper; the solver returns the
/// spatial field).
fn dft1_like_2d_spectrum(out: &NonlocalOutput) -> crate::grid::SpectrumFunction {
    crate::transform::dft_forward(&out.u)
}

/// Node-spectrum coincidence check alone, for band-limited data: build the
/// discrete solve and compare its spectrum with the continuous formula on
/// the nodes.
pub fn spectrum_coincidence_defect(
    cf: &ContinuousFactor,
    f_data: &ContinuousData,
    g_data: &ContinuousData,
    grid: LatticeGrid,
    half_line_tol: f64,
) -> Result<f64> {
    let fact = restrict_symbol(cf, grid)?;
    let s = cf.index() - 1.0;
    let bdata = BoundaryData::new(grid, lift_lh(f_data, grid), lift_lh(g_data, grid))?;
    let out = solve_nonlocal_with_options(&fact, s, &bdata, half_line_tol, 1e-10)?;
    let spec = crate::transform::dft_forward(&out.u);
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k1, k2) in grid.indices() {
        let xi1 = grid.freq(k1);
        let xi2 = grid.freq(k2);
        let cont = cf.plus_value(xi1, xi2).finv()
            * (cf.plus_value(xi1, 0.0) * g_data.transform(xi1)
                + cf.plus_value(0.0, xi2) * f_data.transform(xi2));
        defect = defect.max((spec.get(k1, k2) - cont).norm());
        scale = scale.max(cont.norm());
    }
    Ok(defect / scale.max(1e-300))
}
