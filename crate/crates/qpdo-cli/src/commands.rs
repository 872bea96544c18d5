//! Implementation of the experiment subcommands.  Every command writes its
//! module's CSV report under the output directory plus a `run.meta` record of
//! the seed and parameters; outputs are byte-deterministic for a fixed
//! config and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qpdo::ndarray::{self, Array1};
use qpdo::num_complex::Complex64;
use qpdo::bridge::{
    convergence_study, spectrum_coincidence_defect, ContinuousData, ContinuousFactor,
};
use qpdo::catalog::{
    half_line_data, half_line_data_zero_mean, interior_rhs, two_quadrant_bumps, SymbolExpr,
};
use qpdo::grid::{GridFunction, LatticeGrid, QuadrantConvention};
use qpdo::projector::projector_diagnostics;
use qpdo::sobolev::{norm_hs_plus, SobolevParams, WeightMode};
use qpdo::solver::{
    dirichlet_assemble, dirichlet_solve, general_solution, solve_nonlocal, solve_unique,
    BoundaryData, DigitalOperator, GeneralSolutionSpec, SolverReportRow,
};
use qpdo::symbol::{certify_order, exp_split_factorize, QnPolynomial};
use qpdo::transform::{dft1_forward, dft_forward, dft_inverse};
use qpdo::{QpdoError, Result};

use crate::config::Config;

pub struct RunContext {
    pub config: Config,
    pub out: PathBuf,
    pub seed: u64,
    pub command: String,
}

impl RunContext {
    fn grid(&self) -> Result<LatticeGrid> {
        LatticeGrid::new(self.config.grid.h, self.config.grid.n)
    }

    fn convention(&self) -> Result<QuadrantConvention> {
        self.config.model.convention.parse()
    }

    fn weight_mode(&self) -> Result<WeightMode> {
        self.config.model.weight_mode.parse()
    }

    fn symbol_expr(&self) -> Result<SymbolExpr> {
        SymbolExpr::parse(&self.config.model.symbol)
    }

    fn write(&self, name: &str, content: &str) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        std::fs::write(self.out.join(name), content)?;
        Ok(())
    }

    fn write_meta(&self, extra: &[(&str, String)]) -> Result<()> {
        let mut meta = String::new();
        let _ = writeln!(meta, "command = {}", self.command);
        let _ = writeln!(meta, "seed = {}", self.seed);
        let _ = writeln!(meta, "h = {:.17e}", self.config.grid.h);
        let _ = writeln!(meta, "N = {}", self.config.grid.n);
        let _ = writeln!(meta, "convention = {}", self.config.model.convention);
        let _ = writeln!(meta, "weight_mode = {}", self.config.model.weight_mode);
        let _ = writeln!(meta, "symbol = {}", self.config.model.symbol);
        for (k, v) in extra {
            let _ = writeln!(meta, "{k} = {v}");
        }
        self.write("run.meta", &meta)
    }

    fn dump_grid(&self, name: &str, u: &GridFunction) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        u.dump_csv(&self.out.join(name), self.convention()?)
    }
}

fn solver_csv(rows: &[SolverReportRow]) -> String {
    let mut out = String::from(SolverReportRow::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

pub fn solve_unique_cmd(ctx: &RunContext) -> Result<()> {
    let grid = ctx.grid()?;
    let conv = ctx.convention()?;
    let fact = ctx.symbol_expr()?.build_factorization(grid, conv)?;
    let v = interior_rhs(grid, ctx.seed ^ ctx.config.rhs.seed, ctx.config.rhs.depth);
    let s = ctx.config.model.s.unwrap_or(fact.index);
    let out = solve_unique(&fact, s, &v, conv)?;
    let alpha = fact.product().declared_order;
    let plus_norm = norm_hs_plus(
        &v,
        SobolevParams::new(s - alpha, ctx.weight_mode()?),
        conv,
    )?;
    let u_norm = qpdo::sobolev::norm_hs(&out.u, SobolevParams::new(s, ctx.weight_mode()?));
    let row = SolverReportRow {
        problem: "solve_unique".into(),
        h: grid.h(),
        n: grid.half_window(),
        s,
        kappa: fact.index,
        residual: out.residual,
        exterior_mass: out.exterior_mass,
        apriori_ratio: if plus_norm > 0.0 { u_norm / plus_norm } else { 0.0 },
        cond: 0.0,
    };
    ctx.write("solver.csv", &solver_csv(&[row]))?;
    ctx.dump_grid("solution.csv", &out.u)?;
    ctx.dump_grid("rhs.csv", &v)?;
    ctx.write_meta(&[("rhs_seed", format!("{}", ctx.seed ^ ctx.config.rhs.seed))])
}

pub fn general_solution_cmd(ctx: &RunContext) -> Result<()> {
    let grid = ctx.grid()?;
    let conv = ctx.convention()?;
    let fact = ctx.symbol_expr()?.build_factorization(grid, conv)?;
    let n = ctx.config.general.n;
    let qn = QnPolynomial::new(grid, n, ctx.config.general.qn_c)?;
    let base = ctx.seed ^ ctx.config.general.layer_seed;
    let zero = Array1::from_elem(grid.len(), Complex64::ZERO);
    let mut layers_c = Vec::new();
    let mut layers_d = Vec::new();
    for k in 0..n {
        if k == 0 || ctx.config.general.higher_layers {
            layers_c.push(dft1_forward(&half_line_data(grid, base + k as u64), grid));
            layers_d.push(dft1_forward(
                &half_line_data(grid, base + 100 + k as u64),
                grid,
            ));
        } else {
            layers_c.push(zero.clone());
            layers_d.push(zero.clone());
        }
    }
    let spec = GeneralSolutionSpec::new(qn, layers_c, layers_d)?;
    let v = GridFunction::zeros(grid);
    let s = ctx.config.model.s.unwrap_or(fact.index - n as f64);
    let out = general_solution(&fact, s, &v, &spec, conv)?;
    let row = SolverReportRow {
        problem: "general_solution".into(),
        h: grid.h(),
        n: grid.half_window(),
        s,
        kappa: fact.index,
        residual: out.residual,
        exterior_mass: out.exterior_mass,
        apriori_ratio: out.apriori_ratio,
        cond: 0.0,
    };
    ctx.write("solver.csv", &solver_csv(&[row]))?;
    ctx.dump_grid("solution.csv", &out.u)?;
    ctx.write_meta(&[
        ("n", format!("{n}")),
        ("layer_seed", format!("{base}")),
        ("higher_layers", format!("{}", ctx.config.general.higher_layers)),
    ])
}

fn boundary_data(ctx: &RunContext, grid: LatticeGrid) -> Result<BoundaryData> {
    let seed = ctx.seed ^ ctx.config.boundary.seed;
    match ctx.config.boundary.kind.as_str() {
        "zero_mean" => BoundaryData::new(
            grid,
            half_line_data_zero_mean(grid, seed),
            half_line_data_zero_mean(grid, seed + 7),
        ),
        "plain" => BoundaryData::new(
            grid,
            half_line_data(grid, seed),
            half_line_data(grid, seed + 7),
        ),
        other => Err(QpdoError::Parse(format!(
            "unknown boundary data kind `{other}`"
        ))),
    }
}

pub fn solve_nonlocal_cmd(ctx: &RunContext) -> Result<()> {
    let grid = ctx.grid()?;
    let conv = ctx.convention()?;
    let fact = ctx.symbol_expr()?.build_factorization(grid, conv)?;
    let bdata = boundary_data(ctx, grid)?;
    let s = ctx.config.model.s.unwrap_or(fact.index - 1.0);
    // Record the measured compatibility defect even when the solve is
    // rejected, so a failed run still reports why.
    let (f0, g0) = bdata.compatibility_defect();
    let mut defects = String::from("quantity,value\n");
    let _ = writeln!(defects, "f_transform_at_zero,{:.17e}", f0.norm());
    let _ = writeln!(defects, "g_transform_at_zero,{:.17e}", g0.norm());
    ctx.write("compatibility.csv", &defects)?;
    let out = solve_nonlocal(&fact, s, &bdata)?;
    let row = SolverReportRow {
        problem: "solve_nonlocal".into(),
        h: grid.h(),
        n: grid.half_window(),
        s,
        kappa: fact.index,
        residual: out.residual,
        exterior_mass: out.exterior_mass,
        apriori_ratio: out.apriori_ratio,
        cond: 0.0,
    };
    ctx.write("solver.csv", &solver_csv(&[row]))?;
    let mut cond_csv = String::from("condition,defect\n");
    let _ = writeln!(cond_csv, "transformed,{:.17e}", out.spectral_defect);
    let _ = writeln!(cond_csv, "line_sums,{:.17e}", out.line_sum_defect);
    let _ = writeln!(cond_csv, "total_sum,{:.17e}", out.total_sum_defect);
    ctx.write("conditions.csv", &cond_csv)?;
    ctx.dump_grid("solution.csv", &out.u)?;
    ctx.write_meta(&[("boundary_seed", format!("{}", ctx.seed ^ ctx.config.boundary.seed))])
}

pub fn solve_dirichlet_cmd(ctx: &RunContext) -> Result<()> {
    let grid = ctx.grid()?;
    let conv = ctx.convention()?;
    let fact = ctx.symbol_expr()?.build_factorization(grid, conv)?;
    let seed = ctx.seed ^ ctx.config.boundary.seed;
    let bdata = if ctx.config.boundary.dirichlet == "manufactured" {
        // Traces of an actual layer solution: consistent by construction.
        let plus_inv = fact.plus.inverse()?;
        let len = grid.len();
        let c0 = dft1_forward(&half_line_data(grid, seed), grid);
        let d0 = dft1_forward(&half_line_data(grid, seed + 17), grid);
        let values = ndarray::Array2::from_shape_fn((len, len), |(i, j)| {
            plus_inv.values[[i, j]] * (c0[i] + d0[j])
        });
        let dxi = Complex64::new(grid.freq_step(), 0.0);
        let f_spec = Array1::from_shape_fn(len, |q2| {
            (0..len).map(|k1| values[[k1, q2]]).sum::<Complex64>() * dxi
        });
        let g_spec = Array1::from_shape_fn(len, |q1| {
            (0..len).map(|k2| values[[q1, k2]]).sum::<Complex64>() * dxi
        });
        BoundaryData::from_spectra(grid, f_spec, g_spec)?
    } else {
        boundary_data(ctx, grid)?
    };
    let s = ctx.config.model.s.unwrap_or(fact.index - 1.0);
    let system = dirichlet_assemble(&fact, &bdata, s, 1)?;
    let out = dirichlet_solve(&system)?;
    let row = SolverReportRow {
        problem: "solve_dirichlet".into(),
        h: grid.h(),
        n: grid.half_window(),
        s,
        kappa: fact.index,
        residual: out.system_residual,
        exterior_mass: out.u.exterior_mass(conv),
        apriori_ratio: 0.0,
        cond: out.cond,
    };
    ctx.write("solver.csv", &solver_csv(&[row]))?;
    let mut traces = String::from("side,err\n");
    let _ = writeln!(traces, "f,{:.17e}", out.trace_f_err);
    let _ = writeln!(traces, "g,{:.17e}", out.trace_g_err);
    ctx.write("traces.csv", &traces)?;
    ctx.dump_grid("solution.csv", &out.u)?;
    ctx.write_meta(&[("boundary_kind", ctx.config.boundary.kind.clone())])
}

pub fn project_cmd(ctx: &RunContext) -> Result<()> {
    let grid = ctx.grid()?;
    let conv = ctx.convention()?;
    let sigma = ctx.config.projector.sigma_cells;
    let u = GridFunction::from_fn(grid, |m1, m2| {
        let r2 = (m1 * m1 + m2 * m2) as f64;
        Complex64::new((-r2 / (2.0 * sigma * sigma)).exp(), 0.0)
    });
    let s = dft_forward(&u);
    let eps: Vec<f64> = ctx
        .config
        .projector
        .eps_rel
        .iter()
        .map(|r| r * grid.hbar())
        .collect();
    let (rows, warnings) = projector_diagnostics(&s, conv, &eps)?;
    let mut csv = String::from("realization,epsilon,N,idempotence_err,agreement_err\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{:.17e},{},{:.17e},{:.17e}",
            r.realization, r.epsilon, r.n, r.idempotence_err, r.agreement_err
        );
    }
    ctx.write("projector.csv", &csv)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    // Substrate diagnostics: transform pair and multiplier identities.
    let back = dft_inverse(&s);
    let mut roundtrip: f64 = 0.0;
    for (a, b) in back.values.iter().zip(u.values.iter()) {
        roundtrip = roundtrip.max((a - b).norm());
    }
    let parseval = {
        let lhs = u.l2_norm().powi(2);
        let rhs = s.l2_norm().powi(2) / (4.0 * std::f64::consts::PI.powi(2));
        (lhs - rhs).abs() / lhs
    };
    let mut mult_err: f64 = 0.0;
    {
        let d = qpdo::diff::divided_difference(&u, qpdo::diff::Axis::One, 1);
        let lhs = dft_forward(&d);
        let mut scale: f64 = 0.0;
        for (k1, k2) in grid.indices() {
            let m = qpdo::diff::forward_multiplier(grid, grid.freq(k1));
            let rhs = s.get(k1, k2) * m;
            mult_err = mult_err.max((lhs.get(k1, k2) - rhs).norm());
            scale = scale.max(rhs.norm());
        }
        if scale > 0.0 {
            mult_err /= scale;
        }
    }
    let mut tcsv = String::from("check,defect\n");
    let _ = writeln!(tcsv, "roundtrip,{:.17e}", roundtrip / u.max_abs());
    let _ = writeln!(tcsv, "parseval,{:.17e}", parseval);
    let _ = writeln!(tcsv, "difference_multiplier,{:.17e}", mult_err);
    ctx.write("transforms.csv", &tcsv)?;
    ctx.write_meta(&[("sigma_cells", format!("{sigma}"))])
}

pub fn factorize_exp_cmd(ctx: &RunContext) -> Result<()> {
    let grid = ctx.grid()?;
    let conv = ctx.convention()?;
    let scale = ctx.config.factorize.scale;
    let mut csv =
        String::from("seed,scale,N,h,recon_err,plus_support,minus_support,homomorphism_err\n");
    for k in 0..ctx.config.factorize.seeds {
        let seed = ctx.seed ^ k;
        let f = two_quadrant_bumps(grid, seed, scale);
        let fact = exp_split_factorize(&f, conv)?;
        let spec = dft_forward(&f);
        let mut recon: f64 = 0.0;
        for (k1, k2) in grid.indices() {
            let expect = spec.get(k1, k2).exp();
            let got = fact.plus.get(k1, k2) * fact.minus.get(k1, k2);
            recon = recon.max((got - expect).norm() / expect.norm());
        }
        let plus_support = qpdo::symbol::verify_plus_type(&fact.plus, qpdo::symbol::FactorSide::Plus);
        let minus_support =
            qpdo::symbol::verify_plus_type(&fact.minus, qpdo::symbol::FactorSide::Minus);
        // Homomorphism against the next seed's data.
        let g = two_quadrant_bumps(grid, seed + 1000, scale);
        let fg = exp_split_factorize(&g, conv)?;
        let sum = GridFunction {
            grid,
            values: &f.values + &g.values,
        };
        let fsum = exp_split_factorize(&sum, conv)?;
        let mut hom: f64 = 0.0;
        for (k1, k2) in grid.indices() {
            let lhs = fsum.plus.get(k1, k2);
            let rhs = fact.plus.get(k1, k2) * fg.plus.get(k1, k2);
            hom = hom.max((lhs - rhs).norm() / rhs.norm());
        }
        let _ = writeln!(
            csv,
            "{seed},{scale},{},{:.17e},{recon:.17e},{plus_support:.17e},{minus_support:.17e},{hom:.17e}",
            grid.half_window(),
            grid.h()
        );
    }
    ctx.write("factorize.csv", &csv)?;
    ctx.write_meta(&[("seeds", format!("{}", ctx.config.factorize.seeds))])
}

pub fn certify_symbol_cmd(ctx: &RunContext) -> Result<()> {
    let conv = ctx.convention()?;
    let mode = ctx.weight_mode()?;
    let expr = ctx.symbol_expr()?;
    let window = ctx.config.certify.window;
    let mut csv = String::from("symbol,h,N,alpha,weight_mode,c1,c2\n");
    for &h in &ctx.config.certify.h_list {
        let n_f = window / h;
        let n = n_f.round() as usize;
        if (n_f - n as f64).abs() > 1e-9 || !n.is_power_of_two() {
            return Err(QpdoError::InvalidGrid(format!(
                "certification window {window} / h {h} is not a power of two"
            )));
        }
        let grid = LatticeGrid::new(h, n)?;
        let sym = expr.build_symbol(grid, conv)?;
        let (c1, c2) = certify_order(&sym, mode);
        let _ = writeln!(
            csv,
            "{},{:.17e},{},{:.17e},{},{:.17e},{:.17e}",
            ctx.config.model.symbol,
            h,
            n,
            sym.declared_order,
            mode.name(),
            c1,
            c2
        );
    }
    ctx.write("certify.csv", &csv)?;
    ctx.write_meta(&[("window", format!("{window}"))])
}

pub fn oracle_compare_cmd(ctx: &RunContext) -> Result<()> {
    let grid = LatticeGrid::new(ctx.config.grid.h, ctx.config.oracle.n)?;
    let conv = ctx.convention()?;
    let expr = ctx.symbol_expr()?;
    let fact = expr.build_factorization(grid, conv)?;
    let sym = fact.product();
    let s = ctx.config.model.s.unwrap_or(fact.index);
    let mut csv = String::from("M,N,h,symbol,interior_err,cond\n");
    for &m in &ctx.config.oracle.m_list {
        let p = qpdo::oracle::assemble_dense(&sym, m, conv)?;
        // Right-hand side supported on the dense window.
        let v_full = interior_rhs(grid, ctx.seed ^ ctx.config.rhs.seed, ctx.config.rhs.depth);
        let mut v_win = ndarray::Array2::from_elem((m, m), Complex64::ZERO);
        let mut v_grid = GridFunction::zeros(grid);
        for (pos, (m1, m2)) in p.window_indices().iter().enumerate() {
            let val = v_full.get(*m1, *m2);
            v_win[[pos / m, pos % m]] = val;
            v_grid.set(*m1, *m2, val);
        }
        let dense = qpdo::oracle::dense_solve(&p, &v_win)?;
        let spectral = solve_unique(&fact, s, &v_grid, conv)?;
        // Interior quarter of the window: indices below M/2.
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (pos, (m1, m2)) in p.window_indices().iter().enumerate() {
            let su = spectral.u.get(*m1, *m2);
            scale = scale.max(su.norm());
            if (pos / m) < m / 2 && (pos % m) < m / 2 {
                err = err.max((dense.values[[pos / m, pos % m]] - su).norm());
            }
        }
        let _ = writeln!(
            csv,
            "{m},{},{:.17e},{},{:.17e},{:.17e}",
            grid.half_window(),
            grid.h(),
            ctx.config.model.symbol,
            err / scale.max(f64::MIN_POSITIVE),
            dense.cond
        );
    }
    ctx.write("oracle.csv", &csv)?;
    ctx.write_meta(&[("m_list", format!("{:?}", ctx.config.oracle.m_list))])
}

pub fn convergence_cmd(ctx: &RunContext) -> Result<()> {
    let st = &ctx.config.study;
    let cf = ContinuousFactor::Separable {
        a: st.a,
        b: st.b,
        power: st.power,
    };
    let (f, g) = if st.band_limited {
        (
            ContinuousData::BandLimited {
                amp: st.f_amp,
                mu: st.f_mu,
                band: st.f_band,
            },
            ContinuousData::BandLimited {
                amp: st.g_amp,
                mu: st.g_mu,
                band: st.g_band,
            },
        )
    } else {
        (
            ContinuousData::GaussDeriv {
                amp: st.f_amp,
                mu: st.f_mu,
                sigma: st.f_sigma,
            },
            ContinuousData::GaussDeriv {
                amp: st.g_amp,
                mu: st.g_mu,
                sigma: st.g_sigma,
            },
        )
    };
    if st.band_limited {
        // Band-limited data: the node spectra of the discrete and continuous
        // solutions coincide; report the defect per grid.
        let mut csv = String::from("h,N,coincidence_defect\n");
        for &h in &st.h_list {
            let n = (st.window / h).round() as usize;
            let grid = LatticeGrid::new(h, n)?;
            let d = spectrum_coincidence_defect(&cf, &f, &g, grid, 0.2)?;
            let _ = writeln!(csv, "{h:.17e},{n},{d:.17e}");
        }
        ctx.write("study.csv", &csv)?;
        return ctx.write_meta(&[("band_limited", "true".into())]);
    }
    let out = convergence_study(
        &cf,
        &f,
        &g,
        &st.h_list,
        st.window,
        &st.points,
        st.quad_tol,
        st.half_line_tol,
    )?;
    let mut csv = String::from("h,N,Lambda,sup_error,tail_bound,fitted_beta_so_far\n");
    for r in &out.rows {
        let _ = writeln!(
            csv,
            "{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.h, r.n, r.lambda, r.sup_error, r.tail_bound, r.fitted_beta_so_far
        );
    }
    ctx.write("study.csv", &csv)?;
    let mut summary = String::from("fitted_beta,r_squared,spectrum_coincidence\n");
    let _ = writeln!(
        summary,
        "{:.17e},{:.17e},{:.17e}",
        out.fitted_beta, out.r_squared, out.spectrum_coincidence
    );
    ctx.write("study_summary.csv", &summary)?;
    ctx.write_meta(&[("band_limited", "false".into())])
}

/// Boundedness sweep of the operator norm ratio, a side diagnostic shared by
/// several invariants (not a spec'd subcommand; reachable through `certify`).
#[allow(dead_code)]
pub fn operator_ratio(ctx: &RunContext) -> Result<f64> {
    let grid = ctx.grid()?;
    let conv = ctx.convention()?;
    let sym = ctx.symbol_expr()?.build_symbol(grid, conv)?;
    let op = DigitalOperator::new(sym);
    let u = interior_rhs(grid, ctx.seed, 2);
    op.boundedness_ratio(&u, ctx.config.model.s.unwrap_or(0.0), ctx.weight_mode()?)
}

pub fn dispatch(ctx: &RunContext) -> Result<()> {
    match ctx.command.as_str() {
        "solve-unique" => solve_unique_cmd(ctx),
        "general-solution" => general_solution_cmd(ctx),
        "solve-dirichlet" => solve_dirichlet_cmd(ctx),
        "solve-nonlocal" => solve_nonlocal_cmd(ctx),
        "project" => project_cmd(ctx),
        "factorize-exp" => factorize_exp_cmd(ctx),
        "certify-symbol" => certify_symbol_cmd(ctx),
        "oracle-compare" => oracle_compare_cmd(ctx),
        "convergence" => convergence_cmd(ctx),
        other => Err(QpdoError::Parse(format!("unknown command `{other}`"))),
    }
}

/// Exit code classification: 2 for precondition rejections, 3 for numerical
/// failures, 65 for configuration problems.
pub fn exit_code_for(err: &QpdoError) -> i32 {
    match err {
        QpdoError::Admissibility(_)
        | QpdoError::Compatibility(_)
        | QpdoError::SupportViolation(_)
        | QpdoError::Overflow(_)
        | QpdoError::Domain(_) => 2,
        QpdoError::Parse(_) | QpdoError::InvalidGrid(_) | QpdoError::GridMismatch(_) => 65,
        _ => 3,
    }
}

/// Write the top-level metadata before dispatch so rejected runs still leave
/// a record.
pub fn prepare_output(out: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(out)
}
