//! Lattice grids, grid functions and their frequency-side counterparts.
//!
//! The infinite lattice `h Z^2` is modelled by a cyclic `2N x 2N` window with
//! spatial indices `m in {-N, ..., N-1}` per axis, the point being
//! `x = (m1 h, m2 h)`.  The dual frequency grid covers one period square
//! `[-pi/h, pi/h)^2` with nodes `xi_k = (pi / (N h)) k`, `k in {-N, ..., N-1}`.
//! All spectral identities in this crate are exact on this cyclic model;
//! fidelity to the infinite lattice is monitored through the window-decay
//! diagnostic of the data.

use ndarray::Array2;
use num_complex::Complex64;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{QpdoError, Result};

/// Whether the quadrant indicator includes the coordinate axes.
///
/// `Closed` keeps `x1 >= 0 && x2 >= 0`, `Open` keeps `x1 > 0 && x2 > 0`.
/// One convention is fixed per computation and recorded in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadrantConvention {
    Closed,
    Open,
}

impl QuadrantConvention {
    /// True if the lattice index pair belongs to the quadrant under this convention.
    pub fn contains(self, m1: i64, m2: i64) -> bool {
        match self {
            QuadrantConvention::Closed => m1 >= 0 && m2 >= 0,
            QuadrantConvention::Open => m1 > 0 && m2 > 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QuadrantConvention::Closed => "closed",
            QuadrantConvention::Open => "open",
        }
    }
}

impl fmt::Display for QuadrantConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for QuadrantConvention {
    type Err = QpdoError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(QuadrantConvention::Closed),
            "open" => Ok(QuadrantConvention::Open),
            other => Err(QpdoError::Parse(format!(
                "unknown quadrant convention `{other}` (expected `closed` or `open`)"
            ))),
        }
    }
}

/// Lattice step, half-window size and the induced dual frequency grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGrid {
    h: f64,
    n: usize,
}

impl LatticeGrid {
    /// Create a grid with step `h > 0` and per-axis half-window `n`
    /// (a power of two, at least 2).
    pub fn new(h: f64, n: usize) -> Result<Self> {
        if h <= 0.0 || !h.is_finite() {
            return Err(QpdoError::InvalidGrid(format!("h must be positive, got {h}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(QpdoError::InvalidGrid(format!(
                "N must be a power of two >= 2, got {n}"
            )));
        }
        Ok(LatticeGrid { h, n })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `hbar = 1/h`.
    pub fn hbar(&self) -> f64 {
        1.0 / self.h
    }

    /// Per-axis half-window; indices run over `{-N, ..., N-1}`.
    pub fn half_window(&self) -> usize {
        self.n
    }

    /// Points per axis, `2N`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        2 * self.n
    }

    /// Frequency spacing `pi / (N h)`.
    pub fn freq_step(&self) -> f64 {
        std::f64::consts::PI * self.hbar() / self.n as f64
    }

    /// Spatial coordinate of lattice index `m`.
    pub fn coord(&self, m: i64) -> f64 {
        m as f64 * self.h
    }

    /// Frequency node `xi_k`.
    pub fn freq(&self, k: i64) -> f64 {
        k as f64 * self.freq_step()
    }

    /// Lattice index of array position `i in 0..2N` (`m = i - N`).
    pub fn index_of(&self, i: usize) -> i64 {
        i as i64 - self.n as i64
    }

    /// Array position of lattice index `m in {-N, ..., N-1}`.
    pub fn pos_of(&self, m: i64) -> usize {
        debug_assert!(m >= -(self.n as i64) && m < self.n as i64);
        (m + self.n as i64) as usize
    }

    /// Iterate over all lattice index pairs `(m1, m2)` row-major.
    pub fn indices(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let n = self.n as i64;
        (-n..n).flat_map(move |m1| (-n..n).map(move |m2| (m1, m2)))
    }

    /// Physical half-width of the window, `N h`.
    pub fn window_extent(&self) -> f64 {
        self.n as f64 * self.h
    }
}

/// Complex samples on the spatial window of a [`LatticeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: LatticeGrid,
    /// Row index = axis-1 position, column index = axis-2 position.
    pub values: Array2<Complex64>,
}

/// Complex samples on the frequency nodes of `hbar T^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFunction {
    pub grid: LatticeGrid,
    pub values: Array2<Complex64>,
}

macro_rules! impl_common {
    ($ty:ident) => {
        impl $ty {
            pub fn zeros(grid: LatticeGrid) -> Self {
                let len = grid.len();
                Self {
                    grid,
                    values: Array2::zeros((len, len)),
                }
            }

            /// Build from a closure over lattice/frequency index pairs.
            pub fn from_fn(grid: LatticeGrid, mut f: impl FnMut(i64, i64) -> Complex64) -> Self {
                let len = grid.len();
                let values = Array2::from_shape_fn((len, len), |(i, j)| {
                    f(grid.index_of(i), grid.index_of(j))
                });
                let _ = len;
                Self { grid, values }
            }

            pub fn get(&self, m1: i64, m2: i64) -> Complex64 {
                self.values[[self.grid.pos_of(m1), self.grid.pos_of(m2)]]
            }

            pub fn set(&mut self, m1: i64, m2: i64, v: Complex64) {
                let p = [self.grid.pos_of(m1), self.grid.pos_of(m2)];
                self.values[p] = v;
            }

            /// Maximum modulus over the window.
            pub fn max_abs(&self) -> f64 {
                self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
            }

            /// Relative maximum modulus on the outermost index ring,
            /// used to detect wrap-around contamination.
            pub fn window_decay(&self) -> f64 {
                let n = self.grid.half_window() as i64;
                let mut edge: f64 = 0.0;
                for (m1, m2) in self.grid.indices() {
                    if m1 == -n || m1 == n - 1 || m2 == -n || m2 == n - 1 {
                        edge = edge.max(self.get(m1, m2).norm());
                    }
                }
                let peak = self.max_abs();
                if peak == 0.0 {
                    0.0
                } else {
                    edge / peak
                }
            }

            pub fn assert_same_grid(&self, other: &$ty) -> Result<()> {
                if self.grid != other.grid {
                    return Err(QpdoError::GridMismatch(format!(
                        "h={} N={} vs h={} N={}",
                        self.grid.h(),
                        self.grid.half_window(),
                        other.grid.h(),
                        other.grid.half_window()
                    )));
                }
                Ok(())
            }
        }
    };
}

impl_common!(GridFunction);
impl_common!(SpectrumFunction);

impl GridFunction {
    /// Discrete delta scaled by `h^-2`, the unit-mass impulse at the origin.
    pub fn delta(grid: LatticeGrid) -> Self {
        let mut u = Self::zeros(grid);
        let w = grid.hbar() * grid.hbar();
        u.set(0, 0, Complex64::new(w, 0.0));
        u
    }

    /// Lattice l2 norm `(sum |u|^2 h^2)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.h() * self.grid.h()).sqrt()
    }

    /// Pointwise multiplication by the quadrant indicator; idempotent.
    pub fn restrict_quadrant(&self, conv: QuadrantConvention) -> GridFunction {
        let grid = self.grid;
        GridFunction::from_fn(grid, |m1, m2| {
            if conv.contains(m1, m2) {
                self.get(m1, m2)
            } else {
                Complex64::ZERO
            }
        })
    }

    /// Pointwise multiplication by the mirrored-quadrant indicator (`-K`).
    pub fn restrict_opposite_quadrant(&self, conv: QuadrantConvention) -> GridFunction {
        let grid = self.grid;
        GridFunction::from_fn(grid, |m1, m2| {
            if conv.contains(-m1, -m2) {
                self.get(m1, m2)
            } else {
                Complex64::ZERO
            }
        })
    }

    /// Relative maximum modulus outside the (closed or open) quadrant.
    pub fn exterior_mass(&self, conv: QuadrantConvention) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let mut ext: f64 = 0.0;
        for (m1, m2) in self.grid.indices() {
            if !conv.contains(m1, m2) {
                ext = ext.max(self.get(m1, m2).norm());
            }
        }
        ext / peak
    }
}

impl SpectrumFunction {
    /// `(int |s|^2 dxi)^(1/2)` realized as the exact node sum.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        let dxi = self.grid.freq_step();
        (s * dxi * dxi).sqrt()
    }
}

fn write_csv(
    path: &Path,
    header: &str,
    grid: LatticeGrid,
    values: &Array2<Complex64>,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{header}")?;
    let len = grid.len();
    for i in 0..len {
        for j in 0..len {
            let v = values[[i, j]];
            writeln!(
                out,
                "{},{},{:.17e},{:.17e}",
                grid.index_of(i),
                grid.index_of(j),
                v.re,
                v.im
            )?;
        }
    }
    Ok(())
}

fn write_meta(path: &Path, grid: LatticeGrid, conv: QuadrantConvention) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "h = {:.17e}", grid.h())?;
    writeln!(out, "N = {}", grid.half_window())?;
    writeln!(out, "convention = {}", conv.name())?;
    Ok(())
}

impl GridFunction {
    /// Dump as `m1,m2,re,im` rows plus a `.meta` sidecar.
    pub fn dump_csv(&self, path: &Path, conv: QuadrantConvention) -> Result<()> {
        write_csv(path, "m1,m2,re,im", self.grid, &self.values)?;
        write_meta(&path.with_extension("meta"), self.grid, conv)
    }

    /// Read back a dump produced by [`GridFunction::dump_csv`].
    pub fn load_csv(path: &Path, grid: LatticeGrid) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut u = GridFunction::zeros(grid);
        for (ln, line) in file.lines().enumerate() {
            let line = line?;
            if ln == 0 {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(QpdoError::Parse(format!("bad csv row: {line}")));
            }
            let m1: i64 = fields[0].parse().map_err(|e| QpdoError::Parse(format!("{e}")))?;
            let m2: i64 = fields[1].parse().map_err(|e| QpdoError::Parse(format!("{e}")))?;
            let re: f64 = fields[2].parse().map_err(|e| QpdoError::Parse(format!("{e}")))?;
            let im: f64 = fields[3].parse().map_err(|e| QpdoError::Parse(format!("{e}")))?;
            u.set(m1, m2, Complex64::new(re, im));
        }
        Ok(u)
    }
}

impl SpectrumFunction {
    /// Dump as `k1,k2,re,im` rows plus a `.meta` sidecar.
    pub fn dump_csv(&self, path: &Path, conv: QuadrantConvention) -> Result<()> {
        write_csv(path, "k1,k2,re,im", self.grid, &self.values)?;
        write_meta(&path.with_extension("meta"), self.grid, conv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(LatticeGrid::new(0.5, 8).is_ok());
        assert!(LatticeGrid::new(0.0, 8).is_err());
        assert!(LatticeGrid::new(-1.0, 8).is_err());
        assert!(LatticeGrid::new(0.5, 3).is_err());
        assert!(LatticeGrid::new(0.5, 1).is_err());
    }

    #[test]
    fn dual_grid_geometry() {
        let g = LatticeGrid::new(0.25, 8).unwrap();
        assert_eq!(g.hbar(), 4.0);
        // Frequency nodes cover [-pi*hbar, pi*hbar).
        assert!((g.freq(-8) + std::f64::consts::PI * 4.0).abs() < 1e-15);
        assert!((g.freq_step() - std::f64::consts::PI * 4.0 / 8.0).abs() < 1e-15);
        assert_eq!(g.index_of(0), -8);
        assert_eq!(g.pos_of(-8), 0);
        assert_eq!(g.pos_of(7), 15);
    }

    #[test]
    fn restrict_is_projector() {
        let g = LatticeGrid::new(1.0, 4).unwrap();
        let u = GridFunction::from_fn(g, |m1, m2| Complex64::new((m1 * m2) as f64, m1 as f64));
        for conv in [QuadrantConvention::Closed, QuadrantConvention::Open] {
            let once = u.restrict_quadrant(conv);
            let twice = once.restrict_quadrant(conv);
            assert_eq!(once.values, twice.values);
        }
    }

    #[test]
    fn impulse_kept_or_zeroed_by_convention() {
        let g = LatticeGrid::new(0.5, 4).unwrap();
        let u = GridFunction::delta(g);
        let closed = u.restrict_quadrant(QuadrantConvention::Closed);
        let open = u.restrict_quadrant(QuadrantConvention::Open);
        assert_eq!(closed.get(0, 0), Complex64::new(4.0, 0.0));
        assert_eq!(open.get(0, 0), Complex64::ZERO);
    }

    #[test]
    fn csv_roundtrip() {
        let g = LatticeGrid::new(0.5, 4).unwrap();
        let u = GridFunction::from_fn(g, |m1, m2| Complex64::new(m1 as f64 * 0.3, m2 as f64));
        let dir = std::env::temp_dir().join("qpdo_grid_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("u.csv");
        u.dump_csv(&path, QuadrantConvention::Closed).unwrap();
        let v = GridFunction::load_csv(&path, g).unwrap();
        assert_eq!(u.values, v.values);
        let meta = std::fs::read_to_string(path.with_extension("meta")).unwrap();
        assert!(meta.contains("N = 4"));
        assert!(meta.contains("convention = closed"));
    }
}
