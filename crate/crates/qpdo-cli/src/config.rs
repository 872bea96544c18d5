//! Experiment configuration: TOML sections mirroring the catalog knobs, with
//! dotted-path overrides from the command line.

use anyhow::{bail, Context};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub grid: GridSection,
    pub model: ModelSection,
    pub rhs: RhsSection,
    pub boundary: BoundarySection,
    pub general: GeneralSection,
    pub projector: ProjectorSection,
    pub factorize: FactorizeSection,
    pub certify: CertifySection,
    pub oracle: OracleSection,
    pub study: StudySection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub h: f64,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { h: 0.125, n: 32 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub convention: String,
    pub weight_mode: String,
    pub symbol: String,
    /// Smoothness exponent; when omitted each command centers its own
    /// admissibility window (`s = kappa` for the unique solve, `s = kappa - n`
    /// for the general solution and boundary problems).
    pub s: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            convention: "closed".into(),
            weight_mode: "modulus_sum".into(),
            symbol: "product(exp_split(5,1.0),plus(32.0,1))".into(),
            s: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RhsSection {
    pub seed: u64,
    pub depth: i64,
}

impl Default for RhsSection {
    fn default() -> Self {
        RhsSection { seed: 3, depth: 2 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySection {
    pub seed: u64,
    /// Nonlocal data kind: `zero_mean` (compatible) or `plain`.
    pub kind: String,
    /// Dirichlet data kind: `manufactured` (traces of a seeded layer
    /// solution, consistent by construction) or `plain`.
    pub dirichlet: String,
}

impl Default for BoundarySection {
    fn default() -> Self {
        BoundarySection {
            seed: 4,
            kind: "zero_mean".into(),
            dirichlet: "manufactured".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneralSection {
    pub n: u32,
    pub qn_c: f64,
    pub layer_seed: u64,
    /// When true, also drive the transverse layers of order `k >= 1`
    /// (their equation residual is reported, not asserted).
    pub higher_layers: bool,
}

impl Default for GeneralSection {
    fn default() -> Self {
        GeneralSection {
            n: 1,
            qn_c: 32.0,
            layer_seed: 11,
            higher_layers: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectorSection {
    /// Regularizations as multiples of `hbar`.
    pub eps_rel: Vec<f64>,
    /// Width in cells of the concentrated diagnostic data.
    pub sigma_cells: f64,
}

impl Default for ProjectorSection {
    fn default() -> Self {
        ProjectorSection {
            eps_rel: vec![1e-1, 1e-2, 1e-3],
            sigma_cells: 0.75,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FactorizeSection {
    pub seeds: u64,
    pub scale: f64,
}

impl Default for FactorizeSection {
    fn default() -> Self {
        FactorizeSection {
            seeds: 20,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifySection {
    pub h_list: Vec<f64>,
    pub window: f64,
}

impl Default for CertifySection {
    fn default() -> Self {
        CertifySection {
            h_list: vec![0.125, 0.0625, 0.03125, 0.015625, 0.0078125],
            window: 8.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub m_list: Vec<usize>,
    /// Half-window of the background grid for the oracle comparison (the
    /// dense window must satisfy `M <= N/2`).
    pub n: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            m_list: vec![16, 32],
            n: 64,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub a: f64,
    pub b: f64,
    pub power: u32,
    pub f_amp: f64,
    pub f_mu: f64,
    pub f_sigma: f64,
    pub g_amp: f64,
    pub g_mu: f64,
    pub g_sigma: f64,
    pub h_list: Vec<f64>,
    pub window: f64,
    pub points: Vec<f64>,
    pub quad_tol: f64,
    pub half_line_tol: f64,
    /// Run with band-limited data instead of Gaussian-derivative data.
    pub band_limited: bool,
    pub f_band: f64,
    pub g_band: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            a: 4.0,
            b: 3.0,
            power: 2,
            f_amp: 1.0,
            f_mu: 1.6,
            f_sigma: 0.27,
            g_amp: -0.7,
            g_mu: 1.5,
            g_sigma: 0.25,
            h_list: vec![0.125, 0.0625, 0.03125, 0.015625],
            window: 4.0,
            points: vec![0.25, 0.5, 0.75],
            quad_tol: 1e-4,
            half_line_tol: 1e-5,
            band_limited: false,
            f_band: 6.0,
            g_band: 5.0,
        }
    }
}

/// Load a config file (or defaults when absent) and apply `key=value`
/// overrides addressed by dotted paths.
pub fn load(path: Option<&std::path::Path>, overrides: &[String]) -> anyhow::Result<Config> {
    let mut table: toml::Table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config {}", p.display()))?;
            text.parse().context("config is not valid TOML")?
        }
        None => toml::Table::new(),
    };
    for entry in overrides {
        let (key, value) = entry
            .split_once('=')
            .with_context(|| format!("override `{entry}` is not key=value"))?;
        apply_override(&mut table, key.trim(), value.trim())?;
    }
    let config: Config = toml::Value::Table(table)
        .try_into()
        .context("config does not match the expected schema")?;
    Ok(config)
}

fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> anyhow::Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        bail!("bad override key `{key}`");
    }
    // Parse the value through a wrapper document so numbers, booleans and
    // arrays come out typed; anything unparseable is taken as a string.
    let parsed: toml::Value = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        current = current
            .entry(part.to_string())
            .or_insert(toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .with_context(|| format!("override path `{key}` crosses a non-table"))?;
    }
    current.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let c = load(None, &[]).unwrap();
        assert_eq!(c.grid.n, 32);
        assert_eq!(c.model.convention, "closed");
    }

    #[test]
    fn overrides_apply() {
        let c = load(
            None,
            &[
                "grid.n=64".into(),
                "model.s=0.25".into(),
                "model.symbol=identity".into(),
                "seed=9".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.grid.n, 64);
        assert_eq!(c.model.s, Some(0.25));
        assert_eq!(c.model.symbol, "identity");
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn bad_override_rejected() {
        assert!(load(None, &["nokey".into()]).is_err());
        assert!(load(None, &["grid.n.deep=3".into()]).is_err());
        assert!(load(None, &["grid.unknown_field=3".into()]).is_err());
    }
}
