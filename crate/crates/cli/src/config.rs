//! Experiment configuration: TOML on disk, `NESSLAB_*` environment overrides,
//! validation before any numerical work.

use std::path::{Path, PathBuf};

use nesslab_core::models::{build_fermion_model, build_xx_model, build_xxz_model, ChargeSpec, CurrentGeometry, Interaction};
use nesslab_core::operator::{Boundary, ChainConfig};
use nesslab_core::spectral::WindowFunction;
use nesslab_core::steady_state::BiasSpec;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Prefix of environment variables overriding config keys. Nested keys are
/// joined with `__`: `NESSLAB_CHAIN__N_SITES=10` sets `chain.n_sites`.
pub const ENV_PREFIX: &str = "NESSLAB_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Xx,
    Xxz { lambda_aniso: f64 },
    Fermion { t_hop: f64, v: Vec<f64> },
}

impl ModelSpec {
    pub fn build(&self) -> nesslab_core::Result<(Interaction, ChargeSpec)> {
        match self {
            ModelSpec::Xx => build_xx_model(),
            ModelSpec::Xxz { lambda_aniso } => build_xxz_model(*lambda_aniso),
            ModelSpec::Fermion { t_hop, v } => build_fermion_model(*t_hop, v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub n_sites: usize,
    #[serde(default = "periodic")]
    pub boundary: Boundary,
}

fn periodic() -> Boundary {
    Boundary::Periodic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    /// Separations of the Lieb-Robinson scan.
    pub x_values: Vec<i64>,
    /// Times of the Lieb-Robinson scan.
    pub t_values: Vec<f64>,
    /// `M` values of the sum-rule scan at fixed `L - M`.
    #[serde(rename = "M_values")]
    pub m_values: Vec<usize>,
    /// Fixed `L - M` of the scan; defaults to that of `[geometry]`.
    #[serde(rename = "L_minus_M", default, skip_serializing_if = "Option::is_none")]
    pub l_minus_m: Option<usize>,
    /// Number of intervals for the `C(t)` curve on `[0, T]`.
    #[serde(default = "default_samples")]
    pub corr_samples: usize,
    /// Energy windows of the singularity diagnostic.
    #[serde(default = "default_eps")]
    pub eps_values: Vec<f64>,
}

fn default_samples() -> usize {
    40
}

fn default_eps() -> Vec<f64> {
    vec![0.1, 0.2, 0.5, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    pub chain: ChainSection,
    pub bias: BiasSpec,
    pub geometry: GeometrySection,
    pub window: WindowFunction,
    pub scan: ScanSection,
    pub output: OutputSection,
}

/// Config problems (exit 2) versus geometry/precondition problems (exit 3).
#[derive(Debug)]
pub enum ConfigError {
    Invalid(String),
    Geometry(nesslab_core::Error),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Invalid(m) => write!(f, "{m}"),
            ConfigError::Geometry(e) => write!(f, "{e}"),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::from_toml_with_env(text, std::iter::empty())
    }

    /// Parses `text`, then applies overrides `(KEY, value)` whose key starts
    /// with [`ENV_PREFIX`]. Values are read as TOML literals, falling back to
    /// strings.
    pub fn from_toml_with_env<I>(text: &str, env: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: toml::Table = text.parse().map_err(invalid)?;
        let mut overrides: Vec<(String, String)> =
            env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        overrides.sort();
        for (key, value) in overrides {
            let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(env_key).collect();
            apply_override(&mut table, &path, &value)?;
        }
        let cfg: ExperimentConfig = table.try_into().map_err(invalid)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml_with_env(&text, std::env::vars())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn chain(&self, site_dim: usize) -> nesslab_core::Result<ChainConfig> {
        ChainConfig::new(self.chain.n_sites, site_dim, self.chain.boundary)
    }

    pub fn geometry(&self, range: usize) -> nesslab_core::Result<CurrentGeometry> {
        CurrentGeometry::new(self.geometry.l, self.geometry.m, range)
    }

    /// Geometries of the `M` scan, keeping `L - M` fixed.
    pub fn scan_geometries(&self, range: usize) -> nesslab_core::Result<Vec<CurrentGeometry>> {
        let gap = match self.scan.l_minus_m {
            Some(g) => g as i64,
            None => self.geometry.l as i64 - self.geometry.m as i64,
        };
        self.scan
            .m_values
            .iter()
            .map(|&m| {
                let l = m as i64 + gap;
                if l < 0 {
                    return Err(nesslab_core::Error::Geometry(format!("L - M = {gap} gives negative L at M = {m}")));
                }
                CurrentGeometry::new(l as usize, m, range)
            })
            .collect()
    }

    /// Every cross-field constraint, checked without building any operator
    /// larger than a single interaction term.
    pub fn validate(&self) -> Result<Validated, ConfigError> {
        let (phi, spec) = self.model.build().map_err(invalid)?;
        let chain = self.chain(phi.site_dim()).map_err(invalid)?;
        let geom = self.geometry(phi.range()).map_err(ConfigError::Geometry)?;
        geom.check_chain(&chain).map_err(ConfigError::Geometry)?;
        for g in self.scan_geometries(phi.range()).map_err(ConfigError::Geometry)? {
            g.check_chain(&chain).map_err(ConfigError::Geometry)?;
        }
        if !chain.is_periodic() {
            return Err(ConfigError::Geometry(nesslab_core::Error::NotPeriodic));
        }
        let n = chain.n_sites() as i64;
        if let Some(x) = self.scan.x_values.iter().find(|x| x.abs() >= n) {
            return Err(ConfigError::Geometry(nesslab_core::Error::Geometry(format!(
                "scan separation {x} does not fit on {n} sites"
            ))));
        }
        if self.scan.t_values.iter().any(|t| !t.is_finite()) {
            return Err(invalid("scan.t_values must be finite"));
        }
        if self.scan.x_values.is_empty() || self.scan.t_values.is_empty() {
            return Err(invalid("scan.x_values and scan.t_values must be nonempty"));
        }
        if self.scan.corr_samples == 0 {
            return Err(invalid("scan.corr_samples must be positive"));
        }
        if self.scan.eps_values.iter().any(|e| e.is_nan() || *e <= 0.0) {
            return Err(invalid("scan.eps_values must be positive"));
        }
        Ok(Validated { phi, spec, chain, geom })
    }
}

/// Objects derived from a validated config.
pub struct Validated {
    pub phi: Interaction,
    pub spec: ChargeSpec,
    pub chain: ChainConfig,
    pub geom: CurrentGeometry,
}

/// `N_SITES` -> `n_sites`; `L` and `M` keep their case.
fn env_key(part: &str) -> String {
    match part {
        "L" | "M" | "T" => part.to_string(),
        "M_VALUES" => "M_values".to_string(),
        "L_MINUS_M" => "L_minus_M".to_string(),
        _ => part.to_ascii_lowercase(),
    }
}

fn apply_override(table: &mut toml::Table, path: &[String], raw: &str) -> Result<(), ConfigError> {
    let (last, parents) = path.split_last().ok_or_else(|| invalid("empty override key"))?;
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| invalid(format!("override path {path:?} crosses a non-table value")))?;
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    cur.insert(last.clone(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
schema_version = 1
seed = 7

[model]
kind = "xx"

[chain]
n_sites = 8

[bias]
beta = 1.0
lambda = 0.5
conserved_op = "total_current"

[geometry]
L = 4
M = 2

[window]
kind = "hann"
T = 1.5

[scan]
x_values = [3]
t_values = [0.0, 0.25]
M_values = [2]

[output]
dir = "out"
"#;

    #[test]
    fn round_trip_is_exact() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(text, back.to_toml());
    }

    #[test]
    fn env_overrides() {
        let env = vec![
            ("NESSLAB_CHAIN__N_SITES".to_string(), "10".to_string()),
            ("NESSLAB_GEOMETRY__L".to_string(), "5".to_string()),
            ("NESSLAB_BIAS__LAMBDA".to_string(), "-0.25".to_string()),
            ("NESSLAB_OUTPUT__DIR".to_string(), "elsewhere".to_string()),
            ("OTHER".to_string(), "1".to_string()),
        ];
        let cfg = ExperimentConfig::from_toml_with_env(SAMPLE, env).unwrap();
        assert_eq!(cfg.chain.n_sites, 10);
        assert_eq!(cfg.geometry.l, 5);
        assert_eq!(cfg.bias.lambda, -0.25);
        assert_eq!(cfg.output.dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn rejects_bad_input() {
        let bad_version = SAMPLE.replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(ExperimentConfig::from_toml(&bad_version), Err(ConfigError::Invalid(_))));
        let unknown = SAMPLE.replace("seed = 7", "seed = 7\nbogus = 1");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
        let neg_beta = SAMPLE.replace("beta = 1.0", "beta = -1.0");
        assert!(ExperimentConfig::from_toml(&neg_beta).is_err());
    }

    #[test]
    fn geometry_checked_up_front() {
        let cfg = ExperimentConfig::from_toml(&SAMPLE.replace("n_sites = 8", "n_sites = 7")).unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Geometry(_))));
        let cfg = ExperimentConfig::from_toml(&SAMPLE.replace("M_values = [2]", "M_values = [2, 3]")).unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Geometry(_))));
        assert!(ExperimentConfig::from_toml(SAMPLE).unwrap().validate().is_ok());
    }
}
