//! Batch run configuration: model section plus state, sweep grids and
//! command options.

use serde::Deserialize;

use indivol::config::ModelConfig;
use indivol::Error;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub setting: SettingConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub options: OptionsConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingConfig {
    pub gamma_nu: f64,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub t: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub strikes: Vec<f64>,
    #[serde(default)]
    pub maturities: Vec<f64>,
    /// lower strikes of the non-traded call spread
    #[serde(default)]
    pub k1: Vec<f64>,
    pub k2: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptionsConfig {
    pub order: usize,
    pub side: String,
    pub seed: u64,
    pub jobs: usize,
    /// include semi-analytic rows in surface output when the model is a
    /// Heston builtin
    pub exact: bool,
    pub mc_paths: usize,
    pub mc_steps: usize,
    pub fd: FdConfig,
    pub taus: Vec<f64>,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        OptionsConfig {
            order: 2,
            side: "both".into(),
            seed: 42,
            jobs: 0,
            exact: true,
            mc_paths: 200_000,
            mc_steps: 100,
            fd: FdConfig::default(),
            taus: vec![0.2, 0.1, 0.05, 0.025],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdConfig {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// nodes for 1-D (non-traded) oracle solves
    pub ny1d: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            nx: 201,
            ny: 101,
            nt: 2000,
            x_min: -1.5,
            x_max: 1.5,
            y_min: 0.002,
            y_max: 0.2,
            ny1d: 1601,
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("json: {e}")))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("toml: {e}")))?
        };
        if cfg.options.order > 2 {
            return Err(Error::Config("order must be 0, 1 or 2".into()));
        }
        Ok(cfg)
    }
}

/// 17-significant-digit decimal float for byte-stable CSV output.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
