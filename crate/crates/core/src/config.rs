//! Model configuration files (JSON or TOML): either a builtin with its
//! parameter table, or the Taylor entries of the five grouped coefficients
//! supplied directly.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{
    heston_model, reciprocal_heston_model, CoeffTable, LsvModel, SharpeRatio, TaylorTable,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub params: Option<ParamsConfig>,
    #[serde(default)]
    pub table: Option<TableConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub delta: Option<f64>,
    pub theta: Option<f64>,
    pub kappa: Option<f64>,
    pub rho: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub mu: Option<f64>,
    #[serde(default)]
    pub lambda: Option<LambdaConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaConfig {
    Constant { value: f64 },
    Affine { intercept: f64, slope: f64 },
}

impl LambdaConfig {
    fn to_sharpe(&self) -> SharpeRatio<f64> {
        match self {
            LambdaConfig::Constant { value } => SharpeRatio::Constant(*value),
            LambdaConfig::Affine { intercept, slope } => {
                SharpeRatio::AffineInY { intercept: *intercept, slope: *slope }
            }
        }
    }
}

/// Taylor entries of one grouped coefficient; omitted entries are zero.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntriesConfig {
    #[serde(default)]
    pub c00: f64,
    #[serde(default)]
    pub c10: f64,
    #[serde(default)]
    pub c01: f64,
    #[serde(default)]
    pub c20: f64,
    #[serde(default)]
    pub c11: f64,
    #[serde(default)]
    pub c02: f64,
}

impl EntriesConfig {
    fn to_table(&self) -> CoeffTable<f64> {
        CoeffTable {
            c00: self.c00,
            c10: self.c10,
            c01: self.c01,
            c20: self.c20,
            c11: self.c11,
            c02: self.c02,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub xbar: f64,
    pub ybar: f64,
    pub rho: f64,
    pub a: EntriesConfig,
    #[serde(default)]
    pub b: EntriesConfig,
    #[serde(default)]
    pub f: EntriesConfig,
    #[serde(default)]
    pub g: EntriesConfig,
    #[serde(default)]
    pub h: EntriesConfig,
}

/// Which builtin a model was constructed from, with its raw parameters
/// (the semi-analytic oracle needs them).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinKind {
    Heston { delta: f64, theta: f64, kappa: f64, rho: f64 },
    ReciprocalHeston { a: f64, b: f64, kappa: f64, mu: f64, rho: f64 },
}

/// A loaded model: a builtin with callable coefficients, or a bare table.
pub enum ModelSource {
    Model { model: Box<LsvModel<f64>>, builtin: BuiltinKind },
    Table(TaylorTable<f64>),
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSource> {
        match (&self.builtin, &self.table) {
            (Some(name), None) => {
                let p = self.params.clone().unwrap_or_default();
                let need = |v: Option<f64>, name: &'static str| {
                    v.ok_or(Error::Config(format!("builtin parameter `{name}` missing")))
                };
                match name.as_str() {
                    "heston" => {
                        let lambda = p
                            .lambda
                            .as_ref()
                            .map(LambdaConfig::to_sharpe)
                            .unwrap_or(SharpeRatio::Constant(0.0));
                        let (delta, theta, kappa, rho) = (
                            need(p.delta, "delta")?,
                            need(p.theta, "theta")?,
                            need(p.kappa, "kappa")?,
                            need(p.rho, "rho")?,
                        );
                        Ok(ModelSource::Model {
                            model: Box::new(heston_model(delta, theta, kappa, rho, lambda)?),
                            builtin: BuiltinKind::Heston { delta, theta, kappa, rho },
                        })
                    }
                    "reciprocal_heston" => {
                        let (a, b, kappa, mu, rho) = (
                            need(p.a, "a")?,
                            need(p.b, "b")?,
                            need(p.kappa, "kappa")?,
                            need(p.mu, "mu")?,
                            need(p.rho, "rho")?,
                        );
                        Ok(ModelSource::Model {
                            model: Box::new(reciprocal_heston_model(a, b, kappa, mu, rho)?),
                            builtin: BuiltinKind::ReciprocalHeston { a, b, kappa, mu, rho },
                        })
                    }
                    other => Err(Error::Config(format!("unknown builtin `{other}`"))),
                }
            }
            (None, Some(table)) => Ok(ModelSource::Table(TaylorTable::new(
                table.xbar,
                table.ybar,
                table.rho,
                table.a.to_table(),
                table.b.to_table(),
                table.f.to_table(),
                table.g.to_table(),
                table.h.to_table(),
            )?)),
            (Some(_), Some(_)) => {
                Err(Error::Config("specify either `builtin` or `table`, not both".into()))
            }
            (None, None) => Err(Error::Config("model needs `builtin` or `table`".into())),
        }
    }
}

/// Parses a model config from TOML or JSON source text (tried in that
/// order unless the text starts with `{`).
pub fn parse_model_config(text: &str) -> Result<ModelConfig> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("json: {e}")))
    } else {
        toml::from_str(text).map_err(|e| Error::Config(format!("toml: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_heston_toml() {
        let src = r#"
builtin = "heston"
[params]
delta = 0.2
theta = 0.04
kappa = 1.15
rho = -0.4
lambda = { kind = "constant", value = 0.0 }
"#;
        let cfg = parse_model_config(src).unwrap();
        match cfg.build().unwrap() {
            ModelSource::Model { model, builtin } => {
                assert!((model.grouped(0.0, 0.04).unwrap().a - 0.02).abs() < 1e-15);
                assert!(matches!(builtin, BuiltinKind::Heston { .. }));
            }
            _ => panic!("expected model"),
        }
    }

    #[test]
    fn table_json() {
        let src = r#"
{
  "table": {
    "xbar": 0.0, "ybar": 0.04, "rho": -0.4,
    "a": {"c00": 0.02, "c01": 0.5},
    "b": {"c00": 0.0008},
    "f": {"c00": 0.0, "c01": -1.15},
    "g": {"c00": -0.032},
    "h": {"c00": 0.125}
  }
}
"#;
        let cfg = parse_model_config(src).unwrap();
        match cfg.build().unwrap() {
            ModelSource::Table(t) => {
                assert_eq!(t.a.c01, 0.5);
                assert_eq!(t.sigma0(), 0.2);
            }
            _ => panic!("expected table"),
        }
    }

    #[test]
    fn missing_parameter_is_config_error() {
        let src = "builtin = \"heston\"\n[params]\ndelta = 0.2\n";
        let cfg = parse_model_config(src).unwrap();
        assert!(matches!(cfg.build(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(parse_model_config("builtin = \"heston\"\nbogus = 1\n").is_err());
    }
}
