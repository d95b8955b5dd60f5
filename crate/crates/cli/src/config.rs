use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use contact_virial::systems::{make_system, Chart, SystemSpec};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
pub enum Method {
    #[serde(rename = "rk4")]
    #[value(name = "rk4")]
    Rk4,
    #[serde(rename = "dopri45")]
    #[value(name = "dopri45")]
    Dopri45,
    #[serde(rename = "euler_maruyama")]
    #[value(name = "euler_maruyama")]
    EulerMaruyama,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Dopri45 => "dopri45",
            Method::EulerMaruyama => "euler_maruyama",
        }
    }
}

/// Experiment file layout. Every section and key is optional; unknown keys
/// are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub system: SystemSection,
    pub integrator: IntegratorSection,
    pub run: RunSection,
    pub ensemble: EnsembleSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub name: Option<String>,
    pub chart: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: Option<Method>,
    pub dt: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub sample_interval: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub horizon: Option<f64>,
    pub t_start: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub residual_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub size: Option<usize>,
    pub seed: Option<u64>,
}

/// Command-line overrides of scalar config fields.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Experiment file (TOML).
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub chart: Option<String>,
    /// Parameter override `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Initial state, comma separated, in chart order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub initial: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub t_start: Option<f64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub residual_tolerance: Option<f64>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// A validated experiment.
pub struct Experiment {
    pub spec: SystemSpec,
    pub initial: Vec<f64>,
    pub method: Method,
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub sample_interval: f64,
    pub horizon: f64,
    pub t_start: f64,
    pub output_dir: PathBuf,
    pub residual_tolerance: f64,
    pub size: usize,
    pub seed: u64,
}

pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Overrides {
    /// Merges the config file (if any) with the flags and validates the
    /// result against the catalog.
    pub fn resolve(&self, stochastic_run: bool) -> Result<Experiment, CliError> {
        let mut cfg = match &self.config {
            Some(p) => load(p)?,
            None => ConfigFile::default(),
        };
        for kv in &self.params {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("--param expects NAME=VALUE, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("--param {k}: `{v}` is not a number")))?;
            cfg.system.params.insert(k.trim().to_string(), v);
        }

        let name = self
            .system
            .clone()
            .or(cfg.system.name)
            .ok_or_else(|| CliError::config("no system given (set [system] name or --system)"))?;
        let params: Vec<(String, f64)> = cfg.system.params.into_iter().collect();
        let mut spec = make_system(&name, &params)?;
        if let Some(chart) = self.chart.clone().or(cfg.system.chart) {
            spec = spec.with_chart(chart.parse::<Chart>()?)?;
        }

        let stochastic = spec.is_stochastic();
        let method = self
            .method
            .or(cfg.integrator.method)
            .unwrap_or(if stochastic_run { Method::EulerMaruyama } else { Method::Rk4 });
        if method == Method::EulerMaruyama && !stochastic {
            return Err(CliError::config(format!("euler_maruyama needs a stochastic system; `{name}` is deterministic")));
        }
        if stochastic_run && method != Method::EulerMaruyama {
            return Err(CliError::config("ensemble runs use method = \"euler_maruyama\""));
        }
        if stochastic_run && !stochastic {
            return Err(CliError::config(format!("`{name}` is deterministic; ensemble needs a stochastic system")));
        }

        let initial = self
            .initial
            .clone()
            .or(cfg.system.initial)
            .unwrap_or_else(|| spec.default_state());
        let dim = spec.layout().len();
        if initial.len() != dim {
            return Err(CliError::config(format!(
                "initial state has {} components, {} chart of `{name}` needs {dim} ({})",
                initial.len(),
                spec.chart,
                spec.layout().join(", ")
            )));
        }
        if initial.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config("initial state must be finite"));
        }

        let horizon = positive("horizon", self.horizon.or(cfg.run.horizon).unwrap_or(100.0))?;
        let t_start = self.t_start.or(cfg.run.t_start).unwrap_or(0.0);
        if !(t_start >= 0.0 && t_start < horizon) {
            return Err(CliError::config(format!("t_start must lie in [0, {horizon}), got {t_start}")));
        }
        let dt = positive("dt", self.dt.or(cfg.integrator.dt).unwrap_or(1e-3))?;
        if dt > horizon {
            return Err(CliError::config(format!("dt = {dt} exceeds horizon = {horizon}")));
        }
        let size = self.size.or(cfg.ensemble.size).unwrap_or(1000);
        if stochastic_run && size < 2 {
            return Err(CliError::config("ensemble size must be at least 2"));
        }
        Ok(Experiment {
            spec,
            initial,
            method,
            dt,
            rel_tol: positive("rel_tol", self.rel_tol.or(cfg.integrator.rel_tol).unwrap_or(1e-10))?,
            abs_tol: positive("abs_tol", self.abs_tol.or(cfg.integrator.abs_tol).unwrap_or(1e-12))?,
            sample_interval: positive(
                "sample_interval",
                self.sample_interval.or(cfg.integrator.sample_interval).unwrap_or(1e-2),
            )?,
            horizon,
            t_start,
            output_dir: self
                .output_dir
                .clone()
                .or(cfg.run.output_dir)
                .unwrap_or_else(|| PathBuf::from("output")),
            residual_tolerance: positive(
                "residual_tolerance",
                self.residual_tolerance.or(cfg.run.residual_tolerance).unwrap_or(1e-8),
            )?,
            size,
            seed: self.seed.or(cfg.ensemble.seed).unwrap_or(0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ConfigFile, toml::de::Error> {
        toml::from_str(text)
    }

    #[test]
    fn full_schema_parses() {
        let cfg = parse(
            r#"
            [system]
            name = "forced_oscillator"
            chart = "extended"
            initial = [0.0, 0.0, 1.0, 0.0]
            [system.params]
            F0 = 0.5
            [integrator]
            method = "dopri45"
            dt = 1e-3
            rel_tol = 1e-9
            abs_tol = 1e-11
            sample_interval = 0.05
            [run]
            horizon = 50.0
            t_start = 10.0
            output_dir = "out"
            residual_tolerance = 1e-6
            [ensemble]
            size = 10
            seed = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.integrator.method, Some(Method::Dopri45));
        assert_eq!(cfg.system.params["F0"], 0.5);
        assert_eq!(cfg.ensemble.seed, Some(3));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("[run]\nhorizon = 1.0\nhorizn = 2.0\n").is_err());
        assert!(parse("[solver]\ndt = 1.0\n").is_err());
        assert!(parse("[integrator]\nmethod = \"euler\"\n").is_err());
    }

    #[test]
    fn flags_override_and_validate() {
        let o = Overrides {
            system: Some("damped_oscillator".into()),
            params: vec!["gamma=0.2".into()],
            horizon: Some(5.0),
            ..Overrides::default()
        };
        let e = o.resolve(false).unwrap();
        assert_eq!(e.spec.params[2], ("gamma".to_string(), 0.2));
        assert_eq!(e.initial, vec![0.0, 1.0, 0.0]);
        assert_eq!(e.method, Method::Rk4);

        let bad = Overrides {
            t_start: Some(10.0),
            ..o.clone()
        };
        assert_eq!(bad.resolve(false).err().unwrap().code, 2);
        let bad = Overrides {
            params: vec!["mass=2".into()],
            ..o.clone()
        };
        assert_eq!(bad.resolve(false).err().unwrap().code, 2);
        let bad = Overrides {
            method: Some(Method::EulerMaruyama),
            ..o
        };
        assert_eq!(bad.resolve(false).err().unwrap().code, 2);
    }
}
