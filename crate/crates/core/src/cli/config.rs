use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::InstanceSpec;
use crate::spectral_fn::FunctionSpec;

/// Everything an experiment needs. Loaded from `--config` and then
/// overridden field by field by flags of the same name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    /// Explicit spectrum; takes precedence over `rank`, `sigma_max`, `sigma_min`.
    pub singular_values: Option<Vec<f64>>,
    pub rank: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub real: bool,
    /// Matrix file (`.csv` with a `.json` sidecar, or a `.dqsm` snapshot).
    /// Replaces the synthetic instance.
    pub matrix: Option<PathBuf>,
    /// Vector file holding `b` as a `1 x m` or `m x 1` matrix.
    pub vector: Option<PathBuf>,
    pub function: FunctionSpec,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub eta: f64,
    pub alpha: f64,
    pub r: Option<u64>,
    pub c: Option<u64>,
    pub eps_inner: Option<f64>,
    /// Compute `S A* b` densely instead of estimating it.
    pub exact_z: bool,
    pub index: usize,
    pub trials: u64,
    pub draws: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            m: 200,
            n: 150,
            singular_values: None,
            rank: 5,
            sigma_max: 1.0,
            sigma_min: 0.3,
            real: false,
            matrix: None,
            vector: None,
            function: FunctionSpec::Identity,
            eps1: None,
            eps2: None,
            eta: 0.2,
            alpha: 1.0,
            r: None,
            c: None,
            eps_inner: None,
            exact_z: false,
            index: 0,
            trials: 10,
            draws: 10_000,
            threads: None,
            out: None,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Comma-separated, non-increasing.
    #[arg(long, global = true, value_delimiter = ',')]
    pub singular_values: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub rank: Option<usize>,
    #[arg(long, global = true)]
    pub sigma_max: Option<f64>,
    #[arg(long, global = true)]
    pub sigma_min: Option<f64>,
    #[arg(long, global = true)]
    pub real: bool,
    #[arg(long, global = true)]
    pub matrix: Option<PathBuf>,
    #[arg(long, global = true)]
    pub vector: Option<PathBuf>,
    /// identity, inverse, power, threshold or table.
    #[arg(long, global = true)]
    pub function: Option<String>,
    /// Exponent for `--function power`.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Cut point for `--function threshold`.
    #[arg(long, global = true)]
    pub sigma0: Option<f64>,
    /// `x,f,fprime` CSV for `--function table`.
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
    #[arg(long, global = true)]
    pub eps1: Option<f64>,
    #[arg(long, global = true)]
    pub eps2: Option<f64>,
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub r: Option<u64>,
    #[arg(long, global = true)]
    pub c: Option<u64>,
    #[arg(long, global = true)]
    pub eps_inner: Option<f64>,
    #[arg(long, global = true)]
    pub exact_z: bool,
    #[arg(long, global = true)]
    pub index: Option<usize>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true)]
    pub draws: Option<u64>,
}

fn function_from_flags(o: &Overrides) -> Result<Option<FunctionSpec>> {
    let Some(name) = o.function.as_deref() else {
        return Ok(None);
    };
    let missing = |flag: &str| Error::InvalidParameter(format!("--function {name} needs --{flag}"));
    Ok(Some(match name {
        "identity" => FunctionSpec::Identity,
        "inverse" => FunctionSpec::Inverse,
        "power" => FunctionSpec::Power { p: o.p.ok_or_else(|| missing("p"))? },
        "threshold" => FunctionSpec::Threshold { sigma0: o.sigma0.ok_or_else(|| missing("sigma0"))? },
        "table" => FunctionSpec::Table {
            path: o.table.as_ref().ok_or_else(|| missing("table"))?.to_string_lossy().into_owned(),
        },
        other => return Err(Error::InvalidParameter(format!("unknown function {other:?}"))),
    }))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The config file (if any) with every given flag applied.
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut c = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { c.$f = v; } )* };
        }
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if o.$f.is_some() { c.$f = o.$f.clone(); } )* };
        }
        set!(seed, m, n, rank, sigma_max, sigma_min, eta, alpha, index, trials, draws);
        set_opt!(singular_values, matrix, vector, eps1, eps2, r, c, eps_inner, threads, out);
        c.real |= o.real;
        c.exact_z |= o.exact_z;
        if let Some(f) = function_from_flags(o)? {
            c.function = f;
        }
        Ok(c)
    }

    pub fn instance_spec(&self) -> InstanceSpec {
        match &self.singular_values {
            Some(s) => InstanceSpec { m: self.m, n: self.n, singular_values: s.clone(), complex: !self.real },
            None => InstanceSpec::linspace(self.m, self.n, self.rank, self.sigma_max, self.sigma_min, !self.real),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 7, "eta": 0.1, "function": {"name": "power", "p": 2.0}}"#).unwrap();
        let o = Overrides { config: Some(path), eta: Some(0.3), ..Default::default() };
        let c = ExperimentConfig::resolve(&o).unwrap();
        assert_eq!((c.seed, c.eta), (7, 0.3));
        assert_eq!(c.function, FunctionSpec::Power { p: 2.0 });
    }

    #[test]
    fn unknown_fields_and_functions_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sede": 1}"#).is_err());
        let o = Overrides { function: Some("cosine".into()), ..Default::default() };
        assert!(ExperimentConfig::resolve(&o).is_err());
        let o = Overrides { function: Some("power".into()), ..Default::default() };
        assert!(ExperimentConfig::resolve(&o).is_err());
    }

    #[test]
    fn spectrum_from_list_or_range() {
        let c = ExperimentConfig { singular_values: Some(vec![1.0, 0.5]), ..Default::default() };
        assert_eq!(c.instance_spec().singular_values, vec![1.0, 0.5]);
        let c = ExperimentConfig { rank: 3, sigma_max: 1.0, sigma_min: 0.5, ..Default::default() };
        assert_eq!(c.instance_spec().singular_values, vec![1.0, 0.75, 0.5]);
    }
}
