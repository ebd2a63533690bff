use std::path::PathBuf;

use serde::Deserialize;

use super::ExperimentError;
use crate::ensemble::{Combine, EnsembleSpec, FactorSpec};

/// Contents of an experiment TOML file. Every field except the ensemble has a
/// default; command-line flags override the file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default)]
    pub model: ModelConfig,
    /// Accepted samples `M`.
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the number of available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Also write every `(λ_i, O_ii)` to `samples.csv`.
    #[serde(default)]
    pub dump_samples: bool,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub compare: CompareConfig,
}

fn default_samples() -> u64 {
    50
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_combine")]
    pub combine: Combine,
    pub factors: Vec<FactorSpec>,
    /// Matrix dimension `N`.
    pub n: usize,
}

fn default_combine() -> Combine {
    Combine::Product
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Infer one of the built-in families from the ensemble.
    #[default]
    Auto,
    /// Solve with the product of the factors' S-transforms.
    FreeProduct,
    GinibreProduct { n: u32 },
    TruncatedHaarProduct { n: u32, kappa: f64 },
    SphericalProduct { k: u32 },
    HaarSum { k: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_bins")]
    pub bins: usize,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub spacing: Option<Spacing>,
}

fn default_bins() -> usize {
    40
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { bins: default_bins(), lo: None, hi: None, spacing: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default = "default_c_edge")]
    pub c_edge: f64,
    pub bulk_lo: Option<f64>,
    pub bulk_hi: Option<f64>,
    #[serde(default = "default_min_count")]
    pub min_count: u64,
    /// Pass threshold on the bulk sup-error of `Ô`.
    #[serde(default = "default_max_sup_err_o", alias = "max_sup_err_O")]
    pub max_sup_err_o: Option<f64>,
    pub max_sup_err_rho: Option<f64>,
    /// Pass threshold on `max |ĉ/c − 1|` over the bulk.
    pub max_rel_err_c: Option<f64>,
}

fn default_c_edge() -> f64 {
    3.0
}

fn default_min_count() -> u64 {
    1
}

fn default_max_sup_err_o() -> Option<f64> {
    Some(0.03)
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            c_edge: default_c_edge(),
            bulk_lo: None,
            bulk_hi: None,
            min_count: default_min_count(),
            max_sup_err_o: default_max_sup_err_o(),
            max_sup_err_rho: None,
            max_rel_err_c: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::ConfigInvalid(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn ensemble_spec(&self) -> Result<EnsembleSpec, ExperimentError> {
        let e = self
            .ensemble
            .as_ref()
            .ok_or_else(|| ExperimentError::ConfigInvalid("missing [ensemble] section".into()))?;
        EnsembleSpec::new(e.combine, e.factors.clone(), e.n)
            .map_err(|err| ExperimentError::ConfigInvalid(err.to_string()))
    }

    pub fn worker_count(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
            .max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_parses() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            samples = 10
            seed = 42
            workers = 2
            out_dir = "results"

            [ensemble]
            combine = "product"
            n = 64
            factors = [{ kind = "ginibre" }, { kind = "truncated_haar", kappa = 0.5 }]

            [model]
            kind = "free_product"

            [grid]
            bins = 20
            lo = 0.0
            hi = 1.2

            [compare]
            c_edge = 2.5
            max_sup_err_rho = 0.05
            "#,
        )
        .unwrap();
        let spec = cfg.ensemble_spec().unwrap();
        assert_eq!(spec.factors()[1], FactorSpec::TruncatedHaar { kappa: 0.5 });
        assert_eq!(cfg.model, ModelConfig::FreeProduct);
        assert_eq!(cfg.grid.bins, 20);
        assert_eq!(cfg.compare.max_sup_err_o, Some(0.03));
        assert_eq!(cfg.compare.max_sup_err_rho, Some(0.05));
        assert_eq!(cfg.worker_count(), 2);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml("[ensemble]\nn = 4\nfactors = [{ kind = \"ginibre\" }]").unwrap();
        assert_eq!(cfg.model, ModelConfig::Auto);
        assert_eq!(cfg.samples, 50);
        assert_eq!(cfg.compare.c_edge, 3.0);
        assert_eq!(cfg.grid, GridConfig::default());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ExperimentConfig::from_toml("sample = 3").is_err());
        let bad_sum = ExperimentConfig::from_toml(
            "[ensemble]\ncombine = \"sum\"\nn = 4\nfactors = [{ kind = \"ginibre\" }]",
        )
        .unwrap();
        assert!(matches!(bad_sum.ensemble_spec(), Err(ExperimentError::ConfigInvalid(_))));
        let bad_kappa = ExperimentConfig::from_toml(
            "[ensemble]\nn = 4\nfactors = [{ kind = \"truncated_haar\", kappa = 0.01 }]",
        )
        .unwrap();
        assert!(bad_kappa.ensemble_spec().is_err());
    }
}
