//! JSON configuration schema shared by the experiment-driving subcommands,
//! plus the smaller model file consumed by `diagrams`.

use anyhow::{bail, Context, Result};
use drcm::dynamics::OnOffParams;
use drcm::graphs::SmallGraph;
use drcm::rcm::{ConnectionModel, Profile};
use drcm::stats::ExperimentConfig;
use drcm::theory::{Regime, RegimeSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MOTIF_NAMES: [&str; 5] = ["edge", "wedge", "triangle", "star3", "k4"];

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub profile: ProfileSection,
    pub motifs: Vec<String>,
    /// Optional intensity ladder for multi-size runs; empty means single size.
    #[serde(default)]
    pub ladder: Vec<f64>,
    pub grid: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Interaction scale, given directly ...
    #[serde(default)]
    pub nu: Option<f64>,
    /// ... or through `nu = c * n^gamma`. Exactly one of the two forms.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_one")]
    pub c: f64,
    #[serde(default = "default_one")]
    pub mu: f64,
    #[serde(default = "default_one")]
    pub lambda: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSection {
    Indicator,
    Exponential { rate: f64 },
    Table { edges: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Bound on |z| for empirical means against exact expectations.
    pub mean_z: f64,
    /// Relative tolerance for empirical (co)variances against exact values.
    pub cov_rel: f64,
    /// Relative tolerance for moment formulas against brute-force oracles.
    pub oracle_rel: f64,
    /// Number of random finite models in the oracle sweep.
    pub oracle_models: usize,
    /// Restrict `verify` to the simulation-free checks.
    pub diagrams_only: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mean_z: 4.0,
            cov_rel: 0.25,
            oracle_rel: 1e-9,
            oracle_models: 25,
            diagrams_only: false,
        }
    }
}

fn default_dim() -> usize {
    1
}

fn default_one() -> f64 {
    1.0
}

impl Config {
    pub fn parse(raw: &str) -> Result<Config> {
        let cfg: Config = serde_json::from_str(raw).context("parsing configuration")?;
        if cfg.motifs.is_empty() {
            bail!("configuration needs at least one motif");
        }
        if cfg.grid.is_empty()
            || cfg.grid.iter().any(|t| !t.is_finite() || *t < 0.0)
            || cfg.grid.windows(2).any(|w| w[0] > w[1])
        {
            bail!("grid must be a nondecreasing list of nonnegative times");
        }
        if cfg.model.nu.is_some() == cfg.model.gamma.is_some() {
            bail!("model must set exactly one of nu and gamma");
        }
        if cfg.ladder.iter().any(|n| !n.is_finite() || *n <= 0.0) {
            bail!("ladder entries must be positive");
        }
        Ok(cfg)
    }

    pub fn profile(&self) -> Result<Profile> {
        Ok(match &self.profile {
            ProfileSection::Indicator => Profile::Indicator,
            ProfileSection::Exponential { rate } => Profile::exponential(*rate)?,
            ProfileSection::Table { edges, values } => {
                Profile::table(edges.clone(), values.clone())?
            }
        })
    }

    pub fn params(&self) -> Result<OnOffParams> {
        Ok(OnOffParams::new(self.model.mu, self.model.lambda)?)
    }

    pub fn motif_graphs(&self) -> Result<Vec<SmallGraph>> {
        self.motifs
            .iter()
            .map(|name| {
                SmallGraph::preset(name).with_context(|| {
                    format!("unknown motif {name:?}; valid names: {MOTIF_NAMES:?}")
                })
            })
            .collect()
    }

    /// Scaling parameters at population size `n`; exponent violations surface here.
    pub fn regime_spec(&self, n: f64, motifs: &[SmallGraph]) -> Result<RegimeSpec> {
        let spec = match (self.model.nu, self.model.gamma) {
            (Some(nu), None) => {
                // With no exponent given, classify by the mean one-hop degree.
                let regime = if n * nu >= 1.0 { Regime::Dense } else { Regime::Sparse };
                RegimeSpec::explicit(n, nu, regime)?
            }
            (None, Some(gamma)) => RegimeSpec::from_gamma(n, self.model.c, gamma, motifs)?,
            _ => unreachable!("validated in parse"),
        };
        Ok(spec)
    }

    pub fn connection_model(&self, spec: &RegimeSpec) -> Result<ConnectionModel> {
        Ok(ConnectionModel::new(
            spec.n,
            spec.nu,
            self.model.dim,
            self.profile()?,
        )?)
    }

    pub fn experiment(&self, seed: u64) -> Result<ExperimentConfig> {
        let motifs = self.motif_graphs()?;
        let spec = self.regime_spec(self.model.n, &motifs)?;
        Ok(ExperimentConfig {
            model: self.connection_model(&spec)?,
            params: self.params()?,
            motifs,
            grid: self.grid.clone(),
            replications: self.replications,
            master_seed: seed,
            eps_cut: 1e-9,
        })
    }
}

/// Input for the `diagrams` subcommand: a finite-space model and optionally
/// one kernel per row; kernels are drawn at random from `seed` if absent.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramsConfig {
    pub intensities: Vec<f64>,
    #[serde(default)]
    pub kernels: Option<Vec<KernelSection>>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub values: Vec<f64>,
}

pub fn load_raw(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading configuration file {}", path.display()))
}
