//! Declarative run configuration: a TOML file with nested sections, every
//! field overridable from the command line (flags win over the file).

use anyhow::{bail, Context, Result};
use ospchain_core::tba::TbaConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct FileConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub tba: TbaSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ModelSection {
    pub beta: Option<Vec<f64>>,
    pub j: Option<f64>,
    pub n: Option<Vec<usize>>,
    pub u: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct TbaSection {
    pub m_max: Option<usize>,
    pub grid_v: Option<f64>,
    pub grid_h: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub damping: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RunSection {
    pub out: Option<String>,
    pub seed: Option<u64>,
    pub excited: Option<bool>,
}

/// Fully resolved configuration for one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub betas: Vec<f64>,
    pub coupling: f64,
    pub trotter: Vec<usize>,
    pub u: Option<f64>,
    pub tba: TbaConfig,
    pub out: String,
    pub seed: u64,
    pub excited: bool,
}

impl RunConfig {
    pub fn resolve(file: Option<&Path>, cli: &crate::Cli) -> Result<Self> {
        let fc: FileConfig = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let mut tba = TbaConfig::default();
        if let Some(v) = fc.tba.m_max {
            tba.m_max = v;
        }
        if let Some(v) = fc.tba.grid_v {
            tba.half_width = v;
        }
        if let Some(v) = fc.tba.grid_h {
            tba.step = v;
        }
        if let Some(v) = fc.tba.tol {
            tba.tol = v;
        }
        if let Some(v) = fc.tba.max_iter {
            tba.max_iter = v;
        }
        if let Some(v) = fc.tba.damping {
            tba.damping = v;
        }
        // flags win over the file
        if let Some(v) = cli.m_max {
            tba.m_max = v;
        }
        if let Some(v) = cli.grid_v {
            tba.half_width = v;
        }
        if let Some(v) = cli.grid_h {
            tba.step = v;
        }
        if let Some(v) = cli.tol {
            tba.tol = v;
        }
        let betas = cli
            .beta
            .clone()
            .or(fc.model.beta)
            .unwrap_or_else(|| vec![1.0]);
        if betas.is_empty() {
            bail!("beta list must not be empty");
        }
        if betas.windows(2).any(|w| w[1] <= w[0]) {
            bail!("beta list must be strictly increasing");
        }
        if betas.iter().any(|&b| !(b > 0.0)) {
            bail!("beta values must be positive");
        }
        Ok(Self {
            betas,
            coupling: cli.coupling.or(fc.model.j).unwrap_or(-1.0),
            trotter: cli.trotter.clone().or(fc.model.n).unwrap_or_else(|| vec![8]),
            u: cli.u.or(fc.model.u),
            tba,
            out: cli
                .out
                .clone()
                .or(fc.run.out)
                .unwrap_or_else(|| "runs/out".to_string()),
            seed: cli.seed.or(fc.run.seed).unwrap_or(42),
            excited: cli.excited || fc.run.excited.unwrap_or(false),
        })
    }
}
