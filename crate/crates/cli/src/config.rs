use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use knowledge_core::funding::RewardTech;
use knowledge_core::moonshot::NpvMode;
use knowledge_core::Side;
use serde::{Deserialize, Serialize};

/// Optional TOML or JSON file; every key mirrors a command-line flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub q: Option<f64>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub periods: Option<usize>,
    pub points: Option<usize>,
    pub x_hat: Option<f64>,
    pub x_max: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub kappa: Option<f64>,
    pub s: Option<f64>,
    pub eta0: Option<f64>,
    pub tech: Option<RewardTech>,
    pub mode: Option<NpvMode>,
    pub side: Option<Side>,
    pub knowledge: Option<PathBuf>,
    pub force_success: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            _ => bail!("config file must end in .toml or .json: {}", path.display()),
        };
        Ok(cfg)
    }
}

/// Fully resolved parameters: flag, then config file, then default.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub q: f64,
    pub eta: f64,
    pub delta: f64,
    pub seed: u64,
    pub periods: usize,
    pub points: usize,
    pub x_hat: f64,
    pub x_max: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub kappa: f64,
    pub s: f64,
    pub eta0: f64,
    pub tech: RewardTech,
    pub mode: NpvMode,
    pub side: Side,
    pub knowledge: Option<PathBuf>,
    pub force_success: bool,
}

/// Flag values as parsed; `None` defers to the config file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub q: Option<f64>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub periods: Option<usize>,
    pub points: Option<usize>,
    pub x_hat: Option<f64>,
    pub x_max: Option<f64>,
    pub k: Option<f64>,
    pub kappa: Option<f64>,
    pub s: Option<f64>,
    pub eta0: Option<f64>,
    pub tech: Option<RewardTech>,
    pub mode: Option<NpvMode>,
    pub side: Option<Side>,
    pub knowledge: Option<PathBuf>,
    pub force_success: bool,
}

impl RunConfig {
    pub fn resolve(flags: Overrides, file: FileConfig) -> Result<Self> {
        let q = flags.q.or(file.q).unwrap_or(1.0);
        let cfg = Self {
            q,
            eta: flags.eta.or(file.eta).unwrap_or(1.0),
            delta: flags.delta.or(file.delta).unwrap_or(0.9),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            periods: flags.periods.or(file.periods).unwrap_or(20),
            points: flags.points.or(file.points).unwrap_or(200),
            x_hat: flags.x_hat.or(file.x_hat).unwrap_or(6.0 * q),
            x_max: flags.x_max.or(file.x_max).unwrap_or(16.0 * q),
            k: flags.k.or(file.k).unwrap_or(3.0),
            kappa: flags.kappa.or(file.kappa).unwrap_or(16.0),
            s: flags.s.or(file.s).unwrap_or(6.0),
            eta0: flags.eta0.or(file.eta0).unwrap_or(1.0),
            tech: flags.tech.or(file.tech).unwrap_or_default(),
            mode: flags.mode.or(file.mode).unwrap_or_default(),
            side: flags.side.or(file.side).unwrap_or_default(),
            knowledge: flags.knowledge.or(file.knowledge),
            force_success: flags.force_success || file.force_success.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q.is_finite()) {
            bail!("q must be positive and finite, got {}", self.q);
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            bail!("eta must be non-negative and finite, got {}", self.eta);
        }
        if !(0.0..1.0).contains(&self.delta) {
            bail!("delta must be in [0, 1), got {}", self.delta);
        }
        if self.points < 2 {
            bail!("points must be at least 2, got {}", self.points);
        }
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            bail!("x-max must be positive, got {}", self.x_max);
        }
        if !(self.x_hat > 0.0 && self.x_hat.is_finite()) {
            bail!("x-hat must be positive, got {}", self.x_hat);
        }
        Ok(())
    }
}
