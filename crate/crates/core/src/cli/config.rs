use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::bvapprox::BoxRegion;
use crate::error::{config, Error, Result};
use crate::fields::{CatalogField, GridSpec, Mask};
use crate::identities::{AlphaMode, IdentityCheckConfig, TolerancePolicy};
use crate::rigidity::{DiskSpec, SearchConfig};
use crate::smallmat::SquareMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    VerifyIdentities,
    Reconstruct,
    RigidityFit,
    CounterexampleScan,
    Stokes,
    BvApprox,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::VerifyIdentities => "verify-identities",
            Subcommand::Reconstruct => "reconstruct",
            Subcommand::RigidityFit => "rigidity-fit",
            Subcommand::CounterexampleScan => "counterexample-scan",
            Subcommand::Stokes => "stokes",
            Subcommand::BvApprox => "bv-approx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Thresholds of the pipeline-level checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Reconstruction from the exact curl must match exact gradients to this.
    pub reconstruction_exact: f64,
    /// Largest `|circulation - flux|` component.
    pub flux_mismatch: f64,
    /// Relative slack on `|∮Rτ| ≤ 2πρ`.
    pub circulation_slack: f64,
    /// Allowed max/min spread of `jump_tv / curl_tv` across deltas.
    pub ratio_band: f64,
    /// Random rotations compared against the best fit.
    pub optimality_samples: usize,
    /// Allowed deviation of the `∫|F_ε - Id|²` exponent from 2.
    pub scan_exponent_band: f64,
    /// Smallest acceptable `∫dist²` exponent.
    pub scan_dist_exponent: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            reconstruction_exact: 1e-10,
            flux_mismatch: 1e-3,
            circulation_slack: 1e-6,
            ratio_band: 2.0,
            optimality_samples: 1000,
            scan_exponent_band: 0.02,
            scan_dist_exponent: 3.0,
        }
    }
}

/// A run configuration. Every section has a default, so the echo in each
/// report shows the values actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When present it must match the subcommand on the command line.
    pub subcommand: Option<Subcommand>,
    pub grid: Option<GridSpec>,
    pub field: Option<CatalogField>,
    pub seed: u64,
    pub output: OutputConfig,
    pub tolerance: TolerancePolicy,
    pub alpha_mode: AlphaMode,
    pub limits: Limits,
    pub eps: Vec<f64>,
    pub alpha: Option<SquareMatrix>,
    pub disks: Vec<DiskSpec>,
    pub search: Option<SearchConfig>,
    pub deltas: Vec<f64>,
    pub region: Option<BoxRegion>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subcommand: None,
            grid: None,
            field: None,
            seed: 0,
            output: OutputConfig::default(),
            tolerance: TolerancePolicy::default(),
            alpha_mode: AlphaMode::default(),
            limits: Limits::default(),
            eps: vec![0.1, 0.05, 0.025],
            alpha: None,
            disks: Vec::new(),
            search: None,
            deltas: vec![0.125, 0.0625, 0.03125],
            region: None,
        }
    }
}

/// The unit disk at spacing 1/128.
pub fn unit_disk_grid() -> GridSpec {
    GridSpec {
        origin: vec![-1.0, -1.0],
        lengths: vec![2.0, 2.0],
        h: 1.0 / 128.0,
        mask: Mask::Ball {
            center: [0.0; 3],
            radius: 1.0,
        },
    }
}

impl RunConfig {
    /// Parses JSON; errors carry the offending field path and the line/column.
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| Error::Config(format!("{origin}: at `{}`: {}", e.path(), e.inner())))?;
        de.end()
            .map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn identity_config(&self) -> IdentityCheckConfig {
        IdentityCheckConfig {
            tolerance: self.tolerance,
            alpha_mode: self.alpha_mode,
        }
    }

    /// Applies command-line overrides and checks the sections `sub` needs.
    pub fn prepare(mut self, sub: Subcommand, seed: Option<u64>) -> Result<Self> {
        if let Some(s) = self.subcommand {
            if s != sub {
                return config(format!(
                    "config is for `{}` but `{}` was requested",
                    s.name(),
                    sub.name()
                ));
            }
        }
        self.subcommand = Some(sub);
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(f) = &self.field {
            f.validate()?;
        }
        self.identity_config().validate()?;
        let l = &self.limits;
        let positive = [
            l.reconstruction_exact,
            l.flux_mismatch,
            l.circulation_slack,
            l.ratio_band,
            l.scan_exponent_band,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || l.ratio_band < 1.0 {
            return config("limits must be positive and finite, ratio_band at least 1");
        }
        match sub {
            Subcommand::VerifyIdentities
            | Subcommand::Reconstruct
            | Subcommand::RigidityFit
            | Subcommand::BvApprox => {
                if self.field.is_none() || self.grid.is_none() {
                    return config(format!("`{}` needs `field` and `grid`", sub.name()));
                }
            }
            Subcommand::CounterexampleScan => {
                if self.grid.is_none() {
                    self.grid = Some(unit_disk_grid());
                }
            }
            Subcommand::Stokes => {
                if self.alpha.is_none() || self.disks.is_empty() {
                    return config("`stokes` needs `alpha` and at least one disk");
                }
                // a grid alone is only used by the search
                if self.field.is_some() && self.grid.is_none() {
                    return config("`stokes` needs a `grid` for its `field`");
                }
                if self.grid.is_some() && self.field.is_none() && self.search.is_none() {
                    return config("`stokes` uses `grid` only with a `field` or a `search`");
                }
                for d in &self.disks {
                    d.validate()?;
                }
            }
        }
        if sub == Subcommand::BvApprox && self.deltas.iter().any(|d| !(*d > 0.0)) {
            return config("deltas must be positive");
        }
        if let Some(g) = &self.grid {
            g.build()?;
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_name_the_field() {
        let err = RunConfig::from_json(
            "{\n  \"grid\": {\"origin\": [0, 0], \"lengths\": [1, 1], \"h\": \"x\"}\n}",
            "cfg.json",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("grid.h") && err.contains("line 2"), "{err}");
        let err = RunConfig::from_json("{\"gird\": 1}", "cfg.json").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn subcommand_mismatch_is_a_config_error() {
        let cfg = RunConfig {
            subcommand: Some(Subcommand::Stokes),
            ..Default::default()
        };
        assert!(matches!(
            cfg.prepare(Subcommand::BvApprox, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn scan_defaults_to_unit_disk() {
        let cfg = RunConfig::default()
            .prepare(Subcommand::CounterexampleScan, Some(4))
            .unwrap();
        assert_eq!(cfg.grid, Some(unit_disk_grid()));
        assert_eq!(cfg.seed, 4);
    }
}
