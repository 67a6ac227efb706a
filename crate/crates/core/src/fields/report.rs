use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Grid, STATS_MARGIN};
use crate::error::{contract, Result};

/// Named residual statistics for one check on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub max_residual: f64,
    /// `sqrt(Σ w r²)` with cell-volume weights over the evaluated nodes.
    pub l2_residual: f64,
    pub grid_h: f64,
    /// Observed order from a paired run at `h` and `h/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// `max_residual / h²`, the fitted constant of a second-order check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_constant: Option<f64>,
    /// Smallest value of a quantity that should stay nonnegative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Nodes at which residual statistics are taken, with the quadrature weight per node.
///
/// Comparing a grid with its refinement on [`SampleNodes::shared`] keeps the
/// sampled region fixed, so observed orders are not polluted by the interior
/// margin moving with `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleNodes {
    pub nodes: Vec<usize>,
    pub weight: f64,
}

impl SampleNodes {
    /// Interior nodes of `grid` at the standard margin.
    pub fn interior(grid: &Grid) -> Self {
        Self {
            nodes: grid.interior_nodes(STATS_MARGIN),
            weight: grid.cell_volume(),
        }
    }

    /// Interior nodes of `coarse`, addressed on `fine = coarse.refined()`.
    pub fn shared(coarse: &Grid, fine: &Grid) -> Result<Self> {
        if *fine != coarse.refined() {
            return contract("shared sample nodes need a grid and its refinement");
        }
        let nodes = coarse
            .interior_nodes(STATS_MARGIN)
            .into_iter()
            .map(|n| {
                let i = coarse.index_of(n);
                fine.node_at([2 * i[0], 2 * i[1], 2 * i[2]])
            })
            .collect();
        Ok(Self {
            nodes,
            weight: coarse.cell_volume(),
        })
    }
}

impl ResidualReport {
    /// Report with no grid (purely algebraic checks use `grid_h = 0`).
    pub fn algebraic(name: impl Into<String>, max_residual: f64) -> Self {
        Self {
            name: name.into(),
            max_residual,
            l2_residual: max_residual,
            grid_h: 0.0,
            rate: None,
            order_constant: None,
            margin: None,
            warnings: Vec::new(),
        }
    }

    /// Statistics of a per-node residual over `nodes`, evaluated in parallel.
    pub fn from_residuals<F>(
        name: impl Into<String>,
        grid: &Grid,
        nodes: &[usize],
        residual: F,
    ) -> Self
    where
        F: Fn(usize) -> f64 + Sync,
    {
        let values: Vec<f64> = nodes.par_iter().map(|&n| residual(n)).collect();
        Self::from_values(name, grid, &values)
    }

    /// [`from_residuals`](Self::from_residuals) over a [`SampleNodes`] set.
    pub fn over<F>(name: impl Into<String>, grid: &Grid, sample: &SampleNodes, residual: F) -> Self
    where
        F: Fn(usize) -> f64 + Sync,
    {
        let values: Vec<f64> = sample.nodes.par_iter().map(|&n| residual(n)).collect();
        Self::weighted(name, grid.h(), sample.weight, &values)
    }

    /// Statistics of residual samples taken at grid nodes (summed in order).
    pub fn from_values(name: impl Into<String>, grid: &Grid, values: &[f64]) -> Self {
        Self::weighted(name, grid.h(), grid.cell_volume(), values)
    }

    fn weighted(name: impl Into<String>, h: f64, vol: f64, values: &[f64]) -> Self {
        let mut max = 0.0_f64;
        let mut l2 = 0.0;
        for r in values {
            let r = r.abs();
            max = max.max(r);
            l2 += vol * r * r;
        }
        Self {
            name: name.into(),
            max_residual: max,
            l2_residual: l2.sqrt(),
            grid_h: h,
            rate: None,
            order_constant: Some(max / (h * h)),
            margin: None,
            warnings: Vec::new(),
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = Some(margin);
        self
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// Fills `rate` of `self` (the fine run) from a coarse run at twice the spacing.
    pub fn with_rate_from(mut self, coarse: &ResidualReport) -> Self {
        self.rate = Some(convergence_rate(
            coarse.max_residual,
            coarse.grid_h,
            self.max_residual,
            self.grid_h,
        ));
        self
    }
}

/// `log(e_c / e_f) / log(h_c / h_f)`.
pub fn convergence_rate(coarse_err: f64, coarse_h: f64, fine_err: f64, fine_h: f64) -> f64 {
    (coarse_err / fine_err).ln() / (coarse_h / fine_h).ln()
}

pub const REPORT_CSV_HEADER: &str = "name,h,max,l2,rate";

/// CSV rows `(name, h, max, l2, rate)` with 17 significant digits; a missing rate is left empty.
pub fn reports_to_csv(reports: &[ResidualReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let rate = r.rate.map(|v| format!("{v:.16e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{}",
            r.name, r.grid_h, r.max_residual, r.l2_residual, rate
        );
    }
    out
}

pub fn reports_to_json(reports: &[ResidualReport]) -> serde_json::Result<String> {
    serde_json::to_string_pretty(reports)
}
