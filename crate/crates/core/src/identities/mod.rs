//! Pointwise identities of rotation fields, checked on sampled fields, and
//! reconstruction of `∇R` from `R` and its curl.

mod algebraic;
mod alpha;
mod differential;
mod reconstruct;

use serde::{Deserialize, Serialize};

pub use algebraic::{check_alpha_contradiction, check_frame, check_trace_algebra, frame_residual};
pub use alpha::{mean_curl, AlphaMode, AlphaSource};
pub(crate) use differential::require_rotation_field;
pub use differential::{
    check_2d_laplace, check_curlcurl, check_div_identity, check_div_skew_relation,
    check_laplace_identity, check_skew_norm, check_skew_product, check_sym_bound,
    max_rotation_defect, PlanarLaplaceReport,
};
use differential::{
    check_2d_laplace_over, check_curlcurl_over, check_div_identity_over,
    check_div_skew_relation_over, check_skew_norm_over, check_skew_product_over,
};
pub use reconstruct::{
    gradient_curl_constant, gradient_skewness_defect, reconstruct_gradient,
    reconstruct_gradient_general, rowwise_to_general, CurlInput,
};

use crate::error::{config, Result};
use crate::fields::{
    curl_rowwise, CatalogField, Grid, MatrixField, ResidualReport, SampleNodes, STATS_MARGIN,
};

/// Pass/fail thresholds for identity checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancePolicy {
    /// Absolute bound on purely algebraic residuals.
    pub algebraic_floor: f64,
    /// Residuals below this on both grids count as exact (no rate is asserted).
    pub exact_floor: f64,
    pub expected_order: f64,
    pub order_band: f64,
    /// Lower bound on margins that must stay nonnegative.
    pub margin_floor: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            algebraic_floor: 1e-12,
            exact_floor: 1e-10,
            expected_order: 2.0,
            order_band: 0.3,
            margin_floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityCheckConfig {
    pub tolerance: TolerancePolicy,
    pub alpha_mode: AlphaMode,
}

impl IdentityCheckConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerance;
        let all_positive = [
            t.algebraic_floor,
            t.exact_floor,
            t.order_band,
            t.margin_floor,
            t.expected_order,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if !all_positive {
            return config("tolerances must be positive and finite");
        }
        Ok(())
    }
}

/// Outcome of [`verify_identities`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IdentitySuite {
    pub reports: Vec<ResidualReport>,
    pub failures: Vec<String>,
    /// Checks not applicable to the field (for example rotation-only identities on a general field).
    pub skipped: Vec<String>,
    /// Measured `max|∇R| / max|Curl R|` of the reconstruction on the fine grid.
    pub reconstruction_constant: Option<f64>,
}

impl IdentitySuite {
    fn algebraic(&mut self, report: ResidualReport, tol: &TolerancePolicy) {
        if !(report.max_residual <= tol.algebraic_floor) {
            self.failures.push(format!(
                "{}: algebraic residual {:e} exceeds {:e}",
                report.name, report.max_residual, tol.algebraic_floor
            ));
        }
        self.reports.push(report);
    }

    fn differential(
        &mut self,
        coarse: ResidualReport,
        fine: ResidualReport,
        tol: &TolerancePolicy,
        assert_rate: bool,
    ) {
        let exact = coarse.max_residual <= tol.exact_floor && fine.max_residual <= tol.exact_floor;
        let fine = fine.with_rate_from(&coarse);
        if assert_rate && !exact {
            let rate = fine.rate.unwrap_or(f64::NAN);
            if !((rate - tol.expected_order).abs() <= tol.order_band) {
                self.failures.push(format!(
                    "{}: observed order {rate:.3} outside {} ± {}",
                    fine.name, tol.expected_order, tol.order_band
                ));
            }
        }
        self.reports.push(coarse);
        self.reports.push(fine);
    }

    fn margin(&mut self, report: ResidualReport, tol: &TolerancePolicy) {
        let m = report.margin.unwrap_or(0.0);
        if m < -tol.margin_floor {
            self.failures.push(format!(
                "{}: margin {m:e} below -{:e}",
                report.name, tol.margin_floor
            ));
        }
        self.reports.push(report);
    }
}

fn alpha_for(
    field: &CatalogField,
    grid: &Grid,
    sampled: &MatrixField,
    mode: AlphaMode,
) -> Result<AlphaSource> {
    Ok(match mode {
        AlphaMode::Pointwise => AlphaSource::Field(field.analytic_curl(grid)?),
        AlphaMode::MeanCurl => AlphaSource::Constant(mean_curl(sampled)?),
    })
}

fn rows_curlcurl(sampled: &MatrixField, nodes: &SampleNodes) -> Result<ResidualReport> {
    let mut worst: Option<ResidualReport> = None;
    for i in 0..3 {
        let r = check_curlcurl_over(&sampled.row_field(i), nodes)?;
        if worst
            .as_ref()
            .is_none_or(|w| r.max_residual > w.max_residual)
        {
            worst = Some(r);
        }
    }
    Ok(worst.expect("three rows"))
}

fn differential_pair(
    field: &CatalogField,
    coarse: &Grid,
    fine: &Grid,
    mode: AlphaMode,
    check: &dyn Fn(&MatrixField, &AlphaSource, &SampleNodes) -> Result<Vec<ResidualReport>>,
) -> Result<Vec<(ResidualReport, ResidualReport)>> {
    let mut out = Vec::new();
    let mut runs = Vec::new();
    let samples = [
        SampleNodes::interior(coarse),
        SampleNodes::shared(coarse, fine)?,
    ];
    for (g, nodes) in [coarse, fine].into_iter().zip(&samples) {
        let sampled = field.sample(g)?;
        let alpha = alpha_for(field, g, &sampled, mode)?;
        runs.push(check(&sampled, &alpha, nodes)?);
    }
    let fine_reports = runs.pop().expect("two runs");
    let coarse_reports = runs.pop().expect("two runs");
    for (c, f) in coarse_reports.into_iter().zip(fine_reports) {
        out.push((c, f));
    }
    Ok(out)
}

/// Runs every applicable identity on a catalog field at `grid` and at half its spacing.
/// Differential residuals on both grids are sampled at the nodes of `grid`.
///
/// Algebraic identities must hold to `algebraic_floor`; differential ones must
/// be exact or converge at `expected_order ± order_band`; the symmetric-part
/// bound must keep its margin above `-margin_floor`. With
/// [`AlphaMode::MeanCurl`] the differential residuals are diagnostics and no
/// rate is asserted. The constant-curl identities for `ΔR` and `|∇R|²` are
/// always diagnostics.
pub fn verify_identities(
    field: &CatalogField,
    grid: &Grid,
    cfg: &IdentityCheckConfig,
) -> Result<IdentitySuite> {
    cfg.validate()?;
    let tol = cfg.tolerance;
    let field = field.resolve();
    let fine = grid.refined();
    let mut suite = IdentitySuite::default();
    let rotation = field.is_rotation_field();
    let assert_rate = cfg.alpha_mode == AlphaMode::Pointwise;
    let sampled = field.sample(&fine)?;

    match field.dim() {
        3 => {
            if rotation {
                suite.algebraic(check_frame(&sampled)?, &tol);
                let curl = curl_rowwise(&sampled)?;
                let curl_m = curl.as_spatial().expect("3D");
                let trace = (0..fine.node_count())
                    .filter(|&n| fine.in_mask(n))
                    .map(|n| check_trace_algebra(&sampled.at(n), &curl_m.at(n)))
                    .try_fold(0.0_f64, |acc, r| r.map(|v| acc.max(v)))?;
                suite.algebraic(ResidualReport::algebraic("trace_algebra", trace), &tol);

                let recon = reconstruct_gradient(&sampled, CurlInput::Rowwise(&curl))?;
                let skew = gradient_skewness_defect(&sampled, &recon);
                suite.algebraic(
                    ResidualReport::algebraic("reconstruction_skewness", skew),
                    &tol,
                );
                let nodes = fine.interior_nodes(STATS_MARGIN);
                suite.reconstruction_constant = Some(gradient_curl_constant(
                    &recon,
                    &rowwise_to_general(&curl),
                    &nodes,
                ));

                let pairs = differential_pair(&field, grid, &fine, cfg.alpha_mode, &|f, a, s| {
                    Ok(vec![
                        check_div_identity_over(f, a, s)?,
                        check_skew_norm_over(f, a, s)?,
                        check_div_skew_relation_over(f, a, s)?,
                    ])
                })?;
                for (c, f) in pairs {
                    suite.differential(c, f, &tol, assert_rate);
                }
                let pairs = differential_pair(&field, grid, &fine, cfg.alpha_mode, &|f, _, s| {
                    Ok(vec![check_skew_product_over(f, s)?])
                })?;
                for (c, f) in pairs {
                    suite.differential(c, f, &tol, true);
                }
                let (lap, norm) = check_laplace_identity(&sampled, None)?;
                suite.reports.push(lap);
                suite.reports.push(norm);
            } else {
                suite.skipped.extend(
                    [
                        "frame",
                        "trace_algebra",
                        "div_identity",
                        "skew_norm",
                        "skew_product",
                        "laplace_identity",
                    ]
                    .map(String::from),
                );
            }
            let coarse_cc = rows_curlcurl(&field.sample(grid)?, &SampleNodes::interior(grid))?;
            let fine_cc = rows_curlcurl(&sampled, &SampleNodes::shared(grid, &fine)?)?;
            suite.differential(coarse_cc, fine_cc, &tol, true);
            suite.margin(check_sym_bound(&sampled)?, &tol);
        }
        _ => {
            if rotation {
                let pairs = differential_pair(&field, grid, &fine, cfg.alpha_mode, &|f, a, s| {
                    Ok(check_2d_laplace_over(f, a, s)?.into_reports())
                })?;
                for (c, f) in pairs {
                    suite.differential(c, f, &tol, assert_rate);
                }
                let pairs = differential_pair(&field, grid, &fine, cfg.alpha_mode, &|f, _, s| {
                    Ok(vec![check_skew_product_over(f, s)?])
                })?;
                for (c, f) in pairs {
                    suite.differential(c, f, &tol, true);
                }
                let curl = curl_rowwise(&sampled)?;
                let recon = reconstruct_gradient(&sampled, CurlInput::Rowwise(&curl))?;
                let skew = gradient_skewness_defect(&sampled, &recon);
                suite.algebraic(
                    ResidualReport::algebraic("reconstruction_skewness", skew),
                    &tol,
                );
                let nodes = fine.interior_nodes(STATS_MARGIN);
                suite.reconstruction_constant = Some(gradient_curl_constant(
                    &recon,
                    &rowwise_to_general(&curl),
                    &nodes,
                ));
            } else {
                suite
                    .skipped
                    .extend(["planar_laplace", "skew_product"].map(String::from));
            }
        }
    }
    Ok(suite)
}
