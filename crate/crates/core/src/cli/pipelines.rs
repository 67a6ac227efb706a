use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::{RunConfig, Subcommand};
use super::report::{Cell, ReportTable};
use crate::bvapprox::{bv_ratio, BoxRegion, BV_CSV_HEADER};
use crate::error::{config, Error, Result};
use crate::fields::{
    convergence_rate, curl_rowwise, CatalogField, Grid, SampleNodes, ThirdOrderField,
};
use crate::identities::{reconstruct_gradient, verify_identities, CurlInput};
use crate::rigidity::{
    certificate_search, circulation, counterexample_scan, disk_flux, fit_objective,
    flux_and_certificate, rigidity_quotient, SCAN_CSV_HEADER,
};
use crate::smallmat::{norm, random_rotation_with};

/// What a pipeline hands to the report writer.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub results: Vec<Value>,
    pub table: ReportTable,
    pub failures: Vec<String>,
    pub summary: Option<Value>,
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Contract(format!("unserializable result: {e}")))
}

fn header(h: &str) -> Vec<&str> {
    h.split(',').collect()
}

// prepare() guarantees these for the subcommands that need them
fn field_and_grid(cfg: &RunConfig) -> Result<(CatalogField, Grid)> {
    match (&cfg.field, &cfg.grid) {
        (Some(f), Some(g)) => Ok((f.clone(), g.build()?)),
        _ => config("this subcommand needs `field` and `grid`"),
    }
}

pub fn run_pipeline(sub: Subcommand, cfg: &RunConfig) -> Result<PipelineOutput> {
    match sub {
        Subcommand::VerifyIdentities => verify(cfg),
        Subcommand::Reconstruct => reconstruct(cfg),
        Subcommand::RigidityFit => rigidity_fit(cfg),
        Subcommand::CounterexampleScan => scan(cfg),
        Subcommand::Stokes => stokes(cfg),
        Subcommand::BvApprox => bv(cfg),
    }
}

fn verify(cfg: &RunConfig) -> Result<PipelineOutput> {
    let (field, grid) = field_and_grid(cfg)?;
    let suite = verify_identities(&field, &grid, &cfg.identity_config())?;
    let mut table = ReportTable::new(&[
        "name",
        "max_residual",
        "l2_residual",
        "grid_h",
        "rate",
        "order_constant",
        "margin",
    ]);
    let mut results = Vec::new();
    for r in &suite.reports {
        table.push(vec![
            Cell::from(r.name.as_str()),
            r.max_residual.into(),
            r.l2_residual.into(),
            r.grid_h.into(),
            r.rate.into(),
            r.order_constant.into(),
            r.margin.into(),
        ]);
        results.push(to_value(r)?);
    }
    Ok(PipelineOutput {
        results,
        table,
        failures: suite.failures,
        summary: Some(json!({
            "field": field.id(),
            "skipped": suite.skipped,
            "reconstruction_constant": suite.reconstruction_constant,
        })),
    })
}

fn max_diff(a: &ThirdOrderField, b: &ThirdOrderField, nodes: impl Iterator<Item = usize>) -> f64 {
    nodes
        .flat_map(|n| a.at(n).iter().zip(b.at(n)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn reconstruct(cfg: &RunConfig) -> Result<PipelineOutput> {
    let (field, grid) = field_and_grid(cfg)?;
    if !field.is_rotation_field() {
        return config("reconstruct needs a rotation-valued catalog field");
    }
    let fine = grid.refined();
    let samples = [
        SampleNodes::interior(&grid),
        SampleNodes::shared(&grid, &fine)?,
    ];
    let mut table = ReportTable::new(&["h", "exact_curl_max_error", "fd_curl_max_error", "rate"]);
    let mut results = Vec::new();
    let mut failures = Vec::new();
    let mut fd_errors = Vec::new();
    for (g, sample) in [grid, fine].iter().zip(&samples) {
        let r = field.sample(g)?;
        let truth = field.analytic_gradient(g)?;
        let exact = reconstruct_gradient(&r, CurlInput::Rowwise(&field.analytic_curl(g)?))?;
        let exact_err = max_diff(
            &exact,
            &truth,
            (0..g.node_count()).filter(|&n| g.in_mask(n)),
        );
        let fd = reconstruct_gradient(&r, CurlInput::Rowwise(&curl_rowwise(&r)?))?;
        let fd_err = max_diff(&fd, &truth, sample.nodes.iter().copied());
        if !(exact_err <= cfg.limits.reconstruction_exact) {
            failures.push(format!(
                "h={}: reconstruction from the exact curl is off by {exact_err:e}",
                g.h()
            ));
        }
        fd_errors.push(fd_err);
        results.push(
            json!({ "h": g.h(), "exact_curl_max_error": exact_err, "fd_curl_max_error": fd_err }),
        );
    }
    let tol = &cfg.tolerance;
    let exact = fd_errors.iter().all(|e| *e <= tol.exact_floor);
    let rate = convergence_rate(fd_errors[0], grid.h(), fd_errors[1], fine.h());
    if !exact && !((rate - tol.expected_order).abs() <= tol.order_band) {
        failures.push(format!(
            "reconstruction with the discrete curl converges at order {rate:.3}, expected {} ± {}",
            tol.expected_order, tol.order_band
        ));
    }
    results[1]["rate"] = json!(rate);
    for (i, r) in results.iter().enumerate() {
        table.push(vec![
            r["h"].as_f64().into(),
            r["exact_curl_max_error"].as_f64().into(),
            r["fd_curl_max_error"].as_f64().into(),
            if i == 1 { Cell::Num(rate) } else { Cell::Empty },
        ]);
    }
    Ok(PipelineOutput {
        results,
        table,
        failures,
        summary: Some(json!({ "field": field.id() })),
    })
}

fn rigidity_fit(cfg: &RunConfig) -> Result<PipelineOutput> {
    let (field, grid) = field_and_grid(cfg)?;
    let f = field.sample(&grid)?;
    let rep = rigidity_quotient(&f)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best_random = f64::INFINITY;
    for _ in 0..cfg.limits.optimality_samples {
        let q = random_rotation_with(&mut rng, f.m())?;
        best_random = best_random.min(fit_objective(&f, &q));
    }
    let mut failures = Vec::new();
    if best_random < rep.lhs - 1e-12 * (1.0 + rep.lhs) {
        failures.push(format!(
            "a random rotation fits better than the best fit ({best_random:e} < {:e})",
            rep.lhs
        ));
    }
    let mut table = ReportTable::new(&[
        "field",
        "lhs",
        "dist_term",
        "curl_term",
        "quotient",
        "best_random_objective",
        "degenerate_fit",
    ]);
    table.push(vec![
        field.id().into(),
        rep.lhs.into(),
        rep.dist_term.into(),
        rep.curl_term.into(),
        rep.quotient.into(),
        Cell::from((best_random.is_finite()).then_some(best_random)),
        rep.degenerate_fit.into(),
    ]);
    let mut result = to_value(&rep)?;
    result["field"] = json!(field.id());
    result["best_random_objective"] = json!(best_random.is_finite().then_some(best_random));
    result["optimality_samples"] = json!(cfg.limits.optimality_samples);
    Ok(PipelineOutput {
        results: vec![result],
        table,
        failures,
        summary: None,
    })
}

fn scan(cfg: &RunConfig) -> Result<PipelineOutput> {
    let grid = match &cfg.grid {
        Some(g) => g.build()?,
        None => return config("counterexample-scan needs a grid"),
    };
    let t = counterexample_scan(&cfg.eps, &grid)?;
    let area = crate::fields::integrate_nodes(&grid, |_| 1.0);
    let second_moment = crate::fields::integrate_nodes(&grid, |n| grid.position(n)[0].powi(2));
    let mut failures = Vec::new();
    let lim = &cfg.limits;
    if !((t.lhs_fit.exponent - 2.0).abs() <= lim.scan_exponent_band) {
        failures.push(format!(
            "lhs exponent {:.4} outside 2 ± {}",
            t.lhs_fit.exponent, lim.scan_exponent_band
        ));
    }
    if !(t.dist_fit.exponent >= lim.scan_dist_exponent) {
        failures.push(format!(
            "dist exponent {:.4} below {}",
            t.dist_fit.exponent, lim.scan_dist_exponent
        ));
    }
    if !t.naive_estimate_fails() {
        failures.push("the naive quotient stays bounded as eps decreases".into());
    }
    let mut columns = header(SCAN_CSV_HEADER);
    columns.push("naive_quotient");
    let mut table = ReportTable::new(&columns);
    let mut results = Vec::new();
    for r in &t.rows {
        // |curl F_ε| = ε and |F_ε - Id|² = 2ε²x₁² hold pointwise
        let tv_rel = (r.curl_tv - r.eps * area).abs() / (r.eps * area);
        let lhs_rel = (r.lhs_l2 - 2.0 * r.eps * r.eps * second_moment).abs() / r.lhs_l2;
        if !(tv_rel <= 1e-9 && lhs_rel <= 1e-9) {
            failures.push(format!(
                "eps={}: integrals disagree with the pointwise formulas ({tv_rel:e}, {lhs_rel:e})",
                r.eps
            ));
        }
        table.push(vec![
            r.eps.into(),
            r.lhs_l2.into(),
            r.dist_l2.into(),
            r.curl_tv.into(),
            r.quotient.into(),
            r.naive_quotient.into(),
        ]);
        results.push(to_value(r)?);
    }
    table.footer.push("fit,column,exponent,constant".into());
    for (name, f) in [("lhs_l2", t.lhs_fit), ("dist_l2", t.dist_fit)] {
        table.footer.push(format!(
            "fit,{name},{:.16e},{:.16e}",
            f.exponent, f.constant
        ));
    }
    Ok(PipelineOutput {
        results,
        table,
        failures,
        summary: Some(json!({
            "lhs_fit": to_value(&t.lhs_fit)?,
            "dist_fit": to_value(&t.dist_fit)?,
            "naive_estimate_fails": t.naive_estimate_fails(),
            "area": area,
        })),
    })
}

fn stokes(cfg: &RunConfig) -> Result<PipelineOutput> {
    let Some(alpha) = &cfg.alpha else {
        return config("stokes needs `alpha`");
    };
    let sampled = match (&cfg.field, &cfg.grid) {
        (Some(f), Some(g)) => {
            let grid = g.build()?;
            let r = f.sample(&grid)?;
            Some((f.clone(), curl_rowwise(&r)?, f.analytic_curl(&grid)?, r))
        }
        _ => None,
    };
    let mut table = ReportTable::new(&[
        "disk",
        "radius",
        "flux_norm",
        "margin",
        "certifies",
        "critical_radius",
        "circulation_norm",
        "circulation_bound",
        "flux_mismatch",
        "fd_flux_mismatch",
    ]);
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (i, disk) in cfg.disks.iter().enumerate() {
        let cert = flux_and_certificate(alpha, disk)?;
        let mut result = to_value(&cert)?;
        result["disk"] = to_value(disk)?;
        let mut field_cells = vec![Cell::Empty; 4];
        if let Some((field, fd_curl, exact_curl, r)) = &sampled {
            let circ = circulation(r, disk)?;
            let exact = disk_flux(exact_curl, disk)?;
            let fd = disk_flux(fd_curl, disk)?;
            let mismatch = (0..3)
                .map(|k| (circ[k] - exact[k]).abs())
                .fold(0.0, f64::max);
            let fd_mismatch = (0..3).map(|k| (circ[k] - fd[k]).abs()).fold(0.0, f64::max);
            let bound = 2.0 * PI * disk.radius;
            let c = norm(&circ);
            if field.is_rotation_field() && !(c <= bound * (1.0 + cfg.limits.circulation_slack)) {
                failures.push(format!(
                    "disk {i}: circulation {c:e} exceeds 2πρ = {bound:e}"
                ));
            }
            if !(mismatch <= cfg.limits.flux_mismatch) {
                failures.push(format!(
                    "disk {i}: circulation and flux differ by {mismatch:e}"
                ));
            }
            field_cells = vec![c.into(), bound.into(), mismatch.into(), fd_mismatch.into()];
            result["circulation"] = json!(circ);
            result["flux_exact_curl"] = json!(exact);
            result["flux_fd_curl"] = json!(fd);
            result["flux_mismatch"] = json!(mismatch);
            result["fd_flux_mismatch"] = json!(fd_mismatch);
        }
        let mut row = vec![
            Cell::Num(i as f64),
            disk.radius.into(),
            norm(&cert.flux).into(),
            cert.margin.into(),
            cert.certifies.into(),
            cert.critical_radius.into(),
        ];
        row.extend(field_cells);
        table.push(row);
        results.push(result);
    }
    let summary = match &cfg.search {
        None => None,
        Some(search) => {
            let grid = match &cfg.grid {
                Some(g) => g.build()?,
                None => return config("the curl search needs a 3D `grid`"),
            };
            let mut s = *search;
            s.first_seed = s.first_seed.wrapping_add(cfg.seed);
            Some(json!({ "search": to_value(&certificate_search(alpha, &grid, &s)?)? }))
        }
    };
    Ok(PipelineOutput {
        results,
        table,
        failures,
        summary,
    })
}

fn bv(cfg: &RunConfig) -> Result<PipelineOutput> {
    let (field, grid) = field_and_grid(cfg)?;
    let region = match &cfg.region {
        Some(r) => r.clone(),
        None => {
            let spec = grid.spec();
            let hi: Vec<f64> = spec
                .origin
                .iter()
                .zip(&spec.lengths)
                .map(|(o, l)| o + l)
                .collect();
            BoxRegion::new(&spec.origin, &hi)?
        }
    };
    let f = field.sample(&grid)?;
    let rows = bv_ratio(&f, &region, &cfg.deltas)?;
    let mut failures = Vec::new();
    if rows.iter().any(|r| !r.zero_over_zero) {
        let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        if !(lo > 0.0 && hi / lo <= cfg.limits.ratio_band) {
            failures.push(format!(
                "jump/curl ratios span [{lo:e}, {hi:e}], more than a factor {}",
                cfg.limits.ratio_band
            ));
        }
    }
    let mut table = ReportTable::new(&header(BV_CSV_HEADER));
    let mut results = Vec::new();
    for r in &rows {
        table.push(vec![
            r.delta.into(),
            r.jump_tv.into(),
            r.curl_tv.into(),
            r.ratio.into(),
        ]);
        results.push(to_value(r)?);
    }
    Ok(PipelineOutput {
        results,
        table,
        failures,
        summary: Some(json!({ "field": field.id(), "region": to_value(&region)? })),
    })
}
