//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotcurl::bvapprox::{build_piecewise_with, bv_ratio, cube_cover, BoxRegion, FitRegion};
use rotcurl::fields::{
    convergence_rate, curl_rowwise, make_grid, AngleProfile, AxisFactor, CatalogField, Grid, Mask,
    MatrixField, SampleNodes, ThirdOrderField,
};
use rotcurl::identities::{
    check_alpha_contradiction, reconstruct_gradient, verify_identities, CurlInput,
    IdentityCheckConfig,
};
use rotcurl::rigidity::{
    circulation, counterexample_scan, disk_flux, flux_and_certificate, rigidity_quotient, DiskSpec,
};
use rotcurl::smallmat::{norm, random_rotation, SquareMatrix};

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn unit_disk(h: f64) -> Grid {
    make_grid(
        &[-1.0, -1.0],
        &[2.0, 2.0],
        h,
        Mask::Ball {
            center: [0.0; 3],
            radius: 1.0,
        },
    )
    .unwrap()
}

fn unit_box(dim: usize, h: f64) -> Grid {
    make_grid(&vec![0.0; dim], &vec![1.0; dim], h, Mask::FullBox).unwrap()
}

fn blended() -> CatalogField {
    CatalogField::BlendedRotation {
        first: AxisFactor {
            axis: [1.0, 0.0, 1.0],
            theta: AngleProfile {
                gradient: [0.8, -0.3, 0.5],
                hessian: [[0.4, 0.1, 0.0], [0.1, -0.2, 0.3], [0.0, 0.3, 0.1]],
                ..Default::default()
            },
        },
        second: AxisFactor {
            axis: [0.0, 1.0, -0.5],
            theta: AngleProfile {
                offset: 0.4,
                gradient: [-0.5, 0.9, 0.2],
                hessian: [[0.0, 0.2, 0.1], [0.2, 0.3, 0.0], [0.1, 0.0, -0.4]],
                ..Default::default()
            },
        },
    }
}

fn axis() -> CatalogField {
    CatalogField::AxisRotation {
        axis: [1.0, 2.0, 2.0],
        theta: AngleProfile {
            gradient: [1.2, -0.4, 0.7],
            hessian: [[0.3, 0.0, 0.1], [0.0, -0.2, 0.0], [0.1, 0.0, 0.2]],
            ..Default::default()
        },
    }
}

fn c1_counterexample_scaling() -> Outcome {
    let start = Instant::now();
    let t = counterexample_scan(&[0.1, 0.05, 0.025], &unit_disk(1.0 / 128.0)).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let lhs_dev = t
        .rows
        .iter()
        .map(|r| (r.lhs_l2 / (0.5 * PI * r.eps * r.eps) - 1.0).abs())
        .fold(0.0, f64::max);
    let tv_dev = t
        .rows
        .iter()
        .map(|r| (r.curl_tv / (PI * r.eps) - 1.0).abs())
        .fold(0.0, f64::max);
    let pass = lhs_dev <= 0.02
        && (t.lhs_fit.exponent - 2.0).abs() <= 0.02
        && t.dist_fit.exponent >= 3.0
        && tv_dev <= 0.01
        && secs < 10.0;
    Ok((
        pass,
        format!(
            "lhs rel dev {lhs_dev:.2e}, lhs exponent {:.4}, dist exponent {:.4}, curl tv rel dev {tv_dev:.2e}, {secs:.2} s",
            t.lhs_fit.exponent, t.dist_fit.exponent
        ),
    ))
}

fn max_diff(a: &ThirdOrderField, b: &ThirdOrderField, nodes: &[usize]) -> f64 {
    nodes
        .iter()
        .flat_map(|&n| a.at(n).iter().zip(b.at(n)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn c2_gradient_reconstruction() -> Outcome {
    let coarse = unit_box(3, 1.0 / 32.0);
    let fine = coarse.refined();
    let shared = [
        SampleNodes::interior(&coarse).nodes,
        SampleNodes::shared(&coarse, &fine).map_err(err)?.nodes,
    ];
    let mut exact_worst = 0.0_f64;
    let mut rates = Vec::new();
    for field in [axis(), blended()] {
        let mut fd = Vec::new();
        for (g, sample) in [&coarse, &fine].into_iter().zip(&shared) {
            let r = field.sample(g).map_err(err)?;
            let truth = field.analytic_gradient(g).map_err(err)?;
            let all: Vec<usize> = (0..g.node_count()).collect();
            let curl = field.analytic_curl(g).map_err(err)?;
            let exact = reconstruct_gradient(&r, CurlInput::Rowwise(&curl)).map_err(err)?;
            exact_worst = exact_worst.max(max_diff(&exact, &truth, &all));
            let fd_curl = curl_rowwise(&r).map_err(err)?;
            let approx = reconstruct_gradient(&r, CurlInput::Rowwise(&fd_curl)).map_err(err)?;
            fd.push(max_diff(&approx, &truth, sample));
        }
        rates.push(convergence_rate(fd[0], coarse.h(), fd[1], fine.h()));
    }
    let pass = exact_worst <= 1e-10 && rates.iter().all(|r| (r - 2.0).abs() <= 0.3);
    Ok((
        pass,
        format!("analytic-curl max error {exact_worst:.2e}, fd rates {rates:.3?}"),
    ))
}

fn c3_identity_suite() -> Outcome {
    let start = Instant::now();
    let cfg = IdentityCheckConfig::default();
    let mut failures = Vec::new();
    let mut worst_alg = 0.0_f64;
    let mut min_margin = f64::INFINITY;
    let mut rates = (f64::INFINITY, f64::NEG_INFINITY);
    for (dim, h) in [(2, 1.0 / 32.0), (3, 1.0 / 16.0)] {
        let g = unit_box(dim, h);
        for seed in 0..10 {
            let suite = verify_identities(&CatalogField::RandomSmooth { seed, dim }, &g, &cfg)
                .map_err(err)?;
            for r in &suite.reports {
                if r.grid_h == 0.0 {
                    worst_alg = worst_alg.max(r.max_residual);
                }
                if let Some(m) = r.margin {
                    min_margin = min_margin.min(m);
                }
                if let Some(rate) = r.rate {
                    rates = (rates.0.min(rate), rates.1.max(rate));
                }
            }
            failures.extend(
                suite
                    .failures
                    .into_iter()
                    .map(|f| format!("{dim}D seed {seed}: {f}")),
            );
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && worst_alg <= 1e-12 && min_margin >= -1e-8 && secs < 60.0;
    let mut detail = format!(
        "algebraic max {worst_alg:.2e}, rates in [{:.3}, {:.3}], min sym margin {min_margin:.3e}, {secs:.2} s",
        rates.0, rates.1
    );
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; {} failures, first: {f}", failures.len()));
    }
    Ok((pass, detail))
}

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let l = norm(&v);
        if l > 0.1 && l <= 1.0 {
            return [v[0] / l, v[1] / l, v[2] / l];
        }
    }
}

fn c4_stokes_certificate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut crossing_err = 0.0_f64;
    for _ in 0..100 {
        let e: Vec<f64> = (0..9).map(|_| rng.random_range(-3.0..3.0)).collect();
        let alpha = SquareMatrix::from_row_major(3, &e).map_err(err)?;
        let v = random_unit(&mut rng);
        let expected = 2.0 / norm(&alpha.mat_vec(&v));
        let margin = |rho: f64| {
            flux_and_certificate(&alpha, &DiskSpec::new([0.0; 3], v, rho).unwrap())
                .unwrap()
                .margin
        };
        let (mut lo, mut hi) = (1e-9, 1e9);
        if !(margin(lo) < 0.0 && margin(hi) > 0.0) {
            return Ok((false, format!("no sign change around {expected}")));
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if margin(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        crossing_err = crossing_err.max((0.5 * (lo + hi) - expected).abs());
    }

    let cube = unit_box(3, 1.0 / 32.0);
    let square = unit_box(2, 1.0 / 32.0);
    let fields: Vec<(CatalogField, &Grid)> = vec![
        (
            CatalogField::ConstantRotation {
                rotation: random_rotation(3, 3).map_err(err)?,
            },
            &cube,
        ),
        (axis(), &cube),
        (blended(), &cube),
        (CatalogField::RandomSmooth { seed: 0, dim: 3 }, &cube),
        (CatalogField::RandomSmooth { seed: 1, dim: 3 }, &cube),
        (
            CatalogField::PlanarRotation {
                theta: AngleProfile::linear(0, 2.0),
            },
            &square,
        ),
        (CatalogField::RandomSmooth { seed: 2, dim: 2 }, &square),
    ];
    let mut bound_ratio = 0.0_f64;
    let mut mismatch = 0.0_f64;
    for (field, g) in &fields {
        let r: MatrixField = field.sample(g).map_err(err)?;
        let curl = field.analytic_curl(g).map_err(err)?;
        for k in 0..4 {
            let (normal, center) = if g.dim() == 2 {
                (
                    [0.0, 0.0, if k % 2 == 0 { 1.0 } else { -1.0 }],
                    [0.5, 0.5, 0.0],
                )
            } else {
                (random_unit(&mut rng), [0.5; 3])
            };
            let radius = rng.random_range(0.1..0.45);
            let disk = DiskSpec::new(center, normal, radius)
                .map_err(err)?
                .with_points(4096);
            let circ = circulation(&r, &disk).map_err(err)?;
            bound_ratio = bound_ratio.max(norm(&circ) / (2.0 * PI * radius));
            let flux = disk_flux(&curl, &disk).map_err(err)?;
            let m = (0..3)
                .map(|i| (circ[i] - flux[i]).abs())
                .fold(0.0, f64::max);
            mismatch = mismatch.max(m);
        }
    }
    let pass = crossing_err <= 1e-12 && bound_ratio <= 1.0 + 1e-6 && mismatch <= 1e-3;
    Ok((
        pass,
        format!(
            "zero-crossing error {crossing_err:.2e}, max |circulation|/(2πρ) {bound_ratio:.6}, flux mismatch {mismatch:.2e}"
        ),
    ))
}

fn c5_alpha_contradiction() -> Outcome {
    let zero = check_alpha_contradiction(&SquareMatrix::zeros(3)).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // dyadic rationals are exact in binary; one nonzero entry at a time
    let mut rational_min = f64::INFINITY;
    for pos in 0..9 {
        for num in [-8, -3, -1, 1, 5, 8] {
            let mut e = [0.0; 9];
            e[pos] = num as f64 / 8.0;
            let a = SquareMatrix::from_row_major(3, &e).map_err(err)?;
            rational_min = rational_min.min(check_alpha_contradiction(&a).map_err(err)?);
        }
    }
    let mut random_min = f64::INFINITY;
    for _ in 0..10_000 {
        let e: Vec<f64> = (0..9).map(|_| rng.random_range(-5.0..5.0)).collect();
        if e.iter().all(|x| *x == 0.0) {
            continue;
        }
        let a = SquareMatrix::from_row_major(3, &e).map_err(err)?;
        random_min = random_min.min(check_alpha_contradiction(&a).map_err(err)?);
    }
    let pass = zero == 0.0 && rational_min > 0.0 && random_min > 0.0;
    Ok((
        pass,
        format!("m(0) = {zero}, min over rational nonzero {rational_min:.3e}, min over 10000 random {random_min:.3e}"),
    ))
}

/// Lattice points with the doubled cube inside the box, and unit-step pairs, by direct scan.
fn brute_force_cover(region: &BoxRegion, delta: f64) -> (Vec<[i64; 3]>, Vec<(usize, usize)>) {
    let axes: Vec<Vec<i64>> = (0..3)
        .map(|a| {
            if a >= region.dim() {
                return vec![0];
            }
            let lo = (region.lo[a] / delta).floor() as i64 - 3;
            let hi = (region.hi[a] / delta).ceil() as i64 + 3;
            (lo..=hi)
                .filter(|&k| {
                    let c = k as f64 * delta;
                    c - delta >= region.lo[a] && c + delta <= region.hi[a]
                })
                .collect()
        })
        .collect();
    let mut pts = Vec::new();
    for &a in &axes[0] {
        for &b in &axes[1] {
            for &c in &axes[2] {
                pts.push([a, b, c]);
            }
        }
    }
    let mut pairs = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if (0..3).map(|a| (pts[i][a] - pts[j][a]).abs()).sum::<i64>() == 1 {
                pairs.push((i, j));
            }
        }
    }
    (pts, pairs)
}

fn c6_bv_construction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut cover_mismatches = 0;
    for _ in 0..50 {
        let dim = rng.random_range(2..=3);
        let lo: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.5..2.0)).collect();
        let region = BoxRegion::new(&lo, &hi).map_err(err)?;
        let side = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min);
        let delta = rng.random_range(0.05..0.3) * side;
        let (pts, pairs) = brute_force_cover(&region, delta);
        match cube_cover(&region, delta) {
            Ok(c) if c.lattice == pts && c.neighbors == pairs => {}
            _ => cover_mismatches += 1,
        }
    }

    let mut jump_err = 0.0_f64;
    for (dim, pairs) in [(2, 3.0), (3, 9.0)] {
        let delta = 0.25;
        let a = random_rotation(1, dim).map_err(err)?.into_inner();
        let b = random_rotation(2, dim).map_err(err)?.into_inner();
        let (fa, fb) = (a.clone(), b.clone());
        let f = MatrixField::from_fn(unit_box(dim, 1.0 / 32.0), dim, move |x| {
            if x[0] < 0.375 {
                fa.clone()
            } else {
                fb.clone()
            }
        });
        let cover = cube_cover(&BoxRegion::unit(dim), delta).map_err(err)?;
        let pw = build_piecewise_with(&f, &cover, FitRegion::Small).map_err(err)?;
        let face = delta.powi(dim as i32 - 1);
        jump_err = jump_err.max((pw.jump_tv - (&a - &b).frobenius_norm() * pairs * face).abs());
    }

    let cases = [
        (
            CatalogField::PlanarRotation {
                theta: AngleProfile::linear(0, 2.0),
            },
            unit_box(2, 1.0 / 128.0),
        ),
        (
            CatalogField::AxisRotation {
                axis: [0.0, 0.0, 1.0],
                theta: AngleProfile::linear(0, 1.5),
            },
            unit_box(3, 1.0 / 64.0),
        ),
        (
            CatalogField::RandomSmooth { seed: 2, dim: 3 },
            unit_box(3, 1.0 / 64.0),
        ),
    ];
    let mut spread = 0.0_f64;
    for (field, g) in cases {
        let f = field.sample(&g).map_err(err)?;
        let rows =
            bv_ratio(&f, &BoxRegion::unit(g.dim()), &[0.125, 0.0625, 0.03125]).map_err(err)?;
        let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        spread = spread.max(if lo > 0.0 { hi / lo } else { f64::INFINITY });
    }
    let pass = cover_mismatches == 0 && jump_err <= 1e-10 && spread <= 2.0;
    Ok((
        pass,
        format!("cover mismatches {cover_mismatches}/50, step jump error {jump_err:.2e}, max ratio spread {spread:.3}"),
    ))
}

fn c7_rigidity_quotient() -> Outcome {
    let g = unit_disk(1.0 / 128.0);
    let limit = 1.0 / (2.0 * PI);
    let mut dev = 0.0_f64;
    let mut peak = 0.0_f64;
    for eps in [0.05, 0.025, 0.0125] {
        let f = CatalogField::FEps { eps }.sample(&g).map_err(err)?;
        let q = rigidity_quotient(&f).map_err(err)?.quotient;
        dev = dev.max((q / limit - 1.0).abs());
        peak = peak.max(q / limit);
    }
    Ok((
        dev <= 0.05 && peak <= 1.1,
        format!("max rel dev from 1/(2π) {dev:.2e}, max quotient/limit {peak:.5}"),
    ))
}

fn run_binary(sub: &str, cfg: &Path, out: &Path, threads: Option<&str>) -> Result<Vec<u8>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rotcurl"));
    cmd.args([sub, "--seed", "13", "--format", "json", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out);
    if let Some(t) = threads {
        cmd.env("ROTCURL_THREADS", t);
    }
    let status = cmd.output().map_err(err)?.status;
    if status.code() != Some(0) {
        return Err(format!("{sub} exited with {status}"));
    }
    std::fs::read(out.join(format!("{sub}.json"))).map_err(err)
}

fn c8_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let runs = [
        (
            "rigidity-fit",
            r#"{"grid": {"origin": [0, 0, 0], "lengths": [1, 1, 1], "h": 0.0625},
                "field": {"id": "random_smooth", "seed": 6, "dim": 3}}"#,
        ),
        (
            "verify-identities",
            r#"{"grid": {"origin": [0, 0], "lengths": [1, 1], "h": 0.0625},
                "field": {"id": "random_smooth", "seed": 2, "dim": 2}}"#,
        ),
        (
            "stokes",
            r#"{"alpha": [[0, 0, 2], [0, 1, 0], [0, 0, 0]],
                "disks": [{"center": [1, 1, 1], "normal": [0, 0, 1], "radius": 0.9}],
                "grid": {"origin": [0, 0, 0], "lengths": [2, 2, 2], "h": 0.25},
                "search": {"seeds": 2, "max_iterations": 20}}"#,
        ),
    ];
    let mut identical = 0;
    for (i, (sub, text)) in runs.iter().enumerate() {
        let cfg = tmp.path().join(format!("{i}.json"));
        std::fs::write(&cfg, text).map_err(err)?;
        let a = run_binary(sub, &cfg, &tmp.path().join(format!("{i}a")), None)?;
        let b = run_binary(sub, &cfg, &tmp.path().join(format!("{i}b")), Some("1"))?;
        if a == b {
            identical += 1;
        }
    }
    Ok((
        identical == runs.len(),
        format!("{identical}/{} report pairs byte-identical", runs.len()),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("counterexample scaling", c1_counterexample_scaling),
        ("gradient reconstruction", c2_gradient_reconstruction),
        ("identity suite", c3_identity_suite),
        ("stokes certificate", c4_stokes_certificate),
        ("constant-curl contradiction", c5_alpha_contradiction),
        ("bv construction", c6_bv_construction),
        ("rigidity quotient", c7_rigidity_quotient),
        ("determinism", c8_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {}. {name}: {detail}",
            if pass { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
