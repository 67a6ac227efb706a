use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cover::{cube_cover, BoxRegion, CubeCover};
use crate::error::{config, contract, Error, Result};
use crate::fields::{curl_rowwise, Grid, MatrixField};
use crate::identities::require_rotation_field;
use crate::smallmat::{project_to_rotation, RotationMatrix, SquareMatrix};

/// Which cube the per-cube fit averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitRegion {
    /// The doubled cube `Q_i = i + (-δ, δ)ⁿ`.
    #[default]
    Doubled,
    /// The small cube `q_i = i + [-δ/2, δ/2)ⁿ`.
    Small,
}

/// `R_δ = R_i` on each small cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseRotation {
    pub cover: CubeCover,
    pub fit_region: FitRegion,
    pub rotations: Vec<RotationMatrix>,
    /// `Σ |R_i - R_j| δ^{n-1}` over unordered neighbor pairs.
    pub jump_tv: f64,
    /// Cubes whose mean had no unique nearest rotation.
    pub degenerate_cubes: Vec<usize>,
}

fn require_inside(grid: &Grid, cover: &CubeCover) -> Result<()> {
    if grid.dim() != cover.dim() {
        return contract("cover and grid dimensions differ");
    }
    let d = cover.delta;
    for i in 0..cover.len() {
        let c = cover.center(i);
        for corner in 0..(1usize << cover.dim()) {
            let mut x = c;
            for (a, xa) in x.iter_mut().enumerate().take(cover.dim()) {
                *xa += if (corner >> a) & 1 == 1 { d } else { -d };
            }
            if !grid.contains_point(&x) {
                return contract(format!("doubled cube {i} leaves the grid mask"));
            }
        }
    }
    Ok(())
}

fn fit_cube(
    field: &MatrixField,
    cover: &CubeCover,
    i: usize,
    region: FitRegion,
) -> Result<(RotationMatrix, bool)> {
    let grid = field.grid();
    let c = cover.center(i);
    let reach = match region {
        FitRegion::Doubled => cover.delta,
        FitRegion::Small => 0.5 * cover.delta,
    };
    // Node index window around the cube, then the exact membership test.
    let origin = grid.origin();
    let dims = grid.dims();
    let h = grid.h();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..grid.dim() {
        lo[a] = (((c[a] - reach - origin[a]) / h).floor().max(0.0)) as usize;
        hi[a] = ((((c[a] + reach - origin[a]) / h).ceil()) as usize).min(dims[a] - 1);
    }
    let mut acc = SquareMatrix::zeros(field.m());
    let mut total = 0.0;
    for k2 in lo[2]..=hi[2] {
        for k1 in lo[1]..=hi[1] {
            for k0 in lo[0]..=hi[0] {
                let node = grid.node_at([k0, k1, k2]);
                let x = grid.position(node);
                let inside = match region {
                    FitRegion::Doubled => cover.in_doubled_cube(i, &x),
                    FitRegion::Small => cover.in_small_cube(i, &x),
                };
                let w = grid.quadrature_weight(node);
                if inside && w > 0.0 {
                    acc += &field.at(node).scale(w);
                    total += w;
                }
            }
        }
    }
    if total == 0.0 {
        return config(format!(
            "cube {i} contains no grid nodes; refine the grid or enlarge delta"
        ));
    }
    let p = project_to_rotation(&acc.scale(1.0 / total))?;
    Ok((p.rotation, p.degenerate))
}

/// Per-cube best-fit rotations over the doubled cubes and the jump total variation.
pub fn build_piecewise(field: &MatrixField, cover: &CubeCover) -> Result<PiecewiseRotation> {
    build_piecewise_with(field, cover, FitRegion::Doubled)
}

pub fn build_piecewise_with(
    field: &MatrixField,
    cover: &CubeCover,
    region: FitRegion,
) -> Result<PiecewiseRotation> {
    let n = field.m();
    if !(n == 2 || n == 3) || n != field.grid().dim() {
        return contract("build_piecewise needs a 2x2 or 3x3 field matching the grid");
    }
    require_inside(field.grid(), cover)?;
    let fits: Vec<(RotationMatrix, bool)> = (0..cover.len())
        .into_par_iter()
        .map(|i| fit_cube(field, cover, i, region))
        .collect::<Result<_>>()?;
    let degenerate_cubes = fits
        .iter()
        .enumerate()
        .filter(|(_, f)| f.1)
        .map(|(i, _)| i)
        .collect();
    let rotations: Vec<RotationMatrix> = fits.into_iter().map(|f| f.0).collect();
    let face = cover.face_area();
    let jump_tv = cover
        .neighbors
        .iter()
        .map(|&(a, b)| {
            (rotations[a].as_matrix() - rotations[b].as_matrix()).frobenius_norm() * face
        })
        .sum();
    Ok(PiecewiseRotation {
        cover: cover.clone(),
        fit_region: region,
        rotations,
        jump_tv,
        degenerate_cubes,
    })
}

/// `∫_{Ω'} |R_δ - R|` over the union of small cubes, by node quadrature.
pub fn l1_distance(pw: &PiecewiseRotation, field: &MatrixField) -> Result<f64> {
    let grid = field.grid();
    if grid.dim() != pw.cover.dim() {
        return contract("cover and grid dimensions differ");
    }
    let mut total = 0.0;
    for node in 0..grid.node_count() {
        let w = grid.quadrature_weight(node);
        if w == 0.0 {
            continue;
        }
        if let Some(i) = pw.cover.small_cube_of(&grid.position(node)) {
            total += w * (&field.at(node) - pw.rotations[i].as_matrix()).frobenius_norm();
        }
    }
    Ok(total)
}

/// Below this the curl total variation counts as zero.
pub const ZERO_TV: f64 = 1e-12;
/// Jump variation tolerated for a curl-free field.
pub const JUMP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvRow {
    pub delta: f64,
    pub jump_tv: f64,
    pub curl_tv: f64,
    pub ratio: f64,
    /// Set when both variations vanish and the ratio is reported as 0.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub zero_over_zero: bool,
}

pub const BV_CSV_HEADER: &str = "delta,jump_tv,curl_tv,ratio";

pub fn bv_rows_to_csv(rows: &[BvRow]) -> String {
    let mut s = format!("{BV_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.delta, r.jump_tv, r.curl_tv, r.ratio
        ));
    }
    s
}

/// Quadrature weight of `node` for the closed box `region`: dual cell clipped to it.
fn region_weight(grid: &Grid, region: &BoxRegion, node: usize) -> f64 {
    if !grid.in_mask(node) {
        return 0.0;
    }
    let x = grid.position(node);
    let h = grid.h();
    let mut w = 1.0;
    for a in 0..grid.dim() {
        let lo = (x[a] - 0.5 * h).max(region.lo[a]);
        let hi = (x[a] + 0.5 * h).min(region.hi[a]);
        if hi <= lo {
            return 0.0;
        }
        w *= hi - lo;
    }
    w
}

/// `∫_A |curl R|` with the finite-difference curl.
pub fn curl_total_variation(field: &MatrixField, region: &BoxRegion) -> Result<f64> {
    let grid = field.grid();
    let curl = curl_rowwise(field)?.norm_field();
    Ok((0..grid.node_count())
        .map(|n| region_weight(grid, region, n) * curl.at(n))
        .sum())
}

/// Jump variation of the piecewise approximation at each `δ`, against `∫_A |curl R|`.
///
/// `deltas` must be at least three successive halvings.
pub fn bv_ratio(field: &MatrixField, region: &BoxRegion, deltas: &[f64]) -> Result<Vec<BvRow>> {
    if deltas.len() < 3 {
        return config("bv_ratio needs at least three deltas");
    }
    if deltas
        .windows(2)
        .any(|w| ((w[0] / w[1]) - 2.0).abs() > 1e-12)
    {
        return config("bv_ratio deltas must be successive halvings");
    }
    require_rotation_field(field, "bv_ratio")?;
    let curl_tv = curl_total_variation(field, region)?;
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let cover = cube_cover(region, delta)?;
        let jump_tv = build_piecewise(field, &cover)?.jump_tv;
        let zero_curl = curl_tv <= ZERO_TV;
        if zero_curl && jump_tv > JUMP_TOL {
            return Err(Error::InvariantViolation(format!(
                "curl-free rotation field has jump variation {jump_tv:e} at delta {delta}"
            )));
        }
        rows.push(BvRow {
            delta,
            jump_tv,
            curl_tv,
            ratio: if zero_curl { 0.0 } else { jump_tv / curl_tv },
            zero_over_zero: zero_curl,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, Mask};
    use crate::smallmat::random_rotation;

    #[test]
    fn constant_field_has_no_jumps() {
        let g = make_grid(&[0.0; 2], &[1.0; 2], 1.0 / 16.0, Mask::FullBox).unwrap();
        let q = random_rotation(3, 2).unwrap();
        let f = MatrixField::constant(g, q.as_matrix());
        let cover = cube_cover(&BoxRegion::unit(2), 0.25).unwrap();
        let pw = build_piecewise(&f, &cover).unwrap();
        assert_eq!(pw.jump_tv, 0.0);
        assert!(pw
            .rotations
            .iter()
            .all(|r| (r.as_matrix() - q.as_matrix()).max_abs() < 1e-15));
        let rows = bv_ratio(&f, &BoxRegion::unit(2), &[0.25, 0.125, 0.0625]).unwrap();
        assert!(rows.iter().all(|r| r.ratio == 0.0 && r.zero_over_zero));
    }

    #[test]
    fn rejects_cover_outside_grid_and_bad_deltas() {
        let g = make_grid(&[0.0; 2], &[0.5; 2], 1.0 / 16.0, Mask::FullBox).unwrap();
        let f = MatrixField::constant(g, &SquareMatrix::identity(2));
        let cover = cube_cover(&BoxRegion::unit(2), 0.25).unwrap();
        assert!(matches!(
            build_piecewise(&f, &cover),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            bv_ratio(&f, &BoxRegion::unit(2), &[0.25, 0.1, 0.05]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn region_weights_sum_to_volume() {
        let g = make_grid(&[0.0; 2], &[1.0; 2], 1.0 / 16.0, Mask::FullBox).unwrap();
        let r = BoxRegion::new(&[0.2, 0.25], &[0.7, 1.0]).unwrap();
        let total: f64 = (0..g.node_count()).map(|n| region_weight(&g, &r, n)).sum();
        assert!((total - 0.375).abs() < 1e-14);
    }
}
