//! Rigidity diagnostics: best constant rotation, the rigidity quotient,
//! circulation and flux on disks, the disk certificate and the `F_ε` scan.

mod scan;
mod search;
mod stokes;

use serde::{Deserialize, Serialize};

pub use scan::{counterexample_scan, fit_power_law, PowerFit, ScanRow, ScanTable, SCAN_CSV_HEADER};
pub use search::{certificate_search, SearchConfig, SearchOutcome, SearchReport};
pub use stokes::{circulation, disk_flux, flux_and_certificate, Certificate, DiskSpec};

use crate::error::{contract, Error, Result};
use crate::fields::{curl_rowwise, integrate_nodes, MatrixField};
use crate::smallmat::{dist_so, project_to_rotation, Projection, RotationMatrix};

/// Terms below this are treated as zero when forming the quotient.
pub const QUOTIENT_FLOOR: f64 = 1e-20;

fn require_small(field: &MatrixField, what: &str) -> Result<()> {
    let n = field.m();
    if !(n == 2 || n == 3) || n != field.grid().dim() {
        return contract(format!("{what} needs a 2x2 or 3x3 field matching the grid"));
    }
    Ok(())
}

/// Minimiser of `∫|F - R|²` over constant rotations: the projection of the mean.
///
/// `∫|F - R|² = ∫|F|² + n|Ω| - 2⟨∫F, R⟩`, so only the mean matters.
pub fn best_fit_rotation(field: &MatrixField) -> Result<Projection> {
    require_small(field, "best_fit_rotation")?;
    project_to_rotation(&field.mean())
}

/// `∫|F - Q|²` over the mask.
pub fn fit_objective(field: &MatrixField, q: &RotationMatrix) -> f64 {
    let q = q.as_matrix();
    integrate_nodes(field.grid(), |n| (&field.at(n) - q).frobenius_norm_sq())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub best_rotation: RotationMatrix,
    /// `∫|F - R|²`
    pub lhs: f64,
    /// `∫dist(F, SO(n))²`
    pub dist_term: f64,
    /// `(∫|curl F|)²`
    pub curl_term: f64,
    pub quotient: f64,
    /// The mean of `F` had no unique nearest rotation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate_fit: bool,
}

/// `∫|F - R|² / (∫dist(F, SO(n))² + (∫|curl F|)²)` with `R` the best fit.
///
/// Any admissible constant in the rigidity estimate is at least this
/// quotient. Both numerator and denominator below [`QUOTIENT_FLOOR`] give 0.
pub fn rigidity_quotient(field: &MatrixField) -> Result<RigidityReport> {
    require_small(field, "rigidity_quotient")?;
    let fit = best_fit_rotation(field)?;
    let grid = field.grid();
    let lhs = fit_objective(field, &fit.rotation);
    let dist: Vec<f64> = (0..grid.node_count())
        .map(|n| {
            if grid.in_mask(n) {
                dist_so(&field.at(n)).map(|d| d * d)
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<_>>()?;
    let dist_term = integrate_nodes(grid, |n| dist[n]);
    let curl = curl_rowwise(field)?.norm_field();
    let tv = integrate_nodes(grid, |n| curl.at(n));
    let curl_term = tv * tv;
    let denom = dist_term + curl_term;
    let quotient = if denom > QUOTIENT_FLOOR {
        lhs / denom
    } else if lhs <= QUOTIENT_FLOOR {
        0.0
    } else {
        return Err(Error::Infeasible(format!(
            "rigidity quotient has numerator {lhs:e} over a vanishing denominator"
        )));
    };
    Ok(RigidityReport {
        best_rotation: fit.rotation,
        lhs,
        dist_term,
        curl_term,
        quotient,
        degenerate_fit: fit.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, CatalogField, Mask};
    use crate::smallmat::{random_rotation, SquareMatrix};

    #[test]
    fn constant_field_fits_itself() {
        let g = make_grid(&[0.0; 3], &[1.0; 3], 0.25, Mask::FullBox).unwrap();
        let q = random_rotation(4, 3).unwrap();
        let f = MatrixField::constant(g, q.as_matrix());
        let fit = best_fit_rotation(&f).unwrap();
        assert!((fit.rotation.as_matrix() - q.as_matrix()).max_abs() < 1e-14);
        let r = rigidity_quotient(&f).unwrap();
        assert_eq!(r.quotient, 0.0);
    }

    #[test]
    fn f_eps_fit_is_identity() {
        let g = make_grid(
            &[-1.0, -1.0],
            &[2.0, 2.0],
            1.0 / 32.0,
            Mask::Ball {
                center: [0.0; 3],
                radius: 1.0,
            },
        )
        .unwrap();
        let f = CatalogField::FEps { eps: 0.2 }.sample(&g).unwrap();
        let fit = best_fit_rotation(&f).unwrap();
        assert!((fit.rotation.as_matrix() - &SquareMatrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn rejects_mismatched_dimension() {
        let g = make_grid(&[0.0; 3], &[1.0; 3], 0.25, Mask::FullBox).unwrap();
        let f = MatrixField::constant(g, &SquareMatrix::identity(2));
        assert!(matches!(rigidity_quotient(&f), Err(Error::Contract(_))));
    }
}
