use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::fields::{curl_rowwise, integrate_nodes, CatalogField, Grid, RowwiseCurl};
use crate::smallmat::{dist_so, SquareMatrix};

pub const SCAN_CSV_HEADER: &str = "eps,lhs_l2,dist_l2,curl_tv,quotient";

/// `y ≈ constant · x^exponent`, least squares in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub constant: f64,
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return config("power-law fit needs at least two paired samples");
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return config("power-law fit needs positive finite samples");
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return config("power-law fit needs distinct abscissae");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    Ok(PowerFit {
        exponent,
        constant: (my - exponent * mx).exp(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub eps: f64,
    /// `∫|F_ε - Id|²`
    pub lhs_l2: f64,
    /// `∫dist(F_ε, SO(2))²`
    pub dist_l2: f64,
    /// `∫|curl F_ε|`
    pub curl_tv: f64,
    /// `lhs_l2 / (dist_l2 + curl_tv²)`
    pub quotient: f64,
    /// `lhs_l2 / (dist_l2 + (∫|curl F_ε - εe₁|)²)`, absent when that denominator vanishes.
    pub naive_quotient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub lhs_fit: PowerFit,
    pub dist_fit: PowerFit,
}

impl ScanTable {
    /// Rows in `eps` order, then `#fit` footer records.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(SCAN_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.eps, r.lhs_l2, r.dist_l2, r.curl_tv, r.quotient
            );
        }
        s.push_str("#fit,column,exponent,constant\n");
        for (name, f) in [("lhs_l2", self.lhs_fit), ("dist_l2", self.dist_fit)] {
            let _ = writeln!(s, "#fit,{name},{:.16e},{:.16e}", f.exponent, f.constant);
        }
        s
    }

    /// Whether the naive quotient grows (or diverges) as `ε` decreases.
    pub fn naive_estimate_fails(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| match (w[0].naive_quotient, w[1].naive_quotient) {
                (_, None) => true,
                (None, Some(_)) => false,
                (Some(a), Some(b)) => b > a,
            })
    }
}

fn scan_row(eps: f64, grid: &Grid) -> Result<ScanRow> {
    let f = CatalogField::FEps { eps }.sample(grid)?;
    let id = SquareMatrix::identity(2);
    let lhs_l2 = integrate_nodes(grid, |n| (&f.at(n) - &id).frobenius_norm_sq());
    let dist: Vec<f64> = (0..grid.node_count())
        .map(|n| {
            if grid.in_mask(n) {
                dist_so(&f.at(n)).map(|d| d * d)
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<_>>()?;
    let dist_l2 = integrate_nodes(grid, |n| dist[n]);
    let curl = curl_rowwise(&f)?;
    let RowwiseCurl::Planar(c) = &curl else {
        unreachable!("planar field")
    };
    let curl_tv = integrate_nodes(grid, |n| c.at(n)[0].hypot(c.at(n)[1]));
    let shifted = integrate_nodes(grid, |n| (c.at(n)[0] - eps).hypot(c.at(n)[1]));
    let naive_denom = dist_l2 + shifted * shifted;
    Ok(ScanRow {
        eps,
        lhs_l2,
        dist_l2,
        curl_tv,
        quotient: lhs_l2 / (dist_l2 + curl_tv * curl_tv),
        naive_quotient: (naive_denom > 0.0).then(|| lhs_l2 / naive_denom),
    })
}

/// The `F_ε = Id + εx₁J` family on a planar grid (normally the unit disk):
/// per-`ε` integrals and log-log exponents of the first two columns.
pub fn counterexample_scan(eps_list: &[f64], grid: &Grid) -> Result<ScanTable> {
    if grid.dim() != 2 {
        return config("counterexample_scan needs a planar grid");
    }
    if eps_list.len() < 3 {
        return config("counterexample_scan needs at least three eps values");
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite()))
        || eps_list.windows(2).any(|w| w[1] >= w[0])
    {
        return config("eps values must be positive and strictly descending");
    }
    let rows: Vec<ScanRow> = eps_list
        .par_iter()
        .map(|&e| scan_row(e, grid))
        .collect::<Result<_>>()?;
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let lhs: Vec<f64> = rows.iter().map(|r| r.lhs_l2).collect();
    let dist: Vec<f64> = rows.iter().map(|r| r.dist_l2).collect();
    Ok(ScanTable {
        lhs_fit: fit_power_law(&eps, &lhs)?,
        dist_fit: fit_power_law(&eps, &dist)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_fit_recovers_monomial() {
        let xs = [0.1, 0.05, 0.025];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(2.5)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert!((f.exponent - 2.5).abs() < 1e-12 && (f.constant - 3.0).abs() < 1e-10);
    }

    #[test]
    fn scan_rejects_short_or_unsorted_lists() {
        let g = crate::fields::make_grid(
            &[-1.0, -1.0],
            &[2.0, 2.0],
            0.25,
            crate::fields::Mask::FullBox,
        )
        .unwrap();
        assert!(counterexample_scan(&[0.1, 0.05], &g).is_err());
        assert!(counterexample_scan(&[0.05, 0.1, 0.2], &g).is_err());
    }
}
