//! Projected gradient descent for a rotation field with a prescribed constant
//! curl. A diagnostic for the disk certificate: when the certificate holds,
//! the residual should stay away from zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Result};
use crate::fields::{curl_rowwise, first_derivative_stencil, CatalogField, Grid, MatrixField};
use crate::smallmat::{eps3, project_to_rotation, SquareMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Starting fields are the smooth random fields with seeds `first_seed..first_seed + seeds`.
    pub first_seed: u64,
    pub seeds: u64,
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the energy by less than this fraction.
    pub relative_tolerance: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            first_seed: 0,
            seeds: 20,
            max_iterations: 400,
            relative_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub seed: u64,
    pub iterations: usize,
    /// Root-mean-square of `|curl R - α|` over the mask, before and after.
    pub initial_rms: f64,
    pub final_rms: f64,
    /// Largest pointwise `|curl R - α|` at the end.
    pub final_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub outcomes: Vec<SearchOutcome>,
    pub best_rms: f64,
    pub best_max: f64,
}

struct Residual {
    /// `curl R - α`, 9 entries per node, zero outside the mask.
    values: Vec<f64>,
    energy: f64,
    max: f64,
}

fn residual(field: &MatrixField, alpha: &SquareMatrix, count: usize) -> Result<Residual> {
    let grid = field.grid();
    let curl = curl_rowwise(field)?;
    let mut values = vec![0.0; grid.node_count() * 9];
    let mut energy = 0.0;
    let mut max = 0.0_f64;
    for n in 0..grid.node_count() {
        if !grid.in_mask(n) {
            continue;
        }
        let c = curl.node_slice(n);
        let mut sq = 0.0;
        for e in 0..9 {
            let r = c[e] - alpha.as_slice()[e];
            values[n * 9 + e] = r;
            sq += r * r;
        }
        energy += sq;
        max = max.max(sq.sqrt());
    }
    Ok(Residual {
        values,
        energy: energy / count as f64,
        max,
    })
}

/// `∇E` for `E = mean |curl R - α|²`: the adjoint of the discrete curl applied to the residual.
fn gradient(grid: &Grid, res: &[f64], count: usize) -> Vec<f64> {
    let dims = grid.dims();
    let h = grid.h();
    let scale = 2.0 / count as f64;
    let mut g = vec![0.0; grid.node_count() * 9];
    for node in 0..grid.node_count() {
        let r = &res[node * 9..node * 9 + 9];
        if r.iter().all(|v| *v == 0.0) {
            continue;
        }
        let idx = grid.index_of(node);
        for j in 0..3 {
            let stride = grid.stride(j) as isize;
            let st = first_derivative_stencil(dims[j], idx[j], h);
            for &(off, w) in st.taps() {
                let nb = (node as isize + off * stride) as usize;
                for i in 0..3 {
                    for a in 0..3 {
                        for k in 0..3 {
                            let e = eps3(a, j, k);
                            if e != 0.0 {
                                g[nb * 9 + i * 3 + k] += scale * e * w * r[i * 3 + a];
                            }
                        }
                    }
                }
            }
        }
    }
    g
}

fn project_step(field: &MatrixField, grad: &[f64], step: f64) -> Result<MatrixField> {
    let grid = *field.grid();
    let mut values = vec![0.0; field.values().len()];
    for (n, out) in values.chunks_mut(9).enumerate() {
        let src = field.node_slice(n);
        let moved: Vec<f64> = (0..9).map(|e| src[e] - step * grad[n * 9 + e]).collect();
        let p = project_to_rotation(&SquareMatrix::from_row_major(3, &moved)?)?;
        out.copy_from_slice(p.rotation.as_matrix().as_slice());
    }
    MatrixField::new(grid, 3, values)
}

fn descend(
    alpha: &SquareMatrix,
    grid: &Grid,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    let count = grid.in_mask_count();
    let mut field = CatalogField::RandomSmooth { seed, dim: 3 }.sample(grid)?;
    let mut res = residual(&field, alpha, count)?;
    let initial_rms = res.energy.sqrt();
    let mut step = count as f64 * grid.h().powi(2) / 16.0;
    let mut iterations = 0;
    while iterations < cfg.max_iterations && res.energy > 0.0 {
        iterations += 1;
        let grad = gradient(grid, &res.values, count);
        let mut accepted = None;
        for _ in 0..40 {
            let trial = project_step(&field, &grad, step)?;
            let tr = residual(&trial, alpha, count)?;
            if tr.energy < res.energy {
                accepted = Some((trial, tr));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, tr)) = accepted else { break };
        let gain = (res.energy - tr.energy) / res.energy;
        field = trial;
        res = tr;
        step *= 1.5;
        if gain < cfg.relative_tolerance {
            break;
        }
    }
    Ok(SearchOutcome {
        seed,
        iterations,
        initial_rms,
        final_rms: res.energy.sqrt(),
        final_max: res.max,
    })
}

/// Searches for a rotation field on `grid` whose discrete curl equals `alpha`,
/// from `cfg.seeds` smooth random starts; reports the residual reached by each.
pub fn certificate_search(
    alpha: &SquareMatrix,
    grid: &Grid,
    cfg: &SearchConfig,
) -> Result<SearchReport> {
    if alpha.dim() != 3 || grid.dim() != 3 {
        return contract("certificate_search works with 3x3 curls on 3D grids");
    }
    if cfg.seeds == 0 || cfg.max_iterations == 0 || !(cfg.relative_tolerance >= 0.0) {
        return config("search needs at least one seed and one iteration");
    }
    let outcomes: Vec<SearchOutcome> = (cfg.first_seed..cfg.first_seed + cfg.seeds)
        .into_par_iter()
        .map(|s| descend(alpha, grid, s, cfg))
        .collect::<Result<_>>()?;
    let best_rms = outcomes
        .iter()
        .map(|o| o.final_rms)
        .fold(f64::INFINITY, f64::min);
    let best_max = outcomes
        .iter()
        .map(|o| o.final_max)
        .fold(f64::INFINITY, f64::min);
    Ok(SearchReport {
        outcomes,
        best_rms,
        best_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, Mask};

    #[test]
    fn gradient_matches_difference_quotient() {
        let g = make_grid(&[0.0; 3], &[1.0; 3], 0.25, Mask::FullBox).unwrap();
        let alpha = SquareMatrix::diag(&[0.3, -0.2, 0.5]);
        let f = CatalogField::RandomSmooth { seed: 2, dim: 3 }
            .sample(&g)
            .unwrap();
        let count = g.in_mask_count();
        let res = residual(&f, &alpha, count).unwrap();
        let grad = gradient(&g, &res.values, count);
        for probe in [0usize, 9 * 7 + 4, 9 * 62 + 8, f.values().len() - 1] {
            let t = 1e-6;
            let mut v = f.values().to_vec();
            v[probe] += t;
            let plus = residual(&MatrixField::new(g, 3, v.clone()).unwrap(), &alpha, count)
                .unwrap()
                .energy;
            v[probe] -= 2.0 * t;
            let minus = residual(&MatrixField::new(g, 3, v).unwrap(), &alpha, count)
                .unwrap()
                .energy;
            let fd = (plus - minus) / (2.0 * t);
            assert!(
                (fd - grad[probe]).abs() < 1e-6 * (1.0 + fd.abs()),
                "{fd} vs {}",
                grad[probe]
            );
        }
    }

    #[test]
    fn zero_curl_is_reachable() {
        let g = make_grid(&[0.0; 3], &[1.0; 3], 0.2, Mask::FullBox).unwrap();
        let cfg = SearchConfig {
            first_seed: 0,
            seeds: 2,
            max_iterations: 300,
            relative_tolerance: 0.0,
        };
        let r = certificate_search(&SquareMatrix::zeros(3), &g, &cfg).unwrap();
        assert!(r.best_rms < 0.05 * r.outcomes[0].initial_rms, "{r:?}");
    }
}
