//! `∂ᵢR` from `R` and its curl, without differentiating `R`.
//!
//! Skew-symmetry of `Rᵀ∂ᵢR` gives, for any `n`,
//!
//! ```text
//! 2 (∂ᵢR)_pl = Curl_pil + R_pk R_mi Curl_mkl + R_pk R_ml Curl_mki
//! ```
//!
//! with `Curl_qrs = ∂_r R_qs - ∂_s R_qr`. In 3D, `Curl_qrs = ε_nrs curl_qn` turns this into
//!
//! ```text
//! 2 (∂ᵢR)_pl = ε_nil curl_pn + ε_nkl R_pk (Rᵀcurl)_in + ε_nki R_pk (Rᵀcurl)_ln.
//! ```

use rayon::prelude::*;

use super::differential::require_rotation_field;
use crate::error::{contract, Result};
use crate::fields::{MatrixField, RowwiseCurl, ThirdOrderField};
use crate::smallmat::eps3;

/// Curl data accepted by [`reconstruct_gradient`].
#[derive(Debug, Clone, Copy)]
pub enum CurlInput<'a> {
    Rowwise(&'a RowwiseCurl),
    General(&'a ThirdOrderField),
}

/// Generalized curl tensor `(q, r, s)` equivalent to a rowwise curl.
pub fn rowwise_to_general(curl: &RowwiseCurl) -> ThirdOrderField {
    let grid = *curl.grid();
    match curl {
        RowwiseCurl::Planar(v) => {
            let m = v.dim();
            let values = (0..grid.node_count())
                .flat_map(|node| {
                    let c = v.at(node).to_vec();
                    (0..m).flat_map(move |q| [0.0, c[q], -c[q], 0.0])
                })
                .collect();
            ThirdOrderField::new(grid, [m, 2, 2], values).expect("finite curl")
        }
        RowwiseCurl::Spatial(f) => {
            let m = f.m();
            let mut values = vec![0.0; grid.node_count() * m * 9];
            values
                .par_chunks_mut(m * 9)
                .enumerate()
                .for_each(|(node, out)| {
                    let c = f.node_slice(node);
                    for q in 0..m {
                        for r in 0..3 {
                            for s in 0..3 {
                                out[(q * 3 + r) * 3 + s] =
                                    (0..3).map(|n| eps3(n, r, s) * c[q * 3 + n]).sum();
                            }
                        }
                    }
                });
            ThirdOrderField::new(grid, [m, 3, 3], values).expect("finite curl")
        }
    }
}

fn check_shapes(field: &MatrixField, n_curl: usize, shape_ok: bool) -> Result<()> {
    if !shape_ok || n_curl != field.m() || field.m() != field.grid().dim() {
        return contract("curl input does not match the field dimensions");
    }
    Ok(())
}

/// Closed-form `(∂ᵢR)_{pl}` at every node; layout (row p, column l, axis i).
/// Spatial rowwise curls use the 3D form, everything else the general form.
pub fn reconstruct_gradient(field: &MatrixField, curl: CurlInput<'_>) -> Result<ThirdOrderField> {
    require_rotation_field(field, "reconstruct_gradient")?;
    match curl {
        CurlInput::Rowwise(RowwiseCurl::Spatial(c)) => {
            check_shapes(field, c.m(), field.m() == 3 && c.grid() == field.grid())?;
            Ok(reconstruct_3d(field, c))
        }
        CurlInput::Rowwise(planar @ RowwiseCurl::Planar(_)) => {
            let general = rowwise_to_general(planar);
            reconstruct_general_checked(field, &general)
        }
        CurlInput::General(g) => reconstruct_general_checked(field, g),
    }
}

/// The general-`n` route, also for 3D inputs (used to cross-check the 3D form).
pub fn reconstruct_gradient_general(
    field: &MatrixField,
    curl: &ThirdOrderField,
) -> Result<ThirdOrderField> {
    require_rotation_field(field, "reconstruct_gradient_general")?;
    reconstruct_general_checked(field, curl)
}

fn reconstruct_general_checked(
    field: &MatrixField,
    curl: &ThirdOrderField,
) -> Result<ThirdOrderField> {
    let [m, r, s] = curl.shape();
    check_shapes(field, m, r == m && s == m && curl.grid() == field.grid())?;
    Ok(reconstruct_general(field, curl))
}

fn reconstruct_general(field: &MatrixField, curl: &ThirdOrderField) -> ThirdOrderField {
    let grid = *field.grid();
    let n = field.m();
    let k3 = n * n * n;
    let mut values = vec![0.0; grid.node_count() * k3];
    values
        .par_chunks_mut(k3)
        .enumerate()
        .for_each(|(node, out)| {
            let r = field.node_slice(node);
            let c = |q: usize, a: usize, b: usize| curl.get(node, q, a, b);
            // pt[i][k][l] = Σ_m R_mi Curl_mkl
            let mut pt = vec![0.0; k3];
            for i in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        pt[(i * n + k) * n + l] = (0..n).map(|m| r[m * n + i] * c(m, k, l)).sum();
                    }
                }
            }
            for p in 0..n {
                for l in 0..n {
                    for i in 0..n {
                        let mut v = c(p, i, l);
                        for k in 0..n {
                            v += r[p * n + k] * (pt[(i * n + k) * n + l] + pt[(l * n + k) * n + i]);
                        }
                        out[(p * n + l) * n + i] = 0.5 * v;
                    }
                }
            }
        });
    ThirdOrderField::from_raw(grid, [n, n, n], values)
}

fn reconstruct_3d(field: &MatrixField, curl: &MatrixField) -> ThirdOrderField {
    let grid = *field.grid();
    let mut values = vec![0.0; grid.node_count() * 27];
    values
        .par_chunks_mut(27)
        .enumerate()
        .for_each(|(node, out)| {
            let r = field.at(node);
            let c = curl.at(node);
            let rtc = &r.transpose() * &c;
            for p in 0..3 {
                for l in 0..3 {
                    for i in 0..3 {
                        let mut v = 0.0;
                        for n in 0..3 {
                            v += eps3(n, i, l) * c[(p, n)];
                            for k in 0..3 {
                                v += eps3(n, k, l) * r[(p, k)] * rtc[(i, n)];
                                v += eps3(n, k, i) * r[(p, k)] * rtc[(l, n)];
                            }
                        }
                        out[(p * 3 + l) * 3 + i] = 0.5 * v;
                    }
                }
            }
        });
    ThirdOrderField::from_raw(grid, [3, 3, 3], values)
}

/// Largest `|sym(Rᵀ∂ᵢR)|` entry of a gradient tensor over the in-mask nodes.
pub fn gradient_skewness_defect(field: &MatrixField, grad: &ThirdOrderField) -> f64 {
    let grid = field.grid();
    let n = field.m();
    (0..grid.node_count())
        .filter(|&node| grid.in_mask(node))
        .map(|node| {
            let rt = field.at(node).transpose();
            (0..n)
                .map(|i| (&rt * &grad.slice_last(node, i)).sym().max_abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `max|∇R| / max|Curl R|` (entrywise maxima) over `nodes`; 0 when both vanish.
pub fn gradient_curl_constant(
    grad: &ThirdOrderField,
    curl: &ThirdOrderField,
    nodes: &[usize],
) -> f64 {
    let g = grad.max_abs_over(nodes);
    let c = curl.max_abs_over(nodes);
    if c == 0.0 {
        if g == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        g / c
    }
}
