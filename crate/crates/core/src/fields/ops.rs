//! Finite-difference operators on node-centred grids.
//!
//! First derivatives use central differences `(f₊ - f₋)/2h` at interior nodes
//! and the second-order one-sided stencils `∓(3f₀ - 4f₁ + f₂)/2h` on the box
//! faces. Second derivatives use `(f₋ - 2f₀ + f₊)/h²` and the one-sided
//! `(2f₀ - 5f₁ + 4f₂ - f₃)/h²`. All stencils are second order.

use rayon::prelude::*;

use super::{Grid, MatrixField, ScalarField, ThirdOrderField, VectorField};
use crate::error::{contract, Result};
use crate::smallmat::eps3;

/// Up to four `(offset, weight)` taps along one axis, weights already divided by `h` or `h²`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    taps: [(isize, f64); 4],
    len: usize,
}

impl Stencil {
    fn new(taps: &[(isize, f64)], scale: f64) -> Self {
        let mut t = [(0, 0.0); 4];
        for (slot, &(o, w)) in t.iter_mut().zip(taps) {
            *slot = (o, w * scale);
        }
        Self {
            taps: t,
            len: taps.len(),
        }
    }

    pub(crate) fn taps(&self) -> &[(isize, f64)] {
        &self.taps[..self.len]
    }
}

pub(crate) fn first_derivative_stencil(count: usize, i: usize, h: f64) -> Stencil {
    let s = 1.0 / h;
    if i == 0 {
        Stencil::new(&[(0, -1.5), (1, 2.0), (2, -0.5)], s)
    } else if i + 1 == count {
        Stencil::new(&[(-2, 0.5), (-1, -2.0), (0, 1.5)], s)
    } else {
        Stencil::new(&[(-1, -0.5), (1, 0.5)], s)
    }
}

pub(crate) fn second_derivative_stencil(count: usize, i: usize, h: f64) -> Stencil {
    let s = 1.0 / (h * h);
    if i == 0 {
        Stencil::new(&[(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)], s)
    } else if i + 1 == count {
        Stencil::new(&[(-3, -1.0), (-2, 4.0), (-1, -5.0), (0, 2.0)], s)
    } else {
        Stencil::new(&[(-1, 1.0), (0, -2.0), (1, 1.0)], s)
    }
}

/// Gradient of `ncomp` interleaved components; output layout `[node][comp][axis]`.
pub(crate) fn component_gradient(grid: &Grid, ncomp: usize, values: &[f64]) -> Vec<f64> {
    let n = grid.dim();
    let dims = grid.dims();
    let h = grid.h();
    let mut out = vec![0.0; grid.node_count() * ncomp * n];
    out.par_chunks_mut(ncomp * n)
        .enumerate()
        .for_each(|(node, chunk)| {
            let idx = grid.index_of(node);
            for axis in 0..n {
                let stride = grid.stride(axis) as isize;
                let st = first_derivative_stencil(dims[axis], idx[axis], h);
                for &(off, w) in st.taps() {
                    let nb = (node as isize + off * stride) as usize;
                    let src = &values[nb * ncomp..(nb + 1) * ncomp];
                    for c in 0..ncomp {
                        chunk[c * n + axis] += w * src[c];
                    }
                }
            }
        });
    out
}

/// Laplacian of `ncomp` interleaved components; output layout `[node][comp]`.
pub(crate) fn component_laplacian(grid: &Grid, ncomp: usize, values: &[f64]) -> Vec<f64> {
    let n = grid.dim();
    let dims = grid.dims();
    let h = grid.h();
    let mut out = vec![0.0; grid.node_count() * ncomp];
    out.par_chunks_mut(ncomp)
        .enumerate()
        .for_each(|(node, chunk)| {
            let idx = grid.index_of(node);
            for axis in 0..n {
                let stride = grid.stride(axis) as isize;
                let st = second_derivative_stencil(dims[axis], idx[axis], h);
                for &(off, w) in st.taps() {
                    let nb = (node as isize + off * stride) as usize;
                    let src = &values[nb * ncomp..(nb + 1) * ncomp];
                    for c in 0..ncomp {
                        chunk[c] += w * src[c];
                    }
                }
            }
        });
    out
}

/// `∇F` with index order (row p, column l, axis i) holding `(∂_i F)_{pl}`.
pub fn fd_gradient(field: &MatrixField) -> ThirdOrderField {
    let grid = *field.grid();
    let m = field.m();
    let values = component_gradient(&grid, m * m, field.values());
    ThirdOrderField::from_raw(grid, [m, m, grid.dim()], values)
}

/// `∇f` of a scalar field.
pub fn scalar_gradient(field: &ScalarField) -> VectorField {
    let grid = *field.grid();
    let values = component_gradient(&grid, 1, field.values());
    VectorField::from_raw(grid, grid.dim(), values)
}

/// `(∇v)_{ij} = ∂_j v_i`; requires as many components as axes.
pub fn vector_gradient(field: &VectorField) -> Result<MatrixField> {
    let grid = *field.grid();
    if field.dim() != grid.dim() {
        return contract("vector gradient needs as many components as grid axes");
    }
    let values = component_gradient(&grid, field.dim(), field.values());
    Ok(MatrixField::from_raw(grid, field.dim(), values))
}

fn require_square_on_grid(field: &MatrixField, what: &str) -> Result<()> {
    if field.m() != field.grid().dim() {
        return contract(format!(
            "{what} needs matrix dimension {} to equal grid dimension {}",
            field.m(),
            field.grid().dim()
        ));
    }
    Ok(())
}

/// Rowwise divergence: component `i` is `Σ_k ∂_k F_ik`.
pub fn div_rowwise(field: &MatrixField) -> Result<VectorField> {
    require_square_on_grid(field, "div_rowwise")?;
    let grad = fd_gradient(field);
    let m = field.m();
    let grid = *field.grid();
    let mut values = vec![0.0; grid.node_count() * m];
    values
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(node, out)| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = (0..m).map(|k| grad.get(node, i, k, k)).sum();
            }
        });
    Ok(VectorField::from_raw(grid, m, values))
}

/// Divergence of a vector field with as many components as axes.
pub fn vector_div(field: &VectorField) -> Result<ScalarField> {
    let grad = vector_gradient(field)?;
    let n = field.dim();
    let values = (0..field.grid().node_count())
        .map(|node| {
            let g = grad.node_slice(node);
            (0..n).map(|k| g[k * n + k]).sum()
        })
        .collect();
    Ok(ScalarField::from_raw(*field.grid(), values))
}

/// Curl of a 3D vector field, `curl(v)_a = ε_ajk ∂_j v_k`.
pub fn vector_curl(field: &VectorField) -> Result<VectorField> {
    if field.grid().dim() != 3 || field.dim() != 3 {
        return contract("vector curl is defined for 3-component fields on 3D grids");
    }
    let grad = vector_gradient(field)?;
    let values = (0..field.grid().node_count())
        .flat_map(|node| {
            let g = grad.node_slice(node);
            // g[k*3 + j] = ∂_j v_k
            (0..3).map(move |a| {
                let mut s = 0.0;
                for j in 0..3 {
                    for k in 0..3 {
                        s += eps3(a, j, k) * g[k * 3 + j];
                    }
                }
                s
            })
        })
        .collect();
    Ok(VectorField::from_raw(*field.grid(), 3, values))
}

/// Rowwise curl. Planar fields give one scalar per row; spatial fields a matrix
/// whose row `i` is the curl of row `i`.
#[derive(Debug, Clone, PartialEq)]
pub enum RowwiseCurl {
    Planar(VectorField),
    Spatial(MatrixField),
}

impl RowwiseCurl {
    pub fn grid(&self) -> &Grid {
        match self {
            RowwiseCurl::Planar(v) => v.grid(),
            RowwiseCurl::Spatial(m) => m.grid(),
        }
    }

    /// Per-node entries (2 for planar, 9 for spatial).
    pub fn node_slice(&self, node: usize) -> &[f64] {
        match self {
            RowwiseCurl::Planar(v) => v.at(node),
            RowwiseCurl::Spatial(m) => m.node_slice(node),
        }
    }

    /// Pointwise Euclidean (Frobenius) norm as a scalar field.
    pub fn norm_field(&self) -> ScalarField {
        let grid = *self.grid();
        let values = (0..grid.node_count())
            .map(|n| self.node_slice(n).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        ScalarField::from_raw(grid, values)
    }

    pub fn as_spatial(&self) -> Option<&MatrixField> {
        match self {
            RowwiseCurl::Spatial(m) => Some(m),
            RowwiseCurl::Planar(_) => None,
        }
    }

    pub fn as_planar(&self) -> Option<&VectorField> {
        match self {
            RowwiseCurl::Planar(v) => Some(v),
            RowwiseCurl::Spatial(_) => None,
        }
    }
}

pub fn curl_rowwise(field: &MatrixField) -> Result<RowwiseCurl> {
    require_square_on_grid(field, "curl_rowwise")?;
    let grad = fd_gradient(field);
    Ok(rowwise_curl_from_gradient(&grad))
}

/// Rowwise curl assembled from a gradient tensor `(∂_i F)_{pl}`.
pub fn rowwise_curl_from_gradient(grad: &ThirdOrderField) -> RowwiseCurl {
    let grid = *grad.grid();
    let m = grad.shape()[0];
    match grid.dim() {
        2 => {
            let values = (0..grid.node_count())
                .flat_map(|node| {
                    let g = &grad;
                    (0..m).map(move |i| g.get(node, i, 1, 0) - g.get(node, i, 0, 1))
                })
                .collect();
            RowwiseCurl::Planar(VectorField::from_raw(grid, m, values))
        }
        _ => {
            let mut values = vec![0.0; grid.node_count() * m * 3];
            values
                .par_chunks_mut(m * 3)
                .enumerate()
                .for_each(|(node, out)| {
                    for i in 0..m {
                        for a in 0..3 {
                            let mut s = 0.0;
                            for j in 0..3 {
                                for k in 0..3 {
                                    let e = eps3(a, j, k);
                                    if e != 0.0 {
                                        s += e * grad.get(node, i, k, j);
                                    }
                                }
                            }
                            out[i * 3 + a] = s;
                        }
                    }
                });
            RowwiseCurl::Spatial(MatrixField::from_raw(grid, m, values))
        }
    }
}

/// Generalized curl `Curl(F)_{qrs} = ∂_r F_qs - ∂_s F_qr`, for any grid dimension.
pub fn curl_general(field: &MatrixField) -> Result<ThirdOrderField> {
    require_square_on_grid(field, "curl_general")?;
    Ok(curl_general_from_gradient(&fd_gradient(field)))
}

pub fn curl_general_from_gradient(grad: &ThirdOrderField) -> ThirdOrderField {
    let grid = *grad.grid();
    let [m, _, n] = grad.shape();
    let k = m * n * n;
    let mut values = vec![0.0; grid.node_count() * k];
    values
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(node, out)| {
            for q in 0..m {
                for r in 0..n {
                    for s in 0..n {
                        out[(q * n + r) * n + s] =
                            grad.get(node, q, s, r) - grad.get(node, q, r, s);
                    }
                }
            }
        });
    ThirdOrderField::from_raw(grid, [m, n, n], values)
}

/// Componentwise Laplacian for every field shape.
pub trait Laplacian: Sized {
    fn laplacian(&self) -> Self;
}

impl Laplacian for ScalarField {
    fn laplacian(&self) -> Self {
        ScalarField::from_raw(
            *self.grid(),
            component_laplacian(self.grid(), 1, self.values()),
        )
    }
}

impl Laplacian for VectorField {
    fn laplacian(&self) -> Self {
        VectorField::from_raw(
            *self.grid(),
            self.dim(),
            component_laplacian(self.grid(), self.dim(), self.values()),
        )
    }
}

impl Laplacian for MatrixField {
    fn laplacian(&self) -> Self {
        let m = self.m();
        MatrixField::from_raw(
            *self.grid(),
            m,
            component_laplacian(self.grid(), m * m, self.values()),
        )
    }
}

pub fn laplacian<F: Laplacian>(field: &F) -> F {
    field.laplacian()
}

/// Cell-volume weighted sum over in-mask nodes.
pub fn integrate(field: &ScalarField) -> f64 {
    integrate_nodes(field.grid(), |n| field.at(n))
}

/// Quadrature of a node function; summation runs in node order.
pub fn integrate_nodes<F: Fn(usize) -> f64>(grid: &Grid, f: F) -> f64 {
    let mut total = 0.0;
    for n in 0..grid.node_count() {
        let w = grid.quadrature_weight(n);
        if w > 0.0 {
            total += w * f(n);
        }
    }
    total
}
