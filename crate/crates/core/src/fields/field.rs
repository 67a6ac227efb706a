use rayon::prelude::*;

use super::Grid;
use crate::error::{contract, Result};
use crate::smallmat::SquareMatrix;

fn check_values(what: &str, expected: usize, values: &[f64]) -> Result<()> {
    if values.len() != expected {
        return contract(format!(
            "{what}: expected {expected} values, got {}",
            values.len()
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return contract(format!("{what}: non-finite value"));
    }
    Ok(())
}

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        check_values("scalar field", grid.node_count(), &values)?;
        Ok(Self { grid, values })
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let values = (0..grid.node_count())
            .into_par_iter()
            .map(|n| f(grid.position(n)))
            .collect();
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }
}

/// A `dim`-component vector per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        check_values("vector field", grid.node_count() * dim, &values)?;
        Ok(Self { grid, dim, values })
    }

    pub fn from_fn<F>(grid: Grid, dim: usize, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Vec<f64> + Sync,
    {
        let mut values = vec![0.0; grid.node_count() * dim];
        values.par_chunks_mut(dim).enumerate().for_each(|(n, out)| {
            let v = f(grid.position(n));
            out.copy_from_slice(&v[..dim]);
        });
        Self { grid, dim, values }
    }

    pub(crate) fn from_raw(grid: Grid, dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count() * dim);
        Self { grid, dim, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    pub fn component(&self, c: usize) -> ScalarField {
        let values = self.values.chunks(self.dim).map(|v| v[c]).collect();
        ScalarField::from_raw(self.grid, values)
    }
}

/// An `m x m` matrix per grid node, row-major per node.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: Grid,
    m: usize,
    values: Vec<f64>,
}

impl MatrixField {
    pub fn new(grid: Grid, m: usize, values: Vec<f64>) -> Result<Self> {
        check_values("matrix field", grid.node_count() * m * m, &values)?;
        Ok(Self { grid, m, values })
    }

    pub fn from_fn<F>(grid: Grid, m: usize, f: F) -> Self
    where
        F: Fn([f64; 3]) -> SquareMatrix + Sync,
    {
        let mut values = vec![0.0; grid.node_count() * m * m];
        values
            .par_chunks_mut(m * m)
            .enumerate()
            .for_each(|(n, out)| {
                out.copy_from_slice(f(grid.position(n)).as_slice());
            });
        Self { grid, m, values }
    }

    pub fn constant(grid: Grid, value: &SquareMatrix) -> Self {
        let m = value.dim();
        let values = value.as_slice().repeat(grid.node_count());
        Self { grid, m, values }
    }

    pub(crate) fn from_raw(grid: Grid, m: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count() * m * m);
        Self { grid, m, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Matrix size (rows = columns).
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_slice(&self, node: usize) -> &[f64] {
        let k = self.m * self.m;
        &self.values[node * k..(node + 1) * k]
    }

    pub fn at(&self, node: usize) -> SquareMatrix {
        SquareMatrix::from_slice(self.m, self.node_slice(node))
    }

    pub fn map<F>(&self, f: F) -> MatrixField
    where
        F: Fn(&SquareMatrix) -> SquareMatrix + Sync,
    {
        let k = self.m * self.m;
        let mut values = vec![0.0; self.values.len()];
        values.par_chunks_mut(k).enumerate().for_each(|(n, out)| {
            out.copy_from_slice(f(&self.at(n)).as_slice());
        });
        MatrixField::from_raw(self.grid, self.m, values)
    }

    /// `Q F(x)` at every node.
    pub fn left_multiply(&self, q: &SquareMatrix) -> Result<MatrixField> {
        if q.dim() != self.m {
            return contract("left factor has the wrong dimension");
        }
        Ok(self.map(|f| q * f))
    }

    /// Row `i` of every matrix, as a vector field.
    pub fn row_field(&self, i: usize) -> VectorField {
        let m = self.m;
        let values = self
            .values
            .chunks(m * m)
            .flat_map(|v| v[i * m..(i + 1) * m].iter().copied())
            .collect();
        VectorField::from_raw(self.grid, m, values)
    }

    /// Weighted mean over the mask.
    pub fn mean(&self) -> SquareMatrix {
        let mut acc = SquareMatrix::zeros(self.m);
        let mut total = 0.0;
        for n in 0..self.grid.node_count() {
            let w = self.grid.quadrature_weight(n);
            if w > 0.0 {
                acc += &self.at(n).scale(w);
                total += w;
            }
        }
        acc.scale(1.0 / total)
    }

    /// Multilinear interpolation at an arbitrary point of the closed box.
    pub fn interpolate(&self, x: &[f64; 3]) -> Result<SquareMatrix> {
        let k = self.m * self.m;
        let mut out = vec![0.0; k];
        for (node, w) in multilinear_stencil(&self.grid, x)?.iter().flatten() {
            for (o, v) in out.iter_mut().zip(self.node_slice(*node)) {
                *o += w * v;
            }
        }
        Ok(SquareMatrix::from_slice(self.m, &out))
    }
}

/// Corner nodes and weights of the cell containing `x`.
pub(crate) fn multilinear_stencil(grid: &Grid, x: &[f64; 3]) -> Result<[Option<(usize, f64)>; 8]> {
    let dim = grid.dim();
    let dims = grid.dims();
    let origin = grid.origin();
    let h = grid.h();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..dim {
        let t = (x[a] - origin[a]) / h;
        let cells = (dims[a] - 1) as f64;
        if !(t >= -1e-9 && t <= cells + 1e-9) {
            return contract(format!("point {x:?} lies outside the grid box"));
        }
        let c = (t.floor().max(0.0) as usize).min(dims[a] - 2);
        base[a] = c;
        frac[a] = (t - c as f64).clamp(0.0, 1.0);
    }
    let mut out = [None; 8];
    for (corner, slot) in out.iter_mut().enumerate().take(1 << dim) {
        let mut idx = base;
        let mut w = 1.0;
        for a in 0..dim {
            let bit = (corner >> a) & 1;
            idx[a] += bit;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        *slot = Some((grid.node_at(idx), w));
    }
    Ok(out)
}

/// A rank-3 tensor per node with shape `[a, b, c]`, stored with the last index fastest.
///
/// Gradients of matrix fields use the order (row p, column l, axis i) for
/// `(∂_i F)_{pl}`; generalized curls use (row q, r, s) for `∂_r F_qs - ∂_s F_qr`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdOrderField {
    grid: Grid,
    shape: [usize; 3],
    values: Vec<f64>,
}

impl ThirdOrderField {
    pub fn new(grid: Grid, shape: [usize; 3], values: Vec<f64>) -> Result<Self> {
        check_values(
            "third-order field",
            grid.node_count() * shape.iter().product::<usize>(),
            &values,
        )?;
        Ok(Self {
            grid,
            shape,
            values,
        })
    }

    pub(crate) fn from_raw(grid: Grid, shape: [usize; 3], values: Vec<f64>) -> Self {
        debug_assert_eq!(
            values.len(),
            grid.node_count() * shape.iter().product::<usize>()
        );
        Self {
            grid,
            shape,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let k: usize = self.shape.iter().product();
        &self.values[node * k..(node + 1) * k]
    }

    pub fn get(&self, node: usize, i: usize, j: usize, k: usize) -> f64 {
        let [_, b, c] = self.shape;
        self.at(node)[(i * b + j) * c + k]
    }

    /// For a gradient tensor: the matrix `∂_axis F` at a node.
    pub fn slice_last(&self, node: usize, axis: usize) -> SquareMatrix {
        let [a, b, _] = self.shape;
        debug_assert_eq!(a, b);
        let mut m = SquareMatrix::zeros(a);
        for p in 0..a {
            for l in 0..b {
                m[(p, l)] = self.get(node, p, l, axis);
            }
        }
        m
    }

    /// Largest absolute entry over the given nodes.
    pub fn max_abs_over(&self, nodes: &[usize]) -> f64 {
        nodes
            .iter()
            .flat_map(|&n| self.at(n).iter())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}
