use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Region predicate selecting the in-mask nodes of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mask {
    FullBox,
    /// Open ball; a node is in the mask when it lies strictly inside, so each
    /// node's cell is included exactly when its center is.
    Ball {
        center: [f64; 3],
        radius: f64,
    },
}

/// Serializable description of a grid, as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub lengths: Vec<f64>,
    pub h: f64,
    #[serde(default = "full_box")]
    pub mask: Mask,
}

fn full_box() -> Mask {
    Mask::FullBox
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        make_grid(&self.origin, &self.lengths, self.h, self.mask)
    }
}

/// Minimum node count per axis; the one-sided boundary stencils need four
/// consecutive nodes and composed operators another layer on top.
pub const MIN_NODES_PER_AXIS: usize = 5;

/// Uniform node-centred Cartesian lattice in 2 or 3 dimensions.
///
/// Nodes sit at `origin + index * h`. Axis 0 varies fastest in the linear node
/// numbering. Fields store a value at every box node; the mask only decides
/// which nodes enter statistics and quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    origin: [f64; 3],
    h: f64,
    dims: [usize; 3],
    mask: Mask,
}

/// Builds a grid covering `origin + [0, lengths]` with spacing `h`.
///
/// The node count along an axis is `floor(length / h) + 1`, so lengths that
/// are not a multiple of `h` are truncated to the last whole cell.
pub fn make_grid(origin: &[f64], lengths: &[f64], h: f64, mask: Mask) -> Result<Grid> {
    let dim = origin.len();
    if !(dim == 2 || dim == 3) || lengths.len() != dim {
        return config(format!(
            "grid needs matching origin/lengths of dimension 2 or 3, got {} and {}",
            origin.len(),
            lengths.len()
        ));
    }
    if !(h > 0.0) || !h.is_finite() {
        return config(format!("grid spacing must be positive, got {h}"));
    }
    let mut o = [0.0; 3];
    let mut dims = [1usize; 3];
    for a in 0..dim {
        if !(lengths[a] > 0.0) || !lengths[a].is_finite() || !origin[a].is_finite() {
            return config(format!(
                "box length along axis {a} must be positive, got {}",
                lengths[a]
            ));
        }
        let cells = (lengths[a] / h + 1e-9).floor() as usize;
        if cells + 1 < MIN_NODES_PER_AXIS {
            return config(format!(
                "grid too coarse: axis {a} has {} nodes, need at least {MIN_NODES_PER_AXIS}",
                cells + 1
            ));
        }
        o[a] = origin[a];
        dims[a] = cells + 1;
    }
    if let Mask::Ball { radius, center } = mask {
        if !(radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
            return config("ball mask needs a finite center and positive radius");
        }
    }
    let grid = Grid {
        dim,
        origin: o,
        h,
        dims,
        mask,
    };
    if grid.in_mask_count() == 0 {
        return config("mask selects no grid node");
    }
    Ok(grid)
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn mask(&self) -> Mask {
        self.mask
    }

    pub fn lengths(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|a| (self.dims[a] - 1) as f64 * self.h)
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.dims[0],
            _ => self.dims[0] * self.dims[1],
        }
    }

    pub fn index_of(&self, node: usize) -> [usize; 3] {
        let i0 = node % self.dims[0];
        let rest = node / self.dims[0];
        [i0, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn node_at(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    pub fn position(&self, node: usize) -> [f64; 3] {
        let idx = self.index_of(node);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.origin[a] + idx[a] as f64 * self.h;
        }
        x
    }

    /// Whether a point lies in the closed box and inside the mask region.
    pub fn contains_point(&self, x: &[f64; 3]) -> bool {
        let slack = 1e-12 * self.h;
        for a in 0..self.dim {
            let hi = self.origin[a] + (self.dims[a] - 1) as f64 * self.h;
            if x[a] < self.origin[a] - slack || x[a] > hi + slack {
                return false;
            }
        }
        match self.mask {
            Mask::FullBox => true,
            Mask::Ball { center, radius } => self.distance_sq(x, &center) <= radius * radius,
        }
    }

    fn distance_sq(&self, x: &[f64; 3], c: &[f64; 3]) -> f64 {
        (0..self.dim).map(|a| (x[a] - c[a]).powi(2)).sum()
    }

    pub fn in_mask(&self, node: usize) -> bool {
        match self.mask {
            Mask::FullBox => true,
            Mask::Ball { center, radius } => {
                self.distance_sq(&self.position(node), &center) < radius * radius
            }
        }
    }

    pub fn in_mask_count(&self) -> usize {
        (0..self.node_count()).filter(|&n| self.in_mask(n)).count()
    }

    /// In-mask node whose axis neighbours up to `margin` steps away exist and
    /// are in the mask. `margin = 0` is plain mask membership.
    pub fn is_interior(&self, node: usize, margin: usize) -> bool {
        if !self.in_mask(node) {
            return false;
        }
        let idx = self.index_of(node);
        for a in 0..self.dim {
            if idx[a] < margin || idx[a] + margin >= self.dims[a] {
                return false;
            }
            if let Mask::Ball { .. } = self.mask {
                for s in 1..=margin {
                    let st = s * self.stride(a);
                    if !self.in_mask(node - st) || !self.in_mask(node + st) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Nodes within `margin` steps of the box or mask boundary.
    pub fn is_boundary_layer(&self, node: usize, margin: usize) -> bool {
        self.in_mask(node) && !self.is_interior(node, margin)
    }

    /// Quadrature weight: volume of the node's dual cell clipped to the box,
    /// zero outside the mask.
    pub fn quadrature_weight(&self, node: usize) -> f64 {
        if !self.in_mask(node) {
            return 0.0;
        }
        let idx = self.index_of(node);
        let mut w = 1.0;
        for a in 0..self.dim {
            let edge = idx[a] == 0 || idx[a] + 1 == self.dims[a];
            w *= if edge { 0.5 * self.h } else { self.h };
        }
        w
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Same box and mask with half the spacing.
    pub fn refined(&self) -> Grid {
        let mut g = *self;
        g.h = self.h / 2.0;
        for a in 0..self.dim {
            g.dims[a] = 2 * (self.dims[a] - 1) + 1;
        }
        g
    }

    /// Nodes selected for residual statistics.
    pub fn interior_nodes(&self, margin: usize) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&n| self.is_interior(n, margin))
            .collect()
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            origin: self.origin[..self.dim].to_vec(),
            lengths: self.lengths(),
            h: self.h,
            mask: self.mask,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn unit_square_quarter_spacing() {
        let g = make_grid(&[0.0, 0.0], &[1.0, 1.0], 0.25, Mask::FullBox).unwrap();
        assert_eq!(g.dims(), [5, 5, 1]);
        assert_eq!(g.node_count(), 25);
        assert_eq!(g.position(g.node_at([4, 2, 0])), [1.0, 0.5, 0.0]);
    }

    #[test]
    fn disk_mask_count() {
        let mask = Mask::Ball {
            center: [0.0; 3],
            radius: 1.0,
        };
        let g = make_grid(&[-1.0, -1.0], &[2.0, 2.0], 0.25, mask).unwrap();
        // Direct enumeration of lattice points strictly inside the unit circle.
        let mut expected = 0;
        for i in -4i32..=4 {
            for j in -4i32..=4 {
                if (i * i + j * j) < 16 {
                    expected += 1;
                }
            }
        }
        assert_eq!(g.in_mask_count(), expected);
        let approx = std::f64::consts::PI / 0.0625;
        assert!(((expected as f64) - approx).abs() / approx < 0.2);
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(matches!(
            make_grid(&[0.0, 0.0], &[0.0, 1.0], 0.25, Mask::FullBox),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            make_grid(&[0.0, 0.0], &[1.0, 1.0], 0.3, Mask::FullBox),
            Err(Error::Config(_))
        ));
        let far = Mask::Ball {
            center: [10.0, 10.0, 0.0],
            radius: 0.1,
        };
        assert!(matches!(
            make_grid(&[0.0, 0.0], &[1.0, 1.0], 0.1, far),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn refinement_keeps_box() {
        let g = make_grid(&[0.0, 0.0, 0.0], &[1.0, 0.5, 0.5], 0.125, Mask::FullBox).unwrap();
        let f = g.refined();
        assert_eq!(f.dims(), [17, 9, 9]);
        assert_eq!(f.lengths(), g.lengths());
    }

    #[test]
    fn trapezoid_weights_sum_to_volume() {
        let g = make_grid(&[0.0, 0.0, 0.0], &[1.0, 2.0, 0.5], 0.125, Mask::FullBox).unwrap();
        let total: f64 = (0..g.node_count()).map(|n| g.quadrature_weight(n)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
