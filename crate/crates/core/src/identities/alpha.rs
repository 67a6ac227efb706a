use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::fields::{curl_rowwise, Grid, MatrixField, RowwiseCurl, VectorField};
use crate::smallmat::{ConstantCurl, SquareMatrix};

/// Where the curl `α` entering an identity comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSource {
    /// `α(x) := curl R(x)` from the finite-difference operator.
    FiniteDifference,
    /// A supplied pointwise curl (typically analytic).
    Field(RowwiseCurl),
    /// A supplied constant.
    Constant(ConstantCurl),
}

/// Serializable selector used by run configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Curl of the field at each node.
    #[default]
    Pointwise,
    /// Mean of the discrete curl over the mask.
    MeanCurl,
}

#[derive(Debug, Clone)]
pub(crate) enum ResolvedAlpha {
    Spatial(MatrixField),
    Planar(VectorField),
    ConstantSpatial(SquareMatrix),
    ConstantPlanar([f64; 2]),
}

impl AlphaSource {
    pub(crate) fn resolve(&self, field: &MatrixField) -> Result<ResolvedAlpha> {
        let dim = field.m();
        let resolved = match self {
            AlphaSource::FiniteDifference => from_curl(curl_rowwise(field)?),
            AlphaSource::Field(c) => {
                if c.grid() != field.grid() {
                    return contract("supplied curl lives on a different grid");
                }
                from_curl(c.clone())
            }
            AlphaSource::Constant(ConstantCurl::Spatial(a)) => {
                ResolvedAlpha::ConstantSpatial(a.clone())
            }
            AlphaSource::Constant(ConstantCurl::Planar(a)) => ResolvedAlpha::ConstantPlanar(*a),
        };
        let ok = match &resolved {
            ResolvedAlpha::Spatial(m) => dim == 3 && m.m() == 3,
            ResolvedAlpha::ConstantSpatial(m) => dim == 3 && m.dim() == 3,
            ResolvedAlpha::Planar(v) => dim == 2 && v.dim() == 2,
            ResolvedAlpha::ConstantPlanar(_) => dim == 2,
        };
        if !ok {
            return contract("curl shape does not match the field dimension");
        }
        Ok(resolved)
    }
}

fn from_curl(c: RowwiseCurl) -> ResolvedAlpha {
    match c {
        RowwiseCurl::Spatial(m) => ResolvedAlpha::Spatial(m),
        RowwiseCurl::Planar(v) => ResolvedAlpha::Planar(v),
    }
}

impl ResolvedAlpha {
    pub(crate) fn spatial_at(&self, node: usize) -> SquareMatrix {
        match self {
            ResolvedAlpha::Spatial(m) => m.at(node),
            ResolvedAlpha::ConstantSpatial(a) => a.clone(),
            _ => unreachable!("checked in resolve"),
        }
    }

    pub(crate) fn planar_field(&self, grid: &Grid) -> Result<VectorField> {
        match self {
            ResolvedAlpha::Planar(v) => Ok(v.clone()),
            ResolvedAlpha::ConstantPlanar(a) => Ok(VectorField::from_fn(*grid, 2, |_| a.to_vec())),
            _ => contract("planar identity needs a planar curl"),
        }
    }
}

/// Quadrature mean of the discrete rowwise curl over the mask.
pub fn mean_curl(field: &MatrixField) -> Result<ConstantCurl> {
    let grid = field.grid();
    let curl = curl_rowwise(field)?;
    let width = curl.node_slice(0).len();
    let mut acc = vec![0.0; width];
    let mut total = 0.0;
    for n in 0..grid.node_count() {
        let w = grid.quadrature_weight(n);
        if w > 0.0 {
            for (a, v) in acc.iter_mut().zip(curl.node_slice(n)) {
                *a += w * v;
            }
            total += w;
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(match curl {
        RowwiseCurl::Planar(_) => ConstantCurl::Planar([acc[0], acc[1]]),
        RowwiseCurl::Spatial(_) => ConstantCurl::Spatial(SquareMatrix::from_row_major(3, &acc)?),
    })
}
