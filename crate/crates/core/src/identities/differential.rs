use super::alpha::AlphaSource;
use crate::error::{contract, Result};
use crate::fields::{
    div_rowwise, fd_gradient, scalar_gradient, vector_curl, vector_div, vector_gradient, Laplacian,
    MatrixField, ResidualReport, SampleNodes, ScalarField, ThirdOrderField, VectorField,
};
use crate::smallmat::{eps3, ConstantCurl, RotationMatrix, SquareMatrix, ORTHOGONALITY_TOL};

fn require_3d(field: &MatrixField, what: &str) -> Result<()> {
    if field.m() != 3 || field.grid().dim() != 3 {
        return contract(format!("{what} needs a 3x3 field on a 3D grid"));
    }
    Ok(())
}

/// `(∇Rᵢ)_{jk} = ∂_k R_ij` from a gradient tensor.
pub(crate) fn row_gradient(grad: &ThirdOrderField, node: usize, i: usize) -> SquareMatrix {
    let n = grad.shape()[1];
    let mut m = SquareMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            m[(j, k)] = grad.get(node, i, j, k);
        }
    }
    m
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest orthogonality defect over in-mask nodes.
pub fn max_rotation_defect(field: &MatrixField) -> f64 {
    let grid = field.grid();
    (0..grid.node_count())
        .filter(|&n| grid.in_mask(n))
        .map(|n| {
            let m = field.at(n);
            let det = (m.determinant() - 1.0).abs();
            m.orthogonality_defect().max(det)
        })
        .fold(0.0, f64::max)
}

pub(crate) fn require_rotation_field(field: &MatrixField, what: &str) -> Result<()> {
    let grid = field.grid();
    for n in (0..grid.node_count()).filter(|&n| grid.in_mask(n)) {
        if let Err(e) = RotationMatrix::validate(&field.at(n)) {
            return contract(format!("{what}: node {n} is not a rotation ({e})"));
        }
    }
    Ok(())
}

/// `curl curl v = -Δv + ∇ div v` for a 3D vector field.
pub fn check_curlcurl(v: &VectorField) -> Result<ResidualReport> {
    check_curlcurl_over(v, &SampleNodes::interior(v.grid()))
}

pub(crate) fn check_curlcurl_over(v: &VectorField, nodes: &SampleNodes) -> Result<ResidualReport> {
    let cc = vector_curl(&vector_curl(v)?)?;
    let lap = v.laplacian();
    let gdiv = scalar_gradient(&vector_div(v)?);
    Ok(ResidualReport::over("curlcurl", v.grid(), nodes, |n| {
        let (a, l, g) = (cc.at(n), lap.at(n), gdiv.at(n));
        vec_norm(&[a[0] + l[0] - g[0], a[1] + l[1] - g[1], a[2] + l[2] - g[2]])
    }))
}

/// `div Rᵢ = ε_ijk α_j · R_k` with `α` from `alpha`, pointwise.
pub fn check_div_identity(field: &MatrixField, alpha: &AlphaSource) -> Result<ResidualReport> {
    check_div_identity_over(field, alpha, &SampleNodes::interior(field.grid()))
}

pub(crate) fn check_div_identity_over(
    field: &MatrixField,
    alpha: &AlphaSource,
    nodes: &SampleNodes,
) -> Result<ResidualReport> {
    require_3d(field, "check_div_identity")?;
    let a = alpha.resolve(field)?;
    let div = div_rowwise(field)?;
    Ok(ResidualReport::over(
        "div_identity",
        field.grid(),
        nodes,
        |n| {
            let r = field.at(n);
            let al = a.spatial_at(n);
            let d = div.at(n);
            let mut res = [0.0; 3];
            for (i, slot) in res.iter_mut().enumerate() {
                let mut rhs = 0.0;
                for j in 0..3 {
                    for k in 0..3 {
                        let e = eps3(i, j, k);
                        if e != 0.0 {
                            rhs += e * (0..3).map(|l| al[(j, l)] * r[(k, l)]).sum::<f64>();
                        }
                    }
                }
                *slot = d[i] - rhs;
            }
            vec_norm(&res)
        },
    ))
}

/// `Σᵢ |(∇Rᵢ)_skew|² = ½|α|²`, pointwise.
pub fn check_skew_norm(field: &MatrixField, alpha: &AlphaSource) -> Result<ResidualReport> {
    check_skew_norm_over(field, alpha, &SampleNodes::interior(field.grid()))
}

pub(crate) fn check_skew_norm_over(
    field: &MatrixField,
    alpha: &AlphaSource,
    nodes: &SampleNodes,
) -> Result<ResidualReport> {
    require_3d(field, "check_skew_norm")?;
    let a = alpha.resolve(field)?;
    let grad = fd_gradient(field);
    Ok(ResidualReport::over(
        "skew_norm",
        field.grid(),
        nodes,
        |n| {
            let lhs: f64 = (0..3)
                .map(|i| row_gradient(&grad, n, i).skew().frobenius_norm_sq())
                .sum();
            lhs - 0.5 * a.spatial_at(n).frobenius_norm_sq()
        },
    ))
}

/// `margin(x) = Σᵢ |(∇Rᵢ)_sym|² - ⅓|div R|²`. The report's residual is the
/// negative part of the margin; `margin` holds its minimum over interior nodes.
pub fn check_sym_bound(field: &MatrixField) -> Result<ResidualReport> {
    check_sym_bound_over(field, &SampleNodes::interior(field.grid()))
}

pub(crate) fn check_sym_bound_over(
    field: &MatrixField,
    nodes: &SampleNodes,
) -> Result<ResidualReport> {
    require_3d(field, "check_sym_bound")?;
    let grad = fd_gradient(field);
    let grid = field.grid();
    let margin = |n: usize| {
        let mut sym = 0.0;
        let mut div_sq = 0.0;
        for i in 0..3 {
            let g = row_gradient(&grad, n, i);
            sym += g.sym().frobenius_norm_sq();
            div_sq += g.trace().powi(2);
        }
        sym - div_sq / 3.0
    };
    let min = nodes
        .nodes
        .iter()
        .map(|&n| margin(n))
        .fold(f64::INFINITY, f64::min);
    let mut report =
        ResidualReport::over("sym_bound", grid, nodes, |n| (-margin(n)).max(0.0)).with_margin(min);
    report.order_constant = None;
    Ok(report)
}

/// Diagnostics for `ΔRᵢ = ε_ijk ∇(α_j · R_k)` and `|∇R|² = -tr(RᵀαRᵀα)`
/// with a supplied constant `α`. `None` uses the mean of the discrete curl.
///
/// Only constant fields satisfy both with a constant `α`, so on other inputs
/// the residuals measure how far the curl is from `α`.
pub fn check_laplace_identity(
    field: &MatrixField,
    alpha: Option<&ConstantCurl>,
) -> Result<(ResidualReport, ResidualReport)> {
    check_laplace_identity_over(field, alpha, &SampleNodes::interior(field.grid()))
}

pub(crate) fn check_laplace_identity_over(
    field: &MatrixField,
    alpha: Option<&ConstantCurl>,
    nodes: &SampleNodes,
) -> Result<(ResidualReport, ResidualReport)> {
    require_3d(field, "check_laplace_identity")?;
    let alpha = match alpha {
        Some(ConstantCurl::Spatial(a)) if a.dim() == 3 => a.clone(),
        Some(_) => return contract("check_laplace_identity needs a 3x3 constant curl"),
        None => match super::alpha::mean_curl(field)? {
            ConstantCurl::Spatial(a) => a,
            ConstantCurl::Planar(_) => unreachable!("3D field"),
        },
    };
    let grid = *field.grid();
    let lap = field.laplacian();
    // ∇(α_j · R_k) for every (j, k).
    let mut grads = Vec::with_capacity(9);
    for j in 0..3 {
        for k in 0..3 {
            let values: Vec<f64> = (0..grid.node_count())
                .map(|n| {
                    let r = field.node_slice(n);
                    (0..3).map(|l| alpha[(j, l)] * r[k * 3 + l]).sum()
                })
                .collect();
            let s = ScalarField::new(grid, values)?;
            grads.push(scalar_gradient(&s));
        }
    }
    let grad = fd_gradient(field);

    let mut second = ResidualReport::over("laplace_identity", &grid, nodes, |n| {
        let l = lap.node_slice(n);
        let mut sq = 0.0;
        for i in 0..3 {
            for a in 0..3 {
                let mut rhs = 0.0;
                for j in 0..3 {
                    for k in 0..3 {
                        let e = eps3(i, j, k);
                        if e != 0.0 {
                            rhs += e * grads[j * 3 + k].at(n)[a];
                        }
                    }
                }
                sq += (l[i * 3 + a] - rhs).powi(2);
            }
        }
        sq.sqrt()
    });
    let mut third = ResidualReport::over("gradient_norm_identity", &grid, nodes, |n| {
        let r = field.at(n);
        let m = &r.transpose() * &alpha;
        let lhs: f64 = grad.at(n).iter().map(|v| v * v).sum();
        lhs + (&m * &m).trace()
    });
    let defect = max_rotation_defect(field);
    if defect > ORTHOGONALITY_TOL {
        let msg = format!("input is not a rotation field (defect {defect:.3e})");
        second.warn(msg.clone());
        third.warn(msg);
    }
    Ok((second, third))
}

/// Residuals of the planar relations for `e = R₁`:
/// `Δe₁ = ∂₁α₂ - ∂₂α₁`, `Δe₂ = ∂₁α₁ + ∂₂α₂` and `|∇e₁|² + |∇e₂|² + e·Δe = 0`.
#[derive(Debug, Clone)]
pub struct PlanarLaplaceReport {
    pub first: ResidualReport,
    pub second: ResidualReport,
    pub unit_norm: ResidualReport,
}

impl PlanarLaplaceReport {
    pub fn into_reports(self) -> Vec<ResidualReport> {
        vec![self.first, self.second, self.unit_norm]
    }
}

pub fn check_2d_laplace(field: &MatrixField, alpha: &AlphaSource) -> Result<PlanarLaplaceReport> {
    check_2d_laplace_over(field, alpha, &SampleNodes::interior(field.grid()))
}

pub(crate) fn check_2d_laplace_over(
    field: &MatrixField,
    alpha: &AlphaSource,
    nodes: &SampleNodes,
) -> Result<PlanarLaplaceReport> {
    if field.m() != 2 || field.grid().dim() != 2 {
        return contract("check_2d_laplace needs a 2x2 field on a 2D grid");
    }
    let grid = *field.grid();
    for n in (0..grid.node_count()).filter(|&n| grid.in_mask(n)) {
        let e = &field.node_slice(n)[..2];
        let dev = (e[0].hypot(e[1]) - 1.0).abs();
        if dev > ORTHOGONALITY_TOL {
            return contract(format!("|e| deviates from 1 by {dev:e} at node {n}"));
        }
    }
    let a = alpha.resolve(field)?;
    let alpha_field = a.planar_field(&grid)?;
    let dalpha = vector_gradient(&alpha_field)?; // (i, j) = ∂_j α_i
    let e = field.row_field(0);
    let lap_e = e.laplacian();
    let de = vector_gradient(&e)?;

    let first = ResidualReport::over("planar_laplace_e1", &grid, nodes, |n| {
        let d = dalpha.node_slice(n);
        lap_e.at(n)[0] - (d[2] - d[1])
    });
    let second = ResidualReport::over("planar_laplace_e2", &grid, nodes, |n| {
        let d = dalpha.node_slice(n);
        lap_e.at(n)[1] - (d[0] + d[3])
    });
    let unit_norm = ResidualReport::over("planar_unit_norm", &grid, nodes, |n| {
        let g: f64 = de.node_slice(n).iter().map(|v| v * v).sum();
        let ev = e.at(n);
        let l = lap_e.at(n);
        g + ev[0] * l[0] + ev[1] * l[1]
    });
    Ok(PlanarLaplaceReport {
        first,
        second,
        unit_norm,
    })
}

/// Largest `|sym(Rᵀ ∂ᵢR)|` over axes, from finite differences.
pub fn check_skew_product(field: &MatrixField) -> Result<ResidualReport> {
    check_skew_product_over(field, &SampleNodes::interior(field.grid()))
}

pub(crate) fn check_skew_product_over(
    field: &MatrixField,
    nodes: &SampleNodes,
) -> Result<ResidualReport> {
    let n = field.m();
    if n != field.grid().dim() {
        return contract("check_skew_product needs matrix size equal to the grid dimension");
    }
    let grad = fd_gradient(field);
    Ok(ResidualReport::over(
        "skew_product",
        field.grid(),
        nodes,
        |node| {
            let rt = field.at(node).transpose();
            (0..n)
                .map(|i| (&rt * &grad.slice_last(node, i)).sym().frobenius_norm())
                .fold(0.0, f64::max)
        },
    ))
}

/// Pointwise form of the relation at a node where the field equals the
/// identity: with `R̃ = R(x₀)ᵀR`, `|div R̃(x₀)|² = 2|(curl R̃)(x₀)_skew|²`.
/// Since `div R̃ = R(x₀)ᵀ div R` the residual is
/// `|div R|² - 2|(Rᵀα)_skew|²` at every node.
pub fn check_div_skew_relation(field: &MatrixField, alpha: &AlphaSource) -> Result<ResidualReport> {
    check_div_skew_relation_over(field, alpha, &SampleNodes::interior(field.grid()))
}

pub(crate) fn check_div_skew_relation_over(
    field: &MatrixField,
    alpha: &AlphaSource,
    nodes: &SampleNodes,
) -> Result<ResidualReport> {
    require_3d(field, "check_div_skew_relation")?;
    let a = alpha.resolve(field)?;
    let div = div_rowwise(field)?;
    Ok(ResidualReport::over(
        "div_skew_relation",
        field.grid(),
        nodes,
        |n| {
            let d: f64 = div.at(n).iter().map(|v| v * v).sum();
            let m = &field.at(n).transpose() * &a.spatial_at(n);
            d - 2.0 * m.skew().frobenius_norm_sq()
        },
    ))
}
