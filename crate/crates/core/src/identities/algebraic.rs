use crate::error::{contract, Result};
use crate::fields::{MatrixField, ResidualReport};
use crate::smallmat::{cross, eps3, SquareMatrix};

fn row3(m: &SquareMatrix, i: usize) -> [f64; 3] {
    [m[(i, 0)], m[(i, 1)], m[(i, 2)]]
}

/// Largest `|2Rᵢ - ε_ijk R_j × R_k|` over rows of one matrix.
pub fn frame_residual(m: &SquareMatrix) -> Result<f64> {
    if m.dim() != 3 {
        return contract("the frame identity is a 3x3 statement");
    }
    let rows = [row3(m, 0), row3(m, 1), row3(m, 2)];
    let mut worst = 0.0_f64;
    for i in 0..3 {
        let mut rhs = [0.0; 3];
        for j in 0..3 {
            for k in 0..3 {
                let e = eps3(i, j, k);
                if e != 0.0 {
                    let c = cross(&rows[j], &rows[k]);
                    for a in 0..3 {
                        rhs[a] += e * c[a];
                    }
                }
            }
        }
        let r: f64 = (0..3)
            .map(|a| (2.0 * rows[i][a] - rhs[a]).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Rows of a rotation field form a right-handed orthonormal frame.
/// Evaluated at every in-mask node; no derivatives involved.
pub fn check_frame(field: &MatrixField) -> Result<ResidualReport> {
    if field.m() != 3 {
        return contract("check_frame needs a 3x3 matrix field");
    }
    let grid = field.grid();
    let nodes: Vec<usize> = (0..grid.node_count())
        .filter(|&n| grid.in_mask(n))
        .collect();
    let mut report = ResidualReport::from_residuals("frame", grid, &nodes, |n| {
        frame_residual(&field.at(n)).expect("3x3")
    });
    report.order_constant = None;
    Ok(report)
}

/// `|tr(RᵀαRᵀα) - (|(Rᵀα)_sym|² - |(Rᵀα)_skew|²)|` for arbitrary square matrices.
pub fn check_trace_algebra(r: &SquareMatrix, alpha: &SquareMatrix) -> Result<f64> {
    if r.dim() != alpha.dim() {
        return contract("check_trace_algebra needs matrices of equal size");
    }
    let m = &r.transpose() * alpha;
    let lhs = (&m * &m).trace();
    let (sym, skew) = m.sym_skew_split();
    Ok((lhs - (sym.frobenius_norm_sq() - skew.frobenius_norm_sq())).abs())
}

/// `m(α) = |α_skew|²/6 + 3|α_sym|²/2`.
///
/// Constant curl `α` of a rotation field forces `|α_skew|² - |α_sym|²` to
/// dominate `7/6 |α_skew|² + 1/2 |α_sym|²`; the gap between the two sides is
/// `-m(α)`, so `m(α) > 0` rules out every `α ≠ 0`.
pub fn check_alpha_contradiction(alpha: &SquareMatrix) -> Result<f64> {
    if alpha.dim() != 3 {
        return contract("check_alpha_contradiction needs a 3x3 matrix");
    }
    let (sym, skew) = alpha.sym_skew_split();
    Ok(skew.frobenius_norm_sq() / 6.0 + 1.5 * sym.frobenius_norm_sq())
}
