//! One-sided (Hestenes) Jacobi singular value decomposition.
//!
//! Columns of `A V` are orthogonalised by plane rotations until every pair is
//! orthogonal to working precision; the column norms are then the singular
//! values. The method is accurate to a few ulps on the tiny matrices used
//! here and has no external dependencies.

use super::SquareMatrix;

const MAX_SWEEPS: usize = 80;

/// `A = U diag(σ) Vᵀ` with `σ` sorted in descending order and `U`, `V` orthogonal.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: SquareMatrix,
    pub singular_values: Vec<f64>,
    pub v: SquareMatrix,
}

pub fn svd(a: &SquareMatrix) -> Svd {
    let n = a.dim();
    // Work on columns: w[c] holds column c of A V.
    let mut w: Vec<Vec<f64>> = (0..n)
        .map(|c| (0..n).map(|r| a[(r, c)]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|c| (0..n).map(|r| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = w[p].iter().map(|x| x * x).sum();
                let beta: f64 = w[q].iter().map(|x| x * x).sum();
                let gamma: f64 = w[p].iter().zip(&w[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the deterministic column order for ties.
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let scale = sigma.iter().cloned().fold(0.0, f64::max);
    let tiny = scale * f64::EPSILON * n as f64;
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sorted_sigma = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for &c in &order {
        v_cols.push(v[c].clone());
        sorted_sigma.push(sigma[c]);
        if sigma[c] > tiny && sigma[c] > 0.0 {
            u_cols.push(w[c].iter().map(|x| x / sigma[c]).collect());
        } else {
            pending.push(u_cols.len());
            u_cols.push(vec![0.0; n]);
        }
    }
    // Complete U with an orthonormal basis of the left null space, deterministically.
    for slot in pending {
        u_cols[slot] = complete_basis(&u_cols, slot, n);
    }
    sigma = sorted_sigma;

    let mut u = SquareMatrix::zeros(n);
    let mut vm = SquareMatrix::zeros(n);
    for c in 0..n {
        for r in 0..n {
            u[(r, c)] = u_cols[c][r];
            vm[(r, c)] = v_cols[c][r];
        }
    }
    Svd {
        u,
        singular_values: sigma,
        v: vm,
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    for r in 0..cols[p].len() {
        let x = cols[p][r];
        let y = cols[q][r];
        cols[p][r] = c * x - s * y;
        cols[q][r] = s * x + c * y;
    }
}

/// Gram-Schmidt a unit vector orthogonal to every filled column except `slot`,
/// trying the standard basis vectors in order.
fn complete_basis(cols: &[Vec<f64>], slot: usize, n: usize) -> Vec<f64> {
    let filled: Vec<&Vec<f64>> = cols
        .iter()
        .enumerate()
        .filter(|(i, c)| *i != slot && c.iter().any(|x| *x != 0.0))
        .map(|(_, c)| c)
        .collect();
    let mut best = vec![0.0; n];
    let mut best_norm = -1.0;
    for e in 0..n {
        let mut cand: Vec<f64> = (0..n).map(|r| if r == e { 1.0 } else { 0.0 }).collect();
        for _ in 0..2 {
            for f in &filled {
                let d: f64 = cand.iter().zip(f.iter()).map(|(a, b)| a * b).sum();
                cand.iter_mut().zip(f.iter()).for_each(|(a, b)| *a -= d * b);
            }
        }
        let nrm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > best_norm + 1e-12 {
            best_norm = nrm;
            best = cand.iter().map(|x| x / nrm).collect();
        }
    }
    best
}
