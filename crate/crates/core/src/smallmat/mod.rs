//! Small dense linear algebra for rotation work.
//!
//! Everything here operates on square matrices of dimension 2 or 3 in
//! practice, although [`SquareMatrix`] itself and the singular value routine
//! accept any size. Storage is inline for `n <= 3`, so per-node matrices built
//! inside grid loops never touch the heap.
//!
//! Index conventions are 0-based throughout: `levi_civita(0, 1, 2) == 1`.

mod rotation;
mod svd;

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{contract, Error, Result};

pub(crate) use rotation::random_unit_vector;
pub use rotation::{
    axis_angle, dist_so, operator_norm, project_to_rotation, random_rotation, random_rotation_with,
    ConstantCurl, Projection, RotationMatrix, DETERMINANT_TOL, ORTHOGONALITY_TOL,
};
pub use svd::{svd, Svd};

/// Dense `n x n` real matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: SmallVec<[f64; 9]>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: SmallVec::from_elem(0.0, n * n),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major entries; `entries.len()` must equal `n * n`
    /// and every entry must be finite.
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return contract(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            ));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return contract(format!("matrix entry {bad} is not finite"));
        }
        Ok(Self {
            n,
            data: SmallVec::from_slice(entries),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return contract(format!("row {i} has {} entries, expected {n}", row.len()));
            }
            entries.extend_from_slice(row);
        }
        Self::from_row_major(n, &entries)
    }

    /// Unchecked constructor for internal use where the entries are known to be well formed.
    pub(crate) fn from_slice(n: usize, entries: &[f64]) -> Self {
        debug_assert_eq!(entries.len(), n * n);
        Self {
            n,
            data: SmallVec::from_slice(entries),
        }
    }

    /// Outer product `a ⊗ b`.
    pub fn outer(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return contract("outer product needs equal-length vectors");
        }
        let n = a.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = a[i] * b[j];
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius inner product `A : B = tr(AᵀB)`.
    pub fn frobenius_dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn determinant(&self) -> f64 {
        let m = self;
        match self.n {
            0 => 1.0,
            1 => m[(0, 0)],
            2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
            3 => {
                m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                    - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                    + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
            }
            n => {
                // Gaussian elimination with partial pivoting.
                let mut a: Vec<f64> = self.data.to_vec();
                let mut det = 1.0;
                for col in 0..n {
                    let pivot = (col..n)
                        .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
                        .unwrap_or(col);
                    if a[pivot * n + col] == 0.0 {
                        return 0.0;
                    }
                    if pivot != col {
                        for k in 0..n {
                            a.swap(col * n + k, pivot * n + k);
                        }
                        det = -det;
                    }
                    let p = a[col * n + col];
                    det *= p;
                    for r in col + 1..n {
                        let f = a[r * n + col] / p;
                        for k in col..n {
                            a[r * n + k] -= f * a[col * n + k];
                        }
                    }
                }
                det
            }
        }
    }

    /// Splits `A` into `(A_sym, A_skew)` with `A_sym = (A + Aᵀ)/2`, `A_skew = (A - Aᵀ)/2`.
    pub fn sym_skew_split(&self) -> (Self, Self) {
        let n = self.n;
        let mut sym = Self::zeros(n);
        let mut skew = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                sym[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
                skew[(i, j)] = 0.5 * (self[(i, j)] - self[(j, i)]);
            }
        }
        (sym, skew)
    }

    pub fn sym(&self) -> Self {
        self.sym_skew_split().0
    }

    pub fn skew(&self) -> Self {
        self.sym_skew_split().1
    }

    /// Largest deviation of `AᵀA` from the identity, in max-norm.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let dot: f64 = (0..self.n).map(|k| self[(k, i)] * self[(k, j)]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.n + c]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.n + c]
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &SquareMatrix {
    type Output = SquareMatrix;
    fn add(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&SquareMatrix> for SquareMatrix {
    fn add_assign(&mut self, rhs: &SquareMatrix) {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        self.data
            .iter_mut()
            .zip(&rhs.data)
            .for_each(|(a, b)| *a += b);
    }
}

impl Sub for &SquareMatrix {
    type Output = SquareMatrix;
    fn sub(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&rhs.data)
            .for_each(|(a, b)| *a -= b);
        out
    }
}

impl Neg for &SquareMatrix {
    type Output = SquareMatrix;
    fn neg(self) -> SquareMatrix {
        self.scale(-1.0)
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.n).map(|i| self.row(i)).collect();
        f.debug_tuple("SquareMatrix").field(&rows).finish()
    }
}

impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.n).map(|i| self.row(i)).collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SquareMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        SquareMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Sign of the permutation `(i, j, k)` of `{0, 1, 2}`; zero when an index repeats.
pub fn levi_civita(i: usize, j: usize, k: usize) -> Result<i32> {
    if i > 2 || j > 2 || k > 2 {
        return Err(Error::Contract(format!(
            "Levi-Civita indices must lie in 0..3, got ({i}, {j}, {k})"
        )));
    }
    Ok(LEVI_CIVITA[i][j][k] as i32)
}

const LEVI_CIVITA: [[[f64; 3]; 3]; 3] = [
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]],
    [[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
    [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
];

/// Unchecked Levi-Civita symbol for hot loops; indices must be `< 3`.
#[inline]
pub(crate) fn eps3(i: usize, j: usize, k: usize) -> f64 {
    LEVI_CIVITA[i][j][k]
}

/// `(a × b)_i = ε_ijk a_j b_k`.
pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Skew matrix `[a]×` with `[a]× b = a × b`.
pub fn hat(a: &[f64; 3]) -> SquareMatrix {
    SquareMatrix::from_slice(3, &[0.0, -a[2], a[1], a[2], 0.0, -a[0], -a[1], a[0], 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levi_civita_examples() {
        assert_eq!(levi_civita(0, 1, 2).unwrap(), 1);
        assert_eq!(levi_civita(1, 0, 2).unwrap(), -1);
        assert_eq!(levi_civita(0, 0, 1).unwrap(), 0);
        assert_eq!(levi_civita(2, 0, 1).unwrap(), 1);
        assert!(matches!(levi_civita(3, 0, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn cross_examples() {
        assert_eq!(cross(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
        assert_eq!(cross(&[1.5, -2.0, 4.0], &[1.5, -2.0, 4.0]), [0.0, 0.0, 0.0]);
        // Determinant oracle: det([e; a; b]) expands to the same components.
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        let c = cross(&a, &b);
        for (i, ci) in c.iter().enumerate() {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            let m = SquareMatrix::from_rows(&[e, a, b]).unwrap();
            assert_eq!(*ci, m.determinant());
        }
        assert_eq!(c, [-3.0, 6.0, -3.0]);
    }

    #[test]
    fn sym_skew_examples() {
        let (s, k) = SquareMatrix::identity(3).sym_skew_split();
        assert_eq!(s, SquareMatrix::identity(3));
        assert_eq!(k, SquareMatrix::zeros(3));

        let j = SquareMatrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let (s, k) = j.sym_skew_split();
        assert_eq!(s, SquareMatrix::zeros(2));
        assert_eq!(k, j);

        let a = SquareMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        let (s, k) = a.sym_skew_split();
        assert_eq!(
            s,
            SquareMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap()
        );
        assert_eq!(k, j);
    }

    #[test]
    fn determinant_general_matches_closed_form() {
        let m = SquareMatrix::from_rows(&[
            [2.0, -1.0, 0.5, 3.0],
            [1.0, 4.0, -2.0, 0.0],
            [0.0, 1.0, 1.0, -1.0],
            [3.0, 0.0, 2.0, 1.0],
        ])
        .unwrap();
        // Laplace expansion along the first row, using the 3x3 closed form for minors.
        let mut expected = 0.0;
        for c in 0..4 {
            let minor: Vec<f64> = (1..4)
                .flat_map(|r| (0..4).filter(move |&k| k != c).map(move |k| (r, k)))
                .map(|(r, k)| m[(r, k)])
                .collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            expected += sign * m[(0, c)] * SquareMatrix::from_slice(3, &minor).determinant();
        }
        assert!((m.determinant() - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_ragged() {
        assert!(SquareMatrix::from_row_major(2, &[1.0, f64::NAN, 0.0, 1.0]).is_err());
        assert!(SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn hat_matches_cross() {
        let a = [0.3, -1.2, 2.0];
        let b = [1.1, 0.4, -0.7];
        let hb = hat(&a).mat_vec(&b);
        let c = cross(&a, &b);
        for i in 0..3 {
            assert!((hb[i] - c[i]).abs() < 1e-15);
        }
    }
}
