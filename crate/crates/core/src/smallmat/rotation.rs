use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{hat, svd, SquareMatrix};
use crate::error::{contract, Error, Result};

/// Max-norm tolerance on `RᵀR - Id` for a matrix to count as a rotation.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
/// Tolerance on `det(R) >= 1 - tol`.
pub const DETERMINANT_TOL: f64 = 1e-9;

/// A matrix in SO(n), validated against [`ORTHOGONALITY_TOL`] and [`DETERMINANT_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RotationMatrix(SquareMatrix);

impl RotationMatrix {
    pub fn identity(n: usize) -> Self {
        Self(SquareMatrix::identity(n))
    }

    pub fn as_matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_inner(self) -> SquareMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Checks the rotation invariants without taking ownership.
    pub fn validate(m: &SquareMatrix) -> Result<()> {
        if !m.is_finite() {
            return contract("rotation has non-finite entries");
        }
        let defect = m.orthogonality_defect();
        if defect > ORTHOGONALITY_TOL {
            return contract(format!(
                "|RᵀR - Id|_max = {defect:e} exceeds {ORTHOGONALITY_TOL:e}"
            ));
        }
        let det = m.determinant();
        if det < 1.0 - DETERMINANT_TOL {
            return contract(format!("det(R) = {det} is not +1"));
        }
        Ok(())
    }
}

impl TryFrom<SquareMatrix> for RotationMatrix {
    type Error = Error;
    fn try_from(m: SquareMatrix) -> Result<Self> {
        Self::validate(&m)?;
        Ok(Self(m))
    }
}

impl<'de> Deserialize<'de> for RotationMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = SquareMatrix::deserialize(d)?;
        RotationMatrix::try_from(m).map_err(serde::de::Error::custom)
    }
}

/// A constant curl annotation: a 2-vector for planar fields, a 3x3 matrix
/// (row `i` = curl of row `i`) for spatial ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantCurl {
    Planar([f64; 2]),
    Spatial(SquareMatrix),
}

impl ConstantCurl {
    pub fn dim(&self) -> usize {
        match self {
            ConstantCurl::Planar(_) => 2,
            ConstantCurl::Spatial(m) => m.dim(),
        }
    }
}

/// Result of a nearest-rotation projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub rotation: RotationMatrix,
    /// Set when the minimiser is not unique (equal two smallest singular values
    /// with reversed orientation, or a rank drop of two). `rotation` is then the
    /// documented deterministic representative.
    pub degenerate: bool,
}

/// Nearest rotation in Frobenius norm.
///
/// 2D uses the closed form `φ = atan2(M₂₁ - M₁₂, M₁₁ + M₂₂)`; for a degenerate
/// input both arguments vanish and the representative is the identity. 3D uses
/// the Jacobi SVD with the orientation fixed by flipping the last (smallest)
/// singular direction; on ties the column order of the SVD decides.
pub fn project_to_rotation(m: &SquareMatrix) -> Result<Projection> {
    if !m.is_finite() {
        return contract("cannot project a non-finite matrix");
    }
    match m.dim() {
        2 => Ok(project_2d(m)),
        3 => Ok(project_svd(m)),
        n => contract(format!(
            "nearest rotation is only provided for n in {{2, 3}}, got {n}"
        )),
    }
}

fn project_2d(m: &SquareMatrix) -> Projection {
    let a = m[(0, 0)] + m[(1, 1)];
    let b = m[(1, 0)] - m[(0, 1)];
    let scale = m.frobenius_norm();
    let degenerate = a.hypot(b) <= 1e-12 * scale || scale == 0.0;
    let phi = if degenerate { 0.0 } else { b.atan2(a) };
    let (s, c) = phi.sin_cos();
    let r = SquareMatrix::from_slice(2, &[c, -s, s, c]);
    Projection {
        rotation: RotationMatrix(r),
        degenerate,
    }
}

fn project_svd(m: &SquareMatrix) -> Projection {
    let n = m.dim();
    let dec = svd(m);
    let d = (dec.u.determinant() * dec.v.determinant()).signum();
    let mut flip = vec![1.0; n];
    flip[n - 1] = if d < 0.0 { -1.0 } else { 1.0 };
    let r = &(&dec.u * &SquareMatrix::diag(&flip)) * &dec.v.transpose();

    let sigma = &dec.singular_values;
    let tol = 1e-12 * sigma[0].max(f64::MIN_POSITIVE);
    let tied = sigma[n - 2] - sigma[n - 1] <= tol;
    let degenerate = sigma[0] == 0.0 || (tied && (d < 0.0 || sigma[n - 2] <= tol));
    Projection {
        rotation: RotationMatrix(r),
        degenerate,
    }
}

/// `dist(M, SO(n)) = |M - P(M)|` in Frobenius norm.
pub fn dist_so(m: &SquareMatrix) -> Result<f64> {
    let p = project_to_rotation(m)?;
    Ok((m - p.rotation.as_matrix()).frobenius_norm())
}

/// Largest singular value.
pub fn operator_norm(alpha: &SquareMatrix) -> f64 {
    if alpha.dim() == 0 {
        return 0.0;
    }
    svd(alpha).singular_values[0]
}

/// Rodrigues formula: rotation by `angle` about `axis` (normalised internally).
pub fn axis_angle(axis: &[f64; 3], angle: f64) -> Result<SquareMatrix> {
    let len = super::norm(axis);
    if !(len > 0.0) || !len.is_finite() {
        return contract("rotation axis must be a nonzero finite vector");
    }
    let a = [axis[0] / len, axis[1] / len, axis[2] / len];
    let k = hat(&a);
    let k2 = &k * &k;
    let (s, c) = angle.sin_cos();
    Ok(&(&SquareMatrix::identity(3) + &k.scale(s)) + &k2.scale(1.0 - c))
}

/// Deterministic random rotation for a seed. See [`random_rotation_with`].
pub fn random_rotation(seed: u64, n: usize) -> Result<RotationMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_rotation_with(&mut rng, n)
}

/// Haar-distributed rotation drawn from a caller-owned generator.
///
/// 2D: uniform angle on `[0, 2π)`. 3D: axis uniform on the sphere and angle
/// with the Haar marginal density `(1 - cos θ)/π` on `[0, π]`, sampled by
/// inverting its distribution function `(θ - sin θ)/π`.
pub fn random_rotation_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<RotationMatrix> {
    match n {
        2 => {
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let (s, c) = phi.sin_cos();
            Ok(RotationMatrix(SquareMatrix::from_slice(2, &[c, -s, s, c])))
        }
        3 => {
            let axis = random_unit_vector(rng);
            let u: f64 = rng.random();
            let theta = invert_haar_angle_cdf(u);
            Ok(RotationMatrix(axis_angle(&axis, theta)?))
        }
        _ => contract(format!(
            "random rotations are provided for n in {{2, 3}}, got {n}"
        )),
    }
}

pub(crate) fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    [rho * phi.cos(), rho * phi.sin(), z]
}

fn invert_haar_angle_cdf(u: f64) -> f64 {
    let target = u * PI;
    let (mut lo, mut hi) = (0.0_f64, PI);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid - mid.sin() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
