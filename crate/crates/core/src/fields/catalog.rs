//! Analytic test fields with exact values and exact first derivatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ops::rowwise_curl_from_gradient;
use super::{Grid, MatrixField, RowwiseCurl, ThirdOrderField};
use crate::error::{config, Error, Result};
use crate::smallmat::{axis_angle, hat, RotationMatrix, SquareMatrix};

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `amplitude * sin(wavevector · x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amplitude: f64,
    pub wavevector: [f64; 3],
    #[serde(default)]
    pub phase: f64,
}

/// Scalar angle `θ(x) = θ₀ + g·x + ½ xᵀHx + Σ waves`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleProfile {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub gradient: [f64; 3],
    /// Symmetric; only the symmetric part is used.
    #[serde(default)]
    pub hessian: [[f64; 3]; 3],
    #[serde(default)]
    pub waves: Vec<Wave>,
}

impl AngleProfile {
    /// `θ(x) = ω x_axis`.
    pub fn linear(axis: usize, omega: f64) -> Self {
        let mut gradient = [0.0; 3];
        gradient[axis] = omega;
        Self {
            gradient,
            ..Self::default()
        }
    }

    fn sym_h(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.hessian[i][j] + self.hessian[j][i])
    }

    pub fn value(&self, x: &[f64; 3]) -> f64 {
        let mut v = self.offset + dot3(&self.gradient, x);
        for i in 0..3 {
            for j in 0..3 {
                v += 0.5 * x[i] * self.sym_h(i, j) * x[j];
            }
        }
        for w in &self.waves {
            v += w.amplitude * (dot3(&w.wavevector, x) + w.phase).sin();
        }
        v
    }

    pub fn grad(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut g = self.gradient;
        for (i, gi) in g.iter_mut().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                *gi += self.sym_h(i, j) * xj;
            }
        }
        for w in &self.waves {
            let c = w.amplitude * (dot3(&w.wavevector, x) + w.phase).cos();
            for (gi, k) in g.iter_mut().zip(&w.wavevector) {
                *gi += c * k;
            }
        }
        g
    }

    pub fn hessian_at(&self, x: &[f64; 3]) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.sym_h(i, j);
            }
        }
        for w in &self.waves {
            let s = w.amplitude * (dot3(&w.wavevector, x) + w.phase).sin();
            for (i, row) in h.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v -= s * w.wavevector[i] * w.wavevector[j];
                }
            }
        }
        h
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        let mut draw = |lo: f64, hi: f64| rng.random_range(lo..hi);
        let mut p = AngleProfile {
            offset: draw(0.0, std::f64::consts::TAU),
            ..Self::default()
        };
        for a in 0..dim {
            p.gradient[a] = draw(-1.0, 1.0);
        }
        for i in 0..dim {
            for j in i..dim {
                let v = draw(-0.5, 0.5);
                p.hessian[i][j] = v;
                p.hessian[j][i] = v;
            }
        }
        for _ in 0..2 {
            let mut k = [0.0; 3];
            for kv in k.iter_mut().take(dim) {
                *kv = draw(-2.0, 2.0);
            }
            p.waves.push(Wave {
                amplitude: draw(0.1, 0.4),
                wavevector: k,
                phase: draw(0.0, std::f64::consts::TAU),
            });
        }
        p
    }
}

/// One factor `exp(θ(x) [axis]×)` of a spatial rotation field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisFactor {
    pub axis: [f64; 3],
    pub theta: AngleProfile,
}

impl AxisFactor {
    fn unit_axis(&self) -> Result<[f64; 3]> {
        let len = dot3(&self.axis, &self.axis).sqrt();
        if !(len > 0.0) || !len.is_finite() {
            return config("rotation axis must be a nonzero finite vector");
        }
        Ok([self.axis[0] / len, self.axis[1] / len, self.axis[2] / len])
    }

    fn value(&self, x: &[f64; 3]) -> SquareMatrix {
        // Axis validated at construction through `CatalogField::validate`.
        axis_angle(&self.axis, self.theta.value(x)).expect("validated axis")
    }

    fn generator(&self) -> SquareMatrix {
        hat(&self.unit_axis().expect("validated axis"))
    }
}

/// Sinusoidal displacement `amplitude * sin(k·x + φ)` added to the identity map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorWave {
    pub amplitude: Vec<f64>,
    pub wavevector: [f64; 3],
    #[serde(default)]
    pub phase: f64,
}

/// Deformations `y` whose gradients give curl-free matrix fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Deformation {
    /// `y_i = A_ij x_j + ½ x·H_i x`.
    Polynomial {
        linear: SquareMatrix,
        #[serde(default)]
        quadratic: Vec<SquareMatrix>,
    },
    /// Rolls the strip `x₂ < 1/κ` onto circles; `∇y = R(κx₁) diag(1 - κx₂, 1, ..)`.
    Bending { dim: usize, curvature: f64 },
    /// `y = x + Σ waves`.
    Waves { dim: usize, waves: Vec<VectorWave> },
}

impl Deformation {
    pub fn bending(dim: usize, curvature: f64) -> Self {
        Deformation::Bending { dim, curvature }
    }

    pub fn random(seed: u64, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves = (0..3)
            .map(|_| {
                let mut k = [0.0; 3];
                for kv in k.iter_mut().take(dim) {
                    *kv = rng.random_range(-2.0..2.0);
                }
                VectorWave {
                    amplitude: (0..dim).map(|_| rng.random_range(-0.3..0.3)).collect(),
                    wavevector: k,
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                }
            })
            .collect();
        Deformation::Waves { dim, waves }
    }

    pub fn dim(&self) -> usize {
        match self {
            Deformation::Polynomial { linear, .. } => linear.dim(),
            Deformation::Bending { dim, .. } | Deformation::Waves { dim, .. } => *dim,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !(n == 2 || n == 3) {
            return config(format!("deformation dimension must be 2 or 3, got {n}"));
        }
        match self {
            Deformation::Polynomial { quadratic, .. } => {
                if !(quadratic.is_empty() || quadratic.len() == n)
                    || quadratic.iter().any(|q| q.dim() != n)
                {
                    return config(
                        "polynomial deformation needs one n x n quadratic form per component",
                    );
                }
            }
            Deformation::Bending { curvature, .. } => {
                if !curvature.is_finite() {
                    return config("bending curvature must be finite");
                }
            }
            Deformation::Waves { waves, .. } => {
                if waves.iter().any(|w| w.amplitude.len() != n) {
                    return config("wave amplitudes must have one entry per component");
                }
            }
        }
        Ok(())
    }

    /// `(∇y)_ij = ∂_j y_i`.
    pub fn jacobian(&self, x: &[f64; 3]) -> SquareMatrix {
        let n = self.dim();
        match self {
            Deformation::Polynomial { linear, quadratic } => {
                let mut m = linear.clone();
                for (i, q) in quadratic.iter().enumerate() {
                    for j in 0..n {
                        for k in 0..n {
                            m[(i, j)] += 0.5 * (q[(j, k)] + q[(k, j)]) * x[k];
                        }
                    }
                }
                m
            }
            Deformation::Bending { curvature: k, .. } => {
                let (s, c) = (k * x[0]).sin_cos();
                let stretch = 1.0 - k * x[1];
                let mut m = SquareMatrix::identity(n);
                m[(0, 0)] = stretch * c;
                m[(0, 1)] = -s;
                m[(1, 0)] = stretch * s;
                m[(1, 1)] = c;
                m
            }
            Deformation::Waves { waves, .. } => {
                let mut m = SquareMatrix::identity(n);
                for w in waves {
                    let c = (dot3(&w.wavevector, x) + w.phase).cos();
                    for i in 0..n {
                        for j in 0..n {
                            m[(i, j)] += w.amplitude[i] * c * w.wavevector[j];
                        }
                    }
                }
                m
            }
        }
    }

    /// `∂_axis ∇y`.
    fn jacobian_derivative(&self, x: &[f64; 3], axis: usize) -> SquareMatrix {
        let n = self.dim();
        let mut m = SquareMatrix::zeros(n);
        match self {
            Deformation::Polynomial { quadratic, .. } => {
                for (i, q) in quadratic.iter().enumerate() {
                    for j in 0..n {
                        m[(i, j)] = 0.5 * (q[(j, axis)] + q[(axis, j)]);
                    }
                }
            }
            Deformation::Bending { curvature: k, .. } => {
                let (s, c) = (k * x[0]).sin_cos();
                let stretch = 1.0 - k * x[1];
                match axis {
                    0 => {
                        m[(0, 0)] = -k * stretch * s;
                        m[(0, 1)] = -k * c;
                        m[(1, 0)] = k * stretch * c;
                        m[(1, 1)] = -k * s;
                    }
                    1 => {
                        m[(0, 0)] = -k * c;
                        m[(1, 0)] = -k * s;
                    }
                    _ => {}
                }
            }
            Deformation::Waves { waves, .. } => {
                for w in waves {
                    let s = (dot3(&w.wavevector, x) + w.phase).sin();
                    for i in 0..n {
                        for j in 0..n {
                            m[(i, j)] -= w.amplitude[i] * s * w.wavevector[j] * w.wavevector[axis];
                        }
                    }
                }
            }
        }
        m
    }
}

/// Catalog of analytic matrix fields, selected by `id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogField {
    ConstantRotation {
        rotation: RotationMatrix,
    },
    /// `[[cos θ, sin θ], [-sin θ, cos θ]]`; the first row is the unit vector `e`.
    PlanarRotation {
        theta: AngleProfile,
    },
    AxisRotation {
        axis: [f64; 3],
        theta: AngleProfile,
    },
    /// `Id + ε [[0, x₁], [-x₁, 0]]`.
    FEps {
        eps: f64,
    },
    GradientField {
        deformation: Deformation,
    },
    /// `A(x) B(x)` with both factors axis rotations.
    BlendedRotation {
        first: AxisFactor,
        second: AxisFactor,
    },
    /// Seeded planar (`dim = 2`) or blended (`dim = 3`) rotation field.
    RandomSmooth {
        seed: u64,
        dim: usize,
    },
}

pub const CATALOG_IDS: [&str; 7] = [
    "constant_rotation",
    "planar_rotation",
    "axis_rotation",
    "f_eps",
    "gradient_field",
    "blended_rotation",
    "random_smooth",
];

impl CatalogField {
    /// Builds an entry from its id and a JSON object of parameters.
    pub fn from_id(id: &str, params: &serde_json::Value) -> Result<Self> {
        if !CATALOG_IDS.contains(&id) {
            return config(format!("unknown catalog field '{id}'"));
        }
        let mut obj = match params {
            serde_json::Value::Object(m) => m.clone(),
            serde_json::Value::Null => serde_json::Map::new(),
            _ => return config("catalog parameters must be a JSON object"),
        };
        obj.insert("id".into(), serde_json::Value::String(id.into()));
        let field: CatalogField = serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| Error::Config(format!("parameters for '{id}': {e}")))?;
        field.validate()?;
        Ok(field)
    }

    pub fn id(&self) -> &'static str {
        match self {
            CatalogField::ConstantRotation { .. } => "constant_rotation",
            CatalogField::PlanarRotation { .. } => "planar_rotation",
            CatalogField::AxisRotation { .. } => "axis_rotation",
            CatalogField::FEps { .. } => "f_eps",
            CatalogField::GradientField { .. } => "gradient_field",
            CatalogField::BlendedRotation { .. } => "blended_rotation",
            CatalogField::RandomSmooth { .. } => "random_smooth",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CatalogField::ConstantRotation { rotation } => {
                if !(rotation.dim() == 2 || rotation.dim() == 3) {
                    return config("constant rotation must be 2x2 or 3x3");
                }
            }
            CatalogField::AxisRotation { axis, .. } => {
                AxisFactor {
                    axis: *axis,
                    theta: AngleProfile::default(),
                }
                .unit_axis()?;
            }
            CatalogField::FEps { eps } => {
                if !eps.is_finite() {
                    return config("f_eps needs a finite eps");
                }
            }
            CatalogField::GradientField { deformation } => deformation.validate()?,
            CatalogField::BlendedRotation { first, second } => {
                first.unit_axis()?;
                second.unit_axis()?;
            }
            CatalogField::RandomSmooth { dim, .. } => {
                if !(*dim == 2 || *dim == 3) {
                    return config(format!("random_smooth dimension must be 2 or 3, got {dim}"));
                }
            }
            CatalogField::PlanarRotation { .. } => {}
        }
        Ok(())
    }

    /// Replaces `RandomSmooth` by the concrete field it stands for.
    pub fn resolve(&self) -> CatalogField {
        match self {
            CatalogField::RandomSmooth { seed, dim } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                if *dim == 2 {
                    CatalogField::PlanarRotation {
                        theta: AngleProfile::random(&mut rng, 2),
                    }
                } else {
                    let a1 = crate::smallmat::random_unit_vector(&mut rng);
                    let a2 = crate::smallmat::random_unit_vector(&mut rng);
                    CatalogField::BlendedRotation {
                        first: AxisFactor {
                            axis: a1,
                            theta: AngleProfile::random(&mut rng, 3),
                        },
                        second: AxisFactor {
                            axis: a2,
                            theta: AngleProfile::random(&mut rng, 3),
                        },
                    }
                }
            }
            other => other.clone(),
        }
    }

    /// Spatial dimension the field lives in.
    pub fn dim(&self) -> usize {
        match self {
            CatalogField::ConstantRotation { rotation } => rotation.dim(),
            CatalogField::PlanarRotation { .. } | CatalogField::FEps { .. } => 2,
            CatalogField::AxisRotation { .. } | CatalogField::BlendedRotation { .. } => 3,
            CatalogField::GradientField { deformation } => deformation.dim(),
            CatalogField::RandomSmooth { dim, .. } => *dim,
        }
    }

    /// Whether every value lies in SO(n).
    pub fn is_rotation_field(&self) -> bool {
        !matches!(
            self,
            CatalogField::FEps { .. } | CatalogField::GradientField { .. }
        )
    }

    pub fn value_at(&self, x: &[f64; 3]) -> SquareMatrix {
        match self {
            CatalogField::ConstantRotation { rotation } => rotation.as_matrix().clone(),
            CatalogField::PlanarRotation { theta } => {
                let (s, c) = theta.value(x).sin_cos();
                SquareMatrix::from_slice(2, &[c, s, -s, c])
            }
            CatalogField::AxisRotation { axis, theta } => {
                axis_angle(axis, theta.value(x)).expect("validated axis")
            }
            CatalogField::FEps { eps } => {
                SquareMatrix::from_slice(2, &[1.0, eps * x[0], -eps * x[0], 1.0])
            }
            CatalogField::GradientField { deformation } => deformation.jacobian(x),
            CatalogField::BlendedRotation { first, second } => &first.value(x) * &second.value(x),
            CatalogField::RandomSmooth { .. } => self.resolve().value_at(x),
        }
    }

    /// `∂_i F(x)` for each axis `i < dim`.
    pub fn gradient_at(&self, x: &[f64; 3]) -> Vec<SquareMatrix> {
        let n = self.dim();
        match self {
            CatalogField::ConstantRotation { .. } => vec![SquareMatrix::zeros(n); n],
            CatalogField::PlanarRotation { theta } => {
                let (s, c) = theta.value(x).sin_cos();
                let d = SquareMatrix::from_slice(2, &[-s, c, -c, -s]);
                let g = theta.grad(x);
                (0..2).map(|i| d.scale(g[i])).collect()
            }
            CatalogField::AxisRotation { axis, theta } => {
                let r = self.value_at(x);
                let k = AxisFactor {
                    axis: *axis,
                    theta: theta.clone(),
                }
                .generator();
                let kr = &k * &r;
                let g = theta.grad(x);
                (0..3).map(|i| kr.scale(g[i])).collect()
            }
            CatalogField::FEps { eps } => {
                vec![
                    SquareMatrix::from_slice(2, &[0.0, *eps, -eps, 0.0]),
                    SquareMatrix::zeros(2),
                ]
            }
            CatalogField::GradientField { deformation } => (0..n)
                .map(|i| deformation.jacobian_derivative(x, i))
                .collect(),
            CatalogField::BlendedRotation { first, second } => {
                let a = first.value(x);
                let b = second.value(x);
                let kab = &(&first.generator() * &a) * &b;
                let akb = &(&a * &second.generator()) * &b;
                let g1 = first.theta.grad(x);
                let g2 = second.theta.grad(x);
                (0..3)
                    .map(|i| &kab.scale(g1[i]) + &akb.scale(g2[i]))
                    .collect()
            }
            CatalogField::RandomSmooth { .. } => self.resolve().gradient_at(x),
        }
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dim() != self.dim() {
            return config(format!(
                "catalog field '{}' is {}-dimensional but the grid is {}-dimensional",
                self.id(),
                self.dim(),
                grid.dim()
            ));
        }
        Ok(())
    }

    /// Exact values at every grid node.
    pub fn sample(&self, grid: &Grid) -> Result<MatrixField> {
        self.validate()?;
        self.check_grid(grid)?;
        let f = self.resolve();
        Ok(MatrixField::from_fn(*grid, f.dim(), |x| f.value_at(&x)))
    }

    /// Exact gradient tensor `(∂_i F)_{pl}` at every node.
    pub fn analytic_gradient(&self, grid: &Grid) -> Result<ThirdOrderField> {
        self.validate()?;
        self.check_grid(grid)?;
        let f = self.resolve();
        let n = f.dim();
        let k = n * n * n;
        let mut values = vec![0.0; grid.node_count() * k];
        values
            .par_chunks_mut(k)
            .enumerate()
            .for_each(|(node, out)| {
                let g = f.gradient_at(&grid.position(node));
                for p in 0..n {
                    for l in 0..n {
                        for (i, gi) in g.iter().enumerate() {
                            out[(p * n + l) * n + i] = gi[(p, l)];
                        }
                    }
                }
            });
        Ok(ThirdOrderField::from_raw(*grid, [n, n, n], values))
    }

    /// Exact rowwise curl at every node.
    pub fn analytic_curl(&self, grid: &Grid) -> Result<RowwiseCurl> {
        Ok(rowwise_curl_from_gradient(&self.analytic_gradient(grid)?))
    }
}

/// Samples a catalog entry by id; see [`CatalogField::from_id`].
pub fn sample_catalog_field(
    id: &str,
    params: &serde_json::Value,
    grid: &Grid,
) -> Result<MatrixField> {
    CatalogField::from_id(id, params)?.sample(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, Mask};
    use serde_json::json;

    fn central_difference(f: &CatalogField, x: [f64; 3], axis: usize) -> SquareMatrix {
        let h = 1e-5;
        let mut xp = x;
        let mut xm = x;
        xp[axis] += h;
        xm[axis] -= h;
        (&f.value_at(&xp) - &f.value_at(&xm)).scale(0.5 / h)
    }

    #[test]
    fn analytic_gradients_match_difference_quotients() {
        let fields = [
            CatalogField::RandomSmooth { seed: 3, dim: 2 },
            CatalogField::RandomSmooth { seed: 4, dim: 3 },
            CatalogField::FEps { eps: 0.3 },
            CatalogField::GradientField {
                deformation: Deformation::bending(3, 0.7),
            },
            CatalogField::GradientField {
                deformation: Deformation::random(9, 2),
            },
            CatalogField::AxisRotation {
                axis: [1.0, 2.0, 2.0],
                theta: AngleProfile::linear(2, 1.5),
            },
        ];
        let x = [0.3, -0.2, 0.45];
        for f in &fields {
            let g = f.gradient_at(&x);
            for (i, gi) in g.iter().enumerate() {
                let err = (gi - &central_difference(f, x, i)).max_abs();
                assert!(err < 1e-8, "{} axis {i}: {err}", f.id());
            }
        }
    }

    #[test]
    fn f_eps_at_unit_point() {
        let f = CatalogField::from_id("f_eps", &json!({"eps": 0.2})).unwrap();
        let v = f.value_at(&[1.0, 0.0, 0.0]);
        assert_eq!(
            v,
            SquareMatrix::from_rows(&[[1.0, 0.2], [-0.2, 1.0]]).unwrap()
        );
    }

    #[test]
    fn planar_rotation_is_identity_where_angle_vanishes() {
        let f = CatalogField::PlanarRotation {
            theta: AngleProfile::linear(0, 2.0),
        };
        assert!((&f.value_at(&[0.0, 0.7, 0.0]) - &SquareMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn rotation_entries_stay_on_so_n() {
        for f in [
            CatalogField::RandomSmooth { seed: 1, dim: 3 },
            CatalogField::RandomSmooth { seed: 1, dim: 2 },
        ] {
            let r = f.value_at(&[0.1, 0.9, -0.4]);
            assert!(RotationMatrix::validate(&r).is_ok());
        }
    }

    #[test]
    fn unknown_id_and_bad_grid_are_config_errors() {
        assert!(matches!(
            CatalogField::from_id("nope", &json!({})),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            CatalogField::from_id("f_eps", &json!({"epsilon": 1.0})),
            Err(Error::Config(_))
        ));
        let g = make_grid(&[0.0; 3], &[1.0; 3], 0.25, Mask::FullBox).unwrap();
        assert!(matches!(
            CatalogField::FEps { eps: 0.1 }.sample(&g),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn constant_rotation_parses_from_rows() {
        let f = CatalogField::from_id(
            "constant_rotation",
            &json!({"rotation": [[0.0, -1.0], [1.0, 0.0]]}),
        )
        .unwrap();
        assert_eq!(f.dim(), 2);
        assert!(CatalogField::from_id(
            "constant_rotation",
            &json!({"rotation": [[2.0, 0.0], [0.0, 1.0]]})
        )
        .is_err());
    }
}
