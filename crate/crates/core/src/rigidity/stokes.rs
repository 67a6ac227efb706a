use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Result};
use crate::fields::{multilinear_stencil, Grid, MatrixField, RowwiseCurl};
use crate::smallmat::{cross, norm, operator_norm, SquareMatrix};

fn default_points() -> usize {
    4096
}

/// A flat disk `{c + y : y ⊥ v, |y| < ρ}` and its boundary circle.
///
/// Planar fields use disks with `v = ±e₃` and `c₃ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSpec {
    pub center: [f64; 3],
    pub normal: [f64; 3],
    pub radius: f64,
    #[serde(default = "default_points")]
    pub quadrature_points: usize,
}

impl DiskSpec {
    pub fn new(center: [f64; 3], normal: [f64; 3], radius: f64) -> Result<Self> {
        let d = Self {
            center,
            normal,
            radius,
            quadrature_points: default_points(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_points(mut self, n: usize) -> Self {
        self.quadrature_points = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if (norm(&self.normal) - 1.0).abs() > 1e-12 {
            return config("disk normal must be a unit vector");
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return config("disk radius must be positive");
        }
        if self.quadrature_points < 3 {
            return config("disk needs at least 3 quadrature points");
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return config("disk center must be finite");
        }
        Ok(())
    }

    /// Orthonormal `(a, b)` spanning the disk plane with `a × b = v`.
    pub fn frame(&self) -> ([f64; 3], [f64; 3]) {
        let v = self.normal;
        let k = (0..3)
            .min_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()))
            .expect("three axes");
        let mut a = [0.0; 3];
        a[k] = 1.0;
        let dot = v[k];
        for i in 0..3 {
            a[i] -= dot * v[i];
        }
        let l = norm(&a);
        a.iter_mut().for_each(|x| *x /= l);
        (a, cross(&v, &a))
    }

    fn point(&self, r: f64, t: f64) -> [f64; 3] {
        let (a, b) = self.frame();
        let (s, c) = t.sin_cos();
        std::array::from_fn(|i| self.center[i] + r * (c * a[i] + s * b[i]))
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        self.validate()?;
        if grid.dim() == 2 && (self.normal[2].abs() != 1.0 || self.center[2] != 0.0) {
            return config("planar fields need a disk in the x₃ = 0 plane with normal ±e₃");
        }
        Ok(())
    }
}

/// `∮ R τ dH¹` over the boundary circle, positively oriented about the normal,
/// with `R` interpolated multilinearly and the periodic trapezoid rule.
/// Planar fields return `(·, ·, 0)`.
pub fn circulation(field: &MatrixField, disk: &DiskSpec) -> Result<[f64; 3]> {
    let grid = field.grid();
    let n = field.m();
    if n != grid.dim() {
        return contract("circulation needs a square field matching the grid dimension");
    }
    disk.check_grid(grid)?;
    let (a, b) = disk.frame();
    let count = disk.quadrature_points;
    let mut total = [0.0; 3];
    for k in 0..count {
        let t = 2.0 * PI * k as f64 / count as f64;
        let x = disk.point(disk.radius, t);
        if !grid.contains_point(&x) {
            return config(format!("circle leaves the grid mask at {x:?}"));
        }
        let (s, c) = t.sin_cos();
        let tau: [f64; 3] = std::array::from_fn(|i| -s * a[i] + c * b[i]);
        let m = field.interpolate(&x)?;
        for (i, out) in total.iter_mut().enumerate().take(n) {
            *out += (0..n).map(|j| m[(i, j)] * tau[j]).sum::<f64>();
        }
    }
    let ds = disk.radius * 2.0 * PI / count as f64;
    Ok(total.map(|v| v * ds))
}

fn interpolate_slices(curl: &RowwiseCurl, x: &[f64; 3]) -> Result<Vec<f64>> {
    let width = curl.node_slice(0).len();
    let mut out = vec![0.0; width];
    for (node, w) in multilinear_stencil(curl.grid(), x)?.iter().flatten() {
        for (o, v) in out.iter_mut().zip(curl.node_slice(*node)) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// `∫_disk (curl R) ν dA` for a rowwise curl, by the polar midpoint rule with
/// `quadrature_points` angles and `⌈√quadrature_points⌉` radii.
pub fn disk_flux(curl: &RowwiseCurl, disk: &DiskSpec) -> Result<[f64; 3]> {
    let grid = curl.grid();
    disk.check_grid(grid)?;
    let n_t = disk.quadrature_points;
    let n_r = (n_t as f64).sqrt().ceil() as usize;
    let dr = disk.radius / n_r as f64;
    let dt = 2.0 * PI / n_t as f64;
    let v = disk.normal;
    let mut total = [0.0; 3];
    for ir in 0..n_r {
        let r = (ir as f64 + 0.5) * dr;
        for it in 0..n_t {
            let x = disk.point(r, (it as f64 + 0.5) * dt);
            if !grid.contains_point(&x) {
                return config(format!("disk leaves the grid mask at {x:?}"));
            }
            let c = interpolate_slices(curl, &x)?;
            let w = r * dr * dt;
            match curl {
                RowwiseCurl::Planar(_) => {
                    for (i, out) in total.iter_mut().enumerate().take(2) {
                        *out += w * c[i] * v[2];
                    }
                }
                RowwiseCurl::Spatial(_) => {
                    for (i, out) in total.iter_mut().enumerate() {
                        *out += w * (0..3).map(|a| c[i * 3 + a] * v[a]).sum::<f64>();
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Outcome of the disk argument for a constant curl `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `πρ² αv`
    pub flux: [f64; 3],
    /// `πρ²|αv| - 2πρ`; positive means no rotation field with curl `α` exists on
    /// a domain containing the disk.
    pub margin: f64,
    pub certifies: bool,
    /// `2/|αv|`, absent when `αv = 0`.
    pub critical_radius: Option<f64>,
    /// `2/‖α‖_op`, the smallest critical radius over all normals.
    pub best_critical_radius: Option<f64>,
    /// `α = 0`: the argument can never certify.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub zero_curl: bool,
}

/// Flux of a constant curl through the disk and the resulting certificate.
///
/// `|∮Rτ| ≤ 2πρ` for any rotation field while Stokes gives `∮Rτ = πρ²αv`,
/// so `πρ²|αv| > 2πρ` is a contradiction.
pub fn flux_and_certificate(alpha: &SquareMatrix, disk: &DiskSpec) -> Result<Certificate> {
    if alpha.dim() != 3 {
        return contract("flux_and_certificate needs a 3x3 curl");
    }
    disk.validate()?;
    let area = PI * disk.radius * disk.radius;
    let av = alpha.mat_vec(&disk.normal);
    let s = norm(&av);
    let op = operator_norm(alpha);
    let margin = area * s - 2.0 * PI * disk.radius;
    Ok(Certificate {
        flux: [area * av[0], area * av[1], area * av[2]],
        margin,
        certifies: margin > 0.0,
        critical_radius: (s > 0.0).then(|| 2.0 / s),
        best_critical_radius: (op > 0.0).then(|| 2.0 / op),
        zero_curl: alpha.max_abs() == 0.0,
    })
}
