use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// An open axis-aligned box `(lo, hi)` in 2 or 3 dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let b = Self {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.len() == 2 || self.lo.len() == 3) || self.lo.len() != self.hi.len() {
            return config("box region needs 2 or 3 matching bounds");
        }
        if self
            .lo
            .iter()
            .zip(&self.hi)
            .any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b))
        {
            return config("box region bounds must be finite with lo < hi");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn min_side(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Lattice points `i ∈ δZⁿ` whose doubled cube `i + (-δ, δ)ⁿ` lies in the box,
/// in lexicographic order (first axis most significant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeCover {
    pub region: BoxRegion,
    pub delta: f64,
    /// Integer lattice coordinates `k` with center `kδ`; unused axes are 0.
    pub lattice: Vec<[i64; 3]>,
    /// Unordered neighbor pairs `(a, b)`, `a < b`, centers one lattice step apart.
    pub neighbors: Vec<(usize, usize)>,
}

const SNAP: f64 = 1e-9;

/// Enumerates the cover of `region` at spacing `delta`.
///
/// Containment of the open doubled cube in the open box is
/// `kδ - δ ≥ lo` and `kδ + δ ≤ hi` per axis, up to a relative slack of 1e-9.
pub fn cube_cover(region: &BoxRegion, delta: f64) -> Result<CubeCover> {
    region.validate()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return config("delta must be positive");
    }
    if delta > 0.5 * region.min_side() * (1.0 + SNAP) {
        return config(format!(
            "delta {delta} exceeds half the smallest side of the region"
        ));
    }
    let dim = region.dim();
    let mut ranges = [(0i64, 0i64); 3];
    for a in 0..dim {
        let kmin = ((region.lo[a] + delta) / delta - SNAP).ceil() as i64;
        let kmax = ((region.hi[a] - delta) / delta + SNAP).floor() as i64;
        if kmax < kmin {
            return config("cube cover is empty");
        }
        ranges[a] = (kmin, kmax);
    }
    let mut lattice = Vec::new();
    for k0 in ranges[0].0..=ranges[0].1 {
        for k1 in ranges[1].0..=ranges[1].1 {
            for k2 in ranges[2].0..=ranges[2].1 {
                lattice.push([k0, k1, k2]);
            }
        }
    }
    let extent: [i64; 3] = std::array::from_fn(|a| ranges[a].1 - ranges[a].0 + 1);
    let flat = |k: &[i64; 3]| {
        (((k[0] - ranges[0].0) * extent[1] + (k[1] - ranges[1].0)) * extent[2]
            + (k[2] - ranges[2].0)) as usize
    };
    let mut neighbors = Vec::new();
    for (a, k) in lattice.iter().enumerate() {
        for axis in 0..dim {
            if k[axis] < ranges[axis].1 {
                let mut next = *k;
                next[axis] += 1;
                neighbors.push((a, flat(&next)));
            }
        }
    }
    neighbors.sort_unstable();
    Ok(CubeCover {
        region: region.clone(),
        delta,
        lattice,
        neighbors,
    })
}

impl CubeCover {
    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn center(&self, i: usize) -> [f64; 3] {
        let k = self.lattice[i];
        let mut c = [0.0; 3];
        for a in 0..self.dim() {
            c[a] = k[a] as f64 * self.delta;
        }
        c
    }

    pub fn centers(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.center(i)).collect()
    }

    /// Whether `x` lies in the half-open small cube `i + [-δ/2, δ/2)ⁿ`.
    pub fn in_small_cube(&self, i: usize, x: &[f64; 3]) -> bool {
        let c = self.center(i);
        (0..self.dim()).all(|a| {
            let t = (x[a] - c[a]) / self.delta + 0.5;
            t >= -SNAP && t < 1.0 - SNAP
        })
    }

    /// Whether `x` lies in the open doubled cube `i + (-δ, δ)ⁿ`.
    pub fn in_doubled_cube(&self, i: usize, x: &[f64; 3]) -> bool {
        let c = self.center(i);
        (0..self.dim()).all(|a| ((x[a] - c[a]) / self.delta).abs() < 1.0 - SNAP)
    }

    /// Index of the small cube containing `x`, if any.
    pub fn small_cube_of(&self, x: &[f64; 3]) -> Option<usize> {
        let mut k = [0i64; 3];
        for a in 0..self.dim() {
            k[a] = (x[a] / self.delta + 0.5 + SNAP).floor() as i64;
        }
        let i = self.lattice.binary_search(&k).ok()?;
        self.in_small_cube(i, x).then_some(i)
    }

    /// `H^{n-1}` measure of one shared face.
    pub fn face_area(&self) -> f64 {
        self.delta.powi(self.dim() as i32 - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_quarter() {
        let c = cube_cover(&BoxRegion::unit(2), 0.25).unwrap();
        assert_eq!(c.len(), 9);
        assert_eq!(c.center(0), [0.25, 0.25, 0.0]);
        assert_eq!(c.center(8), [0.75, 0.75, 0.0]);
        assert_eq!(c.neighbors.len(), 12);
    }

    #[test]
    fn unit_square_half_and_too_large() {
        let c = cube_cover(&BoxRegion::unit(2), 0.5).unwrap();
        assert_eq!(c.centers(), vec![[0.5, 0.5, 0.0]]);
        assert!(cube_cover(&BoxRegion::unit(2), 0.6).is_err());
    }

    #[test]
    fn small_cube_lookup_is_half_open() {
        let c = cube_cover(&BoxRegion::unit(2), 0.25).unwrap();
        assert_eq!(c.small_cube_of(&[0.375, 0.25, 0.0]), Some(3));
        assert_eq!(c.small_cube_of(&[0.3749, 0.25, 0.0]), Some(0));
        assert_eq!(c.small_cube_of(&[0.875, 0.5, 0.0]), None);
    }
}
