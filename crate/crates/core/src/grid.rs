//! Structured grids and complex wave fields on them.
//!
//! All PDE quantities are dimensionless (length `sigma`, time `2 m sigma^2 / hbar`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnError};

/// Uniform axis with nodes `origin + i * step`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub n: usize,
    pub origin: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(n: usize, origin: f64, step: f64) -> Result<Self> {
        if n < 2 {
            return Err(SnError::Precondition(format!("axis needs at least 2 points, got {n}")));
        }
        if !(step.is_finite() && step > 0.0 && origin.is_finite()) {
            return Err(SnError::Precondition(format!("bad axis step {step} / origin {origin}")));
        }
        Ok(Self { n, origin, step })
    }

    /// `n` cell-centred nodes covering `[-half_extent, half_extent]`.
    pub fn centered(n: usize, half_extent: f64) -> Result<Self> {
        let step = 2.0 * half_extent / n as f64;
        Self::new(n, -half_extent + 0.5 * step, step)
    }

    /// Staggered radial axis covering `(0, extent]`: `s_i = (i + 1/2) * step`.
    pub fn radial(n: usize, extent: f64) -> Result<Self> {
        let step = extent / n as f64;
        Self::new(n, 0.5 * step, step)
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Total covered length `n * step`.
    pub fn length(&self) -> f64 {
        self.n as f64 * self.step
    }
}

/// Geometry of a wave field. Data are stored row-major with the first named axis slowest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "snake_case")]
pub enum GridSpec {
    Line { z: Axis },
    Cylinder { s: Axis, z: Axis },
    Plane { z1: Axis, z2: Axis },
}

impl GridSpec {
    /// Cylinder grid with square cells: `s in (0, extent]`, `z in [-extent, extent]`.
    pub fn cylinder(ns: usize, nz: usize, s_extent: f64, z_half_extent: f64) -> Result<Self> {
        let s = Axis::radial(ns, s_extent)?;
        if s.origin.abs() - 0.5 * s.step > 1e-12 * s.step {
            return Err(SnError::Precondition("radial axis must be staggered".into()));
        }
        Ok(GridSpec::Cylinder { s, z: Axis::centered(nz, z_half_extent)? })
    }

    pub fn line(n: usize, half_extent: f64) -> Result<Self> {
        Ok(GridSpec::Line { z: Axis::centered(n, half_extent)? })
    }

    pub fn plane(n: usize, half_extent: f64) -> Result<Self> {
        let a = Axis::centered(n, half_extent)?;
        Ok(GridSpec::Plane { z1: a, z2: a })
    }

    pub fn shape(&self) -> (usize, usize) {
        match *self {
            GridSpec::Line { z } => (1, z.n),
            GridSpec::Cylinder { s, z } => (s.n, z.n),
            GridSpec::Plane { z1, z2 } => (z1.n, z2.n),
        }
    }

    pub fn len(&self) -> usize {
        let (a, b) = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn geometry_name(&self) -> &'static str {
        match self {
            GridSpec::Line { .. } => "line_z",
            GridSpec::Cylinder { .. } => "cylinder_sz",
            GridSpec::Plane { .. } => "plane_z1z2",
        }
    }

    /// Volume element of every node, so that `sum w |psi|^2 = 1` for a normalized field.
    pub fn weights(&self) -> Vec<f64> {
        match *self {
            GridSpec::Line { z } => vec![z.step; z.n],
            GridSpec::Plane { z1, z2 } => vec![z1.step * z2.step; z1.n * z2.n],
            GridSpec::Cylinder { s, z } => {
                let mut w = Vec::with_capacity(s.n * z.n);
                for i in 0..s.n {
                    let wi = 2.0 * std::f64::consts::PI * s.coord(i) * s.step * z.step;
                    w.extend(std::iter::repeat(wi).take(z.n));
                }
                w
            }
        }
    }

    /// Indices of the nodes on the open boundary (the cylinder axis is not a boundary).
    pub fn boundary_indices(&self) -> Vec<usize> {
        let (na, nb) = self.shape();
        let mut out = Vec::new();
        match self {
            GridSpec::Line { .. } => {
                out.push(0);
                out.push(nb - 1);
            }
            GridSpec::Cylinder { .. } => {
                for i in 0..na {
                    out.push(i * nb);
                    out.push(i * nb + nb - 1);
                }
                out.extend((na - 1) * nb..na * nb);
            }
            GridSpec::Plane { .. } => {
                for i in 0..na {
                    out.push(i * nb);
                    out.push(i * nb + nb - 1);
                }
                out.extend(0..nb);
                out.extend((na - 1) * nb..na * nb);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Complex amplitudes on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: GridSpec,
    data: Vec<Complex64>,
}

impl WaveField {
    pub fn new(grid: GridSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(SnError::Precondition(format!(
                "field has {} values, grid needs {}",
                data.len(),
                grid.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(SnError::Precondition(format!("non-finite amplitude at index {i}")));
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let (na, nb) = grid.shape();
        let mut data = Vec::with_capacity(na * nb);
        match grid {
            GridSpec::Line { z } => data.extend((0..nb).map(|k| f(0.0, z.coord(k)))),
            GridSpec::Cylinder { s: a, z: b } | GridSpec::Plane { z1: a, z2: b } => {
                for i in 0..na {
                    let x = a.coord(i);
                    data.extend((0..nb).map(|k| f(x, b.coord(k))));
                }
            }
        }
        Self::new(grid, data)
    }

    /// Isotropic 3D Gaussian of width `width` centred at `z = z0` on the axis, with an
    /// optional axial momentum `k0` and radial chirp `exp(i chirp r^2)`.
    pub fn gaussian_cylinder(grid: GridSpec, width: f64, z0: f64, k0: f64, chirp: f64) -> Result<Self> {
        if !matches!(grid, GridSpec::Cylinder { .. }) {
            return Err(SnError::Precondition("gaussian_cylinder needs a cylinder grid".into()));
        }
        let amp = (2.0 * std::f64::consts::PI * width * width).powf(-0.75);
        let mut f = Self::from_fn(grid, |s, z| {
            let r2 = s * s + (z - z0) * (z - z0);
            let phase = k0 * z + chirp * r2;
            Complex64::from_polar(amp * (-r2 / (4.0 * width * width)).exp(), phase)
        })?;
        f.normalize()?;
        Ok(f)
    }

    /// 1D Gaussian with `|psi|^2` of standard deviation `width`.
    pub fn gaussian_line(grid: GridSpec, width: f64, z0: f64, k0: f64) -> Result<Self> {
        if !matches!(grid, GridSpec::Line { .. }) {
            return Err(SnError::Precondition("gaussian_line needs a line grid".into()));
        }
        let mut f = Self::from_fn(grid, |_, z| {
            let d = z - z0;
            Complex64::from_polar((-d * d / (4.0 * width * width)).exp(), k0 * z)
        })?;
        f.normalize()?;
        Ok(f)
    }

    /// Product of two 1D Gaussians on the `(z1, z2)` plane.
    pub fn gaussian_product(grid: GridSpec, width: f64, c1: f64, c2: f64) -> Result<Self> {
        if !matches!(grid, GridSpec::Plane { .. }) {
            return Err(SnError::Precondition("gaussian_product needs a plane grid".into()));
        }
        let mut f = Self::from_fn(grid, |a, b| {
            let r2 = (a - c1).powi(2) + (b - c2).powi(2);
            Complex64::new((-r2 / (4.0 * width * width)).exp(), 0.0)
        })?;
        f.normalize()?;
        Ok(f)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// `|psi|^2` per node.
    pub fn density(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Discrete `L^2` norm squared.
    pub fn norm_sqr(&self) -> f64 {
        let w = self.grid.weights();
        self.data.iter().zip(&w).map(|(v, w)| v.norm_sqr() * w).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n.is_finite() && n > 0.0) {
            return Err(SnError::Precondition(format!("cannot normalize field with norm {n}")));
        }
        let k = 1.0 / n.sqrt();
        self.data.iter_mut().for_each(|v| *v *= k);
        Ok(())
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > tol {
            return Err(SnError::Precondition(format!("field is not normalized: norm^2 = {n}")));
        }
        Ok(())
    }

    /// Largest boundary density relative to the peak density.
    pub fn boundary_ratio(&self) -> f64 {
        let rho = self.density();
        let peak = rho.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let edge = self.grid.boundary_indices().into_iter().map(|i| rho[i]).fold(0.0, f64::max);
        edge / peak
    }

    /// Discrete inner product `sum w conj(self) other`.
    pub fn inner(&self, other: &WaveField) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(SnError::Precondition("fields live on different grids".into()));
        }
        let w = self.grid.weights();
        Ok(self.data.iter().zip(&other.data).zip(&w).map(|((a, b), w)| a.conj() * b * w).sum())
    }

    /// Discrete `L^2` distance.
    pub fn distance(&self, other: &WaveField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(SnError::Precondition("fields live on different grids".into()));
        }
        let w = self.grid.weights();
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .zip(&w)
            .map(|((a, b), w)| (a - b).norm_sqr() * w)
            .sum::<f64>()
            .sqrt())
    }
}
