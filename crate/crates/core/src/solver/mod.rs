//! Split-step integrators for the Schrödinger–Newton equations (PDE units: `hbar = 1`,
//! `2 m = 1`, so `i d psi/dt = -laplacian psi + V psi`).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnError};
use crate::grid::{Axis, GridSpec};

pub mod bipartite;
pub mod cylinder;
pub mod line;

pub use bipartite::{evolve_bipartite_1d, BipartiteKernel, BipartiteReport, BipartiteSample};
pub use cylinder::{
    ehrenfest_force, ehrenfest_force_si, evolve_effective, kinetic_energy_rate, relax_ground_state, CylinderSolver,
    EhrenfestForce, Trajectory,
};
pub use line::{LineSolver, SoftenedKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Spectral step along `z` (periodic), Crank–Nicolson along `s`.
    #[default]
    SplitOperator,
    /// Crank–Nicolson along every axis (Dirichlet ends).
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityUpdate {
    /// One potential per step, built from the density at the start of the step.
    #[default]
    PerStep,
    /// The closing potential half-step uses the density after the kinetic step.
    PredictorCorrector,
}

/// Damping layer along the open boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingLayer {
    /// Layer thickness in PDE length units.
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Time step in PDE time units.
    pub dt: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    pub nonlinearity: NonlinearityUpdate,
    pub absorbing: Option<AbsorbingLayer>,
    /// Diagnostics are recorded every this many steps (and at the end).
    pub sample_every: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            n_steps,
            scheme: Scheme::SplitOperator,
            nonlinearity: NonlinearityUpdate::PerStep,
            absorbing: None,
            sample_every: n_steps.max(1),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_nonlinearity(mut self, update: NonlinearityUpdate) -> Self {
        self.nonlinearity = update;
        self
    }

    pub fn with_sample_every(mut self, every: usize) -> Self {
        self.sample_every = every.max(1);
        self
    }

    pub fn with_absorbing(mut self, width: f64) -> Self {
        self.absorbing = Some(AbsorbingLayer { width });
        self
    }

    /// Checks `dt > 0` and `dt * E_max < 0.5` for the grid's largest kinetic eigenvalue.
    pub fn validate_for(&self, grid: &GridSpec) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SnError::Stability(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.sample_every == 0 {
            return Err(SnError::Stability("sample_every must be >= 1".into()));
        }
        if let Some(layer) = self.absorbing {
            if !(layer.width.is_finite() && layer.width > 0.0) {
                return Err(SnError::Stability(format!("absorbing width must be > 0, got {}", layer.width)));
            }
        }
        let e_max = max_kinetic_eigenvalue(grid, self.scheme);
        if self.dt * e_max >= 0.5 {
            return Err(SnError::Stability(format!(
                "dt * E_max = {:.3} >= 0.5 (dt = {}, E_max = {:.3e}); reduce dt below {:.3e}",
                self.dt * e_max,
                self.dt,
                e_max,
                0.5 / e_max
            )));
        }
        Ok(())
    }
}

fn axis_eigen_bound(a: Axis, scheme: Scheme, radial: bool) -> f64 {
    if radial || scheme == Scheme::CrankNicolson {
        4.0 / (a.step * a.step)
    } else {
        (std::f64::consts::PI / a.step).powi(2)
    }
}

/// Upper bound of the discrete `-laplacian` spectrum (Gershgorin for finite differences,
/// Nyquist for spectral axes).
pub fn max_kinetic_eigenvalue(grid: &GridSpec, scheme: Scheme) -> f64 {
    match *grid {
        GridSpec::Line { z } => axis_eigen_bound(z, scheme, false),
        GridSpec::Cylinder { s, z } => axis_eigen_bound(s, scheme, true) + axis_eigen_bound(z, scheme, false),
        GridSpec::Plane { z1, z2 } => axis_eigen_bound(z1, scheme, false) + axis_eigen_bound(z2, scheme, false),
    }
}

/// Observables of one state (PDE units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub norm: f64,
    pub mean_z: f64,
    pub mean_pz: f64,
    /// Standard deviation of `z`.
    pub width_z: f64,
    /// `sqrt(<s^2> / 2)`, the per-axis transverse width (0 on a line).
    pub width_s: f64,
    pub kinetic_energy: f64,
    pub dt_dt_direct: f64,
    pub dt_dt_continuity: f64,
    pub boundary_ratio: f64,
}

/// Boundary density relative to the peak above which a warning is logged.
pub const BOUNDARY_WARN: f64 = 1e-6;
/// Boundary density relative to the peak at which a run is aborted.
pub const BOUNDARY_ABORT: f64 = 1e-3;

pub(crate) fn check_boundary(ratio: f64, t: f64, warned: &mut bool) -> Result<()> {
    if ratio >= BOUNDARY_ABORT {
        return Err(SnError::Runtime(format!(
            "boundary density reached {ratio:.3e} of the peak at t = {t}; enlarge the grid or enable absorbing boundaries"
        )));
    }
    if ratio > BOUNDARY_WARN && !*warned {
        log::warn!("boundary density {ratio:.3e} of the peak at t = {t}");
        *warned = true;
    }
    Ok(())
}

/// Spectral free propagation along one periodic axis: multiplies mode `k` by
/// `exp(-2 c k^2)`, so `c = i dt / 2` is a real-time step and `c = dtau / 2` an
/// imaginary-time step.
#[derive(Clone)]
pub(crate) struct SpectralAxis {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    factors: Vec<Complex64>,
}

impl SpectralAxis {
    pub(crate) fn new(axis: Axis, c: Complex64) -> Self {
        let n = axis.n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scale = 1.0 / n as f64;
        let factors = (0..n)
            .map(|m| {
                let k = wavenumber(m, n, axis.step);
                (-2.0 * c * k * k).exp() * scale
            })
            .collect();
        Self { n, forward, inverse, factors }
    }

    /// Applies the propagator to `buf.len() / n` contiguous rows.
    pub(crate) fn apply_rows(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.n, 0);
        self.forward.process(buf);
        for row in buf.chunks_exact_mut(self.n) {
            for (v, f) in row.iter_mut().zip(&self.factors) {
                *v *= f;
            }
        }
        self.inverse.process(buf);
    }
}

pub(crate) fn wavenumber(m: usize, n: usize, h: f64) -> f64 {
    let mm = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * std::f64::consts::PI * mm / (n as f64 * h)
}

/// Crank–Nicolson solver for `(I - c D) x = (I + c D) y` with a fixed tridiagonal `D`.
#[derive(Debug, Clone)]
pub(crate) struct TridiagonalCn {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    c: Complex64,
    c_prime: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl TridiagonalCn {
    /// `lower[i]` couples `i` to `i - 1`, `upper[i]` couples `i` to `i + 1`.
    pub(crate) fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>, c: Complex64) -> Self {
        let n = diag.len();
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        let one = Complex64::new(1.0, 0.0);
        for i in 0..n {
            let a = -c * lower[i];
            let b = one - c * diag[i];
            let cc = -c * upper[i];
            let m = if i == 0 { b } else { b - a * c_prime[i - 1] };
            inv_pivot[i] = one / m;
            c_prime[i] = cc * inv_pivot[i];
        }
        Self { lower, diag, upper, c, c_prime, inv_pivot }
    }

    /// `data` holds `n` rows of `width` interleaved independent systems (row `i`, column `k`
    /// at `i * width + k`).
    pub(crate) fn apply(&self, data: &mut [Complex64], width: usize, scratch: &mut Vec<Complex64>) {
        let n = self.diag.len();
        scratch.clear();
        scratch.resize(n * width, Complex64::new(0.0, 0.0));
        for i in 0..n {
            for k in 0..width {
                let mut lap = data[i * width + k] * self.diag[i];
                if i > 0 {
                    lap += data[(i - 1) * width + k] * self.lower[i];
                }
                if i + 1 < n {
                    lap += data[(i + 1) * width + k] * self.upper[i];
                }
                scratch[i * width + k] = data[i * width + k] + self.c * lap;
            }
        }
        // forward sweep
        for i in 0..n {
            let a = -self.c * self.lower[i];
            for k in 0..width {
                let prev = if i > 0 { scratch[(i - 1) * width + k] } else { Complex64::new(0.0, 0.0) };
                scratch[i * width + k] = (scratch[i * width + k] - a * prev) * self.inv_pivot[i];
            }
        }
        // back substitution
        for k in 0..width {
            data[(n - 1) * width + k] = scratch[(n - 1) * width + k];
        }
        for i in (0..n - 1).rev() {
            for k in 0..width {
                data[i * width + k] = scratch[i * width + k] - self.c_prime[i] * data[(i + 1) * width + k];
            }
        }
    }
}

/// Second-difference operator on a Dirichlet axis: `(1, -2, 1) / h^2`.
pub(crate) fn dirichlet_laplacian(n: usize, h: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = 1.0 / (h * h);
    let mut lower = vec![k; n];
    let mut upper = vec![k; n];
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    (lower, vec![-2.0 * k; n], upper)
}

/// Radial part of the Laplacian, `(1/s) d/ds (s d/ds)`, on the staggered axis with zero flux
/// through `s = 0` and a Dirichlet wall one cell beyond the outermost node.
pub(crate) fn radial_laplacian(s: Axis) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = s.n;
    let h2 = s.step * s.step;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let si = s.coord(i);
        let s_minus = i as f64 * s.step;
        let s_plus = (i + 1) as f64 * s.step;
        lower[i] = if i > 0 { s_minus / (si * h2) } else { 0.0 };
        upper[i] = if i + 1 < n { s_plus / (si * h2) } else { 0.0 };
        diag[i] = -(s_minus + s_plus) / (si * h2);
    }
    (lower, diag, upper)
}

/// `cos^(1/8)` damping profile, 1 in the interior and 0 on the boundary.
pub(crate) fn mask_profile(distance_to_edge: f64, width: f64) -> f64 {
    if distance_to_edge >= width {
        1.0
    } else {
        let x = (distance_to_edge / width).max(0.0);
        (0.5 * std::f64::consts::PI * x).sin().powf(0.125)
    }
}

/// Distance of node `i` to the nearer open end of a centred axis (half a cell beyond the
/// outer node).
pub(crate) fn edge_distance(a: Axis, i: usize) -> f64 {
    let lo = (i as f64 + 0.5) * a.step;
    let hi = (a.n as f64 - 0.5 - i as f64) * a.step;
    lo.min(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_check() {
        let g = GridSpec::line(128, 16.0).unwrap();
        let e = max_kinetic_eigenvalue(&g, Scheme::SplitOperator);
        assert!(SolverConfig::new(0.49 / e, 1).validate_for(&g).is_ok());
        assert!(matches!(SolverConfig::new(0.51 / e, 1).validate_for(&g), Err(SnError::Stability(_))));
        assert!(SolverConfig::new(-1.0, 1).validate_for(&g).is_err());
    }

    #[test]
    fn crank_nicolson_matches_dense_solve() {
        let (l, d, u) = dirichlet_laplacian(5, 0.5);
        let c = Complex64::new(0.0, 0.01);
        let cn = TridiagonalCn::new(l.clone(), d.clone(), u.clone(), c);
        let mut x: Vec<Complex64> = (0..5).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let y = x.clone();
        cn.apply(&mut x, 1, &mut Vec::new());
        // residual of (I - cD) x = (I + cD) y
        for i in 0..5 {
            let dx = |v: &[Complex64]| {
                let mut r = v[i] * d[i];
                if i > 0 {
                    r += v[i - 1] * l[i];
                }
                if i < 4 {
                    r += v[i + 1] * u[i];
                }
                r
            };
            let lhs = x[i] - c * dx(&x);
            let rhs = y[i] + c * dx(&y);
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn radial_operator_is_weighted_symmetric() {
        let s = Axis::radial(6, 3.0).unwrap();
        let (l, _, u) = radial_laplacian(s);
        for i in 0..5 {
            let a = s.coord(i) * u[i];
            let b = s.coord(i + 1) * l[i + 1];
            assert!((a - b).abs() < 1e-12);
        }
    }
}
