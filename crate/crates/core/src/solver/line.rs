//! One-dimensional self-gravitating packets with a softened kernel.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{dirichlet_laplacian, NonlinearityUpdate, Scheme, SolverConfig, SpectralAxis, TridiagonalCn};
use crate::error::{Result, SnError};
use crate::grid::{Axis, GridSpec, WaveField};

/// `V(z) = -g * sum_j h rho_j / sqrt((z - z_j)^2 + a^2)`, evaluated as a zero-padded FFT
/// convolution.
#[derive(Clone)]
pub struct SoftenedKernel {
    a: f64,
    n: usize,
    h: f64,
    m: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SoftenedKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SoftenedKernel").field("a", &self.a).field("n", &self.n).finish()
    }
}

/// Default softening length in units of the packet width.
pub const DEFAULT_SOFTENING: f64 = 0.5;

/// `1 / sqrt(x^2 + a^2)`.
pub fn softened(x: f64, a: f64) -> f64 {
    1.0 / x.hypot(a)
}

impl SoftenedKernel {
    pub fn new(z: Axis, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(SnError::InvalidParameter { field: "softening", reason: format!("must be > 0, got {a}") });
        }
        let n = z.n;
        let m = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); m];
        for d in 0..n {
            let k = softened(d as f64 * z.step, a) * z.step / m as f64;
            spectrum[d] = Complex64::new(k, 0.0);
            if d > 0 {
                spectrum[m - d] = Complex64::new(k, 0.0);
            }
        }
        forward.process(&mut spectrum);
        Ok(Self { a, n, h: z.step, m, spectrum, forward, inverse })
    }

    pub fn softening(&self) -> f64 {
        self.a
    }

    /// Grid spacing the kernel was tabulated for.
    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn potential(&self, density: &[f64], g: f64) -> Result<Vec<f64>> {
        if density.len() != self.n {
            return Err(SnError::Precondition(format!("density has {} nodes, kernel {}", density.len(), self.n)));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        for (b, &r) in buf.iter_mut().zip(density) {
            b.re = r;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.spectrum) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        Ok(buf[..self.n].iter().map(|v| -g * v.re).collect())
    }
}

/// Strang propagator for `i psi_t = -psi_zz + V psi` on a line.
#[derive(Clone)]
pub struct LineSolver {
    z: Axis,
    g: f64,
    cfg: SolverConfig,
    c: Complex64,
    kernel: Option<SoftenedKernel>,
    spectral: Option<SpectralAxis>,
    cn: Option<TridiagonalCn>,
}

impl std::fmt::Debug for LineSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LineSolver").field("z", &self.z).field("g", &self.g).field("kernel", &self.kernel).finish()
    }
}

impl LineSolver {
    pub fn new(grid: &GridSpec, g: f64, softening: f64, cfg: SolverConfig) -> Result<Self> {
        let z = match *grid {
            GridSpec::Line { z } => z,
            _ => return Err(SnError::Precondition("expected a line grid".into())),
        };
        cfg.validate_for(grid)?;
        if !(g.is_finite() && g >= 0.0) {
            return Err(SnError::InvalidParameter { field: "coupling", reason: format!("must be >= 0, got {g}") });
        }
        let c = Complex64::new(0.0, 0.5 * cfg.dt);
        let kernel = if g > 0.0 { Some(SoftenedKernel::new(z, softening)?) } else { None };
        let (spectral, cn) = match cfg.scheme {
            Scheme::SplitOperator => (Some(SpectralAxis::new(z, c)), None),
            Scheme::CrankNicolson => {
                let (l, d, u) = dirichlet_laplacian(z.n, z.step);
                (None, Some(TridiagonalCn::new(l, d, u, c)))
            }
        };
        Ok(Self { z, g, cfg, c, kernel, spectral, cn })
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::Line { z: self.z }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Potential sourced by `density` (zero for `g = 0`).
    pub fn potential(&self, density: &[f64]) -> Result<Vec<f64>> {
        match &self.kernel {
            None => Ok(vec![0.0; density.len()]),
            Some(k) => k.potential(density, self.g),
        }
    }

    /// `psi <- exp(-i V dt / 2) psi`.
    pub fn half_potential(&self, psi: &mut [Complex64], v: &[f64]) {
        if self.kernel.is_none() {
            return;
        }
        for (p, &vv) in psi.iter_mut().zip(v) {
            *p *= (-self.c * vv).exp();
        }
    }

    /// Full kinetic step.
    pub fn kinetic(&self, psi: &mut [Complex64]) {
        if let Some(sp) = &self.spectral {
            sp.apply_rows(psi);
        } else if let Some(cn) = &self.cn {
            let mut scratch = Vec::new();
            cn.apply(psi, 1, &mut scratch);
        }
    }

    /// One step of the pure-state equation, each field feeling its own density.
    pub fn step(&self, psi: &mut WaveField) -> Result<()> {
        let v = self.potential(&psi.density())?;
        let data = psi.data_mut();
        self.half_potential(data, &v);
        self.kinetic(data);
        match self.cfg.nonlinearity {
            NonlinearityUpdate::PerStep => self.half_potential(data, &v),
            NonlinearityUpdate::PredictorCorrector => {
                let rho: Vec<f64> = data.iter().map(|c| c.norm_sqr()).collect();
                let v_b = self.potential(&rho)?;
                self.half_potential(data, &v_b);
            }
        }
        Ok(())
    }
}
