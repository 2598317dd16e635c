//! Effective single-particle equation on the axisymmetric `(s, z)` grid.

use num_complex::Complex64;

use super::{
    check_boundary, edge_distance, mask_profile, radial_laplacian, dirichlet_laplacian, Diagnostics,
    NonlinearityUpdate, Scheme, SolverConfig, SpectralAxis, TridiagonalCn,
};
use crate::error::{Result, SnError};
use crate::fields::{EffectivePotential, DEFAULT_KERNEL_BUDGET};
use crate::grid::{Axis, GridSpec, WaveField};
use crate::params::PhysicalParams;

/// Strang-split propagator `V/2 - K - V/2` for `i psi_t = -laplacian psi + V[|psi|^2] psi`.
pub struct CylinderSolver {
    s: Axis,
    z: Axis,
    g: f64,
    cfg: SolverConfig,
    /// Half-step exponent: the potential factor is `exp(-c V)`.
    c: Complex64,
    potential: Option<EffectivePotential>,
    radial: TridiagonalCn,
    z_spectral: Option<SpectralAxis>,
    z_cn: Option<TridiagonalCn>,
    mask: Option<Vec<f64>>,
    cached_v: Option<Vec<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for CylinderSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CylinderSolver").field("s", &self.s).field("z", &self.z).field("g", &self.g).finish()
    }
}

fn cylinder_axes(grid: &GridSpec) -> Result<(Axis, Axis)> {
    match *grid {
        GridSpec::Cylinder { s, z } => Ok((s, z)),
        _ => Err(SnError::Precondition("expected a cylinder grid".into())),
    }
}

impl CylinderSolver {
    /// Real-time solver. `separation = None` evolves an isolated packet; `g = 0` skips the
    /// potential entirely.
    pub fn new(grid: &GridSpec, g: f64, separation: Option<f64>, cfg: SolverConfig) -> Result<Self> {
        cfg.validate_for(grid)?;
        Self::build(grid, g, separation, cfg, Complex64::new(0.0, 0.5 * cfg.dt))
    }

    fn build(grid: &GridSpec, g: f64, separation: Option<f64>, cfg: SolverConfig, c: Complex64) -> Result<Self> {
        let (s, z) = cylinder_axes(grid)?;
        if !(g.is_finite() && g >= 0.0) {
            return Err(SnError::InvalidParameter { field: "coupling", reason: format!("must be >= 0, got {g}") });
        }
        let potential = if g > 0.0 { Some(EffectivePotential::new(grid, separation, DEFAULT_KERNEL_BUDGET)?) } else { None };
        let (l, d, u) = radial_laplacian(s);
        let radial = TridiagonalCn::new(l, d, u, c);
        let (z_spectral, z_cn) = match cfg.scheme {
            Scheme::SplitOperator => (Some(SpectralAxis::new(z, c)), None),
            Scheme::CrankNicolson => {
                let (l, d, u) = dirichlet_laplacian(z.n, z.step);
                (None, Some(TridiagonalCn::new(l, d, u, c)))
            }
        };
        let mask = cfg.absorbing.map(|layer| {
            let mut m = Vec::with_capacity(s.n * z.n);
            for i in 0..s.n {
                let ds = (s.n as f64 - 0.5 - i as f64) * s.step;
                let ms = mask_profile(ds, layer.width);
                m.extend((0..z.n).map(|k| ms * mask_profile(edge_distance(z, k), layer.width)));
            }
            m
        });
        Ok(Self { s, z, g, cfg, c, potential, radial, z_spectral, z_cn, mask, cached_v: None, scratch: Vec::new() })
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::Cylinder { s: self.s, z: self.z }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn coupling(&self) -> f64 {
        self.g
    }

    pub fn effective_potential(&self) -> Option<&EffectivePotential> {
        self.potential.as_ref()
    }

    /// Potential of the current density (zero when `g = 0`).
    pub fn potential_of(&self, psi: &[Complex64]) -> Result<Vec<f64>> {
        let rho: Vec<f64> = psi.iter().map(|v| v.norm_sqr()).collect();
        self.potential_from_density(&rho)
    }

    pub fn potential_from_density(&self, rho: &[f64]) -> Result<Vec<f64>> {
        match &self.potential {
            None => Ok(vec![0.0; rho.len()]),
            Some(op) => op.potential_from_density(rho, self.g),
        }
    }

    pub(crate) fn apply_potential(&self, psi: &mut [Complex64], v: &[f64]) {
        if self.potential.is_none() {
            return;
        }
        for (p, &vv) in psi.iter_mut().zip(v) {
            *p *= (-self.c * vv).exp();
        }
    }

    pub(crate) fn apply_kinetic(&mut self, psi: &mut [Complex64]) {
        let nz = self.z.n;
        self.radial.apply(psi, nz, &mut self.scratch);
        if let Some(sp) = &self.z_spectral {
            sp.apply_rows(psi);
        } else if let Some(cn) = &self.z_cn {
            for row in psi.chunks_exact_mut(nz) {
                cn.apply(row, 1, &mut self.scratch);
            }
        }
    }

    /// One Strang step.
    pub fn step(&mut self, psi: &mut WaveField) -> Result<()> {
        if *psi.grid() != self.grid() {
            return Err(SnError::Precondition("field grid differs from the solver grid".into()));
        }
        let v_a = match self.cached_v.take() {
            Some(v) => v,
            None => self.potential_of(psi.data())?,
        };
        let data = psi.data_mut();
        self.apply_potential(data, &v_a);
        self.apply_kinetic(data);
        match self.cfg.nonlinearity {
            NonlinearityUpdate::PerStep => self.apply_potential(data, &v_a),
            NonlinearityUpdate::PredictorCorrector => {
                let v_b = self.potential_of(data)?;
                self.apply_potential(data, &v_b);
                // The closing phase leaves |psi|^2 unchanged, so v_b opens the next step.
                if self.mask.is_none() {
                    self.cached_v = Some(v_b);
                }
            }
        }
        if let Some(m) = &self.mask {
            for (p, w) in data.iter_mut().zip(m) {
                *p *= w;
            }
        }
        if data.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(SnError::Runtime("non-finite amplitude after step".into()));
        }
        Ok(())
    }

    /// Observables at time `t`, including both kinetic-energy rates for the current potential.
    pub fn diagnostics(&self, psi: &WaveField, t: f64) -> Result<Diagnostics> {
        let v = self.potential_of(psi.data())?;
        let (direct, continuity) = rates(self.s, self.z, psi.data(), &v);
        Ok(observables(self.s, self.z, psi, t, direct, continuity))
    }

    /// Advances `psi` by `cfg.n_steps`, sampling diagnostics every `cfg.sample_every` steps.
    pub fn run(&mut self, mut psi: WaveField, keep_snapshots: bool) -> Result<Trajectory> {
        let dt = self.cfg.dt;
        let mut out = Trajectory {
            diagnostics: vec![self.diagnostics(&psi, 0.0)?],
            snapshots: Vec::new(),
            final_state: psi.clone(),
            max_norm_drift: 0.0,
            boundary_warning: false,
        };
        if keep_snapshots {
            out.snapshots.push((0.0, psi.clone()));
        }
        let mut norm = psi.norm_sqr();
        let mut warned = false;
        if self.mask.is_none() {
            check_boundary(psi.boundary_ratio(), 0.0, &mut warned)?;
        }
        for n in 1..=self.cfg.n_steps {
            self.step(&mut psi)?;
            let t = n as f64 * dt;
            let sample = n % self.cfg.sample_every == 0 || n == self.cfg.n_steps;
            if self.mask.is_none() {
                let new_norm = psi.norm_sqr();
                out.max_norm_drift = out.max_norm_drift.max((new_norm - norm).abs());
                norm = new_norm;
                if sample {
                    check_boundary(psi.boundary_ratio(), t, &mut warned)?;
                }
            }
            if sample {
                out.diagnostics.push(self.diagnostics(&psi, t)?);
                if keep_snapshots {
                    out.snapshots.push((t, psi.clone()));
                }
            }
        }
        out.boundary_warning = warned;
        out.final_state = psi;
        Ok(out)
    }
}

/// Result of a cylinder run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub diagnostics: Vec<Diagnostics>,
    pub snapshots: Vec<(f64, WaveField)>,
    pub final_state: WaveField,
    /// Largest change of `||psi||^2` over a single step.
    pub max_norm_drift: f64,
    pub boundary_warning: bool,
}

/// Evolves a packet under the decoupled effective equation (coupling `g`, partner at
/// `z = -separation`).
pub fn evolve_effective(
    psi0: WaveField,
    g: f64,
    separation: Option<f64>,
    cfg: SolverConfig,
    keep_snapshots: bool,
) -> Result<Trajectory> {
    psi0.check_normalized(1e-8)?;
    let mut solver = CylinderSolver::new(psi0.grid(), g, separation, cfg)?;
    solver.run(psi0, keep_snapshots)
}

/// Imaginary-time relaxation towards the lowest stationary state, renormalizing every
/// step. Stops when the `L^2` change per step falls below `tol * dtau`.
///
/// The potential is taken from the normalized state at the start of each step: a
/// mid-step density has decayed in imaginary time and would bias the fixed point.
pub fn relax_ground_state(
    psi0: WaveField,
    g: f64,
    separation: Option<f64>,
    dtau: f64,
    max_steps: usize,
    tol: f64,
) -> Result<(WaveField, usize)> {
    let cfg = SolverConfig::new(dtau, max_steps).with_nonlinearity(NonlinearityUpdate::PerStep);
    cfg.validate_for(psi0.grid())?;
    let mut solver = CylinderSolver::build(psi0.grid(), g, separation, cfg, Complex64::new(0.5 * dtau, 0.0))?;
    let mut psi = psi0;
    for n in 1..=max_steps {
        let prev = psi.clone();
        solver.cached_v = None;
        solver.step(&mut psi)?;
        psi.normalize()?;
        if psi.distance(&prev)? < tol * dtau {
            return Ok((psi, n));
        }
    }
    Err(SnError::Runtime(format!("imaginary-time relaxation did not converge in {max_steps} steps")))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Outer {
    /// Field vanishes one cell beyond the last node.
    Zero,
    /// Linear extrapolation beyond the last node.
    Linear,
}

/// Central difference along `s` with the mirror image `f(-s) = f(s)` at the axis.
fn d_s<T>(f: &[T], s: Axis, nz: usize, i: usize, k: usize, outer: Outer) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let here = f[i * nz + k];
    let lo = if i == 0 { here } else { f[(i - 1) * nz + k] };
    if i + 1 < s.n {
        (f[(i + 1) * nz + k] - lo) * (0.5 / s.step)
    } else {
        match outer {
            Outer::Zero => (here * 0.0 - lo) * (0.5 / s.step),
            Outer::Linear => (here - lo) * (1.0 / s.step),
        }
    }
}

fn d_z<T>(f: &[T], z: Axis, k_row: usize, k: usize, outer: Outer) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let nz = z.n;
    let row = &f[k_row * nz..(k_row + 1) * nz];
    let here = row[k];
    match (k == 0, k + 1 == nz) {
        (false, false) => (row[k + 1] - row[k - 1]) * (0.5 / z.step),
        (true, _) => match outer {
            Outer::Zero => row[k + 1] * (0.5 / z.step),
            Outer::Linear => (row[k + 1] - here) * (1.0 / z.step),
        },
        (_, true) => match outer {
            Outer::Zero => (here * 0.0 - row[k - 1]) * (0.5 / z.step),
            Outer::Linear => (here - row[k - 1]) * (1.0 / z.step),
        },
    }
}

/// Discrete Laplacian used by the continuity form: radial operator of the propagator plus
/// the 3-point stencil in `z` with zero ghosts.
fn laplacian(psi: &[Complex64], s: Axis, z: Axis) -> Vec<Complex64> {
    let (l, d, u) = radial_laplacian(s);
    let nz = z.n;
    let hz2 = 1.0 / (z.step * z.step);
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for i in 0..s.n {
        for k in 0..nz {
            let idx = i * nz + k;
            let mut v = psi[idx] * d[i];
            if i > 0 {
                v += psi[idx - nz] * l[i];
            }
            if i + 1 < s.n {
                v += psi[idx + nz] * u[i];
            }
            let left = if k > 0 { psi[idx - 1] } else { Complex64::new(0.0, 0.0) };
            let right = if k + 1 < nz { psi[idx + 1] } else { Complex64::new(0.0, 0.0) };
            v += (left + right - psi[idx] * 2.0) * hz2;
            out[idx] = v;
        }
    }
    out
}

fn cell_weights(s: Axis, z: Axis) -> Vec<f64> {
    GridSpec::Cylinder { s, z }.weights()
}

/// `(-int j . grad V, int 2 Im(psi* lap psi) V)` with `j = 2 Im(psi* grad psi)`.
fn rates(s: Axis, z: Axis, psi: &[Complex64], v: &[f64]) -> (f64, f64) {
    let nz = z.n;
    let w = cell_weights(s, z);
    let lap = laplacian(psi, s, z);
    let mut direct = 0.0;
    let mut continuity = 0.0;
    for i in 0..s.n {
        for k in 0..nz {
            let idx = i * nz + k;
            let p = psi[idx].conj();
            let js = 2.0 * (p * d_s(psi, s, nz, i, k, Outer::Zero)).im;
            let jz = 2.0 * (p * d_z(psi, z, i, k, Outer::Zero)).im;
            let gs = d_s(v, s, nz, i, k, Outer::Linear);
            let gz = d_z(v, z, i, k, Outer::Linear);
            direct -= w[idx] * (js * gs + jz * gz);
            continuity += w[idx] * 2.0 * (p * lap[idx]).im * v[idx];
        }
    }
    (direct, continuity)
}

fn observables(s: Axis, z: Axis, psi: &WaveField, t: f64, direct: f64, continuity: f64) -> Diagnostics {
    let nz = z.n;
    let data = psi.data();
    let w = cell_weights(s, z);
    let (mut norm, mut mz, mut mz2, mut ms2, mut pz, mut kin) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let hs2 = 1.0 / (s.step * s.step);
    let hz2 = 1.0 / (z.step * z.step);
    for i in 0..s.n {
        let si = s.coord(i);
        // s_{i+1/2} / s_i converts the cell weight to the flux weight of the next interface
        let flux = (i + 1) as f64 * s.step / si;
        for k in 0..nz {
            let idx = i * nz + k;
            let rho = data[idx].norm_sqr();
            let zk = z.coord(k);
            norm += w[idx] * rho;
            mz += w[idx] * rho * zk;
            mz2 += w[idx] * rho * zk * zk;
            ms2 += w[idx] * rho * si * si;
            pz += w[idx] * (data[idx].conj() * d_z(data, z, i, k, Outer::Zero)).im;
            let next_s = if i + 1 < s.n { data[idx + nz] } else { Complex64::new(0.0, 0.0) };
            kin += w[idx] * flux * (next_s - data[idx]).norm_sqr() * hs2;
            let next_z = if k + 1 < nz { data[idx + 1] } else { Complex64::new(0.0, 0.0) };
            kin += w[idx] * (next_z - data[idx]).norm_sqr() * hz2;
            if k == 0 {
                kin += w[idx] * rho * hz2;
            }
        }
    }
    let mean_z = mz / norm;
    Diagnostics {
        t,
        norm,
        mean_z,
        mean_pz: pz,
        width_z: (mz2 / norm - mean_z * mean_z).max(0.0).sqrt(),
        width_s: (0.5 * ms2 / norm).sqrt(),
        kinetic_energy: kin,
        dt_dt_direct: direct,
        dt_dt_continuity: continuity,
        boundary_ratio: psi.boundary_ratio(),
    }
}

/// Both discretized kinetic-energy rates for a field and a potential on its grid.
pub fn kinetic_energy_rate(psi: &WaveField, v: &[f64]) -> Result<(f64, f64)> {
    let (s, z) = cylinder_axes(psi.grid())?;
    if v.len() != psi.data().len() {
        return Err(SnError::Precondition("potential and field sizes differ".into()));
    }
    Ok(rates(s, z, psi.data(), v))
}

/// Mean force along `z` on the packet (PDE units), split into the partner term and the
/// self-interaction term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhrenfestForce {
    pub mutual: f64,
    pub self_term: f64,
}

/// `F_z = -int |psi|^2 dV/dz` for the two parts of the effective potential.
pub fn ehrenfest_force(psi: &WaveField, op: &EffectivePotential, g: f64) -> Result<EhrenfestForce> {
    if *psi.grid() != op.grid() {
        return Err(SnError::Precondition("field grid differs from the kernel grid".into()));
    }
    psi.check_normalized(1e-8)?;
    let (s, z) = cylinder_axes(psi.grid())?;
    let rho = psi.density();
    let w = psi.grid().weights();
    let force = |contrib: Vec<f64>| -> f64 {
        let v: Vec<f64> = contrib.into_iter().map(|x| -g * x).collect();
        let mut f = 0.0;
        for i in 0..s.n {
            for k in 0..z.n {
                let idx = i * z.n + k;
                f -= w[idx] * rho[idx] * d_z(&v, z, i, k, Outer::Linear);
            }
        }
        f
    };
    Ok(EhrenfestForce {
        mutual: force(op.contributions(&rho, false, true)?),
        self_term: force(op.contributions(&rho, true, false)?),
    })
}

/// Partner force [N] along `z` for a field on a grid in PDE units built from `params`
/// (length unit `sigma`, partner at `z = -L`). Negative values point towards the partner.
pub fn ehrenfest_force_si(psi: &WaveField, params: &PhysicalParams) -> Result<f64> {
    params.validate()?;
    let units = params.pde_units();
    if units.coupling == 0.0 {
        return Ok(0.0);
    }
    let op = EffectivePotential::new(psi.grid(), Some(params.separation / params.sigma), DEFAULT_KERNEL_BUDGET)?;
    Ok(ehrenfest_force(psi, &op, units.coupling)?.mutual * units.force())
}
