//! Newtonian potentials sourced by probability densities.
//!
//! The `*_scaled` functions and [`EffectivePotential`] work in PDE units (length `sigma`,
//! energy `hbar^2 / (2 m sigma^2)`), where a Gaussian of width `sigma` has
//! `V(r) = -g erf(r / sqrt 2) / r` with `g = 2 G m^3 sigma / hbar^2`.

use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SnError};
use crate::grid::{Axis, GridSpec, WaveField};
use crate::params::PhysicalParams;
use crate::quadrature::gauss_legendre;
use crate::specfun::{elliptic_k_from_complement, erf_unchecked};

/// `erf(x) / x`, continuous at 0.
fn erf_over(x: f64) -> f64 {
    if x == 0.0 {
        FRAC_2_SQRT_PI
    } else {
        erf_unchecked(x) / x
    }
}

/// Potential energy [J] of a point mass in the field of a Gaussian mass cloud of width
/// `sigma`, at distance `r` [m] from its centre: `-(G m^2 / r) erf(r / (sigma sqrt 2))`.
pub fn erf_potential(r: f64, params: &PhysicalParams) -> f64 {
    let x = r / (params.sigma * SQRT_2);
    -params.g_newton * params.m * params.m / (params.sigma * SQRT_2) * erf_over(x)
}

/// [`erf_potential`] in PDE units.
pub fn erf_potential_scaled(r: f64, g: f64) -> f64 {
    -g / SQRT_2 * erf_over(r / SQRT_2)
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Initial-time one-body potentials of two Gaussian masses a distance `L` apart along `z`.
/// Each coordinate is measured from the initial mean position of its own particle.
#[derive(Debug, Clone, Copy)]
pub struct InitialPotentials {
    params: PhysicalParams,
}

impl InitialPotentials {
    /// `V_1(r_1) = V_11 + V_12`, with the partner sitting at `+L z`.
    pub fn v1(&self, r1: [f64; 3]) -> f64 {
        let l = self.params.separation;
        erf_potential(norm3(r1), &self.params)
            + erf_potential(norm3([r1[0], r1[1], r1[2] - l]), &self.params)
    }

    /// `V_2(r_2) = V_21 + V_22`, with the partner sitting at `-L z`.
    pub fn v2(&self, r2: [f64; 3]) -> f64 {
        let l = self.params.separation;
        erf_potential(norm3(r2), &self.params)
            + erf_potential(norm3([r2[0], r2[1], r2[2] + l]), &self.params)
    }
}

pub fn initial_hamiltonian_potentials(params: &PhysicalParams) -> Result<InitialPotentials> {
    params.validate()?;
    Ok(InitialPotentials { params: *params })
}

/// Initial-time potential felt by any one of `N` equal-width Gaussian masses (global frame).
#[derive(Debug, Clone)]
pub struct NParticlePotential {
    centers: Vec<[f64; 3]>,
    params: PhysicalParams,
}

impl NParticlePotential {
    pub fn at(&self, r: [f64; 3]) -> f64 {
        self.centers
            .iter()
            .map(|c| erf_potential(norm3([r[0] - c[0], r[1] - c[1], r[2] - c[2]]), &self.params))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

pub fn n_particle_initial_potential(centers: &[[f64; 3]], params: &PhysicalParams) -> Result<NParticlePotential> {
    params.validate()?;
    if centers.iter().flatten().any(|v| !v.is_finite()) {
        return Err(SnError::Domain("particle centres must be finite".into()));
    }
    Ok(NParticlePotential { centers: centers.to_vec(), params: *params })
}

/// Azimuthal integral of the Coulomb kernel between rings of radii `s`, `s'` a distance
/// `dz` apart: `4 / sqrt((s + s')^2 + dz^2) K(k)`, `k^2 = 4 s s' / ((s + s')^2 + dz^2)`.
pub fn axial_kernel(s: f64, s_prime: f64, dz: f64) -> Result<f64> {
    if !(s >= 0.0 && s_prime >= 0.0 && dz.is_finite() && s.is_finite() && s_prime.is_finite()) {
        return Err(SnError::Domain(format!("axial kernel needs s, s' >= 0 (got {s}, {s_prime})")));
    }
    let far = (s + s_prime).powi(2) + dz * dz;
    let near = (s - s_prime).powi(2) + dz * dz;
    if near == 0.0 {
        return Err(SnError::Singular(format!("coincident rings at s = {s}, dz = 0")));
    }
    Ok(kernel_unchecked(far, near))
}

#[inline]
fn kernel_unchecked(far: f64, near: f64) -> f64 {
    let kp = (near / far).sqrt();
    4.0 / far.sqrt() * elliptic_k_from_complement(kp)
}

#[inline]
fn kernel_at(s: f64, sp: f64, dz: f64) -> f64 {
    kernel_unchecked((s + sp).powi(2) + dz * dz, (s - sp).powi(2) + dz * dz)
}

const DUFFY_ORDER: usize = 32;

/// `int_cell s' K(s, s', |z'|) ds' dz'` over the cell of size `hs x hz` centred on the
/// singular point `(s, 0)`.
///
/// The cell is cut into eight triangles with the singularity at a vertex; each triangle
/// is integrated in polar coordinates about that vertex with `rho = rho_max u^3`, which
/// turns the `rho log rho` behaviour into a smooth integrand for Gauss–Legendre.
pub fn singular_cell_weight(s: f64, hs: f64, hz: f64) -> Result<f64> {
    if !(s > 0.0 && hs > 0.0 && hz > 0.0 && s - 0.5 * hs >= -1e-12 * hs) {
        return Err(SnError::Domain(format!("bad singular cell s = {s}, hs = {hs}, hz = {hz}")));
    }
    let (x, w) = gauss_legendre(DUFFY_ORDER);
    let a = 0.5 * hs;
    let b = 0.5 * hz;
    let mut total = 0.0;
    for &dir in &[1.0, -1.0] {
        // Triangle spanning theta in [0, atan(b/a)] bounded by s' offset = a, and
        // theta in [atan(b/a), pi/2] bounded by z' = b.
        let split = b.atan2(a);
        for &(t0, t1, bound_s) in &[(0.0, split, true), (split, std::f64::consts::FRAC_PI_2, false)] {
            let ht = 0.5 * (t1 - t0);
            for (xt, wt) in x.iter().zip(&w) {
                let th = t0 + ht * (xt + 1.0);
                let (sn, cs) = th.sin_cos();
                let rmax = if bound_s { a / cs } else { b / sn };
                let mut inner = 0.0;
                for (xu, wu) in x.iter().zip(&w) {
                    let u = 0.5 * (xu + 1.0);
                    let rho = rmax * u * u * u;
                    let jac = 3.0 * rmax * u * u * 0.5;
                    let sp = s + dir * rho * cs;
                    let dz = rho * sn;
                    let near = (s - sp).powi(2) + dz * dz;
                    if near == 0.0 {
                        continue;
                    }
                    let k = kernel_unchecked((s + sp).powi(2) + dz * dz, near);
                    inner += wu * jac * rho * sp * k;
                }
                total += wt * ht * inner;
            }
        }
    }
    // The z' < 0 half mirrors z' > 0.
    Ok(2.0 * total)
}

/// Width of the subtraction Gaussian used by [`axis_correction`] (PDE length units).
const AXIS_GAUSSIAN_WIDTH: f64 = 1.0;
/// Rows farther than this from the axis keep the plain midpoint rule.
const AXIS_CORRECTION_RADIUS: f64 = 3.0;

/// Quadrature error of the midpoint rule for the axis-centred Gaussian
/// `phi(s', z') = exp(-(s'^2 - s_i^2 + z'^2) / (2 a^2))`, which equals 1 at the target ring.
///
/// Close to the axis the ring kernel degenerates to the 3D point singularity and the
/// midpoint rule loses a factor `log h`. Adding `rho_i (C_i - S_i)`, with `C_i` the exact
/// integral and `S_i` its discrete sum on an unbounded grid, is the same as integrating
/// `rho - rho_i phi`, which vanishes at the singular point and restores second order.
fn axis_correction(s: Axis, hz: f64, i: usize, self_weight: f64) -> f64 {
    let si = s.coord(i);
    if si >= AXIS_CORRECTION_RADIUS {
        return 0.0;
    }
    let a = AXIS_GAUSSIAN_WIDTH;
    let two_a2 = 2.0 * a * a;
    let exact = (2.0 * std::f64::consts::PI * a * a).powf(1.5) / (a * SQRT_2) * erf_over(si / (a * SQRT_2))
        * (si * si / two_a2).exp();
    // phi < 1e-18 beyond this reach
    let reach = (si * si + two_a2 * 42.0).sqrt();
    let nj = ((reach + 0.5 * s.step) / s.step).ceil() as usize;
    let nn = (reach / hz).ceil() as i64;
    let mut sum = 0.0;
    for j in 0..nj {
        let sj = s.origin + j as f64 * s.step;
        let mut col = 0.0;
        for n in -nn..=nn {
            let dz = n as f64 * hz;
            let phi = (-(sj * sj - si * si + dz * dz) / two_a2).exp();
            if phi == 0.0 {
                continue;
            }
            if j == i && n == 0 {
                col += phi * self_weight / (sj * s.step * hz);
            } else {
                col += phi * kernel_at(si, sj, dz);
            }
        }
        sum += sj * s.step * hz * col;
    }
    exact - sum
}

/// Kernel spectra for one `(s_i, s_j)` pair: self term and mirrored-partner term.
struct PairSpectra {
    direct: Vec<Complex64>,
    mirror: Option<Vec<Complex64>>,
}

enum KernelStore {
    Cached(Vec<PairSpectra>),
    OnTheFly,
}

/// Memory budget for cached kernel spectra unless overridden.
pub const DEFAULT_KERNEL_BUDGET: usize = 512 << 20;

/// Decoupled effective potential on a `(s, z)` grid:
/// `V(s, z) = -g sum_{s', z'} s' hs hz [rho(s', z') + rho(s', -z' - L)] K(s, s', |z - z'|)`.
///
/// Both terms are linear convolutions along `z` for each radius pair and are evaluated
/// by zero-padded FFT. The exact self cell `(s_i, s_i, 0)` uses [`singular_cell_weight`].
pub struct EffectivePotential {
    s: Axis,
    z: Axis,
    separation: Option<f64>,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    self_weights: Vec<f64>,
    axis_correction: Vec<f64>,
    /// `n0` with `z_k + z_l + L = 0` whenever `k + l = n0`, if the reflection lands on nodes.
    mirror_coincidence: Option<usize>,
    store: KernelStore,
}

impl std::fmt::Debug for EffectivePotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EffectivePotential")
            .field("s", &self.s)
            .field("z", &self.z)
            .field("separation", &self.separation)
            .field("fft_len", &self.fft_len)
            .field("cached", &self.is_cached())
            .finish()
    }
}

impl EffectivePotential {
    /// `separation` is `L / sigma`; `None` drops the mirrored partner (isolated packet).
    pub fn new(grid: &GridSpec, separation: Option<f64>, memory_budget: usize) -> Result<Self> {
        let GridSpec::Cylinder { s, z } = *grid else {
            return Err(SnError::Precondition("effective potential needs a cylinder grid".into()));
        };
        if (s.origin - 0.5 * s.step).abs() > 1e-9 * s.step {
            return Err(SnError::Precondition("radial axis must be staggered (s_0 = hs/2)".into()));
        }
        if let Some(l) = separation {
            if !(l.is_finite() && l > 0.0) {
                return Err(SnError::Domain(format!("separation must be > 0, got {l}")));
            }
        }
        let fft_len = (3 * z.n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let self_weights = (0..s.n)
            .map(|i| singular_cell_weight(s.coord(i), s.step, z.step))
            .collect::<Result<Vec<_>>>()?;
        let axis_correction = (0..s.n)
            .into_par_iter()
            .map(|i| axis_correction(s, z.step, i, self_weights[i]))
            .collect();
        let mirror_coincidence = separation.and_then(|l| {
            let n0 = -(2.0 * z.origin + l) / z.step;
            let r = n0.round();
            ((n0 - r).abs() < 1e-9 && r >= 0.0 && r <= (2 * z.n - 2) as f64).then_some(r as usize)
        });
        let mut me = Self {
            s,
            z,
            separation,
            fft_len,
            forward,
            inverse,
            self_weights,
            axis_correction,
            mirror_coincidence,
            store: KernelStore::OnTheFly,
        };
        let pairs = s.n * (s.n + 1) / 2;
        let per_pair = fft_len * std::mem::size_of::<Complex64>() * if separation.is_some() { 2 } else { 1 };
        if pairs.saturating_mul(per_pair) <= memory_budget {
            let idx: Vec<(usize, usize)> = (0..s.n).flat_map(|i| (i..s.n).map(move |j| (i, j))).collect();
            let spectra = idx.par_iter().map(|&(i, j)| me.pair_spectra(i, j)).collect();
            me.store = KernelStore::Cached(spectra);
        }
        log::debug!("effective potential: fft {} cached {}", fft_len, me.is_cached());
        Ok(me)
    }

    pub fn is_cached(&self) -> bool {
        matches!(self.store, KernelStore::Cached(_))
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::Cylinder { s: self.s, z: self.z }
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        a * self.s.n - a * a.saturating_sub(1) / 2 + (b - a)
    }

    fn self_cell_value(&self, i: usize) -> f64 {
        self.self_weights[i] / (self.s.coord(i) * self.s.step * self.z.step)
    }

    fn pair_spectra(&self, i: usize, j: usize) -> PairSpectra {
        let nz = self.z.n;
        let hz = self.z.step;
        let (si, sj) = (self.s.coord(i), self.s.coord(j));
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (n, slot) in buf.iter_mut().enumerate().take(2 * nz - 1) {
            let off = (n as f64 - (nz - 1) as f64) * hz;
            let v = if i == j && n == nz - 1 { self.self_cell_value(i) } else { kernel_at(si, sj, off) };
            *slot = Complex64::new(v, 0.0);
        }
        self.forward.process(&mut buf);
        let mirror = self.separation.map(|l| {
            let mut m = vec![Complex64::new(0.0, 0.0); self.fft_len];
            let base = 2.0 * self.z.origin + l;
            for (n, slot) in m.iter_mut().enumerate().take(2 * nz - 1) {
                let d = base + n as f64 * hz;
                let v = if i == j && d.abs() < 1e-9 * hz { self.self_cell_value(i) } else { kernel_at(si, sj, d) };
                *slot = Complex64::new(v, 0.0);
            }
            self.forward.process(&mut m);
            m
        });
        PairSpectra { direct: buf, mirror }
    }

    /// Self and mirror contributions of `density` (|psi|^2 per node), without the `-g`
    /// prefactor, so that `V = -g (direct + mirror)`.
    pub fn contributions(&self, density: &[f64], include_direct: bool, include_mirror: bool) -> Result<Vec<f64>> {
        let (ns, nz) = (self.s.n, self.z.n);
        if density.len() != ns * nz {
            return Err(SnError::Precondition(format!(
                "density has {} values, grid needs {}",
                density.len(),
                ns * nz
            )));
        }
        let include_mirror = include_mirror && self.separation.is_some();
        let m = self.fft_len;
        let cell = self.s.step * self.z.step;
        let spectra: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..ns)
            .into_par_iter()
            .map(|j| {
                let w = self.s.coord(j) * cell;
                let row = &density[j * nz..(j + 1) * nz];
                let mut a = vec![Complex64::new(0.0, 0.0); m];
                let mut r = vec![Complex64::new(0.0, 0.0); m];
                for l in 0..nz {
                    a[l].re = w * row[l];
                    r[l].re = w * row[nz - 1 - l];
                }
                self.forward.process(&mut a);
                if include_mirror {
                    self.forward.process(&mut r);
                }
                (a, r)
            })
            .collect();
        let rows: Vec<Vec<f64>> = (0..ns)
            .into_par_iter()
            .map(|i| {
                let mut acc = vec![Complex64::new(0.0, 0.0); m];
                for (j, (a, r)) in spectra.iter().enumerate() {
                    let owned;
                    let ps = match &self.store {
                        KernelStore::Cached(all) => &all[self.pair_index(i, j)],
                        KernelStore::OnTheFly => {
                            owned = self.pair_spectra(i, j);
                            &owned
                        }
                    };
                    if include_direct {
                        for ((o, k), x) in acc.iter_mut().zip(&ps.direct).zip(a) {
                            *o += k * x;
                        }
                    }
                    if include_mirror {
                        if let Some(km) = &ps.mirror {
                            for ((o, k), x) in acc.iter_mut().zip(km).zip(r) {
                                *o += k * x;
                            }
                        }
                    }
                }
                self.inverse.process(&mut acc);
                let scale = 1.0 / m as f64;
                let fix = if include_direct { self.axis_correction[i] } else { 0.0 };
                let row = &density[i * nz..(i + 1) * nz];
                let mut out: Vec<f64> =
                    acc[nz - 1..2 * nz - 1].iter().zip(row).map(|(v, r)| v.re * scale + fix * r).collect();
                // the mirror kernel meets the same singularity at the reflected node
                if let (true, Some(n0)) = (include_mirror, self.mirror_coincidence) {
                    let c = self.axis_correction[i];
                    for (k, o) in out.iter_mut().enumerate() {
                        if let Some(l) = n0.checked_sub(k).filter(|&l| l < nz) {
                            *o += c * row[l];
                        }
                    }
                }
                out
            })
            .collect();
        Ok(rows.concat())
    }

    /// `V = -g (direct + mirror)` for a density, without a normalization check.
    pub fn potential_from_density(&self, density: &[f64], g: f64) -> Result<Vec<f64>> {
        let mut v = self.contributions(density, true, true)?;
        v.iter_mut().for_each(|x| *x *= -g);
        Ok(v)
    }

    /// Potential of a normalized field.
    pub fn evaluate(&self, psi: &WaveField, g: f64) -> Result<Vec<f64>> {
        if *psi.grid() != self.grid() {
            return Err(SnError::Precondition("field grid differs from the kernel grid".into()));
        }
        psi.check_normalized(1e-8)?;
        self.potential_from_density(&psi.density(), g)
    }
}

/// Exact PDE-unit potential of a normalized width-1 Gaussian centred at the origin plus
/// its mirrored partner at `z = -L`.
pub fn gaussian_effective_potential(s: f64, z: f64, g: f64, separation: Option<f64>) -> f64 {
    let own = erf_potential_scaled((s * s + z * z).sqrt(), g);
    own + separation.map_or(0.0, |l| erf_potential_scaled((s * s + (z + l) * (z + l)).sqrt(), g))
}

/// Effective potential in SI units [J] for a field on a grid in PDE units.
pub fn effective_potential(psi: &WaveField, params: &PhysicalParams) -> Result<Vec<f64>> {
    let units = params.pde_units();
    let op = EffectivePotential::new(psi.grid(), Some(params.separation / params.sigma), DEFAULT_KERNEL_BUDGET)?;
    let v = op.evaluate(psi, units.coupling)?;
    Ok(v.into_iter().map(|x| x * units.energy).collect())
}
