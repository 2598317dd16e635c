//! Two particles on a line, each with one coordinate: the joint amplitude lives on the
//! `(z1, z2)` plane. Particle 2 sits at `L + z2`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::line::softened;
use super::{check_boundary, wavenumber, NonlinearityUpdate, SolverConfig, SpectralAxis};
use crate::error::{Result, SnError};
use crate::grid::{Axis, GridSpec, WaveField};

/// Interaction between the two coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BipartiteKernel {
    /// Mean-field potentials built from the marginals with `1 / sqrt(x^2 + a^2)`.
    SoftenedGravity { a: f64 },
    /// `-(g / L) (1 - u + u^2)` with `u = (z2 - z1) / L`.
    QuadraticNewton,
    /// `-g / (L + z2 - z1)`.
    FullNewton,
}

impl BipartiteKernel {
    pub fn name(&self) -> &'static str {
        match self {
            BipartiteKernel::SoftenedGravity { .. } => "softened_gravity",
            BipartiteKernel::QuadraticNewton => "quadratic_newton",
            BipartiteKernel::FullNewton => "full_newton",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipartiteSample {
    pub t: f64,
    pub norm: f64,
    /// `tr rho_1^2` of the reduced state of particle 1.
    pub purity: f64,
    /// `2 S(rho_1)` in bits.
    pub mutual_information: f64,
    /// Covariance matrix in oscillator units (`x = z / sqrt 2`, `p = sqrt 2 p_z`), ordering
    /// `(x1, p1, x2, p2)`.
    pub covariance: [[f64; 4]; 4],
}

#[derive(Debug, Clone)]
pub struct BipartiteReport {
    pub kernel: BipartiteKernel,
    pub samples: Vec<BipartiteSample>,
    pub final_state: WaveField,
    pub max_norm_drift: f64,
    pub boundary_warning: bool,
}

impl BipartiteReport {
    pub fn min_purity(&self) -> f64 {
        self.samples.iter().map(|s| s.purity).fold(f64::INFINITY, f64::min)
    }

    pub fn max_mutual_information(&self) -> f64 {
        self.samples.iter().map(|s| s.mutual_information).fold(0.0, f64::max)
    }
}

fn plane_axis(grid: &GridSpec) -> Result<Axis> {
    match *grid {
        GridSpec::Plane { z1, z2 } if z1 == z2 => Ok(z1),
        GridSpec::Plane { .. } => Err(SnError::Precondition("both plane axes must coincide".into())),
        _ => Err(SnError::Precondition("expected a plane grid".into())),
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// `(rho_1, rho_2)` with `sum h rho = 1`.
fn marginals(psi: &[Complex64], n: usize, h: f64) -> (Vec<f64>, Vec<f64>) {
    let mut r1 = vec![0.0; n];
    let mut r2 = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let p = psi[i * n + j].norm_sqr() * h;
            r1[i] += p;
            r2[j] += p;
        }
    }
    (r1, r2)
}

/// `h K(d h + shift)` for `d = -(n-1) ..= n-1`, stored at `d + n - 1`.
fn kernel_table(z: Axis, shift: f64, a: f64) -> Vec<f64> {
    let n = z.n as isize;
    (-(n - 1)..n).map(|d| z.step * softened(d as f64 * z.step + shift, a)).collect()
}

/// `sum_j rho_j table[i - j]`.
fn smeared(rho: &[f64], table: &[f64]) -> Vec<f64> {
    let n = rho.len();
    (0..n)
        .map(|i| {
            let row = &table[i..i + n];
            row.iter().rev().zip(rho).map(|(k, r)| k * r).sum()
        })
        .collect()
}

struct Propagator {
    z: Axis,
    g: f64,
    kernel: BipartiteKernel,
    c: Complex64,
    spectral: SpectralAxis,
    /// Phase factors of a time-independent potential.
    fixed: Option<Vec<Complex64>>,
    /// Kernel tables for the self, `-L` and `+L` terms.
    tables: [Vec<f64>; 3],
}

impl Propagator {
    /// Marginal potentials `(V1(z1), V2(z2))`; the joint potential is their sum.
    fn mean_field(&self, psi: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let (r1, r2) = marginals(psi, self.z.n, self.z.step);
        let [own, minus, plus] = &self.tables;
        let v1 = smeared(&r1, own).iter().zip(smeared(&r2, minus)).map(|(a, b)| -self.g * (a + b)).collect();
        let v2 = smeared(&r2, own).iter().zip(smeared(&r1, plus)).map(|(a, b)| -self.g * (a + b)).collect();
        (v1, v2)
    }

    fn phase(&self, psi: &mut [Complex64], (v1, v2): &(Vec<f64>, Vec<f64>)) {
        let e2: Vec<Complex64> = v2.iter().map(|&v| (-self.c * v).exp()).collect();
        for (row, &v) in psi.chunks_exact_mut(self.z.n).zip(v1) {
            let e1 = (-self.c * v).exp();
            for (p, f) in row.iter_mut().zip(&e2) {
                *p *= e1 * f;
            }
        }
    }

    fn kinetic(&self, psi: &mut [Complex64]) {
        let n = self.z.n;
        self.spectral.apply_rows(psi);
        transpose(psi, n);
        self.spectral.apply_rows(psi);
        transpose(psi, n);
    }

    fn step(&self, psi: &mut [Complex64], update: NonlinearityUpdate) {
        if self.g == 0.0 {
            self.kinetic(psi);
            return;
        }
        match (&self.fixed, self.kernel) {
            (Some(f), _) => {
                for (p, w) in psi.iter_mut().zip(f) {
                    *p *= w;
                }
                self.kinetic(psi);
                for (p, w) in psi.iter_mut().zip(f) {
                    *p *= w;
                }
            }
            (None, BipartiteKernel::SoftenedGravity { .. }) => {
                let v = self.mean_field(psi);
                self.phase(psi, &v);
                self.kinetic(psi);
                match update {
                    NonlinearityUpdate::PerStep => self.phase(psi, &v),
                    NonlinearityUpdate::PredictorCorrector => {
                        let v_b = self.mean_field(psi);
                        self.phase(psi, &v_b);
                    }
                }
            }
            (None, _) => unreachable!("Newton kernels are precomputed"),
        }
    }
}

/// Evolves a joint amplitude on the `(z1, z2)` plane (PDE units) and records product-form
/// metrics every `cfg.sample_every` steps.
pub fn evolve_bipartite_1d(
    psi0: WaveField,
    g: f64,
    separation: f64,
    kernel: BipartiteKernel,
    cfg: SolverConfig,
) -> Result<BipartiteReport> {
    let grid = *psi0.grid();
    let z = plane_axis(&grid)?;
    psi0.check_normalized(1e-8)?;
    cfg.validate_for(&grid)?;
    if cfg.absorbing.is_some() {
        return Err(SnError::Precondition("absorbing layers are not supported on the plane".into()));
    }
    if !(g.is_finite() && g >= 0.0) {
        return Err(SnError::InvalidParameter { field: "coupling", reason: format!("must be >= 0, got {g}") });
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(SnError::InvalidParameter { field: "separation", reason: format!("must be > 0, got {separation}") });
    }
    let c = Complex64::new(0.0, 0.5 * cfg.dt);
    let n = z.n;
    let fixed = match kernel {
        BipartiteKernel::SoftenedGravity { a } => {
            if !(a.is_finite() && a > 0.0) {
                return Err(SnError::InvalidParameter { field: "softening", reason: format!("must be > 0, got {a}") });
            }
            None
        }
        BipartiteKernel::QuadraticNewton | BipartiteKernel::FullNewton => {
            let mut f = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let r = separation + z.coord(j) - z.coord(i);
                    let v = if kernel == BipartiteKernel::FullNewton {
                        if r <= 0.0 {
                            return Err(SnError::Precondition(format!(
                                "grid half-width must stay below L/2 for the full Newton kernel (L + z2 - z1 = {r})"
                            )));
                        }
                        -g / r
                    } else {
                        let u = (z.coord(j) - z.coord(i)) / separation;
                        -(g / separation) * (1.0 - u + u * u)
                    };
                    f.push((-c * v).exp());
                }
            }
            Some(f)
        }
    };
    let tables = match kernel {
        BipartiteKernel::SoftenedGravity { a } => {
            [kernel_table(z, 0.0, a), kernel_table(z, -separation, a), kernel_table(z, separation, a)]
        }
        _ => Default::default(),
    };
    let prop = Propagator { z, g, kernel, c, spectral: SpectralAxis::new(z, c), fixed, tables };

    let mut psi = psi0;
    let mut report = BipartiteReport {
        kernel,
        samples: vec![sample(&psi, 0.0)?],
        final_state: psi.clone(),
        max_norm_drift: 0.0,
        boundary_warning: false,
    };
    let mut warned = false;
    check_boundary(psi.boundary_ratio(), 0.0, &mut warned)?;
    let mut norm = psi.norm_sqr();
    for step in 1..=cfg.n_steps {
        prop.step(psi.data_mut(), cfg.nonlinearity);
        let new_norm = psi.norm_sqr();
        report.max_norm_drift = report.max_norm_drift.max((new_norm - norm).abs());
        norm = new_norm;
        if !norm.is_finite() {
            return Err(SnError::Runtime("non-finite amplitude after step".into()));
        }
        if step % cfg.sample_every == 0 || step == cfg.n_steps {
            let t = step as f64 * cfg.dt;
            check_boundary(psi.boundary_ratio(), t, &mut warned)?;
            report.samples.push(sample(&psi, t)?);
        }
    }
    report.boundary_warning = warned;
    report.final_state = psi;
    Ok(report)
}

/// Reduced density matrix of particle 1 as an operator with unit trace.
fn reduced_state(psi: &[Complex64], n: usize, h: f64) -> DMatrix<Complex64> {
    let m = DMatrix::from_row_slice(n, n, psi) * Complex64::new(h, 0.0);
    &m * m.adjoint()
}

/// Purity and `2 S(rho_1)` (bits, clamped at 0) of a pure joint state.
pub fn product_metrics(psi: &WaveField) -> Result<(f64, f64)> {
    let z = plane_axis(psi.grid())?;
    let rho = reduced_state(psi.data(), z.n, z.step);
    let purity = rho.iter().map(|v| v.norm_sqr()).sum();
    let entropy: f64 = rho
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum();
    Ok((purity, (2.0 * entropy).max(0.0)))
}

/// `-i d/dz` along one axis of a square array by FFT (periodic, Nyquist mode dropped).
fn momentum(psi: &[Complex64], z: Axis, along_first: bool) -> Vec<Complex64> {
    let n = z.n;
    let mut buf = psi.to_vec();
    if along_first {
        transpose(&mut buf, n);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for row in buf.chunks_exact_mut(n) {
        for (m, v) in row.iter_mut().enumerate() {
            let k = if 2 * m == n { 0.0 } else { wavenumber(m, n, z.step) };
            *v *= k / n as f64;
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    if along_first {
        transpose(&mut buf, n);
    }
    buf
}

/// Symmetrized second moments `Re <R_j psi | R_k psi> - <R_j><R_k>` in oscillator units.
pub fn covariance_of(psi: &WaveField) -> Result<[[f64; 4]; 4]> {
    let z = plane_axis(psi.grid())?;
    let n = z.n;
    let data = psi.data();
    let s2 = std::f64::consts::SQRT_2;
    let mut ops: Vec<Vec<Complex64>> = Vec::with_capacity(4);
    ops.push((0..n * n).map(|idx| data[idx] * (z.coord(idx / n) / s2)).collect());
    ops.push(momentum(data, z, true).into_iter().map(|v| v * s2).collect());
    ops.push((0..n * n).map(|idx| data[idx] * (z.coord(idx % n) / s2)).collect());
    ops.push(momentum(data, z, false).into_iter().map(|v| v * s2).collect());
    let w = z.step * z.step;
    let mean: Vec<f64> = ops.iter().map(|o| w * data.iter().zip(o).map(|(a, b)| (a.conj() * b).re).sum::<f64>()).collect();
    let mut out = [[0.0; 4]; 4];
    for j in 0..4 {
        for k in j..4 {
            let m2: f64 = w * ops[j].iter().zip(&ops[k]).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
            out[j][k] = m2 - mean[j] * mean[k];
            out[k][j] = out[j][k];
        }
    }
    Ok(out)
}

fn sample(psi: &WaveField, t: f64) -> Result<BipartiteSample> {
    let (purity, mutual_information) = product_metrics(psi)?;
    Ok(BipartiteSample { t, norm: psi.norm_sqr(), purity, mutual_information, covariance: covariance_of(psi)? })
}
