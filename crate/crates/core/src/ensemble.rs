//! Statistical ensembles of self-gravitating packets: every member either feels its own
//! density (pure-state equation) or the ensemble-average density (mixed-state equation).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnError};
use crate::grid::{GridSpec, WaveField};
use crate::solver::{check_boundary, CylinderSolver, LineSolver, NonlinearityUpdate, SolverConfig, SpectralAxis};

/// Tolerance on `sum p_j = 1`.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;
/// Largest line grid the density-matrix route accepts.
pub const MAX_DENSITY_MATRIX_NODES: usize = 1024;

/// Weighted pure states on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    grid: GridSpec,
    members: Vec<(f64, WaveField)>,
}

impl EnsembleState {
    pub fn new(members: Vec<(f64, WaveField)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(SnError::Precondition("an ensemble needs at least one member".into()));
        };
        let grid = *first.grid();
        let mut total = 0.0;
        for (j, (p, psi)) in members.iter().enumerate() {
            if !(p.is_finite() && *p >= 0.0) {
                return Err(SnError::Precondition(format!("member {j} has probability {p}")));
            }
            if *psi.grid() != grid {
                return Err(SnError::Precondition(format!("member {j} lives on a different grid")));
            }
            psi.check_normalized(1e-8)?;
            total += p;
        }
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(SnError::Precondition(format!("probabilities sum to {total}")));
        }
        Ok(Self { grid, members })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn members(&self) -> &[(f64, WaveField)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn density(&self) -> Vec<f64> {
        density(self)
    }
}

/// `rho = sum_j p_j |psi_j|^2`.
pub fn density(e: &EnsembleState) -> Vec<f64> {
    density_of(&e.members)
}

/// `int |a - b|` with the grid's volume element.
pub fn l1_distance(grid: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    grid.weights().iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x - y).abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    /// Each member evolves under the potential of its own density.
    PureStateSn,
    /// All members evolve under the potential of the ensemble density.
    MixedStateSn,
}

impl EnsembleMode {
    pub fn name(&self) -> &'static str {
        match self {
            EnsembleMode::PureStateSn => "pure_state_sn",
            EnsembleMode::MixedStateSn => "mixed_state_sn",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleTrajectory {
    pub times: Vec<f64>,
    /// Ensemble density at every sampled time.
    pub densities: Vec<Vec<f64>>,
    pub final_state: EnsembleState,
    /// Largest `| ||psi_j||^2 - 1 |` over members and samples.
    pub max_norm_error: f64,
}

enum Engine {
    Line(LineSolver),
    Cylinder(Box<CylinderSolver>),
}

impl Engine {
    fn new(grid: &GridSpec, g: f64, softening: f64, cfg: SolverConfig) -> Result<Self> {
        if cfg.absorbing.is_some() {
            return Err(SnError::Precondition("ensemble runs keep members normalized; disable absorbing layers".into()));
        }
        match grid {
            GridSpec::Line { .. } => Ok(Engine::Line(LineSolver::new(grid, g, softening, cfg)?)),
            GridSpec::Cylinder { .. } => Ok(Engine::Cylinder(Box::new(CylinderSolver::new(grid, g, None, cfg)?))),
            GridSpec::Plane { .. } => Err(SnError::Precondition("ensembles need a line or cylinder grid".into())),
        }
    }

    fn potential(&self, rho: &[f64]) -> Result<Vec<f64>> {
        match self {
            Engine::Line(s) => s.potential(rho),
            Engine::Cylinder(s) => s.potential_from_density(rho),
        }
    }

    /// Opening half-phase and kinetic step for every member, each with its own potential.
    fn open(&mut self, members: &mut [(f64, WaveField)], potentials: &[&[f64]]) {
        match self {
            Engine::Line(s) => members.par_iter_mut().zip(potentials).for_each(|((_, psi), v)| {
                s.half_potential(psi.data_mut(), v);
                s.kinetic(psi.data_mut());
            }),
            Engine::Cylinder(s) => {
                for ((_, psi), v) in members.iter_mut().zip(potentials) {
                    s.apply_potential(psi.data_mut(), v);
                    s.apply_kinetic(psi.data_mut());
                }
            }
        }
    }

    fn close(&self, members: &mut [(f64, WaveField)], potentials: &[&[f64]]) {
        match self {
            Engine::Line(s) => members
                .par_iter_mut()
                .zip(potentials)
                .for_each(|((_, psi), v)| s.half_potential(psi.data_mut(), v)),
            Engine::Cylinder(s) => {
                for ((_, psi), v) in members.iter_mut().zip(potentials) {
                    s.apply_potential(psi.data_mut(), v);
                }
            }
        }
    }
}

fn source_potentials(engine: &Engine, members: &[(f64, WaveField)], mode: EnsembleMode) -> Result<Vec<Vec<f64>>> {
    match mode {
        EnsembleMode::PureStateSn => members.iter().map(|(_, psi)| engine.potential(&psi.density())).collect(),
        EnsembleMode::MixedStateSn => Ok(vec![engine.potential(&density_of(members))?]),
    }
}

fn as_slices(v: &[Vec<f64>], members: usize) -> Vec<&[f64]> {
    if v.len() == 1 {
        vec![v[0].as_slice(); members]
    } else {
        v.iter().map(|x| x.as_slice()).collect()
    }
}

/// Evolves every member with coupling `g`. In mixed mode the shared potential is rebuilt
/// from all members before any of them advances.
pub fn evolve_ensemble(
    e0: EnsembleState,
    g: f64,
    softening: f64,
    cfg: SolverConfig,
    mode: EnsembleMode,
) -> Result<EnsembleTrajectory> {
    let grid = e0.grid;
    let mut engine = Engine::new(&grid, g, softening, cfg)?;
    let mut members = e0.members;
    let mut out = EnsembleTrajectory {
        times: vec![0.0],
        densities: vec![density_of(&members)],
        final_state: EnsembleState { grid, members: Vec::new() },
        max_norm_error: 0.0,
    };
    let mut warned = false;
    let count = members.len();
    for step in 1..=cfg.n_steps {
        let v_a = source_potentials(&engine, &members, mode)?;
        engine.open(&mut members, &as_slices(&v_a, count));
        let v_b = match cfg.nonlinearity {
            NonlinearityUpdate::PerStep => v_a,
            NonlinearityUpdate::PredictorCorrector => source_potentials(&engine, &members, mode)?,
        };
        engine.close(&mut members, &as_slices(&v_b, count));
        if step % cfg.sample_every == 0 || step == cfg.n_steps {
            let t = step as f64 * cfg.dt;
            for (_, psi) in &members {
                let nrm = psi.norm_sqr();
                if !nrm.is_finite() {
                    return Err(SnError::Runtime(format!("non-finite member amplitude at t = {t}")));
                }
                out.max_norm_error = out.max_norm_error.max((nrm - 1.0).abs());
                check_boundary(psi.boundary_ratio(), t, &mut warned)?;
            }
            out.times.push(t);
            out.densities.push(density_of(&members));
        }
    }
    out.final_state = EnsembleState { grid, members };
    Ok(out)
}

fn density_of(members: &[(f64, WaveField)]) -> Vec<f64> {
    let mut rho = vec![0.0; members[0].1.data().len()];
    for (p, psi) in members {
        for (r, v) in rho.iter_mut().zip(psi.data()) {
            *r += p * v.norm_sqr();
        }
    }
    rho
}

/// `(t, int |rho_A - rho_B|)` at every sampled time.
pub fn signaling_gap(
    a: EnsembleState,
    b: EnsembleState,
    g: f64,
    softening: f64,
    cfg: SolverConfig,
    mode: EnsembleMode,
) -> Result<Vec<(f64, f64)>> {
    if a.grid != b.grid {
        return Err(SnError::Precondition("ensembles live on different grids".into()));
    }
    let grid = a.grid;
    let d0 = l1_distance(&grid, &a.density(), &b.density());
    if d0 > 1e-10 {
        return Err(SnError::Precondition(format!("initial densities differ by {d0:.3e} in L1")));
    }
    let (ta, tb) = rayon::join(
        || evolve_ensemble(a, g, softening, cfg, mode),
        || evolve_ensemble(b, g, softening, cfg, mode),
    );
    let (ta, tb) = (ta?, tb?);
    Ok(ta.times.iter().zip(ta.densities.iter().zip(&tb.densities)).map(|(&t, (x, y))| (t, l1_distance(&grid, x, y))).collect())
}

/// Two decompositions of the same mixture of packets centred at `+-separation / 2`: the
/// packets themselves with weight 1/2 each, and their even and odd combinations weighted
/// by their squared norms.
pub fn spin_ensemble_pair(grid: GridSpec, width: f64, separation: f64) -> Result<(EnsembleState, EnsembleState)> {
    let up = WaveField::gaussian_line(grid, width, 0.5 * separation, 0.0)?;
    let down = WaveField::gaussian_line(grid, width, -0.5 * separation, 0.0)?;
    let combine = |sign: f64| -> Result<(f64, WaveField)> {
        let data = up.data().iter().zip(down.data()).map(|(a, b)| a + b * sign).collect();
        let mut psi = WaveField::new(grid, data)?;
        let p = 0.25 * psi.norm_sqr();
        psi.normalize()?;
        Ok((p, psi))
    };
    let (p_even, even) = combine(1.0)?;
    let (p_odd, odd) = combine(-1.0)?;
    // the two weights sum to 1 up to the normalization round-off of `up` and `down`
    let total = p_even + p_odd;
    let a = EnsembleState::new(vec![(0.5, up), (0.5, down)])?;
    let b = EnsembleState::new(vec![(p_even / total, even), (p_odd / total, odd)])?;
    Ok((a, b))
}

/// Density matrix `R_ij = sum_j p h psi_i psi_j^*` (unit trace) of a line ensemble.
pub fn density_matrix(e: &EnsembleState) -> Result<DMatrix<Complex64>> {
    let (n, h) = match e.grid {
        GridSpec::Line { z } => (z.n, z.step),
        _ => return Err(SnError::Precondition("density matrices are built on line grids".into())),
    };
    let mut r = DMatrix::zeros(n, n);
    for (p, psi) in &e.members {
        let v = nalgebra::DVector::from_column_slice(psi.data());
        r += (&v * v.adjoint()) * Complex64::new(p * h, 0.0);
    }
    Ok(r)
}

/// Sum of the absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().map(|x| x.abs()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VonNeumannReport {
    /// `(t, ||R_direct - R_ensemble||_1)` at every sampled time.
    pub samples: Vec<(f64, f64)>,
    pub max_deviation: f64,
}

/// Row-major dense matrix propagated by `X -> U X U^dagger` with a spectral free
/// propagator `U`.
struct FreeConjugation {
    n: usize,
    axis: SpectralAxis,
}

impl FreeConjugation {
    fn left(&self, x: &mut [Complex64]) {
        transpose(x, self.n);
        self.axis.apply_rows(x);
        transpose(x, self.n);
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = adjoint(x, self.n);
        self.left(&mut y);
        let mut y = adjoint(&y, self.n);
        self.left(&mut y);
        y
    }
}

fn transpose(x: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            x.swap(i * n + j, j * n + i);
        }
    }
}

fn adjoint(x: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            y[j * n + i] = x[i * n + j].conj();
        }
    }
    y
}

/// Integrates `i dR/dt = [K + V(diag R), R]` directly (integrating-factor RK4 with the
/// kinetic part exact) and compares with the mixed-state ensemble propagated by
/// [`evolve_ensemble`] at every sampled time.
pub fn von_neumann_consistency(e0: EnsembleState, g: f64, softening: f64, cfg: SolverConfig) -> Result<VonNeumannReport> {
    let (z, grid) = match e0.grid {
        GridSpec::Line { z } => (z, e0.grid),
        _ => return Err(SnError::Precondition("the density-matrix route needs a line grid".into())),
    };
    let n = z.n;
    if n > MAX_DENSITY_MATRIX_NODES {
        return Err(SnError::Capacity(format!(
            "{n} nodes exceed the density-matrix limit of {MAX_DENSITY_MATRIX_NODES}"
        )));
    }
    let solver = LineSolver::new(&grid, g, softening, cfg)?;
    let dt = cfg.dt;
    let half = FreeConjugation { n, axis: SpectralAxis::new(z, Complex64::new(0.0, 0.25 * dt)) };
    let full = FreeConjugation { n, axis: SpectralAxis::new(z, Complex64::new(0.0, 0.5 * dt)) };
    let h = z.step;
    let rhs = |r: &[Complex64]| -> Result<Vec<Complex64>> {
        let rho: Vec<f64> = (0..n).map(|i| r[i * n + i].re / h).collect();
        let v = solver.potential(&rho)?;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = Complex64::new(0.0, -(v[i] - v[j])) * r[i * n + j];
            }
        }
        Ok(out)
    };
    let axpy = |x: &[Complex64], a: f64, y: &[Complex64]| -> Vec<Complex64> { x.iter().zip(y).map(|(x, y)| x + y * a).collect() };

    let r0 = density_matrix(&e0)?;
    // nalgebra is column-major; store row-major
    let mut r: Vec<Complex64> = r0.transpose().as_slice().to_vec();
    let traj_members = {
        let mut sampled = Vec::new();
        let mut state = e0.clone();
        let mut t_done = 0usize;
        let blocks: Vec<usize> = (1..=cfg.n_steps).filter(|s| s % cfg.sample_every == 0 || *s == cfg.n_steps).collect();
        for &s in &blocks {
            let mut c = cfg;
            c.n_steps = s - t_done;
            c.sample_every = c.n_steps;
            state = evolve_ensemble(state, g, softening, c, EnsembleMode::MixedStateSn)?.final_state;
            t_done = s;
            sampled.push((s, density_matrix(&state)?));
        }
        sampled
    };

    let mut samples = Vec::with_capacity(traj_members.len());
    let mut next = traj_members.iter().peekable();
    for step in 1..=cfg.n_steps {
        let k1 = rhs(&r)?;
        let e_half_r = half.apply(&r);
        let k2 = rhs(&half.apply(&axpy(&r, 0.5 * dt, &k1)))?;
        let k3 = rhs(&axpy(&e_half_r, 0.5 * dt, &k2))?;
        let e_full_r = full.apply(&r);
        let k4 = rhs(&axpy(&e_full_r, dt, &half.apply(&k3)))?;
        let ek1 = full.apply(&k1);
        let k23: Vec<Complex64> = k2.iter().zip(&k3).map(|(a, b)| a + b).collect();
        let ek23 = half.apply(&k23);
        r = (0..n * n).map(|i| e_full_r[i] + (ek1[i] + ek23[i] * 2.0 + k4[i]) * (dt / 6.0)).collect();
        if !r.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(SnError::Runtime("non-finite density matrix".into()));
        }
        if let Some((s, m)) = next.peek() {
            if *s == step {
                let direct = DMatrix::from_row_slice(n, n, &r);
                samples.push((step as f64 * dt, trace_norm(&(direct - m))));
                next.next();
            }
        }
    }
    let max_deviation = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(VonNeumannReport { samples, max_deviation })
}
