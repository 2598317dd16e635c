//! Closed-form covariance dynamics of two trapped-then-released masses coupled by the
//! quadratically truncated Newtonian potential.
//!
//! Internally everything is expressed in oscillator units `hbar = m = omega0 = 1`
//! (position unit `sqrt(hbar / (m omega0))`, momentum unit `sqrt(m hbar omega0)`,
//! time unit `1 / omega0`); conversion to SI happens in [`CovarianceMatrix::to_si`].
//!
//! At laboratory parameters the entries grow like `(omega0 t)^2 ~ 1e13` while the
//! correlations live in their differences, so the block determinants are never formed
//! from the entries. The state is the image of the vacuum under the symplectic map
//! `S = S_com (+) S_rel` (free centre of mass, inverted-oscillator relative mode); with
//! `Q = S_com^-1 S_rel` one has `det(alpha) = 1/4 + D`, `det(gamma) = -D`,
//! `det(sigma) = 1/16` and `D = ((q11 - q22)^2 + (q12 + q21)^2) / 16`, which is a sum of
//! squares of quantities that can be evaluated without cancellation.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnError};
use crate::params::PhysicalParams;

/// Gravitational normal-mode rate `omega = sqrt(4 G m / L^3)` [rad/s].
pub fn coupling_frequency(params: &PhysicalParams) -> f64 {
    (4.0 * params.g_newton * params.m / params.separation.powi(3)).sqrt()
}

/// Bose occupation of the trap mode, `1 / (exp(hbar omega0 / kB T) - 1)`.
pub fn phonon_number(params: &PhysicalParams) -> f64 {
    if params.temperature == 0.0 {
        return 0.0;
    }
    let x = params.hbar * params.omega0 / (params.k_b * params.temperature);
    1.0 / x.exp_m1()
}

/// 2x2 block determinants and the two discriminant excesses that fix the symplectic
/// spectrum. `excess_plus = Sigma - 2 sqrt(det sigma)` and
/// `excess_minus = Sigma~ - 2 sqrt(det sigma)`; both are small differences that the
/// closed-form path supplies exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockInvariants {
    pub det_alpha: f64,
    pub det_beta: f64,
    pub det_gamma: f64,
    pub det_sigma: f64,
    pub excess_plus: f64,
    pub excess_minus: f64,
}

impl BlockInvariants {
    fn scaled(self, k: f64) -> Self {
        let k2 = k * k;
        Self {
            det_alpha: self.det_alpha * k2,
            det_beta: self.det_beta * k2,
            det_gamma: self.det_gamma * k2,
            det_sigma: self.det_sigma * k2 * k2,
            excess_plus: self.excess_plus * k2,
            excess_minus: self.excess_minus * k2,
        }
    }
}

/// Symmetric 4x4 second-moment matrix of `(x_A, p_A, x_B, p_B)` in oscillator units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    entries: [[f64; 4]; 4],
    invariants: BlockInvariants,
}

/// `a*b - c*d` with one rounding error (Kahan's FMA trick).
#[inline]
fn diff_of_products(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let cd = c * d;
    let err = c.mul_add(-d, cd);
    a.mul_add(b, -cd) + err
}

fn det2(m: [[f64; 2]; 2]) -> f64 {
    diff_of_products(m[0][0], m[1][1], m[0][1], m[1][0])
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    // Laplace expansion along the first two rows.
    const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut acc = 0.0;
    for &(a, b) in &PAIRS {
        let (c, d) = complement(a, b);
        let top = diff_of_products(m[0][a], m[1][b], m[0][b], m[1][a]);
        let bottom = diff_of_products(m[2][c], m[3][d], m[2][d], m[3][c]);
        let sign = if (a + b + 1) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * top * bottom;
    }
    acc
}

fn complement(a: usize, b: usize) -> (usize, usize) {
    let mut rest = (0..4).filter(|&i| i != a && i != b);
    (rest.next().unwrap(), rest.next().unwrap())
}

impl CovarianceMatrix {
    /// Build from raw entries (oscillator units); the invariants are computed from them.
    pub fn from_entries(entries: [[f64; 4]; 4]) -> Result<Self> {
        for (j, row) in entries.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(SnError::MalformedCovariance(format!("entry ({j},{k}) is {v}")));
                }
                let w = entries[k][j];
                if (v - w).abs() > 1e-12 * (v.abs().max(w.abs())).max(1e-300) {
                    return Err(SnError::MalformedCovariance(format!(
                        "not symmetric at ({j},{k}): {v} vs {w}"
                    )));
                }
            }
        }
        let alpha = [[entries[0][0], entries[0][1]], [entries[1][0], entries[1][1]]];
        let beta = [[entries[2][2], entries[2][3]], [entries[3][2], entries[3][3]]];
        let gamma = [[entries[0][2], entries[0][3]], [entries[1][2], entries[1][3]]];
        let det_alpha = det2(alpha);
        let det_beta = det2(beta);
        let det_gamma = det2(gamma);
        let det_sigma = det4(&entries);
        let root = det_sigma.max(0.0).sqrt();
        let invariants = BlockInvariants {
            det_alpha,
            det_beta,
            det_gamma,
            det_sigma,
            excess_plus: det_alpha + det_beta + 2.0 * det_gamma - 2.0 * root,
            excess_minus: det_alpha + det_beta - 2.0 * det_gamma - 2.0 * root,
        };
        Ok(Self { entries, invariants })
    }

    /// Build from SI entries, converting with the oscillator length and momentum of `params`.
    pub fn from_si(entries_si: [[f64; 4]; 4], params: &PhysicalParams) -> Result<Self> {
        let u = unit_vector(params);
        let mut e = entries_si;
        for j in 0..4 {
            for k in 0..4 {
                e[j][k] /= u[j] * u[k];
            }
        }
        Self::from_entries(e)
    }

    pub(crate) fn with_invariants(entries: [[f64; 4]; 4], invariants: BlockInvariants) -> Self {
        Self { entries, invariants }
    }

    /// Product of two identical single-mode vacua (`hbar/2` on the diagonal).
    pub fn vacuum() -> Self {
        let mut e = [[0.0; 4]; 4];
        for (i, row) in e.iter_mut().enumerate() {
            row[i] = 0.5;
        }
        Self::with_invariants(
            e,
            BlockInvariants {
                det_alpha: 0.25,
                det_beta: 0.25,
                det_gamma: 0.0,
                det_sigma: 1.0 / 16.0,
                excess_plus: 0.0,
                excess_minus: 0.0,
            },
        )
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.entries
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j][k]
    }

    pub fn alpha(&self) -> [[f64; 2]; 2] {
        self.block(0, 0)
    }

    pub fn beta(&self) -> [[f64; 2]; 2] {
        self.block(2, 2)
    }

    pub fn gamma(&self) -> [[f64; 2]; 2] {
        self.block(0, 2)
    }

    fn block(&self, r: usize, c: usize) -> [[f64; 2]; 2] {
        let e = &self.entries;
        [[e[r][c], e[r][c + 1]], [e[r + 1][c], e[r + 1][c + 1]]]
    }

    pub fn invariants(&self) -> &BlockInvariants {
        &self.invariants
    }

    /// Entries in SI units (m^2, kg m^2/s, kg^2 m^2/s^2).
    pub fn to_si(&self, params: &PhysicalParams) -> [[f64; 4]; 4] {
        let u = unit_vector(params);
        let mut out = self.entries;
        for j in 0..4 {
            for k in 0..4 {
                out[j][k] *= u[j] * u[k];
            }
        }
        out
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn unit_vector(params: &PhysicalParams) -> [f64; 4] {
    let length = (params.hbar / (params.m * params.omega0)).sqrt();
    let momentum = (params.m * params.hbar * params.omega0).sqrt();
    [length, momentum, length, momentum]
}

/// Threshold below which the hyperbolic helpers switch to their Maclaurin series.
const SERIES_CUTOFF: f64 = 0.5;

fn series(first: f64, ratio: impl Fn(u32) -> f64) -> f64 {
    let mut term = first;
    let mut sum = first;
    for n in 1..60 {
        term *= ratio(n);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `sinh(y)^2 / y^2 - 1`.
fn sinh_sq_ratio_excess(y: f64) -> f64 {
    if y.abs() < SERIES_CUTOFF {
        // sum_{n>=2} 2^(2n-1) y^(2n-2) / (2n)!
        let y2 = y * y;
        series(y2 / 3.0, |n| {
            let n = f64::from(n) + 1.0;
            4.0 * y2 / ((2.0 * n + 1.0) * (2.0 * n + 2.0))
        })
    } else {
        let r = y.sinh() / y;
        r * r - 1.0
    }
}

/// `sinh(x) / x - 1`.
fn sinhc_excess(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        series(x2 / 6.0, |n| {
            let n = f64::from(n);
            x2 / ((2.0 * n + 2.0) * (2.0 * n + 3.0))
        })
    } else {
        x.sinh() / x - 1.0
    }
}

/// `cosh(y) - sinh(y) / y`.
fn cosh_minus_sinhc(y: f64) -> f64 {
    if y.abs() < SERIES_CUTOFF {
        // sum_{n>=1} 2n y^(2n) / (2n+1)!
        let y2 = y * y;
        series(y2 / 3.0, |n| {
            let n = f64::from(n);
            // term_{n+1} / term_n = (n+1)/n * y^2 / ((2n+2)(2n+3))
            (n + 1.0) / n * y2 / ((2.0 * n + 2.0) * (2.0 * n + 3.0))
        })
    } else {
        y.cosh() - y.sinh() / y
    }
}

/// Covariance matrix at time `t` [s] starting from the product of trap ground states.
pub fn covariance_at(t: f64, params: &PhysicalParams) -> Result<CovarianceMatrix> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(SnError::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    let w = coupling_frequency(params) / params.omega0;
    Ok(covariance_natural(params.omega0 * t, w))
}

/// Covariance matrix in oscillator units at dimensionless time `tau = omega0 t` for the
/// dimensionless coupling `w = omega / omega0`.
pub fn covariance_natural(tau: f64, w: f64) -> CovarianceMatrix {
    let y = w * tau;
    let sh = y.sinh();
    let sh2 = sh * sh;
    let tau2 = tau * tau;
    let s = sinh_sq_ratio_excess(y);
    let c2 = sinhc_excess(2.0 * y);
    let sinh2y = (2.0 * y).sinh();

    let s00 = 0.25 * (2.0 + 2.0 * tau2 + tau2 * s + sh2);
    let s02 = -0.25 * (tau2 * s + sh2);
    let s11 = 0.25 * (2.0 + (1.0 + w * w) * sh2);
    let s13 = -0.25 * (1.0 + w * w) * sh2;
    let s01 = 0.125 * (4.0 * tau + 2.0 * tau * c2 + w * sinh2y);
    let s03 = -0.125 * (2.0 * tau * c2 + w * sinh2y);

    let entries = [
        [s00, s01, s02, s03],
        [s01, s11, s03, s13],
        [s02, s03, s00, s01],
        [s03, s13, s01, s11],
    ];

    let a = tau * w * sh;
    let b = w * sh - tau * cosh_minus_sinhc(y);
    let d = (a * a + b * b) / 16.0;
    let invariants = BlockInvariants {
        det_alpha: 0.25 + d,
        det_beta: 0.25 + d,
        det_gamma: -d,
        det_sigma: 1.0 / 16.0,
        excess_plus: 0.0,
        excess_minus: 4.0 * d,
    };
    CovarianceMatrix::with_invariants(entries, invariants)
}

/// Covariance of the product of thermal states: every entry times `2 nbar + 1`.
pub fn thermal_scale(cm: &CovarianceMatrix, nbar: f64) -> Result<CovarianceMatrix> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(SnError::Domain(format!("phonon number must be >= 0, got {nbar}")));
    }
    let k = 2.0 * nbar + 1.0;
    let mut e = cm.entries;
    e.iter_mut().flatten().for_each(|v| *v *= k);
    Ok(CovarianceMatrix::with_invariants(e, cm.invariants.scaled(k)))
}

/// Thermal covariance at time `t` for the temperature stored in `params`.
pub fn thermal_covariance_at(t: f64, params: &PhysicalParams) -> Result<CovarianceMatrix> {
    thermal_scale(&covariance_at(t, params)?, phonon_number(params))
}
