//! Two-mode Gaussian correlation quantifiers.
//!
//! Symplectic eigenvalues are reported in units of `hbar`, so the vacuum value is `1/2`.
//! Logarithms are base 2 (bits).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnError};
use crate::gaussian::{thermal_covariance_at, CovarianceMatrix};
use crate::params::PhysicalParams;

/// Slack allowed below the physical bound before a covariance is rejected.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Time [s].
    pub t: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub nu_tilde_minus: f64,
    /// Logarithmic negativity [bits].
    pub log_negativity: f64,
    /// Quantum mutual information [bits].
    pub mutual_information: f64,
}

/// Absolute round-off allowance for the invariants of `cm`: `det sigma` is a sum of
/// products of four entries, so its error grows like the fourth power of the largest one.
fn invariant_tolerance(cm: &CovarianceMatrix) -> f64 {
    CLAMP_TOLERANCE.max(64.0 * f64::EPSILON * cm.max_abs().powi(4))
}

/// `(nu^2_+, nu^2_-)` from `Sigma`, `det sigma` and the excess `Sigma - 2 sqrt(det sigma)`.
///
/// `Sigma^2 - 4 det = e (e + 4 sqrt(det))` removes the cancellation in the discriminant,
/// and the smaller root comes from `nu_+^2 nu_-^2 = det sigma`.
fn squared_pair(sigma_sum: f64, det: f64, excess: f64, tol: f64) -> Result<(f64, f64)> {
    if det < -tol {
        return Err(SnError::MalformedCovariance(format!("det(sigma) = {det} < 0")));
    }
    let det = det.max(0.0);
    if excess < -tol {
        return Err(SnError::MalformedCovariance(format!(
            "negative discriminant (excess {excess:e})"
        )));
    }
    let excess = excess.max(0.0);
    let root = det.sqrt();
    let disc = excess * (excess + 4.0 * root);
    let plus = 0.5 * (sigma_sum + disc.sqrt());
    if plus <= 0.0 {
        return Err(SnError::MalformedCovariance(format!("Sigma = {sigma_sum} is not positive")));
    }
    // A degenerate pair can come out in the wrong order by an ulp.
    Ok((plus, (det / plus).min(plus)))
}

/// Symplectic eigenvalues `(nu_+, nu_-)` in units of `hbar`.
///
/// Near a degenerate spectrum (pure states) an excess known to `eps` splits the pair by
/// about `sqrt(eps)`, so a `nu_-` that far below `1/2` is snapped back to the bound with
/// `nu_+` taken from `nu_+ nu_- = sqrt(det sigma)`.
pub fn symplectic_eigenvalues(cm: &CovarianceMatrix) -> Result<(f64, f64)> {
    let inv = cm.invariants();
    let tol = invariant_tolerance(cm);
    let sum = inv.det_alpha + inv.det_beta + 2.0 * inv.det_gamma;
    let (p, m) = squared_pair(sum, inv.det_sigma, inv.excess_plus, tol)?;
    let (plus, minus) = (p.sqrt(), m.sqrt());
    if minus < 0.5 && 0.5 - minus <= tol.sqrt() {
        return Ok(((2.0 * inv.det_sigma.max(0.0).sqrt()).max(0.5), 0.5));
    }
    Ok((plus, minus))
}

/// Smaller symplectic eigenvalue of the partially transposed covariance matrix.
pub fn pt_symplectic_minus(cm: &CovarianceMatrix) -> Result<f64> {
    let inv = cm.invariants();
    let sum = inv.det_alpha + inv.det_beta - 2.0 * inv.det_gamma;
    let (_, m) = squared_pair(sum, inv.det_sigma, inv.excess_minus, invariant_tolerance(cm))?;
    Ok(m.sqrt())
}

/// `max(0, -log2(nu~_- / (1/2)))`.
pub fn log_negativity(cm: &CovarianceMatrix) -> Result<f64> {
    let nu = pt_symplectic_minus(cm)?;
    Ok(log_negativity_from(nu))
}

fn log_negativity_from(nu_tilde_minus: f64) -> f64 {
    (-(2.0 * nu_tilde_minus).log2()).max(0.0)
}

/// Entropy function `f(x) = (x + 1/2) log2(x + 1/2) - (x - 1/2) log2(x - 1/2)` written in
/// terms of `d = x - 1/2`. Arguments within [`CLAMP_TOLERANCE`] below the bound are clamped.
pub fn entropy_f_excess(d: f64) -> Result<f64> {
    entropy_within(d, CLAMP_TOLERANCE)
}

fn entropy_within(d: f64, tol: f64) -> Result<f64> {
    if d.is_nan() || d < -tol {
        return Err(SnError::MalformedCovariance(format!(
            "symplectic eigenvalue below hbar/2 by {:e}",
            -d
        )));
    }
    if d <= 0.0 {
        return Ok(0.0);
    }
    let ln = (1.0 + d) * d.ln_1p() - d * d.ln();
    Ok(ln / std::f64::consts::LN_2)
}

/// Entropy function `f(x)` on the symplectic eigenvalue itself (units of `hbar`).
pub fn entropy_f(x: f64) -> Result<f64> {
    entropy_f_excess(x - 0.5)
}

/// `sqrt(det) - 1/2` without cancelling when `det` is close to `1/4`.
fn root_excess(det: f64) -> f64 {
    let r = det.max(0.0).sqrt();
    (det - 0.25) / (r + 0.5)
}

/// `I = f(sqrt|alpha|) + f(sqrt|beta|) - f(nu_+) - f(nu_-)` in bits.
pub fn mutual_information(cm: &CovarianceMatrix) -> Result<f64> {
    let (p, m) = symplectic_eigenvalues(cm)?;
    mutual_information_from(cm, p, m)
}

fn mutual_information_from(cm: &CovarianceMatrix, nu_plus: f64, nu_minus: f64) -> Result<f64> {
    let inv = cm.invariants();
    let tol = invariant_tolerance(cm).sqrt();
    let local = entropy_within(root_excess(inv.det_alpha), tol)? + entropy_within(root_excess(inv.det_beta), tol)?;
    let global = entropy_within(nu_plus - 0.5, tol)? + entropy_within(nu_minus - 0.5, tol)?;
    // Round-off can push a product state a hair below zero.
    Ok((local - global).max(0.0))
}

/// All quantifiers for one covariance matrix.
pub fn report(t: f64, cm: &CovarianceMatrix) -> Result<CorrelationReport> {
    let (nu_plus, nu_minus) = symplectic_eigenvalues(cm)?;
    let nu_tilde_minus = pt_symplectic_minus(cm)?;
    Ok(CorrelationReport {
        t,
        nu_plus,
        nu_minus,
        nu_tilde_minus,
        log_negativity: log_negativity_from(nu_tilde_minus),
        mutual_information: mutual_information_from(cm, nu_plus, nu_minus)?,
    })
}

/// Correlation time series for the thermal state described by `params`.
pub fn trajectory(params: &PhysicalParams, times: &[f64]) -> Result<Vec<CorrelationReport>> {
    times
        .iter()
        .map(|&t| report(t, &thermal_covariance_at(t, params)?))
        .collect()
}

/// First sampled time at which `value` exceeds `threshold`.
pub fn first_exceedance(
    series: &[CorrelationReport],
    threshold: f64,
    value: impl Fn(&CorrelationReport) -> f64,
) -> Option<f64> {
    series.iter().find(|r| value(r) > threshold).map(|r| r.t)
}
