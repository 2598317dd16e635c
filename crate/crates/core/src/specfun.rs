//! Error function and the complete elliptic integral of the first kind.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Result, SnError};

/// Elliptic modulus `k` with `0 <= k < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EllipticModulus(f64);

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() || !(0.0..1.0).contains(&k) {
            return Err(SnError::Domain(format!(
                "elliptic modulus must satisfy 0 <= k < 1, got {k}"
            )));
        }
        Ok(Self(k))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Complementary modulus `sqrt(1 - k^2)`.
    pub fn complement(self) -> f64 {
        ((1.0 - self.0) * (1.0 + self.0)).sqrt()
    }
}

/// Error function, `erf(x) = 2/sqrt(pi) * int_0^x exp(-t^2) dt`.
///
/// Backed by the musl-derived implementation in `libm` (rational approximations on
/// |x| < 0.84375, |x| < 1.25, and an erfc-based tail), accurate to about one ulp.
pub fn erf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(SnError::Domain(format!("erf requires a finite argument, got {x}")));
    }
    Ok(libm::erf(x))
}

/// `erf` for arguments already known to be finite.
#[inline]
pub(crate) fn erf_unchecked(x: f64) -> f64 {
    libm::erf(x)
}

/// Complete elliptic integral of the first kind,
/// `K(k) = int_0^{pi/2} dtheta / sqrt(1 - k^2 sin^2 theta)`.
pub fn elliptic_k(k: EllipticModulus) -> f64 {
    if k.value() == 0.0 {
        return FRAC_PI_2;
    }
    elliptic_k_from_complement(k.complement())
}

/// `K` evaluated from the complementary modulus `k' = sqrt(1 - k^2)`.
///
/// Taking `k'` directly keeps full relative accuracy near the logarithmic
/// singularity, where forming `1 - k^2` would cancel.
pub fn elliptic_k_from_complement(kp: f64) -> f64 {
    debug_assert!(kp > 0.0 && kp <= 1.0);
    // K = pi / (2 AGM(1, k')); quadratic convergence, ~6 iterations for k' > 1e-10.
    let mut a = 1.0_f64;
    let mut b = kp;
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    FRAC_PI_2 / (0.5 * (a + b))
}
