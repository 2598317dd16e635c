//! Independent reference computations shared by the integration tests and the acceptance
//! harness. Nothing here calls into the crate's numerical kernels.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

// 15-point Kronrod rule with its embedded 7-point Gauss rule.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XK[j];
        let s = f(c - x) + f(c + x);
        k += WK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature with absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut stack = vec![(a, b, tol)];
    let mut total = 0.0;
    let mut comp = 0.0;
    while let Some((lo, hi, t)) = stack.pop() {
        let (v, err) = kronrod(f, lo, hi);
        // panels whose error estimate is at roundoff level cannot improve by splitting
        if err <= t.max(4.0 * f64::EPSILON * v.abs()) || (hi - lo).abs() < 1e-13 * (1.0 + lo.abs()) {
            // Kahan sum keeps the many small panels from drifting.
            let y = v - comp;
            let s = total + y;
            comp = (s - total) - y;
            total = s;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * t));
            stack.push((mid, hi, 0.5 * t));
        }
    }
    total
}

/// `erf(x)` as `2/sqrt(pi) int_0^x exp(-t^2) dt`.
pub fn erf_quadrature(x: f64) -> f64 {
    let v = integrate(&|t: f64| (-t * t).exp(), 0.0, x.abs(), 1e-17);
    (2.0 / std::f64::consts::PI.sqrt() * v).copysign(x)
}

/// Maclaurin series `2/sqrt(pi) sum (-1)^n x^(2n+1) / (n! (2n+1))`, usable for `|x| <= 2`.
pub fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

/// `K(k) = pi/2 sum [(2n)! / (2^(2n) n!^2)]^2 k^(2n)`.
pub fn elliptic_k_series(k: f64) -> f64 {
    let k2 = k * k;
    let mut c = 1.0;
    let mut p = 1.0;
    let mut sum = 1.0;
    for n in 1..200_000 {
        let r = (2 * n - 1) as f64 / (2 * n) as f64;
        c *= r * r;
        p *= k2;
        let term = c * p;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    std::f64::consts::FRAC_PI_2 * sum
}

/// `K(k) = int_0^{pi/2} dtheta / sqrt(1 - k^2 sin^2 theta)`.
pub fn elliptic_k_quadrature(k: f64) -> f64 {
    let k2 = k * k;
    integrate(&|t: f64| 1.0 / (1.0 - k2 * t.sin().powi(2)).sqrt(), 0.0, std::f64::consts::FRAC_PI_2, 1e-16)
}

/// Potential (PDE units, coupling 1) of a unit-width normalized 3D Gaussian at radius `r`.
/// The angular integral of `1 / |r - r'|` is `4 pi / max(r, r')`, leaving two radial
/// quadratures: the enclosed mass over `r` and the outer shells.
pub fn gaussian_potential_quadrature(r: f64) -> f64 {
    let norm = (2.0 * std::f64::consts::PI).powf(-1.5);
    let shell = |rp: f64| 4.0 * std::f64::consts::PI * norm * rp * rp * (-0.5 * rp * rp).exp();
    let upper = 40.0;
    let outer = integrate(&|rp: f64| shell(rp) / rp, r, upper, 1e-17);
    if r == 0.0 {
        return -outer;
    }
    let enclosed = integrate(&shell, 0.0, r, 1e-17);
    -(enclosed / r + outer)
}

/// Symmetric 4x4 covariance packed as `[s00, s01, s02, s03, s11, s12, s13, s22, s23, s33]`.
pub type Moments = [f64; 10];

fn unpack(m: &Moments) -> [[f64; 4]; 4] {
    let idx = [[0, 1, 2, 3], [1, 4, 5, 6], [2, 5, 7, 8], [3, 6, 8, 9]];
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m[idx[i][j]];
        }
    }
    out
}

fn pack(s: &[[f64; 4]; 4]) -> Moments {
    [s[0][0], s[0][1], s[0][2], s[0][3], s[1][1], s[1][2], s[1][3], s[2][2], s[2][3], s[3][3]]
}

/// `dS/dtau = A S + S A^T` for `H = (p1^2 + p2^2)/2 - (w^2/4)(x1 - x2)^2`, ordering
/// `(x1, p1, x2, p2)`.
fn moment_rhs(m: &Moments, w: f64) -> Moments {
    let k = 0.5 * w * w;
    let a = [[0.0, 1.0, 0.0, 0.0], [k, 0.0, -k, 0.0], [0.0, 0.0, 0.0, 1.0], [-k, 0.0, k, 0.0]];
    let s = unpack(m);
    let mut d = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut v = 0.0;
            for l in 0..4 {
                v += a[i][l] * s[l][j] + s[i][l] * a[j][l];
            }
            d[i][j] = v;
        }
    }
    pack(&d)
}

/// Classical RK4 integration of the second moments from the vacuum, returning the
/// covariance at each requested dimensionless time (increasing).
pub fn moment_ode(w: f64, taus: &[f64], steps_per_unit: f64, max_step: f64) -> Vec<[[f64; 4]; 4]> {
    let mut m = pack(&[[0.5, 0.0, 0.0, 0.0], [0.0, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.0], [0.0, 0.0, 0.0, 0.5]]);
    let mut tau = 0.0;
    let mut out = Vec::with_capacity(taus.len());
    for &target in taus {
        let span = target - tau;
        if span > 0.0 {
            let n = ((span * steps_per_unit).ceil() as usize).max((span / max_step).ceil() as usize).max(1);
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = moment_rhs(&m, w);
                let k2 = moment_rhs(&add(&m, &k1, 0.5 * h), w);
                let k3 = moment_rhs(&add(&m, &k2, 0.5 * h), w);
                let k4 = moment_rhs(&add(&m, &k3, h), w);
                for i in 0..10 {
                    m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        tau = target;
        out.push(unpack(&m));
    }
    out
}

fn add(a: &Moments, b: &Moments, h: f64) -> Moments {
    let mut out = *a;
    for i in 0..10 {
        out[i] += h * b[i];
    }
    out
}

pub type RMat = [[BigRational; 4]; 4];

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rmul(a: &RMat, b: &RMat) -> RMat {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| (0..4).fold(BigRational::zero(), |acc, l| acc + &a[i][l] * &b[l][j]))
    })
}

pub fn rtranspose(a: &RMat) -> RMat {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i].clone()))
}

/// Coefficients `c_0..c_4` of `det(lambda I - M) = sum c_k lambda^k` by the
/// Faddeev–LeVerrier recursion in exact arithmetic.
pub fn faddeev_leverrier(m: &RMat) -> [BigRational; 5] {
    let n = 4;
    let mut c: [BigRational; 5] = std::array::from_fn(|_| BigRational::zero());
    c[n] = BigRational::one();
    let mut mk: RMat = std::array::from_fn(|_| std::array::from_fn(|_| BigRational::zero()));
    for k in 1..=n {
        // M_k = M (M_{k-1} + c_{n-k+1} I)
        let mut prev = mk.clone();
        for (i, row) in prev.iter_mut().enumerate() {
            row[i] += &c[n - k + 1];
        }
        mk = rmul(m, &prev);
        let tr = (0..n).fold(BigRational::zero(), |acc, i| acc + &mk[i][i]);
        c[n - k] = -tr / BigRational::from_integer(BigInt::from(k as i64));
    }
    c
}

pub fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("finite rational")
}

/// Symplectic form `J = [[0, 1], [-1, 0]] (+) [[0, 1], [-1, 0]]`, optionally with the second
/// mode's momentum reflected (partial transposition).
pub fn symplectic_form(partial_transpose: bool) -> RMat {
    let z = || BigRational::zero();
    let o = || BigRational::one();
    let mut j: RMat = std::array::from_fn(|_| std::array::from_fn(|_| z()));
    j[0][1] = o();
    j[1][0] = -o();
    j[2][3] = o();
    j[3][2] = -o();
    if partial_transpose {
        j[2][3] = -o();
        j[3][2] = o();
    }
    j
}

/// Symplectic eigenvalues `(nu_+, nu_-)` from exact characteristic-polynomial coefficients of
/// `(J S)^2`, whose eigenvalues are `-nu_+^2` and `-nu_-^2`, each twice.
pub fn symplectic_from_exact(s: &RMat, partial_transpose: bool) -> (f64, f64) {
    let js = rmul(&symplectic_form(partial_transpose), s);
    let m = rmul(&js, &js);
    let c = faddeev_leverrier(&m);
    // (l + a)^2 (l + b)^2: c3 = 2(a + b), c0 = a^2 b^2
    let sum = to_f64(&c[3]) / 2.0;
    let prod = to_f64(&c[0]).sqrt();
    let disc = (sum * sum - 4.0 * prod).max(0.0).sqrt();
    let big = 0.5 * (sum + disc);
    let small = prod / big;
    (big.sqrt(), small.sqrt())
}
