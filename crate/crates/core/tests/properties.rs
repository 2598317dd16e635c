use num_complex::Complex64;
use proptest::prelude::*;
use snlab_core::correlations::{log_negativity, mutual_information, symplectic_eigenvalues};
use snlab_core::fields::{axial_kernel, erf_potential};
use snlab_core::gaussian::{covariance_natural, thermal_scale};
use snlab_core::snapshot::{read_field, write_field};
use snlab_core::solver::LineSolver;
use snlab_core::specfun::{elliptic_k, erf};
use snlab_core::{
    CovarianceMatrix, EllipticModulus, FrequencyConvention, GridSpec, PhysicalParams, SolverConfig, WaveField,
};

type M4 = [[f64; 4]; 4];

fn mul(a: &M4, b: &M4) -> M4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|l| a[i][l] * b[l][j]).sum()))
}

fn transpose(a: &M4) -> M4 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

/// Local symplectic map: squeeze `r` and shear `c` on each mode.
fn local(r1: f64, c1: f64, r2: f64, c2: f64) -> M4 {
    let mut s = [[0.0; 4]; 4];
    s[0][0] = r1;
    s[1][0] = c1 * r1;
    s[1][1] = 1.0 / r1;
    s[2][2] = r2;
    s[3][2] = c2 * r2;
    s[3][3] = 1.0 / r2;
    s
}

fn symmetrized(m: &M4) -> M4 {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m[i][j] + m[j][i])))
}

proptest! {
    #[test]
    fn evolved_states_are_physical(tau in 0.01f64..30.0, wt in 0.0f64..6.0) {
        let cm = covariance_natural(tau, wt / tau);
        let (p, m) = symplectic_eigenvalues(&cm).unwrap();
        prop_assert!(m >= 0.5 - 1e-9 && p >= m);
        prop_assert!(log_negativity(&cm).unwrap() >= 0.0);
        prop_assert!(mutual_information(&cm).unwrap() >= 0.0);
        let e = cm.entries();
        for j in 0..4 {
            for k in 0..4 {
                prop_assert_eq!(e[j][k], e[k][j]);
            }
        }
    }

    #[test]
    fn correlations_are_local_symplectic_invariants(
        tau in 0.5f64..5.0,
        w in 0.2f64..1.0,
        nbar in 0.0f64..3.0,
        r1 in 0.5f64..2.0,
        c1 in -1.0f64..1.0,
        r2 in 0.5f64..2.0,
        c2 in -1.0f64..1.0,
    ) {
        let cm = thermal_scale(&covariance_natural(tau, w), nbar).unwrap();
        let s = local(r1, c1, r2, c2);
        let moved = CovarianceMatrix::from_entries(symmetrized(&mul(&mul(&s, cm.entries()), &transpose(&s)))).unwrap();
        let (i0, i1) = (mutual_information(&cm).unwrap(), mutual_information(&moved).unwrap());
        prop_assert!((i0 - i1).abs() < 1e-6 * i0.max(1e-3), "{} vs {}", i0, i1);
        let (e0, e1) = (log_negativity(&cm).unwrap(), log_negativity(&moved).unwrap());
        prop_assert!((e0 - e1).abs() < 1e-6 * e0.max(1e-3), "{} vs {}", e0, e1);
    }

    #[test]
    fn thermal_scaling_multiplies_the_spectrum(tau in 0.0f64..5.0, w in 0.0f64..1.0, nbar in 0.0f64..50.0) {
        let base = covariance_natural(tau, w);
        let hot = thermal_scale(&base, nbar).unwrap();
        let (p0, m0) = symplectic_eigenvalues(&base).unwrap();
        let (p1, m1) = symplectic_eigenvalues(&hot).unwrap();
        let k = 2.0 * nbar + 1.0;
        prop_assert!((p1 / (k * p0) - 1.0).abs() < 1e-9);
        prop_assert!((m1 / (k * m0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn erf_is_odd_bounded_and_increasing(x in -8.0f64..8.0, dx in 1e-3f64..1.0) {
        let a = erf(x).unwrap();
        prop_assert_eq!(erf(-x).unwrap(), -a);
        prop_assert!(a.abs() <= 1.0);
        prop_assert!(erf(x + dx).unwrap() >= a);
    }

    #[test]
    fn elliptic_k_grows_from_half_pi(k in 0.0f64..0.99, dk in 1e-4f64..0.009) {
        let a = elliptic_k(EllipticModulus::new(k).unwrap());
        let b = elliptic_k(EllipticModulus::new(k + dk).unwrap());
        prop_assert!(a >= std::f64::consts::FRAC_PI_2 && b > a);
    }

    #[test]
    fn smeared_potential_is_bounded_by_the_point_mass(r in 1e-3f64..50.0) {
        let p = PhysicalParams::silica_pair(FrequencyConvention::Cyclic, 0.0);
        let gm2 = p.g_newton * p.m * p.m;
        let rr = r * p.sigma;
        let v = erf_potential(rr, &p);
        prop_assert!(v < 0.0 && v >= -gm2 / rr * (1.0 + 1e-15));
        prop_assert!(erf_potential(1.01 * rr, &p) > v);
    }

    #[test]
    fn ring_kernel_is_symmetric(s in 0.01f64..5.0, sp in 0.01f64..5.0, dz in 0.01f64..5.0) {
        let a = axial_kernel(s, sp, dz).unwrap();
        let b = axial_kernel(sp, s, -dz).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * a.abs());
        prop_assert!(a > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn normalization_and_snapshot_round_trip(
        values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 24),
        t in 0.0f64..10.0,
    ) {
        prop_assume!(values.iter().any(|v| v.0 != 0.0 || v.1 != 0.0));
        let grid = GridSpec::cylinder(4, 6, 3.0, 2.0).unwrap();
        let data = values.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let mut psi = WaveField::new(grid, data).unwrap();
        psi.normalize().unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-13);
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("psi");
        write_field(&stem, &psi, t, None).unwrap();
        let (back, meta) = read_field(&stem).unwrap();
        prop_assert_eq!(back, psi);
        prop_assert_eq!(meta.t, t);
    }

    #[test]
    fn line_evolution_is_unitary(g in 0.0f64..10.0, k0 in -2.0f64..2.0, z0 in -3.0f64..3.0) {
        let grid = GridSpec::line(128, 16.0).unwrap();
        let mut psi = WaveField::gaussian_line(grid, 1.0, z0, k0).unwrap();
        let solver = LineSolver::new(&grid, g, 0.5, SolverConfig::new(1e-3, 50)).unwrap();
        for _ in 0..50 {
            solver.step(&mut psi).unwrap();
        }
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
