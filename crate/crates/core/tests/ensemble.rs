use num_complex::Complex64;
use proptest::prelude::*;
use snlab_core::ensemble::{
    density_matrix, evolve_ensemble, spin_ensemble_pair, l1_distance, signaling_gap, trace_norm, von_neumann_consistency,
};
use snlab_core::{EnsembleMode, EnsembleState, GridSpec, NonlinearityUpdate, SnError, SolverConfig, WaveField};

/// Re-decomposes `sum p_j |psi_j><psi_j|` through the rotation `[[c, s], [-s, c]]`.
fn rotated(e: &EnsembleState, theta: f64) -> EnsembleState {
    let m = e.members();
    let (c, s) = (theta.cos(), theta.sin());
    let coeffs = [[c, s], [-s, c]];
    let members = coeffs
        .iter()
        .map(|row| {
            let data: Vec<Complex64> = (0..e.grid().len())
                .map(|i| row[0] * m[0].0.sqrt() * m[0].1.data()[i] + row[1] * m[1].0.sqrt() * m[1].1.data()[i])
                .collect();
            let mut psi = WaveField::new(*e.grid(), data).unwrap();
            let q = psi.norm_sqr();
            psi.normalize().unwrap();
            (q, psi)
        })
        .collect();
    EnsembleState::new(members).unwrap()
}

#[test]
fn pair_members_and_weights() {
    let grid = GridSpec::line(512, 20.0).unwrap();
    let (a, b) = spin_ensemble_pair(grid, 1.0, 4.0).unwrap();
    assert_eq!(a.len(), 2);
    assert_eq!(b.len(), 2);
    let pa: f64 = a.members().iter().map(|m| m.0).sum();
    let pb: f64 = b.members().iter().map(|m| m.0).sum();
    assert!((pa - 1.0).abs() < 1e-14 && (pb - 1.0).abs() < 1e-14);
    // the even combination carries more weight than the odd one
    assert!(b.members()[0].0 > b.members()[1].0);
    assert!(l1_distance(&grid, &a.density(), &b.density()) < 1e-13);
    let ra = density_matrix(&a).unwrap();
    let rb = density_matrix(&b).unwrap();
    assert!(trace_norm(&(ra - rb)) < 1e-12);
}

#[test]
fn mixed_mode_cannot_signal() {
    let grid = GridSpec::line(512, 24.0).unwrap();
    let (a, b) = spin_ensemble_pair(grid, 1.0, 4.0).unwrap();
    let cfg = SolverConfig::new(2e-4, 2500).with_sample_every(500);
    let mixed = signaling_gap(a.clone(), b.clone(), 2.0, 0.5, cfg, EnsembleMode::MixedStateSn).unwrap();
    let pure = signaling_gap(a, b, 2.0, 0.5, cfg, EnsembleMode::PureStateSn).unwrap();
    assert!(mixed.iter().all(|x| x.1 < 1e-10), "{mixed:?}");
    assert!(pure.last().unwrap().1 > 1e-3, "{pure:?}");
    assert_eq!(mixed.len(), pure.len());
}

#[test]
fn free_ensembles_never_signal() {
    let grid = GridSpec::line(256, 20.0).unwrap();
    let (a, b) = spin_ensemble_pair(grid, 1.0, 4.0).unwrap();
    let cfg = SolverConfig::new(5e-4, 1000).with_sample_every(250);
    let pure = signaling_gap(a, b, 0.0, 0.5, cfg, EnsembleMode::PureStateSn).unwrap();
    assert!(pure.iter().all(|x| x.1 < 1e-10));
}

#[test]
fn different_densities_are_rejected() {
    let grid = GridSpec::line(256, 20.0).unwrap();
    let (a, _) = spin_ensemble_pair(grid, 1.0, 4.0).unwrap();
    let (c, _) = spin_ensemble_pair(grid, 1.0, 6.0).unwrap();
    let err = signaling_gap(a, c, 1.0, 0.5, SolverConfig::new(1e-3, 10), EnsembleMode::MixedStateSn).unwrap_err();
    assert!(matches!(err, SnError::Precondition(_)), "{err:?}");
}

#[test]
fn members_stay_normalized() {
    let grid = GridSpec::line(256, 20.0).unwrap();
    let (a, _) = spin_ensemble_pair(grid, 1.0, 4.0).unwrap();
    for mode in [EnsembleMode::PureStateSn, EnsembleMode::MixedStateSn] {
        let tr = evolve_ensemble(a.clone(), 3.0, 0.5, SolverConfig::new(5e-4, 1000).with_sample_every(200), mode).unwrap();
        assert!(tr.max_norm_error < 1e-12, "{}: {}", mode.name(), tr.max_norm_error);
        assert_eq!(tr.times.len(), tr.densities.len());
        let total: f64 = tr.densities.last().unwrap().iter().sum::<f64>() * (40.0 / 256.0);
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn pure_mode_pulls_distinct_members_together() {
    let grid = GridSpec::line(256, 20.0).unwrap();
    let up = WaveField::gaussian_line(grid, 1.0, 2.0, 0.0).unwrap();
    let down = WaveField::gaussian_line(grid, 1.0, -2.0, 0.0).unwrap();
    let e = EnsembleState::new(vec![(0.5, up), (0.5, down)]).unwrap();
    let cfg = SolverConfig::new(5e-4, 1000);
    let mixed = evolve_ensemble(e.clone(), 10.0, 0.5, cfg, EnsembleMode::MixedStateSn).unwrap();
    let pure = evolve_ensemble(e, 10.0, 0.5, cfg, EnsembleMode::PureStateSn).unwrap();
    let mean = |tr: &snlab_core::EnsembleTrajectory| {
        let (_, psi) = &tr.final_state.members()[0];
        let z = snlab_core::Axis::centered(256, 20.0).unwrap();
        psi.density().iter().enumerate().map(|(k, r)| r * z.coord(k)).sum::<f64>() * z.step
    };
    // in mixed mode the upper member feels the lower one and moves down
    assert!(mean(&mixed) < mean(&pure) - 1e-3, "{} vs {}", mean(&mixed), mean(&pure));
}

#[test]
fn von_neumann_route_converges_at_second_order() {
    let grid = GridSpec::line(96, 12.0).unwrap();
    let (e0, _) = spin_ensemble_pair(grid, 1.0, 4.0).unwrap();
    let dev = |dt: f64| {
        let n = (0.25 / dt) as usize;
        let cfg = SolverConfig::new(dt, n).with_sample_every(n / 2).with_nonlinearity(NonlinearityUpdate::PredictorCorrector);
        von_neumann_consistency(e0.clone(), 4.0, 0.5, cfg).unwrap()
    };
    let a = dev(1e-3);
    let b = dev(5e-4);
    assert_eq!(a.samples.len(), 2);
    assert!(a.samples[0].1 < a.samples[1].1);
    let ratio = a.max_deviation / b.max_deviation;
    assert!(ratio > 3.0 && ratio < 5.0, "{} {} ratio {ratio}", a.max_deviation, b.max_deviation);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn mixed_evolution_depends_only_on_the_density_matrix(theta in 0.1f64..1.4, p in 0.2f64..0.8, g in 0.5f64..4.0) {
        let grid = GridSpec::line(128, 16.0).unwrap();
        let up = WaveField::gaussian_line(grid, 1.0, 2.0, 0.3).unwrap();
        let down = WaveField::gaussian_line(grid, 1.2, -1.5, -0.2).unwrap();
        let e = EnsembleState::new(vec![(p, up), (1.0 - p, down)]).unwrap();
        let f = rotated(&e, theta);
        let r0 = trace_norm(&(density_matrix(&e).unwrap() - density_matrix(&f).unwrap()));
        prop_assert!(r0 < 1e-12);
        let cfg = SolverConfig::new(1e-3, 300).with_sample_every(100);
        let gap = signaling_gap(e, f, g, 0.5, cfg, EnsembleMode::MixedStateSn).unwrap();
        prop_assert!(gap.iter().all(|x| x.1 < 1e-10), "{:?}", gap);
    }

    #[test]
    fn ensemble_validation(p in 0.0f64..1.0, bump in 1e-9f64..1e-3) {
        let grid = GridSpec::line(64, 8.0).unwrap();
        let psi = WaveField::gaussian_line(grid, 1.0, 0.0, 0.0).unwrap();
        prop_assert!(EnsembleState::new(vec![(p, psi.clone()), (1.0 - p, psi.clone())]).is_ok());
        prop_assert!(EnsembleState::new(vec![(p, psi.clone()), (1.0 - p + bump, psi.clone())]).is_err());
        prop_assert!(EnsembleState::new(vec![(-bump, psi.clone()), (1.0 + bump, psi)]).is_err());
    }
}
