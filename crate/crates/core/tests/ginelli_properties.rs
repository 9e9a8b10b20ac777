mod common;

use clv_core::cocycle::{
    degenerate_rotating_cocycle, diagonal_cocycle, lorenz63, rotating_cocycle, rotation, Cocycle, Lorenz63Params,
};
use clv_core::ginelli::{
    backward_phase, column_distance_series, convergence_study, forward_phase, intersection_variant, les_from_forward,
    random_tuples, run_ginelli, run_ginelli_with, GinelliConfig, InitMode, StudyConfig,
};
use clv_core::index::lyapunov_index_estimate;
use clv_core::linalg::{self, Mat, Vector};
use clv_core::subspace::{apply_map, distance};
use clv_core::{DegeneracyPattern, Subspace, TimeDomain, VectorTuple};

fn prefix(m: &Mat, k: usize) -> Subspace {
    Subspace::from_orthonormal(m.columns(0, k).into_owned()).unwrap()
}

fn line(v: Vector) -> Subspace {
    Subspace::from_vector(&v).unwrap()
}

#[test]
fn qr_frequency_does_not_change_filtrations() {
    let cases: Vec<(Box<dyn Cocycle<State = f64>>, DegeneracyPattern)> = vec![
        (Box::new(rotating_cocycle(0.2, -0.2, TimeDomain::Discrete).unwrap()), DegeneracyPattern::simple(2)),
        (
            Box::new(diagonal_cocycle(&[0.3, 0.1, -0.1, -0.3], TimeDomain::Discrete).unwrap()),
            DegeneracyPattern::simple(4),
        ),
        (
            Box::new(degenerate_rotating_cocycle(0.2, 0.37, Some(-0.2), TimeDomain::Discrete).unwrap()),
            DegeneracyPattern::new(vec![2, 2]).unwrap(),
        ),
    ];
    for (c, pattern) in cases {
        let mut rng = common::rng(21);
        let (init, _) = random_tuples(&mut rng, &pattern);
        let records: Vec<_> = [1.0, 5.0, 30.0]
            .iter()
            .map(|&tau| forward_phase(&c, &0.0, &GinelliConfig::new(30.0, 30.0, tau, pattern.clone()), &init).unwrap())
            .collect();
        for a in &records {
            for b in &records {
                for k in pattern.cumulative() {
                    for (fa, fb) in [(a.frame_at_origin(), b.frame_at_origin()), (a.final_frame(), b.final_frame())] {
                        let dist = distance(&prefix(fa, k), &prefix(fb, k)).unwrap();
                        assert!(dist < 1e-8, "level {k}: {dist:e}");
                    }
                }
            }
        }
    }
}

#[test]
fn backward_phase_matches_direct_propagation() {
    let c = rotating_cocycle(0.5, -0.5, TimeDomain::Discrete).unwrap();
    let pattern = DegeneracyPattern::simple(2);
    let cfg = GinelliConfig::new(20.0, 10.0, 1.0, pattern.clone());
    let mut rng = common::rng(22);
    let (init, alpha) = random_tuples(&mut rng, &pattern);
    let rec = forward_phase(&c, &0.3, &cfg, &init).unwrap();
    let out = backward_phase(&rec, &alpha, &cfg).unwrap();
    let future = c.flow(10.0, &0.3).unwrap();
    let direct = c.propagate(-10.0, &future).unwrap() * rec.final_frame() * &alpha;
    for i in 0..2 {
        let expected = line(direct.column(i).into_owned());
        let dist = distance(&out.at_origin[i], &expected).unwrap();
        assert!(dist < 1e-8, "block {i}: {dist:e}");
    }
}

#[test]
fn fitted_rates_respect_the_gap_bound() {
    let cases: Vec<(&str, Box<dyn Cocycle<State = f64>>, Vec<f64>)> = vec![
        (
            "diagonal",
            Box::new(diagonal_cocycle(&[0.5, 0.1, -0.3, -0.9], TimeDomain::Discrete).unwrap()),
            vec![10.0, 20.0, 30.0, 40.0],
        ),
        ("rotating", Box::new(rotating_cocycle(0.5, -0.5, TimeDomain::Discrete).unwrap()), vec![5.0, 10.0, 15.0, 20.0]),
        (
            "degenerate",
            Box::new(degenerate_rotating_cocycle(0.3, 0.37, Some(-0.3), TimeDomain::Discrete).unwrap()),
            vec![10.0, 15.0, 20.0, 25.0],
        ),
    ];
    for (name, c, times) in cases {
        let reference = c.oseledets(&0.0).unwrap();
        let res = convergence_study(&c, &0.0, &reference, &StudyConfig::diagonal(&times, 10, 42, 1.0)).unwrap();
        for (rate, expected) in res.rates.iter().zip(&res.expected_rates) {
            assert!(!rate.saturated, "{name}: {rate:?}");
            assert!(rate.rate <= expected + 0.1, "{name}: {} vs {expected}", rate.rate);
        }
        assert_eq!(res.trial_success_fraction, Some(1.0), "{name}");
    }
}

#[test]
fn interval_outputs_are_covariant() {
    let c = rotating_cocycle(0.5, -0.5, TimeDomain::Discrete).unwrap();
    let cfg = GinelliConfig::new(30.0, 30.0, 1.0, DegeneracyPattern::simple(2))
        .with_seed(7)
        .with_interval(vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    let omega0 = 0.3;
    let res = run_ginelli(&c, &omega0, &cfg).unwrap();
    for (m, blocks) in &res.subspaces_on_interval {
        let phi = c.propagate(*m, &omega0).unwrap();
        let here = c.oseledets(&c.flow(*m, &omega0).unwrap()).unwrap();
        for i in 0..2 {
            let moved = apply_map(&phi, &res.subspaces_at_origin[i]).unwrap();
            let dist = distance(&moved, &blocks[i]).unwrap();
            assert!(dist < 1e-9, "m {m} block {i}: {dist:e}");
            assert!(distance(&blocks[i], &here.spaces[i]).unwrap() < 1e-4);
        }
    }
}

#[test]
fn benettin_rates_on_diagonal_are_exact() {
    let lambdas = [0.5, 0.1, -0.3, -0.9];
    let c = diagonal_cocycle(&lambdas, TimeDomain::Discrete).unwrap();
    let res = run_ginelli(&c, &0.0, &GinelliConfig::new(60.0, 60.0, 1.0, DegeneracyPattern::simple(4))).unwrap();
    for (rate, lambda) in res.les.column_rates.iter().zip(lambdas) {
        assert!((rate - lambda).abs() < 1e-13, "{rate} vs {lambda}");
    }
    for i in 0..4 {
        assert!(distance(&res.subspaces_at_origin[i], &Subspace::coordinate(4, &[i])).unwrap() < 1e-8);
    }
    let pair = diagonal_cocycle(&[1.0, -1.0], TimeDomain::Discrete).unwrap();
    for t in [1.0, 7.0, 25.0] {
        let cfg = GinelliConfig::new(t, t, 1.0, DegeneracyPattern::simple(2));
        let rec = forward_phase(&pair, &0.0, &cfg, &VectorTuple::standard_basis(2)).unwrap();
        let rates = les_from_forward(&rec, None).unwrap().column_rates;
        assert!((rates[0] - 1.0).abs() < 1e-14 && (rates[1] + 1.0).abs() < 1e-14, "{rates:?}");
    }
}

#[test]
fn rotating_rates_and_spaces() {
    let c = rotating_cocycle(0.5, -0.5, TimeDomain::Discrete).unwrap();
    let res = run_ginelli(&c, &0.3, &GinelliConfig::new(100.0, 100.0, 1.0, DegeneracyPattern::simple(2))).unwrap();
    assert!((res.les.column_rates[0] - 0.5).abs() < 1e-6 && (res.les.column_rates[1] + 0.5).abs() < 1e-6);
    assert_eq!(res.les.spectrum.pattern().sizes(), &[1, 1]);

    // Gap 0.5 at t1 = t2 = 30.
    let c = rotating_cocycle(0.25, -0.25, TimeDomain::Discrete).unwrap();
    let reference = c.oseledets(&0.3).unwrap();
    for seed in 0..5 {
        let cfg = GinelliConfig::new(30.0, 30.0, 1.0, DegeneracyPattern::simple(2)).with_seed(seed);
        let res = run_ginelli(&c, &0.3, &cfg).unwrap();
        for i in 0..2 {
            assert!(distance(&res.subspaces_at_origin[i], &reference.spaces[i]).unwrap() < 1e-5);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let c = degenerate_rotating_cocycle(0.3, 0.37, Some(-0.3), TimeDomain::Discrete).unwrap();
    let cfg = GinelliConfig::new(20.0, 20.0, 1.0, DegeneracyPattern::new(vec![2, 2]).unwrap())
        .with_seed(99)
        .with_interval(vec![-1.0, 1.0]);
    assert_eq!(run_ginelli(&c, &0.1, &cfg).unwrap(), run_ginelli(&c, &0.1, &cfg).unwrap());

    let c = rotating_cocycle(0.5, -0.5, TimeDomain::Discrete).unwrap();
    let reference = c.oseledets(&0.0).unwrap();
    let cfg = StudyConfig::diagonal(&[5.0, 10.0, 15.0], 8, 3, 1.0);
    let a = convergence_study(&c, &0.0, &reference, &cfg).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| convergence_study(&c, &0.0, &reference, &cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn degenerate_block_converges_while_columns_wander() {
    let c = degenerate_rotating_cocycle(0.3, 0.37, Some(-0.3), TimeDomain::Discrete).unwrap();
    let pattern = DegeneracyPattern::new(vec![2, 2]).unwrap();
    let reference = c.oseledets(&0.0).unwrap();
    let cfg = GinelliConfig::new(30.0, 30.0, 1.0, pattern).with_seed(42);
    let res = run_ginelli(&c, &0.0, &cfg).unwrap();
    assert!(distance(&res.subspaces_at_origin[0], &reference.spaces[0]).unwrap() < 1e-6);
    assert_eq!(res.les.spectrum.pattern().sizes(), &[2, 2]);
    let (a, b) = (res.les.column_rates[0], res.les.column_rates[1]);
    assert!((a - b).abs() < 10.0 / 30.0);

    let target = line(reference.spaces[0].basis().column(0).into_owned());
    let runtimes: Vec<f64> = (10..=40).map(f64::from).collect();
    for column in 0..2 {
        let series = column_distance_series(&c, &0.0, &cfg, &runtimes, column, &target).unwrap();
        let fit = lyapunov_index_estimate(&series, 0.5).unwrap();
        assert!(fit.residual > 0.1, "column {column}: {fit:?}");
    }
}

#[test]
fn lorenz_exponents_and_flow_direction() {
    let params = Lorenz63Params::default();
    let neutral_sum = -(params.sigma + 1.0 + params.beta);
    let c = lorenz63(params).unwrap();
    let omega0 = 50.0;
    let res = run_ginelli(&c, &omega0, &GinelliConfig::new(50.0, 500.0, 0.01, DegeneracyPattern::simple(3))).unwrap();
    let rates = &res.les.column_rates;
    assert!((rates.iter().sum::<f64>() - neutral_sum).abs() < 0.1, "{rates:?}");
    assert!(rates[0] > 0.8 && rates[0] < 1.0, "{rates:?}");
    assert!(rates[1].abs() < 0.05, "{rates:?}");
    let x = c.point(omega0).unwrap();
    let f = c.vector_field(&x);
    let field = line(Vector::from_column_slice(f.as_slice()));
    let clv = line(res.vectors_at_origin.column(1).into_owned());
    let angle = distance(&clv, &field).unwrap().asin();
    assert!(angle < 0.05, "angle {angle}");
}

#[test]
fn intersection_agrees_with_backward_phase() {
    let c = diagonal_cocycle(&[0.5, 0.1, -0.3], TimeDomain::Discrete).unwrap();
    let cfg = GinelliConfig::new(60.0, 60.0, 1.0, DegeneracyPattern::simple(3)).with_seed(4);
    for (i, block) in intersection_variant(&c, &0.0, &cfg).unwrap().iter().enumerate() {
        assert!(distance(block, &Subspace::coordinate(3, &[i])).unwrap() < 1e-9);
    }

    let c = rotating_cocycle(0.5, -0.5, TimeDomain::Discrete).unwrap();
    let reference = c.oseledets(&0.3).unwrap();
    let cfg = GinelliConfig::new(30.0, 30.0, 1.0, DegeneracyPattern::simple(2)).with_seed(5);
    let blocks = intersection_variant(&c, &0.3, &cfg).unwrap();
    let ginelli = run_ginelli(&c, &0.3, &cfg).unwrap();
    for i in 0..2 {
        assert!(distance(&blocks[i], &reference.spaces[i]).unwrap() < 1e-5);
        assert!(distance(&blocks[i], &ginelli.subspaces_at_origin[i]).unwrap() < 1e-5);
    }
}

/// `b_1` placed in the slow space at the start of the run.
fn adversarial_init(c: &impl Cocycle<State = f64>, t1: f64) -> VectorTuple {
    let past = c.flow(-t1, &0.0).unwrap();
    let r = rotation(past);
    let mut init = Mat::zeros(2, 2);
    init.set_column(0, &r.column(1));
    init.set_column(1, &r.column(0));
    VectorTuple::new(init)
}

#[test]
fn fixed_init_in_the_slow_space_does_not_converge() {
    let c = rotating_cocycle(0.5, -0.5, TimeDomain::continuous(0.05).unwrap()).unwrap();
    let fast = c.oseledets(&0.0).unwrap().spaces[0].clone();
    let t1 = 20.25;
    let init = adversarial_init(&c, t1);
    for t2 in [1.0, 10.0, 25.0, 40.0] {
        let cfg = GinelliConfig::new(t1, t2, 0.25, DegeneracyPattern::simple(2));
        let res = run_ginelli_with(&c, &0.0, &cfg, &init, &Mat::identity(2, 2)).unwrap();
        assert!(distance(&res.subspaces_at_origin[0], &fast).unwrap() > 0.9, "t2 {t2}");
    }
}

#[test]
fn random_init_converges_in_measure() {
    let c = rotating_cocycle(0.5, -0.5, TimeDomain::continuous(0.05).unwrap()).unwrap();
    let reference = c.oseledets(&0.0).unwrap();
    let generic: Vec<(f64, f64)> = [10.0, 15.0, 20.0, 25.0].iter().map(|&m| (m + 0.3, m)).collect();
    let res = convergence_study(&c, &0.0, &reference, &StudyConfig::new(generic, 50, 42, 0.05)).unwrap();
    assert_eq!(res.trial_success_fraction, Some(1.0));
    let fractions: Vec<f64> = res.cells.iter().map(|cell| cell.success_fraction).collect();
    assert!(fractions[fractions.len() - 1] > fractions[0], "{fractions:?}");

    let adversarial: Vec<(f64, f64)> = [10.25, 15.25, 20.25, 25.25].iter().map(|&t1| (t1, t1 - 0.25)).collect();
    let mut cfg = StudyConfig::new(adversarial, 1, 42, 0.05);
    cfg.init = InitMode::Fixed { init: adversarial_init(&c, 20.25), alpha: Mat::identity(2, 2) };
    let res = convergence_study(&c, &0.0, &reference, &cfg).unwrap();
    assert!(res.cells.iter().all(|cell| cell.success_fraction < 1.0));
    assert_eq!(res.trial_success_fraction, Some(0.0));

    let discrete = rotating_cocycle(0.5, -0.5, TimeDomain::Discrete).unwrap();
    let res = convergence_study(&discrete, &0.0, &reference, &StudyConfig::diagonal(&[5.0, 10.0, 20.0, 30.0], 200, 42, 1.0))
        .unwrap();
    assert_eq!(res.trial_success_fraction, Some(1.0));
}

#[test]
fn les_group_equal_rates() {
    let c = degenerate_rotating_cocycle(0.4, 0.37, None, TimeDomain::Discrete).unwrap();
    let cfg = GinelliConfig::new(10.0, 50.0, 1.0, DegeneracyPattern::new(vec![2]).unwrap());
    let rec = forward_phase(&c, &0.0, &cfg, &VectorTuple::new(linalg::random_orthogonal(&mut common::rng(3), 2))).unwrap();
    let les = les_from_forward(&rec, None).unwrap();
    assert_eq!(les.spectrum.pattern().sizes(), &[2]);
    assert!((les.spectrum.exponents()[0] - 0.4).abs() < 1e-12);
}
