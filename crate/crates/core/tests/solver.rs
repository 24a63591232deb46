use std::io::Cursor;

use fracdyn::classical::{make_rhs, rk4_integrate, ClassicalModel};
use fracdyn::grid::UniformGrid;
use fracdyn::metrics::residual_error;
use fracdyn::mittag_leffler::OscillatorSolution;
use fracdyn::solver::{solve_collocation, solve_system, solve_with_report, FracProblem, InitialGuess, SolverOptions};
use fracdyn::trajectory::Trajectory;

fn decay(n: usize, anchor: usize, value: f64) -> FracProblem {
    FracProblem::scalar(0.5, UniformGrid::new(0.0, 1.0, n).unwrap(), anchor, value, |_, x| -x).unwrap()
}

#[test]
fn zero_field_keeps_constant() {
    for alpha in [0.2, 0.7, 1.0] {
        let p = FracProblem::scalar(alpha, UniformGrid::new(0.0, 1.0, 10).unwrap(), 0, 1.0, |_, _| 0.0).unwrap();
        let tr = solve_collocation(&p, &SolverOptions::default()).unwrap();
        assert!(tr.component(0).iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}

#[test]
fn anchor_is_exact_and_position_independent() {
    let n = 30;
    let fwd = solve_collocation(&decay(n, 0, 1.0), &SolverOptions::default()).unwrap();
    assert_eq!(fwd.component(0)[0], 1.0);
    let end = fwd.component(0)[n];
    let back = solve_collocation(&decay(n, n, end), &SolverOptions::default()).unwrap();
    assert_eq!(back.component(0)[n], end);
    let mid = solve_collocation(&decay(n, 11, fwd.component(0)[11]), &SolverOptions::default()).unwrap();
    for k in 0..=n {
        assert!((fwd.component(0)[k] - back.component(0)[k]).abs() < 1e-6);
        assert!((fwd.component(0)[k] - mid.component(0)[k]).abs() < 1e-6);
    }
}

#[test]
fn linear_problems_take_one_newton_step() {
    for guess in [InitialGuess::Constant, InitialGuess::Provided(vec![vec![-3.0; 21]])] {
        let opts = SolverOptions::default().with_guess(guess);
        let (_, rep) = solve_with_report(&decay(20, 0, 1.0), &opts).unwrap();
        assert!(rep.iterations <= 1, "{rep:?}");
        let (_, rep) = solve_with_report(&decay(20, 20, 0.4), &opts).unwrap();
        assert!(rep.iterations <= 1, "{rep:?}");
    }
}

#[test]
fn order_one_pendulum_matches_rk4() {
    let rhs = make_rhs(ClassicalModel::PendulumDamped { p: 0.0 }).unwrap();
    let g = UniformGrid::new(0.0, 10.0, 400).unwrap();
    let p = FracProblem::from_arc(1.0, g, 0, vec![0.01, 0.0], rhs.clone()).unwrap();
    let tr = solve_system(&p, &SolverOptions::default()).unwrap();
    let rk = rk4_integrate(|t, x, o| rhs(t, x, o), &[0.01, 0.0], 10.0, 4000).unwrap();
    for k in 0..=400 {
        assert!((tr.component(0)[k] - rk.component(0)[10 * k]).abs() < 1e-3);
    }
}

#[test]
fn small_pendulum_follows_doubled_order_oscillator() {
    let rhs = make_rhs(ClassicalModel::PendulumDamped { p: 0.0 }).unwrap();
    let g = UniformGrid::new(0.0, 5.0, 200).unwrap();
    let p = FracProblem::from_arc(0.5, g.clone(), 0, vec![0.01, 0.0], rhs).unwrap();
    let tr = solve_system(&p, &SolverOptions::default()).unwrap();
    let mut ex = OscillatorSolution::new(0.01, 0.0, 1.0, 1.0).unwrap().evaluator().unwrap();
    for (k, &t) in g.nodes().iter().enumerate() {
        assert!((tr.component(0)[k] - ex.eval(t).unwrap()).abs() < 2e-3);
    }
}

#[test]
fn csv_reingest_converges_immediately() {
    let p = FracProblem::scalar(0.5, UniformGrid::new(0.0, 1.0, 40).unwrap(), 40, 2.5, |_, x| x.sin()).unwrap();
    let (tr, _) = solve_with_report(&p, &SolverOptions::default()).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    let back = Trajectory::read_csv(Cursor::new(buf), 0.5).unwrap();
    assert_eq!(back.states(), tr.states());
    let opts = SolverOptions::default().with_guess(InitialGuess::Provided(back.states().to_vec()));
    let (again, rep) = solve_with_report(&p, &opts).unwrap();
    assert!(rep.iterations <= 2, "{rep:?}");
    assert!((again.component(0)[0] - tr.component(0)[0]).abs() < 1e-10);
}

#[test]
fn residual_vanishes_for_exact_constants() {
    let p = FracProblem::scalar(0.3, UniformGrid::new(0.0, 2.0, 8).unwrap(), 0, 4.0, |_, _| 0.0).unwrap();
    let tr = solve_collocation(&p, &SolverOptions::default()).unwrap();
    assert!(residual_error(&p, &tr).unwrap() < 1e-18);
}

#[test]
fn bad_inputs_are_rejected() {
    let g = UniformGrid::new(0.0, 1.0, 4).unwrap();
    assert!(FracProblem::scalar(0.5, g.clone(), 5, 1.0, |_, x| x).is_err());
    assert!(FracProblem::scalar(1.5, g.clone(), 0, 1.0, |_, x| x).is_err());
    let scalar = FracProblem::scalar(0.5, g, 0, 1.0, |_, x| x).unwrap();
    assert!(solve_system(&scalar, &SolverOptions::default()).is_err());
}
