use fracdyn::equivalence::{
    deviation_linear, fit_p_linear, fit_p_linear_sweep, fit_p_system, golden_section, quadratic_fit, LinearFitOptions,
    LinearReference, SystemFitOptions,
};
use fracdyn::error::Error;
use fracdyn::exec::Exec;

#[test]
fn golden_section_finds_parabola_minimum() {
    let (x, fx, edge) = golden_section(|x| Ok((x - 0.37) * (x - 0.37) + 1.0), 0.0, 2.0, 1e-8).unwrap();
    assert!((x - 0.37).abs() < 1e-7);
    assert!((fx - 1.0).abs() < 1e-12);
    assert!(!edge);
    let (x, _, edge) = golden_section(|x| Ok(x), 0.0, 1.0, 1e-6).unwrap();
    assert_eq!(x, 0.0);
    assert!(edge);
}

#[test]
fn fitted_p_decreases_with_order() {
    let alphas = [1.1, 1.3, 1.5, 1.7, 1.9, 2.0];
    let fits = fit_p_linear_sweep(&alphas, &LinearFitOptions::default(), Exec::default()).unwrap();
    for w in fits.windows(2) {
        assert!(w[1].p_star < w[0].p_star, "{:?}", w);
    }
    assert!(fits[5].p_star.abs() < 1e-3);
    assert!(fits[5].e_star < 1e-12);
}

#[test]
fn sequential_and_default_sweeps_agree() {
    let alphas = [1.2, 1.6];
    let opts = LinearFitOptions { panels: 400, ..Default::default() };
    let a = fit_p_linear_sweep(&alphas, &opts, Exec::Sequential).unwrap();
    let b = fit_p_linear_sweep(&alphas, &opts, Exec::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn minimiser_beats_neighbours() {
    let opts = LinearFitOptions::default();
    let r = fit_p_linear(1.5, &opts).unwrap();
    let reference = LinearReference::new(1.5, opts.t_end, opts.panels, 1.0).unwrap();
    for dp in [-0.05, -0.01, 0.01, 0.05] {
        assert!(reference.deviation(r.p_star + dp).unwrap() >= r.e_star);
    }
    let direct = deviation_linear(1.5, r.p_star, opts.t_end, opts.panels).unwrap();
    assert!((direct - r.e_star).abs() < 1e-14);
}

#[test]
fn linear_fit_ignores_amplitude() {
    let base = fit_p_linear(1.7, &LinearFitOptions::default()).unwrap();
    let big = fit_p_linear(1.7, &LinearFitOptions { x0: 2.0, ..Default::default() }).unwrap();
    assert!((base.p_star - big.p_star).abs() < 1e-3);
    assert!((big.e_star / base.e_star - 4.0).abs() < 1e-6);
}

#[test]
fn pendulum_order_one_needs_no_damping() {
    let r = fit_p_system(1.0, &SystemFitOptions::pendulum()).unwrap();
    assert!(r.p_star.abs() < 5e-3, "{r:?}");
}

#[test]
fn quadratic_fit_recovers_exact_parabola() {
    let pts: Vec<(f64, f64)> = [1.0, 1.5, 2.0, 2.5].iter().map(|&a| (a, 0.5 - a + 0.25 * a * a)).collect();
    let q = quadratic_fit(&pts).unwrap();
    assert!((q.c0 - 0.5).abs() < 1e-12 && (q.c1 + 1.0).abs() < 1e-12 && (q.c2 - 0.25).abs() < 1e-12);
    assert!(q.residual < 1e-20);
    assert!((q.eval(3.0) + 0.25).abs() < 1e-12);
    assert!(matches!(quadratic_fit(&[(1.0, 1.0), (1.0, 2.0), (2.0, 0.0)]), Err(Error::RankDeficient(_))));
}

#[test]
fn orders_outside_range_are_rejected() {
    assert!(fit_p_linear(0.9, &LinearFitOptions::default()).is_err());
    assert!(fit_p_system(1.2, &SystemFitOptions::pendulum()).is_err());
}
