use fracdyn::classical::{damped_solution, make_rhs, rk4_integrate, ClassicalModel, DampedOscillator, VdpParams};
use proptest::prelude::*;

#[test]
fn initial_data_hold() {
    for p in [0.0, 0.5, 2.0, 3.0] {
        let o = DampedOscillator::new(1.0, p, 1.0, 0.7, -0.3).unwrap();
        assert!((o.eval(0.0) - 0.7).abs() < 1e-14);
        let h = 1e-6;
        let v = (o.eval(h) - o.eval(-h)) / (2.0 * h);
        assert!((v + 0.3).abs() < 1e-5, "p={p}: {v}");
    }
}

#[test]
fn closed_form_satisfies_the_equation() {
    let h = 1e-4;
    for p in [0.0, 0.5, 2.0, 3.0] {
        let o = DampedOscillator::unit(p, 1.0).unwrap();
        for i in 1..=200 {
            let t = 20.0 * i as f64 / 200.0;
            let (ym, y0, yp) = (o.eval(t - h), o.eval(t), o.eval(t + h));
            let acc = (yp - 2.0 * y0 + ym) / (h * h);
            let vel = (yp - ym) / (2.0 * h);
            let r = acc + p * vel + y0;
            assert!(r.abs() < 1e-6, "p={p} t={t}: {r}");
        }
    }
}

#[test]
fn rk4_is_fourth_order() {
    let err = |steps: usize| {
        let tr = rk4_integrate(|_, x, o| o[0] = -x[0], &[1.0], 1.0, steps).unwrap();
        tr.times()
            .iter()
            .zip(tr.component(0))
            .map(|(t, x)| (x - (-t).exp()).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(20) / err(40);
    assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn harmonic_energy_drift() {
    let tr = rk4_integrate(|_, x, o| {
        o[0] = x[1];
        o[1] = -x[0];
    }, &[1.0, 0.0], 100.0, 100_000)
    .unwrap();
    let last = tr.len() - 1;
    let e = tr.component(0)[last].powi(2) + tr.component(1)[last].powi(2);
    assert!((e - 1.0).abs() < 1e-6, "{e}");
}

#[test]
fn vdp_without_nonlinearity_rotates() {
    let f = make_rhs(ClassicalModel::Vdp(VdpParams::new(0.0, 0.0).unwrap())).unwrap();
    let tr = rk4_integrate(|t, x, o| f(t, x, o), &[1.0, 0.0], 2.0 * std::f64::consts::PI, 10_000).unwrap();
    for k in 0..tr.len() {
        let r = tr.component(0)[k].hypot(tr.component(1)[k]);
        assert!((r - 1.0).abs() < 1e-8);
    }
}

#[test]
fn vdp_cycle_amplitude_is_two() {
    let f = make_rhs(ClassicalModel::Vdp(VdpParams::new(1.0, 0.0).unwrap())).unwrap();
    let tr = rk4_integrate(|t, x, o| f(t, x, o), &[0.5, 0.0], 100.0, 100_000).unwrap();
    let tail = &tr.component(0)[70_000..];
    let amp = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((amp - 2.0).abs() < 0.02, "{amp}");
}

#[test]
fn blowup_is_reported() {
    let r = rk4_integrate(|_, x, o| o[0] = x[0] * x[0], &[1.0], 2.0, 1000);
    assert!(matches!(r, Err(fracdyn::error::Error::Blowup { .. })));
}

#[test]
fn invalid_parameters() {
    assert!(DampedOscillator::new(0.0, 1.0, 1.0, 1.0, 0.0).is_err());
    assert!(DampedOscillator::new(1.0, -0.1, 1.0, 1.0, 0.0).is_err());
    assert!(make_rhs(ClassicalModel::PendulumDamped { p: f64::NAN }).is_err());
    assert!(VdpParams::new(1.0, -1.0).is_err());
}

proptest! {
    #[test]
    fn solution_is_linear_in_data(p in 0.0f64..4.0, a in -2.0f64..2.0, b in -2.0f64..2.0, t in 0.0f64..15.0) {
        let o1 = DampedOscillator::new(1.0, p, 1.0, a, 0.0).unwrap();
        let o2 = DampedOscillator::new(1.0, p, 1.0, 0.0, b).unwrap();
        let o = DampedOscillator::new(1.0, p, 1.0, a, b).unwrap();
        let sum = damped_solution(&o1, t) + damped_solution(&o2, t);
        prop_assert!((damped_solution(&o, t) - sum).abs() < 1e-10);
    }

    #[test]
    fn damping_decays_energy(p in 0.05f64..4.0, t in 0.0f64..10.0) {
        let o = DampedOscillator::unit(p, 1.0).unwrap();
        let h = 1e-5;
        let energy = |s: f64| {
            let v = (o.eval(s + h) - o.eval((s - h).max(0.0))) / (s + h - (s - h).max(0.0));
            o.eval(s).powi(2) + v * v
        };
        prop_assert!(energy(t + 1.0) <= energy(t) + 1e-6);
    }
}
