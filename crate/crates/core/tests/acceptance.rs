//! Reproduction checks, one line per criterion. Run with
//! `cargo test -p fracdyn --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use fracdyn::caputo::{caputo_apply, CaputoWeights};
use fracdyn::classical::{make_rhs, rk4_integrate, ClassicalModel, VdpParams};
use fracdyn::equivalence::{
    fit_beta_vdp, fit_p_linear_sweep, fit_p_system_sweep, quadratic_fit, LinearFitOptions, SystemFitOptions,
    LINEAR_FIT_ALPHAS,
};
use fracdyn::exec::Exec;
use fracdyn::grid::UniformGrid;
use fracdyn::metrics::{l2_error, residual_error};
use fracdyn::mittag_leffler::{gamma, ml_eval, MLParams, OscillatorSolution};
use fracdyn::solver::{solve_collocation, FracProblem, SolverOptions};
use fracdyn::spline::build_spline;
use fracdyn::stability::{classify_attractor, mu_critical, simulate_fractional_vdp, AttractorKind, ClassifyOptions, VdpRun};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn rel(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

fn ml(a: f64, b: f64, z: f64) -> fracdyn::error::Result<f64> {
    ml_eval(MLParams::new(a, b)?, z)
}

fn c1_mittag_leffler() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0f64;
    for _ in 0..200 {
        let z = rng.gen_range(-40.0..20.0);
        worst = worst.max(rel(ml(1.0, 1.0, z)?, f64::exp(z)));
        let t: f64 = rng.gen_range(0.0..12.0);
        // cos vanishes at odd multiples of π/2; compare absolutely there
        let c = ml(2.0, 1.0, -t * t)?;
        worst = worst.max((c - t.cos()).abs() / t.cos().abs().max(1e-2));
        let z: f64 = rng.gen_range(0.0..100.0);
        worst = worst.max(rel(ml(2.0, 1.0, z)?, z.sqrt().cosh()));
        let x: f64 = rng.gen_range(0.0..6.0);
        worst = worst.max(rel(ml(0.5, 1.0, -x)?, (x * x).exp() * erfc(x)));
    }
    Ok((worst <= 1e-8, format!("worst relative error {worst:.2e} over 800 samples (bound 1e-8)")))
}

fn c2_caputo_exactness() -> Outcome {
    let g = UniformGrid::new(0.0, 1.0, 64)?;
    let w = CaputoWeights::new(&g, 0.5)?;
    let lin: Vec<f64> = g.nodes().to_vec();
    let sq: Vec<f64> = g.nodes().iter().map(|t| t * t).collect();
    let d1 = *caputo_apply(&w, &build_spline(&g, &lin)?)?.last().unwrap();
    let d2 = *caputo_apply(&w, &build_spline(&g, &sq)?)?.last().unwrap();
    let e1 = rel(d1, 1.0 / gamma(1.5));
    let e2 = rel(d2, 2.0 / gamma(2.5));
    Ok((e1 <= 1e-8 && e2 <= 1e-8, format!("D^0.5 t: rel {e1:.1e}, D^0.5 t^2: rel {e2:.1e} at t=1, n=64")))
}

const TABLE1: [[f64; 3]; 4] =
    [[7.4e-3, 1.7e-3, 2.0e-4], [3.0e-3, 4.9e-4, 2.8e-5], [1.1e-3, 1.4e-4, 5.9e-6], [3.0e-4, 3.7e-5, 1.3e-6]];

fn c3_table1() -> Outcome {
    let ns = [5usize, 10, 20, 40];
    let alphas = [0.1, 0.5, 0.9];
    let mut e = [[0.0; 3]; 4];
    for (i, &n) in ns.iter().enumerate() {
        for (j, &a) in alphas.iter().enumerate() {
            let g = UniformGrid::new(0.0, 1.0, n)?;
            let p = FracProblem::scalar(a, g, 0, 1.0, |_, x| -x)?;
            let tr = solve_collocation(&p, &SolverOptions::default())?;
            let mut ex = OscillatorSolution::new(1.0, 0.0, 1.0, a)?.evaluator()?;
            e[i][j] = l2_error(&tr, |t| ex.eval(t))?;
        }
    }
    let mut worst = 1f64;
    for i in 0..4 {
        for j in 0..3 {
            let r = e[i][j] / TABLE1[i][j];
            worst = worst.max(r.max(1.0 / r));
        }
    }
    let in_n = (0..3).all(|j| (1..4).all(|i| e[i][j] < e[i - 1][j]));
    let in_alpha = (0..4).all(|i| e[i][0] > e[i][1] && e[i][1] > e[i][2]);
    Ok((
        worst <= 3.0 && in_n && in_alpha,
        format!("worst ratio to reference {worst:.2}; decreasing in n: {in_n}; decreasing in alpha: {in_alpha}"),
    ))
}

fn sine_problem(n: usize, anchor: usize, value: f64) -> fracdyn::error::Result<FracProblem> {
    FracProblem::scalar(0.5, UniformGrid::new(0.0, 1.0, n)?, anchor, value, |_, x| x.sin())
}

fn c4_table2() -> Outcome {
    let ns = [5usize, 10, 20, 30, 40];
    let mut x0 = Vec::new();
    let mut en = Vec::new();
    for &n in &ns {
        let p = sine_problem(n, n, 2.5)?;
        let tr = solve_collocation(&p, &SolverOptions::default())?;
        x0.push(tr.component(0)[0]);
        en.push(residual_error(&p, &tr)?);
    }
    let er: Vec<f64> = x0.windows(2).map(|w| 100.0 * ((w[1] - w[0]) / w[1]).abs()).collect();
    let er_dec = er.windows(2).all(|w| w[1] < w[0]);
    let en_dec = en.windows(2).all(|w| w[1] < w[0]);
    let x40 = x0[4];
    let back = solve_collocation(&sine_problem(40, 0, x40)?, &SolverOptions::default())?;
    let x1 = back.component(0)[40];
    let ok = (x40 - 1.73085).abs() <= 5e-3 && er_dec && en_dec && (x1 - 2.5).abs() <= 1e-6;
    Ok((
        ok,
        format!(
            "x(0)={x40:.5} at n=40; e_r% {:?} decreasing: {er_dec}; e_n {:?} decreasing: {en_dec}; round trip x(1)={x1:.9}",
            er.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            en.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>(),
        ),
    ))
}

fn c5_table3() -> Outcome {
    let rows = [(1.1, 1.140), (1.3, 0.891), (1.5, 0.668), (1.7, 0.433), (1.9, 0.152)];
    let opts = LinearFitOptions::default();
    let alphas: Vec<f64> = rows.iter().map(|r| r.0).chain([2.0]).collect();
    let fits = fit_p_linear_sweep(&alphas, &opts, Exec::default())?;
    let worst = rows.iter().zip(&fits).map(|(r, f)| (f.p_star - r.1).abs()).fold(0.0, f64::max);
    let p2 = fits[5].p_star;
    let pts: Vec<(f64, f64)> = fits
        .iter()
        .filter(|f| LINEAR_FIT_ALPHAS.contains(&f.alpha))
        .map(|f| (f.alpha, f.p_star))
        .collect();
    let q = quadratic_fit(&pts)?;
    let dc = [q.c0 - 1.49409, q.c1 - 0.056127, q.c2 + 0.401446].iter().map(|d| d.abs()).fold(0.0, f64::max);
    Ok((
        worst <= 0.06 && p2.abs() <= 1e-3 && dc <= 0.1,
        format!(
            "max |dp*| {worst:.4}; p*(2)={p2:.1e}; fit ({:.4}, {:.4}, {:.4}), max coefficient gap {dc:.3}",
            q.c0, q.c1, q.c2
        ),
    ))
}

fn c6_table4() -> Outcome {
    let rows = [(0.5, 1.203), (0.7, 0.757), (0.9, 0.294), (0.95, 0.148)];
    let alphas: Vec<f64> = rows.iter().map(|r| r.0).chain([1.0]).collect();
    let fits = fit_p_system_sweep(&alphas, &SystemFitOptions::pendulum(), Exec::default())?;
    let worst = rows.iter().zip(&fits).map(|(r, f)| (f.p_star - r.1).abs()).fold(0.0, f64::max);
    let p1 = fits[4].p_star;
    let ps: Vec<String> = fits.iter().map(|f| format!("{:.3}", f.p_star)).collect();
    Ok((worst <= 0.08 && p1.abs() <= 5e-3, format!("p* {ps:?}; max |dp*| {worst:.4}; p*(1)={p1:.1e}")))
}

fn c7_mu_critical() -> Outcome {
    let mut worst = 0f64;
    for k in 1..100 {
        let a = k as f64 / 100.0;
        worst = worst.max((mu_critical(a)? - 2.0 * (a * PI / 2.0).cos()).abs());
    }
    let lo = (mu_critical(1e-6)? - 2.0).abs();
    let hi = mu_critical(1.0 - 1e-6)?.abs();
    Ok((
        worst <= 1e-12 && lo <= 1e-6 && hi <= 1e-6,
        format!("max gap {worst:.1e} on 99 points; |mu_c(1e-6) - 2| = {lo:.1e}; |mu_c(1 - 1e-6)| = {hi:.1e}"),
    ))
}

fn c8_dichotomy() -> Outcome {
    let run = VdpRun::default();
    let opts = ClassifyOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for a in [0.5, 0.9] {
        let mc = mu_critical(a)?;
        for (f, want) in [(0.8, AttractorKind::FixedPoint), (1.5, AttractorKind::LimitCycle)] {
            let r = classify_attractor(&simulate_fractional_vdp(a, f * mc, 0.0, &run)?, &opts)?;
            ok &= r.kind == want;
            parts.push(format!("a={a} {f}mu_c: {:?} ({:.3})", r.kind, r.amplitude));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn c9_beta() -> Outcome {
    let r = fit_beta_vdp(0.9, 0.1, &SystemFitOptions::vdp())?;
    Ok(((0.28..=0.35).contains(&r.p_star), format!("beta*={:.4} (E={:.2e})", r.p_star, r.e_star)))
}

fn c10_enclosure() -> Outcome {
    let (a, mu) = (0.9, 0.5);
    let run = VdpRun::default();
    let frac = simulate_fractional_vdp(a, mu, 0.0, &run)?;
    let rhs = make_rhs(ClassicalModel::Vdp(VdpParams::new(mu, 0.0)?))?;
    let cl = rk4_integrate(|t, x, o| rhs(t, x, o), &run.x0, run.t_end, 200_000)?;
    let opts = ClassifyOptions::default();
    let rf = classify_attractor(&frac, &opts)?;
    let rc = classify_attractor(&cl, &opts)?;
    Ok((
        rf.amplitude <= rc.amplitude,
        format!("fractional max|x| {:.4} ({:?}) vs classical {:.4} ({:?})", rf.amplitude, rf.kind, rc.amplitude, rc.kind),
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Outcome); 10] = [
        ("mittag-leffler identities", c1_mittag_leffler),
        ("caputo exactness", c2_caputo_exactness),
        ("linear oscillator precision", c3_table1),
        ("sine problem with terminal anchor", c4_table2),
        ("linear equivalence fit", c5_table3),
        ("pendulum equivalence fit", c6_table4),
        ("critical mu", c7_mu_critical),
        ("bifurcation dichotomy", c8_dichotomy),
        ("beta matching", c9_beta),
        ("cycle enclosure", c10_enclosure),
    ];
    // 2cos(απ/2) at α = 1 - 1e-6 is π·1e-6 to first order, above the 1e-6
    // endpoint tolerance for any exact implementation.
    let known_unattainable = [7usize];
    let mut failed = 0;
    let mut unexpected = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let t0 = Instant::now();
        let (ok, msg) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = t0.elapsed().as_secs_f64();
        let known = !ok && known_unattainable.contains(&(i + 1));
        let tag = if known { " (known unattainable)" } else { "" };
        println!("{} {:>2} {name}: {msg} [{secs:.1}s]{tag}", if ok { "PASS" } else { "FAIL" }, i + 1);
        failed += usize::from(!ok);
        unexpected += usize::from(!ok && !known);
    }
    println!("{}/10 criteria passed", 10 - failed);
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
