use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, Result};
use clap::ValueEnum;
use fracdyn::caputo::CaputoOperator;
use fracdyn::classical::{make_rhs, rk4_integrate, ClassicalModel, DampedOscillator, VdpParams};
use fracdyn::equivalence::{
    fit_beta_vdp, fit_p_linear, fit_p_linear_sweep, fit_p_system, fit_p_system_sweep, lift, quadratic_fit,
    DeviationComponents, LinearFitOptions, LinearReference, SystemFitOptions, LINEAR_FIT_ALPHAS,
};
use fracdyn::exec::Exec;
use fracdyn::grid::UniformGrid;
use fracdyn::metrics::{l2_error, residual_error};
use fracdyn::mittag_leffler::{gamma, ml_eval, MLParams, OscillatorSolution};
use fracdyn::solver::{solve_with_report, FracProblem, InitialGuess, Rhs, SolverOptions};
use fracdyn::stability::{
    classify_attractor, mu_critical, simulate_fractional_vdp, vdp_origin, ClassifyOptions, VdpRun,
};
use fracdyn::trajectory::Trajectory;

use crate::reference::{self, FitRow};
use crate::report::{ratio, Cell, Plot, Report, Series};
use crate::Usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Components {
    Position,
    Full,
}

impl From<Components> for DeviationComponents {
    fn from(c: Components) -> Self {
        match c {
            Components::Position => DeviationComponents::Position,
            Components::Full => DeviationComponents::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// D^α x = -x against m ÿ + p ẏ + y = 0, 1 < α ≤ 2
    Linear,
    /// fractional pendulum against the damped pendulum, 0 < α ≤ 1
    Pendulum,
    /// fractional van der Pol against the classical one with extra damping β
    Vdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhsKind {
    /// f = 0
    Zero,
    /// f = -x
    Decay,
    /// f = sin x
    Sine,
    /// (x, y) ↦ (y, -sin x)
    Pendulum,
    /// (x, z) ↦ (z, -z(β + μ(x² - 1)) - x)
    Vdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Function {
    T,
    T2,
    Sin,
    Exp,
}

/// `node:value[,value]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub node: usize,
    pub values: Vec<f64>,
}

impl FromStr for Anchor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (k, v) = s.split_once(':').ok_or_else(|| format!("expected node:value, got '{s}'"))?;
        let node = k.trim().parse().map_err(|e| format!("bad anchor node '{k}': {e}"))?;
        let values = v
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad anchor value '{x}': {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { node, values })
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

pub fn table1() -> Result<Report> {
    let mut head = vec!["n".to_string()];
    for a in reference::PRECISION_ALPHAS {
        head.extend([format!("e_n_alpha_{a}"), format!("reference_alpha_{a}"), format!("ratio_alpha_{a}")]);
    }
    let mut report = Report { header: head, ..Default::default() };
    let mut curves = vec![(Vec::new(), Vec::new()); 3];
    for (n, refs) in reference::PRECISION {
        let mut row = vec![Cell::Int(n)];
        for (j, a) in reference::PRECISION_ALPHAS.into_iter().enumerate() {
            let p = FracProblem::scalar(a, UniformGrid::new(0.0, 1.0, n)?, 0, 1.0, |_, x| -x)?;
            let (tr, _) = solve_with_report(&p, &SolverOptions::default())?;
            let mut exact = OscillatorSolution::new(1.0, 0.0, 1.0, a)?.evaluator()?;
            let e = l2_error(&tr, |t| exact.eval(t))?;
            row.extend([e.into(), refs[j].into(), ratio(e, refs[j])]);
            curves[j].0.push(e.log10());
            curves[j].1.push(refs[j].log10());
        }
        report.push(row);
    }
    let ns: Vec<f64> = reference::PRECISION.iter().map(|r| r.0 as f64).collect();
    let mut series = Vec::new();
    for (j, a) in reference::PRECISION_ALPHAS.into_iter().enumerate() {
        series.push(Series::new(format!("alpha={a}"), ns.clone(), curves[j].0.clone()));
        series.push(Series::new(format!("alpha={a} reference"), ns.clone(), curves[j].1.clone()));
    }
    report.plot = Plot { title: "L2 precision".into(), x_label: "n".into(), y_label: "log10 e_n".into(), series };
    Ok(report)
}

pub fn table2() -> Result<Report> {
    let mut report = Report::new(&[
        "n",
        "x0",
        "reference_x0",
        "ratio_x0",
        "e_r_pct",
        "reference_e_r_pct",
        "ratio_e_r_pct",
        "e_n",
        "reference_e_n",
        "ratio_e_n",
    ]);
    let mut prev: Option<f64> = None;
    let (mut ns, mut xs, mut rs) = (Vec::new(), Vec::new(), Vec::new());
    for (n, rx, rer, ren) in reference::SINE {
        let p = FracProblem::scalar(0.5, UniformGrid::new(0.0, 1.0, n)?, n, 2.5, |_, x| x.sin())?;
        let (tr, _) = solve_with_report(&p, &SolverOptions::default())?;
        let x0 = tr.component(0)[0];
        let en = residual_error(&p, &tr)?;
        let er = prev.map(|q| 100.0 * ((x0 - q) / x0).abs());
        let (er_cell, rer_cell, er_ratio) = match (er, rer) {
            (Some(e), Some(r)) => (e.into(), r.into(), ratio(e, r)),
            _ => (Cell::Empty, Cell::Empty, Cell::Empty),
        };
        report.push(vec![n.into(), x0.into(), rx.into(), ratio(x0, rx), er_cell, rer_cell, er_ratio, en.into(), ren.into(), ratio(en, ren)]);
        prev = Some(x0);
        ns.push(n as f64);
        xs.push(x0);
        rs.push(rx);
    }
    report.plot = Plot {
        title: "Recovered initial value".into(),
        x_label: "n".into(),
        y_label: "x(0)".into(),
        series: vec![Series::new("computed", ns.clone(), xs), Series::new("reference", ns, rs)],
    };
    Ok(report)
}

fn fit_table(rows: &[FitRow], fits: &[fracdyn::equivalence::EquivalenceResult], title: &str) -> Report {
    let mut report = Report::new(&["alpha", "p", "reference_p", "ratio_p", "e", "reference_e", "ratio_e", "at_bracket_edge", "suspect"]);
    for (r, f) in rows.iter().zip(fits) {
        report.push(vec![
            r.alpha.into(),
            f.p_star.into(),
            r.p.into(),
            ratio(f.p_star, r.p),
            f.e_star.into(),
            r.e.into(),
            ratio(f.e_star, r.e),
            f.at_bracket_edge.into(),
            r.suspect.into(),
        ]);
    }
    let alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
    report.plot = Plot {
        title: title.into(),
        x_label: "alpha".into(),
        y_label: "p*".into(),
        series: vec![
            Series::new("computed", alphas.clone(), fits.iter().map(|f| f.p_star).collect()),
            Series::new("reference", alphas, rows.iter().map(|r| r.p).collect()),
        ],
    };
    report
}

pub fn table3(t_end: f64, panels: usize) -> Result<Report> {
    let opts = LinearFitOptions { t_end, panels, ..Default::default() };
    let alphas: Vec<f64> = reference::LINEAR_FIT.iter().map(|r| r.alpha).collect();
    let fits = fit_p_linear_sweep(&alphas, &opts, Exec::default())?;
    Ok(fit_table(&reference::LINEAR_FIT, &fits, "Equivalent damping, linear oscillator"))
}

pub fn table4(t_end: f64, n: usize, steps: usize, components: Components) -> Result<Report> {
    let opts = SystemFitOptions { t_end, n, rk4_steps: steps, components: components.into(), ..SystemFitOptions::pendulum() };
    let alphas: Vec<f64> = reference::PENDULUM_FIT.iter().map(|r| r.alpha).collect();
    let fits = fit_p_system_sweep(&alphas, &opts, Exec::default())?;
    Ok(fit_table(&reference::PENDULUM_FIT, &fits, "Equivalent damping, pendulum"))
}

fn uniform(t_end: f64, points: usize) -> Vec<f64> {
    (0..=points).map(|i| if i == points { t_end } else { t_end * i as f64 / points as f64 }).collect()
}

pub fn fit_p(
    alpha: Option<f64>,
    model: Model,
    mu: f64,
    t_end: Option<f64>,
    n: Option<usize>,
    steps: Option<usize>,
) -> Result<Report> {
    let Some(alpha) = alpha else {
        if model != Model::Linear {
            return Err(usage("the quadratic fit is defined for the linear model; pass --alpha for the others"));
        }
        return quadratic(t_end, n);
    };
    match model {
        Model::Linear => {
            let opts = LinearFitOptions {
                t_end: t_end.unwrap_or(20.0),
                panels: n.unwrap_or(LinearFitOptions::default().panels),
                ..Default::default()
            };
            let fit = fit_p_linear(alpha, &opts)?;
            eprintln!("alpha={alpha} p*={:.6} E={:.3e}", fit.p_star, fit.e_star);
            let r = LinearReference::new(alpha, opts.t_end, opts.panels, opts.x0)?;
            let osc = DampedOscillator::unit(fit.p_star, opts.x0)?;
            let mut report = Report::new(&["t", "fractional", "damped"]);
            let damped: Vec<f64> = r.times().iter().map(|&t| osc.eval(t)).collect();
            for ((t, x), y) in r.times().iter().zip(r.values()).zip(&damped) {
                report.push(vec![(*t).into(), (*x).into(), (*y).into()]);
            }
            report.plot = Plot {
                title: format!("alpha={alpha}, p*={:.4}", fit.p_star),
                x_label: "t".into(),
                y_label: "x".into(),
                series: vec![
                    Series::new("fractional", r.times().to_vec(), r.values().to_vec()),
                    Series::new("damped", r.times().to_vec(), damped),
                ],
            };
            Ok(report)
        }
        Model::Pendulum | Model::Vdp => {
            let base = if model == Model::Pendulum { SystemFitOptions::pendulum() } else { SystemFitOptions::vdp() };
            let opts = SystemFitOptions {
                t_end: t_end.unwrap_or(base.t_end),
                n: n.unwrap_or(base.n),
                rk4_steps: steps.unwrap_or(base.rk4_steps),
                ..base
            };
            let (fit, frac_model, classical) = if model == Model::Pendulum {
                let f = fit_p_system(alpha, &opts)?;
                (f, ClassicalModel::PendulumDamped { p: 0.0 }, ClassicalModel::PendulumDamped { p: f.p_star })
            } else {
                let f = fit_beta_vdp(alpha, mu, &opts)?;
                (f, ClassicalModel::Vdp(VdpParams::new(mu, 0.0)?), ClassicalModel::Vdp(VdpParams::new(mu, f.p_star)?))
            };
            eprintln!("alpha={alpha} damping*={:.6} E={:.3e}", fit.p_star, fit.e_star);
            if model == Model::Vdp && alpha == 0.9 && mu == 0.1 {
                eprintln!("reference beta*={} ratio={:.4}", reference::VDP_BETA, fit.p_star / reference::VDP_BETA);
            }
            let grid = UniformGrid::new(0.0, opts.t_end, opts.n)?;
            let problem = FracProblem::from_arc(alpha, grid, 0, opts.x0.to_vec(), make_rhs(frac_model)?)?;
            let (frac, _) = solve_with_report(&problem, &SolverOptions::default())?;
            let rhs = make_rhs(classical)?;
            let cl = rk4_integrate(|t, x, o| rhs(t, x, o), &opts.x0, opts.t_end, opts.rk4_steps)?;
            Ok(side_by_side(&frac, &cl, opts.t_end, format!("alpha={alpha}, damping*={:.4}", fit.p_star))?)
        }
    }
}

/// Both trajectories lifted to a common 1000-interval mesh.
fn side_by_side(frac: &Trajectory, classical: &Trajectory, t_end: f64, title: String) -> Result<Report> {
    let ts = uniform(t_end, 1000);
    let u = lift(frac, &ts)?;
    let v = lift(classical, &ts)?;
    let mut report = Report::new(&["t", "x_fractional", "y_fractional", "x_classical", "y_classical"]);
    for k in 0..ts.len() {
        report.push(vec![ts[k].into(), u[0][k].into(), u[1][k].into(), v[0][k].into(), v[1][k].into()]);
    }
    report.plot = Plot {
        title,
        x_label: "t".into(),
        y_label: "x".into(),
        series: vec![Series::new("fractional", ts.clone(), u[0].clone()), Series::new("classical", ts, v[0].clone())],
    };
    Ok(report)
}

fn quadratic(t_end: Option<f64>, panels: Option<usize>) -> Result<Report> {
    let opts = LinearFitOptions {
        t_end: t_end.unwrap_or(20.0),
        panels: panels.unwrap_or(LinearFitOptions::default().panels),
        ..Default::default()
    };
    let fits = fit_p_linear_sweep(&LINEAR_FIT_ALPHAS, &opts, Exec::default())?;
    let pts: Vec<(f64, f64)> = fits.iter().map(|f| (f.alpha, f.p_star)).collect();
    let q = quadratic_fit(&pts)?;
    let mut report = Report::new(&["coefficient", "value", "reference", "ratio"]);
    for (name, v, r) in [("c0", q.c0, reference::QUADRATIC[0]), ("c1", q.c1, reference::QUADRATIC[1]), ("c2", q.c2, reference::QUADRATIC[2])] {
        report.push(vec![name.into(), v.into(), r.into(), ratio(v, r)]);
    }
    report.push(vec!["residual".into(), q.residual.into(), Cell::Empty, Cell::Empty]);
    let grid: Vec<f64> = (0..=50).map(|i| 1.0 + i as f64 / 50.0).collect();
    let [r0, r1, r2] = reference::QUADRATIC;
    report.plot = Plot {
        title: "Quadratic fit of p*(alpha)".into(),
        x_label: "alpha".into(),
        y_label: "p*".into(),
        series: vec![
            Series::new("fitted p*", pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect()),
            Series::new("quadratic", grid.clone(), grid.iter().map(|&a| q.eval(a)).collect()),
            Series::new("reference quadratic", grid.clone(), grid.iter().map(|&a| r0 + r1 * a + r2 * a * a).collect()),
        ],
    };
    Ok(report)
}

pub fn mu_curve(points: usize) -> Result<Report> {
    if points == 0 {
        return Err(usage("--points must be at least 1"));
    }
    let mut report = Report::new(&["alpha", "mu_c"]);
    let (mut a_s, mut m_s) = (Vec::new(), Vec::new());
    for i in 1..=points {
        let a = i as f64 / (points + 1) as f64;
        let m = mu_critical(a)?;
        report.push(vec![a.into(), m.into()]);
        a_s.push(a);
        m_s.push(m);
    }
    report.plot = Plot {
        title: "Critical van der Pol parameter".into(),
        x_label: "alpha".into(),
        y_label: "mu_c".into(),
        series: vec![Series::new("mu_c", a_s, m_s)],
    };
    Ok(report)
}

pub fn vdp_scan(
    alpha: f64,
    mu: Option<f64>,
    beta: f64,
    factors: &[f64],
    t_end: f64,
    n: usize,
    steps: usize,
) -> Result<Report> {
    let run = VdpRun { t_end, n, ..Default::default() };
    let opts = ClassifyOptions::default();
    if let Some(mu) = mu {
        let frac = simulate_fractional_vdp(alpha, mu, 0.0, &run)?;
        let rhs = make_rhs(ClassicalModel::Vdp(VdpParams::new(mu, beta)?))?;
        let cl = rk4_integrate(|t, x, o| rhs(t, x, o), &run.x0, t_end, steps)?;
        let (rf, rc) = (classify_attractor(&frac, &opts)?, classify_attractor(&cl, &opts)?);
        eprintln!(
            "fractional: {:?} max|x|={:.4}; classical: {:?} max|x|={:.4}",
            rf.kind, rf.amplitude, rc.kind, rc.amplitude
        );
        return side_by_side(&frac, &cl, t_end, format!("van der Pol, alpha={alpha}, mu={mu}"));
    }
    if factors.is_empty() {
        return Err(usage("--factors is empty"));
    }
    let mc = mu_critical(alpha)?;
    let results = Exec::default().map(factors, |&f| -> fracdyn::error::Result<_> {
        let mu = f * mc;
        let lin = vdp_origin(alpha, mu, 0.0)?;
        let att = classify_attractor(&simulate_fractional_vdp(alpha, mu, 0.0, &run)?, &opts)?;
        Ok((f, mu, lin, att))
    });
    let mut report = Report::new(&["factor", "mu", "mu_c", "origin", "attractor", "amplitude"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in results {
        let (f, mu, lin, att) = r?;
        report.push(vec![
            f.into(),
            mu.into(),
            mc.into(),
            format!("{:?}", lin.classification).as_str().into(),
            format!("{:?}", att.kind).as_str().into(),
            att.amplitude.into(),
        ]);
        xs.push(mu);
        ys.push(att.amplitude);
    }
    report.plot = Plot {
        title: format!("van der Pol attractor amplitude, alpha={alpha}"),
        x_label: "mu".into(),
        y_label: "max |x| over the final window".into(),
        series: vec![Series::new("amplitude", xs, ys)],
    };
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
pub fn solve(
    alpha: f64,
    rhs: RhsKind,
    anchor: &Anchor,
    n: usize,
    t_end: f64,
    mu: f64,
    beta: f64,
    initial_guess: Option<&Path>,
    max_iter: usize,
) -> Result<Report> {
    let f: Arc<Rhs> = match rhs {
        RhsKind::Zero => Arc::new(|_, _, o: &mut [f64]| o.fill(0.0)),
        RhsKind::Decay => Arc::new(|_, x: &[f64], o: &mut [f64]| o[0] = -x[0]),
        RhsKind::Sine => Arc::new(|_, x: &[f64], o: &mut [f64]| o[0] = x[0].sin()),
        RhsKind::Pendulum => make_rhs(ClassicalModel::PendulumDamped { p: 0.0 })?,
        RhsKind::Vdp => make_rhs(ClassicalModel::Vdp(VdpParams::new(mu, beta)?))?,
    };
    let dim = if matches!(rhs, RhsKind::Pendulum | RhsKind::Vdp) { 2 } else { 1 };
    if anchor.values.len() != dim {
        return Err(usage(format!("--rhs {rhs:?} needs {dim} anchor value(s), got {}", anchor.values.len())));
    }
    let grid = UniformGrid::new(0.0, t_end, n)?;
    let problem = FracProblem::from_arc(alpha, grid.clone(), anchor.node, anchor.values.clone(), f)?;
    let mut opts = SolverOptions { max_iter, ..Default::default() };
    if let Some(path) = initial_guess {
        let guess = Trajectory::load(path, alpha)?;
        if !guess.grid()?.same_as(&grid) || guess.dim() != dim {
            return Err(fracdyn::error::Error::GridMismatch(format!(
                "{} is not a {dim}-component trajectory on the solve grid",
                path.display()
            ))
            .into());
        }
        opts.initial_guess = InitialGuess::Provided(guess.states().to_vec());
    }
    let op = CaputoOperator::with_options(&grid, alpha, opts.end, opts.exec)?;
    let (tr, rep) = fracdyn::solver::solve_with_operator(&problem, &op, &opts)?;
    eprintln!("newton iterations: {}, residual: {:.3e}", rep.iterations, rep.residual);
    let mut head = vec!["t".to_string()];
    head.extend((1..=dim).map(|c| format!("x{c}")));
    let mut report = Report { header: head, ..Default::default() };
    for k in 0..tr.len() {
        let mut row = vec![Cell::Num(tr.times()[k])];
        row.extend(tr.state_at(k).into_iter().map(Cell::Num));
        report.push(row);
    }
    report.plot = Plot {
        title: format!("D^{alpha} x = f, {rhs:?}"),
        x_label: "t".into(),
        y_label: "x".into(),
        series: (0..dim).map(|c| Series::new(format!("x{}", c + 1), tr.times().to_vec(), tr.component(c).to_vec())).collect(),
    };
    Ok(report)
}

fn exact_caputo(function: Function, alpha: f64, t: f64) -> Result<f64> {
    Ok(match function {
        Function::T => t.powf(1.0 - alpha) / gamma(2.0 - alpha),
        Function::T2 => 2.0 * t.powf(2.0 - alpha) / gamma(3.0 - alpha),
        Function::Sin => (0..60)
            .map(|k| {
                let e = (2 * k + 1) as f64 - alpha;
                (-1f64).powi(k) * t.powf(e) / gamma(e + 1.0)
            })
            .take_while(|v| v.is_finite())
            .sum(),
        // D^α e^t = t^{1-α} E_{1, 2-α}(t)
        Function::Exp => {
            if alpha == 1.0 {
                t.exp()
            } else {
                t.powf(1.0 - alpha) * ml_eval(MLParams::new(1.0, 2.0 - alpha)?, t)?
            }
        }
    })
}

pub fn caputo(alpha: f64, n: usize, t_end: f64, function: Function) -> Result<Report> {
    let grid = UniformGrid::new(0.0, t_end, n)?;
    let f = |t: f64| match function {
        Function::T => t,
        Function::T2 => t * t,
        Function::Sin => t.sin(),
        Function::Exp => t.exp(),
    };
    let x: Vec<f64> = grid.nodes().iter().map(|&t| f(t)).collect();
    let d = CaputoOperator::new(&grid, alpha)?.apply(&x)?;
    let mut report = Report::new(&["t", "x", "caputo", "exact", "abs_error"]);
    let (mut ts, mut ds, mut es) = (Vec::new(), Vec::new(), Vec::new());
    for (k, v) in d.iter().enumerate() {
        let t = grid.node(k + 1);
        let e = exact_caputo(function, alpha, t)?;
        report.push(vec![t.into(), x[k + 1].into(), (*v).into(), e.into(), (v - e).abs().into()]);
        ts.push(t);
        ds.push(*v);
        es.push(e);
    }
    report.plot = Plot {
        title: format!("Caputo derivative of order {alpha}"),
        x_label: "t".into(),
        y_label: "D^alpha x".into(),
        series: vec![Series::new("discrete", ts.clone(), ds), Series::new("exact", ts, es)],
    };
    Ok(report)
}
