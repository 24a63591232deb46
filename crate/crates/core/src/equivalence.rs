//! Fitting a classical damping coefficient to a fractional oscillator.
//!
//! For each order `α` the dissipation `p` (or `β` for van der Pol) is chosen
//! to minimise the mean squared gap between the fractional and the damped
//! trajectories over a finite transient window `[0, T]`,
//! `E = (1/T) ∫_0^T |x(t) - y(t)|² dt`, by golden-section search on a fixed
//! bracket. A least-squares quadratic `p(α) ≈ c0 + c1 α + c2 α²` summarises
//! a sweep.

use nalgebra::{DMatrix, DVector};

use crate::classical::{make_rhs, rk4_integrate, ClassicalModel, DampedOscillator, VdpParams};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::UniformGrid;
use crate::metrics::simpson_mesh;
use crate::mittag_leffler::OscillatorSolution;
use crate::solver::{solve_with_report, FracProblem, SolverOptions};
use crate::stability::mu_critical;
use crate::trajectory::Trajectory;

/// Orders whose fitted `p*` enter the reference quadratic for the linear
/// oscillator. `α = 1.1` sits where `p*(α)` bends sharply and a quadratic
/// through it no longer describes the rest of the range.
pub const LINEAR_FIT_ALPHAS: [f64; 5] = [1.3, 1.5, 1.7, 1.9, 2.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceResult {
    pub alpha: f64,
    pub p_star: f64,
    pub e_star: f64,
    pub t_end: f64,
    /// grid size of the fractional solve, or quadrature panels when the
    /// fractional side is in closed form
    pub n: usize,
    /// the minimiser sits on the search bracket boundary
    pub at_bracket_edge: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// sum of squared residuals
    pub residual: f64,
}

impl QuadraticFit {
    pub fn eval(&self, alpha: f64) -> f64 {
        self.c0 + self.c1 * alpha + self.c2 * alpha * alpha
    }
}

/// Minimum of a unimodal `f` on `[lo, hi]` to absolute tolerance `tol` in
/// the argument. Returns `(x, f(x), on_edge)`.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, bool)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(hi > lo) || !(tol > 0.0) {
        return Err(Error::Domain(format!("bad search bracket [{lo}, {hi}] / tolerance {tol}")));
    }
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let (mut x, mut fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    // the ends are never sampled by the interior probes
    for e in [lo, hi] {
        if (x - e).abs() <= 2.0 * tol {
            let fe = f(e)?;
            if fe <= fx {
                x = e;
                fx = fe;
            }
        }
    }
    let edge = (x - lo).abs() <= 2.0 * tol || (hi - x).abs() <= 2.0 * tol;
    Ok((x, fx, edge))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFitOptions {
    pub t_end: f64,
    /// Simpson panels on `[0, T]`
    pub panels: usize,
    pub p_lo: f64,
    pub p_hi: f64,
    pub p_tol: f64,
    /// common initial displacement of both oscillators (released at rest)
    pub x0: f64,
}

impl Default for LinearFitOptions {
    fn default() -> Self {
        Self { t_end: 20.0, panels: 2000, p_lo: 0.0, p_hi: 3.0, p_tol: 1e-4, x0: 1.0 }
    }
}

/// Fractional linear oscillator `D^α x = -x`, `x(0) = x0`, `ẋ(0) = 0`,
/// sampled once on a Simpson mesh and reused for every trial `p`.
#[derive(Debug, Clone)]
pub struct LinearReference {
    alpha: f64,
    t_end: f64,
    x0: f64,
    ts: Vec<f64>,
    ws: Vec<f64>,
    xs: Vec<f64>,
}

impl LinearReference {
    pub fn new(alpha: f64, t_end: f64, panels: usize, x0: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("linear equivalence needs 1 < alpha <= 2, got {alpha}")));
        }
        if !(t_end > 0.0) {
            return Err(Error::Domain(format!("horizon must be > 0, got {t_end}")));
        }
        let (ts, ws) = simpson_mesh(0.0, t_end, panels);
        let mut ev = OscillatorSolution::new(x0, 0.0, 1.0, alpha)?.evaluator()?;
        let xs = ev.sample(&ts)?;
        Ok(Self { alpha, t_end, x0, ts, ws, xs })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn times(&self) -> &[f64] {
        &self.ts
    }

    pub fn values(&self) -> &[f64] {
        &self.xs
    }

    /// `E(p)` against the damped oscillator with unit mass and stiffness.
    pub fn deviation(&self, p: f64) -> Result<f64> {
        let osc = DampedOscillator::unit(p, self.x0)?;
        let s: f64 = self
            .ts
            .iter()
            .zip(&self.ws)
            .zip(&self.xs)
            .map(|((t, w), x)| {
                let d = x - osc.eval(*t);
                w * d * d
            })
            .sum();
        Ok(s / self.t_end)
    }
}

/// `(1/T) ∫_0^T (x - y)² dt` between `E_{α,1}(-t^α)` and the damped
/// oscillator with coefficient `p`, both starting at 1 from rest.
pub fn deviation_linear(alpha: f64, p: f64, t_end: f64, samples: usize) -> Result<f64> {
    LinearReference::new(alpha, t_end, samples, 1.0)?.deviation(p)
}

pub fn fit_p_linear(alpha: f64, opts: &LinearFitOptions) -> Result<EquivalenceResult> {
    let r = LinearReference::new(alpha, opts.t_end, opts.panels, opts.x0)?;
    let (p, e, edge) = golden_section(|p| r.deviation(p), opts.p_lo, opts.p_hi, opts.p_tol)?;
    Ok(EquivalenceResult {
        alpha,
        p_star: p,
        e_star: e,
        t_end: opts.t_end,
        n: opts.panels,
        at_bracket_edge: edge,
    })
}

/// [`fit_p_linear`] over many orders, in input order.
pub fn fit_p_linear_sweep(alphas: &[f64], opts: &LinearFitOptions, exec: Exec) -> Result<Vec<EquivalenceResult>> {
    exec.map(alphas, |&a| fit_p_linear(a, opts)).into_iter().collect()
}

/// Which state components enter the system deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeviationComponents {
    /// position only, `(x - z)²`
    #[default]
    Position,
    /// position and velocity, `(x - z)² + (y - w)²`
    Full,
}

/// Lift every component of `traj` onto `ts` through its quadratic
/// interpolant.
pub fn lift(traj: &Trajectory, ts: &[f64]) -> Result<Vec<Vec<f64>>> {
    (0..traj.dim()).map(|c| traj.spline(c)?.eval_many(ts)).collect()
}

fn horizon_of(traj: &Trajectory) -> f64 {
    *traj.times().last().expect("non-empty trajectory")
}

/// `(1/T) ∫_0^T Σ_c (u_c - v_c)² dt` between two planar trajectories, both
/// lifted to a `panels`-panel Simpson mesh.
pub fn deviation_system(
    fractional: &Trajectory,
    classical: &Trajectory,
    t_end: f64,
    panels: usize,
    components: DeviationComponents,
) -> Result<f64> {
    for tr in [fractional, classical] {
        if tr.times()[0] != 0.0 || horizon_of(tr) + 1e-9 * t_end < t_end {
            return Err(Error::GridMismatch(format!(
                "trajectory covers [{}, {}], deviation needs [0, {t_end}]",
                tr.times()[0],
                horizon_of(tr)
            )));
        }
    }
    let (ts, ws) = simpson_mesh(0.0, t_end, panels);
    let u = lift(fractional, &ts)?;
    let v = lift(classical, &ts)?;
    Ok(mesh_deviation(&ws, &u, &v, components) / t_end)
}

fn mesh_deviation(ws: &[f64], u: &[Vec<f64>], v: &[Vec<f64>], comps: DeviationComponents) -> f64 {
    let used = match comps {
        DeviationComponents::Position => 1,
        DeviationComponents::Full => u.len().min(v.len()),
    };
    (0..ws.len())
        .map(|i| {
            let s: f64 = (0..used).map(|c| (u[c][i] - v[c][i]).powi(2)).sum();
            ws[i] * s
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemFitOptions {
    pub t_end: f64,
    /// fractional grid intervals
    pub n: usize,
    /// RK4 steps for the classical side on `[0, T]`
    pub rk4_steps: usize,
    pub panels: usize,
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub components: DeviationComponents,
    /// common initial state
    pub x0: [f64; 2],
}

impl SystemFitOptions {
    pub fn pendulum() -> Self {
        Self {
            t_end: 20.0,
            n: 50,
            rk4_steps: 20_000,
            panels: 2000,
            lo: 0.0,
            hi: 3.0,
            tol: 1e-4,
            components: DeviationComponents::Position,
            x0: [1.0, 0.0],
        }
    }

    /// Longer window at step 0.1 and both components: the van der Pol
    /// transient is slower than the pendulum's.
    pub fn vdp() -> Self {
        Self {
            t_end: 40.0,
            n: 400,
            rk4_steps: 40_000,
            hi: 2.0,
            components: DeviationComponents::Full,
            ..Self::pendulum()
        }
    }
}

impl Default for SystemFitOptions {
    fn default() -> Self {
        Self::pendulum()
    }
}

/// Fractional planar system lifted to a Simpson mesh, plus the classical
/// family it is compared against.
struct SystemReference {
    ts: Vec<f64>,
    ws: Vec<f64>,
    u: Vec<Vec<f64>>,
}

impl SystemReference {
    fn new(alpha: f64, model: ClassicalModel, opts: &SystemFitOptions) -> Result<Self> {
        let grid = UniformGrid::new(0.0, opts.t_end, opts.n)?;
        let problem = FracProblem::from_arc(alpha, grid, 0, opts.x0.to_vec(), make_rhs(model)?)?;
        let (traj, _) = solve_with_report(&problem, &SolverOptions::default())?;
        let (ts, ws) = simpson_mesh(0.0, opts.t_end, opts.panels);
        let u = lift(&traj, &ts)?;
        Ok(Self { ts, ws, u })
    }

    fn deviation(&self, model: ClassicalModel, opts: &SystemFitOptions) -> Result<f64> {
        let rhs = make_rhs(model)?;
        let tr = rk4_integrate(|t, x, o| rhs(t, x, o), &opts.x0, opts.t_end, opts.rk4_steps)?;
        let v = lift(&tr, &self.ts)?;
        Ok(mesh_deviation(&self.ws, &self.u, &v, opts.components) / opts.t_end)
    }
}

/// Fractional pendulum `D^α x = y, D^α y = -sin x` against the damped
/// pendulum `ż = w, ẇ = -p w - sin z`.
pub fn fit_p_system(alpha: f64, opts: &SystemFitOptions) -> Result<EquivalenceResult> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("pendulum equivalence needs 0 < alpha <= 1, got {alpha}")));
    }
    let r = SystemReference::new(alpha, ClassicalModel::PendulumDamped { p: 0.0 }, opts)?;
    let (p, e, edge) = golden_section(
        |p| r.deviation(ClassicalModel::PendulumDamped { p }, opts),
        opts.lo,
        opts.hi,
        opts.tol,
    )?;
    Ok(EquivalenceResult { alpha, p_star: p, e_star: e, t_end: opts.t_end, n: opts.n, at_bracket_edge: edge })
}

pub fn fit_p_system_sweep(alphas: &[f64], opts: &SystemFitOptions, exec: Exec) -> Result<Vec<EquivalenceResult>> {
    exec.map(alphas, |&a| fit_p_system(a, opts)).into_iter().collect()
}

/// Fractional van der Pol (`β = 0`) against the classical one with extra
/// damping `β`. The fit is refused when the fitted classical system and the
/// fractional one have different linear stability at the origin.
pub fn fit_beta_vdp(alpha: f64, mu: f64, opts: &SystemFitOptions) -> Result<EquivalenceResult> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("van der Pol equivalence needs 0 < alpha <= 1, got {alpha}")));
    }
    let plain = ClassicalModel::Vdp(VdpParams::new(mu, 0.0)?);
    let r = SystemReference::new(alpha, plain, opts)?;
    let (b, e, edge) = golden_section(
        |beta| r.deviation(ClassicalModel::Vdp(VdpParams { mu, beta }), opts),
        opts.lo,
        opts.hi,
        opts.tol,
    )?;
    if alpha < 1.0 {
        let frac_stable = mu < mu_critical(alpha)?;
        let classical_stable = b > mu;
        if frac_stable != classical_stable && (b - mu).abs() > opts.tol {
            return Err(Error::AttractorMismatch(format!(
                "alpha={alpha}, mu={mu}: fractional origin {} but classical origin {} at beta*={b:.4}",
                if frac_stable { "stable" } else { "unstable" },
                if classical_stable { "stable" } else { "unstable" },
            )));
        }
    }
    Ok(EquivalenceResult { alpha, p_star: b, e_star: e, t_end: opts.t_end, n: opts.n, at_bracket_edge: edge })
}

/// Ordinary least squares for `p ≈ c0 + c1 α + c2 α²` by QR.
pub fn quadratic_fit(points: &[(f64, f64)]) -> Result<QuadraticFit> {
    let mut alphas: Vec<f64> = points.iter().map(|p| p.0).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    if alphas.len() < 3 {
        return Err(Error::RankDeficient(format!(
            "quadratic fit needs 3 distinct abscissae, got {}",
            alphas.len()
        )));
    }
    if points.iter().any(|(a, p)| !(a.is_finite() && p.is_finite())) {
        return Err(Error::NonFinite("fit point".into()));
    }
    let m = points.len();
    let a = DMatrix::from_fn(m, 3, |i, j| points[i].0.powi(j as i32));
    let y = DVector::from_iterator(m, points.iter().map(|p| p.1));
    let qr = a.clone().qr();
    let qty = qr.q().transpose() * &y;
    let c = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient("singular triangular factor".into()))?;
    let res = &a * &c - &y;
    Ok(QuadraticFit { c0: c[0], c1: c[1], c2: c[2], residual: res.norm_squared() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx, edge) = golden_section(|x| Ok((x - 1.234).powi(2) + 0.5), 0.0, 3.0, 1e-6).unwrap();
        assert!((x - 1.234).abs() < 1e-6 && (fx - 0.5).abs() < 1e-12 && !edge);
    }

    #[test]
    fn golden_reports_edge() {
        let (x, _, edge) = golden_section(|x| Ok(x), 0.0, 3.0, 1e-4).unwrap();
        assert_eq!(x, 0.0);
        assert!(edge);
    }

    #[test]
    fn quadratic_fit_exact_data() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| {
            let a = 0.3 * i as f64;
            (a, 1.0 + 2.0 * a - 3.0 * a * a)
        }).collect();
        let f = quadratic_fit(&pts).unwrap();
        assert!((f.c0 - 1.0).abs() < 1e-10 && (f.c1 - 2.0).abs() < 1e-10 && (f.c2 + 3.0).abs() < 1e-10);
        assert!(matches!(quadratic_fit(&[(1.0, 1.0), (1.0, 2.0), (2.0, 0.0)]), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn order_two_needs_no_damping() {
        let e = deviation_linear(2.0, 0.0, 20.0, 400).unwrap();
        assert!(e < 1e-12);
    }
}
