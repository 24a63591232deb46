//! Quadrature and the two precision measures of a computed solution.

use crate::error::{Error, Result};
use crate::solver::FracProblem;
use crate::trajectory::Trajectory;

/// Simpson panels per grid interval used by both measures.
pub const PANELS_PER_INTERVAL: usize = 20;

/// Composite Simpson rule with `panels` subintervals (rounded up to even).
pub fn simpson<F>(mut f: F, a: f64, b: f64, panels: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = (panels.max(2) + 1) & !1;
    let h = (b - a) / m as f64;
    let mut acc = f(a)? + f(b)?;
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// Simpson nodes and weights on `[a, b]`, for reusing one mesh across many
/// integrands.
pub fn simpson_mesh(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let m = (panels.max(2) + 1) & !1;
    let h = (b - a) / m as f64;
    let mut ts = Vec::with_capacity(m + 1);
    let mut ws = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let w = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        ts.push(if i == m { b } else { a + i as f64 * h });
        ws.push(w * h / 3.0);
    }
    (ts, ws)
}

/// `∫_a^b (exact(t) - S(t))² dt` for the first component, `S` the quadratic
/// interpolant of the trajectory.
pub fn l2_error<F>(traj: &Trajectory, mut exact: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let s = traj.spline(0)?;
    let g = s.grid();
    simpson(
        |t| {
            let d = exact(t)? - s.eval(t)?;
            Ok(d * d)
        },
        g.a(),
        g.b(),
        PANELS_PER_INTERVAL * g.n(),
    )
}

/// `∫_a^b |D^α S(t) - f(t, S(t))|² dt`, summed over components.
///
/// `D^α S` is the exact Caputo derivative of the piecewise-quadratic
/// interpolant at every quadrature point, not only at the nodes: at the
/// nodes the collocation equations hold, so a node-only rule would return
/// the Newton tolerance rather than a discretisation measure.
pub fn residual_error(problem: &FracProblem, traj: &Trajectory) -> Result<f64> {
    let g = problem.grid();
    let tg = traj.grid()?;
    if !g.same_as(&tg) || traj.dim() != problem.dim() {
        return Err(Error::GridMismatch("trajectory does not belong to this problem".into()));
    }
    let splines = (0..traj.dim()).map(|c| traj.spline(c)).collect::<Result<Vec<_>>>()?;
    let m = problem.dim();
    let mut x = vec![0.0; m];
    let mut fx = vec![0.0; m];
    simpson(
        |t| {
            for (c, s) in splines.iter().enumerate() {
                x[c] = s.eval(t)?;
            }
            problem.eval_rhs(t, &x, &mut fx)?;
            let mut acc = 0.0;
            for (c, s) in splines.iter().enumerate() {
                let d = s.caputo_at(problem.alpha(), t)? - fx[c];
                acc += d * d;
            }
            Ok(acc)
        },
        g.a(),
        g.b(),
        PANELS_PER_INTERVAL * g.n(),
    )
}
