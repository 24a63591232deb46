//! Collocation solver for `D^α x = f(t, x)`, `0 < α ≤ 1`, with the state
//! fixed at one node (any node, not only the left end).
//!
//! The equations are imposed at `t_1..t_n`; the anchored node value is
//! known, which leaves `n` unknowns per component for `n` equations. The
//! nonlinear system is solved by damped Newton with a finite-difference
//! Jacobian of `f`. When the anchor is the left endpoint the Jacobian is a
//! block lower-triangular matrix plus a rank-`m` term, and each step costs
//! O(n² m²) instead of a dense O((nm)³) factorisation.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::caputo::CaputoOperator;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::UniformGrid;
use crate::mittag_leffler::gamma;
use crate::spline::EndCondition;
use crate::trajectory::Trajectory;

/// `f(t, x, out)` writes the vector field at `(t, x)` into `out`.
pub type Rhs = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

#[derive(Clone)]
pub struct FracProblem {
    alpha: f64,
    grid: UniformGrid,
    anchor_node: usize,
    anchor_value: Vec<f64>,
    rhs: Arc<Rhs>,
}

impl fmt::Debug for FracProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FracProblem")
            .field("alpha", &self.alpha)
            .field("grid", &self.grid)
            .field("anchor_node", &self.anchor_node)
            .field("anchor_value", &self.anchor_value)
            .finish_non_exhaustive()
    }
}

impl FracProblem {
    pub fn new<F>(
        alpha: f64,
        grid: UniformGrid,
        anchor_node: usize,
        anchor_value: Vec<f64>,
        rhs: F,
    ) -> Result<Self>
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::from_arc(alpha, grid, anchor_node, anchor_value, Arc::new(rhs))
    }

    pub fn from_arc(
        alpha: f64,
        grid: UniformGrid,
        anchor_node: usize,
        anchor_value: Vec<f64>,
        rhs: Arc<Rhs>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("collocation order must lie in (0, 1], got {alpha}")));
        }
        if anchor_node > grid.n() {
            return Err(Error::Domain(format!(
                "anchor node {anchor_node} outside 0..={}",
                grid.n()
            )));
        }
        if anchor_value.is_empty() {
            return Err(Error::Dimension { expected: 1, found: 0 });
        }
        if anchor_value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("anchor value".into()));
        }
        Ok(Self { alpha, grid, anchor_node, anchor_value, rhs })
    }

    /// One-dimensional problem `D^α x = f(t, x)`.
    pub fn scalar<F>(alpha: f64, grid: UniformGrid, anchor_node: usize, x_star: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(alpha, grid, anchor_node, vec![x_star], move |t, x, out| out[0] = f(t, x[0]))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.anchor_value.len()
    }

    pub fn anchor_node(&self) -> usize {
        self.anchor_node
    }

    pub fn anchor_value(&self) -> &[f64] {
        &self.anchor_value
    }

    pub fn rhs(&self) -> Arc<Rhs> {
        Arc::clone(&self.rhs)
    }

    /// Evaluate `f`, rejecting non-finite output.
    pub fn eval_rhs(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.rhs)(t, x, out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("right-hand side at t = {t}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// [`InitialGuess::Marching`] when the anchor is node 0, constant
    /// continuation otherwise.
    Auto,
    /// Every node starts at the anchor value.
    Constant,
    /// Node-by-node solution of the collocation equations from the left
    /// end, seeded by an implicit L1 scheme. Needs the anchor at node 0.
    Marching,
    /// `states[c][k]`; the anchored node is overwritten with the anchor.
    Provided(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Max-norm of the collocation residual at which Newton stops.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Relative step of the finite-difference Jacobian.
    pub fd_step: f64,
    pub initial_guess: InitialGuess,
    pub end: EndCondition,
    /// Strategy for assembling the operator rows.
    pub exec: Exec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            max_halvings: 20,
            fd_step: 1e-7,
            initial_guess: InitialGuess::Auto,
            end: EndCondition::default(),
            exec: Exec::Sequential,
        }
    }
}

impl SolverOptions {
    pub fn with_guess(mut self, guess: InitialGuess) -> Self {
        self.initial_guess = guess;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    /// Newton updates applied.
    pub iterations: usize,
    /// Final max-norm residual.
    pub residual: f64,
}

pub fn solve_collocation(problem: &FracProblem, opts: &SolverOptions) -> Result<Trajectory> {
    solve_with_report(problem, opts).map(|(t, _)| t)
}

/// Two-component variant; the anchor applies to both components at the
/// same node.
pub fn solve_system(problem: &FracProblem, opts: &SolverOptions) -> Result<Trajectory> {
    if problem.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: problem.dim() });
    }
    solve_collocation(problem, opts)
}

pub fn solve_with_report(problem: &FracProblem, opts: &SolverOptions) -> Result<(Trajectory, NewtonReport)> {
    let op = CaputoOperator::with_options(problem.grid(), problem.alpha(), opts.end, opts.exec)?;
    solve_with_operator(problem, &op, opts)
}

/// Solve with a prebuilt operator (for repeated solves on one grid and order).
pub fn solve_with_operator(
    problem: &FracProblem,
    op: &CaputoOperator,
    opts: &SolverOptions,
) -> Result<(Trajectory, NewtonReport)> {
    if !op.grid().same_as(problem.grid()) || op.alpha() != problem.alpha() {
        return Err(Error::GridMismatch("operator built for a different grid or order".into()));
    }
    let n = problem.grid().n();
    let m = problem.dim();
    let ks = problem.anchor_node();
    let mut x = initial_guess(problem, op, opts)?;

    let mut report = NewtonReport { iterations: 0, residual: f64::INFINITY };
    let mut f = residual(problem, op, &x)?;
    let mut r = max_norm(&f);
    loop {
        report.residual = r;
        if r <= opts.tol {
            break;
        }
        if report.iterations >= opts.max_iter {
            return Err(Error::NoConvergence { iterations: report.iterations, residual: r });
        }
        let jf = node_jacobians(problem, &x, opts.fd_step)?;
        let dx = if ks == 0 {
            structured_step(op, &jf, &f, m)?
        } else {
            dense_step(op, &jf, &f, m, ks)?
        };
        // dx indexed [c * n + u], u the unknown index of a node
        let mut lam = 1.0;
        let mut accepted = None;
        let mut last = None;
        for _ in 0..=opts.max_halvings {
            let trial = apply_step(&x, &dx, lam, n, ks);
            if let Ok(ft) = residual(problem, op, &trial) {
                let rt = max_norm(&ft);
                if rt < r {
                    accepted = Some((trial, ft, rt));
                    break;
                }
                last = Some((trial, ft, rt));
            }
            lam *= 0.5;
        }
        let (nx, nf, nr) = match accepted.or(last) {
            Some(v) => v,
            None => {
                return Err(Error::NonFinite(
                    "right-hand side not finite along every damped Newton step".into(),
                ))
            }
        };
        x = nx;
        f = nf;
        r = nr;
        report.iterations += 1;
    }
    let traj = Trajectory::new(problem.grid().nodes().to_vec(), x, problem.alpha())?;
    Ok((traj, report))
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn unknown(i: usize, ks: usize) -> usize {
    if i < ks {
        i
    } else {
        i - 1
    }
}

fn apply_step(x: &[Vec<f64>], dx: &[f64], lam: f64, n: usize, ks: usize) -> Vec<Vec<f64>> {
    x.iter()
        .enumerate()
        .map(|(c, xc)| {
            xc.iter()
                .enumerate()
                .map(|(i, v)| if i == ks { *v } else { v + lam * dx[c * n + unknown(i, ks)] })
                .collect()
        })
        .collect()
}

/// `F[c*n + k-1] = (D^α x_c)(t_k) - f_c(t_k, x(t_k))`.
fn residual(problem: &FracProblem, op: &CaputoOperator, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = problem.grid().n();
    let m = problem.dim();
    let mut out = vec![0.0; m * n];
    for (c, xc) in x.iter().enumerate() {
        let d = op.apply(xc)?;
        out[c * n..(c + 1) * n].copy_from_slice(&d);
    }
    let mut state = vec![0.0; m];
    let mut fx = vec![0.0; m];
    for k in 1..=n {
        for c in 0..m {
            state[c] = x[c][k];
        }
        problem.eval_rhs(problem.grid().node(k), &state, &mut fx)?;
        for c in 0..m {
            out[c * n + k - 1] -= fx[c];
        }
    }
    Ok(out)
}

/// Forward-difference Jacobian of `f` at `(t, y)`; the step is rounded so
/// that `y + δ` is exact, which makes the difference exact for linear `f`.
fn fd_jacobian(problem: &FracProblem, t: f64, y: &[f64], rel: f64) -> Result<DMatrix<f64>> {
    let m = y.len();
    let mut f0 = vec![0.0; m];
    let mut f1 = vec![0.0; m];
    problem.eval_rhs(t, y, &mut f0)?;
    let mut jac = DMatrix::zeros(m, m);
    let mut yp = y.to_vec();
    for c in 0..m {
        let step = rel * y[c].abs().max(1.0);
        yp[c] = y[c] + step;
        let d = yp[c] - y[c];
        problem.eval_rhs(t, &yp, &mut f1)?;
        for r in 0..m {
            jac[(r, c)] = (f1[r] - f0[r]) / d;
        }
        yp[c] = y[c];
    }
    Ok(jac)
}

/// `∂f/∂x` at nodes `t_1..t_n` (index `k - 1`).
fn node_jacobians(problem: &FracProblem, x: &[Vec<f64>], rel: f64) -> Result<Vec<DMatrix<f64>>> {
    let n = problem.grid().n();
    let m = problem.dim();
    (1..=n)
        .map(|k| {
            let y: Vec<f64> = (0..m).map(|c| x[c][k]).collect();
            fd_jacobian(problem, problem.grid().node(k), &y, rel)
        })
        .collect()
}

fn singular(mat: &DMatrix<f64>) -> Error {
    let sv = mat.singular_values();
    let hi = sv.max();
    let lo = sv.min();
    Error::Singular { condition: if lo > 0.0 { hi / lo } else { f64::INFINITY } }
}

/// Newton step for an anchor at node 0: block forward substitution plus a
/// Woodbury correction for the rank-`m` coupling through `a_1`.
fn structured_step(op: &CaputoOperator, jf: &[DMatrix<f64>], f: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = op.grid().n();
    let lower = op.lower();
    let w = op.w();
    let ell = op.ell();
    // right-hand sides: -F and the m columns w ⊗ e_c
    let nrhs = m + 1;
    // z[k-1] is an m × nrhs block
    let mut diag_lu = Vec::with_capacity(n);
    for k in 1..=n {
        let mut blk = -jf[k - 1].clone();
        for c in 0..m {
            blk[(c, c)] += lower[(k - 1, k)];
        }
        let lu = blk.clone().lu();
        if !lu.is_invertible() {
            return Err(singular(&blk));
        }
        diag_lu.push(lu);
    }
    let mut z: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for k in 1..=n {
        let mut rhs = DMatrix::zeros(m, nrhs);
        for c in 0..m {
            rhs[(c, 0)] = -f[c * n + k - 1];
            rhs[(c, 1 + c)] = w[k - 1];
        }
        for (i, zi) in z.iter().enumerate() {
            let l = lower[(k - 1, i + 1)];
            if l != 0.0 {
                rhs -= zi * l;
            }
        }
        let sol = diag_lu[k - 1].solve(&rhs).ok_or(Error::Singular { condition: f64::INFINITY })?;
        z.push(sol);
    }
    // Vᵀ Z: Σ_i ℓ_i z_i
    let mut vz = DMatrix::zeros(m, nrhs);
    for (i, zi) in z.iter().enumerate() {
        vz += zi * ell[i + 1];
    }
    let mut cap = DMatrix::identity(m, m);
    cap += vz.columns(1, m);
    let y0 = vz.column(0).clone_owned();
    let corr = cap.clone().lu().solve(&y0).ok_or_else(|| singular(&cap))?;
    let mut dx = vec![0.0; m * n];
    for (k, zk) in z.iter().enumerate() {
        let base = zk.column(0) - zk.columns(1, m) * &corr;
        for c in 0..m {
            dx[c * n + k] = base[c];
        }
    }
    Ok(dx)
}

/// Dense Newton step for an anchor at an interior or terminal node.
fn dense_step(op: &CaputoOperator, jf: &[DMatrix<f64>], f: &[f64], m: usize, ks: usize) -> Result<Vec<f64>> {
    let n = op.grid().n();
    let full = op.dense();
    let dim = m * n;
    let mut jac = DMatrix::zeros(dim, dim);
    for c in 0..m {
        for k in 1..=n {
            let row = c * n + k - 1;
            for i in (0..=n).filter(|&i| i != ks) {
                jac[(row, c * n + unknown(i, ks))] = full[(k - 1, i)];
            }
            if k != ks {
                for c2 in 0..m {
                    jac[(row, c2 * n + unknown(k, ks))] -= jf[k - 1][(c, c2)];
                }
            }
        }
    }
    let rhs = DVector::from_iterator(dim, f.iter().map(|v| -v));
    let lu = jac.clone().lu();
    match lu.solve(&rhs) {
        Some(dx) if dx.iter().all(|v| v.is_finite()) => Ok(dx.iter().copied().collect()),
        _ => Err(singular(&jac)),
    }
}

fn initial_guess(problem: &FracProblem, op: &CaputoOperator, opts: &SolverOptions) -> Result<Vec<Vec<f64>>> {
    let n = problem.grid().n();
    let m = problem.dim();
    let ks = problem.anchor_node();
    let constant = || problem.anchor_value().iter().map(|v| vec![*v; n + 1]).collect::<Vec<_>>();
    let mut x = match &opts.initial_guess {
        InitialGuess::Constant => constant(),
        InitialGuess::Auto if ks == 0 => march(problem, op, opts.fd_step),
        InitialGuess::Auto => constant(),
        InitialGuess::Marching => {
            if ks != 0 {
                return Err(Error::Domain("marching start needs the anchor at node 0".into()));
            }
            march(problem, op, opts.fd_step)
        }
        InitialGuess::Provided(states) => {
            if states.len() != m {
                return Err(Error::Dimension { expected: m, found: states.len() });
            }
            for s in states {
                if s.len() != n + 1 {
                    return Err(Error::Dimension { expected: n + 1, found: s.len() });
                }
            }
            states.clone()
        }
    };
    for c in 0..m {
        x[c][ks] = problem.anchor_value()[c];
    }
    Ok(x)
}

/// Marching start for an anchor at node 0.
///
/// With `a_1 = θ` frozen the collocation equations are causal, so they can
/// be solved node by node. `θ` is then corrected by a small Newton iteration
/// on `ℓ · x(θ) = θ`, seeded from the L1 scheme. If the marching breaks
/// down the L1 solution is returned as is.
fn march(problem: &FracProblem, op: &CaputoOperator, rel: f64) -> Vec<Vec<f64>> {
    let seed = march_l1(problem, rel);
    let m = problem.dim();
    let ell = op.ell();
    let gap = |x: &[Vec<f64>], theta: &[f64]| -> Vec<f64> {
        (0..m).map(|c| ell.iter().zip(&x[c]).map(|(l, v)| l * v).sum::<f64>() - theta[c]).collect()
    };
    let mut theta: Vec<f64> = (0..m).map(|c| ell.iter().zip(&seed[c]).map(|(l, v)| l * v).sum()).collect();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..8 {
        let Some(x) = march_collocation(problem, op, &theta, &seed, rel) else {
            break;
        };
        let g = gap(&x, &theta);
        let gn = max_norm(&g);
        let scale = 1.0 + max_norm(&theta);
        if best.as_ref().map_or(true, |(b, _)| gn < *b) {
            best = Some((gn, x.clone()));
        }
        if gn <= 1e-12 * scale {
            break;
        }
        let mut jac = DMatrix::zeros(m, m);
        let mut ok = true;
        for c2 in 0..m {
            let mut tp = theta.clone();
            let step = 1e-6 * theta[c2].abs().max(1.0);
            tp[c2] += step;
            let Some(xp) = march_collocation(problem, op, &tp, &x, rel) else {
                ok = false;
                break;
            };
            let gp = gap(&xp, &tp);
            for r in 0..m {
                jac[(r, c2)] = (gp[r] - g[r]) / step;
            }
        }
        if !ok {
            break;
        }
        let Some(d) = jac.lu().solve(&DVector::from_vec(g)) else {
            break;
        };
        for c in 0..m {
            theta[c] -= d[c];
        }
    }
    best.map_or(seed, |(_, x)| x)
}

/// Collocation equations solved node by node with `a_1 = theta`; each node
/// starts from `start` and needs an m-dimensional Newton solve.
fn march_collocation(
    problem: &FracProblem,
    op: &CaputoOperator,
    theta: &[f64],
    start: &[Vec<f64>],
    rel: f64,
) -> Option<Vec<Vec<f64>>> {
    let g = problem.grid();
    let n = g.n();
    let m = problem.dim();
    let lower = op.lower();
    let w = op.w();
    let mut x: Vec<Vec<f64>> = (0..m).map(|_| vec![0.0; n + 1]).collect();
    for c in 0..m {
        x[c][0] = problem.anchor_value()[c];
    }
    let mut fy = vec![0.0; m];
    let mut y = vec![0.0; m];
    for k in 1..=n {
        let t = g.node(k);
        let diag = lower[(k - 1, k)];
        let mut known = vec![0.0; m];
        for c in 0..m {
            let mut acc = w[k - 1] * theta[c];
            for i in 0..k {
                acc += lower[(k - 1, i)] * x[c][i];
            }
            known[c] = acc;
        }
        for c in 0..m {
            y[c] = start[c][k];
        }
        let mut converged = false;
        for _ in 0..50 {
            problem.eval_rhs(t, &y, &mut fy).ok()?;
            let r: Vec<f64> = (0..m).map(|c| diag * y[c] + known[c] - fy[c]).collect();
            let scale = diag.abs() * (1.0 + max_norm(&y));
            if max_norm(&r) <= 1e-14 * scale {
                converged = true;
                break;
            }
            let jf = fd_jacobian(problem, t, &y, rel).ok()?;
            let mut jac = -jf;
            for c in 0..m {
                jac[(c, c)] += diag;
            }
            let d = jac.lu().solve(&DVector::from_vec(r))?;
            for c in 0..m {
                y[c] -= d[c];
            }
            if max_norm(d.as_slice()) <= 1e-15 * (1.0 + max_norm(&y)) {
                converged = true;
                break;
            }
        }
        if !converged || y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for c in 0..m {
            x[c][k] = y[c];
        }
    }
    Some(x)
}

/// Implicit product-rectangle (L1) scheme,
/// `h^{-α}/Γ(2-α) Σ_j b_{k-j} (x_j - x_{j-1}) = f(t_k, x_k)` with
/// `b_i = (i+1)^{1-α} - i^{1-α}`. Only a starting point for Newton; a
/// failed local solve keeps its last iterate.
fn march_l1(problem: &FracProblem, rel: f64) -> Vec<Vec<f64>> {
    let g = problem.grid();
    let n = g.n();
    let m = problem.dim();
    let alpha = problem.alpha();
    let e = 1.0 - alpha;
    let c0 = g.h().powf(-alpha) / gamma(2.0 - alpha);
    let b: Vec<f64> = (0..=n).map(|i| ((i + 1) as f64).powf(e) - (i as f64).powf(e)).collect();
    let mut xs: Vec<Vec<f64>> = vec![problem.anchor_value().to_vec()];
    let mut fy = vec![0.0; m];
    for k in 1..=n {
        let t = g.node(k);
        let mut hist = vec![0.0; m];
        for j in 1..k {
            for c in 0..m {
                hist[c] += c0 * b[k - j] * (xs[j][c] - xs[j - 1][c]);
            }
        }
        let prev = xs[k - 1].clone();
        let mut y = prev.clone();
        for _ in 0..30 {
            if problem.eval_rhs(t, &y, &mut fy).is_err() {
                y = prev.clone();
                break;
            }
            let gval: Vec<f64> = (0..m).map(|c| c0 * (y[c] - prev[c]) + hist[c] - fy[c]).collect();
            let scale = 1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if max_norm(&gval) <= 1e-13 * scale * c0 {
                break;
            }
            let Ok(jf) = fd_jacobian(problem, t, &y, rel) else {
                break;
            };
            let mut jac = -jf;
            for c in 0..m {
                jac[(c, c)] += c0;
            }
            let Some(d) = jac.lu().solve(&DVector::from_vec(gval)) else {
                break;
            };
            for c in 0..m {
                y[c] -= d[c];
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            y = prev;
        }
        xs.push(y);
    }
    (0..m).map(|c| xs.iter().map(|s| s[c]).collect()).collect()
}
