//! Linear stability of the origin for fractional planar systems and
//! numerical attractor classification.
//!
//! For `D^α X = f(X)` with `0 < α < 1` the equilibrium is asymptotically
//! stable when every eigenvalue `λ` of the Jacobian there satisfies
//! `|arg λ| > απ/2`. For van der Pol at the origin the eigenvalues are
//! `(μ ± sqrt(μ² - 4))/2`, and the condition fails first at
//! `μ_c(α) = 2 / sqrt(1 + tan²(απ/2)) = 2 cos(απ/2)`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::classical::{make_rhs, ClassicalModel, VdpParams};
use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::solver::{solve_with_report, FracProblem, SolverOptions};
use crate::trajectory::Trajectory;

/// Width of the band around `arg_margin = 0` reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-12;

/// Jacobian of `ẋ = z, ż = -z(β + μ(x² - 1)) - x` at `(x, z)`.
pub fn vdp_jacobian(mu: f64, beta: f64, x: f64, z: f64) -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0 - 2.0 * mu * z * x, -beta - mu * (x * x - 1.0))
}

/// Eigenvalues of a real 2×2 matrix, ordered by imaginary part, then real
/// part.
pub fn eigen2(j: &Matrix2<f64>) -> [Complex64; 2] {
    let tr = j[(0, 0)] + j[(1, 1)];
    let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
    let half = 0.5 * tr;
    let disc = half * half - det;
    let (l1, l2) = if disc >= 0.0 {
        let r = disc.sqrt();
        // larger-magnitude root first, the other from the product
        let big = if half >= 0.0 { half + r } else { half - r };
        let small = if big != 0.0 { det / big } else { half - r.copysign(big) };
        (Complex64::new(big, 0.0), Complex64::new(small, 0.0))
    } else {
        let r = (-disc).sqrt();
        (Complex64::new(half, r), Complex64::new(half, -r))
    };
    let mut v = [l1, l2];
    v.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityKind {
    AsymptoticallyStable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub fixed_point: [f64; 2],
    pub eigenvalues: [Complex64; 2],
    /// `min |arg λ| - απ/2`
    pub arg_margin: f64,
    pub classification: StabilityKind,
    pub alpha: f64,
    pub mu: Option<f64>,
    pub beta: Option<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("stability criterion needs 0 < alpha < 1, got {alpha}")))
    }
}

/// Apply `|arg λ| > απ/2` to both eigenvalues (arguments in `(-π, π]`).
pub fn is_stable(eigs: [Complex64; 2], alpha: f64) -> Result<StabilityReport> {
    check_alpha(alpha)?;
    let min_arg = eigs.iter().map(|l| l.arg().abs()).fold(f64::INFINITY, f64::min);
    let margin = min_arg - alpha * FRAC_PI_2;
    let classification = if margin.abs() <= MARGINAL_BAND {
        StabilityKind::Marginal
    } else if margin > 0.0 {
        StabilityKind::AsymptoticallyStable
    } else {
        StabilityKind::Unstable
    };
    Ok(StabilityReport {
        fixed_point: [0.0, 0.0],
        eigenvalues: eigs,
        arg_margin: margin,
        classification,
        alpha,
        mu: None,
        beta: None,
    })
}

/// Stability of the origin of the fractional van der Pol system.
pub fn vdp_origin(alpha: f64, mu: f64, beta: f64) -> Result<StabilityReport> {
    let mut r = is_stable(eigen2(&vdp_jacobian(mu, beta, 0.0, 0.0)), alpha)?;
    r.mu = Some(mu);
    r.beta = Some(beta);
    Ok(r)
}

/// `μ_c(α) = 2 / sqrt(1 + tan²(απ/2))`.
pub fn mu_critical(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let t = (alpha * FRAC_PI_2).tan();
    let v = 2.0 / (1.0 + t * t).sqrt();
    debug_assert!((v - mu_critical_cos(alpha)).abs() <= 1e-12 * v.max(1e-300) + 1e-15);
    Ok(v)
}

/// The same curve as `2 cos(απ/2)`.
pub fn mu_critical_cos(alpha: f64) -> f64 {
    2.0 * (alpha * FRAC_PI_2).cos()
}

/// The classical damped van der Pol origin is stable iff `μ - β < 0`.
pub fn beta_critical(mu: f64) -> Result<f64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("mu must be >= 0, got {mu}")));
    }
    Ok(mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttractorKind {
    FixedPoint,
    LimitCycle,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorResult {
    pub kind: AttractorKind,
    /// max |x| over the inspected window
    pub amplitude: f64,
    /// inspected `[start, end]`
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// trailing share of the horizon inspected
    pub window_fraction: f64,
    /// below this max |x| the window counts as settled at the origin
    pub fixed_threshold: f64,
    /// successive peaks must exceed this to count as a cycle
    pub cycle_min_amplitude: f64,
    /// relative spread of successive peaks allowed for a cycle
    pub cycle_variation: f64,
    /// envelope of the last third over that of the first third below which
    /// the window counts as still contracting towards the origin
    pub decay_ratio: f64,
    pub min_peaks: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            window_fraction: 0.25,
            fixed_threshold: 1e-3,
            cycle_min_amplitude: 1e-2,
            cycle_variation: 0.02,
            decay_ratio: 0.95,
            min_peaks: 3,
        }
    }
}

/// Peak heights of `x`, refined by a parabola through each sampled maximum.
fn peaks(x: &[f64]) -> Vec<f64> {
    x.windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2])
        .map(|w| {
            let den = w[0] - 2.0 * w[1] + w[2];
            if den < 0.0 {
                w[1] - 0.125 * (w[2] - w[0]).powi(2) / den
            } else {
                w[1]
            }
        })
        .collect()
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Classify the long-time behaviour of the first component.
///
/// - `FixedPoint`: the window's max |x| is below `fixed_threshold`, or the
///   envelope is still contracting (last-third max below `decay_ratio`
///   times the first-third max) without a stationary peak sequence.
///   Fractional systems approach a stable equilibrium algebraically, like
///   `t^{-α}`, so a fixed threshold alone would leave most of them
///   undecided on any affordable horizon.
/// - `LimitCycle`: at least `min_peaks` peaks above `cycle_min_amplitude`
///   whose relative spread is below `cycle_variation`.
/// - `Undecided` otherwise.
pub fn classify_attractor(traj: &Trajectory, opts: &ClassifyOptions) -> Result<AttractorResult> {
    let t = traj.times();
    let x = traj.component(0);
    let (t0, t1) = (t[0], *t.last().expect("non-empty"));
    let start = t1 - opts.window_fraction * (t1 - t0);
    let i0 = t.partition_point(|s| *s < start);
    let w = &x[i0..];
    if w.len() < 9 {
        return Err(Error::WindowTooShort(format!(
            "{} samples in [{start}, {t1}], need at least 9",
            w.len()
        )));
    }
    let window = (t[i0], t1);
    let amplitude = max_abs(w);
    let kind = if amplitude < opts.fixed_threshold {
        AttractorKind::FixedPoint
    } else {
        let pk = peaks(w);
        let third = w.len() / 3;
        let first = max_abs(&w[..third]);
        let last = max_abs(&w[w.len() - third..]);
        let stationary = pk.len() >= opts.min_peaks && {
            let hi = pk.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = pk.iter().cloned().fold(f64::INFINITY, f64::min);
            lo > opts.cycle_min_amplitude && (hi - lo) / hi < opts.cycle_variation
        };
        if stationary {
            AttractorKind::LimitCycle
        } else if last < opts.decay_ratio * first {
            AttractorKind::FixedPoint
        } else {
            AttractorKind::Undecided
        }
    };
    Ok(AttractorResult { kind, amplitude, window })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdpRun {
    pub t_end: f64,
    pub n: usize,
    pub x0: [f64; 2],
}

impl Default for VdpRun {
    fn default() -> Self {
        Self { t_end: 200.0, n: 2000, x0: [1.0, 0.0] }
    }
}

/// Fractional van der Pol trajectory, `D^α x = z`,
/// `D^α z = -z(β + μ(x² - 1)) - x`, from `x0` on `[0, T]`.
pub fn simulate_fractional_vdp(alpha: f64, mu: f64, beta: f64, run: &VdpRun) -> Result<Trajectory> {
    let grid = UniformGrid::new(0.0, run.t_end, run.n)?;
    let rhs = make_rhs(ClassicalModel::Vdp(VdpParams::new(mu, beta)?))?;
    let problem = FracProblem::from_arc(alpha, grid, 0, run.x0.to_vec(), rhs)?;
    Ok(solve_with_report(&problem, &SolverOptions::default())?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_at_origin() {
        let j = vdp_jacobian(0.75, 0.25, 0.0, 0.0);
        assert_eq!(j, Matrix2::new(0.0, 1.0, -1.0, 0.5));
        assert_eq!(vdp_jacobian(1.0, 0.0, 1.0, 1.0), Matrix2::new(0.0, 1.0, -3.0, 0.0));
    }

    #[test]
    fn rotation_and_double_root() {
        let e = eigen2(&vdp_jacobian(0.0, 0.0, 0.0, 0.0));
        assert_eq!(e, [Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0)]);
        let e = eigen2(&vdp_jacobian(2.0, 0.0, 0.0, 0.0));
        assert!((e[0] - 1.0).norm() < 1e-12 && (e[1] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn criterion_examples() {
        let r = is_stable([Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)], 0.9).unwrap();
        assert_eq!(r.classification, StabilityKind::AsymptoticallyStable);
        let r = is_stable([Complex64::new(2.0, 0.0), Complex64::new(0.5, 0.0)], 0.3).unwrap();
        assert_eq!(r.classification, StabilityKind::Unstable);
        let r = vdp_origin(0.5, 0.5, 0.0).unwrap();
        assert!((r.arg_margin + std::f64::consts::FRAC_PI_4 - 15f64.sqrt().atan()).abs() < 1e-12);
    }

    #[test]
    fn critical_curve_values() {
        assert!((mu_critical(0.9).unwrap() - 0.312_868_930_080_462).abs() < 1e-12);
        assert!(mu_critical(1.0).is_err());
        assert_eq!(beta_critical(0.1).unwrap(), 0.1);
    }
}
