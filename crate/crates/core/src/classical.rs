//! Integer-order reference models: the damped linear oscillator in closed
//! form, a fixed-step RK4 integrator, and the damped pendulum and van der
//! Pol vector fields.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::solver::Rhs;
use crate::trajectory::Trajectory;

/// `m ÿ + p ẏ + k y = 0`, `y(0) = x0`, `ẏ(0) = v0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedOscillator {
    pub m: f64,
    pub p: f64,
    pub k: f64,
    pub x0: f64,
    pub v0: f64,
}

impl DampedOscillator {
    pub fn new(m: f64, p: f64, k: f64, x0: f64, v0: f64) -> Result<Self> {
        if !(m > 0.0 && k > 0.0 && p >= 0.0) || ![m, p, k, x0, v0].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("oscillator needs m > 0, k > 0, p >= 0; got m={m}, p={p}, k={k}")));
        }
        Ok(Self { m, p, k, x0, v0 })
    }

    /// Unit mass and stiffness, released from rest at `x0`.
    pub fn unit(p: f64, x0: f64) -> Result<Self> {
        Self::new(1.0, p, 1.0, x0, 0.0)
    }

    /// Characteristic roots `λ± = (-p/m ± sqrt((p/m)² - 4k/m)) / 2`.
    pub fn roots(&self) -> (Complex64, Complex64) {
        let s = -self.p / (2.0 * self.m);
        let d = self.half_gap();
        (s + d, s - d)
    }

    /// `(λ+ - λ-)/2`, real when overdamped, imaginary when underdamped.
    fn half_gap(&self) -> Complex64 {
        let q = self.p / self.m;
        (Complex64::new(q * q - 4.0 * self.k / self.m, 0.0)).sqrt() / 2.0
    }

    /// `y(t) = e^{st} [x0 cosh(dt) + (v0 - s x0) sinh(dt)/d]` with
    /// `s = -p/2m`, `d = (λ+ - λ-)/2`. One expression for all three regimes;
    /// `sinh(dt)/d → t` at critical damping.
    pub fn eval(&self, t: f64) -> f64 {
        let s = -self.p / (2.0 * self.m);
        let d = self.half_gap();
        let dt = d * t;
        let shc = if dt.norm() < 1e-4 {
            Complex64::new(t, 0.0) * (1.0 + dt * dt / 6.0)
        } else {
            dt.sinh() / d
        };
        let y = (s * t).exp() * (self.x0 * dt.cosh() + (self.v0 - s * self.x0) * shc);
        y.re
    }
}

/// Closed-form solution of the damped oscillator at `t ≥ 0`.
pub fn damped_solution(osc: &DampedOscillator, t: f64) -> f64 {
    osc.eval(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdpParams {
    pub mu: f64,
    /// extra linear damping of the velocity, 0 for the plain oscillator
    pub beta: f64,
}

impl VdpParams {
    pub fn new(mu: f64, beta: f64) -> Result<Self> {
        if !(mu >= 0.0 && beta >= 0.0 && mu.is_finite() && beta.is_finite()) {
            return Err(Error::Domain(format!("van der Pol needs mu, beta >= 0; got {mu}, {beta}")));
        }
        Ok(Self { mu, beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassicalModel {
    /// `ż = w, ẇ = -p w - sin z`
    PendulumDamped { p: f64 },
    /// `ẋ = z, ż = -z (β + μ(x² - 1)) - x`
    Vdp(VdpParams),
}

/// Planar vector field of `model`. The same field drives the fractional
/// systems (with `p = 0`, resp. `β = 0`).
pub fn make_rhs(model: ClassicalModel) -> Result<Arc<Rhs>> {
    match model {
        ClassicalModel::PendulumDamped { p } => {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::Domain(format!("pendulum damping must be >= 0, got {p}")));
            }
            Ok(Arc::new(move |_t: f64, x: &[f64], out: &mut [f64]| {
                out[0] = x[1];
                out[1] = -p * x[1] - x[0].sin();
            }))
        }
        ClassicalModel::Vdp(v) => {
            let VdpParams { mu, beta } = VdpParams::new(v.mu, v.beta)?;
            Ok(Arc::new(move |_t: f64, x: &[f64], out: &mut [f64]| {
                out[0] = x[1];
                out[1] = -x[1] * (beta + mu * (x[0] * x[0] - 1.0)) - x[0];
            }))
        }
    }
}

/// Classical RK4 with `steps` equal steps on `[0, t_end]`.
pub fn rk4_integrate<F>(rhs: F, x0: &[f64], t_end: f64, steps: usize) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if steps == 0 {
        return Err(Error::Domain("RK4 needs at least one step".into()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Domain(format!("RK4 horizon must be > 0, got {t_end}")));
    }
    let m = x0.len();
    let h = t_end / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states: Vec<Vec<f64>> = (0..m).map(|_| Vec::with_capacity(steps + 1)).collect();
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut tmp = vec![0.0; m];
    for i in 0..=steps {
        let t = if i == steps { t_end } else { i as f64 * h };
        if x.iter().any(|v| !v.is_finite()) {
            let last = times.last().copied().unwrap_or(0.0);
            return Err(Error::Blowup { t: last });
        }
        times.push(t);
        for c in 0..m {
            states[c].push(x[c]);
        }
        if i == steps {
            break;
        }
        rhs(t, &x, &mut k1);
        for c in 0..m {
            tmp[c] = x[c] + 0.5 * h * k1[c];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for c in 0..m {
            tmp[c] = x[c] + 0.5 * h * k2[c];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for c in 0..m {
            tmp[c] = x[c] + h * k3[c];
        }
        rhs(t + h, &tmp, &mut k4);
        for c in 0..m {
            x[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    Trajectory::new(times, states, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undamped_is_cosine() {
        let o = DampedOscillator::unit(0.0, 1.0).unwrap();
        assert!((o.eval(std::f64::consts::PI) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn critical_damping() {
        let o = DampedOscillator::unit(2.0, 1.0).unwrap();
        assert!((o.eval(1.0) - 2.0 * (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn overdamped_matches_real_exponentials() {
        let o = DampedOscillator::unit(3.0, 1.0).unwrap();
        let r = 5f64.sqrt();
        let (lp, lm) = ((-3.0 + r) / 2.0, (-3.0 - r) / 2.0);
        let (cp, cm) = (-lm / (lp - lm), lp / (lp - lm));
        for &t in &[0.0, 0.7, 4.0] {
            let e = cp * (lp * t).exp() + cm * (lm * t).exp();
            assert!((o.eval(t) - e).abs() < 1e-13);
        }
    }

    #[test]
    fn field_spot_values() {
        let f = make_rhs(ClassicalModel::PendulumDamped { p: 0.0 }).unwrap();
        let mut out = [0.0; 2];
        f(0.0, &[std::f64::consts::FRAC_PI_2, 0.0], &mut out);
        assert_eq!(out, [0.0, -1.0]);
        let f = make_rhs(ClassicalModel::Vdp(VdpParams { mu: 1.0, beta: 0.0 })).unwrap();
        f(0.0, &[0.0, 1.0], &mut out);
        assert_eq!(out, [1.0, 1.0]);
        assert!(make_rhs(ClassicalModel::Vdp(VdpParams { mu: -1.0, beta: 0.0 })).is_err());
    }

    #[test]
    fn rk4_exponential() {
        let tr = rk4_integrate(|_, x, o| o[0] = x[0], &[1.0], 1.0, 1000).unwrap();
        assert!((tr.component(0)[1000] - std::f64::consts::E).abs() < 1e-10);
    }
}
