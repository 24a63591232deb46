//! Two-parameter Mittag-Leffler function on the real line,
//!
//! ```text
//! E_{α,β}(z) = Σ_{k≥0} z^k / Γ(αk + β),
//! ```
//!
//! and the closed-form solutions of the fractional linear oscillator
//! `D^α x = -ω² x` built from it.
//!
//! The series is summed directly. For negative `z` the terms alternate and
//! the largest one can exceed the result by many orders of magnitude (about
//! `e^{|z|^{1/α}}` against a result of order one or smaller), so a plain `f64`
//! sum is only used when its rounding error bound is already small enough.
//! Otherwise the sum is redone in binary floating point with as many bits as
//! the cancellation requires, and the coefficients `1/Γ(αk+β)` come from a
//! Stirling-series `ln Γ` at the same precision. Every returned value carries
//! a bound (truncation tail plus rounding) that is checked against
//! [`CERTIFIED_REL`]; if the bound cannot be met within the term and
//! precision caps, an [`Error::Accuracy`] is returned.

mod hp;

use astro_float::BigFloat;
use statrs::function::gamma::{gamma as gamma_f64, ln_gamma};

use crate::error::{Error, Result};
use hp::{big, big_int, to_f64, HpLnGamma, RM};

/// Relative error bound certified for every value returned by [`ml_eval`].
pub const CERTIFIED_REL: f64 = 1e-10;
/// Truncation tail allowed relative to the accumulated sum.
const TAIL_REL: f64 = 1e-12;
const MAX_TERMS: usize = 10_000;
const MAX_BITS: usize = 1 << 15;
/// Relative accuracy assumed for the `f64` gamma function on the fast path.
const GAMMA_F64_REL: f64 = 1e-14;

/// Γ(x) in double precision.
pub fn gamma(x: f64) -> f64 {
    gamma_f64(x)
}

/// 1/Γ(x), exact at small positive integers.
fn inv_gamma(x: f64) -> f64 {
    if x.fract() == 0.0 && (1.0..=20.0).contains(&x) {
        let f: f64 = (1..x as u32).map(f64::from).product();
        return 1.0 / f;
    }
    1.0 / gamma(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MLParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Domain(format!("Mittag-Leffler alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::Domain(format!("Mittag-Leffler beta must be > 0, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Evaluate `E_{α,β}(z)`.
pub fn ml_eval(params: MLParams, z: f64) -> Result<f64> {
    MittagLeffler::new(params)?.eval(z)
}

/// Reusable evaluator for one `(α, β)`.
///
/// Keeps the extended-precision coefficients `1/Γ(αk+β)` between calls, which
/// makes sampling the function on a mesh much cheaper than repeated
/// [`ml_eval`] calls. Not `Sync`; use one evaluator per thread.
pub struct MittagLeffler {
    params: MLParams,
    cache: Option<CoefficientCache>,
}

struct CoefficientCache {
    bits: usize,
    coeffs: Vec<BigFloat>,
    lngamma: HpLnGamma,
}

/// Log-magnitude profile of the terms `|z|^k / Γ(αk+β)`, extended lazily.
struct TermProfile {
    alpha: f64,
    beta: f64,
    ln_z: f64,
    /// log of the largest term magnitude
    peak: f64,
    /// log|t_k| for k = 0..len
    log_terms: Vec<f64>,
}

impl TermProfile {
    /// Scan until the terms start to decrease; `ln |t_k|` is concave in
    /// `k`, so the first decrease marks the peak.
    fn new(alpha: f64, beta: f64, z: f64) -> Result<Self> {
        let mut p = Self {
            alpha,
            beta,
            ln_z: z.abs().ln(),
            peak: f64::NEG_INFINITY,
            log_terms: Vec::with_capacity(64),
        };
        loop {
            p.push()?;
            let k = p.log_terms.len() - 1;
            if k > 0 && p.log_terms[k] < p.log_terms[k - 1] {
                return Ok(p);
            }
        }
    }

    fn push(&mut self) -> Result<()> {
        let k = self.log_terms.len();
        if k > MAX_TERMS {
            return Err(Error::Accuracy(format!(
                "E_{{{},{}}} needs more than {MAX_TERMS} series terms",
                self.alpha, self.beta
            )));
        }
        let lt = k as f64 * self.ln_z - ln_gamma(self.alpha * k as f64 + self.beta);
        self.peak = self.peak.max(lt);
        self.log_terms.push(lt);
        Ok(())
    }

    /// Number of terms whose geometric tail majorant is below `e^{cut}`,
    /// and that majorant. Term ratios decrease in k (log-convexity of Γ),
    /// so past the peak the tail after term k is at most
    /// `|t_{k+1}| / (1 - ρ_k)`.
    fn terms_for(&mut self, cut: f64) -> Result<(usize, f64)> {
        let mut k = 1;
        loop {
            while k + 1 >= self.log_terms.len() {
                self.push()?;
            }
            let lt = &self.log_terms;
            let log_ratio = lt[k + 1] - lt[k];
            if log_ratio < 0.0 && lt[k] < self.peak {
                let tail = lt[k + 1] - (-log_ratio.exp()).ln_1p();
                if tail < cut {
                    return Ok((k + 1, tail.exp()));
                }
            }
            k += 1;
        }
    }
}

impl MittagLeffler {
    pub fn new(params: MLParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, cache: None })
    }

    pub fn params(&self) -> MLParams {
        self.params
    }

    pub fn eval(&mut self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::NonFinite(format!("Mittag-Leffler argument {z}")));
        }
        let MLParams { alpha, beta } = self.params;
        if z == 0.0 {
            return Ok(inv_gamma(beta));
        }
        let mut profile = TermProfile::new(alpha, beta, z)?;
        if z > 0.0 && profile.peak > 709.0 {
            return Err(Error::Accuracy(format!(
                "E_{{{alpha},{beta}}}({z}) overflows double precision"
            )));
        }
        if profile.peak < 8.0 {
            if let Some(v) = self.eval_f64(z, &mut profile)? {
                return Ok(v);
            }
        }
        self.eval_extended(z, &mut profile)
    }

    fn eval_f64(&self, z: f64, profile: &mut TermProfile) -> Result<Option<f64>> {
        let MLParams { alpha, beta } = self.params;
        let eps = f64::EPSILON;
        let (n, tail) = profile.terms_for(profile.peak - 60.0)?;
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        let mut abs_sum = 0.0;
        let mut err = 0.0;
        for k in 0..n {
            let arg = alpha * k as f64 + beta;
            let (t, rel) = if arg < 170.0 {
                let t = z.powi(k as i32) / gamma(arg);
                (t, (k as f64 + 2.0) * eps + GAMMA_F64_REL)
            } else {
                let lt = profile.log_terms[k];
                let sign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
                (sign * lt.exp(), 4.0 * eps * (1.0 + lt.abs() + k as f64 * z.abs().ln().abs()))
            };
            err += t.abs() * rel;
            abs_sum += t.abs();
            // Neumaier compensated summation
            let s = sum + t;
            if sum.abs() >= t.abs() {
                comp += (sum - s) + t;
            } else {
                comp += (t - s) + sum;
            }
            sum = s;
        }
        let total = sum + comp;
        let bound = err + tail + 2.0 * eps * total.abs() + 4.0 * (n as f64) * eps * eps * abs_sum;
        Ok((tail <= TAIL_REL * total.abs() && bound <= CERTIFIED_REL * total.abs()).then_some(total))
    }

    fn eval_extended(&mut self, z: f64, profile: &mut TermProfile) -> Result<f64> {
        let MLParams { alpha, beta } = self.params;
        let ln2 = std::f64::consts::LN_2;
        // bits that cover the peak term plus the requested relative accuracy
        let mut bits = (profile.peak.max(0.0) / ln2).ceil() as usize + 64;
        loop {
            if bits > MAX_BITS {
                return Err(Error::Accuracy(format!(
                    "E_{{{alpha},{beta}}}({z}) needs more than {MAX_BITS} bits"
                )));
            }
            let cut = profile.peak - bits as f64 * ln2;
            let (n, tail) = profile.terms_for(cut)?;
            let guard = 2 * ((n + 4) as f64).log2().ceil() as usize + 8;
            let work = bits + guard;
            let sum = self.sum_extended(z, n, work);
            let value = to_f64(&sum);
            // rounding bound e^{peak} 2^{-bits-3}, tail bound from the profile
            let rounding = (profile.peak - (bits + 3) as f64 * ln2).exp();
            let bound = rounding + tail;
            let mag = value.abs();
            if mag > 0.0 && tail <= TAIL_REL * mag && bound <= CERTIFIED_REL * mag {
                return Ok(value);
            }
            let deficit = if mag > 0.0 {
                (bound / (TAIL_REL * mag)).log2().ceil().max(1.0) as usize + 16
            } else {
                bits / 2 + 64
            };
            bits += deficit;
        }
    }

    fn sum_extended(&mut self, z: f64, n: usize, work: usize) -> BigFloat {
        self.ensure_coefficients(n, work);
        let cache = self.cache.as_ref().expect("coefficients present");
        let zb = big(z, work);
        let mut power = big(1.0, work);
        let mut sum = big(0.0, work);
        for c in cache.coeffs.iter().take(n) {
            sum = sum.add(&c.mul(&power, work, RM), work, RM);
            power = power.mul(&zb, work, RM);
        }
        sum
    }

    fn ensure_coefficients(&mut self, n: usize, work: usize) {
        let MLParams { alpha, beta } = self.params;
        let stale = match &self.cache {
            Some(c) => c.bits < work,
            None => true,
        };
        if stale {
            // a little headroom so nearby arguments reuse the table
            let bits = work + work / 4;
            self.cache = Some(CoefficientCache {
                bits,
                coeffs: Vec::new(),
                lngamma: HpLnGamma::new(bits),
            });
        }
        let cache = self.cache.as_mut().expect("cache initialised");
        let p = cache.lngamma.precision() + 32;
        let a = big(alpha, p);
        let b = big(beta, p);
        while cache.coeffs.len() < n {
            let k = cache.coeffs.len() as u64;
            let x = a.mul(&big_int(k, p), p, RM).add(&b, p, RM);
            let lg = cache.lngamma.ln_gamma(&x, alpha * k as f64 + beta);
            let c = lg.neg().exp(p, RM, cache.lngamma.consts());
            cache.coeffs.push(c);
        }
    }
}

/// `x(t) = c1 E_{α,1}(-ω² t^α) + c2 t E_{α,2}(-ω² t^α)`, the general
/// solution of `D^α x = -ω² x` for `1 < α ≤ 2` (with `c1 = x(0)`,
/// `c2 = ẋ(0)`). With `c2 = 0` the same expression solves the `0 < α < 1`
/// problem with `x(0) = c1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorSolution {
    pub c1: f64,
    pub c2: f64,
    pub omega2: f64,
    pub alpha: f64,
}

impl OscillatorSolution {
    pub fn new(c1: f64, c2: f64, omega2: f64, alpha: f64) -> Result<Self> {
        let s = Self { c1, c2, omega2, alpha };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.omega2.is_finite() && self.omega2 > 0.0) {
            return Err(Error::Domain(format!("omega^2 must be > 0, got {}", self.omega2)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::Domain(format!("oscillator order must lie in (0, 2], got {}", self.alpha)));
        }
        if !(self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::NonFinite("oscillator amplitudes".into()));
        }
        Ok(())
    }

    pub fn evaluator(&self) -> Result<OscillatorEvaluator> {
        self.validate()?;
        Ok(OscillatorEvaluator {
            sol: *self,
            e1: MittagLeffler::new(MLParams::new(self.alpha, 1.0)?)?,
            e2: MittagLeffler::new(MLParams::new(self.alpha, 2.0)?)?,
        })
    }
}

/// Evaluate an [`OscillatorSolution`] at one time.
pub fn oscillator_exact(sol: OscillatorSolution, t: f64) -> Result<f64> {
    sol.evaluator()?.eval(t)
}

pub struct OscillatorEvaluator {
    sol: OscillatorSolution,
    e1: MittagLeffler,
    e2: MittagLeffler,
}

impl OscillatorEvaluator {
    pub fn eval(&mut self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("oscillator time must be >= 0, got {t}")));
        }
        let OscillatorSolution { c1, c2, omega2, alpha } = self.sol;
        let z = -omega2 * t.powf(alpha);
        let mut x = 0.0;
        if c1 != 0.0 {
            x += c1 * self.e1.eval(z)?;
        }
        if c2 != 0.0 && t > 0.0 {
            x += c2 * t * self.e2.eval(z)?;
        }
        Ok(x)
    }

    /// Samples at each of `times`.
    pub fn sample(&mut self, times: &[f64]) -> Result<Vec<f64>> {
        times.iter().map(|&t| self.eval(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ml(a: f64, b: f64, z: f64) -> f64 {
        ml_eval(MLParams::new(a, b).unwrap(), z).unwrap()
    }

    #[test]
    fn exponential_special_case() {
        assert!((ml(1.0, 1.0, 1.0) - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn cosine_special_case() {
        assert!((ml(2.0, 1.0, -4.0) - 2f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn zero_argument_keeps_only_first_term() {
        assert_eq!(ml(1.5, 2.0, 0.0), 1.0);
        for &b in &[0.5, 1.0, 1.5, 2.0] {
            let v = ml(0.7, b, 0.0);
            assert!((v - 1.0 / gamma(b)).abs() <= 1e-13 * v.abs());
        }
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(matches!(MLParams::new(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(MLParams::new(-1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(MLParams::new(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn deep_cancellation_goes_through_extended_precision() {
        // e^{-50}: largest term is about e^{50}
        let v = ml(1.0, 1.0, -50.0);
        assert!(((v - (-50f64).exp()) / (-50f64).exp()).abs() < 1e-10);
        let v = ml(1.0, 1.0, -400.0);
        let e = (-400f64).exp();
        assert!(((v - e) / e).abs() < 1e-10, "{v:e} vs {e:e}");
    }

    #[test]
    fn impossible_requests_are_signalled() {
        // largest term near e^{160000}
        let r = ml_eval(MLParams::new(0.5, 1.0).unwrap(), -400.0);
        assert!(matches!(r, Err(Error::Accuracy(_))));
        let r = ml_eval(MLParams::new(1.0, 1.0).unwrap(), 800.0);
        assert!(matches!(r, Err(Error::Accuracy(_))));
    }

    #[test]
    fn oscillator_reduces_to_cosine_at_order_two() {
        let s = OscillatorSolution::new(1.0, 0.0, 1.0, 2.0).unwrap();
        assert!((oscillator_exact(s, std::f64::consts::PI).unwrap() + 1.0).abs() < 1e-12);
        let s = OscillatorSolution::new(0.0, 1.0, 1.0, 2.0).unwrap();
        assert!((oscillator_exact(s, 1.3).unwrap() - 1.3f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn oscillator_at_time_zero() {
        for &a in &[0.3, 1.2, 1.7, 2.0] {
            let s = OscillatorSolution::new(1.0, 0.0, 2.5, a).unwrap();
            assert_eq!(oscillator_exact(s, 0.0).unwrap(), 1.0);
        }
        let s = OscillatorSolution::new(1.0, 0.0, 1.0, 1.5).unwrap();
        assert!(oscillator_exact(s, -1.0).is_err());
    }
}
