//! Extended-precision helpers for the Mittag-Leffler series: `ln Γ` on
//! positive reals through the Stirling series, and conversions between
//! `f64` and [`BigFloat`].

use std::sync::OnceLock;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::BigInt;

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

/// Stirling terms available; enough for a few thousand bits with a
/// moderate argument shift.
const STIRLING_TERMS: usize = 150;

/// Tangent numbers `T_1..T_n` (`tan x = Σ T_k x^{2k-1}/(2k-1)!`) by the
/// Brent–Harvey in-place recurrence. Integer arithmetic only.
fn tangent_numbers(n: usize) -> Vec<BigInt> {
    let mut t: Vec<BigInt> = vec![BigInt::from(0); n + 1];
    t[1] = BigInt::from(1);
    for k in 2..=n {
        t[k] = &t[k - 1] * (k - 1);
    }
    for k in 2..=n {
        for j in k..=n {
            t[j] = &t[j - 1] * (j - k) + &t[j] * (j - k + 2);
        }
    }
    t
}

/// `B_{2k}` as (numerator, denominator), `k = 1..=STIRLING_TERMS`.
fn bernoulli_even() -> &'static [(BigInt, BigInt)] {
    static CELL: OnceLock<Vec<(BigInt, BigInt)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = tangent_numbers(STIRLING_TERMS);
        (1..=STIRLING_TERMS)
            .map(|k| {
                // B_{2k} = (-1)^{k-1} 2k T_k / (4^k (4^k - 1))
                let four_k = BigInt::from(1) << (2 * k);
                let mut num = &t[k] * (2 * k);
                if k % 2 == 0 {
                    num = -num;
                }
                let den = &four_k * (&four_k - 1);
                (num, den)
            })
            .collect()
    })
}

/// Exact rational `B_{2k}` for tests.
#[cfg(test)]
pub(crate) fn bernoulli_2k(k: usize) -> (BigInt, BigInt) {
    bernoulli_even()[k - 1].clone()
}

/// `log|B_{2j}|` estimate through `2 (2j)! / (2π)^{2j}`.
fn ln_abs_bernoulli(j: usize) -> f64 {
    let m = 2.0 * j as f64;
    std::f64::consts::LN_2 + statrs::function::gamma::ln_gamma(m + 1.0)
        - m * (2.0 * std::f64::consts::PI).ln()
}

/// Natural log of the Stirling truncation error after `k` terms at `y`.
fn ln_stirling_error(k: usize, y: f64) -> f64 {
    let j = k + 1;
    let m = 2.0 * j as f64;
    ln_abs_bernoulli(j) - (m * (m - 1.0)).ln() - (m - 1.0) * y.ln()
}

pub(crate) fn big(x: f64, p: usize) -> BigFloat {
    BigFloat::from_f64(x, p)
}

pub(crate) fn big_int(k: u64, p: usize) -> BigFloat {
    BigFloat::from_u64(k, p)
}

fn parse_int(n: &BigInt, p: usize, cc: &mut Consts) -> BigFloat {
    BigFloat::parse(&n.to_string(), Radix::Dec, p, RM, cc)
}

/// Nearest `f64`. Values beyond the `f64` range map to ±∞ or ±0.
pub(crate) fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    let Some((words, _, sign, exp, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let top = *words.last().expect("normalized mantissa has words") as f64;
    // mantissa in [1/2, 1): top / 2^64 * 2^exp
    let e = exp as i64 - 64;
    let mut v = top;
    let mut rem = e;
    while rem > 1000 {
        v *= 2f64.powi(1000);
        rem -= 1000;
    }
    while rem < -1000 {
        v *= 2f64.powi(-1000);
        rem += 1000;
    }
    v *= 2f64.powi(rem as i32);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

/// `ln Γ(x)` for `x > 0` with absolute error around `2^-prec`.
pub(crate) struct HpLnGamma {
    prec: usize,
    /// `B_{2k} / (2k (2k-1))`
    stirling: Vec<BigFloat>,
    half_ln_2pi: BigFloat,
    cc: Consts,
}

impl HpLnGamma {
    pub(crate) fn new(prec: usize) -> Self {
        let mut cc = Consts::new().expect("astro-float constants cache");
        let p = prec + 64;
        let stirling = bernoulli_even()
            .iter()
            .enumerate()
            .map(|(i, (num, den))| {
                let k = (i + 1) as u64;
                let n = parse_int(num, p, &mut cc);
                let d = parse_int(den, p, &mut cc);
                let scale = big_int(2 * k * (2 * k - 1), p);
                n.div(&d.mul(&scale, p, RM), p, RM)
            })
            .collect();
        let two_pi = cc.pi(p, RM).mul(&big_int(2, p), p, RM);
        let half_ln_2pi = two_pi.ln(p, RM, &mut cc).div(&big_int(2, p), p, RM);
        Self { prec, stirling, half_ln_2pi, cc }
    }

    pub(crate) fn precision(&self) -> usize {
        self.prec
    }

    pub(crate) fn consts(&mut self) -> &mut Consts {
        &mut self.cc
    }

    /// `x_approx` is `x` rounded to `f64`; it steers the shift and term count.
    pub(crate) fn ln_gamma(&mut self, x: &BigFloat, x_approx: f64) -> BigFloat {
        debug_assert!(x_approx > 0.0);
        let target = -((self.prec + 8) as f64) * std::f64::consts::LN_2;
        let k_max = STIRLING_TERMS - 1;

        // smallest argument at which k_max terms reach the target
        let j = k_max + 1;
        let m = 2.0 * j as f64;
        let ln_y_min =
            (ln_abs_bernoulli(j) - (m * (m - 1.0)).ln() - target) / (m - 1.0);
        let y_min = ln_y_min.exp().max(8.0);
        let shift = if x_approx >= y_min { 0 } else { (y_min - x_approx).ceil() as u64 };
        let y_approx = x_approx + shift as f64;
        let terms = (1..=k_max)
            .find(|&k| ln_stirling_error(k, y_approx) < target)
            .unwrap_or(k_max);

        let mag = (y_approx * y_approx.ln().abs().max(1.0) + 2.0).log2().ceil() as usize;
        let p = self.prec + 16 + mag;

        let y = if shift == 0 {
            x.clone()
        } else {
            x.add(&big_int(shift, p), p, RM)
        };
        let ln_y = y.ln(p, RM, &mut self.cc);
        let half = big(0.5, p);
        let mut acc = y.sub(&half, p, RM).mul(&ln_y, p, RM).sub(&y, p, RM);
        acc = acc.add(&self.half_ln_2pi, p, RM);

        let inv_y = big_int(1, p).div(&y, p, RM);
        let inv_y2 = inv_y.mul(&inv_y, p, RM);
        let mut pow = inv_y;
        for c in self.stirling.iter().take(terms) {
            acc = acc.add(&c.mul(&pow, p, RM), p, RM);
            pow = pow.mul(&inv_y2, p, RM);
        }

        if shift > 0 {
            let mut prod = x.clone();
            for i in 1..shift {
                let xi = x.add(&big_int(i, p), p, RM);
                prod = prod.mul(&xi, p, RM);
            }
            acc = acc.sub(&prod.ln(p, RM, &mut self.cc), p, RM);
        }
        acc
    }
}
