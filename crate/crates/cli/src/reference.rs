//! Published reference values the table commands grade themselves against.

/// Orders of the linear-oscillator precision table.
pub const PRECISION_ALPHAS: [f64; 3] = [0.1, 0.5, 0.9];

/// `(n, [e_n for each of PRECISION_ALPHAS])`.
pub const PRECISION: [(usize, [f64; 3]); 4] = [
    (5, [7.4e-3, 1.7e-3, 2.0e-4]),
    (10, [3.0e-3, 4.9e-4, 2.8e-5]),
    (20, [1.1e-3, 1.4e-4, 5.9e-6]),
    (40, [3.0e-4, 3.7e-5, 1.3e-6]),
];

/// Sine problem with terminal anchor: `(n, x(0), e_r %, e_n)`; `e_r` is
/// undefined on the first row.
pub const SINE: [(usize, f64, Option<f64>, f64); 5] = [
    (5, 1.74895, None, 1.8e-2),
    (10, 1.73812, Some(0.5), 7.4e-3),
    (20, 1.73326, Some(0.3), 2.6e-3),
    (30, 1.73166, Some(0.09), 1.1e-3),
    (40, 1.73085, Some(0.05), 5.6e-4),
];

pub struct FitRow {
    pub alpha: f64,
    pub p: f64,
    pub e: f64,
    /// breaks the monotone trend of its neighbours and is not used in fits
    pub suspect: bool,
}

const fn row(alpha: f64, p: f64, e: f64) -> FitRow {
    FitRow { alpha, p, e, suspect: false }
}

pub const LINEAR_FIT: [FitRow; 7] = [
    row(1.10, 1.140, 6.4e-3),
    row(1.30, 0.891, 5.7e-3),
    row(1.50, 0.668, 4.7e-3),
    row(1.70, 0.433, 3.3e-3),
    row(1.90, 0.152, 1.1e-3),
    FitRow { alpha: 1.95, p: 0.754, e: 4.3e-4, suspect: true },
    row(2.0, 0.0, 0.0),
];

pub const PENDULUM_FIT: [FitRow; 5] = [
    row(0.50, 1.203, 5.5e-3),
    row(0.70, 0.757, 3.9e-3),
    row(0.90, 0.294, 2.1e-3),
    row(0.95, 0.148, 1.4e-3),
    row(1.00, 0.0, 0.0),
];

/// `p(α) ≈ c0 + c1 α + c2 α²` over the linear oscillator rows.
pub const QUADRATIC: [f64; 3] = [1.49409, 0.056127, -0.401446];

/// Matched extra damping of the classical van der Pol system at
/// `α = 0.9, μ = 0.1`.
pub const VDP_BETA: f64 = 0.315;
