//! Discrete Caputo derivative of the quadratic interpolant at the nodes.
//!
//! With `P'_j(s) = σ_j + a_j (2s - 2t_{j-1} - h)` on interval `j`
//! (`σ_j` the chord slope), the node derivative is
//!
//! ```text
//! D^α x(t_k) = 1/Γ(1-α) Σ_{j≤k} [ G_{k,j} a_j + d̃_{k,j} σ_j ]
//! ```
//!
//! where `d̃_{k,j} = ∫_{I_j} (t_k - s)^{-α} ds` and
//! `G_{k,j} = ∫_{I_j} (2s - 2t_{j-1} - h)(t_k - s)^{-α} ds`. The table
//! `γ_{k,j} = (α-1)(α-2) G_{k,j}` has the closed form
//!
//! ```text
//! γ_{k,j} = [h(k-j)]^{1-α} B2 - [h(k-j+1)]^{1-α} B1
//! B1 = -2h(j+k-2) + h(2j-3)α - 2(α-2) t_{j-1}
//! B2 = -2h(j+k-1) + h(2j-1)α - 2(α-2) t_{j-1}
//! ```
//!
//! with times measured from the left endpoint. Every entry is a power-rule
//! antiderivative; nothing is integrated numerically.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::UniformGrid;
use crate::mittag_leffler::gamma;
use crate::spline::{EndCondition, QuadSpline};

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("discrete Caputo weights need 0 < alpha < 1, got {alpha}")))
    }
}

/// Packed index of `(k, j)`, `1 ≤ j ≤ k ≤ n`.
#[inline]
fn tri(k: usize, j: usize) -> usize {
    k * (k - 1) / 2 + (j - 1)
}

/// `(γ_{k,j}, c̃_{k,j}, d̃_{k,j})` for one pair.
fn entry(k: usize, j: usize, h: f64, alpha: f64) -> (f64, f64, f64) {
    let e1 = 1.0 - alpha;
    let e2 = 2.0 - alpha;
    let u0 = h * (k - j) as f64;
    let u1 = h * (k - j + 1) as f64;
    let (p0, p1) = (u0.powf(e1), u1.powf(e1));
    let tl = (j - 1) as f64 * h;
    let tk = k as f64 * h;
    let d = (p1 - p0) / e1;
    // ∫ s (t_k - s)^{-α} ds = t_k d̃ - ∫ (t_k - s)^{1-α} ds
    let c = tk * d - (u1.powf(e2) - u0.powf(e2)) / e2;
    let jf = j as f64;
    let kf = k as f64;
    let b1 = -2.0 * h * (jf + kf - 2.0) + h * (2.0 * jf - 3.0) * alpha - 2.0 * (alpha - 2.0) * tl;
    let b2 = -2.0 * h * (jf + kf - 1.0) + h * (2.0 * jf - 1.0) * alpha - 2.0 * (alpha - 2.0) * tl;
    let g = p0 * b2 - p1 * b1;
    (g, c, d)
}

/// Weight tables for one order on one grid.
#[derive(Debug, Clone)]
pub struct CaputoWeights {
    grid: UniformGrid,
    alpha: f64,
    gamma: Vec<f64>,
    ctilde: Vec<f64>,
    dtilde: Vec<f64>,
}

impl CaputoWeights {
    pub fn new(grid: &UniformGrid, alpha: f64) -> Result<Self> {
        Self::with_exec(grid, alpha, Exec::default())
    }

    pub fn with_exec(grid: &UniformGrid, alpha: f64, exec: Exec) -> Result<Self> {
        check_order(alpha)?;
        let n = grid.n();
        let h = grid.h();
        let rows = exec.map_range(n, |r| {
            let k = r + 1;
            (1..=k).map(|j| entry(k, j, h, alpha)).collect::<Vec<_>>()
        });
        let size = n * (n + 1) / 2;
        let mut gamma = Vec::with_capacity(size);
        let mut ctilde = Vec::with_capacity(size);
        let mut dtilde = Vec::with_capacity(size);
        for row in rows {
            for (g, c, d) in row {
                gamma.push(g);
                ctilde.push(c);
                dtilde.push(d);
            }
        }
        Ok(Self { grid: grid.clone(), alpha, gamma, ctilde, dtilde })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `γ_{k,j}`, `1 ≤ j ≤ k ≤ n`.
    pub fn gamma(&self, k: usize, j: usize) -> f64 {
        self.gamma[tri(k, j)]
    }

    /// `c̃_{k,j} = ∫_{I_j} (s - a)(t_k - s)^{-α} ds`.
    pub fn ctilde(&self, k: usize, j: usize) -> f64 {
        self.ctilde[tri(k, j)]
    }

    /// `d̃_{k,j} = ∫_{I_j} (t_k - s)^{-α} ds`.
    pub fn dtilde(&self, k: usize, j: usize) -> f64 {
        self.dtilde[tri(k, j)]
    }

    fn check_grid(&self, spline: &QuadSpline) -> Result<()> {
        if self.grid.same_as(spline.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch("weights and spline live on different grids".into()))
        }
    }
}

/// `D^α x(t_k)` for `k = 1..n` from the closed-form `γ` table.
pub fn caputo_apply(weights: &CaputoWeights, spline: &QuadSpline) -> Result<Vec<f64>> {
    weights.check_grid(spline)?;
    let alpha = weights.alpha;
    let n = weights.grid.n();
    let scale = 1.0 / ((alpha - 1.0) * (alpha - 2.0));
    let gi = 1.0 / gamma(1.0 - alpha);
    let a = spline.curvatures();
    let slopes: Vec<f64> = (1..=n).map(|j| spline.slope(j)).collect();
    Ok((1..=n)
        .map(|k| {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += weights.gamma(k, j) * scale * a[j - 1] + weights.dtilde(k, j) * slopes[j - 1];
            }
            gi * acc
        })
        .collect())
}

/// The same derivative assembled from the moment tables:
/// `1/Γ(1-α) Σ_j (α_j c̃_{k,j} + β_j d̃_{k,j})`.
pub fn caputo_apply_moments(weights: &CaputoWeights, spline: &QuadSpline) -> Result<Vec<f64>> {
    weights.check_grid(spline)?;
    let n = weights.grid.n();
    let h = weights.grid.h();
    let gi = 1.0 / gamma(1.0 - weights.alpha);
    let a = spline.curvatures();
    Ok((1..=n)
        .map(|k| {
            let mut acc = 0.0;
            for j in 1..=k {
                let tl = (j - 1) as f64 * h;
                let aj = 2.0 * a[j - 1];
                let bj = spline.slope(j) - a[j - 1] * (2.0 * tl + h);
                acc += aj * weights.ctilde(k, j) + bj * weights.dtilde(k, j);
            }
            gi * acc
        })
        .collect())
}

/// The node derivative as a linear map of the samples,
/// `M = L + w ℓᵀ`: `L` is lower triangular in the sense that row `k` only
/// touches `x_0..x_k`, and `ℓ` is the functional giving `a_1`.
///
/// Covers `0 < α ≤ 1`; at `α = 1` the node value is `P'_k(t_k)`.
#[derive(Debug, Clone)]
pub struct CaputoOperator {
    grid: UniformGrid,
    alpha: f64,
    end: EndCondition,
    /// `n × (n+1)`, row `k-1` for node `t_k`
    lower: DMatrix<f64>,
    w: DVector<f64>,
    ell: DVector<f64>,
}

impl CaputoOperator {
    pub fn new(grid: &UniformGrid, alpha: f64) -> Result<Self> {
        Self::with_options(grid, alpha, EndCondition::default(), Exec::default())
    }

    pub fn with_options(grid: &UniformGrid, alpha: f64, end: EndCondition, exec: Exec) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("Caputo operator needs 0 < alpha <= 1, got {alpha}")));
        }
        let n = grid.n();
        let h = grid.h();
        let h2 = h * h;
        let rows = exec.map_range(n, |r| {
            let k = r + 1;
            // coefficient of D_i (i < k), of σ_j (j ≤ k), and w_k
            let (hcoef, dcoef, wk) = if alpha == 1.0 {
                let hc: Vec<f64> =
                    (1..k).map(|i| if (k - 1 - i) % 2 == 0 { h } else { -h }).collect();
                let mut dc = vec![0.0; k];
                dc[k - 1] = 1.0;
                let wk = if (k - 1) % 2 == 0 { h } else { -h };
                (hc, dc, wk)
            } else {
                let scale = 1.0 / ((alpha - 1.0) * (alpha - 2.0));
                let gi = 1.0 / gamma(1.0 - alpha);
                let mut g = Vec::with_capacity(k);
                let mut dc = Vec::with_capacity(k);
                for j in 1..=k {
                    let (gm, _, d) = entry(k, j, h, alpha);
                    g.push(gm * scale * gi);
                    dc.push(d * gi);
                }
                // H_{k,k-1} = G_{k,k}, H_{k,i} = G_{k,i+1} - H_{k,i+1}
                let mut hc = vec![0.0; k.saturating_sub(1)];
                if k >= 2 {
                    hc[k - 2] = g[k - 1];
                    for i in (1..k - 1).rev() {
                        hc[i - 1] = g[i] - hc[i];
                    }
                }
                let wk = g
                    .iter()
                    .enumerate()
                    .map(|(idx, gj)| if idx % 2 == 0 { *gj } else { -gj })
                    .sum();
                (hc, dc, wk)
            };
            let mut row = vec![0.0; n + 1];
            for (idx, c) in hcoef.iter().enumerate() {
                let i = idx + 1;
                let c = c / h2;
                row[i - 1] += c;
                row[i] -= 2.0 * c;
                row[i + 1] += c;
            }
            for (idx, c) in dcoef.iter().enumerate() {
                let j = idx + 1;
                row[j] += c / h;
                row[j - 1] -= c / h;
            }
            (row, wk)
        });
        let mut lower = DMatrix::zeros(n, n + 1);
        let mut w = DVector::zeros(n);
        for (r, (row, wk)) in rows.into_iter().enumerate() {
            for (c, v) in row.into_iter().enumerate() {
                lower[(r, c)] = v;
            }
            w[r] = wk;
        }
        let mut ell = DVector::zeros(n + 1);
        match end {
            EndCondition::Alternating => {
                let nf = n as f64;
                for i in 1..n {
                    let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                    let c = sign * (1.0 - i as f64 / nf) / h2;
                    ell[i - 1] += c;
                    ell[i] -= 2.0 * c;
                    ell[i + 1] += c;
                }
            }
            EndCondition::FirstInterval => {
                let c = 0.5 / h2;
                ell[0] += c;
                ell[1] -= 2.0 * c;
                ell[2] += c;
            }
        }
        Ok(Self { grid: grid.clone(), alpha, end, lower, w, ell })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn end_condition(&self) -> EndCondition {
        self.end
    }

    /// Causal part, `n × (n+1)`.
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Column multiplying `a_1`.
    pub fn w(&self) -> &DVector<f64> {
        &self.w
    }

    /// `a_1 = ℓ · x`.
    pub fn ell(&self) -> &DVector<f64> {
        &self.ell
    }

    /// Full `n × (n+1)` matrix.
    pub fn dense(&self) -> DMatrix<f64> {
        &self.lower + &self.w * self.ell.transpose()
    }

    /// `D^α x(t_k)` for `k = 1..n`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n();
        if x.len() != n + 1 {
            return Err(Error::Dimension { expected: n + 1, found: x.len() });
        }
        let xv = DVector::from_column_slice(x);
        let a1 = self.ell.dot(&xv);
        let out = &self.lower * &xv + &self.w * a1;
        Ok(out.iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::build_spline;

    #[test]
    fn dtilde_first_entry() {
        let g = UniformGrid::new(0.0, 1.0, 2).unwrap();
        let w = CaputoWeights::new(&g, 0.5).unwrap();
        assert!((w.dtilde(1, 1) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn weights_reject_orders_outside_unit_interval() {
        let g = UniformGrid::new(0.0, 1.0, 4).unwrap();
        assert!(CaputoWeights::new(&g, 1.0).is_err());
        assert!(CaputoWeights::new(&g, 0.0).is_err());
    }

    #[test]
    fn three_assemblies_agree() {
        let g = UniformGrid::new(0.0, 2.0, 11).unwrap();
        let x: Vec<f64> = g.nodes().iter().map(|t| (1.3 * t).cos() + 0.2 * t).collect();
        let s = build_spline(&g, &x).unwrap();
        for &al in &[0.2, 0.5, 0.85] {
            let w = CaputoWeights::new(&g, al).unwrap();
            let a = caputo_apply(&w, &s).unwrap();
            let b = caputo_apply_moments(&w, &s).unwrap();
            let m = CaputoOperator::new(&g, al).unwrap().apply(&x).unwrap();
            for k in 0..a.len() {
                let sc = a[k].abs().max(1.0);
                assert!((a[k] - b[k]).abs() < 1e-9 * sc);
                assert!((a[k] - m[k]).abs() < 1e-9 * sc);
                let direct = s.caputo_at(al, g.node(k + 1)).unwrap();
                assert!((a[k] - direct).abs() < 1e-9 * sc);
            }
        }
    }

    #[test]
    fn first_order_operator_is_spline_slope_at_nodes() {
        let g = UniformGrid::new(0.0, 1.0, 6).unwrap();
        let x: Vec<f64> = g.nodes().iter().map(|t| t.exp()).collect();
        let s = build_spline(&g, &x).unwrap();
        let m = CaputoOperator::new(&g, 1.0).unwrap().apply(&x).unwrap();
        for k in 1..=6 {
            let d = s.derivative(g.node(k)).unwrap();
            assert!((m[k - 1] - d).abs() < 1e-10);
        }
    }

    #[test]
    fn operator_rows_are_causal() {
        let g = UniformGrid::new(0.0, 1.0, 8).unwrap();
        let op = CaputoOperator::new(&g, 0.4).unwrap();
        let l = op.lower();
        for r in 0..8 {
            for c in (r + 2)..9 {
                assert_eq!(l[(r, c)], 0.0);
            }
        }
    }
}
