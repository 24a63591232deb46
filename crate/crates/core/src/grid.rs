use crate::error::{Error, Result};

/// `n + 1` equally spaced nodes `t_0 = a < t_1 < ... < t_n = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    a: f64,
    b: f64,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl UniformGrid {
    /// At least two subintervals are required: the curvature coefficients
    /// distinguish the first, interior and last nodes.
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite("grid endpoints".into()));
        }
        if b <= a {
            return Err(Error::Domain(format!("grid needs a < b, got [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::Domain(format!("grid needs n >= 2 subintervals, got {n}")));
        }
        let h = (b - a) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|k| a + k as f64 * h).collect();
        nodes[n] = b;
        Ok(Self { a, b, n, h, nodes })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of subintervals.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: f64) -> bool {
        let tol = 1e-12 * (self.b - self.a);
        t >= self.a - tol && t <= self.b + tol
    }

    /// Index `k` of the interval `I_k = [t_{k-1}, t_k]` holding `t`
    /// (1-based; interior nodes belong to the interval on their left).
    pub fn interval_of(&self, t: f64) -> Result<usize> {
        if !self.contains(t) {
            return Err(Error::OutOfRange { t, a: self.a, b: self.b });
        }
        let s = ((t - self.a) / self.h).ceil();
        Ok((s as usize).clamp(1, self.n))
    }

    /// True when both grids describe the same nodes.
    pub fn same_as(&self, other: &UniformGrid) -> bool {
        self.n == other.n && self.a == other.a && self.b == other.b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_uniform_and_hit_the_endpoints() {
        let g = UniformGrid::new(0.0, 20.0, 50).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(50), 20.0);
        for k in 1..=50 {
            assert!((g.node(k) - g.node(k - 1) - g.h()).abs() <= 1e-12 * 20.0);
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(UniformGrid::new(0.0, 1.0, 1).is_err());
        assert!(UniformGrid::new(1.0, 1.0, 4).is_err());
        assert!(UniformGrid::new(0.0, f64::NAN, 4).is_err());
    }

    #[test]
    fn interval_lookup() {
        let g = UniformGrid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.interval_of(0.0).unwrap(), 1);
        assert_eq!(g.interval_of(0.25).unwrap(), 1);
        assert_eq!(g.interval_of(0.3).unwrap(), 2);
        assert_eq!(g.interval_of(1.0).unwrap(), 4);
        assert!(g.interval_of(1.1).is_err());
    }
}
