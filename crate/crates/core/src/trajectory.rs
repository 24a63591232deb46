//! Time series of an m-dimensional state, shared by the fractional and
//! classical solvers, with a plain CSV form (`t,x1..xm`).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::spline::{build_spline, QuadSpline};

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    /// `states[c][k]`: component `c` at `times[k]`
    states: Vec<Vec<f64>>,
    /// order of the derivative that produced it, 0 for classical runs
    alpha: f64,
}

/// Shortest decimal form that still round-trips is not needed; 17
/// significant digits always do.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>, alpha: f64) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Dimension { expected: 1, found: 0 });
        }
        for s in &states {
            if s.len() != times.len() {
                return Err(Error::Dimension { expected: times.len(), found: s.len() });
            }
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("trajectory times must increase strictly".into()));
        }
        if times.iter().chain(states.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory entry".into()));
        }
        Ok(Self { times, states, alpha })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.states[c]
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// State vector at sample `k`.
    pub fn state_at(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[k]).collect()
    }

    /// The uniform grid the samples sit on, if they are equally spaced.
    pub fn grid(&self) -> Result<UniformGrid> {
        let n = self.times.len().saturating_sub(1);
        let a = self.times[0];
        let b = *self.times.last().expect("non-empty");
        let g = UniformGrid::new(a, b, n)?;
        let tol = 1e-9 * (b - a);
        if g.nodes().iter().zip(&self.times).any(|(p, q)| (p - q).abs() > tol) {
            return Err(Error::GridMismatch("trajectory samples are not equally spaced".into()));
        }
        Ok(g)
    }

    /// Quadratic interpolant of one component.
    pub fn spline(&self, c: usize) -> Result<QuadSpline> {
        build_spline(&self.grid()?, &self.states[c])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim()).map(|c| format!("x{c}")));
        wr.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![fmt_f64(self.times[k])];
            row.extend(self.states.iter().map(|s| fmt_f64(s[k])));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, alpha: f64) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        let m = header.len().checked_sub(1).filter(|m| *m > 0).ok_or_else(|| {
            Error::Parse("trajectory CSV needs a time column and at least one state column".into())
        })?;
        if &header[0] != "t" {
            return Err(Error::Parse(format!("first column must be `t`, found `{}`", &header[0])));
        }
        let mut times = Vec::new();
        let mut states = vec![Vec::new(); m];
        for rec in rd.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i].trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{}`: {e}", &rec[i])))
            };
            times.push(parse(0)?);
            for (c, s) in states.iter_mut().enumerate() {
                s.push(parse(c + 1)?);
            }
        }
        Self::new(times, states, alpha)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>, alpha: f64) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f), alpha)
    }
}
