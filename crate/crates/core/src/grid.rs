//! Uniform discretisation of a real parameter axis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of steps a grid must span.
pub const MIN_STEPS: f64 = 10.0;

/// Evenly spaced points `lo, lo + step, ...` up to and including `hi` when it
/// falls on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct ParamGrid {
    lo: f64,
    hi: f64,
    step: f64,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    lo: f64,
    hi: f64,
    step: f64,
}

impl TryFrom<GridSpec> for ParamGrid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        ParamGrid::new(s.lo, s.hi, s.step)
    }
}

impl From<ParamGrid> for GridSpec {
    fn from(g: ParamGrid) -> Self {
        GridSpec {
            lo: g.lo,
            hi: g.hi,
            step: g.step,
        }
    }
}

impl ParamGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(Error::invalid("grid bounds and step must be finite"));
        }
        if !(step > 0.0) {
            return Err(Error::invalid(format!("grid step must be > 0, got {step}")));
        }
        if !(lo < hi) {
            return Err(Error::invalid(format!("grid needs lo < hi, got {lo} .. {hi}")));
        }
        let span = (hi - lo) / step;
        if span < MIN_STEPS {
            return Err(Error::invalid(format!(
                "grid spans only {span:.3} steps; at least {MIN_STEPS} are required"
            )));
        }
        // Absorb representation error so that e.g. -0.21:0.247:0.0005 ends at 0.247.
        let steps = (span + 1e-9).floor() as usize;
        Ok(Self {
            lo,
            hi,
            step,
            len: steps + 1,
        })
    }

    /// The grid used by the worked examples: -0.21 to 0.247 in steps of 0.0005.
    pub fn default_theta() -> Self {
        Self::new(-0.21, 0.247, 5e-4).expect("default grid is valid")
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }
    pub fn hi(&self) -> f64 {
        self.hi
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Largest point actually on the lattice (≤ `hi`).
    pub fn last(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.last()
    }

    /// Index of the cell `[point(i), point(i+1)]` containing `x` and the
    /// fractional position inside it. `None` outside the grid.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !self.contains(x) {
            return None;
        }
        let pos = (x - self.lo) / self.step;
        let i = (pos.floor() as usize).min(self.len - 2);
        let frac = (x - self.point(i)) / self.step;
        Some((i, frac.clamp(0.0, 1.0)))
    }

    /// Index of the grid point nearest to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let pos = ((x - self.lo) / self.step).round();
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.len - 1)
        }
    }

    /// A grid over the same span with the step divided by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("refinement factor must be >= 1"));
        }
        Self::new(self.lo, self.last(), self.step / factor as f64)
    }

    /// True when both grids generate identical points.
    pub fn same_as(&self, other: &ParamGrid) -> bool {
        self.len == other.len && self.lo == other.lo && self.step == other.step
    }
}

impl fmt::Display for ParamGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{:?}", self.lo, self.hi, self.step)
    }
}

impl FromStr for ParamGrid {
    type Err = Error;

    /// Parses `lo:hi:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!("grid must be lo:hi:step, got '{s}'")));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("grid component '{t}' is not a number")))
        };
        Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_ends_on_hi() {
        let g = ParamGrid::default_theta();
        assert_eq!(g.len(), 915);
        assert!((g.last() - 0.247).abs() < 1e-12);
    }

    #[test]
    fn parse_and_display_round_trip() {
        let g: ParamGrid = "-0.21:0.247:0.0005".parse().unwrap();
        let again: ParamGrid = g.to_string().parse().unwrap();
        assert_eq!(g, again);
        assert!("1:0:0.1".parse::<ParamGrid>().is_err());
        assert!("0:1:0.5".parse::<ParamGrid>().is_err());
        assert!("0:1".parse::<ParamGrid>().is_err());
    }

    #[test]
    fn locate_interpolation_cell() {
        let g = ParamGrid::new(0.0, 1.0, 0.1).unwrap();
        let (i, f) = g.locate(0.25).unwrap();
        assert_eq!(i, 2);
        assert!((f - 0.5).abs() < 1e-9);
        let (i, f) = g.locate(1.0).unwrap();
        assert_eq!(i, 9);
        assert!((f - 1.0).abs() < 1e-9);
        assert!(g.locate(1.01).is_none());
    }

    #[test]
    fn serde_validates() {
        let g: ParamGrid = serde_json::from_str(r#"{"lo":-0.5,"hi":0.5,"step":0.001}"#).unwrap();
        assert_eq!(g.len(), 1001);
        assert!(serde_json::from_str::<ParamGrid>(r#"{"lo":0.5,"hi":-0.5,"step":0.001}"#).is_err());
    }
}
