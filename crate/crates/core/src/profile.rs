//! Sampled 1D intensity profiles and their CSV form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance of a profile's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    ExactKernel,
    TruncatedKernel,
    Quasi,
    Mcmc,
    LimitH,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub n: Option<usize>,
    pub potential: Option<String>,
    pub rescale_factor: Option<f64>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: ProfileKind,
    pub meta: ProfileMeta,
}

impl Profile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, kind: ProfileKind, meta: ProfileMeta) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidArgument("profile grid and values differ in length".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("profile grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("profile values must be non-negative".into()));
        }
        Ok(Self {
            grid,
            values,
            kind,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// sup |self − other| over grid points with `lo <= x <= hi`.
    pub fn sup_diff_on(&self, other: &Profile, lo: f64, hi: f64) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("profiles live on different grids".into()));
        }
        Ok(self
            .grid
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Writes `x,value` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value"]).map_err(csv_err)?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            w.write_record([fmt17(*x), fmt17(*v)]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `lo, lo + step, ...` up to `hi` inclusive (within half a step).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let count = ((hi - lo) / step + 0.5).floor() as usize;
    Ok((0..=count).map(|i| lo + step * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let g = uniform_grid(-6.0, 4.0, 0.05).unwrap();
        assert_eq!(g.len(), 201);
        assert!((g[200] - 4.0).abs() < 1e-12);
        assert!(uniform_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = Profile::new(vec![0.0, 1.0], vec![0.5, 0.25], ProfileKind::LimitH, ProfileMeta::default()).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "x,value");
        assert_eq!(lines[1], "0.0000000000000000e0,5.0000000000000000e-1");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn rejects_negative_values() {
        let r = Profile::new(vec![0.0], vec![-1.0], ProfileKind::Mcmc, ProfileMeta::default());
        assert!(r.is_err());
    }
}
