//! Edge rescaling ζ = ρ₁ + x/√(nΔQ(ρ₁)) and comparison with the limit H(2x)·1_{x<0}.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::KernelTable;
use crate::potential::DropletFamily;
use crate::profile::{csv_err, fmt17, uniform_grid, Profile, ProfileKind, ProfileMeta};
use crate::quasipoly::{window_start, QuasiTable};
use crate::special::{hard_edge_H, QuadratureSpec};

/// Default comparison window in rescaled units.
pub const DEFAULT_WINDOW: (f64, f64) = (-3.0, -0.5);

/// Affine map from rescaled coordinate x to radius ρ₁ + x/√(nΔQ(ρ₁)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleMap {
    pub n: usize,
    pub base_radius: f64,
    pub factor: f64,
}

impl RescaleMap {
    pub fn new(fam: &DropletFamily, n: usize) -> Self {
        Self {
            n,
            base_radius: fam.rho1(),
            factor: (n as f64 * fam.delta_q_edge()).sqrt(),
        }
    }

    pub fn radius(&self, x: f64) -> f64 {
        self.base_radius + x / self.factor
    }

    /// 1/(nΔQ(ρ₁)), the intensity scale.
    pub fn intensity_scale(&self) -> f64 {
        1.0 / (self.factor * self.factor)
    }

    fn check(&self, grid: &[f64]) -> Result<()> {
        match grid.iter().find(|&&x| !(self.radius(x) >= 0.0)) {
            Some(x) => Err(Error::InvalidArgument(format!("rescaled point {x} maps to a negative radius"))),
            None => Ok(()),
        }
    }

    fn profile<F>(&self, grid: &[f64], kind: ProfileKind, potential: String, f: F) -> Result<Profile>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        self.check(grid)?;
        let s = self.intensity_scale();
        let values: Vec<f64> = grid
            .par_iter()
            .map(|&x| if x > 0.0 { 0.0 } else { f(self.radius(x)) * s })
            .collect();
        let meta = ProfileMeta {
            n: Some(self.n),
            potential: Some(potential),
            rescale_factor: Some(self.factor),
            label: None,
        };
        Profile::new(grid.to_vec(), values, kind, meta)
    }
}

/// Rescaled exact 1-point function R_n(x).
pub fn rescaled_profile(tab: &KernelTable, grid: &[f64]) -> Result<Profile> {
    let map = RescaleMap::new(tab.family(), tab.n());
    map.profile(grid, ProfileKind::ExactKernel, tab.family().potential().id(), |r| tab.one_point(r))
}

/// Rescaled sum of the top `m` terms of R_n.
pub fn rescaled_truncated_profile(tab: &KernelTable, grid: &[f64], m: usize) -> Result<Profile> {
    tab.truncated_one_point(tab.family().rho1(), m)?;
    let map = RescaleMap::new(tab.family(), tab.n());
    map.profile(grid, ProfileKind::TruncatedKernel, tab.family().potential().id(), |r| {
        tab.truncated_one_point(r, m).unwrap_or(0.0)
    })
}

/// Rescaled R_n^♯.
pub fn rescaled_quasi_profile(fam: &DropletFamily, qt: &QuasiTable, grid: &[f64]) -> Result<Profile> {
    let map = RescaleMap::new(fam, qt.n());
    map.profile(grid, ProfileKind::Quasi, fam.potential().id(), |r| qt.approx_one_point(r))
}

/// Rescaled |w_{j,n}|².
pub fn rescaled_poly_profile(tab: &KernelTable, j: usize, grid: &[f64]) -> Result<Profile> {
    if j >= tab.n() {
        return Err(Error::InvalidArgument(format!("degree {j} >= n = {}", tab.n())));
    }
    let map = RescaleMap::new(tab.family(), tab.n());
    let mut p = map.profile(grid, ProfileKind::ExactKernel, tab.family().potential().id(), |r| {
        tab.weighted_poly_sq(j, r)
    })?;
    p.meta.label = Some(format!("w_{j}"));
    Ok(p)
}

/// H(2x) for x < 0 and 0 for x ≥ 0.
pub fn limit_profile(grid: &[f64], spec: &QuadratureSpec) -> Result<Profile> {
    let values = grid
        .par_iter()
        .map(|&x| if x < 0.0 { hard_edge_H(2.0 * x, spec) } else { Ok(0.0) })
        .collect::<Result<Vec<_>>>()?;
    Profile::new(grid.to_vec(), values, ProfileKind::LimitH, ProfileMeta::default())
}

/// Rescaled truncated exact profile and rescaled R_n^♯, both summed over the
/// degrees ⌈n − √n log n⌉..n−1.
pub fn sharp_vs_exact(tab: &KernelTable, grid: &[f64]) -> Result<(Profile, Profile)> {
    let m = tab.n() - window_start(tab.n()).max(1);
    let exact = rescaled_truncated_profile(tab, grid, m)?;
    let qt = QuasiTable::new(tab.family(), tab.n())?;
    let sharp = rescaled_quasi_profile(tab.family(), &qt, grid)?;
    Ok((exact, sharp))
}

/// Least-squares slope of log(err) against log(n).
pub fn fit_log_slope(n_values: &[usize], errors: &[f64]) -> Result<f64> {
    if n_values.len() != errors.len() || n_values.len() < 2 || errors.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("slope fit needs >= 2 positive errors".into()));
    }
    let xs: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Sup errors of rescaled R_n against H(2x) over a window, per n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub potential: String,
    pub n_values: Vec<usize>,
    pub sup_errors: Vec<f64>,
    pub window: [f64; 2],
    pub grid_step: f64,
    pub rate_estimate: f64,
}

impl ConvergenceReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "error"]).map_err(csv_err)?;
        for (n, e) in self.n_values.iter().zip(&self.sup_errors) {
            w.write_record([n.to_string(), fmt17(*e)]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.sup_errors.windows(2).all(|w| w[1] < w[0])
    }
}

/// Sup over the window of |R_n − H(2x)| for one table.
pub fn window_error(tab: &KernelTable, limit: &Profile) -> Result<f64> {
    let exact = rescaled_profile(tab, &limit.grid)?;
    Ok(exact
        .values
        .iter()
        .zip(&limit.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn check_window(window: (f64, f64), grid_step: f64) -> Result<Vec<f64>> {
    if !(window.0 < window.1) || window.0 < -4.0 || window.1 > -0.25 {
        return Err(Error::InvalidArgument(format!("window {window:?} must lie inside [-4, -0.25]")));
    }
    uniform_grid(window.0, window.1, grid_step)
}

/// Convergence report from prebuilt tables (ascending n, one potential).
pub fn convergence_from_tables(
    tables: &[KernelTable],
    window: (f64, f64),
    grid_step: f64,
    spec: &QuadratureSpec,
) -> Result<ConvergenceReport> {
    let grid = check_window(window, grid_step)?;
    if tables.is_empty() || tables.windows(2).any(|t| t[1].n() <= t[0].n()) {
        return Err(Error::InvalidArgument("tables must have strictly increasing n".into()));
    }
    let limit = limit_profile(&grid, spec)?;
    let errors = tables
        .iter()
        .map(|t| window_error(t, &limit))
        .collect::<Result<Vec<_>>>()?;
    let n_values: Vec<usize> = tables.iter().map(KernelTable::n).collect();
    let rate = if n_values.len() >= 2 { fit_log_slope(&n_values, &errors)? } else { f64::NAN };
    let report = ConvergenceReport {
        potential: tables[0].family().potential().id(),
        n_values,
        sup_errors: errors,
        window: [window.0, window.1],
        grid_step,
        rate_estimate: rate,
    };
    if !report.is_strictly_decreasing() {
        return Err(Error::NonMonotone {
            errors: report.sup_errors,
        });
    }
    Ok(report)
}

/// Builds kernel tables for each n and runs [`convergence_from_tables`].
pub fn convergence_study(
    fam: &DropletFamily,
    n_values: &[usize],
    window: (f64, f64),
    grid_step: f64,
    spec: &QuadratureSpec,
) -> Result<ConvergenceReport> {
    check_window(window, grid_step)?;
    let tables = n_values
        .iter()
        .map(|&n| KernelTable::build(fam, n, spec))
        .collect::<Result<Vec<_>>>()?;
    convergence_from_tables(&tables, window, grid_step, spec)
}
