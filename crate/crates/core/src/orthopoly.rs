//! Weighted orthonormal polynomials for the hard-edge weight e^{-n Q^S}.
//!
//! For a radial weight supported on the disk of radius ρ₁ the monomials ζ^j
//! are mutually orthogonal, so p_{j,n}(ζ) = ζ^j / √h_j with
//!
//! ```text
//! h_j = ∫_0^{ρ₁} r^{2j} e^{-n q(r)} 2r dr.
//! ```
//!
//! Everything is kept in log-domain: the exponent E_j(r) = 2j log r − n q(r)
//! is recentred at its maximum before quadrature, and kernel sums are
//! accumulated with a pivoted log-sum-exp.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect, LogSumExp};
use crate::potential::DropletFamily;
use crate::special::{integrate_with_breaks, QuadratureSpec};

/// Integrand cut-off relative to the peak, in log units.
const LOG_WINDOW: f64 = 45.0;

/// Log-norms of the weighted monomials for one ensemble size.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    n: usize,
    log_h: Vec<f64>,
    fam: DropletFamily,
    quad: QuadratureSpec,
}

/// Serialized form of a [`KernelTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCache {
    pub potential: String,
    pub n: usize,
    pub quad_hash: String,
    pub log_h: Vec<f64>,
}

impl KernelTable {
    /// Computes log h_j for j = 0..n−1 (in parallel over j).
    pub fn build(fam: &DropletFamily, n: usize, quad: &QuadratureSpec) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("ensemble size must be at least 1".into()));
        }
        quad.validate()?;
        let log_h = (0..n)
            .into_par_iter()
            .map(|j| log_norm(fam, n, j, quad))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            log_h,
            fam: fam.clone(),
            quad: *quad,
        })
    }

    /// Wraps precomputed log-norms.
    pub fn from_log_norms(fam: &DropletFamily, log_h: Vec<f64>, quad: &QuadratureSpec) -> Result<Self> {
        if log_h.is_empty() || log_h.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("log-norms must be finite and non-empty".into()));
        }
        Ok(Self {
            n: log_h.len(),
            log_h,
            fam: fam.clone(),
            quad: *quad,
        })
    }

    pub fn cache_key(fam: &DropletFamily, n: usize, quad: &QuadratureSpec) -> String {
        format!("{}_n{}_{}", fam.potential().id(), n, quad.hash_hex())
    }

    pub fn to_cache(&self) -> KernelCache {
        KernelCache {
            potential: self.fam.potential().id(),
            n: self.n,
            quad_hash: self.quad.hash_hex(),
            log_h: self.log_h.clone(),
        }
    }

    /// Restores a table from its cache, checking that the key matches.
    pub fn from_cache(fam: &DropletFamily, quad: &QuadratureSpec, cache: KernelCache) -> Result<Self> {
        if cache.potential != fam.potential().id() || cache.quad_hash != quad.hash_hex() || cache.n != cache.log_h.len() {
            return Err(Error::Format("kernel cache does not match the requested table".into()));
        }
        Self::from_log_norms(fam, cache.log_h, quad)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_norms(&self) -> &[f64] {
        &self.log_h
    }

    pub fn family(&self) -> &DropletFamily {
        &self.fam
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    fn n_q(&self, r: f64) -> f64 {
        self.n as f64 * self.fam.potential().q(r)
    }

    /// log |w_{j,n}(r)|², `-inf` outside the droplet.
    pub fn log_weighted_poly_sq(&self, j: usize, r: f64) -> f64 {
        assert!(j < self.n, "degree {j} out of range for n = {}", self.n);
        if r > self.fam.rho1() || r < 0.0 {
            return f64::NEG_INFINITY;
        }
        let lr = if j == 0 { 0.0 } else { 2.0 * j as f64 * r.ln() };
        lr - self.n_q(r) - self.log_h[j]
    }

    /// |w_{j,n}(r)|² = r^{2j} e^{-n q(r)} / h_j on the droplet, 0 beyond ρ₁.
    pub fn weighted_poly_sq(&self, j: usize, r: f64) -> f64 {
        self.log_weighted_poly_sq(j, r).exp()
    }

    /// Maximum over r of |w_{j,n}(r)|² (attained at min(ρ_{j/n}, ρ₁)).
    pub fn peak_weighted_poly_sq(&self, j: usize) -> Result<f64> {
        let r = if j == 0 { 0.0 } else { self.fam.droplet_radius(j as f64 / self.n as f64)? };
        Ok(self.weighted_poly_sq(j, r.min(self.fam.rho1())))
    }

    fn log_partial_sum(&self, r: f64, from: usize) -> f64 {
        if r > self.fam.rho1() || r < 0.0 {
            return f64::NEG_INFINITY;
        }
        let nq = self.n_q(r);
        if r == 0.0 {
            return if from == 0 { -nq - self.log_h[0] } else { f64::NEG_INFINITY };
        }
        let two_lr = 2.0 * r.ln();
        let acc: LogSumExp = (from..self.n)
            .map(|j| two_lr * j as f64 - self.log_h[j])
            .collect();
        acc.log_sum() - nq
    }

    /// 1-point function R_n(r) = Σ_j |w_{j,n}(r)|².
    pub fn one_point(&self, r: f64) -> f64 {
        self.log_partial_sum(r, 0).exp()
    }

    /// Σ_{j=n−m}^{n−1} |w_{j,n}(r)|², the top `m` terms of the 1-point sum.
    pub fn truncated_one_point(&self, r: f64, m: usize) -> Result<f64> {
        if m == 0 || m > self.n {
            return Err(Error::InvalidArgument(format!("need 1 <= m <= {}, got {m}", self.n)));
        }
        Ok(self.log_partial_sum(r, self.n - m).exp())
    }

    /// Correlation kernel K_n(ζ, η) = Σ_j (ζη̄)^j e^{-n(q(|ζ|)+q(|η|))/2} / h_j,
    /// zero when either point lies outside the droplet.
    pub fn kernel(&self, z: Complex64, w: Complex64) -> Complex64 {
        let rho1 = self.fam.rho1();
        let (rz, rw) = (z.norm(), w.norm());
        if rz > rho1 || rw > rho1 {
            return Complex64::new(0.0, 0.0);
        }
        let weight = -0.5 * (self.n_q(rz) + self.n_q(rw));
        let prod = z * w.conj();
        if prod == Complex64::new(0.0, 0.0) {
            return Complex64::new((weight - self.log_h[0]).exp(), 0.0);
        }
        let (lm, th) = (prod.norm().ln(), prod.arg());
        let logs: Vec<f64> = (0..self.n).map(|j| j as f64 * lm - self.log_h[j]).collect();
        let pivot = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = Complex64::new(0.0, 0.0);
        for (j, a) in logs.iter().enumerate() {
            s += Complex64::from_polar((a - pivot).exp(), j as f64 * th);
        }
        s * (pivot + weight).exp()
    }

    /// Half-width c/√(n ΔQ(ρ₁)) of the boundary belt.
    pub fn belt_half_width(&self, c: f64) -> f64 {
        c / (self.n as f64 * self.fam.delta_q_edge()).sqrt()
    }

    /// ∫_S R_n dA by radial quadrature (equals n for an exact table).
    pub fn trace(&self) -> Result<f64> {
        let rho1 = self.fam.rho1();
        let breaks: Vec<f64> = (1..=12).map(|k| rho1 - self.belt_half_width(k as f64)).collect();
        integrate_with_breaks(|r| self.one_point(r) * 2.0 * r, 0.0, rho1, &breaks, &self.quad)
    }

    /// ∫_S |w_{j,n}|² dA by radial quadrature.
    pub fn poly_norm_sq(&self, j: usize) -> Result<f64> {
        let (lo, peak, hi) = window(&self.fam, self.n, j)?;
        integrate_with_breaks(|r| self.weighted_poly_sq(j, r) * 2.0 * r, lo, hi, &[peak], &self.quad)
    }
}

fn exponent(fam: &DropletFamily, n: usize, j: usize, r: f64) -> f64 {
    let nq = n as f64 * fam.potential().q(r);
    if j == 0 {
        -nq
    } else if r == 0.0 {
        f64::NEG_INFINITY
    } else {
        2.0 * j as f64 * r.ln() - nq
    }
}

/// `(lo, peak, hi)`: the sub-interval of [0, ρ₁] where E_j is within
/// `LOG_WINDOW` of its maximum, and the maximizer.
fn window(fam: &DropletFamily, n: usize, j: usize) -> Result<(f64, f64, f64)> {
    let rho1 = fam.rho1();
    let peak = if j == 0 { 0.0 } else { fam.droplet_radius(j as f64 / n as f64)?.min(rho1) };
    let top = exponent(fam, n, j, peak);
    let below = |r: f64| exponent(fam, n, j, r) - top + LOG_WINDOW;
    let tol = 1e-13 * rho1;
    let lo = if peak == 0.0 || below(0.0) >= 0.0 {
        0.0
    } else {
        bisect(below, 0.0, peak, tol, "lower window edge")?
    };
    let hi = if below(rho1) >= 0.0 {
        rho1
    } else {
        bisect(below, peak, rho1, tol, "upper window edge")?
    };
    Ok((lo, peak, hi))
}

/// log h_j by Laplace-recentred quadrature.
fn log_norm(fam: &DropletFamily, n: usize, j: usize, quad: &QuadratureSpec) -> Result<f64> {
    let (lo, peak, hi) = window(fam, n, j)?;
    let top = exponent(fam, n, j, peak);
    let integral = integrate_with_breaks(
        |r| r * (exponent(fam, n, j, r) - top).exp(),
        lo,
        hi,
        &[peak],
        quad,
    )?;
    Ok(top + integral.ln() + std::f64::consts::LN_2)
}
