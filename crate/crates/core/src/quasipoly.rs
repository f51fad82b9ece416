//! Hard-edge quasipolynomials w♯_{j,n} for radial potentials.
//!
//! In the radial case the exterior conformal map of S_τ is φ_τ(ζ) = ζ/ρ_τ,
//! Re 𝒬_τ is the constant q(ρ_τ), and Re ℋ_τ is the constant
//! log √ΔQ(ρ_τ) − log φ_{j,n} with φ_{j,n} = φ(ξ_{j,n} ℓ_τ). Substituting these
//! into |F_{j,n}|² e^{-nQ} gives
//!
//! ```text
//! |w♯|²(r) = χ₀(r)² √(n/2π) (1/ρ_τ) (√ΔQ(ρ_τ)/φ_{j,n}) e^{-n (Q − V_τ)(r)},  r ≤ ρ₁,
//! ```
//!
//! and 0 beyond the hard wall. The 1/√2π normalization makes the Gaussian
//! factor across Γ_τ integrate to φ(ξ ℓ) before the 1/φ_{j,n} correction.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::bracketed_newton;
use crate::orthopoly::KernelTable;
use crate::potential::{DropletFamily, RADIUS_FLOOR};
use crate::special::{free_boundary_phi, gauss_gamma, integrate_with_breaks, QuadratureSpec, INV_SQRT_2PI};

/// χ₀ vanishes below (τ₀ − ε)ρ_τ and equals 1 above τ₀ρ_τ.
pub const CUTOFF_TAU0: f64 = 0.5;
pub const CUTOFF_EPS: f64 = 0.05;

/// Whether the 1/φ_{j,n} hard-edge correction is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeVariant {
    #[default]
    HardEdge,
    /// Drops the 1/φ_{j,n} factor, as for the free-boundary quasipolynomials.
    FreeBoundary,
}

/// δ_n = log n / √n.
pub fn delta_n(n: usize) -> f64 {
    let nf = n as f64;
    nf.ln() / nf.sqrt()
}

/// First degree ⌈n − √n log n⌉ of the edge window.
pub fn window_start(n: usize) -> usize {
    let nf = n as f64;
    (nf - nf.sqrt() * nf.ln()).ceil().max(0.0) as usize
}

/// Per-degree scalars of w♯_{j,n}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiParams {
    pub j: usize,
    pub n: usize,
    pub tau: f64,
    pub rho_tau: f64,
    pub delta_q: f64,
    /// ξ_{j,n} = (j − n)/√n
    pub xi: f64,
    pub ell: f64,
    /// φ(ξ ℓ_τ)
    pub phi_jn: f64,
    pub t_inf: f64,
    pub r_k: f64,
    pub r_x: f64,
}

impl QuasiParams {
    /// Parameters for ⌈n − √n log n⌉ ≤ j < n.
    pub fn new(fam: &DropletFamily, j: usize, n: usize) -> Result<Self> {
        if n < 2 || j >= n || j < window_start(n) || j == 0 {
            return Err(Error::Domain(format!(
                "degree {j} outside the edge window [{}, {n}) for n = {n}",
                window_start(n)
            )));
        }
        let nf = n as f64;
        let tau = j as f64 / nf;
        let g = fam.boundary_geometry(tau)?;
        let xi = (j as f64 - nf) / nf.sqrt();
        Ok(Self {
            j,
            n,
            tau,
            rho_tau: g.rho_tau,
            delta_q: g.delta_q_boundary,
            xi,
            ell: g.ell_tau,
            phi_jn: free_boundary_phi(xi * g.ell_tau),
            t_inf: stopping_time_tau(fam, tau)?,
            r_k: (CUTOFF_TAU0 - CUTOFF_EPS) * g.rho_tau,
            r_x: CUTOFF_TAU0 * g.rho_tau,
        })
    }

    /// Degree closest to n + ξ√n inside the window.
    pub fn at_xi(fam: &DropletFamily, n: usize, xi: f64) -> Result<Self> {
        let nf = n as f64;
        let j = (nf + xi * nf.sqrt()).round().clamp(window_start(n) as f64, nf - 1.0) as usize;
        Self::new(fam, j, n)
    }

    /// Smooth radial cutoff χ₀ (C² smoothstep between r_K and r_X).
    pub fn chi0(&self, r: f64) -> f64 {
        let s = ((r - self.r_k) / (self.r_x - self.r_k)).clamp(0.0, 1.0);
        s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }

    /// Panel breaks concentrating quadrature near Γ_τ.
    fn breaks(&self) -> Vec<f64> {
        let sigma = 1.0 / (self.n as f64 * self.delta_q).sqrt();
        let mut b = vec![self.r_k, self.r_x, self.rho_tau];
        for m in 1..=10 {
            let d = 0.5 * sigma * m as f64;
            b.push(self.rho_tau - d);
            b.push(self.rho_tau + d);
        }
        b
    }
}

/// t_∞ = √((Q − V_τ)(ρ₁)) for τ ∈ (0, 1].
pub fn stopping_time_tau(fam: &DropletFamily, tau: f64) -> Result<f64> {
    if tau == 1.0 {
        return Ok(0.0);
    }
    Ok(fam.obstacle_gap(tau, fam.rho1())?.max(0.0).sqrt())
}

/// Radial stopping time for degree j of n (j = n allowed, giving 0).
pub fn stopping_time(fam: &DropletFamily, j: usize, n: usize) -> Result<f64> {
    if j == 0 || j > n {
        return Err(Error::Domain(format!("stopping time needs 0 < j <= n, got j = {j}, n = {n}")));
    }
    stopping_time_tau(fam, j as f64 / n as f64)
}

/// Radius of the level curve Γ_{τ,t}: (Q − V_τ)(r) = t², outside Γ_τ for
/// t > 0 and inside for t < 0.
pub fn flow_radius(fam: &DropletFamily, tau: f64, t: f64) -> Result<f64> {
    let rho = fam.droplet_radius(tau)?;
    if t == 0.0 {
        return Ok(rho);
    }
    let t2 = t * t;
    let f = |r: f64| (fam.gap_with_radius(tau, rho, r) - t2, fam.gap_slope(tau, r));
    let (lo, hi) = if t > 0.0 {
        (rho, fam.potential().r_max())
    } else {
        (RADIUS_FLOOR, rho)
    };
    bracketed_newton(f, lo, hi, 1e-15, "flow radius")
}

/// |w♯_{j,n}|²(r).
pub fn quasi_w_sq(fam: &DropletFamily, p: &QuasiParams, r: f64, variant: EdgeVariant) -> f64 {
    if r > fam.rho1() || r <= p.r_k {
        return 0.0;
    }
    let nf = p.n as f64;
    let chi = p.chi0(r);
    let edge = match variant {
        EdgeVariant::HardEdge => 1.0 / p.phi_jn,
        EdgeVariant::FreeBoundary => 1.0,
    };
    let gap = fam.gap_with_radius(p.tau, p.rho_tau, r);
    chi * chi * (nf.sqrt() * INV_SQRT_2PI) * p.delta_q.sqrt() / p.rho_tau * edge * (-nf * gap).exp()
}

/// ‖w♯_{j,n}‖₂ by radial quadrature over [r_K, ρ₁].
pub fn quasi_norm(fam: &DropletFamily, p: &QuasiParams, variant: EdgeVariant, spec: &QuadratureSpec) -> Result<f64> {
    let v = integrate_with_breaks(
        |r| quasi_w_sq(fam, p, r, variant) * 2.0 * r,
        p.r_k,
        fam.rho1(),
        &p.breaks(),
        spec,
    )?;
    Ok(v.sqrt())
}

/// ⟨w_{k,n}, w♯_{j,n}⟩. Distinct degrees are orthogonal under the angular
/// integral, so only k = j gives a non-zero (real, positive) value.
pub fn approx_orthogonality(tab: &KernelTable, p: &QuasiParams, k: usize) -> Result<f64> {
    if k >= tab.n() || tab.n() != p.n {
        return Err(Error::InvalidArgument(format!("degree {k} or table size {} does not match n = {}", tab.n(), p.n)));
    }
    if k != p.j {
        return Ok(0.0);
    }
    let fam = tab.family();
    integrate_with_breaks(
        |r| {
            let a = tab.log_weighted_poly_sq(k, r);
            let b = quasi_w_sq(fam, p, r, EdgeVariant::HardEdge);
            if b == 0.0 {
                0.0
            } else {
                (0.5 * a + 0.5 * b.ln()).exp() * 2.0 * r
            }
        },
        p.r_k,
        fam.rho1(),
        &p.breaks(),
        tab.quadrature(),
    )
}

/// ‖w_{j,n} − w♯_{j,n}‖₂ with both taken positive on the positive real axis.
pub fn quasi_l2_distance(tab: &KernelTable, p: &QuasiParams, variant: EdgeVariant) -> Result<f64> {
    if tab.n() != p.n {
        return Err(Error::InvalidArgument(format!("table has n = {}, params n = {}", tab.n(), p.n)));
    }
    let fam = tab.family();
    let v = integrate_with_breaks(
        |r| {
            let a = tab.weighted_poly_sq(p.j, r).sqrt();
            let b = quasi_w_sq(fam, p, r, variant).sqrt();
            (a - b).powi(2) * 2.0 * r
        },
        0.0,
        fam.rho1(),
        &p.breaks(),
        tab.quadrature(),
    )?;
    Ok(v.sqrt())
}

/// Precomputed parameters for all degrees of the edge window.
#[derive(Debug, Clone)]
pub struct QuasiTable {
    fam: DropletFamily,
    n: usize,
    params: Vec<QuasiParams>,
}

impl QuasiTable {
    pub fn new(fam: &DropletFamily, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("need n >= 2".into()));
        }
        let params = (window_start(n).max(1)..n)
            .into_par_iter()
            .map(|j| QuasiParams::new(fam, j, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            fam: fam.clone(),
            n,
            params,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &[QuasiParams] {
        &self.params
    }

    /// R_n^♯(r) = Σ_{j in window} |w♯_{j,n}|²(r).
    pub fn approx_one_point(&self, r: f64) -> f64 {
        self.params
            .iter()
            .map(|p| quasi_w_sq(&self.fam, p, r, EdgeVariant::HardEdge))
            .sum()
    }
}

/// R_n^♯(r), building the window parameters on the fly.
pub fn approx_one_point(fam: &DropletFamily, n: usize, r: f64) -> Result<f64> {
    Ok(QuasiTable::new(fam, n)?.approx_one_point(r))
}

/// Σ_k (ℓ₁/√n) γ(2x + kℓ₁/√n)/φ(−kℓ₁/√n) over the same window of degrees
/// (k = n − j); tends to H(2x).
pub fn riemann_sum(fam: &DropletFamily, n: usize, x: f64) -> f64 {
    let nf = n as f64;
    let ell = 1.0 / (fam.rho1() * fam.delta_q_edge().sqrt());
    let h = ell / nf.sqrt();
    (1..=n - window_start(n).max(1))
        .map(|k| {
            let s = k as f64 * h;
            h * gauss_gamma(2.0 * x + s) / free_boundary_phi(-s)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::RadialPotential;

    fn ginibre() -> DropletFamily {
        DropletFamily::ginibre()
    }

    #[test]
    fn stopping_time_examples() {
        let g = ginibre();
        assert_eq!(stopping_time(&g, 10, 10).unwrap(), 0.0);
        let t = stopping_time_tau(&g, 0.9).unwrap();
        let exact = (1.0f64 - 0.9 + 0.9 * 0.9f64.ln()).sqrt();
        assert!((t - exact).abs() < 1e-14);
        assert!((t - 0.071_941).abs() < 1e-6);
        for tau in [0.95, 0.99, 0.999] {
            let e = 1.0 - tau;
            let t = stopping_time_tau(&g, tau).unwrap();
            assert!(((t - e / 2f64.sqrt()) / (e * e)).abs() < 0.5, "tau={tau}");
        }
    }

    #[test]
    fn flow_radius_examples() {
        let g = ginibre();
        assert!((flow_radius(&g, 0.95, 0.0).unwrap() - 0.95f64.sqrt()).abs() < 1e-15);
        let t = stopping_time_tau(&g, 0.95).unwrap();
        assert!((flow_radius(&g, 0.95, t).unwrap() - 1.0).abs() < 1e-12);
        let radii: Vec<f64> = (-5..=5).map(|i| flow_radius(&g, 0.95, 0.01 * i as f64).unwrap()).collect();
        assert!(radii.windows(2).all(|w| w[1] > w[0]));
        assert!(matches!(flow_radius(&g, 0.95, 10.0), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn params_regime() {
        let g = ginibre();
        assert!(QuasiParams::new(&g, 100, 100).is_err());
        assert!(QuasiParams::new(&g, 10, 100).is_err());
        let p = QuasiParams::new(&g, 90, 100).unwrap();
        assert!(p.xi < 0.0 && p.phi_jn > 0.5 && p.phi_jn < 1.0);
        assert!(0.0 < p.r_k && p.r_k < p.r_x && p.r_x < p.rho_tau);
        assert_eq!(window_start(1024), 803);
    }

    #[test]
    fn on_curve_value_and_wall() {
        let g = ginibre();
        let p = QuasiParams::new(&g, 1016, 1024).unwrap();
        assert_eq!(quasi_w_sq(&g, &p, 1.0 + 1e-9, EdgeVariant::HardEdge), 0.0);
        let want = (1024.0 / (2.0 * std::f64::consts::PI)).sqrt() / (p.rho_tau * p.phi_jn);
        let got = quasi_w_sq(&g, &p, p.rho_tau, EdgeVariant::HardEdge);
        assert!((got / want - 1.0).abs() < 1e-14);
        assert_eq!(p.chi0(p.r_k), 0.0);
        assert_eq!(p.chi0(p.r_x), 1.0);
    }

    #[test]
    fn norm_near_one() {
        let g = ginibre();
        let spec = QuadratureSpec::default();
        let p = QuasiParams::new(&g, 1016, 1024).unwrap();
        let norm = quasi_norm(&g, &p, EdgeVariant::HardEdge, &spec).unwrap();
        assert!((norm * norm - 1.0).abs() < 3.0 / 32.0, "{norm}");
        let free = quasi_norm(&g, &p, EdgeVariant::FreeBoundary, &spec).unwrap();
        assert!((free / norm - p.phi_jn.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn orthogonality_and_distance() {
        let g = ginibre();
        let tab = KernelTable::build(&g, 256, &QuadratureSpec::default()).unwrap();
        let p = QuasiParams::new(&g, 240, 256).unwrap();
        assert_eq!(approx_orthogonality(&tab, &p, 239).unwrap(), 0.0);
        let ip = approx_orthogonality(&tab, &p, 240).unwrap();
        assert!(ip > 0.9 && ip <= 1.0 + 1e-9, "{ip}");
        let hard = quasi_l2_distance(&tab, &p, EdgeVariant::HardEdge).unwrap();
        let free = quasi_l2_distance(&tab, &p, EdgeVariant::FreeBoundary).unwrap();
        assert!(hard < free, "{hard} vs {free}");
        assert!(hard * 16.0 < 3.0);
    }

    #[test]
    fn approx_one_point_support() {
        let g = ginibre();
        let t = QuasiTable::new(&g, 256).unwrap();
        assert_eq!(t.approx_one_point(1.01), 0.0);
        assert!(t.approx_one_point(0.3) < 1e-12);
        assert!(t.approx_one_point(1.0) > 0.0);
    }

    #[test]
    fn quartic_params_exist() {
        let fam = DropletFamily::with_default_tau0(RadialPotential::power(2.0).unwrap()).unwrap();
        let p = QuasiParams::at_xi(&fam, 256, -1.0).unwrap();
        assert_eq!(p.j, 240);
        assert!(stopping_time(&fam, p.j, 256).unwrap() > 0.0);
    }
}
