//! Radially symmetric external potentials Q(ζ) = q(|ζ|), their Laplacian
//! growth droplets S_τ, and the boundary geometry used near the outer edge.
//!
//! With Δ = ∂∂̄ and dA = dx dy/π, the equilibrium measure of a disk of radius
//! ρ is ∫_0^ρ ΔQ(r) 2r dr = ρ q′(ρ)/2. The droplet S_τ (mass τ) is therefore
//! the disk whose radius solves ρ q′(ρ) = 2τ. For such a disk the exterior
//! conformal map is ζ/ρ_τ, the obstacle continuation is
//! V_τ(ζ) = q(ρ_τ) + 2τ log(|ζ|/ρ_τ), and every boundary quantity reduces to a
//! scalar function of τ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bracketed_newton;
use crate::special::{integrate, QuadratureSpec};

/// Relative margin required by the growth check at `r_max`.
pub const GROWTH_MARGIN: f64 = 0.1;
/// Lower end of the root-finding bracket for droplet radii.
pub const RADIUS_FLOOR: f64 = 1e-8;
/// Angular nodes used by [`DropletFamily::richardson_check`].
const ANGULAR_NODES: usize = 64;

/// The radial profile q of Q(ζ) = q(|ζ|).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialKind {
    /// q(r) = r²
    Ginibre,
    /// q(r) = r^{2p}, p ≥ 1
    Power { p: f64 },
    /// q(r) = Σ_k c_k r^{2k}
    Custom { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    kind: PotentialKind,
    r_max: f64,
}

impl RadialPotential {
    pub fn new(kind: PotentialKind, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidPotential(format!("r_max must be positive, got {r_max}")));
        }
        match &kind {
            PotentialKind::Power { p } if !(*p >= 1.0 && p.is_finite()) => {
                return Err(Error::InvalidPotential(format!("power potential needs p >= 1, got {p}")));
            }
            PotentialKind::Custom { coeffs } if coeffs.iter().skip(1).all(|c| *c == 0.0) => {
                return Err(Error::InvalidPotential("custom potential has no r-dependence".into()));
            }
            PotentialKind::Custom { coeffs } if coeffs.iter().any(|c| !c.is_finite()) => {
                return Err(Error::InvalidPotential("custom coefficients must be finite".into()));
            }
            _ => {}
        }
        Ok(Self { kind, r_max })
    }

    pub fn ginibre() -> Self {
        Self {
            kind: PotentialKind::Ginibre,
            r_max: 4.0,
        }
    }

    /// q(r) = r^{2p}.
    pub fn power(p: f64) -> Result<Self> {
        Self::new(PotentialKind::Power { p }, 4.0)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Short identifier used in file names and cache keys.
    pub fn id(&self) -> String {
        match &self.kind {
            PotentialKind::Ginibre => "ginibre".into(),
            PotentialKind::Power { p } => format!("power{p}"),
            PotentialKind::Custom { coeffs } => {
                let c: Vec<String> = coeffs.iter().map(|c| format!("{c}")).collect();
                format!("custom[{}]", c.join(","))
            }
        }
    }

    pub fn q(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::Ginibre => r * r,
            PotentialKind::Power { p } => r.powf(2.0 * p),
            PotentialKind::Custom { coeffs } => {
                let s = r * r;
                coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
            }
        }
    }

    pub fn dq(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::Ginibre => 2.0 * r,
            PotentialKind::Power { p } => 2.0 * p * r.powf(2.0 * p - 1.0),
            PotentialKind::Custom { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| 2.0 * k as f64 * c * r.powi(2 * k as i32 - 1))
                .sum(),
        }
    }

    pub fn d2q(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::Ginibre => 2.0,
            PotentialKind::Power { p } => 2.0 * p * (2.0 * p - 1.0) * r.powf(2.0 * p - 2.0),
            PotentialKind::Custom { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| {
                    let k = k as f64;
                    2.0 * k * (2.0 * k - 1.0) * c * r.powi(2 * k as i32 - 2)
                })
                .sum(),
        }
    }

    /// ΔQ(r) = (q″(r) + q′(r)/r)/4, the equilibrium density.
    pub fn delta_q(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("ΔQ needs r > 0, got {r}")));
        }
        Ok(self.delta_q_unchecked(r))
    }

    #[inline]
    pub(crate) fn delta_q_unchecked(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::Ginibre => 1.0,
            PotentialKind::Power { p } => p * p * r.powf(2.0 * p - 2.0),
            PotentialKind::Custom { .. } => 0.25 * (self.d2q(r) + self.dq(r) / r),
        }
    }

    /// Radius where r q′(r) = 2τ, searched on `[lo, hi]`.
    fn mass_radius(&self, tau: f64, lo: f64, hi: f64) -> Result<f64> {
        bracketed_newton(
            |r| (r * self.dq(r) - 2.0 * tau, self.dq(r) + r * self.d2q(r)),
            lo,
            hi,
            1e-15,
            "r q'(r) - 2 tau",
        )
    }
}

/// The family of droplets S_τ, τ ∈ [τ₀, 1], of a radial potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropletFamily {
    potential: RadialPotential,
    tau0: f64,
    rho1: f64,
    /// (τ, ρ_τ) on a uniform τ grid, used to seed brackets.
    table: Vec<(f64, f64)>,
}

impl DropletFamily {
    pub const DEFAULT_TAU0: f64 = 0.5;

    /// Builds the family, rejecting potentials whose droplet is not a disk
    /// about the origin or that fail the growth condition at `r_max`.
    pub fn new(potential: RadialPotential, tau0: f64) -> Result<Self> {
        if !(tau0 > 0.0 && tau0 < 1.0) {
            return Err(Error::InvalidArgument(format!("tau0 must lie in (0, 1), got {tau0}")));
        }
        let rho1 = potential.mass_radius(1.0, RADIUS_FLOOR, potential.r_max)?;
        // disk droplet: q' >= 0 and ΔQ > 0 on (0, ρ₁]
        for i in 1..=400 {
            let r = rho1 * i as f64 / 400.0;
            if potential.dq(r) < 0.0 || !(potential.delta_q_unchecked(r) > 0.0) {
                return Err(Error::InvalidPotential(format!(
                    "{}: droplet is not a disk about 0 (fails at r = {r})",
                    potential.id()
                )));
            }
        }
        let rm = potential.r_max;
        if !(potential.q(rm) - 2.0 * (1.0 + GROWTH_MARGIN) * rm.ln() > potential.q(rho1)) {
            return Err(Error::InvalidPotential(format!(
                "{}: growth condition fails at r_max = {rm}",
                potential.id()
            )));
        }
        let mut table = Vec::with_capacity(129);
        let mut prev = RADIUS_FLOOR;
        for i in 1..=128 {
            let tau = i as f64 / 128.0;
            let rho = if i == 128 {
                rho1
            } else {
                potential.mass_radius(tau, prev, rho1)?
            };
            table.push((tau, rho));
            prev = rho;
        }
        Ok(Self {
            potential,
            tau0,
            rho1,
            table,
        })
    }

    pub fn with_default_tau0(potential: RadialPotential) -> Result<Self> {
        Self::new(potential, Self::DEFAULT_TAU0)
    }

    pub fn ginibre() -> Self {
        Self::with_default_tau0(RadialPotential::ginibre()).expect("Ginibre family is valid")
    }

    pub fn potential(&self) -> &RadialPotential {
        &self.potential
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// Outer radius ρ₁ of the droplet S = S₁.
    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    /// ΔQ at the outer boundary of S.
    pub fn delta_q_edge(&self) -> f64 {
        self.potential.delta_q_unchecked(self.rho1)
    }

    /// Outer radius ρ_τ of S_τ, the root of ρ q′(ρ) = 2τ.
    pub fn droplet_radius(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Domain(format!("droplet radius needs tau in (0, 1], got {tau}")));
        }
        if tau == 1.0 {
            return Ok(self.rho1);
        }
        let i = self.table.partition_point(|&(t, _)| t < tau);
        let lo = if i == 0 { RADIUS_FLOOR } else { self.table[i - 1].1 };
        let hi = self.table.get(i).map_or(self.potential.r_max, |e| e.1);
        self.potential
            .mass_radius(tau, lo, hi)
            .or_else(|_| self.potential.mass_radius(tau, RADIUS_FLOOR, self.potential.r_max))
    }

    /// (Q − V_τ)(r) = q(r) − q(ρ_τ) − 2τ log(r/ρ_τ).
    pub fn obstacle_gap(&self, tau: f64, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("obstacle gap needs r > 0, got {r}")));
        }
        let rho = self.droplet_radius(tau)?;
        Ok(self.gap_with_radius(tau, rho, r))
    }

    /// Obstacle gap with ρ_τ already known.
    #[inline]
    pub fn gap_with_radius(&self, tau: f64, rho_tau: f64, r: f64) -> f64 {
        let q = &self.potential;
        q.q(r) - q.q(rho_tau) - 2.0 * tau * (r / rho_tau).ln()
    }

    /// d/dr of the obstacle gap.
    #[inline]
    pub fn gap_slope(&self, tau: f64, r: f64) -> f64 {
        self.potential.dq(r) - 2.0 * tau / r
    }

    /// Signed distance x_τ = ρ_τ − ρ₁ of Γ_τ from the base point of Γ₁.
    pub fn closest_point_gap(&self, tau: f64) -> Result<f64> {
        Ok(self.droplet_radius(tau)? - self.rho1)
    }

    /// Normalized first-order drift 1/(2 ρ₁ ΔQ(ρ₁)) of the boundary in τ.
    pub fn boundary_speed(&self) -> f64 {
        1.0 / (2.0 * self.rho1 * self.delta_q_edge())
    }

    /// (x_τ + ℓ̂(1 − τ)) / (1 − τ)², the second-order remainder of the
    /// boundary motion near τ = 1.
    pub fn movin_remainder(&self, tau: f64) -> Result<f64> {
        let e = 1.0 - tau;
        if e <= 0.0 {
            return Err(Error::Domain("remainder needs tau < 1".into()));
        }
        Ok((self.closest_point_gap(tau)? + self.boundary_speed() * e) / (e * e))
    }

    /// Equilibrium mass of S_τ by radial quadrature, ∫_0^{ρ_τ} ΔQ 2r dr.
    pub fn mass_by_quadrature(&self, tau: f64, spec: &QuadratureSpec) -> Result<f64> {
        let rho = self.droplet_radius(tau)?;
        integrate(
            |r| if r > 0.0 { self.potential.delta_q_unchecked(r) * 2.0 * r } else { 0.0 },
            0.0,
            rho,
            spec,
        )
    }

    /// Residual of Richardson's identity ∫_{S_τ′∖S_τ} h ΔQ dA = (τ′ − τ) h(∞)
    /// for h = Re ζ^{-k}, evaluated as a 2D integral (adaptive radial rule
    /// times trapezoid in angle). For k = 0 the identity is the mass law.
    pub fn richardson_check(&self, tau: f64, tau2: f64, k: u32, spec: &QuadratureSpec) -> Result<f64> {
        if !(tau > 0.0 && tau < tau2 && tau2 <= 1.0) {
            return Err(Error::Domain(format!("need 0 < tau < tau2 <= 1, got {tau}, {tau2}")));
        }
        let (r0, r1) = (self.droplet_radius(tau)?, self.droplet_radius(tau2)?);
        let thetas: Vec<f64> = (0..ANGULAR_NODES)
            .map(|m| 2.0 * std::f64::consts::PI * m as f64 / ANGULAR_NODES as f64)
            .collect();
        let kf = k as f64;
        let integral = integrate(
            |r| {
                // mean over the circle of Re (r e^{iθ})^{-k}
                let rk = r.powf(-kf);
                let mean = thetas.iter().map(|th| rk * (kf * th).cos()).sum::<f64>() / ANGULAR_NODES as f64;
                mean * self.potential.delta_q_unchecked(r) * 2.0 * r
            },
            r0,
            r1,
            spec,
        )?;
        let expected = if k == 0 { tau2 - tau } else { 0.0 };
        Ok((integral - expected).abs())
    }

    /// Geometry of Γ_τ at the real base point.
    pub fn boundary_geometry(&self, tau: f64) -> Result<BoundaryGeometry> {
        let rho = self.droplet_radius(tau)?;
        let dq = self.potential.delta_q_unchecked(rho);
        Ok(BoundaryGeometry {
            tau,
            rho_tau: rho,
            delta_q_boundary: dq,
            ell_tau: 1.0 / (rho * dq.sqrt()),
            x_tau_gap: rho - self.rho1,
        })
    }
}

/// Scalars describing Γ_τ near the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGeometry {
    pub tau: f64,
    pub rho_tau: f64,
    /// ΔQ(ρ_τ)
    pub delta_q_boundary: f64,
    /// ℓ_τ = |φ_τ′|/√ΔQ with |φ_τ′| = 1/ρ_τ.
    pub ell_tau: f64,
    /// ρ_τ − ρ₁
    pub x_tau_gap: f64,
}
