//! Hard-edge planar point processes: special functions, radial droplets,
//! weighted orthogonal polynomials, quasipolynomial approximations, edge
//! rescaling and a Metropolis sampler.

pub mod error;
pub mod numerics;
pub mod orthopoly;
pub mod potential;
pub mod profile;
pub mod quasipoly;
pub mod sampler;
pub mod scaling;
pub mod special;

pub use error::{Error, Result};
pub use orthopoly::{KernelCache, KernelTable};
pub use potential::{BoundaryGeometry, DropletFamily, PotentialKind, RadialPotential};
pub use profile::{Profile, ProfileKind, ProfileMeta};
pub use special::{free_boundary_phi, gauss_gamma, hard_edge_H, QuadratureSpec, SampledFunction};
