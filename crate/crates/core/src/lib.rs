//! Numerical laboratory for nodal domains of Laplace eigenfunctions on the
//! flat torus and of Gaussian monochromatic waves.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: sums of two squares, lattice points on circles and
//!   vanishing-sum (spectral correlation) counts.
//! * [`measure`]: symmetric probability measures on the unit circle,
//!   Fourier coefficients, arc binning and the Prokhorov metric.
//! * [`field`]: real plane-wave superpositions with analytic gradients and
//!   fast grid sampling.
//! * [`eigen`]: coefficient vectors, toral eigenfunctions, blow-ups and the
//!   arc-gathering local decomposition.
//! * [`nodal`]: grid nodal-domain censuses on the torus and on squares,
//!   zero-set length and the localized-count sandwich.
//! * [`gaussian`]: Gaussian wave sampling, Monte Carlo estimation of the
//!   nodal-domain density, Kac-Rice rates and barrier diagnostics.
//! * [`derandom`]: exact and quadrature joint moments of the arc
//!   coefficients, Gaussian comparison and Jacobian diagnostics.
//! * [`experiment`]: configuration, caching and the comparison pipeline
//!   driven by the `toral` command-line tool.

pub mod derandom;
pub mod eigen;
pub mod experiment;
pub mod field;
pub mod gaussian;
pub mod lattice;
pub mod measure;
pub mod nodal;
pub mod rng;

mod maxflow;
mod union_find;

pub use num_complex::Complex64;
