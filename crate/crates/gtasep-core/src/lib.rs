//! Numerical laboratory for the TASEP with generalized update.
//!
//! The crate has three layers that are built to check each other:
//!
//! * [`sim`] — a Monte Carlo engine for the clusterwise backward-sequential
//!   dynamics on infinite-lattice windows and on the ring;
//! * [`exact`] — finite-time transition probabilities and joint tagged-particle
//!   distributions as finite determinants of contour-integral kernels;
//! * [`limits`] — Airy and transitional limit kernels together with continuum
//!   Fredholm determinants of their gap probabilities.
//!
//! [`stationary`] carries the closed-form stationary/hydrodynamic chart that
//! feeds the scaling constants, [`quad`] the shared complex-contour
//! integration engine, [`series`] an exact big-rational residue oracle, and
//! [`harness`] the sweep/comparison drivers used by the CLI.

pub mod exact;
pub mod harness;
pub mod limits;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod series;
pub mod sim;
pub mod stationary;
pub mod stats;
