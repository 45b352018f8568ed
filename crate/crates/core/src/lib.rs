//! Photon creation by a vibrating cavity wall.
//!
//! The crate integrates the Galerkin-truncated mode equations of a 1-D
//! cavity whose right wall moves as `L(t) = L0 (1 + ε sin Ωt)`, evaluates the
//! closed-form first- and second-order perturbative solution, and extracts
//! Bogoliubov coefficients and photon spectra once the wall stops.

pub mod bogoliubov;
pub mod cavity;
pub mod error;
pub mod evolution;
pub mod integrator;
pub mod par;
pub mod params;
pub mod perturbation;
pub mod state;

pub use error::{CasimirError, Result};
pub use integrator::{Frame, IntegratorConfig, Scheme, Start};
pub use par::Execution;
pub use params::{CavityParams, Sign};
pub use state::{QPState, XState};
