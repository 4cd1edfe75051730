//! Semiclassical engine for a single ion in a combined Paul-Penning trap.
//!
//! The quantum Hamiltonian of the trapped ion is quadratic (plus an
//! optional octopole anharmonicity) in the generators of two su(1,1)
//! algebras, one for the axial and one for the radial degree of freedom.
//! Restricting the dynamics to the manifold of symplectic coherent states
//! turns it into classical Hamiltonian flow on the product of two unit
//! disks, with the energy function given by coherent-state expectation
//! values. This crate implements that pipeline end to end:
//!
//! * [`su11`] — discrete-series algebra, closed-form expectations and a
//!   truncated Fock-space oracle;
//! * [`disk`] — the disk phase-space geometry, Poisson bracket and
//!   Hamiltonian vector field;
//! * [`trap`] — physical trap parameters, drive, spring constants and
//!   Mathieu-parameter mapping;
//! * [`husimi`] — assembly and evaluation of the classical energy
//!   function, gradients and equilibria;
//! * [`dynamics`] — trajectory integration, Floquet monodromy, stability
//!   scans and quasienergy spectra.

pub mod disk;
pub mod dynamics;
pub mod error;
pub mod husimi;
pub mod su11;
pub mod trap;

mod rk;

pub use error::{Error, Result};
