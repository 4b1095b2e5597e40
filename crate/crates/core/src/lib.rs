//! Energy thresholds for k-producible states of spin-1/2 lattice models.
//!
//! A state whose energy per bond lies below `E_kp` cannot be written as a
//! product of blocks of at most `k` qubits, so it carries `(k+1)`-partite
//! entanglement. The thresholds come from per-block constants maximized over
//! small registers, assembled over all connected block shapes of a lattice.

pub mod analysis;
pub mod blockopt;
pub mod bounds;
pub mod error;
pub mod lattice;
pub mod models;
pub mod qsmall;
pub mod quad;
pub mod reference;

pub use error::{Error, Result};
