//! Lewis-Riesenfeld invariants with a continuous spectrum for a particle in a
//! time-dependent linear potential `H = p^2/2m + f(t) x`.
//!
//! The crate builds the invariant `I(t) = p^2 + b(t) p + c0 x + d(t)`, its
//! delta-normalized Airy eigenstates, eigendifferential packets and band
//! projectors, and the generalized phase computed three independent ways. Two
//! brute-force propagators (Strang split-operator and an exact momentum-space
//! characteristics solver) serve as ground truth, and [`verify`] bundles the
//! checks into reproducible scenarios.

pub mod airy;
pub mod driving;
pub mod error;
pub mod grid;
pub mod invariant;
pub mod oracle;
pub mod packets;
pub mod par;
pub mod phase;
pub mod quad;
pub mod verify;

pub use error::{Error, Result};
