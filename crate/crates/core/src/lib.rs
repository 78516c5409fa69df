//! Exact game-theoretic probability: coherent cones of gambles, betting
//! protocols, Skeptic strategies and superhedging prices, all in rational
//! arithmetic.

pub mod cone;
pub mod error;
pub mod events;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod pricing;
pub mod protocol;
pub mod rational;
pub mod strategy;
pub mod verify;

pub use error::{Error, Result};
