//! Single-qubit quantum operations, channels induced by teleportation, and
//! optimal approximate reversal of those channels.

pub mod channel;
pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod qstate;
pub mod reversal;
pub mod simplex;
pub mod teleport;

pub use error::{Error, Result};
