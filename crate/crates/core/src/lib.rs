//! Exact p-adic arithmetic and explicit semi-algebraic bijections between
//! p-adic sets, with round-trip and residue-enumeration verification.

pub mod atlas;
pub mod classify;
pub mod cli;
pub mod dsl;
pub mod error;
pub mod hensel;
pub mod padic;
pub mod rectilinear;
pub mod setmodel;
pub mod text;
pub mod verify;

pub use error::{Error, Result};
pub use padic::{Context, PAdic, Valuation};
