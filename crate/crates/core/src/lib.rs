//! Fair division of graphical cakes with exact rational arithmetic.

pub mod bagfill;
pub mod balance;
pub mod divide;
pub mod error;
pub mod fairness;
pub mod fixtures;
pub mod general;
pub mod generate;
pub mod io;
pub mod model;
pub mod psn;
pub mod query;
pub mod rational;
pub mod solve;
pub mod star;

pub use error::{Error, Result};
pub use rational::Q;
