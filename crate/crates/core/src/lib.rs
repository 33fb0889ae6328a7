pub mod closed_form;
pub mod distribution;
pub mod error;
pub mod grid;
pub mod hjb;
pub mod lattice;
pub mod mc;
pub mod normal;
pub mod payoff;
pub mod pipeline;
pub mod quadrature;
pub mod rng;
pub mod stencil;
pub mod stopping;

pub use error::{Error, Result};
