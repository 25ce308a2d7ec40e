//! Exact constructions of smooth fans realizing prescribed closed sets of endpoint heights.

pub mod analyze;
pub mod closedset;
pub mod comb;
pub mod construct;
pub mod error;
pub mod geometry;
pub mod homeo;
pub mod io;
pub mod pwl;
pub mod rational;
pub mod svg;

pub use error::FanError;
pub use rational::Q;
