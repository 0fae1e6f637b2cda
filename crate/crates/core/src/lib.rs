//! Pseudo-spectral laboratory for 2D Boussinesq perturbations of Couette flow, written in
//! sheared coordinates `X = x − yt`.
//!
//! The core types are generic over the scalar (`f32` or `f64`); the aliases below fix `f64`.

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod lab;
pub mod multipliers;
pub mod params;
pub mod quad;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = grid::SpectralGrid<f64>;
pub type Field = grid::SpectralField<f64>;
pub type State = dynamics::FlowState<f64>;
pub type Params = params::PhysicalParams<f64>;
pub type Weights = multipliers::WeightBundle<f64>;
pub type Grid32 = grid::SpectralGrid<f32>;
pub type Field32 = grid::SpectralField<f32>;
pub type State32 = dynamics::FlowState<f32>;
