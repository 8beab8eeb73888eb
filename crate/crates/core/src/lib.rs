//! Modified algebraic Bethe ansatz for the inhomogeneous XXX spin-1/2 chain
//! with a generic (non-diagonal) boundary twist.
//!
//! Every formula is generic over the real scalar (`f32` or `f64`) and is
//! cross-checked against [`oracle::Chain`], a dense construction of the
//! monodromy matrix on the full `2^N` space.

pub mod bethe;
pub mod error;
pub mod izergin;
pub mod linalg;
pub mod oracle;
pub mod params;
pub mod rational;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod scalar_products;
pub mod suite;

pub use bethe::{BetheSolution, SolveOptions};
pub use error::{Error, Result};
pub use oracle::Chain;
pub use params::{decompose_twist, Model, ModelParams, TwistDecomposition, TwistMatrix};
pub use rational::{Kernels, ParameterSet};
pub use report::{Check, CheckRecord};
pub use scalar::{Real, C};

pub type C64 = C<f64>;
pub type C32 = C<f32>;
pub type Model64 = Model<f64>;
pub type Model32 = Model<f32>;
pub type ModelParams64 = ModelParams<f64>;
pub type ModelParams32 = ModelParams<f32>;
pub type TwistMatrix64 = TwistMatrix<f64>;
pub type Kernels64 = Kernels<f64>;
pub type ParameterSet64 = ParameterSet<f64>;

pub type Chain64 = Chain<f64>;
pub type BetheSolution64 = BetheSolution<f64>;
