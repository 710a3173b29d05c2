//! Combinatorial dynamics of signed regulatory networks with production,
//! decay and activity-pair edges.
//!
//! The pipeline is: parse a [`network::RegulatoryNetwork`], solve the order
//! problem of each node's input structure ([`algebra`]), build the parameter
//! graph ([`paramgraph`]), and for each parameter node compute the state
//! transition graph and Morse graph ([`dynamics`]). [`stats`] surveys whole
//! parameter graphs and [`odecheck`] validates the combinatorics against the
//! piecewise-linear switching system.

pub mod algebra;
pub mod dynamics;
pub mod network;
pub mod odecheck;
pub mod paramgraph;
pub mod scalar;
pub mod stats;

pub use scalar::Scalar;

/// Parameter point over `f64`, the type used by witnesses.
pub type Point = algebra::ParameterPoint<f64>;
/// Parameter point over `f32`.
pub type Point32 = algebra::ParameterPoint<f32>;
/// Exact rational parameter point.
pub type ExactPoint = algebra::ParameterPoint<num_rational::Rational64>;
/// Arbitrary-precision rational parameter point.
pub type BigPoint = algebra::ParameterPoint<num_rational::BigRational>;
