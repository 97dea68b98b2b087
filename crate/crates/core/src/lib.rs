//! Second-order expansions of exponential-utility indifference prices and
//! buyer/seller implied volatilities for European claims under
//! local-stochastic volatility dynamics, together with the independent
//! PDE / Monte Carlo / semi-analytic oracles used to validate them.
//!
//! The numerical core is generic over the scalar type via [`num::Real`]
//! (`f32` or `f64`); the `*64` aliases below cover the common case.

// `!(a > b)` is used on purpose throughout: unlike `a <= b` it also rejects
// NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod black_scholes;
pub mod config;
pub mod error;
pub mod implied_vol;
pub mod model;
pub mod nontraded;
pub mod num;
pub mod oracles;
pub mod quad;
pub mod semigroup;
pub mod traded;
pub mod weyl;

pub use error::{Error, Result};
pub use num::Real;

pub type LsvModel64 = model::LsvModel<f64>;
pub type TaylorTable64 = model::TaylorTable<f64>;
pub type GroupedCoeffs64 = model::GroupedCoeffs<f64>;
pub type WeylElement64 = weyl::WeylElement<f64>;
pub type GaussianKernelParams64 = semigroup::GaussianKernelParams<f64>;
pub type CallSpec64 = traded::CallSpec<f64>;
pub type IndifferenceSetting64 = traded::IndifferenceSetting<f64>;
pub type PriceExpansion64 = traded::PriceExpansion<f64>;
pub type EtaExpansion64 = traded::EtaExpansion<f64>;
pub type IvExpansion64 = implied_vol::IvExpansion<f64>;
pub type PayoffY64 = nontraded::PayoffY<f64>;
pub type XiExpansion64 = nontraded::XiExpansion<f64>;
pub type PsiExpansion64 = nontraded::PsiExpansion<f64>;
pub type GridSolution64 = oracles::GridSolution<f64>;
