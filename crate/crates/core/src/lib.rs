//! Joint mean-reverting modelling of gas and electricity spot prices.
//!
//! The library calibrates and simulates a two-factor model for the
//! deseasonalized log spot prices of two linked energies:
//!
//! ```text
//! Y^g_t = X^g_t + Z_t,        Y^e_t = X^e_t + Z_t,
//! ```
//!
//! where `Z` is a slow Gaussian Ornstein–Uhlenbeck factor shared by both
//! commodities (the stochastic equilibrium) and `X^g`, `X^e` are fast
//! mean-reverting ergodic diffusions whose stationary laws are prescribed
//! NIG-type densities, built via the scale-function/speed-measure
//! construction. The crate covers the full workflow: seasonal fitting,
//! ACF/CCF calibration, maximum-likelihood estimation of the spike factors,
//! trajectory simulation and Monte Carlo risk measurement of a spark-spread
//! portfolio.

pub mod bessel;
pub mod correlation;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod marketdata;
pub mod mle;
pub mod nig;
pub mod optim;
pub mod pipeline;
pub mod quad;
pub mod risk;
pub mod seasonality;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
