//! Numerical laboratory for self-financing trading strategies.
//!
//! The crate simulates geometric Brownian motion stock paths against a
//! deterministic money-market account, keeps an exact discrete-time ledger of
//! any holdings schedule, and runs batch experiments on top of it:
//!
//! - [`paths`]: time grids, counter-based Brownian increments, Brownian-bridge
//!   refinement, exact log-scheme GBM.
//! - [`calculus`]: left-point Ito integrals, quadratic covariation and an
//!   Ito-Doblin residual checker.
//! - [`strategies`]: buy-and-hold, constant-mix, Black-Scholes delta hedges,
//!   price-band rules and broken (non-self-financing) controls.
//! - [`ledger`]: value, gain and self-financing defect series, the four
//!   rebalancing terms, and self-financing bond completion.
//! - [`experiments`]: defect refinement study, risk-neutral martingale test
//!   and hedging-error convergence.
//! - [`config`] and [`cli`]: flat TOML configs, run manifests and the
//!   `simulate | verify | hedge | martingale` front end.

pub mod calculus;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod format;
pub mod ledger;
pub mod paths;
pub mod strategies;
pub mod sum;

pub use error::{Error, Result};
