//! Option-theoretic analytics for concentrated AMM liquidity positions.
//!
//! The core objects are perpetual American continuous-installment (CI) put
//! options: American puts with no expiry that stay alive only while the
//! holder pays a constant funding fee `q` per year. Their value solves the
//! time-free Black-Scholes ODE
//!
//! ```text
//! ½σ²S²P'' + rSP' − rP = q      on the continuation band (S_ℓ, S_u)
//! ```
//!
//! in closed form, which makes them natural building blocks for replicating
//! the delta of a constant-product liquidity band and for pricing its
//! loss-versus-rebalancing (LVR) as funding income.
//!
//! Modules:
//! - [`ci_put`] — closed-form CI put valuation, delta, and free boundaries
//! - [`amm`] — value/delta/gamma and instantaneous LVR rate of liquidity bands
//! - [`replication`] — discrete CI-put strips that delta-replicate a band
//! - [`sim`] — GBM path engine, funding/LVR ledgers, first-exit sampling
//! - [`horizon`] — closed-form mean first-exit time and fee-rate inversion
//! - [`calibration`] — effective volatility from an ATM implied-vol curve
//! - [`band_design`] — liquidity bands with near-constant forward LVR
//!
//! All functions are pure; the crate is `no_std` (with `alloc`) unless the
//! default `std` feature is enabled, which only adds `std::error::Error`
//! impls.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod amm;
pub mod band_design;
pub mod calibration;
pub mod ci_put;
pub mod error;
pub mod horizon;
pub mod math;
pub mod replication;
pub mod sim;

pub use amm::{FullRangeCpamm, LiquidityBand, PositionGreeks};
pub use band_design::{design_band, generate_design_table, BandDesign, DesignRow};
pub use calibration::{
    calibrate_sigma_eff, error_bounds, CalibrationResult, ErrorBounds, IvTermStructure,
};
pub use ci_put::{band_width_limit, solve_ci_put, CiPutSolution, CiPutSpec, MarketParams};
pub use error::{Error, Result};
pub use horizon::{mean_exit_time, solve_q_for_horizon, HorizonInputs};
pub use replication::{
    build_chained_strip, build_uniform_strip, replication_error_sweep, sweep_cell, ChainedStrip,
    StrikeStrip, SweepCell, SweepConfig,
};
pub use sim::{
    accumulate_funding, accumulate_lvr, build_path_ledger, sample_first_exit, simulate_path,
    simulate_paths, ExitSamples, FirstExitConfig, FundingLedger, GbmConfig, HedgeLedger,
    PathLedger,
};
