//! Liquidity bands that replicate a single CI put and carry near-constant
//! forward LVR.
//!
//! Choosing the band bounds as the put's continuation boundaries and the
//! liquidity shape so the position delta matches `−X_q(·; K*)` makes the
//! instantaneous LVR rate
//!
//! ```text
//! ½σ²S²·P''(S) = q + ε(S),       ε(S) = −r·(S·P'(S) − P(S)),
//! ```
//!
//! directly from the pricing ODE: an almost flat, price-path-independent
//! cost pinned to the funding fee. The residual decreases monotonically
//! from `ε(a) = rK*` to `ε(b) = 0`, so `rK*` bounds the overshoot above `q`.

use crate::ci_put::{solve_ci_put, CiPutSolution, CiPutSpec, MarketParams};
use crate::error::{Error, Result};
use crate::horizon::solve_q_for_horizon;
use alloc::vec::Vec;

/// A single-put-replicating band design.
#[derive(Debug, Clone, PartialEq)]
pub struct BandDesign {
    pub strike: f64,
    pub fee_rate: f64,
    /// Lower band bound `a = S_ℓ(q, K*)`.
    pub lower: f64,
    /// Upper band bound `b = S_u(q, K*)`.
    pub upper: f64,
    /// Residual bound `r·K*`, exactly.
    pub residual_bound: f64,
    /// Band width as a fraction of the strike.
    pub width_frac: f64,
    pub solution: CiPutSolution,
}

pub fn design_band(params: &MarketParams, strike: f64, fee_rate: f64) -> Result<BandDesign> {
    let solution = solve_ci_put(params, &CiPutSpec { strike, fee_rate })?;
    Ok(BandDesign {
        strike,
        fee_rate,
        lower: solution.s_lower,
        upper: solution.s_upper,
        residual_bound: params.r * strike,
        width_frac: solution.band_width() / strike,
        solution,
    })
}

impl BandDesign {
    /// LVR residual `ε(S) = −r(S·P'(S) − P(S))` in token1/yr, defined on
    /// the closed band. The clipped closed form makes the endpoint values
    /// `ε(a) = rK*` and `ε(b) = 0` exact.
    pub fn lvr_residual(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s < self.lower || s > self.upper {
            return Err(Error::Domain("residual is defined on the band [a, b]"));
        }
        if s <= self.lower {
            return Ok(self.residual_bound);
        }
        if s >= self.upper {
            return Ok(0.0);
        }
        let r = self.solution.r;
        Ok(-r * (s * self.solution.delta_raw(s) - self.solution.price_raw(s)))
    }

    /// Instantaneous LVR rate of the designed band, `½σ²S²·P''(S)`; equals
    /// `q + ε(S)` on the interior by the pricing ODE.
    pub fn lvr_rate(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s <= self.lower || s >= self.upper {
            return Err(Error::Domain("rate is defined inside the open band"));
        }
        let sigma = self.solution.sigma;
        Ok(0.5 * sigma * sigma * s * s * self.solution.second_derivative_raw(s))
    }
}

/// One row of the design table: all percentages are relative to the strike
/// except `residual_pct_of_q`. Scale-free in `K`, so rows are computed at a
/// reference strike of 100.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignRow {
    pub tau_years: f64,
    pub sigma: f64,
    /// Funding fee as % of strike per year.
    pub q_pct: f64,
    pub lower_pct: f64,
    pub upper_pct: f64,
    pub width_pct: f64,
    /// Residual bound `rK` as % of `q`.
    pub residual_pct_of_q: f64,
    /// Residual bound `rK` as % of `K` (= 100·r; emitted because the two
    /// normalizations are easy to confuse).
    pub residual_pct_of_strike: f64,
}

/// Build the design table: for each `(τ̄, σ_eff)` find the fee rate whose
/// ATM band has that mean exit horizon, then record its boundaries and
/// residual bound. Rows iterate horizons outer, volatilities inner.
pub fn generate_design_table(
    r: f64,
    horizons: &[f64],
    sigmas: &[f64],
) -> Result<Vec<DesignRow>> {
    if horizons.iter().any(|&t| !t.is_finite() || t <= 0.0) {
        return Err(Error::Domain("horizons must be finite and > 0"));
    }
    if sigmas.iter().any(|&s| !s.is_finite() || s <= 0.0) {
        return Err(Error::Domain("volatilities must be finite and > 0"));
    }
    let strike = 100.0;
    let mut rows = Vec::with_capacity(horizons.len() * sigmas.len());
    for &tau in horizons {
        for &sigma in sigmas {
            let params = MarketParams { r, sigma };
            let q = solve_q_for_horizon(&params, strike, tau)?;
            let design = design_band(&params, strike, q)?;
            rows.push(DesignRow {
                tau_years: tau,
                sigma,
                q_pct: 100.0 * q / strike,
                lower_pct: 100.0 * design.lower / strike,
                upper_pct: 100.0 * design.upper / strike,
                width_pct: 100.0 * (design.upper - design.lower) / strike,
                residual_pct_of_q: 100.0 * design.residual_bound / q,
                residual_pct_of_strike: 100.0 * r,
            });
        }
    }
    Ok(rows)
}
