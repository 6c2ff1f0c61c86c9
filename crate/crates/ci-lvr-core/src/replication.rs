//! Discrete CI-put strips that delta-replicate a liquidity band.
//!
//! Two discretizations of the continuous-strike decomposition:
//!
//! * **Uniform strip** — strikes every `ΔK` across `[a, b]`; the weight on
//!   the interval `[K_i, K_{i+1}]` is the exact delta increment
//!   `w_i = X(K_{i+1}) − X(K_i)`, so the weights telescope to `X(b) − X(a)`.
//! * **Chained strip** — strikes chosen so the continuation bands tile
//!   `[a, b]` end to end: `S_ℓ(q; K_1) = a`, `S_ℓ(q; K_{i+1}) = S_u(q; K_i)`.
//!   Exactly one strike is "activated" at any in-band price, which is what
//!   makes the funding-fee ledger well defined.
//!
//! The strip delta is `X_strip(S) = Σ w_i·X_q(S; K_i)` with each per-strike
//! delta clipped to {−1, 0} outside its own continuation band.

use crate::amm::LiquidityBand;
use crate::ci_put::{solve_ci_put, CiPutSolution, CiPutSpec, MarketParams};
use crate::error::{Error, Result};
use crate::math;
use alloc::vec::Vec;

/// Uniform-spacing strip: one CI put per strike interval.
#[derive(Debug, Clone)]
pub struct StrikeStrip {
    /// Ascending strikes `K_i` (left endpoint of each interval).
    pub strikes: Vec<f64>,
    /// Per-strike weights `w_i = X(K_{i+1}) − X(K_i)` (each ≤ 0).
    pub weights: Vec<f64>,
    pub fee_rate: f64,
    pub solutions: Vec<CiPutSolution>,
}

impl StrikeStrip {
    /// Weighted strip delta `Σ w_i·X_q(S; K_i)`.
    pub fn delta(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::Domain("price must be finite and > 0"));
        }
        Ok(self.delta_raw(s))
    }

    #[inline]
    pub(crate) fn delta_raw(&self, s: f64) -> f64 {
        let mut acc = math::CompensatedSum::new();
        for (w, sol) in self.weights.iter().zip(&self.solutions) {
            acc.add(w * sol.delta_raw(s));
        }
        acc.total()
    }

    /// Weighted strip value `Π̃_q(S) = Σ w_i·P_q(S; K_i)`.
    pub fn value(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::Domain("price must be finite and > 0"));
        }
        let mut acc = math::CompensatedSum::new();
        for (w, sol) in self.weights.iter().zip(&self.solutions) {
            acc.add(w * sol.price_raw(s));
        }
        Ok(acc.total())
    }

    /// Sum of weights; telescopes to `X(b) − X(a)` of the target band.
    pub fn weight_sum(&self) -> f64 {
        math::sum(&self.weights)
    }
}

/// Build the uniform-strike strip for `band` with spacing `dk`.
///
/// Strikes are `K_i = a + i·ΔK`; the final interval is truncated at `b` so
/// the weights still telescope exactly. `ΔK ≥ b − a` degenerates to a single
/// strike carrying the whole weight.
pub fn build_uniform_strip(
    band: &LiquidityBand,
    params: &MarketParams,
    fee_rate: f64,
    dk: f64,
) -> Result<StrikeStrip> {
    if !dk.is_finite() || dk <= 0.0 {
        return Err(Error::Domain("strike spacing must be finite and > 0"));
    }
    let floor = params.r * band.upper;
    if fee_rate <= floor {
        return Err(Error::Admissibility { fee_rate, floor });
    }
    let (a, b) = (band.lower, band.upper);
    let n = (((b - a) / dk).ceil() as usize).max(1);
    let mut strikes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut solutions = Vec::with_capacity(n);
    for i in 0..n {
        let k_left = a + i as f64 * dk;
        let k_right = (a + (i + 1) as f64 * dk).min(b);
        strikes.push(k_left);
        weights.push(band.delta_raw(k_right) - band.delta_raw(k_left));
        solutions.push(solve_ci_put(params, &CiPutSpec { strike: k_left, fee_rate })?);
    }
    Ok(StrikeStrip { strikes, weights, fee_rate, solutions })
}

/// Boundary-chained strip: continuation bands tile `[a, b]` without overlap
/// or gap. `tile_edges` has one more entry than `strikes`; tile `i` covers
/// `[tile_edges[i], tile_edges[i+1])`. The last tile generally overshoots
/// `b` by less than one band width; fee accrual is still gated on `[a, b]`.
#[derive(Debug, Clone)]
pub struct ChainedStrip {
    pub strikes: Vec<f64>,
    /// `w_i = X(S_u(q; K_i)) − X(S_ℓ(q; K_i))` with X clipped at the band.
    pub weights: Vec<f64>,
    pub fee_rate: f64,
    pub solutions: Vec<CiPutSolution>,
    /// `[a, S_u(K_1), S_u(K_2), …]`; ascending, first entry equals `a`.
    pub tile_edges: Vec<f64>,
    /// Replication target bounds, kept for in-band gating.
    pub band_lower: f64,
    pub band_upper: f64,
}

impl ChainedStrip {
    /// Index of the unique strike whose continuation band contains `s`, for
    /// `s ∈ [a, b]`. Returns `None` outside the target band.
    pub fn activated_index(&self, s: f64) -> Option<usize> {
        if s < self.band_lower || s > self.band_upper {
            return None;
        }
        // first edge strictly above s; edge i+1 closes tile i
        let idx = self.tile_edges.partition_point(|&e| e <= s);
        if idx == 0 {
            Some(0) // s == a exactly
        } else {
            Some((idx - 1).min(self.strikes.len() - 1))
        }
    }

    pub fn delta(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::Domain("price must be finite and > 0"));
        }
        let mut acc = math::CompensatedSum::new();
        for (w, sol) in self.weights.iter().zip(&self.solutions) {
            acc.add(w * sol.delta_raw(s));
        }
        Ok(acc.total())
    }

    /// How far the last tile extends beyond `b`.
    pub fn overshoot(&self) -> f64 {
        (self.tile_edges.last().unwrap() - self.band_upper).max(0.0)
    }
}

/// Invert `K ↦ S_ℓ(q; K)` by bracketed bisection; `S_ℓ` is strictly
/// increasing in `K` and `S_ℓ(K) < K`, so `[target, 2^m·target]` brackets.
fn strike_for_lower_boundary(
    params: &MarketParams,
    fee_rate: f64,
    target: f64,
) -> Result<CiPutSolution> {
    let solve = |k: f64| solve_ci_put(params, &CiPutSpec { strike: k, fee_rate });
    let mut lo = target;
    let mut hi = target;
    let mut sol_hi = solve(hi)?;
    let mut doublings = 0;
    while sol_hi.s_lower < target {
        lo = hi;
        hi *= 2.0;
        sol_hi = solve(hi)?;
        doublings += 1;
        if doublings > 100 {
            return Err(Error::Convergence("failed to bracket chained strike"));
        }
    }
    let mut best = sol_hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let sol = solve(mid)?;
        if (sol.s_lower - target).abs() <= 1e-10 * target {
            return Ok(sol);
        }
        if sol.s_lower < target {
            lo = mid;
        } else {
            hi = mid;
        }
        best = sol;
        if (hi - lo) <= 1e-14 * target {
            break;
        }
    }
    if (best.s_lower - target).abs() <= 1e-9 * target {
        Ok(best)
    } else {
        Err(Error::Convergence("chained-strike bisection did not converge"))
    }
}

/// Build the boundary-chained strip for `band` at fee rate `q`.
pub fn build_chained_strip(
    band: &LiquidityBand,
    params: &MarketParams,
    fee_rate: f64,
) -> Result<ChainedStrip> {
    let (a, b) = (band.lower, band.upper);
    let floor = params.r * b;
    if fee_rate <= floor {
        return Err(Error::Admissibility { fee_rate, floor });
    }
    let mut strikes = Vec::new();
    let mut weights = Vec::new();
    let mut solutions = Vec::new();
    let mut tile_edges = Vec::new();
    tile_edges.push(a);
    let mut lower_target = a;
    loop {
        let sol = strike_for_lower_boundary(params, fee_rate, lower_target)?;
        let tile_hi = sol.s_upper;
        strikes.push(sol.strike);
        weights.push(band.delta_raw(tile_hi) - band.delta_raw(lower_target));
        tile_edges.push(tile_hi);
        solutions.push(sol);
        if tile_hi >= b {
            break;
        }
        lower_target = tile_hi;
        if strikes.len() > 2_000_000 {
            return Err(Error::Convergence("chained strip exceeded strike budget"));
        }
    }
    Ok(ChainedStrip {
        strikes,
        weights,
        fee_rate,
        solutions,
        tile_edges,
        band_lower: a,
        band_upper: b,
    })
}

/// Sweep configuration for the delta-replication error study.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub params: MarketParams,
    pub band: LiquidityBand,
    pub q_values: Vec<f64>,
    pub dk_values: Vec<f64>,
    /// Number of evaluation points on the uniform grid over `[a, b]`,
    /// endpoints included.
    pub grid_size: usize,
}

/// One sweep cell: max-abs and RMS delta-replication error for `(q, ΔK)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub fee_rate: f64,
    pub dk: f64,
    pub max_abs_err: f64,
    pub rmse: f64,
}

/// Evaluate one `(q, ΔK)` cell on the configured grid.
pub fn sweep_cell(cfg: &SweepConfig, fee_rate: f64, dk: f64) -> Result<SweepCell> {
    if cfg.grid_size < 2 {
        return Err(Error::Config("sweep grid needs at least 2 points"));
    }
    let strip = build_uniform_strip(&cfg.band, &cfg.params, fee_rate, dk)?;
    let (a, b) = (cfg.band.lower, cfg.band.upper);
    let n = cfg.grid_size;
    let mut max_abs: f64 = 0.0;
    let mut sq = math::CompensatedSum::new();
    for j in 0..n {
        let s = a + (b - a) * j as f64 / (n - 1) as f64;
        let err = (cfg.band.delta_raw(s) - strip.delta_raw(s)).abs();
        max_abs = max_abs.max(err);
        sq.add(err * err);
    }
    Ok(SweepCell {
        fee_rate,
        dk,
        max_abs_err: max_abs,
        rmse: math::sqrt(sq.total() / n as f64),
    })
}

/// Run the full sweep; rows are ordered by the configured `(q, ΔK)` lists.
/// Construction and evaluation are pure, so the result is bit-identical
/// across runs.
pub fn replication_error_sweep(cfg: &SweepConfig) -> Result<Vec<SweepCell>> {
    let mut out = Vec::with_capacity(cfg.q_values.len() * cfg.dk_values.len());
    for &q in &cfg.q_values {
        for &dk in &cfg.dk_values {
            out.push(sweep_cell(cfg, q, dk)?);
        }
    }
    Ok(out)
}
