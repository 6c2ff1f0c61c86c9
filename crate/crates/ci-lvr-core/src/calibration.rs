//! Effective constant volatility for a perpetual CI contract from an ATM
//! implied-volatility term structure.
//!
//! Market quotes give pillar vols `σ̂(T_i)`; the interpolation ordinate is
//! the total variance `tv(T) = σ̂²(T)·T`, interpolated linearly in tenor.
//! A perpetual CI put lives for the random first-exit horizon `τ(q)`, so
//! its constant volatility solves the fixed point
//!
//! ```text
//! σ² = tv(τ̄(σ²)) / τ̄(σ²),
//! ```
//!
//! where `τ̄(σ²)` re-solves the CI boundaries and the mean exit time at each
//! iterate. Approximating the random `tv(τ)/τ` by its value at `τ̄` carries
//! Lipschitz error bounds `RMSE ≤ M·√Var(τ)` and `MAD ≤ M·E|τ − τ̄|` with
//! `M = max_i sup |d/dτ (tv(τ)/τ)|` over the pillar segments.

use crate::ci_put::{solve_ci_put, CiPutSpec, MarketParams};
use crate::error::{Error, Result};
use crate::horizon::{mean_exit_time, HorizonInputs};
use crate::math;
use crate::sim::ExitSamples;
use alloc::vec::Vec;

/// ATM implied-volatility pillars `(T_i, σ̂_i)`, tenors in years, strictly
/// ascending, vols positive.
#[derive(Debug, Clone, PartialEq)]
pub struct IvTermStructure {
    pillars: Vec<(f64, f64)>,
    /// Total variances `σ̂_i²·T_i` at the pillars.
    total_variances: Vec<f64>,
}

impl IvTermStructure {
    pub fn new(pillars: Vec<(f64, f64)>) -> Result<Self> {
        if pillars.len() < 2 {
            return Err(Error::Domain("term structure needs at least 2 pillars"));
        }
        for &(t, iv) in &pillars {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::Domain("pillar tenors must be finite and > 0"));
            }
            if !iv.is_finite() || iv <= 0.0 {
                return Err(Error::Domain("pillar vols must be finite and > 0"));
            }
        }
        if pillars.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Domain("pillar tenors must be strictly ascending"));
        }
        let total_variances = pillars.iter().map(|&(t, iv)| iv * iv * t).collect();
        Ok(Self { pillars, total_variances })
    }

    pub fn pillars(&self) -> &[(f64, f64)] {
        &self.pillars
    }

    /// Decreasing total variance between pillars signals calendar
    /// arbitrage in the inputs; flagged, not rejected.
    pub fn has_decreasing_total_variance(&self) -> bool {
        self.total_variances.windows(2).any(|w| w[1] < w[0])
    }

    /// Piecewise-linear total variance `w(τ)`. Outside `[T_1, T_n]` the
    /// implied variance is clamped to the nearest pillar (flat-vol
    /// extrapolation), i.e. `tv(τ) = σ̂²_edge·τ`.
    pub fn total_variance(&self, tau: f64) -> Result<f64> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::Domain("tenor must be finite and > 0"));
        }
        let first = self.pillars[0];
        let last = self.pillars[self.pillars.len() - 1];
        if tau <= first.0 {
            return Ok(first.1 * first.1 * tau);
        }
        if tau >= last.0 {
            return Ok(last.1 * last.1 * tau);
        }
        let idx = self.pillars.partition_point(|&(t, _)| t <= tau) - 1;
        let (t0, tv0) = (self.pillars[idx].0, self.total_variances[idx]);
        let (t1, tv1) = (self.pillars[idx + 1].0, self.total_variances[idx + 1]);
        Ok(tv0 + (tv1 - tv0) / (t1 - t0) * (tau - t0))
    }

    /// `tv(τ)/τ`, the implied variance at horizon `τ`.
    pub fn implied_variance(&self, tau: f64) -> Result<f64> {
        Ok(self.total_variance(tau)? / tau)
    }

    /// Lipschitz bound `M = max_i sup |d/dτ (tv/τ)|` with the segment
    /// derivative `(m_i·τ − tv(τ))/τ²`, evaluated on a 1000-point grid per
    /// segment plus endpoints. Flat extrapolation contributes slope zero.
    pub fn lipschitz_bound(&self) -> f64 {
        let mut m_max: f64 = 0.0;
        for i in 0..self.pillars.len() - 1 {
            let (t0, t1) = (self.pillars[i].0, self.pillars[i + 1].0);
            let (tv0, tv1) = (self.total_variances[i], self.total_variances[i + 1]);
            let slope = (tv1 - tv0) / (t1 - t0);
            for j in 0..=1000 {
                let tau = t0 + (t1 - t0) * j as f64 / 1000.0;
                let tv = tv0 + slope * (tau - t0);
                m_max = m_max.max(((slope * tau - tv) / (tau * tau)).abs());
            }
        }
        m_max
    }
}

/// Converged fixed point of `σ² = tv(τ̄(σ²))/τ̄(σ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    /// Effective annualized volatility `σ_eff`.
    pub sigma_eff: f64,
    /// Mean exit horizon at the calibrated volatility.
    pub tau_bar: f64,
    /// Fixed-point map evaluations used.
    pub iterations: usize,
    /// Residual `|σ_eff² − tv(τ̄)/τ̄|` relative to `σ_eff²`.
    pub residual: f64,
    /// Lipschitz bound `M` of the term structure.
    pub lipschitz_bound: f64,
    /// σ² iterates, starting value included.
    pub trace: Vec<f64>,
}

/// Solve the effective-volatility fixed point for the ATM contract
/// (`S_0 = K`) with funding fee `q` under rate `r`.
///
/// Iteration starts from `σ² = tv(T_1)/T_1` and runs undamped while the
/// residual shrinks, halves the step on stalls, and falls back to bisection
/// between the latest sign-bracketing iterates if the residual oscillates.
pub fn calibrate_sigma_eff(
    ts: &IvTermStructure,
    r: f64,
    strike: f64,
    fee_rate: f64,
) -> Result<CalibrationResult> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain("rate must be finite and > 0"));
    }
    let floor = r * strike;
    if fee_rate <= floor {
        return Err(Error::Admissibility { fee_rate, floor });
    }
    let tau_of = |sigma_sq: f64| -> Result<f64> {
        let params = MarketParams { r, sigma: math::sqrt(sigma_sq) };
        let sol = solve_ci_put(&params, &CiPutSpec { strike, fee_rate })?;
        mean_exit_time(&HorizonInputs {
            params,
            s0: strike,
            s_lower: sol.s_lower,
            s_upper: sol.s_upper,
        })
    };

    let t1 = ts.pillars[0].0;
    let mut x = ts.total_variance(t1)? / t1;
    let mut trace = Vec::with_capacity(8);
    trace.push(x);
    let mut damping = 1.0_f64;
    let mut prev_res: Option<f64> = None;
    let mut pos_side: Option<f64> = None; // latest x with residual > 0
    let mut neg_side: Option<f64> = None;
    let mut flips = 0;
    for iteration in 1..=200 {
        let tau = tau_of(x)?;
        let mapped = ts.implied_variance(tau)?;
        let res = mapped - x;
        if res.abs() <= 1e-10 * x.max(1e-300) {
            return Ok(CalibrationResult {
                sigma_eff: math::sqrt(x),
                tau_bar: tau,
                iterations: iteration,
                residual: res.abs() / x,
                lipschitz_bound: ts.lipschitz_bound(),
                trace,
            });
        }
        if res > 0.0 {
            pos_side = Some(x);
        } else {
            neg_side = Some(x);
        }
        if let Some(prev) = prev_res {
            if prev.signum() != res.signum() {
                flips += 1;
            }
            if res.abs() >= prev.abs() {
                damping = (0.5 * damping).max(0.125);
            }
        }
        prev_res = Some(res);
        x = match (flips >= 2, pos_side, neg_side) {
            (true, Some(p), Some(n)) => 0.5 * (p + n),
            _ => {
                let stepped = x + damping * res;
                if stepped > 0.0 { stepped } else { 0.5 * x }
            }
        };
        trace.push(x);
    }
    Err(Error::Convergence("volatility fixed point hit its iteration cap"))
}

/// Theoretical and realized calibration errors for a set of exit samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBounds {
    /// `M·√(mean (τ_k − τ̄)²)`.
    pub rmse_bound: f64,
    /// `M·mean |τ_k − τ̄|`.
    pub mad_bound: f64,
    pub empirical_rmse: f64,
    pub empirical_mad: f64,
    /// Sample mean of `tv(τ_k)/τ_k`, to compare with the `tv(τ̄)/τ̄`
    /// approximation it stands in for.
    pub sample_mean_implied_variance: f64,
}

/// Evaluate the Lipschitz bounds against realized exit times. Because the
/// bound `|f(τ) − f(τ̄)| ≤ M|τ − τ̄|` holds samplewise, the empirical errors
/// can never exceed the bounds.
pub fn error_bounds(
    ts: &IvTermStructure,
    result: &CalibrationResult,
    samples: &ExitSamples,
) -> Result<ErrorBounds> {
    if samples.times.is_empty() {
        return Err(Error::Domain("exit samples must be nonempty"));
    }
    let tau_bar = result.tau_bar;
    let f_bar = ts.implied_variance(tau_bar)?;
    let m = result.lipschitz_bound;
    let mut sq = math::CompensatedSum::new();
    let mut ab = math::CompensatedSum::new();
    let mut fs = math::CompensatedSum::new();
    for &tau in &samples.times {
        let f = ts.implied_variance(tau.max(1e-12))?;
        let d = f - f_bar;
        sq.add(d * d);
        ab.add(d.abs());
        fs.add(f);
    }
    let n = samples.times.len() as f64;
    Ok(ErrorBounds {
        rmse_bound: m * math::sqrt(math::mean_sq_dev(&samples.times, tau_bar)),
        mad_bound: m * math::mean_abs_dev(&samples.times, tau_bar),
        empirical_rmse: math::sqrt(sq.total() / n),
        empirical_mad: ab.total() / n,
        sample_mean_implied_variance: fs.total() / n,
    })
}
