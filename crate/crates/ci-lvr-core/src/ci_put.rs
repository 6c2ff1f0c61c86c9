//! Closed-form valuation of the perpetual American continuous-installment put.
//!
//! A CI put with strike `K` stays alive only while the holder pays a funding
//! fee `q > rK` per year. On the continuation band `(S_ℓ, S_u)` the
//! discounted value satisfies the time-free inhomogeneous Black-Scholes ODE
//!
//! ```text
//! ½σ²S²P'' + rSP' − rP = q,
//! ```
//!
//! with value-matching and smooth-fit at both free boundaries:
//! `P(S_ℓ) = K − S_ℓ`, `P'(S_ℓ) = −1`, `P(S_u) = 0`, `P'(S_u) = 0`.
//!
//! The solution is
//!
//! ```text
//! P(S) = α·S + β·S^γ − q/r,        γ = −2r/σ²,  g = 1 + rK/q,
//! α = (g^(1−1/γ) − 1)^-1,          β = −(1/γ)·(q/(r+σ²/2))^(1−γ)·α^γ,
//! S_ℓ = q/(r+σ²/2)·(g − g^(1/γ)),  S_u = q/(r+σ²/2)·(g^(1−1/γ) − 1).
//! ```
//!
//! Note the constant term is `−q/r`: with `+q/r` the boundary conditions
//! cannot be met (the ODE residual flips sign), which is easy to verify by
//! direct substitution. Powers `S^γ` are evaluated as `exp(γ·ln S)` and the
//! `g`-expressions via `ln_1p`/`expm1` so that large-`q` contracts (where
//! `g → 1`) lose no precision.

use crate::error::{Error, Result};
use crate::math;
use alloc::vec::Vec;

/// Geometric-Brownian-motion market environment: `dS/S = r dt + σ dB`.
///
/// Fields are public plain data; operations validate the preconditions they
/// actually need (`solve_ci_put` requires `r > 0` and `sigma > 0`, the path
/// simulator accepts `sigma = 0` for degenerate drift-only paths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    /// Annualized risk-free rate (1/yr).
    pub r: f64,
    /// Annualized volatility (1/√yr).
    pub sigma: f64,
}

impl MarketParams {
    /// Validated constructor: `sigma > 0`, `r ≥ 0`, both finite.
    pub fn new(r: f64, sigma: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Domain("risk-free rate must be finite and >= 0"));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::Domain("volatility must be finite and > 0"));
        }
        Ok(Self { r, sigma })
    }

    /// Log-price drift `r − σ²/2`.
    #[inline]
    pub fn log_drift(&self) -> f64 {
        self.r - 0.5 * self.sigma * self.sigma
    }
}

/// Contract terms of a CI put: strike and funding fee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiPutSpec {
    /// Strike `K` in token1 per token0.
    pub strike: f64,
    /// Funding fee `q` in token1 per year; admissible iff `q > r·K`.
    pub fee_rate: f64,
}

impl CiPutSpec {
    pub fn new(strike: f64, fee_rate: f64) -> Result<Self> {
        if !strike.is_finite() || strike <= 0.0 {
            return Err(Error::Domain("strike must be finite and > 0"));
        }
        if !fee_rate.is_finite() || fee_rate <= 0.0 {
            return Err(Error::Domain("fee rate must be finite and > 0"));
        }
        Ok(Self { strike, fee_rate })
    }
}

/// Solved CI put: coefficients, exponent, and free boundaries, plus the
/// contract inputs needed to evaluate the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct CiPutSolution {
    pub alpha: f64,
    pub beta: f64,
    /// ODE exponent `γ = −2r/σ²` (< 0).
    pub gamma: f64,
    /// `g = 1 + rK/q` (> 1).
    pub g: f64,
    /// Exercise boundary `S_ℓ`.
    pub s_lower: f64,
    /// Dropping boundary `S_u`.
    pub s_upper: f64,
    pub strike: f64,
    pub fee_rate: f64,
    pub r: f64,
    pub sigma: f64,
    /// `ln β`, kept so `β·S^γ` can be formed in log space.
    ln_beta: f64,
}

/// Solve the free-boundary problem for a perpetual CI put.
///
/// `r = 0` is rejected rather than special-cased: `γ` degenerates to 0 and
/// the `q/r` term diverges, so a zero-rate limit would be silently wrong.
pub fn solve_ci_put(params: &MarketParams, spec: &CiPutSpec) -> Result<CiPutSolution> {
    let MarketParams { r, sigma } = *params;
    let CiPutSpec { strike, fee_rate } = *spec;
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::Domain("volatility must be finite and > 0"));
    }
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain("rate must be finite and > 0 (r = 0 rejected)"));
    }
    if !strike.is_finite() || strike <= 0.0 {
        return Err(Error::Domain("strike must be finite and > 0"));
    }
    if !fee_rate.is_finite() || fee_rate <= 0.0 {
        return Err(Error::Domain("fee rate must be finite and > 0"));
    }
    let floor = r * strike;
    if fee_rate <= floor {
        return Err(Error::Admissibility {
            fee_rate,
            floor,
        });
    }

    let gamma = -2.0 * r / (sigma * sigma);
    let eps = floor / fee_rate; // rK/q, in (0, 1)
    let g = 1.0 + eps;
    let ln_g = math::ln_1p(eps);
    let scale = fee_rate / (r + 0.5 * sigma * sigma);

    // g^(1−1/γ) − 1 via expm1: exact even when g ≈ 1 (large q).
    let upper_factor = math::expm1((1.0 - 1.0 / gamma) * ln_g);
    let s_upper = scale * upper_factor;
    // g − g^(1/γ) = ε − expm1(ln_g/γ); both terms positive, no cancellation.
    let s_lower = scale * (eps - math::expm1(ln_g / gamma));

    let alpha = 1.0 / upper_factor;
    let ln_beta = -math::ln(-gamma) + (1.0 - gamma) * math::ln(scale) + gamma * math::ln(alpha);
    let beta = math::exp(ln_beta);

    Ok(CiPutSolution {
        alpha,
        beta,
        gamma,
        g,
        s_lower,
        s_upper,
        strike,
        fee_rate,
        r,
        sigma,
        ln_beta,
    })
}

impl CiPutSolution {
    /// Continuation-band interior term `α·S + β·S^γ − q/r`.
    #[inline]
    fn interior_price(&self, s: f64) -> f64 {
        self.alpha * s + math::exp(self.ln_beta + self.gamma * math::ln(s))
            - self.fee_rate / self.r
    }

    #[inline]
    fn interior_delta(&self, s: f64) -> f64 {
        self.alpha + self.gamma * math::exp(self.ln_beta + (self.gamma - 1.0) * math::ln(s))
    }

    /// Discounted value, clipped to the exercised payoff `K − S` below `S_ℓ`
    /// and to 0 above `S_u`.
    pub fn price(&self, s: f64) -> Result<f64> {
        ensure_positive_price(s)?;
        Ok(self.price_raw(s))
    }

    #[inline]
    pub(crate) fn price_raw(&self, s: f64) -> f64 {
        if s <= self.s_lower {
            self.strike - s
        } else if s >= self.s_upper {
            0.0
        } else {
            self.interior_price(s)
        }
    }

    /// Delta `∂P/∂S ∈ [−1, 0]`, clipped to −1 below `S_ℓ` and 0 above `S_u`.
    pub fn delta(&self, s: f64) -> Result<f64> {
        ensure_positive_price(s)?;
        Ok(self.delta_raw(s))
    }

    #[inline]
    pub(crate) fn delta_raw(&self, s: f64) -> f64 {
        if s <= self.s_lower {
            -1.0
        } else if s >= self.s_upper {
            0.0
        } else {
            self.interior_delta(s)
        }
    }

    /// Second derivative `∂²P/∂S² ≥ 0` inside the band, 0 outside (it jumps
    /// at the boundaries; the interior closed form is `βγ(γ−1)S^(γ−2)`).
    pub fn second_derivative(&self, s: f64) -> Result<f64> {
        ensure_positive_price(s)?;
        Ok(self.second_derivative_raw(s))
    }

    #[inline]
    pub(crate) fn second_derivative_raw(&self, s: f64) -> f64 {
        if s <= self.s_lower || s >= self.s_upper {
            0.0
        } else {
            self.gamma
                * (self.gamma - 1.0)
                * math::exp(self.ln_beta + (self.gamma - 2.0) * math::ln(s))
        }
    }

    /// Width of the continuation band.
    #[inline]
    pub fn band_width(&self) -> f64 {
        self.s_upper - self.s_lower
    }
}

#[inline]
fn ensure_positive_price(s: f64) -> Result<()> {
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::Domain("price must be finite and > 0"));
    }
    Ok(())
}

/// `q·(S_u − S_ℓ)` along an ascending fee-rate sequence. The sequence
/// converges to `σ²K²/2` at rate O(1/q).
pub fn band_width_limit(
    params: &MarketParams,
    strike: f64,
    q_sequence: &[f64],
) -> Result<Vec<f64>> {
    if q_sequence.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("fee-rate sequence must be strictly ascending"));
    }
    q_sequence
        .iter()
        .map(|&q| {
            let sol = solve_ci_put(params, &CiPutSpec { strike, fee_rate: q })?;
            Ok(q * sol.band_width())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2_contract() -> CiPutSolution {
        // K = 100, σ = 0.25, r = 0.01, q = 2
        let params = MarketParams { r: 0.01, sigma: 0.25 };
        solve_ci_put(&params, &CiPutSpec { strike: 100.0, fee_rate: 2.0 }).unwrap()
    }

    #[test]
    fn boundaries_bracket_strike() {
        let sol = fig2_contract();
        assert!(sol.s_lower > 0.0);
        assert!(sol.s_lower < 100.0);
        assert!(sol.s_upper > 100.0);
        assert!(sol.gamma < 0.0);
        assert!(sol.g > 1.0);
    }

    #[test]
    fn value_matching_and_smooth_fit() {
        for (r, sigma, k, q) in [
            (0.01, 0.25, 100.0, 2.0),
            (0.05, 0.5, 100.0, 40.0),
            (0.02, 0.67, 100.0, 45.0),
            (0.1, 0.3, 250.0, 80.0),
            (0.03, 1.1, 5.0, 1.0),
        ] {
            let sol = solve_ci_put(
                &MarketParams { r, sigma },
                &CiPutSpec { strike: k, fee_rate: q },
            )
            .unwrap();
            let tol = 1e-9 * k;
            assert!(
                (sol.interior_price(sol.s_lower) - (k - sol.s_lower)).abs() < tol,
                "value matching at lower boundary, q={q}"
            );
            assert!(sol.interior_price(sol.s_upper).abs() < tol);
            assert!((sol.interior_delta(sol.s_lower) + 1.0).abs() < 1e-9);
            assert!(sol.interior_delta(sol.s_upper).abs() < 1e-9);
        }
    }

    #[test]
    fn frozen_boundaries_reference_contract() {
        // r = 0.05, σ = 0.5, K = 100, q = 40; values pinned from the closed
        // form and cross-checked against the finite-difference ODE oracle in
        // tests/ode_oracle.rs.
        let sol = solve_ci_put(
            &MarketParams { r: 0.05, sigma: 0.5 },
            &CiPutSpec { strike: 100.0, fee_rate: 40.0 },
        )
        .unwrap();
        assert!((sol.s_lower - 86.871876793645).abs() < 1e-8);
        assert!((sol.s_upper - 116.616636262272).abs() < 1e-8);
    }

    #[test]
    fn clipping_outside_band() {
        let sol = fig2_contract();
        let below = sol.s_lower * 0.5;
        assert_eq!(sol.price(below).unwrap(), 100.0 - below);
        assert_eq!(sol.delta(below).unwrap(), -1.0);
        assert_eq!(sol.price(sol.s_upper * 2.0).unwrap(), 0.0);
        assert_eq!(sol.delta(sol.s_upper * 2.0).unwrap(), 0.0);
        assert_eq!(sol.second_derivative(sol.s_upper * 2.0).unwrap(), 0.0);
    }

    #[test]
    fn delta_is_monotone_and_bounded() {
        let sol = fig2_contract();
        let mut prev = -1.0;
        for i in 0..=400 {
            let s = sol.s_lower * 0.8 + (sol.s_upper * 1.2 - sol.s_lower * 0.8) * i as f64 / 400.0;
            let d = sol.delta(s).unwrap();
            assert!((-1.0..=0.0).contains(&d));
            assert!(d >= prev - 1e-12, "delta must be nondecreasing in S");
            prev = d;
        }
    }

    #[test]
    fn price_decreases_pointwise_in_q() {
        // Fig. 2(b)-style family; q = 1 sits exactly on the q > rK
        // admissibility boundary at r = 0.01, K = 100, so the family is
        // checked at a lower rate where all three fees are admissible.
        let params = MarketParams { r: 0.005, sigma: 0.25 };
        let sols: Vec<_> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&q| solve_ci_put(&params, &CiPutSpec { strike: 100.0, fee_rate: q }).unwrap())
            .collect();
        // Bands nest as q grows (Lemma: boundaries collapse to K monotonically).
        for w in sols.windows(2) {
            assert!(w[1].s_lower > w[0].s_lower);
            assert!(w[1].s_upper < w[0].s_upper);
        }
        let lo = sols[2].s_lower;
        let hi = sols[2].s_upper;
        for i in 1..50 {
            let s = lo + (hi - lo) * i as f64 / 50.0;
            let p: Vec<f64> = sols.iter().map(|sol| sol.price(s).unwrap()).collect();
            assert!(p[0] >= p[1] && p[1] >= p[2], "price must fall as q rises");
        }
    }

    #[test]
    fn ode_residual_vanishes() {
        let sol = fig2_contract();
        let (r, sigma, q) = (0.01, 0.25, 2.0);
        for i in 1..1000 {
            let s = sol.s_lower + sol.band_width() * i as f64 / 1000.0;
            let residual = 0.5 * sigma * sigma * s * s * sol.second_derivative(s).unwrap()
                + r * s * sol.delta(s).unwrap()
                - r * sol.price(s).unwrap()
                - q;
            assert!(residual.abs() < 1e-6 * q, "residual {residual} at S={s}");
        }
    }

    #[test]
    fn width_limit_matches_lemma() {
        // σ²K²/2 = 312.5 for σ = 0.25, K = 100.
        let params = MarketParams { r: 0.01, sigma: 0.25 };
        let widths = band_width_limit(&params, 100.0, &[1e6]).unwrap();
        assert!((widths[0] - 312.5).abs() / 312.5 < 0.01);
    }

    #[test]
    fn width_deviation_shrinks_like_one_over_q() {
        let params = MarketParams { r: 0.05, sigma: 0.5 };
        let limit = 0.5 * 0.5 * 0.5 * 100.0 * 100.0; // σ²K²/2 = 1250
        let qs = [1e3, 1e4, 1e5];
        let widths = band_width_limit(&params, 100.0, &qs).unwrap();
        let devs: Vec<f64> = widths.iter().map(|w| (w - limit).abs()).collect();
        // Fit the log-log slope over one decade pairs; expect ≈ −1.
        let slope01 = (devs[1] / devs[0]).ln() / (qs[1] / qs[0]).ln();
        let slope12 = (devs[2] / devs[1]).ln() / (qs[2] / qs[1]).ln();
        assert!((slope01 + 1.0).abs() < 0.1, "slope {slope01}");
        assert!((slope12 + 1.0).abs() < 0.1, "slope {slope12}");
    }

    #[test]
    fn rejects_inadmissible_and_degenerate_inputs() {
        let params = MarketParams { r: 0.05, sigma: 0.5 };
        let inadmissible = CiPutSpec { strike: 100.0, fee_rate: 5.0 }; // q = rK exactly
        assert!(matches!(
            solve_ci_put(&params, &inadmissible),
            Err(Error::Admissibility { .. })
        ));
        assert!(matches!(
            solve_ci_put(&MarketParams { r: 0.0, sigma: 0.5 }, &CiPutSpec { strike: 100.0, fee_rate: 40.0 }),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            solve_ci_put(&MarketParams { r: 0.05, sigma: 0.0 }, &CiPutSpec { strike: 100.0, fee_rate: 40.0 }),
            Err(Error::Domain(_))
        ));
        let sol = fig2_contract();
        assert!(sol.price(0.0).is_err());
        assert!(sol.delta(-1.0).is_err());
    }
}
