//! Mean first-exit time of GBM from a price band, and its inversion to a
//! funding fee.
//!
//! For `dS/S = r dt + σ dB` started at `S_0` inside `(S_ℓ, S_u)`, write
//! `y = ln S`, drift `a = r − σ²/2`, `κ = −2a/σ²`. The expected exit time is
//!
//! ```text
//! τ̄ = (1/σ²)·ln(S0/S_ℓ)·ln(S_u/S0)                     a = 0
//! τ̄ = (1/a)·[ln(S_ℓ/S0) + ln(S_ℓ/S_u)·(S0^κ − S_ℓ^κ)/(S_ℓ^κ − S_u^κ)]   a ≠ 0
//! ```
//!
//! Near `a = 0` the second branch is a ratio of vanishing differences. With
//! `dy = ln(S0/S_ℓ)`, `dU = ln(S_u/S_ℓ)`, `A = κ·dy`, `B = κ·dU` it
//! rearranges exactly to
//!
//! ```text
//! τ̄ = (2/σ²)·dy·(dU − dy)·h(A, B)/f(B),
//! f(x) = expm1(x)/x,   h(A, B) = (f(A) − f(B))/(A − B) = Σ_{n≥0} p_n/(n+2)!,
//! p_n = Σ_{i+j=n} A^i B^j,
//! ```
//!
//! a product of well-conditioned factors whose series converges like
//! `x^n/n!`. The crate switches to it whenever `max(|A|, |B|) < 0.5`, which
//! subsumes the `a = 0` branch as the `A = B = 0` limit and keeps the two
//! branches consistent to machine precision across the switch.

use crate::ci_put::{solve_ci_put, CiPutSpec, MarketParams};
use crate::error::{Error, Result};
use crate::math;

/// First-exit problem: GBM environment, start, and absorbing band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonInputs {
    pub params: MarketParams,
    pub s0: f64,
    pub s_lower: f64,
    pub s_upper: f64,
}

impl HorizonInputs {
    /// Log-price drift `a = r − σ²/2`.
    pub fn drift(&self) -> f64 {
        self.params.log_drift()
    }

    /// `κ = −2a/σ²`.
    pub fn kappa(&self) -> f64 {
        -2.0 * self.drift() / (self.params.sigma * self.params.sigma)
    }
}

/// `h(A, B) = Σ_{n≥0} p_n/(n+2)!` with `p_n = Σ_{i+j=n} A^i B^j`.
fn divided_difference_series(a: f64, b: f64) -> f64 {
    let mut p = 1.0; // p_0
    let mut factorial = 2.0; // (0+2)!
    let mut b_pow = 1.0;
    let mut h = 0.5; // p_0/2!
    for n in 1..64 {
        b_pow *= b;
        p = a * p + b_pow;
        factorial *= (n + 2) as f64;
        let term = p / factorial;
        h += term;
        if term.abs() <= 1e-18 * h.abs() {
            break;
        }
    }
    h
}

#[inline]
fn expm1_over_x(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        math::expm1(x) / x
    }
}

/// Expected first-exit time in years. Returns 0 when `S_0` starts on a
/// boundary; positive strictly inside.
pub fn mean_exit_time(inp: &HorizonInputs) -> Result<f64> {
    let HorizonInputs { params, s0, s_lower, s_upper } = *inp;
    if !(s_lower.is_finite() && s_upper.is_finite() && s0.is_finite()) {
        return Err(Error::Domain("band and start must be finite"));
    }
    if !(0.0 < s_lower && s_lower < s_upper) {
        return Err(Error::Domain("band requires 0 < S_lower < S_upper"));
    }
    if !(s_lower..=s_upper).contains(&s0) {
        return Err(Error::Domain("start must lie in [S_lower, S_upper]"));
    }
    if !params.sigma.is_finite() || params.sigma <= 0.0 {
        return Err(Error::Domain("volatility must be finite and > 0"));
    }
    let sigma_sq = params.sigma * params.sigma;
    let drift = params.r - 0.5 * sigma_sq;
    let dy = math::ln(s0 / s_lower);
    let du = math::ln(s_upper / s_lower);
    if dy <= 0.0 || dy >= du {
        return Ok(0.0); // absorbed at start
    }
    let kappa = -2.0 * drift / sigma_sq;
    let a = kappa * dy;
    let b = kappa * du;
    if a.abs().max(b.abs()) < 0.5 {
        let h = divided_difference_series(a, b);
        Ok(2.0 / sigma_sq * dy * (du - dy) * h / expm1_over_x(b))
    } else {
        Ok((-dy + du * math::expm1(a) / math::expm1(b)) / drift)
    }
}

/// Invert `τ̄(q)` for the ATM contract `S_0 = K`: find the funding fee whose
/// CI continuation band has the requested mean first-exit time.
///
/// `τ̄` is strictly decreasing in `q` (larger fee ⇒ narrower band), so the
/// root is unique; it is bracketed by doubling and then bisected on `log q`
/// to 1e−6 relative accuracy in `τ̄`.
pub fn solve_q_for_horizon(
    params: &MarketParams,
    strike: f64,
    target_tau: f64,
) -> Result<f64> {
    if !target_tau.is_finite() || target_tau <= 0.0 {
        return Err(Error::Domain("target horizon must be finite and > 0"));
    }
    if !strike.is_finite() || strike <= 0.0 {
        return Err(Error::Domain("strike must be finite and > 0"));
    }
    let tau_at = |q: f64| -> Result<f64> {
        let sol = solve_ci_put(params, &CiPutSpec { strike, fee_rate: q })?;
        mean_exit_time(&HorizonInputs {
            params: *params,
            s0: strike,
            s_lower: sol.s_lower,
            s_upper: sol.s_upper,
        })
    };

    let mut lo = params.r * strike * (1.0 + 1e-9);
    if tau_at(lo)? < target_tau {
        return Err(Error::NoSolution(
            "target horizon exceeds the maximum reachable near q = rK",
        ));
    }
    let mut hi = 2.0 * lo;
    let mut doublings = 0;
    while tau_at(hi)? >= target_tau {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::NoSolution("target horizon unreachable within q budget"));
        }
    }
    for _ in 0..200 {
        let mid = math::sqrt(lo * hi);
        let tau = tau_at(mid)?;
        if (tau - target_tau).abs() <= 1e-6 * target_tau {
            return Ok(mid);
        }
        if tau > target_tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence("fee-rate bisection hit its iteration cap"))
}
