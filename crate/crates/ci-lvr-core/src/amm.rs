//! Value, greeks, and instantaneous LVR rate of constant-product positions.
//!
//! A concentrated band `[a, b]` with invariant parameter `k` holds only
//! token0 below `a` and only token1 above `b`; in between its token1 value is
//!
//! ```text
//! V(S) = k(√S − √a) + kS(√b − √S)/√(Sb),
//! X(S) = V'(S) = k(1/√S − 1/√b),
//! Γ(S) = X'(S) = −k/(2S^{3/2}) ≤ 0.
//! ```
//!
//! The instantaneous LVR accrues at `½σ²S²|Γ(S)|` per year. The raw Itô
//! drift `½σ²S²Γ` is negative because Γ ≤ 0; LVR being universally quoted as
//! a positive cost, [`LiquidityBand::lvr_rate`] returns the magnitude.

use crate::ci_put::MarketParams;
use crate::error::{Error, Result};
use crate::math;

/// Concentrated-liquidity position on a price band `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiquidityBand {
    /// Lower price bound `a`.
    pub lower: f64,
    /// Upper price bound `b`.
    pub upper: f64,
    /// Liquidity invariant parameter `k`.
    pub liquidity: f64,
}

/// Value and first two price sensitivities of a position at one spot level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionGreeks {
    pub value: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl LiquidityBand {
    pub fn new(lower: f64, upper: f64, liquidity: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower > 0.0 && upper > lower) {
            return Err(Error::Domain("band requires 0 < a < b, both finite"));
        }
        if !liquidity.is_finite() || liquidity <= 0.0 {
            return Err(Error::Domain("liquidity parameter must be > 0"));
        }
        Ok(Self { lower, upper, liquidity })
    }

    /// Band with `k` normalized so that `X(a) = 1` exactly: one unit of
    /// token0 exposure at the lower edge, zero at the upper.
    pub fn with_unit_delta_at_lower(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower > 0.0 && upper > lower) {
            return Err(Error::Domain("band requires 0 < a < b, both finite"));
        }
        let k = 1.0 / (1.0 / math::sqrt(lower) - 1.0 / math::sqrt(upper));
        Self::new(lower, upper, k)
    }

    /// Reserve value in token1. Below `a` the reserve is all token0 marked at
    /// `S`; above `b` it is the constant all-token1 value `k(√b − √a)`.
    pub fn value(&self, s: f64) -> Result<f64> {
        ensure_positive(s)?;
        let k = self.liquidity;
        let (ra, rb) = (math::sqrt(self.lower), math::sqrt(self.upper));
        Ok(if s <= self.lower {
            // all token0: x(a) = k(1/√a − 1/√b) units, marked at S
            s * k * (1.0 / ra - 1.0 / rb)
        } else if s >= self.upper {
            k * (rb - ra)
        } else {
            let rs = math::sqrt(s);
            k * (rs - ra) + k * s * (rb - rs) / (rs * rb)
        })
    }

    /// Delta `X(S) = k(1/√S − 1/√b)`, clipped to `[0, X(a)]` outside `(a, b)`.
    pub fn delta(&self, s: f64) -> Result<f64> {
        ensure_positive(s)?;
        Ok(self.delta_raw(s))
    }

    #[inline]
    pub(crate) fn delta_raw(&self, s: f64) -> f64 {
        let clamped = s.max(self.lower).min(self.upper);
        self.liquidity * (1.0 / math::sqrt(clamped) - 1.0 / math::sqrt(self.upper))
    }

    /// Gamma `Γ(S) = −k/(2S^{3/2})`, defined strictly inside `(a, b)`; it is
    /// zero outside and jumps at the edges, so edge queries are an error the
    /// caller must handle explicitly.
    pub fn gamma(&self, s: f64) -> Result<f64> {
        ensure_positive(s)?;
        if s <= self.lower || s >= self.upper {
            return Err(Error::Domain("gamma is only defined inside the open band"));
        }
        Ok(self.gamma_raw(s))
    }

    #[inline]
    fn gamma_raw(&self, s: f64) -> f64 {
        -self.liquidity / (2.0 * s * math::sqrt(s))
    }

    /// Instantaneous LVR rate `½σ²S²|Γ(S)|` in token1 per year, reported as
    /// a positive cost; zero outside the open band.
    pub fn lvr_rate(&self, params: &MarketParams, s: f64) -> Result<f64> {
        ensure_positive(s)?;
        Ok(self.lvr_rate_raw(params, s))
    }

    #[inline]
    pub(crate) fn lvr_rate_raw(&self, params: &MarketParams, s: f64) -> f64 {
        if s <= self.lower || s >= self.upper {
            0.0
        } else {
            0.5 * params.sigma * params.sigma * s * s * (-self.gamma_raw(s))
        }
    }

    /// Value, delta, and gamma in one call (gamma errors at/outside edges).
    pub fn greeks(&self, s: f64) -> Result<PositionGreeks> {
        Ok(PositionGreeks {
            value: self.value(s)?,
            delta: self.delta(s)?,
            gamma: self.gamma(s)?,
        })
    }
}

/// Full-range constant-product position (`a → 0`, `b → ∞`): `V = 2k√S`,
/// kept separate from [`LiquidityBand`] to avoid degenerate band arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullRangeCpamm {
    pub liquidity: f64,
}

impl FullRangeCpamm {
    pub fn new(liquidity: f64) -> Result<Self> {
        if !liquidity.is_finite() || liquidity <= 0.0 {
            return Err(Error::Domain("liquidity parameter must be > 0"));
        }
        Ok(Self { liquidity })
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        ensure_positive(s)?;
        Ok(2.0 * self.liquidity * math::sqrt(s))
    }

    pub fn delta(&self, s: f64) -> Result<f64> {
        ensure_positive(s)?;
        Ok(self.liquidity / math::sqrt(s))
    }

    pub fn gamma(&self, s: f64) -> Result<f64> {
        ensure_positive(s)?;
        Ok(-self.liquidity / (2.0 * s * math::sqrt(s)))
    }

    pub fn lvr_rate(&self, params: &MarketParams, s: f64) -> Result<f64> {
        ensure_positive(s)?;
        // ½σ²S²·k/(2S^{3/2}) = kσ²√S/4
        Ok(0.25 * self.liquidity * params.sigma * params.sigma * math::sqrt(s))
    }
}

#[inline]
fn ensure_positive(s: f64) -> Result<()> {
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::Domain("price must be finite and > 0"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section6_band() -> LiquidityBand {
        LiquidityBand::with_unit_delta_at_lower(80.0, 125.0).unwrap()
    }

    #[test]
    fn normalization_pins_edge_deltas() {
        let band = section6_band();
        assert!((band.delta(80.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(band.delta(125.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn value_at_upper_edge_is_all_token1() {
        let band = section6_band();
        let k = band.liquidity;
        let expect = k * (math::sqrt(125.0) - math::sqrt(80.0));
        assert!((band.value(125.0).unwrap() - expect).abs() < 1e-10);
        // constant above b
        assert_eq!(band.value(125.0).unwrap(), band.value(400.0).unwrap());
    }

    #[test]
    fn value_is_c1_across_edges() {
        let band = section6_band();
        for edge in [80.0, 125.0] {
            let h = 1e-6;
            let v_in = band.value(edge - h).unwrap();
            let v_out = band.value(edge + h).unwrap();
            assert!((v_in - v_out).abs() < 1e-4);
            let d_in = (band.value(edge).unwrap() - band.value(edge - h).unwrap()) / h;
            let d_out = (band.value(edge + h).unwrap() - band.value(edge).unwrap()) / h;
            assert!((d_in - d_out).abs() < 1e-4);
        }
    }

    #[test]
    fn delta_matches_finite_difference_of_value() {
        let band = section6_band();
        let h = 1e-5;
        for i in 1..40 {
            let s = 80.0 + 45.0 * i as f64 / 40.0;
            let fd = (band.value(s + h).unwrap() - band.value(s - h).unwrap()) / (2.0 * h);
            assert!((fd - band.delta(s).unwrap()).abs() < 1e-8, "at S={s}");
        }
    }

    #[test]
    fn gamma_matches_finite_difference_of_delta() {
        let band = section6_band();
        let h = 1e-5;
        for i in 1..40 {
            let s = 80.0 + 45.0 * i as f64 / 40.0;
            let fd = (band.delta(s + h).unwrap() - band.delta(s - h).unwrap()) / (2.0 * h);
            assert!((fd - band.gamma(s).unwrap()).abs() < 1e-8, "at S={s}");
            assert!(band.gamma(s).unwrap() < 0.0);
        }
    }

    #[test]
    fn gamma_errors_at_and_outside_edges() {
        let band = section6_band();
        assert!(band.gamma(80.0).is_err());
        assert!(band.gamma(125.0).is_err());
        assert!(band.gamma(70.0).is_err());
    }

    #[test]
    fn lvr_rate_sign_scale_and_clipping() {
        let band = section6_band();
        let params = MarketParams { r: 0.0, sigma: 0.25 };
        let s = 100.0;
        let rate = band.lvr_rate(&params, s).unwrap();
        assert!(rate > 0.0);
        // closed form ½σ²S²·k/(2S^{3/2}) = kσ²√S/4
        let expect = band.liquidity * 0.25 * 0.25 * math::sqrt(s) / 4.0;
        assert!((rate - expect).abs() < 1e-10 * expect.max(1.0));
        // doubling σ quadruples the rate
        let quad = band
            .lvr_rate(&MarketParams { r: 0.0, sigma: 0.5 }, s)
            .unwrap();
        assert!((quad - 4.0 * rate).abs() < 1e-9 * quad);
        // zero outside
        assert_eq!(band.lvr_rate(&params, 70.0).unwrap(), 0.0);
        assert_eq!(band.lvr_rate(&params, 125.0).unwrap(), 0.0);
    }

    #[test]
    fn full_range_matches_band_interior_formulas() {
        let cp = FullRangeCpamm::new(3.0).unwrap();
        let params = MarketParams { r: 0.0, sigma: 0.4 };
        let s = 64.0;
        assert!((cp.value(s).unwrap() - 2.0 * 3.0 * 8.0).abs() < 1e-12);
        assert!((cp.delta(s).unwrap() - 3.0 / 8.0).abs() < 1e-12);
        let rate = cp.lvr_rate(&params, s).unwrap();
        assert!((rate - 0.25 * 3.0 * 0.16 * 8.0).abs() < 1e-12);
    }
}
