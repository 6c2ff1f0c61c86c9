//! Property tests over random admissible contracts and bands.

use ci_lvr_core::{
    mean_exit_time, solve_ci_put, CiPutSpec, HorizonInputs, LiquidityBand, MarketParams,
};
use proptest::prelude::*;

fn admissible_contract() -> impl Strategy<Value = (MarketParams, CiPutSpec)> {
    (
        0.005..0.10_f64,          // r
        0.15..1.2_f64,            // sigma
        1.0..400.0_f64,           // strike
        1.05..50.0_f64,           // q as multiple of rK
    )
        .prop_map(|(r, sigma, strike, mult)| {
            (
                MarketParams { r, sigma },
                CiPutSpec { strike, fee_rate: mult * r * strike },
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn boundaries_and_fit_hold_for_admissible_contracts(
        (params, spec) in admissible_contract()
    ) {
        let sol = solve_ci_put(&params, &spec).unwrap();
        prop_assert!(sol.s_lower > 0.0);
        prop_assert!(sol.s_lower < spec.strike);
        prop_assert!(sol.s_upper > spec.strike);
        let tol = 1e-9 * spec.strike;
        prop_assert!((sol.price(sol.s_lower).unwrap() - (spec.strike - sol.s_lower)).abs() < tol);
        prop_assert!(sol.price(sol.s_upper).unwrap().abs() < tol);
        prop_assert!((sol.delta(sol.s_lower * (1.0 + 1e-12)).unwrap() + 1.0).abs() < 1e-7);
        prop_assert!(sol.delta(sol.s_upper * (1.0 - 1e-12)).unwrap().abs() < 1e-7);
    }

    #[test]
    fn ode_residual_small_everywhere(
        (params, spec) in admissible_contract(),
        frac in 0.001..0.999_f64,
    ) {
        let sol = solve_ci_put(&params, &spec).unwrap();
        let s = sol.s_lower + frac * sol.band_width();
        let residual = 0.5 * params.sigma * params.sigma * s * s
            * sol.second_derivative(s).unwrap()
            + params.r * s * sol.delta(s).unwrap()
            - params.r * sol.price(s).unwrap()
            - spec.fee_rate;
        prop_assert!(residual.abs() < 1e-6 * spec.fee_rate, "residual {residual}");
    }

    #[test]
    fn delta_stays_in_unit_interval(
        (params, spec) in admissible_contract(),
        frac in -0.5..1.5_f64,
    ) {
        let sol = solve_ci_put(&params, &spec).unwrap();
        let s = (sol.s_lower + frac * sol.band_width()).max(spec.strike * 1e-3);
        let d = sol.delta(s).unwrap();
        prop_assert!((-1.0 - 1e-12..=1e-12).contains(&d));
    }

    #[test]
    fn bands_nest_as_fee_rises(
        (params, spec) in admissible_contract(),
        bump in 1.1..4.0_f64,
    ) {
        let lo_q = solve_ci_put(&params, &spec).unwrap();
        let hi_q = solve_ci_put(
            &params,
            &CiPutSpec { strike: spec.strike, fee_rate: spec.fee_rate * bump },
        )
        .unwrap();
        prop_assert!(hi_q.s_lower > lo_q.s_lower);
        prop_assert!(hi_q.s_upper < lo_q.s_upper);
    }

    #[test]
    fn band_greeks_are_consistent_derivatives(
        a in 10.0..150.0_f64,
        width in 1.2..3.0_f64,
        frac in 0.02..0.98_f64,
    ) {
        let b = a * width;
        let band = LiquidityBand::with_unit_delta_at_lower(a, b).unwrap();
        let s = a + frac * (b - a);
        let h = s * 1e-7;
        if s - h > a && s + h < b {
            let fd_delta =
                (band.value(s + h).unwrap() - band.value(s - h).unwrap()) / (2.0 * h);
            let rel = (fd_delta - band.delta(s).unwrap()).abs()
                / band.delta(s).unwrap().abs().max(1e-12);
            prop_assert!(rel < 1e-7, "delta FD mismatch {rel}");
            let fd_gamma =
                (band.delta(s + h).unwrap() - band.delta(s - h).unwrap()) / (2.0 * h);
            let gexact = band.gamma(s).unwrap();
            prop_assert!((fd_gamma - gexact).abs() / gexact.abs() < 1e-6);
        }
    }

    #[test]
    fn exit_time_positive_inside_zero_at_edges(
        r in 0.0..0.3_f64,
        sigma in 0.1..1.5_f64,
        lo in 10.0..100.0_f64,
        width in 1.05..4.0_f64,
        frac in 0.0..1.0_f64,
    ) {
        let hi = lo * width;
        let params = MarketParams { r, sigma };
        let s0 = lo + frac * (hi - lo);
        let tau = mean_exit_time(&HorizonInputs {
            params,
            s0,
            s_lower: lo,
            s_upper: hi,
        })
        .unwrap();
        prop_assert!(tau >= 0.0);
        if s0 > lo && s0 < hi {
            prop_assert!(tau > 0.0);
        }
        let at_edge = mean_exit_time(&HorizonInputs {
            params,
            s0: lo,
            s_lower: lo,
            s_upper: hi,
        })
        .unwrap();
        prop_assert!(at_edge == 0.0);
    }
}
