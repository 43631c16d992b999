mod support;

use cspmkt_core::{
    constrained_nash, duopoly_profits, feasible, feasible_region, nash_equilibrium, ConstraintSpec, DuopolyParams,
    NashOptions, PriceGrid, PriceQuad,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use support::{rng, sample_duopoly, sample_symmetric_duopoly};

fn cfg(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(9),
        failure_persistence: None,
        ..Config::default()
    }
}

fn band_spec(eta: f64) -> ConstraintSpec {
    ConstraintSpec {
        eta,
        grid: PriceGrid::new(-1.0, 1.0, 0.02),
    }
}

#[test]
fn tighter_band_keeps_fewer_cells() {
    let p = DuopolyParams::baseline();
    let wide = feasible_region(&p, &band_spec(0.05)).unwrap();
    let tight = feasible_region(&p, &band_spec(0.01)).unwrap();
    assert_eq!(wide.len(), 101 * 101);
    for (cells, eta) in [(&wide, 0.05), (&tight, 0.01)] {
        assert!(cells.iter().filter(|c| c.feasible).all(|c| c.gap.abs() <= eta));
        assert!(cells.iter().filter(|c| !c.feasible).all(|c| c.gap.abs() > eta));
    }
    let count = |cells: &[cspmkt_core::FeasibleCell]| cells.iter().filter(|c| c.feasible).count();
    assert!(count(&tight) < count(&wide));
    assert!(count(&tight) > 0);
}

#[test]
fn symmetric_equal_prices_always_feasible() {
    let mut g = rng(2);
    for _ in 0..50 {
        let p = sample_symmetric_duopoly(&mut g);
        let cell = feasible(&p, PriceQuad::symmetric(1.0, 1.0), 1e-9).unwrap();
        assert!(cell.gap.abs() < 1e-15 && cell.feasible);
    }
}

#[test]
fn single_point_grid_off_the_locus_is_infeasible() {
    let spec = ConstraintSpec {
        eta: 0.0,
        grid: PriceGrid::new(1.0, 1.0, 0.01),
    };
    let err = constrained_nash(&DuopolyParams::baseline(), &spec).unwrap_err();
    assert_eq!(err.code(), "infeasible");
}

#[test]
fn constrained_solution_is_deterministic() {
    let p = DuopolyParams::baseline();
    let spec = ConstraintSpec::new(0.01);
    let a = constrained_nash(&p, &spec).unwrap();
    let b = constrained_nash(&p, &spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

/// Sum over prices of |dR_i/dp_k| times the grid step, plus a curvature
/// allowance: how much a platform's profit can move when every price moves
/// by at most one step.
fn lipschitz_bound(p: &DuopolyParams, x: PriceQuad, step: f64) -> [f64; 2] {
    let h = 1e-5;
    let mut out = [0.0; 2];
    for k in 0..4 {
        let mut up = x.to_array();
        let mut down = x.to_array();
        up[k] += h;
        down[k] -= h;
        let (uw, un) = duopoly_profits(p, PriceQuad::from_array(up)).unwrap();
        let (dw, dn) = duopoly_profits(p, PriceQuad::from_array(down)).unwrap();
        out[0] += ((uw - dw) / (2.0 * h)).abs() * step;
        out[1] += ((un - dn) / (2.0 * h)).abs() * step;
    }
    out.map(|v| v + 16.0 * step * step)
}

#[test]
fn unconstrained_profit_dominates_when_feasible() {
    let mut g = rng(4);
    let mut checked = 0;
    for _ in 0..2000 {
        let p = sample_duopoly(&mut g);
        let Ok((nash, diag)) = nash_equilibrium(
            &p,
            &NashOptions {
                starts: 0,
                ..NashOptions::default()
            },
        ) else {
            continue;
        };
        if diag.active_bounds.iter().any(|&b| b) || !nash.participation_valid() {
            continue;
        }
        let x = nash.duopoly_prices().unwrap();
        if x.to_array().iter().any(|&v| v > 2.9) {
            continue;
        }
        let eta = nash.gap().abs() + 0.02;
        let Ok(con) = constrained_nash(&p, &ConstraintSpec::new(eta)) else {
            continue;
        };
        let bound = lipschitz_bound(&p, x, 0.01);
        assert!(nash.profit_w() >= con.profit_w() - bound[0], "{p:?}");
        assert!(nash.profit_n().unwrap() >= con.profit_n().unwrap() - bound[1], "{p:?}");
        checked += 1;
        if checked == 20 {
            break;
        }
    }
    assert_eq!(checked, 20);
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn filtering_is_monotone(seed in any::<u64>(), e1 in 0.0..0.2f64, e2 in 0.0..0.2f64) {
        let p = sample_duopoly(&mut rng(seed));
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let spec = |eta| ConstraintSpec { eta, grid: PriceGrid::new(-1.0, 1.0, 0.05) };
        let a = feasible_region(&p, &spec(lo)).unwrap();
        let b = feasible_region(&p, &spec(hi)).unwrap();
        for (ca, cb) in a.iter().zip(&b) {
            prop_assert_eq!(ca.prices, cb.prices);
            prop_assert!(!ca.feasible || cb.feasible);
        }
    }

    #[test]
    fn platform_gaps_are_negatives(seed in any::<u64>(), x in (0.0..3.0f64, 0.0..3.0f64, 0.0..3.0f64, 0.0..3.0f64)) {
        let p = sample_duopoly(&mut rng(seed));
        let cell = feasible(&p, PriceQuad::new(x.0, x.1, x.2, x.3), 0.05).unwrap();
        let q = cell.participation;
        prop_assert!(((q.q_nc - q.q_nb) + (q.q_wc - q.q_wb)).abs() <= 2.0 * f64::EPSILON);
    }
}
