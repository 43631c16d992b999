//! Duopoly under demand constraints: per-platform worksite and commuter
//! participation may differ by at most `eta`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duopoly::{duopoly_demand, duopoly_outcome, nash_equilibrium, DemandCoefficients, NashOptions};
use crate::error::{Error, Result};
use crate::types::{Diagnostics, DuopolyParams, EquilibriumOutcome, Participation, PriceQuad};

/// Evenly spaced values `min, min + step, ...` not exceeding `max`.
/// Values are computed from the index, so no rounding drift accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for PriceGrid {
    fn default() -> Self {
        Self {
            min: 0.0,
            max: 3.0,
            step: 0.01,
        }
    }
}

impl PriceGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        Self { min, max, step }
    }

    pub fn validate(&self, op: &'static str) -> Result<()> {
        let ok = self.min.is_finite()
            && self.max.is_finite()
            && self.step.is_finite()
            && self.step > 0.0
            && self.min <= self.max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                op,
                reason: format!(
                    "price grid needs finite min <= max and step > 0 (got {}, {}, {})",
                    self.min, self.max, self.step
                ),
            })
        }
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + self.step * i as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.value(i))
    }

    /// Index of the grid value nearest to `x`.
    pub fn snap(&self, x: f64) -> usize {
        let i = ((x - self.min) / self.step).round();
        if i.is_nan() || i < 0.0 {
            0
        } else {
            (i as usize).min(self.len() - 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub eta: f64,
    #[serde(default)]
    pub grid: PriceGrid,
}

impl ConstraintSpec {
    pub fn new(eta: f64) -> Self {
        Self {
            eta,
            grid: PriceGrid::default(),
        }
    }

    fn validate(&self, op: &'static str) -> Result<()> {
        if self.eta.is_nan() || self.eta < 0.0 {
            return Err(Error::InvalidParameter {
                op,
                reason: format!("eta must be nonnegative, got {}", self.eta),
            });
        }
        self.grid.validate(op)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleCell {
    pub prices: PriceQuad,
    pub participation: Participation,
    pub profit_w: f64,
    pub profit_n: f64,
    /// `q_wc - q_wb`. The N-side gap is its negative, so one check covers
    /// both platforms.
    pub gap: f64,
    pub feasible: bool,
}

/// Demand-constraint check of a single price quad.
pub fn feasible(params: &DuopolyParams, prices: PriceQuad, eta: f64) -> Result<FeasibleCell> {
    let participation = duopoly_demand(params, prices)?;
    let f = params;
    let gap = participation.gap();
    Ok(FeasibleCell {
        prices,
        participation,
        profit_w: participation.q_wb * (prices.p_wb - f.f_wb) + participation.q_wc * (prices.p_wc - f.f_wc),
        profit_n: participation.q_nb * (prices.p_nb - f.f_nb) + participation.q_nc * (prices.p_nc - f.f_nc),
        gap,
        feasible: gap.abs() <= eta,
    })
}

/// Feasibility over a grid of price differences `(p_nb - p_wb, p_nc - p_wc)`,
/// taken from `spec.grid` on both axes, with W priced at cost. Demand depends
/// on prices only through these differences. Cells are ordered with the
/// worksite difference outer.
pub fn feasible_region(params: &DuopolyParams, spec: &ConstraintSpec) -> Result<Vec<FeasibleCell>> {
    const OP: &str = "constrained::feasible_region";
    spec.validate(OP)?;
    DemandCoefficients::new(params)?;
    let g = spec.grid;
    let n = g.len();
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let d_b = g.value(k / n);
            let d_c = g.value(k % n);
            let prices = PriceQuad::new(params.f_wb, params.f_wb + d_b, params.f_wc, params.f_wc + d_c);
            feasible(params, prices, spec.eta)
        })
        .collect()
}

/// Own profit and W gap of the mover as affine/quadratic forms over its own
/// grid prices, with the rival fixed.
struct MoverProblem {
    grid: PriceGrid,
    costs: [f64; 2],
    /// Own shares at own prices zero, and their own-price slopes.
    share0: [f64; 2],
    share_slope: [[f64; 2]; 2],
    gap0: f64,
    gap_slope: [f64; 2],
}

impl MoverProblem {
    fn new(coef: &DemandCoefficients, params: &DuopolyParams, grid: PriceGrid, w_moves: bool, rival: [f64; 2]) -> Self {
        // Own price indices in [p_wb, p_nb, p_wc, p_nc] order.
        let (own, other) = if w_moves { ([0, 2], [1, 3]) } else { ([1, 3], [0, 2]) };
        let mut base = [0.0; 4];
        base[other[0]] = rival[0];
        base[other[1]] = rival[1];
        let q_wb0 = coef.q_wb(&base);
        let q_wc0 = coef.q_wc(&base);
        let sign = if w_moves { 1.0 } else { -1.0 };
        let share0 = if w_moves {
            [q_wb0, q_wc0]
        } else {
            [1.0 - q_wb0, 1.0 - q_wc0]
        };
        let share_slope = [
            [sign * coef.grad_b[own[0]], sign * coef.grad_b[own[1]]],
            [sign * coef.grad_c[own[0]], sign * coef.grad_c[own[1]]],
        ];
        let costs = if w_moves {
            [params.f_wb, params.f_wc]
        } else {
            [params.f_nb, params.f_nc]
        };
        Self {
            grid,
            costs,
            share0,
            share_slope,
            gap0: q_wc0 - q_wb0,
            gap_slope: [
                coef.grad_c[own[0]] - coef.grad_b[own[0]],
                coef.grad_c[own[1]] - coef.grad_b[own[1]],
            ],
        }
    }

    /// Best feasible `(i_b, i_c)`; ties go to the smallest `(p_b, p_c)`.
    fn best(&self, eta: f64) -> Option<(usize, usize)> {
        let n = self.grid.len();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            let pb = self.grid.value(i);
            let gap_b = self.gap0 + self.gap_slope[0] * pb;
            let qb_b = self.share0[0] + self.share_slope[0][0] * pb;
            let qc_b = self.share0[1] + self.share_slope[1][0] * pb;
            for j in 0..n {
                let pc = self.grid.value(j);
                if (gap_b + self.gap_slope[1] * pc).abs() > eta {
                    continue;
                }
                let qb = qb_b + self.share_slope[0][1] * pc;
                let qc = qc_b + self.share_slope[1][1] * pc;
                let profit = qb * (pb - self.costs[0]) + qc * (pc - self.costs[1]);
                if best.is_none_or(|(b, _, _)| profit > b) {
                    best = Some((profit, i, j));
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }
}

/// Grid indices of a price quad, `[p_wb, p_nb, p_wc, p_nc]` order.
type GridState = [usize; 4];

fn quad_of(grid: &PriceGrid, s: &GridState) -> PriceQuad {
    PriceQuad::from_array(s.map(|i| grid.value(i)))
}

/// Whether any price quad on the grid meets the constraint. Demand depends
/// only on the two price differences, so those are scanned instead.
fn region_nonempty(coef: &DemandCoefficients, grid: &PriceGrid, eta: f64) -> bool {
    let n = grid.len() as i64;
    let gb = [coef.grad_c[1] - coef.grad_b[1], coef.grad_c[3] - coef.grad_b[3]];
    let gap0 = coef.intercept_c - coef.intercept_b;
    // With p_w fixed at grid.min, differences are k * step for k in (-n, n).
    (-(n - 1)..n).any(|kb| {
        (-(n - 1)..n).any(|kc| {
            let db = kb as f64 * grid.step;
            let dc = kc as f64 * grid.step;
            (gap0 + gb[0] * db + gb[1] * dc).abs() <= eta
        })
    })
}

pub const MAX_ROUNDS: usize = 1000;

/// Constrained equilibrium by alternating grid best responses.
///
/// Each round W, then N, picks the grid price pair maximizing its own profit
/// among pairs that keep the joint quad feasible, holding the rival fixed; a
/// platform with no feasible pair keeps its prices. The iteration starts from
/// the unconstrained equilibrium snapped to the grid (or from cost when that
/// fails) and stops when a round changes nothing. If it revisits an earlier
/// state instead, the smallest state of the cycle (lexicographic in
/// `[p_wb, p_nb, p_wc, p_nc]`) is returned with `cycle = true`.
pub fn constrained_nash(params: &DuopolyParams, spec: &ConstraintSpec) -> Result<EquilibriumOutcome> {
    const OP: &str = "constrained::constrained_nash";
    spec.validate(OP)?;
    params.ensure_single_homing_domain(OP)?;
    let coef = DemandCoefficients::new(params)?;
    let grid = spec.grid;
    if !region_nonempty(&coef, &grid, spec.eta) {
        return Err(Error::Infeasible { op: OP });
    }

    let start_prices = nash_equilibrium(
        params,
        &NashOptions {
            starts: 0,
            deviation_points: 0,
            ..NashOptions::default()
        },
    )
    .ok()
    .and_then(|(o, _)| o.duopoly_prices())
    .unwrap_or_else(|| params.cost_quad());
    let mut state: GridState = start_prices.to_array().map(|p| grid.snap(p));
    let mut history: Vec<GridState> = vec![state];

    for round in 1..=MAX_ROUNDS {
        for w_moves in [true, false] {
            let rival = if w_moves {
                [grid.value(state[1]), grid.value(state[3])]
            } else {
                [grid.value(state[0]), grid.value(state[2])]
            };
            let problem = MoverProblem::new(&coef, params, grid, w_moves, rival);
            if let Some((i, j)) = problem.best(spec.eta) {
                if w_moves {
                    state[0] = i;
                    state[2] = j;
                } else {
                    state[1] = i;
                    state[3] = j;
                }
            }
        }

        let previous = *history.last().expect("history starts non-empty");
        let (result, cycle) = if state == previous {
            (state, false)
        } else if let Some(pos) = history.iter().position(|s| *s == state) {
            let member = *history[pos..].iter().min().expect("cycle is non-empty");
            (member, true)
        } else {
            history.push(state);
            continue;
        };

        let prices = quad_of(&grid, &result);
        let cell = feasible(params, prices, spec.eta)?;
        if !cell.feasible {
            return Err(Error::Infeasible { op: OP });
        }
        let diagnostics = Diagnostics {
            iterations: round,
            cycle,
            eta: Some(spec.eta),
            ..Diagnostics::default()
        };
        return duopoly_outcome(params, prices, diagnostics);
    }
    Err(Error::NonConvergence {
        op: OP,
        rounds: MAX_ROUNDS,
        trace: history.iter().map(|s| quad_of(&grid, s)).collect(),
    })
}
