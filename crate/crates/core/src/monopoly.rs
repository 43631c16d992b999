//! Monopoly platform: the abstract benchmark model and the Hotelling
//! (linear-demand) model with its closed-form equilibrium.

use serde::{Deserialize, Serialize};

use crate::conditions::{validate_monopoly, ConditionId};
use crate::error::{Error, Result};
use crate::types::{
    Diagnostics, EquilibriumOutcome, LossLeader, Market, MonopolyParams, MonopolyShares, PricePair, Side,
};

fn demand_denominator(op: &'static str, params: &MonopolyParams) -> Result<f64> {
    let d = params.t_b * params.t_c - params.b_b * params.b_c;
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::DegenerateDemand { op, denominator: d });
    }
    Ok(d)
}

/// Participation at the indifference point of both Hotelling lines. The
/// result is affine in the prices and is returned unclamped.
pub fn monopoly_demand(params: &MonopolyParams, prices: PricePair) -> Result<MonopolyShares> {
    const OP: &str = "monopoly::monopoly_demand";
    params.ensure_finite(OP)?;
    let d = demand_denominator(OP, params)?;
    let p = params;
    let surplus_b = p.u0_b - prices.p_b;
    let surplus_c = p.u0_c - prices.p_c;
    let q_b = (p.b_b * surplus_c + p.t_c * surplus_b) / d;
    let q_c = (p.b_c * surplus_b + p.t_b * surplus_c) / d;
    Ok(MonopolyShares::new(q_b, q_c))
}

/// Platform profit with the raw (unclamped) demand.
pub fn monopoly_profit(params: &MonopolyParams, prices: PricePair) -> Result<f64> {
    let q = monopoly_demand(params, prices)?;
    Ok((prices.p_b - params.f_b) * q.q_b + (prices.p_c - params.f_c) * q.q_c)
}

/// Analytic gradient of the profit with respect to `(p_b, p_c)`.
pub fn monopoly_profit_gradient(params: &MonopolyParams, prices: PricePair) -> Result<[f64; 2]> {
    const OP: &str = "monopoly::monopoly_profit_gradient";
    let d = demand_denominator(OP, params)?;
    let q = monopoly_demand(params, prices)?;
    let p = params;
    let m_b = prices.p_b - p.f_b;
    let m_c = prices.p_c - p.f_c;
    Ok([
        q.q_b - m_b * p.t_c / d - m_c * p.b_c / d,
        q.q_c - m_b * p.b_b / d - m_c * p.t_b / d,
    ])
}

/// Closed-form profit-maximizing prices (no gating).
pub fn monopoly_closed_form_prices(params: &MonopolyParams) -> PricePair {
    let p = params;
    let tt = p.t_b * p.t_c;
    let cross = p.b_b * p.b_c;
    let b_sum = p.b_b + p.b_c;
    let den = 4.0 * tt - b_sum * b_sum;
    let p_b = (-p.b_b * p.b_b * p.f_b - p.b_c * p.b_c * p.u0_b
        + (2.0 * tt - cross) * (p.f_b + p.u0_b)
        + p.t_b * (p.b_b - p.b_c) * (p.u0_c - p.f_c))
        / den;
    let p_c = (-p.b_c * p.b_c * p.f_c - p.b_b * p.b_b * p.u0_c
        + (2.0 * tt - cross) * (p.f_c + p.u0_c)
        + p.t_c * (p.b_b - p.b_c) * (p.f_b - p.u0_b))
        / den;
    PricePair::new(p_b, p_c)
}

/// Profit-maximizing monopoly prices, participation and profit.
///
/// Gated on A0 and A1. A2 is only reported: when it fails the outcome is
/// returned with `participation.valid == false`.
pub fn monopoly_equilibrium(params: &MonopolyParams) -> Result<EquilibriumOutcome> {
    const OP: &str = "monopoly::monopoly_equilibrium";
    let report = validate_monopoly(params)?;
    for id in [ConditionId::A0, ConditionId::A1] {
        if !report.passes(id) {
            return Err(Error::GatingCondition {
                op: OP,
                condition: id,
                margin: report.margin(id).unwrap_or(f64::NAN),
                report,
            });
        }
    }

    let p = params;
    let b_sum = p.b_b + p.b_c;
    let den = 4.0 * p.t_b * p.t_c - b_sum * b_sum;
    let prices = monopoly_closed_form_prices(params);
    let q_b = ((p.u0_c - p.f_c) * b_sum + 2.0 * p.t_c * (p.u0_b - p.f_b)) / den;
    let q_c = (b_sum * (p.u0_b - p.f_b) + 2.0 * p.t_b * (p.u0_c - p.f_c)) / den;
    let dev_b = p.f_b - p.u0_b;
    let dev_c = p.f_c - p.u0_c;
    let profit = (b_sum * dev_b * dev_c + p.t_c * dev_b * dev_b + p.t_b * dev_c * dev_c) / den;

    let grad = monopoly_profit_gradient(params, prices)?;
    let mut diagnostics = Diagnostics {
        foc_residual: grad[0].abs().max(grad[1].abs()),
        ..Diagnostics::default()
    };
    if !prices.is_nonnegative() {
        diagnostics.warnings.push("negative price in closed form".to_string());
    }
    let loss_leaders = loss_leader_flags(params, prices);
    Ok(EquilibriumOutcome {
        market: Market::Monopoly {
            prices,
            participation: MonopolyShares::new(q_b, q_c),
            profit,
        },
        conditions: report,
        loss_leaders,
        diagnostics,
    })
}

fn loss_leader_flags(params: &MonopolyParams, prices: PricePair) -> Vec<LossLeader> {
    vec![
        LossLeader::new(Side::Worksite, None, prices.p_b, params.f_b),
        LossLeader::new(Side::Commuter, None, prices.p_c, params.f_c),
    ]
}

/// Per-side price-below-cost flags with margins `p_k - f_k`.
pub fn loss_leader(outcome: &EquilibriumOutcome, params: &MonopolyParams) -> Vec<LossLeader> {
    match &outcome.market {
        Market::Monopoly { prices, .. } => loss_leader_flags(params, *prices),
        Market::Duopoly { .. } => outcome.loss_leaders.clone(),
    }
}

/// Participation as a clamped linear function of net utility,
/// `phi(U) = clamp(slope * U, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearDemandCurve {
    pub slope: f64,
}

impl LinearDemandCurve {
    pub fn new(slope: f64) -> Self {
        Self { slope }
    }

    /// The curve induced by a Hotelling line with inconvenience rate `t`.
    pub fn hotelling(t: f64) -> Self {
        Self { slope: 1.0 / t }
    }

    pub fn share(&self, utility: f64) -> f64 {
        (self.slope * utility).clamp(0.0, 1.0)
    }

    /// Derivative taken on the increasing segment: one-sided at the kinks,
    /// zero strictly outside `[0, 1/slope]`.
    pub fn derivative(&self, utility: f64) -> f64 {
        if (0.0..=1.0 / self.slope).contains(&utility) {
            self.slope
        } else {
            0.0
        }
    }

    /// `phi(U) / phi'(U)` with the one-sided derivative at the kinks.
    pub fn markup(&self, utility: f64) -> f64 {
        utility.clamp(0.0, 1.0 / self.slope)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSolution {
    pub u_b: f64,
    pub u_c: f64,
    pub p_b: f64,
    pub p_c: f64,
    pub q_b: f64,
    pub q_c: f64,
    /// `max |G(U) - U|` of the undamped fixed-point map at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

impl BenchmarkSolution {
    pub fn prices(&self) -> PricePair {
        PricePair::new(self.p_b, self.p_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-12,
            max_iterations: 100_000,
        }
    }
}

/// Prices implied by the optimal-pricing identity
/// `p_k = f_k - U0_k - b_l q_l + phi_k / phi_k'`, taken as written.
pub fn benchmark_optimal_prices(
    params: &MonopolyParams,
    curves: &[LinearDemandCurve; 2],
    u_b: f64,
    u_c: f64,
) -> PricePair {
    let p = params;
    let q_b = curves[0].share(u_b);
    let q_c = curves[1].share(u_c);
    PricePair::new(
        p.f_b - p.u0_b - p.b_c * q_c + curves[0].markup(u_b),
        p.f_c - p.u0_c - p.b_b * q_b + curves[1].markup(u_c),
    )
}

/// One application of the benchmark map: utilities -> optimal prices ->
/// utilities implied by `U_k = U0_k + b_k q_l - p_k`.
fn benchmark_map(params: &MonopolyParams, curves: &[LinearDemandCurve; 2], u: [f64; 2]) -> [f64; 2] {
    let prices = benchmark_optimal_prices(params, curves, u[0], u[1]);
    let q_b = curves[0].share(u[0]);
    let q_c = curves[1].share(u[1]);
    [
        params.u0_b + params.b_b * q_c - prices.p_b,
        params.u0_c + params.b_c * q_b - prices.p_c,
    ]
}

/// Solves the benchmark optimal-pricing identity on both sides at once by
/// damped fixed-point iteration over the net utilities.
pub fn benchmark_solve(
    params: &MonopolyParams,
    curves: &[LinearDemandCurve; 2],
    options: &FixedPointOptions,
) -> Result<BenchmarkSolution> {
    const OP: &str = "monopoly::benchmark_solve";
    params.ensure_finite(OP)?;
    for c in curves {
        if !(c.slope > 0.0 && c.slope.is_finite()) {
            return Err(Error::InvalidParameter {
                op: OP,
                reason: format!("demand curve slope must be positive, got {}", c.slope),
            });
        }
    }

    let finish = |u: [f64; 2], residual: f64, iterations: usize| {
        let prices = benchmark_optimal_prices(params, curves, u[0], u[1]);
        BenchmarkSolution {
            u_b: u[0],
            u_c: u[1],
            p_b: prices.p_b,
            p_c: prices.p_c,
            q_b: curves[0].share(u[0]),
            q_c: curves[1].share(u[1]),
            residual,
            iterations,
        }
    };

    let mut u = [params.u0_b - params.f_b, params.u0_c - params.f_c];
    let mut residual = f64::INFINITY;
    for it in 0..options.max_iterations {
        let next = benchmark_map(params, curves, u);
        residual = (next[0] - u[0]).abs().max((next[1] - u[1]).abs());
        if !residual.is_finite() {
            break;
        }
        if residual <= options.tolerance {
            return Ok(finish(u, residual, it));
        }
        for k in 0..2 {
            u[k] += options.damping * (next[k] - u[k]);
        }
    }
    Err(Error::FixedPointDiverged {
        op: OP,
        iterations: options.max_iterations,
        residual,
        last: Box::new(finish(u, residual, options.max_iterations)),
    })
}

/// Residuals of the optimal-pricing identity itself, `p_k - [f_k - U0_k - b_l q_l + phi/phi']`.
pub fn optimal_price_residuals(
    params: &MonopolyParams,
    solution: &BenchmarkSolution,
    curves: &[LinearDemandCurve; 2],
) -> [f64; 2] {
    let target = benchmark_optimal_prices(params, curves, solution.u_b, solution.u_c);
    [solution.p_b - target.p_b, solution.p_c - target.p_c]
}

/// Lerner-index residuals `(p_k - (f_k - U0_k - b_l q_l)) / p_k - 1/eta_k`
/// with `eta_k = p_k phi_k'(U_k) / phi_k(U_k)`.
pub fn lerner_residuals(
    params: &MonopolyParams,
    solution: &BenchmarkSolution,
    curves: &[LinearDemandCurve; 2],
) -> Result<[f64; 2]> {
    const OP: &str = "monopoly::lerner_residuals";
    let p = params;
    let sides = [
        (
            Side::Worksite,
            solution.p_b,
            p.f_b,
            p.u0_b,
            p.b_c * solution.q_c,
            solution.u_b,
            curves[0],
        ),
        (
            Side::Commuter,
            solution.p_c,
            p.f_c,
            p.u0_c,
            p.b_b * solution.q_b,
            solution.u_c,
            curves[1],
        ),
    ];
    let mut out = [0.0; 2];
    for (k, (side, price, cost, u0, cross, utility, curve)) in sides.into_iter().enumerate() {
        let share = curve.share(utility);
        let slope = curve.derivative(utility);
        if price == 0.0 || share == 0.0 || slope == 0.0 {
            return Err(Error::UndefinedElasticity { op: OP, side });
        }
        let elasticity = price * slope / share;
        out[k] = (price - (cost - u0 - cross)) / price - 1.0 / elasticity;
    }
    Ok(out)
}

/// Benchmark profit as a function of the net utilities.
pub fn benchmark_profit(params: &MonopolyParams, curves: &[LinearDemandCurve; 2], u_b: f64, u_c: f64) -> f64 {
    let p = params;
    let q_b = curves[0].share(u_b);
    let q_c = curves[1].share(u_c);
    let p_b = p.u0_b + p.b_b * q_c - u_b;
    let p_c = p.u0_c + p.b_c * q_b - u_c;
    (p_b - p.f_b) * q_b + (p_c - p.f_c) * q_c
}
