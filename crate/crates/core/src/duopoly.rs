//! Single-homing duopoly: affine demand, profits, best responses, the
//! general Nash solver, the symmetric closed form, and multi-homing
//! incremental utilities.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{validate_duopoly, ConditionId};
use crate::error::{Deviation, Error, Result};
use crate::types::{
    Diagnostics, DuopolyParams, EquilibriumOutcome, LossLeader, Market, Participation, Platform, PricePair, PriceQuad,
    Side,
};

/// W-side shares as affine functions of `[p_wb, p_nb, p_wc, p_nc]`:
/// `q_wb = intercept_b + grad_b . p`, `q_wc = intercept_c + grad_c . p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandCoefficients {
    pub intercept_b: f64,
    pub grad_b: [f64; 4],
    pub intercept_c: f64,
    pub grad_c: [f64; 4],
    pub denominator: f64,
}

impl DemandCoefficients {
    pub fn new(params: &DuopolyParams) -> Result<Self> {
        const OP: &str = "duopoly::demand_coefficients";
        params.ensure_finite(OP)?;
        let p = params;
        let a_plus = p.alpha_plus();
        let b_plus = p.beta_plus();
        let d = 4.0 * p.t_b * p.t_c - a_plus * b_plus;
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::DegenerateDemand { op: OP, denominator: d });
        }
        Ok(Self {
            intercept_b: 0.5 - (p.t_c * p.alpha_minus() + a_plus * p.beta_minus() / 2.0) / d,
            grad_b: [-2.0 * p.t_c / d, 2.0 * p.t_c / d, -a_plus / d, a_plus / d],
            intercept_c: 0.5 - (p.t_b * p.beta_minus() + p.alpha_minus() * b_plus / 2.0) / d,
            grad_c: [-b_plus / d, b_plus / d, -2.0 * p.t_b / d, 2.0 * p.t_b / d],
            denominator: d,
        })
    }

    pub fn q_wb(&self, p: &[f64; 4]) -> f64 {
        self.intercept_b + dot(&self.grad_b, p)
    }

    pub fn q_wc(&self, p: &[f64; 4]) -> f64 {
        self.intercept_c + dot(&self.grad_c, p)
    }

    /// Share of `platform` on `side` as `(intercept, gradient)`.
    fn share(&self, platform: Platform, side: Side) -> (f64, [f64; 4]) {
        let (a, g) = match side {
            Side::Worksite => (self.intercept_b, self.grad_b),
            Side::Commuter => (self.intercept_c, self.grad_c),
        };
        match platform {
            Platform::W => (a, g),
            Platform::N => (1.0 - a, g.map(|x| -x)),
        }
    }
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Index of a platform's own price for `side` in the price array.
fn idx(platform: Platform, side: Side) -> usize {
    match (platform, side) {
        (Platform::W, Side::Worksite) => 0,
        (Platform::N, Side::Worksite) => 1,
        (Platform::W, Side::Commuter) => 2,
        (Platform::N, Side::Commuter) => 3,
    }
}

const SIDES: [Side; 2] = [Side::Worksite, Side::Commuter];

/// Single-homing participation from the affine demand system (raw values).
pub fn duopoly_demand(params: &DuopolyParams, prices: PriceQuad) -> Result<Participation> {
    let c = DemandCoefficients::new(params)?;
    let p = prices.to_array();
    Ok(Participation::single_homing(c.q_wb(&p), c.q_wc(&p)))
}

/// `(r_w, r_n)` with raw demands.
pub fn duopoly_profits(params: &DuopolyParams, prices: PriceQuad) -> Result<(f64, f64)> {
    let q = duopoly_demand(params, prices)?;
    Ok(profits_from(params, prices, &q))
}

fn profits_from(params: &DuopolyParams, prices: PriceQuad, q: &Participation) -> (f64, f64) {
    let f = params;
    (
        q.q_wb * (prices.p_wb - f.f_wb) + q.q_wc * (prices.p_wc - f.f_wc),
        q.q_nb * (prices.p_nb - f.f_nb) + q.q_nc * (prices.p_nc - f.f_nc),
    )
}

/// Profit of `platform` with its own shares clamped to `[0, 1]`.
fn clamped_profit(coef: &DemandCoefficients, costs: &[f64; 4], platform: Platform, p: &[f64; 4]) -> f64 {
    SIDES
        .iter()
        .map(|&s| {
            let (a, g) = coef.share(platform, s);
            let k = idx(platform, s);
            (a + dot(&g, p)).clamp(0.0, 1.0) * (p[k] - costs[k])
        })
        .sum()
}

/// Gradient of `platform`'s raw profit with respect to its own `(p_b, p_c)`.
fn own_gradient(coef: &DemandCoefficients, costs: &[f64; 4], platform: Platform, p: &[f64; 4]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (j, &k_side) in SIDES.iter().enumerate() {
        let k = idx(platform, k_side);
        let (a, g) = coef.share(platform, k_side);
        let mut v = a + dot(&g, p);
        for &s in &SIDES {
            let (_, gs) = coef.share(platform, s);
            let m = idx(platform, s);
            v += (p[m] - costs[m]) * gs[k];
        }
        out[j] = v;
    }
    out
}

/// Own-price Hessian of a platform's profit (constant, demand is affine).
fn own_hessian(coef: &DemandCoefficients, platform: Platform) -> Matrix2<f64> {
    let mut h = Matrix2::zeros();
    for (r, &rs) in SIDES.iter().enumerate() {
        for (c, &cs) in SIDES.iter().enumerate() {
            let (_, gr) = coef.share(platform, rs);
            let (_, gc) = coef.share(platform, cs);
            h[(r, c)] = gr[idx(platform, cs)] + gc[idx(platform, rs)];
        }
    }
    h
}

fn negative_definite(h: &Matrix2<f64>) -> bool {
    h[(0, 0)] < 0.0 && h.determinant() > 0.0
}

fn gate_b3(op: &'static str, params: &DuopolyParams) -> Result<crate::conditions::ConditionReport> {
    params.ensure_single_homing_domain(op)?;
    let report = validate_duopoly(params, None)?;
    if !report.passes(ConditionId::B3Proof) {
        return Err(Error::GatingCondition {
            op,
            condition: ConditionId::B3Proof,
            margin: report.margin(ConditionId::B3Proof).unwrap_or(f64::NAN),
            report,
        });
    }
    Ok(report)
}

/// Profit-maximizing nonnegative own prices of `platform` given the rival's.
pub fn best_response(params: &DuopolyParams, platform: Platform, rival: PricePair) -> Result<PricePair> {
    const OP: &str = "duopoly::best_response";
    gate_b3(OP, params)?;
    let coef = DemandCoefficients::new(params)?;
    best_response_with(&coef, &params.cost_quad().to_array(), platform, rival)
}

fn best_response_with(
    coef: &DemandCoefficients,
    costs: &[f64; 4],
    platform: Platform,
    rival: PricePair,
) -> Result<PricePair> {
    const OP: &str = "duopoly::best_response";
    let h = own_hessian(coef, platform);
    let base = PriceQuad::new(0.0, 0.0, 0.0, 0.0)
        .with_platform(platform.rival(), rival)
        .to_array();
    // Profit is quadratic in own prices x: grad(x) = g0 + H x.
    let g0 = Vector2::from(own_gradient(coef, costs, platform, &base));
    if h.determinant().abs() < 1e-14 {
        return Err(Error::DegenerateBestResponse { op: OP });
    }
    let profit = |x: &Vector2<f64>| {
        let mut p = base;
        p[idx(platform, Side::Worksite)] = x[0];
        p[idx(platform, Side::Commuter)] = x[1];
        raw_profit(coef, costs, platform, &p)
    };

    let mut candidates: Vec<Vector2<f64>> = Vec::with_capacity(4);
    if let Some(inv) = h.try_inverse() {
        candidates.push(-(inv * g0));
    }
    for free in 0..2 {
        // The other coordinate pinned at zero.
        let hjj = h[(free, free)];
        if hjj != 0.0 {
            let mut x = Vector2::zeros();
            x[free] = -g0[free] / hjj;
            candidates.push(x);
        }
    }
    candidates.push(Vector2::zeros());

    let tol: f64 = 1e-12;
    let kkt = |x: &Vector2<f64>| {
        let g = g0 + h * x;
        (0..2).all(|i| {
            if x[i] > 0.0 {
                g[i].abs() <= tol.max(1e-9 * g0[i].abs())
            } else {
                x[i] == 0.0 && g[i] <= tol
            }
        })
    };
    if let Some(x) = candidates.iter().find(|x| x.iter().all(|v| *v >= 0.0) && kkt(x)) {
        return Ok(PricePair::new(x[0], x[1]));
    }
    // Not concave in own prices: fall back to the best nonnegative candidate.
    candidates
        .into_iter()
        .filter(|x| x.iter().all(|v| *v >= 0.0))
        .map(|x| (profit(&x), x))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, x)| PricePair::new(x[0], x[1]))
        .ok_or(Error::DegenerateBestResponse { op: OP })
}

fn raw_profit(coef: &DemandCoefficients, costs: &[f64; 4], platform: Platform, p: &[f64; 4]) -> f64 {
    SIDES
        .iter()
        .map(|&s| {
            let (a, g) = coef.share(platform, s);
            let k = idx(platform, s);
            (a + dot(&g, p)) * (p[k] - costs[k])
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashOptions {
    /// Seed for the best-response cross-check starts.
    pub seed: u64,
    /// Number of random best-response starts; 0 disables the cross-check.
    pub starts: usize,
    /// Points per axis of the deviation grid; 0 skips the deviation check.
    pub deviation_points: usize,
    /// Half-width of the deviation grid around the candidate.
    pub deviation_span: f64,
    pub deviation_tolerance: f64,
    pub best_response_tolerance: f64,
    pub best_response_max_rounds: usize,
}

impl Default for NashOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            starts: 5,
            deviation_points: 101,
            deviation_span: 1.0,
            deviation_tolerance: 1e-6,
            best_response_tolerance: 1e-8,
            best_response_max_rounds: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashDiagnostics {
    pub foc_residual_norm: f64,
    /// Own-price Hessian negative definite, `[W, N]`.
    pub hessian_negdef: [bool; 2],
    pub deviation_gain: f64,
    /// Prices pinned at zero, in `[p_wb, p_nb, p_wc, p_nc]` order.
    pub active_bounds: [bool; 4],
    /// Largest distance between the direct solution and a best-response
    /// limit; `None` when the cross-check is disabled.
    pub best_response_gap: Option<f64>,
    pub best_response_converged: bool,
}

/// KKT residual of the stacked first-order system with nonnegativity.
fn kkt_residual(coef: &DemandCoefficients, costs: &[f64; 4], p: &[f64; 4]) -> f64 {
    let mut worst: f64 = 0.0;
    for platform in [Platform::W, Platform::N] {
        let g = own_gradient(coef, costs, platform, p);
        for (j, &s) in SIDES.iter().enumerate() {
            let k = idx(platform, s);
            let r = if p[k] > 0.0 { g[j].abs() } else { g[j].max(0.0) };
            worst = worst.max(r);
        }
    }
    worst
}

/// Stacked first-order system `M p = rhs` of both platforms.
fn foc_system(coef: &DemandCoefficients, costs: &[f64; 4]) -> (Matrix4<f64>, Vector4<f64>) {
    let mut m = Matrix4::zeros();
    let mut rhs = Vector4::zeros();
    for platform in [Platform::W, Platform::N] {
        for &ks in &SIDES {
            let row = idx(platform, ks);
            let (a, g) = coef.share(platform, ks);
            for c in 0..4 {
                m[(row, c)] += g[c];
            }
            rhs[row] -= a;
            for &s in &SIDES {
                let (_, gs) = coef.share(platform, s);
                let col = idx(platform, s);
                m[(row, col)] += gs[row];
                rhs[row] += gs[row] * costs[col];
            }
        }
    }
    (m, rhs)
}

/// Solves the stacked system with the prices in `pinned` fixed at zero.
fn solve_pattern(m: &Matrix4<f64>, rhs: &Vector4<f64>, pinned: [bool; 4]) -> Option<[f64; 4]> {
    let free: Vec<usize> = (0..4).filter(|i| !pinned[*i]).collect();
    let mut out = [0.0; 4];
    if free.is_empty() {
        return Some(out);
    }
    let n = free.len();
    let sub = nalgebra::DMatrix::from_fn(n, n, |r, c| m[(free[r], free[c])]);
    let b = nalgebra::DVector::from_fn(n, |r, _| rhs[free[r]]);
    let x = sub.lu().solve(&b)?;
    for (i, &k) in free.iter().enumerate() {
        out[k] = x[i];
    }
    Some(out)
}

/// Largest profit gain either platform finds on a grid of own prices around
/// `p`, with the deviator's shares clamped to `[0, 1]`.
fn deviation_check(
    coef: &DemandCoefficients,
    costs: &[f64; 4],
    p: &[f64; 4],
    options: &NashOptions,
) -> Option<Deviation> {
    let n = options.deviation_points.max(2);
    let step = 2.0 * options.deviation_span / (n - 1) as f64;
    let mut best: Option<Deviation> = None;
    for platform in [Platform::W, Platform::N] {
        let kb = idx(platform, Side::Worksite);
        let kc = idx(platform, Side::Commuter);
        let current = clamped_profit(coef, costs, platform, p);
        let found = (0..n)
            .into_par_iter()
            .filter_map(|i| {
                let pb = p[kb] - options.deviation_span + step * i as f64;
                if pb < 0.0 {
                    return None;
                }
                let mut row_best: Option<(f64, PricePair)> = None;
                for j in 0..n {
                    let pc = p[kc] - options.deviation_span + step * j as f64;
                    if pc < 0.0 {
                        continue;
                    }
                    let mut q = *p;
                    q[kb] = pb;
                    q[kc] = pc;
                    let gain = clamped_profit(coef, costs, platform, &q) - current;
                    if row_best.as_ref().is_none_or(|(g, _)| gain > *g) {
                        row_best = Some((gain, PricePair::new(pb, pc)));
                    }
                }
                row_best
            })
            .reduce_with(|a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Equal => {
                    if (b.1.p_b, b.1.p_c) < (a.1.p_b, a.1.p_c) {
                        b
                    } else {
                        a
                    }
                }
            });
        if let Some((gain, prices)) = found {
            if best.as_ref().is_none_or(|d| gain > d.gain) {
                best = Some(Deviation { platform, prices, gain });
            }
        }
    }
    best
}

/// Alternating best-response iteration from `start`.
fn best_response_iteration(
    coef: &DemandCoefficients,
    costs: &[f64; 4],
    start: PriceQuad,
    options: &NashOptions,
) -> Result<(PriceQuad, bool)> {
    let mut p = start;
    for _ in 0..options.best_response_max_rounds {
        let prev = p;
        for platform in [Platform::W, Platform::N] {
            let br = best_response_with(coef, costs, platform, p.platform(platform.rival()))?;
            p = p.with_platform(platform, br);
        }
        if !p.to_array().iter().all(|v| v.is_finite()) {
            return Ok((p, false));
        }
        if p.max_abs_diff(&prev) <= 1e-14 {
            return Ok((p, true));
        }
    }
    Ok((p, false))
}

fn duopoly_loss_leaders(params: &DuopolyParams, prices: PriceQuad) -> Vec<LossLeader> {
    let mut out = Vec::with_capacity(4);
    for platform in [Platform::W, Platform::N] {
        for side in SIDES {
            out.push(LossLeader::new(
                side,
                Some(platform),
                prices.price(platform, side),
                params.cost(platform, side),
            ));
        }
    }
    out
}

/// Assembles an outcome record for a single-homing price quad.
pub(crate) fn duopoly_outcome(
    params: &DuopolyParams,
    prices: PriceQuad,
    diagnostics: Diagnostics,
) -> Result<EquilibriumOutcome> {
    let participation = duopoly_demand(params, prices)?;
    let (profit_w, profit_n) = profits_from(params, prices, &participation);
    let conditions = validate_duopoly(params, Some(&participation))?;
    let mut diagnostics = diagnostics;
    if !participation.valid {
        diagnostics.warnings.push("participation outside [0, 1]".to_string());
    }
    Ok(EquilibriumOutcome {
        market: Market::Duopoly {
            prices,
            participation,
            profit_w,
            profit_n,
        },
        conditions,
        loss_leaders: duopoly_loss_leaders(params, prices),
        diagnostics,
    })
}

/// Nash equilibrium in nonnegative prices of the simultaneous pricing game.
///
/// The stacked first-order system is linear and is solved directly, trying
/// active-bound patterns (prices pinned at zero) from fewest to most until one
/// satisfies the complementarity conditions. The candidate is then verified by
/// its KKT residual, the own-price Hessians and a grid deviation search.
/// Best-response iteration from random starts is run as a cross-check; its
/// outcome is reported in the diagnostics and does not reject the candidate.
pub fn nash_equilibrium(
    params: &DuopolyParams,
    options: &NashOptions,
) -> Result<(EquilibriumOutcome, NashDiagnostics)> {
    const OP: &str = "duopoly::nash_equilibrium";
    gate_b3(OP, params)?;
    let coef = DemandCoefficients::new(params)?;
    let costs = params.cost_quad().to_array();
    let (m, rhs) = foc_system(&coef, &costs);

    let mut patterns: Vec<[bool; 4]> = (0u8..16)
        .map(|bits| std::array::from_fn(|i| bits & (1 << i) != 0))
        .collect();
    patterns.sort_by_key(|p| p.iter().filter(|b| **b).count());

    let mut solution = None;
    let mut any_solved = false;
    for pinned in patterns {
        let Some(p) = solve_pattern(&m, &rhs, pinned) else {
            continue;
        };
        any_solved = true;
        if p.iter().all(|v| *v >= 0.0) && kkt_residual(&coef, &costs, &p) <= 1e-10 {
            solution = Some((p, pinned));
            break;
        }
    }
    let Some((p, active_bounds)) = solution else {
        return Err(if any_solved {
            Error::NegativePriceRegime {
                op: OP,
                reason: "no active-bound pattern satisfies the complementarity conditions".to_string(),
            }
        } else {
            Error::SingularSystem { op: OP }
        });
    };
    let prices = PriceQuad::from_array(p);
    let foc_residual_norm = kkt_residual(&coef, &costs, &p);

    let hessian_negdef = [
        negative_definite(&own_hessian(&coef, Platform::W)),
        negative_definite(&own_hessian(&coef, Platform::N)),
    ];
    let deviation = if options.deviation_points == 0 {
        None
    } else {
        deviation_check(&coef, &costs, &p, options)
    };
    let deviation_gain = deviation.as_ref().map_or(0.0, |d| d.gain.max(0.0));
    if let Some(d) = deviation.filter(|d| d.gain > options.deviation_tolerance) {
        return Err(Error::NotAnEquilibrium {
            op: OP,
            candidate: prices,
            deviation: d,
        });
    }
    if !(hessian_negdef[0] && hessian_negdef[1]) {
        let platform = if hessian_negdef[0] { Platform::N } else { Platform::W };
        return Err(Error::NotAnEquilibrium {
            op: OP,
            candidate: prices,
            deviation: Deviation {
                platform,
                prices: prices.platform(platform),
                gain: deviation_gain,
            },
        });
    }

    let mut best_response_gap = None;
    let mut best_response_converged = true;
    if options.starts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..options.starts {
            let start = PriceQuad::from_array(std::array::from_fn(|_| rng.random_range(0.0..3.0)));
            match best_response_iteration(&coef, &costs, start, options) {
                Ok((limit, converged)) => {
                    best_response_converged &= converged;
                    let gap = limit.max_abs_diff(&prices);
                    worst = if gap.is_nan() { f64::INFINITY } else { worst.max(gap) };
                }
                Err(_) => {
                    best_response_converged = false;
                    worst = f64::INFINITY;
                }
            }
        }
        best_response_gap = Some(worst);
    }

    let mut diagnostics = Diagnostics {
        foc_residual: foc_residual_norm,
        deviation_gain: Some(deviation_gain),
        ..Diagnostics::default()
    };
    if let Some(gap) = best_response_gap {
        if !best_response_converged || gap > options.best_response_tolerance {
            diagnostics.warnings.push(format!(
                "best-response iteration did not reproduce the solution (gap {gap})"
            ));
        }
    }
    let outcome = duopoly_outcome(params, prices, diagnostics)?;
    Ok((
        outcome,
        NashDiagnostics {
            foc_residual_norm,
            hessian_negdef,
            deviation_gain,
            active_bounds,
            best_response_gap,
            best_response_converged,
        },
    ))
}

/// Closed-form equilibrium under identical pricing on both platforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricDuopolyEquilibrium {
    pub p_b: f64,
    pub p_c: f64,
    pub psi_b: f64,
    pub psi_c: f64,
    /// Profit of each platform.
    pub r: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SymmetricDuopolyEquilibrium {
    pub fn prices(&self) -> PriceQuad {
        PriceQuad::symmetric(self.p_b, self.p_c)
    }
}

/// Symmetric closed form. Costs are taken from platform W; a warning is
/// attached when N's costs differ.
pub fn symmetric_equilibrium(params: &DuopolyParams) -> Result<SymmetricDuopolyEquilibrium> {
    const OP: &str = "duopoly::symmetric_equilibrium";
    params.ensure_finite(OP)?;
    let p = params;
    let (ap, am, bp, bm) = (p.alpha_plus(), p.alpha_minus(), p.beta_plus(), p.beta_minus());
    let tt = p.t_b * p.t_c;
    let den = 8.0 * tt - 2.0 * ap * bp;
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::DegenerateDemand {
            op: OP,
            denominator: den / 2.0,
        });
    }
    let psi_b = (2.0 * (bp - ap) * bm * p.t_b + (bp * bp - 4.0 * tt) * am) / den;
    let psi_c = (2.0 * (ap - bp) * am * p.t_c + (ap * ap - 4.0 * tt) * bm) / den;

    let guard_b = p.f_wb + p.t_b + psi_b - bp / 2.0;
    let guard_c = p.f_wc + p.t_c + psi_c - ap / 2.0;
    if guard_b <= 0.0 || guard_c <= 0.0 {
        return Err(Error::NegativePriceRegime {
            op: OP,
            reason: format!("price guards fail (worksite {guard_b}, commuter {guard_c})"),
        });
    }
    let mut warnings = Vec::new();
    if p.f_wb != p.f_nb || p.f_wc != p.f_nc {
        warnings.push("platform costs differ; formula uses W costs".to_string());
    }
    Ok(SymmetricDuopolyEquilibrium {
        p_b: guard_b,
        p_c: guard_c,
        psi_b,
        psi_c,
        r: (p.t_b + p.t_c - (bp + ap) / 2.0 + psi_b + psi_c) / 2.0,
        warnings,
    })
}

/// Incremental utility of multi-homing for one group, at the three agents
/// most tempted to multi-home.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupIncrements {
    /// Every agent prefers W; evaluated at the far end from W.
    pub case_i: f64,
    /// Every agent prefers N; evaluated at the far end from N.
    pub case_i_mirror: f64,
    /// Evaluated at the indifferent agent.
    pub case_ii: f64,
}

impl GroupIncrements {
    /// The increment relevant at W share `share_w`: a corner share selects
    /// the matching case (i), an interior share the indifferent agent.
    pub fn binding(&self, share_w: f64) -> f64 {
        if share_w >= 1.0 {
            self.case_i
        } else if share_w <= 0.0 {
            self.case_i_mirror
        } else {
            self.case_ii
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementalUtilities {
    pub worksite: GroupIncrements,
    pub commuter: GroupIncrements,
}

impl IncrementalUtilities {
    /// The binding worksite and commuter increments plus both indifferent-agent
    /// increments.
    pub fn relevant(&self, participation: &Participation) -> [f64; 4] {
        [
            self.worksite.binding(participation.q_wb),
            self.worksite.case_ii,
            self.commuter.binding(participation.q_wc),
            self.commuter.case_ii,
        ]
    }
}

pub fn multihome_incremental_utility(
    params: &DuopolyParams,
    prices: PriceQuad,
    participation: &Participation,
) -> IncrementalUtilities {
    let (p, q, x) = (params, participation, prices);
    IncrementalUtilities {
        worksite: GroupIncrements {
            case_i: -x.p_nb + p.alpha_n * q.q_nc,
            case_i_mirror: -x.p_wb + p.alpha_w * q.q_wc,
            case_ii: (-x.p_wb - x.p_nb - p.t_b + p.alpha_w * q.q_wc + p.alpha_n * q.q_nc) / 2.0,
        },
        commuter: GroupIncrements {
            case_i: -x.p_nc + p.beta_n * q.q_nb,
            case_i_mirror: -x.p_wc + p.beta_w * q.q_wb,
            case_ii: (-x.p_wc - x.p_nc - p.t_c + p.beta_w * q.q_wb + p.beta_n * q.q_nb) / 2.0,
        },
    }
}

/// Single-homing participation with the Hotelling indifference points clamped
/// to the unit interval, found by fixed-point iteration. Agrees with
/// [`duopoly_demand`] whenever the latter is interior.
pub fn hotelling_participation(params: &DuopolyParams, prices: PriceQuad) -> Result<Participation> {
    const OP: &str = "duopoly::hotelling_participation";
    gate_b3(OP, params)?;
    let (p, x) = (params, prices);
    let mut q_wb = 0.5;
    let mut q_wc = 0.5;
    for _ in 0..10_000 {
        let next_b =
            (0.5 + (x.p_nb - x.p_wb + p.alpha_w * q_wc - p.alpha_n * (1.0 - q_wc)) / (2.0 * p.t_b)).clamp(0.0, 1.0);
        let next_c =
            (0.5 + (x.p_nc - x.p_wc + p.beta_w * next_b - p.beta_n * (1.0 - next_b)) / (2.0 * p.t_c)).clamp(0.0, 1.0);
        let change = (next_b - q_wb).abs().max((next_c - q_wc).abs());
        q_wb = next_b;
        q_wc = next_c;
        if change <= 1e-15 {
            break;
        }
    }
    Ok(Participation::single_homing(q_wb, q_wc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric_example() -> DuopolyParams {
        DuopolyParams {
            alpha_n: 0.65,
            alpha_w: 0.65,
            beta_n: 0.65,
            beta_w: 0.65,
            t_b: 1.1,
            t_c: 1.2,
            f_wb: 0.7,
            f_nb: 0.7,
            f_wc: 0.73,
            f_nc: 0.73,
            u0_b: None,
            u0_c: None,
        }
    }

    #[test]
    fn symmetric_params_split_evenly() {
        let q = duopoly_demand(&symmetric_example(), PriceQuad::symmetric(1.0, 1.3)).unwrap();
        assert!((q.q_wb - 0.5).abs() < 1e-15);
        assert!((q.q_wc - 0.5).abs() < 1e-15);
    }

    #[test]
    fn raising_own_worksite_price_lowers_share_exactly() {
        let p = DuopolyParams::baseline();
        let base = PriceQuad::new(1.0, 1.1, 1.2, 1.3);
        let d = 0.25;
        let q0 = duopoly_demand(&p, base).unwrap();
        let q1 = duopoly_demand(&p, PriceQuad { p_wb: 1.0 + d, ..base }).unwrap();
        let den = 4.0 * p.t_b * p.t_c - p.alpha_plus() * p.beta_plus();
        assert!((q0.q_wb - q1.q_wb - 2.0 * p.t_c * d / den).abs() < 1e-14);
    }

    #[test]
    fn at_cost_profits_vanish() {
        let p = DuopolyParams::baseline();
        let (rw, rn) = duopoly_profits(&p, p.cost_quad()).unwrap();
        assert_eq!((rw, rn), (0.0, 0.0));
    }

    #[test]
    fn worked_symmetric_example() {
        let s = symmetric_equilibrium(&symmetric_example()).unwrap();
        assert_eq!((s.psi_b, s.psi_c), (0.0, 0.0));
        assert!((s.p_b - 1.15).abs() < 1e-12);
        assert!((s.p_c - 1.28).abs() < 1e-12);
        assert!((s.r - 0.5).abs() < 1e-12);
        assert!(s.warnings.is_empty());

        let (out, diag) = nash_equilibrium(&symmetric_example(), &NashOptions::default()).unwrap();
        let prices = out.duopoly_prices().unwrap();
        assert!(prices.max_abs_diff(&s.prices()) < 1e-12);
        assert!((out.profit_w() - 0.5).abs() < 1e-12);
        assert!(diag.deviation_gain <= 1e-6);
        assert!(diag.best_response_gap.unwrap() <= 1e-8);
    }

    #[test]
    fn asymmetric_costs_raise_warning() {
        let s = symmetric_equilibrium(&DuopolyParams::baseline()).unwrap();
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn baseline_nash() {
        let (out, diag) = nash_equilibrium(&DuopolyParams::baseline(), &NashOptions::default()).unwrap();
        let p = out.duopoly_prices().unwrap();
        let expected = PriceQuad::new(1.1433333333, 1.1866666667, 1.3366666667, 1.2433333333);
        assert!(p.max_abs_diff(&expected) < 1e-9, "{p:?}");
        assert!((-0.0675..=0.0854).contains(&out.gap()));
        assert!(diag.foc_residual_norm <= 1e-10);
        assert_eq!(diag.hessian_negdef, [true, true]);
        assert_eq!(diag.active_bounds, [false; 4]);
        assert!(out.diagnostics.warnings.is_empty());
    }

    #[test]
    fn best_response_reproduces_nash() {
        let params = DuopolyParams::baseline();
        let (out, _) = nash_equilibrium(&params, &NashOptions::default()).unwrap();
        let p = out.duopoly_prices().unwrap();
        for platform in [Platform::W, Platform::N] {
            let br = best_response(&params, platform, p.platform(platform.rival())).unwrap();
            let own = p.platform(platform);
            assert!((br.p_b - own.p_b).abs() < 1e-10 && (br.p_c - own.p_c).abs() < 1e-10);
        }
    }

    #[test]
    fn best_response_clamps_at_zero() {
        // Rival gives everything away; a large commuter subsidy would be
        // optimal without the nonnegativity bound.
        let params = DuopolyParams {
            alpha_n: 1.0,
            alpha_w: 1.05,
            f_wc: 0.0,
            ..DuopolyParams::baseline()
        };
        let br = best_response(&params, Platform::W, PricePair::new(0.0, 0.0)).unwrap();
        assert!(br.p_b >= 0.0 && br.p_c >= 0.0);
    }

    #[test]
    fn b3_failure_is_gated() {
        let params = DuopolyParams {
            alpha_n: 2.5,
            alpha_w: 2.5,
            beta_n: 1.2,
            beta_w: 1.2,
            ..DuopolyParams::baseline()
        };
        let err = nash_equilibrium(&params, &NashOptions::default()).unwrap_err();
        assert_eq!(err.class(), crate::error::ErrorClass::Gating);
    }

    #[test]
    fn case_ii_vanishes_on_b2_boundary() {
        let params = DuopolyParams {
            alpha_n: 1.1,
            alpha_w: 1.1,
            ..DuopolyParams::baseline()
        };
        let q = Participation::single_homing(0.5, 0.5);
        let inc = multihome_incremental_utility(&params, PriceQuad::symmetric(0.0, 0.0), &q);
        assert_eq!(inc.worksite.case_ii, 0.0);
    }

    #[test]
    fn hotelling_participation_matches_interior_demand() {
        let params = DuopolyParams::baseline();
        let prices = PriceQuad::new(1.1, 1.2, 1.3, 1.25);
        let a = hotelling_participation(&params, prices).unwrap();
        let b = duopoly_demand(&params, prices).unwrap();
        assert!((a.q_wb - b.q_wb).abs() < 1e-12);
        assert!((a.q_wc - b.q_wc).abs() < 1e-12);
    }
}
