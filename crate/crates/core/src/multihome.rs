//! Duopoly where worksites may join both platforms: demand configurations,
//! their consistency, and the equilibrium with one-sided network effects.

use serde::{Deserialize, Serialize};

use crate::conditions::{ConditionEntry, ConditionId, ConditionReport};
use crate::error::{Error, Result};
use crate::types::{
    Diagnostics, DuopolyParams, EquilibriumOutcome, LossLeader, Market, Participation, Platform, PriceQuad, Side,
};

/// Worksite demand configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Configuration {
    /// Worksites join both platforms.
    Multihome,
    /// Worksites join only W.
    SingleHomeW,
    /// Worksites join only N.
    SingleHomeN,
    /// Worksites join neither platform.
    JoinNeither,
}

impl Configuration {
    pub const ALL: [Configuration; 4] = [
        Configuration::Multihome,
        Configuration::SingleHomeW,
        Configuration::SingleHomeN,
        Configuration::JoinNeither,
    ];

    pub fn id(self) -> u8 {
        match self {
            Configuration::Multihome => 1,
            Configuration::SingleHomeW => 2,
            Configuration::SingleHomeN => 3,
            Configuration::JoinNeither => 4,
        }
    }

    /// Worksite participation `(Q_b, q_wb, q_nb)`.
    pub fn worksite_participation(self) -> (f64, f64, f64) {
        match self {
            Configuration::Multihome => (1.0, 0.0, 0.0),
            Configuration::SingleHomeW => (0.0, 1.0, 0.0),
            Configuration::SingleHomeN => (0.0, 0.0, 1.0),
            Configuration::JoinNeither => (0.0, 0.0, 0.0),
        }
    }

    /// Raw (unclamped) commuter share of W under this configuration.
    pub fn commuter_share(self, params: &DuopolyParams, prices: PriceQuad) -> f64 {
        let p = params;
        let diff = prices.p_nc - prices.p_wc;
        let shift = match self {
            Configuration::Multihome | Configuration::JoinNeither => p.beta_w - p.beta_n,
            Configuration::SingleHomeW => p.beta_w,
            Configuration::SingleHomeN => -p.beta_n,
        };
        0.5 + (diff + shift) / (2.0 * p.t_c)
    }
}

fn ensure_commuter_rate(op: &'static str, params: &DuopolyParams) -> Result<()> {
    params.ensure_finite(op)?;
    if params.t_c > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            op,
            reason: format!("t_c must be positive, got {}", params.t_c),
        })
    }
}

/// Conditions C1 to C3. `C2ii` uses `participation` when given, otherwise
/// the all-multi-homing worksite configuration (no single-homing worksites).
///
/// C3 is evaluated literally: `f_wb < alpha_w / 3` and
/// `f_wc, f_nc < 3 alpha_w / 4`, with `alpha_w` in both bounds.
pub fn validate_appendix(params: &DuopolyParams, participation: Option<&Participation>) -> Result<ConditionReport> {
    params.ensure_finite("multihome::validate_appendix")?;
    let p = params;
    let mut report = ConditionReport::default();
    report.push(match p.u0_b {
        Some(u) => ConditionEntry::equality(ConditionId::C1, u, "u0_b = 0"),
        None => ConditionEntry {
            id: ConditionId::C1,
            margin: f64::NEG_INFINITY,
            pass: false,
            note: "u0_b = 0 (u0_b not given)".to_string(),
        },
    });
    report.push(ConditionEntry::equality(ConditionId::C2i, p.t_b, "t_b = 0"));
    let (q_nb, q_wb) = participation.map_or((0.0, 0.0), |q| (q.q_nb, q.q_wb));
    report.push(ConditionEntry::strict(
        ConditionId::C2ii,
        p.t_c - (p.beta_n * q_nb + p.beta_w * q_wb),
        "t_c > beta_n q_nb + beta_w q_wb",
    ));
    let worksite = p.alpha_w / 3.0 - p.f_wb;
    let commuter = (0.75 * p.alpha_w - p.f_wc).min(0.75 * p.alpha_w - p.f_nc);
    report.push(ConditionEntry::strict(
        ConditionId::C3,
        worksite.min(commuter),
        format!("alpha_w/3 - f_wb = {worksite}; min_i 3 alpha_w/4 - f_ic = {commuter}; both bounds use alpha_w only"),
    ));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommuterShare {
    /// Share clamped to `[0, 1]`.
    pub q_wc: f64,
    pub raw: f64,
    pub clamped: bool,
}

/// Commuter share of W when all worksites multi-home.
pub fn commuter_share_config1(params: &DuopolyParams, prices: PriceQuad) -> Result<CommuterShare> {
    ensure_commuter_rate("multihome::commuter_share_config1", params)?;
    let raw = Configuration::Multihome.commuter_share(params, prices);
    let q_wc = raw.clamp(0.0, 1.0);
    Ok(CommuterShare {
        q_wc,
        raw,
        clamped: q_wc != raw,
    })
}

/// Right-hand sides of the two multi-homing inequalities,
/// `p_wb <= bound_w` and `p_nb <= bound_n`.
fn config1_bounds(params: &DuopolyParams, prices: PriceQuad) -> (f64, f64) {
    let p = params;
    let x = prices;
    (
        (0.5 + (x.p_nc - x.p_wc + p.beta_w - p.beta_n) / (2.0 * p.t_c)) * p.alpha_w,
        (0.5 + (x.p_wc - x.p_nc + p.beta_n - p.beta_w) / (2.0 * p.t_c)) * p.alpha_n,
    )
}

/// Configurations whose defining inequalities hold at `prices` (weak
/// inequalities; indifferent worksites join).
pub fn config_consistency(params: &DuopolyParams, prices: PriceQuad) -> Result<Vec<Configuration>> {
    ensure_commuter_rate("multihome::config_consistency", params)?;
    let p = params;
    let x = prices;
    let t2 = 2.0 * p.t_c;
    let (w1, n1) = config1_bounds(params, prices);
    let mut out = Vec::new();
    if x.p_wb <= w1 && x.p_nb <= n1 {
        out.push(Configuration::Multihome);
    }
    if x.p_wb <= (0.5 + (x.p_nc - x.p_wc + p.beta_w) / t2) * p.alpha_w
        && x.p_nb >= (0.5 + (x.p_wc - x.p_nc - p.beta_w) / t2) * p.alpha_n
    {
        out.push(Configuration::SingleHomeW);
    }
    if x.p_wb >= (0.5 + (x.p_nc - x.p_wc - p.beta_n) / t2) * p.alpha_w
        && x.p_nb <= (0.5 + (x.p_wc - x.p_nc + p.beta_n) / t2) * p.alpha_n
    {
        out.push(Configuration::SingleHomeN);
    }
    if x.p_wb >= w1 && x.p_nb >= n1 {
        out.push(Configuration::JoinNeither);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapClass {
    /// Prices where configurations 1, 2 and 3 all hold.
    pub interval_a: Interval,
    /// Prices where configurations 2, 3 and 4 all hold.
    pub interval_b: Interval,
    pub in_a: bool,
    pub in_b: bool,
}

/// Overlap of configurations when both platforms charge `p_b` to worksites
/// and `p_c` to commuters. The commuter price cancels out.
pub fn overlap_symmetric(params: &DuopolyParams, p_b: f64, p_c: f64) -> Result<OverlapClass> {
    ensure_commuter_rate("multihome::overlap_symmetric", params)?;
    let _ = p_c;
    let p = params;
    let t2 = 2.0 * p.t_c;
    let cfg1_w = (0.5 + (p.beta_w - p.beta_n) / t2) * p.alpha_w;
    let cfg1_n = (0.5 + (p.beta_n - p.beta_w) / t2) * p.alpha_n;
    let interval_a = Interval {
        lo: ((0.5 - p.beta_n / t2) * p.alpha_n).max((0.5 - p.beta_n / t2) * p.alpha_w),
        hi: cfg1_w.min(cfg1_n),
    };
    let interval_b = Interval {
        lo: cfg1_w.max(cfg1_n),
        hi: ((0.5 + p.beta_w / t2) * p.alpha_w).min((0.5 + p.beta_n / t2) * p.alpha_n),
    };
    Ok(OverlapClass {
        interval_a,
        interval_b,
        in_a: interval_a.contains(p_b),
        in_b: interval_b.contains(p_b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Interior,
    ZeroCommuterPrice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneSidedEquilibrium {
    pub regime: Regime,
    pub prices: PriceQuad,
    pub profit_w: f64,
    pub profit_n: f64,
    /// Commuter share of W at the returned prices (Hotelling formula).
    pub q_wc: f64,
    /// Margins of the two regime conditions (nonnegative for the interior regime).
    pub regime_margins: [f64; 2],
    pub conditions: ConditionReport,
}

impl OneSidedEquilibrium {
    pub fn to_outcome(&self, params: &DuopolyParams) -> EquilibriumOutcome {
        let mut loss_leaders = Vec::with_capacity(4);
        for platform in [Platform::W, Platform::N] {
            for side in [Side::Worksite, Side::Commuter] {
                loss_leaders.push(LossLeader::new(
                    side,
                    Some(platform),
                    self.prices.price(platform, side),
                    params.cost(platform, side),
                ));
            }
        }
        EquilibriumOutcome {
            market: Market::Duopoly {
                prices: self.prices,
                participation: Participation::worksites_multihome(self.q_wc),
                profit_w: self.profit_w,
                profit_n: self.profit_n,
            },
            conditions: self.conditions.clone(),
            loss_leaders,
            diagnostics: Diagnostics::default(),
        }
    }
}

fn regime_margins(p: &DuopolyParams) -> [f64; 2] {
    [
        p.f_nc / 3.0 + 2.0 * p.f_wc / 3.0 + p.t_c - (p.alpha_n / 3.0 + 2.0 * p.alpha_w / 3.0),
        2.0 * p.f_nc / 3.0 + p.f_wc / 3.0 + p.t_c - (2.0 * p.alpha_n / 3.0 + p.alpha_w / 3.0),
    ]
}

fn select_regime(op: &'static str, margins: [f64; 2]) -> Result<Regime> {
    match (margins[0] >= 0.0, margins[1] >= 0.0) {
        (true, true) => Ok(Regime::Interior),
        (false, false) => Ok(Regime::ZeroCommuterPrice),
        _ => Err(Error::AmbiguousRegime {
            op,
            first: margins[0],
            second: margins[1],
        }),
    }
}

fn check_onesided(op: &'static str, params: &DuopolyParams) -> Result<ConditionReport> {
    ensure_commuter_rate(op, params)?;
    if params.beta_w != 0.0 || params.beta_n != 0.0 {
        return Err(Error::Precondition {
            op,
            reason: format!(
                "commuter cross-side rates must be zero (beta_w {}, beta_n {})",
                params.beta_w, params.beta_n
            ),
        });
    }
    let report = validate_appendix(params, None)?;
    let failing: Vec<&str> = report
        .entries
        .iter()
        .filter(|e| !e.pass)
        .map(|e| e.id.as_str())
        .collect();
    if !failing.is_empty() {
        return Err(Error::Precondition {
            op,
            reason: format!("conditions fail: {}", failing.join(", ")),
        });
    }
    Ok(report)
}

/// Equilibrium with multi-homing worksites and single-homing commuters when
/// commuters gain nothing from worksites. Worksite prices extract the full
/// worksite surplus; commuter prices are interior or pinned at zero
/// depending on the regime.
pub fn onesided_equilibrium(params: &DuopolyParams) -> Result<OneSidedEquilibrium> {
    const OP: &str = "multihome::onesided_equilibrium";
    let conditions = check_onesided(OP, params)?;
    let p = params;
    let margins = regime_margins(p);
    let regime = select_regime(OP, margins)?;

    // W's commuter share implied by the interior commuter prices.
    let x = p.f_nc - p.f_wc - p.alpha_minus();
    let share_w = 0.5 + x / (6.0 * p.t_c);
    let share_n = 0.5 - x / (6.0 * p.t_c);
    let p_wb = share_w * p.alpha_w;
    let p_nb = share_n * p.alpha_n;

    let (p_wc, p_nc, profit_w, profit_n) = match regime {
        Regime::Interior => (
            (p.f_nc - p.alpha_n) / 3.0 + 2.0 * (p.f_wc - p.alpha_w) / 3.0 + p.t_c,
            2.0 * (p.f_nc - p.alpha_n) / 3.0 + (p.f_wc - p.alpha_w) / 3.0 + p.t_c,
            -p.f_wb + share_w * (x / 3.0 + p.t_c),
            -p.f_nb + share_n * (-x / 3.0 + p.t_c),
        ),
        Regime::ZeroCommuterPrice => (
            0.0,
            0.0,
            -p.f_wb + share_w * (p.alpha_w - p.f_wc),
            -p.f_nb + share_n * (p.alpha_n - p.f_nc),
        ),
    };
    let prices = PriceQuad::new(p_wb, p_nb, p_wc, p_nc);
    Ok(OneSidedEquilibrium {
        regime,
        prices,
        profit_w,
        profit_n,
        q_wc: Configuration::Multihome.commuter_share(params, prices),
        regime_margins: margins,
        conditions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationCheck {
    /// W's best profit when it stops serving worksites.
    pub deviation_profit: f64,
    pub equilibrium_profit: f64,
    /// Serving worksites is strictly better.
    pub dominates: bool,
    /// Margin of the positive-profit guard for the deviation.
    pub guard_margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Compares W's equilibrium profit with its best profit from serving
/// commuters only, in the interior regime.
pub fn deviation_profit(params: &DuopolyParams) -> Result<DeviationCheck> {
    const OP: &str = "multihome::deviation_profit";
    let eq = onesided_equilibrium(params)?;
    if eq.regime != Regime::Interior {
        return Err(Error::Precondition {
            op: OP,
            reason: "requires the interior regime".to_string(),
        });
    }
    let p = params;
    let guard_margin = p.t_c - ((p.f_wc - p.f_nc) / 3.0 + p.alpha_w / 6.0 + p.alpha_n / 3.0);
    let s = 2.0 * p.alpha_n + p.alpha_w - 2.0 * p.f_nc + 2.0 * p.f_wc - 6.0 * p.t_c;
    let deviation = s * s / (72.0 * p.t_c);
    Ok(DeviationCheck {
        deviation_profit: deviation,
        equilibrium_profit: eq.profit_w,
        dominates: deviation < eq.profit_w,
        guard_margin,
        note: (guard_margin <= 0.0).then(|| "deviation cannot price above cost; it is unprofitable anyway".to_string()),
    })
}
