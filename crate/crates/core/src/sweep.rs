//! Two-dimensional parameter sweeps over any of the solvers, and threshold
//! detection on the resulting grids.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constrained::{constrained_nash, ConstraintSpec};
use crate::duopoly::{duopoly_outcome, nash_equilibrium, NashOptions};
use crate::error::{Error, Result};
use crate::monopoly::monopoly_equilibrium;
use crate::multihome::onesided_equilibrium;
use crate::types::{Diagnostics, DuopolyParams, EquilibriumOutcome, MonopolyParams, Platform, PriceQuad, Side};

macro_rules! axis_keys {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Canonical parameter names accepted on sweep axes and in configs.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum AxisKey { $($variant),* }

        impl AxisKey {
            pub const ALL: &'static [AxisKey] = &[$(AxisKey::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self { $(AxisKey::$variant => $name),* }
            }
        }
    };
}

axis_keys! {
    U0B => "u0_b",
    U0C => "u0_c",
    BB => "b_b",
    BC => "b_c",
    TB => "t_b",
    TC => "t_c",
    FB => "f_b",
    FC => "f_c",
    AlphaN => "alpha_n",
    AlphaW => "alpha_w",
    BetaN => "beta_n",
    BetaW => "beta_w",
    FWB => "f_wb",
    FNB => "f_nb",
    FWC => "f_wc",
    FNC => "f_nc",
    AlphaPlus => "alpha_plus",
    AlphaMinus => "alpha_minus",
    BetaPlus => "beta_plus",
    BetaMinus => "beta_minus",
    PriceDiffB => "p_nb_minus_p_wb",
    PriceDiffC => "p_nc_minus_p_wc",
    Eta => "eta",
}

impl fmt::Display for AxisKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AxisKey::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidAxis {
                op: "sweep::parse_axis",
                reason: format!("unknown parameter key `{s}`"),
            })
    }
}

impl AxisKey {
    fn valid_for(self, model: &Model) -> bool {
        use AxisKey::*;
        match model {
            Model::Monopoly => matches!(self, U0B | U0C | BB | BC | TB | TC | FB | FC),
            Model::Duopoly => matches!(
                self,
                AlphaN
                    | AlphaW
                    | BetaN
                    | BetaW
                    | TB
                    | TC
                    | FWB
                    | FNB
                    | FWC
                    | FNC
                    | AlphaPlus
                    | AlphaMinus
                    | BetaPlus
                    | BetaMinus
                    | PriceDiffB
                    | PriceDiffC
            ),
            Model::Constrained(_) => self == Eta || self.valid_for(&Model::Duopoly),
            Model::Multihome => matches!(
                self,
                U0B | AlphaN
                    | AlphaW
                    | BetaN
                    | BetaW
                    | TB
                    | TC
                    | FWB
                    | FNB
                    | FWC
                    | FNC
                    | AlphaPlus
                    | AlphaMinus
                    | BetaPlus
                    | BetaMinus
            ),
        }
    }
}

/// `count` evenly spaced values from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub key: AxisKey,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(key: AxisKey, min: f64, max: f64, count: usize) -> Self {
        Self { key, min, max, count }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 || self.min >= self.max || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidAxis {
                op: "sweep::run_sweep",
                reason: format!(
                    "axis {} needs finite min < max and count >= 2 (got {}:{}:{})",
                    self.key, self.min, self.max, self.count
                ),
            });
        }
        Ok(())
    }

    /// The `i`-th value. Computed from the index so that a grid with
    /// `2n - 1` points contains the `n`-point grid exactly.
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.value(i))
    }
}

impl FromStr for AxisSpec {
    type Err = Error;

    /// Parses `key:min:max:count`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidAxis {
            op: "sweep::parse_axis",
            reason,
        };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(bad(format!("expected key:min:max:count, got `{s}`")));
        }
        let key: AxisKey = parts[0].parse()?;
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| bad(format!("`{t}` is not a number in `{s}`")))
        };
        let count = parts[3]
            .parse::<usize>()
            .map_err(|_| bad(format!("`{}` is not a count in `{s}`", parts[3])))?;
        let spec = AxisSpec::new(key, num(parts[1])?, num(parts[2])?, count);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Monopoly,
    Duopoly,
    Constrained(ConstraintSpec),
    Multihome,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Monopoly => "monopoly",
            Model::Duopoly => "duopoly",
            Model::Constrained(_) => "constrained",
            Model::Multihome => "multihome",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseParams {
    Monopoly(MonopolyParams),
    Duopoly(DuopolyParams),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOptions {
    pub nash: NashOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub x_value: f64,
    pub y_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<EquilibriumOutcome>,
    /// Demand-constraint verdict; `None` when no constraint is in force.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible: Option<bool>,
    /// Condition flags such as `B2-sufficient+;B3-proof+`.
    pub cond_flags: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<CellError>,
}

/// Cells in row-major order: `y` is the outer index, `x` the inner one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub model: Model,
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, ix: usize, iy: usize) -> &SweepCell {
        &self.cells[iy * self.x.count + ix]
    }
}

/// Per-cell inputs after applying both axis values to the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellInput {
    pub params: BaseParams,
    pub eta: Option<f64>,
    /// `(p_nb - p_wb, p_nc - p_wc)` when a price-difference axis is present.
    pub price_differences: Option<(f64, f64)>,
}

fn set_duopoly(p: &mut DuopolyParams, key: AxisKey, v: f64) {
    use AxisKey::*;
    match key {
        AlphaN => p.alpha_n = v,
        AlphaW => p.alpha_w = v,
        BetaN => p.beta_n = v,
        BetaW => p.beta_w = v,
        TB => p.t_b = v,
        TC => p.t_c = v,
        FWB => p.f_wb = v,
        FNB => p.f_nb = v,
        FWC => p.f_wc = v,
        FNC => p.f_nc = v,
        U0B => p.u0_b = Some(v),
        _ => {}
    }
}

fn set_monopoly(p: &mut MonopolyParams, key: AxisKey, v: f64) {
    use AxisKey::*;
    match key {
        U0B => p.u0_b = v,
        U0C => p.u0_c = v,
        BB => p.b_b = v,
        BC => p.b_c = v,
        TB => p.t_b = v,
        TC => p.t_c = v,
        FB => p.f_b = v,
        FC => p.f_c = v,
        _ => {}
    }
}

/// Applies axis values to the base parameters. Aggregate/difference keys
/// are translated back to per-platform rates, e.g.
/// `alpha_n = (alpha_plus + alpha_minus) / 2`; an aggregate given without
/// its partner keeps the partner's base value.
pub fn cell_input(model: &Model, base: &BaseParams, axes: &[(AxisKey, f64)]) -> CellInput {
    let mut eta = match model {
        Model::Constrained(spec) => Some(spec.eta),
        _ => None,
    };
    let mut diffs: Option<(f64, f64)> = None;
    let params = match *base {
        BaseParams::Monopoly(mut p) => {
            for &(k, v) in axes {
                set_monopoly(&mut p, k, v);
            }
            BaseParams::Monopoly(p)
        }
        BaseParams::Duopoly(mut p) => {
            let mut alpha = (p.alpha_plus(), p.alpha_minus(), false);
            let mut beta = (p.beta_plus(), p.beta_minus(), false);
            for &(k, v) in axes {
                match k {
                    AxisKey::AlphaPlus => alpha = (v, alpha.1, true),
                    AxisKey::AlphaMinus => alpha = (alpha.0, v, true),
                    AxisKey::BetaPlus => beta = (v, beta.1, true),
                    AxisKey::BetaMinus => beta = (beta.0, v, true),
                    AxisKey::PriceDiffB => diffs = Some((v, diffs.map_or(0.0, |d| d.1))),
                    AxisKey::PriceDiffC => diffs = Some((diffs.map_or(0.0, |d| d.0), v)),
                    AxisKey::Eta => eta = Some(v),
                    _ => set_duopoly(&mut p, k, v),
                }
            }
            if alpha.2 {
                p.alpha_n = (alpha.0 + alpha.1) / 2.0;
                p.alpha_w = (alpha.0 - alpha.1) / 2.0;
            }
            if beta.2 {
                p.beta_n = (beta.0 + beta.1) / 2.0;
                p.beta_w = (beta.0 - beta.1) / 2.0;
            }
            BaseParams::Duopoly(p)
        }
    };
    CellInput {
        params,
        eta,
        price_differences: diffs,
    }
}

fn conflicting(a: AxisKey, b: AxisKey) -> bool {
    use AxisKey::*;
    let group = |k: AxisKey| match k {
        AlphaN | AlphaW => Some(0),
        AlphaPlus | AlphaMinus => Some(1),
        BetaN | BetaW => Some(2),
        BetaPlus | BetaMinus => Some(3),
        _ => None,
    };
    if a == b {
        return true;
    }
    matches!(
        (group(a), group(b)),
        (Some(0), Some(1)) | (Some(1), Some(0)) | (Some(2), Some(3)) | (Some(3), Some(2))
    )
}

fn solve_cell(model: &Model, input: &CellInput, options: &SweepOptions) -> Result<EquilibriumOutcome> {
    const OP: &str = "sweep::run_sweep";
    match (model, input.params) {
        (Model::Monopoly, BaseParams::Monopoly(p)) => monopoly_equilibrium(&p),
        (Model::Duopoly | Model::Constrained(_), BaseParams::Duopoly(p)) if input.price_differences.is_some() => {
            let (db, dc) = input.price_differences.unwrap_or_default();
            let prices = PriceQuad::new(p.f_wb, p.f_wb + db, p.f_wc, p.f_wc + dc);
            duopoly_outcome(
                &p,
                prices,
                Diagnostics {
                    eta: input.eta,
                    ..Diagnostics::default()
                },
            )
        }
        (Model::Duopoly, BaseParams::Duopoly(p)) => nash_equilibrium(&p, &options.nash).map(|(o, _)| o),
        (Model::Constrained(spec), BaseParams::Duopoly(p)) => {
            let spec = ConstraintSpec {
                eta: input.eta.unwrap_or(spec.eta),
                ..*spec
            };
            constrained_nash(&p, &spec)
        }
        (Model::Multihome, BaseParams::Duopoly(p)) => onesided_equilibrium(&p).map(|e| e.to_outcome(&p)),
        (m, _) => Err(Error::InvalidParameter {
            op: OP,
            reason: format!("parameter set does not match model {}", m.name()),
        }),
    }
}

/// Evaluates `model` at every `(x, y)` grid point. Failed cells carry an
/// error code instead of an outcome; the sweep itself only fails on invalid
/// axes or when every cell fails.
pub fn run_sweep(
    model: &Model,
    base: &BaseParams,
    x: &AxisSpec,
    y: &AxisSpec,
    options: &SweepOptions,
) -> Result<SweepGrid> {
    const OP: &str = "sweep::run_sweep";
    x.validate()?;
    y.validate()?;
    for axis in [x, y] {
        if !axis.key.valid_for(model) {
            return Err(Error::InvalidAxis {
                op: OP,
                reason: format!("key {} is not a {} parameter", axis.key, model.name()),
            });
        }
    }
    if conflicting(x.key, y.key) {
        return Err(Error::InvalidAxis {
            op: OP,
            reason: format!("axes {} and {} set the same parameters", x.key, y.key),
        });
    }

    let n = x.count * y.count;
    let cells: Vec<SweepCell> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (ix, iy) = (k % x.count, k / x.count);
            let (xv, yv) = (x.value(ix), y.value(iy));
            let input = cell_input(model, base, &[(x.key, xv), (y.key, yv)]);
            match solve_cell(model, &input, options) {
                Ok(outcome) => SweepCell {
                    x_value: xv,
                    y_value: yv,
                    feasible: input.eta.map(|eta| outcome.gap().abs() <= eta),
                    cond_flags: outcome.conditions.flags(),
                    outcome: Some(outcome),
                    error: None,
                },
                Err(e) => SweepCell {
                    x_value: xv,
                    y_value: yv,
                    outcome: None,
                    feasible: None,
                    cond_flags: e.report().map(|r| r.flags()).unwrap_or_default(),
                    error: Some(CellError {
                        code: e.code().to_string(),
                        message: e.to_string(),
                    }),
                },
            }
        })
        .collect();
    if cells.iter().all(|c| c.error.is_some()) {
        return Err(Error::AllCellsFailed { op: OP });
    }
    Ok(SweepGrid {
        model: *model,
        x: *x,
        y: *y,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    /// Price below cost on `side` (of `platform`, or the monopoly platform).
    PriceBelowCost { side: Side, platform: Option<Platform> },
    /// Profit (of `platform`, or the monopoly platform) below `value`.
    ProfitLevel { value: f64, platform: Option<Platform> },
}

impl Predicate {
    /// Signed quantity whose sign decides the predicate (negative = holds).
    fn quantity(&self, outcome: &EquilibriumOutcome) -> Option<f64> {
        match *self {
            Predicate::PriceBelowCost { side, platform } => outcome
                .loss_leaders
                .iter()
                .find(|l| l.side == side && l.platform == platform)
                .map(|l| l.margin),
            Predicate::ProfitLevel { value, platform } => {
                let r = match platform {
                    None | Some(Platform::W) => outcome.profit_w(),
                    Some(Platform::N) => outcome.profit_n()?,
                };
                Some(r - value)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Axis along which the predicate flips.
    pub axis: Axis,
    /// Interpolated value on that axis.
    pub at: f64,
    /// Value of the other axis.
    pub other: f64,
}

fn interpolate(a: f64, qa: f64, b: f64, qb: f64) -> f64 {
    if qa == qb {
        a
    } else {
        a + (b - a) * qa / (qa - qb)
    }
}

/// Locations where the predicate flips between adjacent cells, linearly
/// interpolated on the quantity behind the predicate. Failed cells are
/// skipped.
pub fn find_threshold(grid: &SweepGrid, predicate: &Predicate) -> Vec<Crossing> {
    let q = |ix: usize, iy: usize| grid.cell(ix, iy).outcome.as_ref().and_then(|o| predicate.quantity(o));
    let mut out = Vec::new();
    for iy in 0..grid.y.count {
        for ix in 0..grid.x.count - 1 {
            if let (Some(a), Some(b)) = (q(ix, iy), q(ix + 1, iy)) {
                if (a < 0.0) != (b < 0.0) {
                    out.push(Crossing {
                        axis: Axis::X,
                        at: interpolate(grid.x.value(ix), a, grid.x.value(ix + 1), b),
                        other: grid.y.value(iy),
                    });
                }
            }
        }
    }
    for ix in 0..grid.x.count {
        for iy in 0..grid.y.count - 1 {
            if let (Some(a), Some(b)) = (q(ix, iy), q(ix, iy + 1)) {
                if (a < 0.0) != (b < 0.0) {
                    out.push(Crossing {
                        axis: Axis::Y,
                        at: interpolate(grid.y.value(iy), a, grid.y.value(iy + 1), b),
                        other: grid.x.value(ix),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a: AxisSpec = "alpha_plus:0.9:2.7:50".parse().unwrap();
        assert_eq!(a.key, AxisKey::AlphaPlus);
        assert_eq!(a.count, 50);
        assert_eq!(a.value(0), 0.9);
        assert_eq!(a.value(49), 2.7);
        assert!("gamma:0:1:3".parse::<AxisSpec>().is_err());
        assert!("t_b:1:0:3".parse::<AxisSpec>().is_err());
        assert!("t_b:0:1:1".parse::<AxisSpec>().is_err());
        assert!("t_b:0:1".parse::<AxisSpec>().is_err());
    }

    #[test]
    fn half_resolution_axis_is_a_subset() {
        let fine = AxisSpec::new(AxisKey::TB, 0.9, 2.0, 41);
        let coarse = AxisSpec::new(AxisKey::TB, 0.9, 2.0, 21);
        for i in 0..21 {
            assert_eq!(coarse.value(i).to_bits(), fine.value(2 * i).to_bits());
        }
    }

    #[test]
    fn derived_alpha_axes() {
        let base = BaseParams::Duopoly(DuopolyParams::baseline());
        let input = cell_input(
            &Model::Duopoly,
            &base,
            &[(AxisKey::AlphaPlus, 2.0), (AxisKey::AlphaMinus, -0.5)],
        );
        let BaseParams::Duopoly(p) = input.params else { panic!() };
        assert_eq!((p.alpha_n, p.alpha_w), (0.75, 1.25));
        assert_eq!(p.alpha_plus(), 2.0);
        assert_eq!(p.alpha_minus(), -0.5);
    }

    #[test]
    fn wrong_model_keys_are_rejected() {
        let base = BaseParams::Monopoly(MonopolyParams::baseline());
        let x = AxisSpec::new(AxisKey::AlphaPlus, 0.9, 2.7, 3);
        let y = AxisSpec::new(AxisKey::TC, 1.0, 2.0, 3);
        let err = run_sweep(&Model::Monopoly, &base, &x, &y, &SweepOptions::default()).unwrap_err();
        assert_eq!(err.code(), "invalid-axis");
        let base = BaseParams::Duopoly(DuopolyParams::baseline());
        let x = AxisSpec::new(AxisKey::AlphaPlus, 0.9, 2.7, 3);
        let y = AxisSpec::new(AxisKey::AlphaN, 0.1, 0.5, 3);
        assert!(run_sweep(&Model::Duopoly, &base, &x, &y, &SweepOptions::default()).is_err());
    }

    #[test]
    fn failed_cells_are_kept() {
        let base = BaseParams::Monopoly(MonopolyParams::baseline());
        let x = AxisSpec::new(AxisKey::BB, 0.5, 3.0, 6);
        let y = AxisSpec::new(AxisKey::TC, 1.0, 1.5, 2);
        let g = run_sweep(&Model::Monopoly, &base, &x, &y, &SweepOptions::default()).unwrap();
        assert_eq!(g.cells.len(), 12);
        let failed = g.cells.iter().filter(|c| c.error.is_some()).count();
        assert!(failed > 0 && failed < 12);
        for c in g.cells.iter().filter(|c| c.error.is_some()) {
            assert_eq!(c.error.as_ref().unwrap().code, "non-concave-profit");
            assert!(c.cond_flags.contains("A1-"));
        }
    }

    #[test]
    fn constant_grid_has_no_crossings() {
        let base = BaseParams::Monopoly(MonopolyParams::baseline());
        // f_b does not affect the commuter margin sign here.
        let x = AxisSpec::new(AxisKey::U0C, 2.0, 2.1, 3);
        let y = AxisSpec::new(AxisKey::U0B, 1.8, 1.9, 2);
        let g = run_sweep(&Model::Monopoly, &base, &x, &y, &SweepOptions::default()).unwrap();
        let pred = Predicate::PriceBelowCost {
            side: Side::Commuter,
            platform: None,
        };
        assert!(find_threshold(&g, &pred).is_empty());
    }

    #[test]
    fn interpolation_is_linear() {
        assert_eq!(interpolate(1.0, -1.0, 2.0, 1.0), 1.5);
        assert_eq!(interpolate(0.0, 0.25, 1.0, -0.75), 0.25);
    }
}
