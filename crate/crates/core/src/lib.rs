//! Pricing models for commuter-service platforms that connect worksites and
//! commuters: a monopoly platform, a single-homing duopoly (unconstrained and
//! demand-constrained), a duopoly where one side multi-homes, and parameter
//! sweeps over all of them.

pub mod conditions;
pub mod constrained;
pub mod duopoly;
pub mod error;
pub mod monopoly;
pub mod multihome;
pub mod sweep;
pub mod types;

pub use conditions::{validate_duopoly, validate_monopoly, ConditionEntry, ConditionId, ConditionReport};
pub use constrained::{constrained_nash, feasible, feasible_region, ConstraintSpec, FeasibleCell, PriceGrid};
pub use duopoly::{
    best_response, duopoly_demand, duopoly_profits, multihome_incremental_utility, nash_equilibrium,
    symmetric_equilibrium, NashDiagnostics, NashOptions, SymmetricDuopolyEquilibrium,
};
pub use error::{Error, ErrorClass, Result};
pub use monopoly::{
    benchmark_solve, lerner_residuals, loss_leader, monopoly_demand, monopoly_equilibrium, monopoly_profit,
    BenchmarkSolution, FixedPointOptions, LinearDemandCurve,
};
pub use multihome::{
    commuter_share_config1, config_consistency, deviation_profit, onesided_equilibrium, overlap_symmetric,
    validate_appendix, Configuration, OneSidedEquilibrium, Regime,
};
pub use sweep::{find_threshold, run_sweep, AxisKey, AxisSpec, BaseParams, Model, Predicate, SweepGrid, SweepOptions};
pub use types::*;
