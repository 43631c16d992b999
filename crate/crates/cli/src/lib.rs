//! Front end for the `cspmkt` binary: argument parsing, dispatch to the
//! solvers, output and exit codes.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cspmkt_core::multihome::{DeviationCheck, OneSidedEquilibrium};
use cspmkt_core::{
    constrained_nash, deviation_profit, monopoly_equilibrium, nash_equilibrium, onesided_equilibrium, run_sweep,
    validate_appendix, validate_duopoly, validate_monopoly, AxisKey, AxisSpec, BaseParams, ConditionReport,
    ConstraintSpec, EquilibriumOutcome, ErrorClass, Model, NashDiagnostics, NashOptions, Regime, SweepOptions,
};
use serde::{Deserialize, Serialize};

use config::{parse_config, ConfigError, Format, ModelId, Params, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_GATING: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "cspmkt",
    version,
    about = "Equilibrium prices for commuting-service platforms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form monopoly equilibrium.
    Monopoly(Common),
    /// Nash equilibrium of the single-homing duopoly.
    Duopoly(Common),
    /// Duopoly equilibrium under a participation-gap constraint.
    Constrained(Common),
    /// Equilibrium with multi-homing worksites.
    Multihome(Common),
    /// Two-dimensional parameter sweep of the configured model.
    Sweep(Common),
    /// Print the condition report for the configured parameters.
    Check(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["json", "csv"])]
    format: Option<String>,
    /// Participation-gap bound (constrained model).
    #[arg(long)]
    eta: Option<f64>,
    /// Seed for the best-response cross-check starts.
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep axis, `key:min:max:count`.
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Core(cspmkt_core::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<cspmkt_core::Error> for Failure {
    fn from(e: cspmkt_core::Error) -> Self {
        Failure::Core(e)
    }
}

fn config_error<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Config(format!("cli::main: {}", msg.into())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuopolyReport {
    pub outcome: EquilibriumOutcome,
    pub nash: NashDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultihomeReport {
    pub equilibrium: OneSidedEquilibrium,
    /// Present in the interior regime only.
    pub deviation: Option<DeviationCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub model: String,
    pub reports: Vec<ConditionReport>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Input => EXIT_CONFIG,
                ErrorClass::Solver => EXIT_SOLVER,
                ErrorClass::Gating => {
                    if let Some(report) = e.report() {
                        eprint!("{}", render_report(report));
                    }
                    EXIT_GATING
                }
            }
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("CSPMKT_THREADS") else {
        return Ok(());
    };
    let n: usize = match v.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return config_error(format!("CSPMKT_THREADS must be a positive integer, got `{v}`")),
    };
    // Fails only if a pool already exists (repeated in-process runs).
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    init_threads()?;
    let (name, args) = match &command {
        Command::Monopoly(a) => ("monopoly", a),
        Command::Duopoly(a) => ("duopoly", a),
        Command::Constrained(a) => ("constrained", a),
        Command::Multihome(a) => ("multihome", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Check(a) => ("check", a),
    };
    let text = std::fs::read_to_string(&args.config)
        .or_else(|e| config_error(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = parse_config(&text)?;

    if !matches!(command, Command::Sweep(_)) && (args.x.is_some() || args.y.is_some()) {
        return config_error("--x and --y only apply to sweep");
    }
    if args.eta.is_some() && cfg.model != ModelId::Constrained {
        return config_error("--eta only applies to the constrained model");
    }
    if matches!(name, "monopoly" | "duopoly" | "constrained" | "multihome") && cfg.model.as_str() != name {
        return config_error(format!(
            "subcommand {name} does not match the configured model {}",
            cfg.model.as_str()
        ));
    }

    let format = match &args.format {
        Some(f) => Some(Format::parse(f)?),
        None => cfg.output.format,
    };
    let out = args.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    let nash = NashOptions {
        seed: args.seed.unwrap_or(0),
        ..NashOptions::default()
    };

    let bytes = match command {
        Command::Check(_) => check(&cfg, format)?,
        Command::Sweep(_) => sweep(&cfg, args, &nash, format.unwrap_or(Format::Csv))?,
        _ => solve(&cfg, args, &nash, format.unwrap_or(Format::Json))?,
    };
    match output::emit(out.as_deref(), &bytes) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => config_error(format!("cannot write output: {e}")),
        _ => Ok(()),
    }
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

fn constraint(cfg: &RunConfig, args: &Common) -> Result<ConstraintSpec, Failure> {
    let mut spec = cfg.constraint.unwrap_or(ConstraintSpec::new(f64::NAN));
    if let Some(eta) = args.eta {
        spec.eta = eta;
    }
    if spec.eta.is_nan() {
        return config_error("the constrained model needs eta (config `constraint.eta` or --eta)");
    }
    Ok(spec)
}

fn solve(cfg: &RunConfig, args: &Common, nash: &NashOptions, format: Format) -> Result<Vec<u8>, Failure> {
    match (&cfg.params, cfg.model) {
        (Params::Monopoly(p), _) => {
            let out = monopoly_equilibrium(p)?;
            Ok(match format {
                Format::Json => json(&out),
                Format::Csv => output::outcome_csv(&out, None),
            })
        }
        (Params::Duopoly(p), ModelId::Duopoly) => {
            let (outcome, diag) = nash_equilibrium(p, nash)?;
            Ok(match format {
                Format::Json => json(&DuopolyReport { outcome, nash: diag }),
                Format::Csv => output::outcome_csv(&outcome, None),
            })
        }
        (Params::Duopoly(p), ModelId::Constrained) => {
            let spec = constraint(cfg, args)?;
            let out = constrained_nash(p, &spec)?;
            Ok(match format {
                Format::Json => json(&out),
                Format::Csv => output::outcome_csv(&out, Some(out.gap().abs() <= spec.eta)),
            })
        }
        (Params::Duopoly(p), _) => {
            let equilibrium = onesided_equilibrium(p)?;
            Ok(match format {
                Format::Json => {
                    let deviation = match equilibrium.regime {
                        Regime::Interior => Some(deviation_profit(p)?),
                        Regime::ZeroCommuterPrice => None,
                    };
                    json(&MultihomeReport { equilibrium, deviation })
                }
                Format::Csv => output::outcome_csv(&equilibrium.to_outcome(p), None),
            })
        }
    }
}

fn default_axes(model: ModelId) -> (AxisSpec, AxisSpec) {
    use AxisKey::*;
    match model {
        ModelId::Monopoly => (AxisSpec::new(TB, 0.9, 2.0, 40), AxisSpec::new(TC, 1.0, 2.2, 40)),
        ModelId::Duopoly | ModelId::Constrained => (
            AxisSpec::new(AlphaPlus, 0.9, 2.7, 50),
            AxisSpec::new(AlphaMinus, -0.7, 0.7, 50),
        ),
        ModelId::Multihome => (AxisSpec::new(AlphaN, 0.35, 1.05, 29), AxisSpec::new(TC, 0.6, 1.8, 25)),
    }
}

fn sweep(cfg: &RunConfig, args: &Common, nash: &NashOptions, format: Format) -> Result<Vec<u8>, Failure> {
    let parse = |s: &Option<String>| -> Result<Option<AxisSpec>, Failure> {
        s.as_deref()
            .map(|t| t.parse::<AxisSpec>())
            .transpose()
            .map_err(Failure::Core)
    };
    let (dx, dy) = default_axes(cfg.model);
    let x = parse(&args.x)?.or(cfg.sweep.x).unwrap_or(dx);
    let y = parse(&args.y)?.or(cfg.sweep.y).unwrap_or(dy);
    let model = match cfg.model {
        ModelId::Monopoly => Model::Monopoly,
        ModelId::Duopoly => Model::Duopoly,
        ModelId::Constrained => Model::Constrained(constraint(cfg, args)?),
        ModelId::Multihome => Model::Multihome,
    };
    let base = match cfg.params {
        Params::Monopoly(p) => BaseParams::Monopoly(p),
        Params::Duopoly(p) => BaseParams::Duopoly(p),
    };
    let grid = run_sweep(&model, &base, &x, &y, &SweepOptions { nash: nash.clone() })?;
    Ok(match format {
        Format::Json => json(&grid),
        Format::Csv => output::sweep_csv(&grid),
    })
}

fn check(cfg: &RunConfig, format: Option<Format>) -> Result<Vec<u8>, Failure> {
    let reports = match (&cfg.params, cfg.model) {
        (Params::Monopoly(p), _) => vec![validate_monopoly(p)?],
        (Params::Duopoly(p), ModelId::Multihome) => vec![validate_duopoly(p, None)?, validate_appendix(p, None)?],
        (Params::Duopoly(p), _) => vec![validate_duopoly(p, None)?],
    };
    Ok(match format {
        Some(Format::Json) => json(&CheckReport {
            model: cfg.model.as_str().to_string(),
            reports,
        }),
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["condition", "pass", "margin", "note"])
                .expect("writing to memory");
            for e in reports.iter().flat_map(|r| &r.entries) {
                w.write_record([e.id.as_str(), &e.pass.to_string(), &format!("{}", e.margin), &e.note])
                    .expect("writing to memory");
            }
            w.into_inner().expect("writing to memory")
        }
        None => reports.iter().map(render_report).collect::<String>().into_bytes(),
    })
}

/// Plain-text condition table.
pub fn render_report(report: &ConditionReport) -> String {
    let mut s = String::new();
    for e in &report.entries {
        s.push_str(&format!(
            "{:<14} {:<4} margin {:<24} {}\n",
            e.id.as_str(),
            if e.pass { "pass" } else { "FAIL" },
            format!("{}", e.margin),
            e.note
        ));
    }
    s
}
