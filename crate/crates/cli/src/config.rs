//! Run configuration read from a JSON document.

use std::collections::BTreeMap;
use std::fmt;

use cspmkt_core::{AxisSpec, ConstraintSpec, DuopolyParams, MonopolyParams, PriceGrid};
use serde::Deserialize;
use serde_json::Value;

const OP: &str = "cli::parse_config";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{OP}: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelId {
    Monopoly,
    Duopoly,
    Constrained,
    Multihome,
}

impl ModelId {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Monopoly => "monopoly",
            ModelId::Duopoly => "duopoly",
            ModelId::Constrained => "constrained",
            ModelId::Multihome => "multihome",
        }
    }

    fn parse(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "monopoly" => ModelId::Monopoly,
            "duopoly" => ModelId::Duopoly,
            "constrained" => ModelId::Constrained,
            "multihome" => ModelId::Multihome,
            other => {
                return err(format!(
                    "unknown model `{other}` (expected monopoly, duopoly, constrained or multihome)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Monopoly(MonopolyParams),
    Duopoly(DuopolyParams),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepConfig {
    pub x: Option<AxisSpec>,
    pub y: Option<AxisSpec>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelId,
    pub params: Params,
    pub constraint: Option<ConstraintSpec>,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: String,
    params: BTreeMap<String, f64>,
    #[serde(default)]
    constraint: Option<RawConstraint>,
    #[serde(default)]
    sweep: Option<RawSweep>,
    #[serde(default)]
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    eta: Option<f64>,
    #[serde(default)]
    grid: Option<PriceGrid>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    x: Option<String>,
    y: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<String>,
    format: Option<String>,
}

const MONOPOLY_KEYS: [&str; 8] = ["u0_b", "u0_c", "b_b", "b_c", "t_b", "t_c", "f_b", "f_c"];
const DUOPOLY_REQUIRED: [&str; 6] = ["t_b", "t_c", "f_wb", "f_nb", "f_wc", "f_nc"];
const DUOPOLY_OPTIONAL: [&str; 2] = ["u0_b", "u0_c"];
/// Each pair may be given per platform or as aggregate and difference.
const RATE_PAIRS: [([&str; 2], [&str; 2]); 2] = [
    (["alpha_n", "alpha_w"], ["alpha_plus", "alpha_minus"]),
    (["beta_n", "beta_w"], ["beta_plus", "beta_minus"]),
];

/// Parses and validates a configuration document. Model parameters have no
/// defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return err(format!("invalid JSON: {e}")),
    };
    let Some(obj) = value.as_object() else {
        return err("configuration must be a JSON object");
    };
    let missing: Vec<&str> = ["model", "params"]
        .into_iter()
        .filter(|k| !obj.contains_key(*k))
        .collect();
    if !missing.is_empty() {
        return err(format!("missing required keys: {}", missing.join(", ")));
    }
    let raw: RawConfig = serde_json::from_value(value).or_else(|e| err(e.to_string()))?;
    let model = ModelId::parse(&raw.model)?;
    let params = build_params(model, &raw.params)?;

    let constraint = match raw.constraint {
        None => None,
        Some(c) => {
            if model != ModelId::Constrained {
                return err(format!(
                    "key `constraint` is only valid for model constrained, not {}",
                    model.as_str()
                ));
            }
            Some(ConstraintSpec {
                eta: c.eta.unwrap_or(f64::NAN),
                grid: c.grid.unwrap_or_default(),
            })
        }
    };

    let sweep = match raw.sweep {
        None => SweepConfig::default(),
        Some(s) => {
            let axis = |t: Option<String>| -> Result<Option<AxisSpec>, ConfigError> {
                t.map(|t| t.parse::<AxisSpec>().map_err(|e| ConfigError(e.to_string())))
                    .transpose()
            };
            SweepConfig {
                x: axis(s.x)?,
                y: axis(s.y)?,
            }
        }
    };

    let output = match raw.output {
        None => OutputConfig::default(),
        Some(o) => OutputConfig {
            path: o.path,
            format: o.format.as_deref().map(Format::parse).transpose()?,
        },
    };

    Ok(RunConfig {
        model,
        params,
        constraint,
        sweep,
        output,
    })
}

fn build_params(model: ModelId, map: &BTreeMap<String, f64>) -> Result<Params, ConfigError> {
    let get = |k: &str| map.get(k).copied();
    match model {
        ModelId::Monopoly => {
            check_keys(model, map, &MONOPOLY_KEYS, &[])?;
            let v = |k: &str| get(k).expect("checked above");
            Ok(Params::Monopoly(MonopolyParams {
                u0_b: v("u0_b"),
                u0_c: v("u0_c"),
                b_b: v("b_b"),
                b_c: v("b_c"),
                t_b: v("t_b"),
                t_c: v("t_c"),
                f_b: v("f_b"),
                f_c: v("f_c"),
            }))
        }
        _ => {
            let mut required: Vec<&str> = DUOPOLY_REQUIRED.to_vec();
            for (direct, aggregate) in RATE_PAIRS {
                let has_direct = direct.iter().any(|k| map.contains_key(*k));
                let has_aggregate = aggregate.iter().any(|k| map.contains_key(*k));
                if has_direct && has_aggregate {
                    return err(format!(
                        "give either {} or {}, not both",
                        direct.join("/"),
                        aggregate.join("/")
                    ));
                }
                required.extend(if has_aggregate { aggregate } else { direct });
            }
            check_keys(model, map, &required, &DUOPOLY_OPTIONAL)?;
            let v = |k: &str| get(k).expect("checked above");
            let rates = |i: usize| {
                let (direct, aggregate) = RATE_PAIRS[i];
                if map.contains_key(direct[0]) {
                    (v(direct[0]), v(direct[1]))
                } else {
                    let (plus, minus) = (v(aggregate[0]), v(aggregate[1]));
                    ((plus + minus) / 2.0, (plus - minus) / 2.0)
                }
            };
            let (alpha_n, alpha_w) = rates(0);
            let (beta_n, beta_w) = rates(1);
            Ok(Params::Duopoly(DuopolyParams {
                alpha_n,
                alpha_w,
                beta_n,
                beta_w,
                t_b: v("t_b"),
                t_c: v("t_c"),
                f_wb: v("f_wb"),
                f_nb: v("f_nb"),
                f_wc: v("f_wc"),
                f_nc: v("f_nc"),
                u0_b: get("u0_b"),
                u0_c: get("u0_c"),
            }))
        }
    }
}

fn check_keys(
    model: ModelId,
    map: &BTreeMap<String, f64>,
    required: &[&str],
    optional: &[&str],
) -> Result<(), ConfigError> {
    let unknown: Vec<&str> = map
        .keys()
        .map(String::as_str)
        .filter(|k| !required.contains(k) && !optional.contains(k))
        .collect();
    if !unknown.is_empty() {
        return err(format!(
            "unknown keys in params for model {}: {}",
            model.as_str(),
            unknown.join(", ")
        ));
    }
    let missing: Vec<&str> = required.iter().copied().filter(|k| !map.contains_key(*k)).collect();
    if !missing.is_empty() {
        return err(format!(
            "missing keys in params for model {}: {}",
            model.as_str(),
            missing.join(", ")
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MONO: &str = r#"{"model": "monopoly", "params": {"u0_b": 1.9, "u0_c": 2.1, "b_b": 0.5,
        "b_c": 0.7, "t_b": 1.1, "t_c": 1.5, "f_b": 0.73, "f_c": 0.75}}"#;

    #[test]
    fn baseline_monopoly() {
        let c = parse_config(MONO).unwrap();
        assert_eq!(c.params, Params::Monopoly(MonopolyParams::baseline()));
    }

    #[test]
    fn empty_document_lists_required_keys() {
        let e = parse_config("{}").unwrap_err();
        assert!(e.0.contains("model") && e.0.contains("params"), "{e}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = parse_config(&MONO.replace("\"f_c\"", "\"gamma\": 1, \"f_c\"")).unwrap_err();
        assert!(e.0.contains("gamma"), "{e}");
        let e = parse_config(&MONO.replacen('{', "{\"gamma\": 1, ", 1)).unwrap_err();
        assert!(e.0.contains("gamma"), "{e}");
    }

    #[test]
    fn missing_parameter_is_named() {
        let e = parse_config(&MONO.replace("\"t_c\": 1.5, ", "")).unwrap_err();
        assert!(e.0.contains("t_c"), "{e}");
    }

    #[test]
    fn aggregate_rates() {
        let text = r#"{"model": "duopoly", "params": {"alpha_plus": 1.3, "alpha_minus": 0.1,
            "beta_n": 0.5, "beta_w": 0.8, "t_b": 1.1, "t_c": 1.2,
            "f_wb": 0.7, "f_nb": 0.8, "f_wc": 0.73, "f_nc": 0.65}}"#;
        let Params::Duopoly(p) = parse_config(text).unwrap().params else {
            panic!()
        };
        assert!((p.alpha_n - 0.7).abs() < 1e-15 && (p.alpha_w - 0.6).abs() < 1e-15);
        let both = text.replace("\"beta_n\"", "\"beta_plus\": 1.3, \"beta_n\"");
        assert!(parse_config(&both).is_err());
    }
}
