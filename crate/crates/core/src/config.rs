//! Flat TOML experiment configs and run manifests.
//!
//! Every key is optional; missing keys take the documented defaults
//! (`s0 = 100`, `mu = 0.05`, `sigma = 0.2`, `r = 0.05`, `horizon = 1`,
//! `base_steps = 64`, `n_paths = 10000`, `seed = 42`, ...). Unknown keys and
//! out-of-range values are rejected with an error naming the key.

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, Tolerances};
use crate::strategies::EuropeanCall;

pub const KEYS: &[&str] = &[
    "s0",
    "mu",
    "sigma",
    "r",
    "horizon",
    "base_steps",
    "refinement_factors",
    "n_paths",
    "seed",
    "hedge",
    "strike",
    "hedge_vol",
    "injection_amount",
    "mix_weight",
    "defect_tol",
    "control_factor",
    "mc_band",
    "abs_floor",
    "slope_min",
    "slope_max",
];

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn float(table: &Table, key: &str, default: f64) -> Result<f64> {
    match table.get(key) {
        None => Ok(default),
        Some(Value::Float(x)) => Ok(*x),
        Some(Value::Integer(i)) => Ok(*i as f64),
        Some(other) => Err(config_err(key, format!("expected a number, got {}", other.type_str()))),
    }
}

fn count(table: &Table, key: &str, default: u64) -> Result<u64> {
    match table.get(key) {
        None => Ok(default),
        Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
        Some(Value::Integer(i)) => Err(config_err(key, format!("constraint violated: {key} >= 0 (got {i})"))),
        Some(other) => Err(config_err(key, format!("expected an integer, got {}", other.type_str()))),
    }
}

fn require(key: &str, ok: bool, constraint: &str, got: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(config_err(key, format!("constraint violated: {constraint} (got {got})")))
    }
}

/// Parses a flat TOML document into a fully resolved, validated config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigSyntax(e.to_string()))?;
    from_table(&table)
}

fn from_table(table: &Table) -> Result<ExperimentConfig> {
    for key in table.keys() {
        if !KEYS.contains(&key.as_str()) {
            return Err(config_err(key, "unknown key"));
        }
    }
    let d = ExperimentConfig::default();
    let dt = Tolerances::default();

    let s0 = float(table, "s0", d.params.s0)?;
    require("s0", s0.is_finite() && s0 > 0.0, "s0 > 0", s0)?;
    let mu = float(table, "mu", d.params.mu)?;
    require("mu", mu.is_finite(), "mu finite", mu)?;
    let sigma = float(table, "sigma", d.params.sigma)?;
    require("sigma", sigma.is_finite() && sigma >= 0.0, "sigma ≥ 0", sigma)?;
    let r = float(table, "r", d.params.r)?;
    require("r", r.is_finite(), "r finite", r)?;
    let horizon = float(table, "horizon", d.horizon)?;
    require("horizon", horizon.is_finite() && horizon > 0.0, "horizon > 0", horizon)?;

    let base_steps = count(table, "base_steps", d.base_steps as u64)?;
    require("base_steps", base_steps >= 1, "base_steps ≥ 1", base_steps)?;
    let n_paths = count(table, "n_paths", d.n_paths as u64)?;
    require("n_paths", n_paths >= 1, "n_paths ≥ 1", n_paths)?;
    let seed = count(table, "seed", d.seed)?;

    let refinement_factors = match table.get("refinement_factors") {
        None => d.refinement_factors.clone(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 1 => Ok(*i as usize),
                _ => Err(config_err("refinement_factors", "constraint violated: every factor is an integer ≥ 1")),
            })
            .collect::<Result<Vec<_>>>()?,
        Some(other) => {
            return Err(config_err(
                "refinement_factors",
                format!("expected an array of integers, got {}", other.type_str()),
            ))
        }
    };
    require(
        "refinement_factors",
        !refinement_factors.is_empty() && refinement_factors.windows(2).all(|w| w[0] < w[1]),
        "non-empty and strictly increasing",
        format!("{refinement_factors:?}"),
    )?;

    let hedge_on = match table.get("hedge") {
        None => true,
        Some(Value::Boolean(b)) => *b,
        Some(other) => return Err(config_err("hedge", format!("expected a boolean, got {}", other.type_str()))),
    };
    let strike = float(table, "strike", 100.0)?;
    require("strike", strike.is_finite() && strike > 0.0, "strike > 0", strike)?;
    let hedge_vol = match table.get("hedge_vol") {
        None => None,
        Some(_) => {
            let v = float(table, "hedge_vol", 0.0)?;
            require("hedge_vol", v.is_finite() && v >= 0.0, "hedge_vol ≥ 0", v)?;
            Some(v)
        }
    };
    let injection_amount = float(table, "injection_amount", d.injection_amount)?;
    require("injection_amount", injection_amount.is_finite(), "injection_amount finite", injection_amount)?;
    let mix_weight = float(table, "mix_weight", d.mix_weight)?;
    require("mix_weight", mix_weight.is_finite(), "mix_weight finite", mix_weight)?;

    let tolerances = Tolerances {
        defect: float(table, "defect_tol", dt.defect)?,
        control_factor: float(table, "control_factor", dt.control_factor)?,
        mc_band: float(table, "mc_band", dt.mc_band)?,
        abs_floor: float(table, "abs_floor", dt.abs_floor)?,
        slope_min: float(table, "slope_min", dt.slope_min)?,
        slope_max: float(table, "slope_max", dt.slope_max)?,
    };
    require("defect_tol", tolerances.defect >= 0.0, "defect_tol ≥ 0", tolerances.defect)?;
    require("control_factor", tolerances.control_factor >= 1.0, "control_factor ≥ 1", tolerances.control_factor)?;
    require("mc_band", tolerances.mc_band > 0.0, "mc_band > 0", tolerances.mc_band)?;
    require("abs_floor", tolerances.abs_floor >= 0.0, "abs_floor ≥ 0", tolerances.abs_floor)?;
    require(
        "slope_max",
        tolerances.slope_min <= tolerances.slope_max,
        "slope_min ≤ slope_max",
        tolerances.slope_max,
    )?;

    let cfg = ExperimentConfig {
        params: crate::paths::GbmParams { s0, mu, sigma, r },
        horizon,
        base_steps: base_steps as usize,
        refinement_factors,
        n_paths: n_paths as usize,
        seed,
        hedge: hedge_on.then_some(EuropeanCall { strike, expiry: horizon }),
        hedge_vol,
        injection_amount,
        mix_weight,
        tolerances,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn to_table(cfg: &ExperimentConfig) -> Table {
    let mut t = Table::new();
    let mut put = |k: &str, v: Value| {
        t.insert(k.to_string(), v);
    };
    put("s0", Value::Float(cfg.params.s0));
    put("mu", Value::Float(cfg.params.mu));
    put("sigma", Value::Float(cfg.params.sigma));
    put("r", Value::Float(cfg.params.r));
    put("horizon", Value::Float(cfg.horizon));
    put("base_steps", Value::Integer(cfg.base_steps as i64));
    put(
        "refinement_factors",
        Value::Array(cfg.refinement_factors.iter().map(|&f| Value::Integer(f as i64)).collect()),
    );
    put("n_paths", Value::Integer(cfg.n_paths as i64));
    put("seed", Value::Integer(cfg.seed as i64));
    put("hedge", Value::Boolean(cfg.hedge.is_some()));
    if let Some(h) = cfg.hedge {
        put("strike", Value::Float(h.strike));
    }
    if let Some(v) = cfg.hedge_vol {
        put("hedge_vol", Value::Float(v));
    }
    put("injection_amount", Value::Float(cfg.injection_amount));
    put("mix_weight", Value::Float(cfg.mix_weight));
    let tol = &cfg.tolerances;
    put("defect_tol", Value::Float(tol.defect));
    put("control_factor", Value::Float(tol.control_factor));
    put("mc_band", Value::Float(tol.mc_band));
    put("abs_floor", Value::Float(tol.abs_floor));
    put("slope_min", Value::Float(tol.slope_min));
    put("slope_max", Value::Float(tol.slope_max));
    t
}

/// Renders a resolved config as a flat TOML document that [`parse_config`]
/// reads back to the same value.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    toml::to_string(&to_table(cfg)).expect("flat table serializes")
}

/// Everything needed to reproduce one CLI run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        let mut t = Table::new();
        t.insert("tool_version".into(), Value::String(self.tool_version.clone()));
        t.insert("command".into(), Value::String(self.command.clone()));
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        t.insert(
            "outputs".into(),
            Value::Array(self.outputs.iter().cloned().map(Value::String).collect()),
        );
        t.insert("config".into(), Value::Table(to_table(&self.config)));
        toml::to_string(&t).expect("manifest serializes")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t: Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigSyntax(e.to_string()))?;
        let string = |k: &str| match t.get(k) {
            Some(Value::String(s)) => Ok(s.clone()),
            _ => Err(config_err(k, "missing or not a string")),
        };
        let config = match t.get("config") {
            Some(Value::Table(c)) => from_table(c)?,
            _ => return Err(config_err("config", "missing [config] table")),
        };
        let seed = count(&t, "seed", config.seed)?;
        let outputs = match t.get("outputs") {
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| config_err("outputs", "expected strings")))
                .collect::<Result<Vec<_>>>()?,
            _ => return Err(config_err("outputs", "missing or not an array")),
        };
        Ok(Self {
            tool_version: string("tool_version")?,
            command: string("command")?,
            seed,
            outputs,
            config,
        })
    }
}

/// Seeds are stored as TOML integers, which are signed 64-bit.
pub fn check_seed(seed: u64) -> Result<u64> {
    require("seed", seed <= i64::MAX as u64, "seed ≤ 9223372036854775807", seed)?;
    Ok(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.params.s0, 100.0);
        assert_eq!(cfg.params.mu, 0.05);
        assert_eq!(cfg.params.sigma, 0.2);
        assert_eq!(cfg.params.r, 0.05);
        assert_eq!(cfg.horizon, 1.0);
        assert_eq!(cfg.base_steps, 64);
        assert_eq!(cfg.n_paths, 10_000);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn negative_sigma_names_constraint() {
        let err = parse_config("sigma = -0.1").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "sigma"));
        assert!(msg.contains("sigma ≥ 0"), "{msg}");
    }

    #[test]
    fn single_override() {
        let cfg = parse_config("n_paths = 500").unwrap();
        assert_eq!(
            cfg,
            ExperimentConfig {
                n_paths: 500,
                ..ExperimentConfig::default()
            }
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("volatility = 0.3").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "volatility"));
        assert!(err.to_string().contains("volatility"));
    }

    #[test]
    fn wrong_types_are_named() {
        for (doc, key) in [
            ("s0 = \"abc\"", "s0"),
            ("n_paths = 1.5", "n_paths"),
            ("refinement_factors = [1, 0]", "refinement_factors"),
            ("refinement_factors = [4, 2]", "refinement_factors"),
            ("hedge = 1", "hedge"),
            ("base_steps = -3", "base_steps"),
        ] {
            let err = parse_config(doc).unwrap_err();
            assert!(matches!(err, Error::Config { key: ref k, .. } if k == key), "{doc}: {err}");
        }
        assert!(matches!(parse_config("s0 = = 1"), Err(Error::ConfigSyntax(_))));
    }

    #[test]
    fn integers_accepted_for_floats() {
        let cfg = parse_config("s0 = 120\nstrike = 110\nhorizon = 2").unwrap();
        assert_eq!(cfg.params.s0, 120.0);
        assert_eq!(cfg.hedge, Some(EuropeanCall { strike: 110.0, expiry: 2.0 }));
    }

    #[test]
    fn render_round_trips() {
        let cfg = parse_config("sigma = 0.123456789012345\nhedge_vol = 0.31\nseed = 7\nrefinement_factors = [1, 3, 9]").unwrap();
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
        let no_hedge = parse_config("hedge = false").unwrap();
        assert_eq!(no_hedge.hedge, None);
        assert_eq!(parse_config(&render_config(&no_hedge)).unwrap(), no_hedge);
    }

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest {
            config: parse_config("mu = 0.1\nn_paths = 321").unwrap(),
            tool_version: "0.1.0".into(),
            command: "verify".into(),
            seed: 321,
            outputs: vec!["defect_refinement.csv".into()],
        };
        assert_eq!(RunManifest::parse(&m.to_toml()).unwrap(), m);
    }

    #[test]
    fn oversized_seed_rejected() {
        assert!(check_seed(u64::MAX).is_err());
        assert_eq!(check_seed(5).unwrap(), 5);
    }
}
