//! Command runner behind the `selffin` binary.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{check_seed, parse_config, RunManifest};
use crate::error::{Error, Result};
use crate::experiments::{
    defect_refinement_study, hedging_convergence, martingale_test, ExperimentConfig,
    ExperimentResult, StrategySpec,
};
use crate::format::num;
use crate::ledger;
use crate::paths::{simulate, uniform_grid, Measure};
use crate::strategies::{broken_strategy, constant_mix, delta_hedge, BreakMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Verify,
    Hedge,
    Martingale,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Hedge => "hedge",
            Command::Martingale => "martingale",
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub results: Vec<ExperimentResult>,
    /// Files written, manifest last.
    pub outputs: Vec<PathBuf>,
    pub manifest: RunManifest,
}

impl RunOutcome {
    /// 0 iff every non-control row passed.
    pub fn exit_code(&self) -> i32 {
        if self.results.iter().all(ExperimentResult::subjects_pass) {
            0
        } else {
            1
        }
    }
}

/// Reads the config file (if any) and applies `--seed` / `--paths` overrides.
pub fn load_config(path: Option<&Path>, seed: Option<u64>, paths: Option<usize>) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        })?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(s) = seed {
        cfg.seed = check_seed(s)?;
    }
    if let Some(n) = paths {
        if n == 0 {
            return Err(Error::Config {
                key: "n_paths".into(),
                message: "constraint violated: n_paths ≥ 1 (got 0)".into(),
            });
        }
        cfg.n_paths = n;
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str, outputs: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    outputs.push(path);
    Ok(())
}

fn simulate_outputs(cfg: &ExperimentConfig, dir: &Path, outputs: &mut Vec<PathBuf>) -> Result<()> {
    let grid = uniform_grid(cfg.horizon, cfg.base_steps)?;
    let path = simulate(&cfg.params, &grid, cfg.seed, 0, Measure::Physical);
    let dw = path.brownian().map(|w| w.increments().to_vec()).unwrap_or_default();

    let mut csv = String::from("index,t,S,beta,dW\n");
    for k in 0..path.len() {
        let inc = if k == 0 { 0.0 } else { dw[k - 1] };
        csv.push_str(&format!(
            "{k},{},{},{},{}\n",
            num(grid.times()[k]),
            num(path.stock()[k]),
            num(path.bond()[k]),
            num(inc)
        ));
    }
    write(dir, "path.csv", &csv, outputs)?;

    let (label, subject) = match cfg.hedge {
        Some(option) => ("delta_hedge", delta_hedge(&option, &path, cfg.hedge_vol())?),
        None => ("constant_mix", constant_mix(&path, cfg.mix_weight, cfg.params.s0)?),
    };
    let frozen = broken_strategy(&subject, &path, BreakMode::FrozenBond)?;
    let rep = ledger::self_financing_defect(&subject, &path)?;
    write(dir, &format!("ledger_{label}.csv"), &rep.to_csv_string(), outputs)?;
    let rep = ledger::self_financing_defect(&frozen, &path)?;
    write(dir, "ledger_frozen_bond.csv", &rep.to_csv_string(), outputs)?;
    Ok(())
}

/// Runs one command and writes its CSVs plus `manifest.toml` into `out_dir`.
pub fn run(command: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    check_seed(cfg.seed)?;
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut outputs = Vec::new();
    let mut results = Vec::new();
    match command {
        Command::Simulate => simulate_outputs(cfg, out_dir, &mut outputs)?,
        Command::Verify => results.push(defect_refinement_study(cfg)?),
        Command::Hedge => results.push(hedging_convergence(cfg)?),
        Command::Martingale => results.push(martingale_test(cfg, &StrategySpec::standard_set(cfg))?),
    }
    for r in &results {
        write(out_dir, &format!("{}.csv", r.name), &r.to_csv_string(), &mut outputs)?;
    }
    let manifest = RunManifest {
        config: cfg.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.name().to_string(),
        seed: cfg.seed,
        outputs: outputs
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    write(out_dir, "manifest.toml", &manifest.to_toml(), &mut outputs)?;
    Ok(RunOutcome {
        results,
        outputs,
        manifest,
    })
}
