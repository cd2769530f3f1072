//! Batch experiments over many simulated paths.
//!
//! Each path is an independent work unit keyed by its index; per-path outputs
//! are collected in index order and reduced sequentially, so every statistic
//! is identical under any rayon thread count.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::format::num;
use crate::ledger;
use crate::paths::{
    generate_brownian, gbm_path, refinement_ladder, simulate, uniform_grid, GbmParams, MarketPath,
    Measure,
};
use crate::strategies::{
    band_rule, broken_strategy, buy_and_hold, constant_mix, delta_hedge, BreakMode, EuropeanCall,
    HoldingsSchedule,
};
use crate::sum::CompensatedSum;

/// Named thresholds every verdict is judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Largest |D| still counted as self-financing (currency).
    pub defect: f64,
    /// A control must exceed `control_factor * defect` to count as broken.
    pub control_factor: f64,
    /// Width of the Monte Carlo acceptance band, in standard errors.
    pub mc_band: f64,
    /// Absolute slack added to the Monte Carlo band; covers rounding when
    /// the standard error is exactly zero.
    pub abs_floor: f64,
    pub slope_min: f64,
    pub slope_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            defect: 1e-9,
            control_factor: 10.0,
            mc_band: 3.0,
            abs_floor: 1e-9,
            slope_min: -0.65,
            slope_max: -0.35,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: GbmParams,
    pub horizon: f64,
    pub base_steps: usize,
    /// Multipliers of `base_steps`, strictly increasing, each >= 1.
    pub refinement_factors: Vec<usize>,
    pub n_paths: usize,
    pub seed: u64,
    pub hedge: Option<EuropeanCall>,
    /// Volatility used by the hedger; `None` means the simulation sigma.
    pub hedge_vol: Option<f64>,
    /// Cash injected mid-grid by the martingale-test control.
    pub injection_amount: f64,
    /// Stock weight of the constant-mix strategy.
    pub mix_weight: f64,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: GbmParams::default(),
            horizon: 1.0,
            base_steps: 64,
            refinement_factors: vec![1, 4, 16],
            n_paths: 10_000,
            seed: 42,
            hedge: Some(EuropeanCall { strike: 100.0, expiry: 1.0 }),
            hedge_vol: None,
            injection_amount: 10.0,
            mix_weight: 0.5,
            tolerances: Tolerances::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid("horizon must be > 0"));
        }
        if self.base_steps == 0 {
            return Err(invalid("base_steps must be >= 1"));
        }
        if self.n_paths == 0 {
            return Err(invalid("n_paths must be >= 1"));
        }
        if self.refinement_factors.is_empty()
            || self.refinement_factors[0] == 0
            || self.refinement_factors.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(invalid("refinement_factors must be non-empty, strictly increasing and >= 1"));
        }
        if let Some(v) = self.hedge_vol {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid("hedge_vol must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn hedge_vol(&self) -> f64 {
        self.hedge_vol.unwrap_or(self.params.sigma)
    }

    fn require_hedge(&self) -> Result<EuropeanCall> {
        self.hedge
            .ok_or_else(|| invalid("experiment needs a hedged option (cfg.hedge is None)"))
    }

    /// Rebalance counts `base_steps * factor` for each refinement level.
    pub fn levels(&self) -> Vec<usize> {
        self.refinement_factors.iter().map(|f| f * self.base_steps).collect()
    }

    /// Physical-measure paths for one index on every refinement level,
    /// all driven by one Brownian motion.
    pub fn path_ladder(&self, path_index: u64) -> Result<Vec<MarketPath>> {
        let grid = uniform_grid(self.horizon, self.base_steps)?;
        let base = generate_brownian(&grid, self.seed, path_index);
        Ok(refinement_ladder(&base, &self.refinement_factors)?
            .iter()
            .map(|w| gbm_path(&self.params, w, Measure::Physical))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// Outcome of one row. Control rows are supposed to fail the property under
/// test, so they end up `ExpectedFail` or, if they do not break it,
/// `UnexpectedPass`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowVerdict {
    Pass,
    Fail,
    ExpectedFail,
    UnexpectedPass,
}

impl RowVerdict {
    fn judge(control: bool, holds: bool) -> Self {
        match (control, holds) {
            (false, true) => RowVerdict::Pass,
            (false, false) => RowVerdict::Fail,
            (true, false) => RowVerdict::ExpectedFail,
            (true, true) => RowVerdict::UnexpectedPass,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RowVerdict::Pass => "pass",
            RowVerdict::Fail => "fail",
            RowVerdict::ExpectedFail => "expected-fail",
            RowVerdict::UnexpectedPass => "unexpected-pass",
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, RowVerdict::Pass | RowVerdict::ExpectedFail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub name: String,
    pub param: f64,
    pub statistic: f64,
    pub stderr: f64,
    pub control: bool,
    pub verdict: RowVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub rows: Vec<ResultRow>,
    pub verdict: Verdict,
}

impl ExperimentResult {
    fn new(name: &str, rows: Vec<ResultRow>) -> Self {
        let verdict = if rows.iter().all(|r| r.verdict.is_ok()) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.to_string(),
            rows,
            verdict,
        }
    }

    /// True when every non-control row passes. Controls never fail a run.
    pub fn subjects_pass(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| !r.control)
            .all(|r| r.verdict == RowVerdict::Pass)
    }

    pub fn row(&self, name: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn summary(&self) -> String {
        let subjects: Vec<_> = self.rows.iter().filter(|r| !r.control).collect();
        let controls: Vec<_> = self.rows.iter().filter(|r| r.control).collect();
        let ok_s = subjects.iter().filter(|r| r.verdict == RowVerdict::Pass).count();
        let ok_c = controls.iter().filter(|r| r.verdict == RowVerdict::ExpectedFail).count();
        format!(
            "{}: {} (subjects {}/{} pass, controls {}/{} expected-fail)",
            self.name,
            self.verdict,
            ok_s,
            subjects.len(),
            ok_c,
            controls.len()
        )
    }

    /// Columns `name,param,statistic,stderr,verdict`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "name,param,statistic,stderr,verdict")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.name,
                num(r.param),
                num(r.statistic),
                num(r.stderr),
                r.verdict.as_str()
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Strategies understood by [`martingale_test`].
#[derive(Debug, Clone, PartialEq)]
pub enum StrategySpec {
    BuyAndHold { a0: f64, b0: f64 },
    ConstantMix { weight: f64, initial_wealth: f64 },
    /// Self-financing hedge of `cfg.hedge` at `cfg.hedge_vol()`.
    DeltaHedge,
    PriceBands {
        thresholds: Vec<f64>,
        levels: Vec<f64>,
        initial_wealth: f64,
    },
    /// A control: `base` with its self-financing property broken.
    Broken { base: Box<StrategySpec>, mode: BreakMode },
}

impl StrategySpec {
    pub fn label(&self) -> String {
        match self {
            StrategySpec::BuyAndHold { .. } => "buy_and_hold".into(),
            StrategySpec::ConstantMix { .. } => "constant_mix".into(),
            StrategySpec::DeltaHedge => "delta_hedge".into(),
            StrategySpec::PriceBands { .. } => "price_bands".into(),
            StrategySpec::Broken { base, mode } => match mode {
                BreakMode::FrozenBond => format!("{}_frozen_bond", base.label()),
                BreakMode::CashInjection { .. } => format!("{}_cash_injection", base.label()),
            },
        }
    }

    pub fn is_control(&self) -> bool {
        matches!(self, StrategySpec::Broken { .. })
    }

    pub fn build(&self, cfg: &ExperimentConfig, path: &MarketPath) -> Result<HoldingsSchedule> {
        match self {
            StrategySpec::BuyAndHold { a0, b0 } => Ok(buy_and_hold(path.grid(), *a0, *b0)),
            StrategySpec::ConstantMix { weight, initial_wealth } => {
                constant_mix(path, *weight, *initial_wealth)
            }
            StrategySpec::DeltaHedge => delta_hedge(&cfg.require_hedge()?, path, cfg.hedge_vol()),
            StrategySpec::PriceBands {
                thresholds,
                levels,
                initial_wealth,
            } => band_rule(path, thresholds, levels, *initial_wealth),
            StrategySpec::Broken { base, mode } => broken_strategy(&base.build(cfg, path)?, path, *mode),
        }
    }

    /// The line-up used by the `martingale` command: buy-and-hold,
    /// constant-mix, delta hedge (when configured) and a cash-injection
    /// control on buy-and-hold halfway through the grid.
    pub fn standard_set(cfg: &ExperimentConfig) -> Vec<StrategySpec> {
        let mut out = vec![
            StrategySpec::BuyAndHold { a0: 1.0, b0: 0.0 },
            StrategySpec::ConstantMix {
                weight: cfg.mix_weight,
                initial_wealth: cfg.params.s0,
            },
        ];
        if cfg.hedge.is_some() {
            out.push(StrategySpec::DeltaHedge);
        }
        out.push(StrategySpec::Broken {
            base: Box::new(StrategySpec::BuyAndHold { a0: 1.0, b0: 0.0 }),
            mode: BreakMode::CashInjection {
                amount: cfg.injection_amount,
                at_index: (cfg.base_steps / 2).max(1),
            },
        });
        out
    }
}

/// Mean and standard error of the mean, compensated and in input order.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = CompensatedSum::new();
    for &x in xs {
        s += x;
    }
    let mean = s.value() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let mut ss = CompensatedSum::new();
    for &x in xs {
        ss += (x - mean) * (x - mean);
    }
    let var = ss.value() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `ys` on `xs` and its standard error.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    if xs.len() < 3 {
        return (slope, 0.0);
    }
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (slope, (ssr / (n - 2.0) / sxx).sqrt())
}

/// Max |D| per refinement level for the self-financing delta hedge and its
/// frozen-bond control.
pub fn defect_refinement_study(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let option = cfg.require_hedge()?;
    let vol = cfg.hedge_vol();
    let per_path: Vec<Vec<(f64, f64)>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            cfg.path_ladder(i)?
                .iter()
                .map(|path| {
                    let hedge = delta_hedge(&option, path, vol)?;
                    let frozen = broken_strategy(&hedge, path, BreakMode::FrozenBond)?;
                    Ok((
                        ledger::self_financing_defect(&hedge, path)?.max_abs_defect(),
                        ledger::self_financing_defect(&frozen, path)?.max_abs_defect(),
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let tol = cfg.tolerances;
    let mut rows = Vec::new();
    for (level, &steps) in cfg.levels().iter().enumerate() {
        let (mut sf, mut ctrl) = (0.0f64, 0.0f64);
        for p in &per_path {
            sf = sf.max(p[level].0);
            ctrl = ctrl.max(p[level].1);
        }
        rows.push(ResultRow {
            name: "self_financing_hedge".into(),
            param: steps as f64,
            statistic: sf,
            stderr: 0.0,
            control: false,
            verdict: RowVerdict::judge(false, sf <= tol.defect),
        });
        rows.push(ResultRow {
            name: "frozen_bond_control".into(),
            param: steps as f64,
            statistic: ctrl,
            stderr: 0.0,
            control: true,
            verdict: RowVerdict::judge(true, ctrl <= tol.control_factor * tol.defect),
        });
    }
    Ok(ExperimentResult::new("defect_refinement", rows))
}

/// Monte Carlo estimate of `E[Y_T / beta_T]` under the risk-neutral measure
/// for each strategy, compared with `Y_0`.
///
/// Row `param` is `Y_0`, so a row holds iff
/// `|statistic - param| <= mc_band * stderr + abs_floor`.
pub fn martingale_test(cfg: &ExperimentConfig, strategies: &[StrategySpec]) -> Result<ExperimentResult> {
    cfg.validate()?;
    if strategies.is_empty() {
        return Err(invalid("martingale test needs at least one strategy"));
    }
    let grid = uniform_grid(cfg.horizon, cfg.base_steps)?;
    let per_path: Vec<Vec<(f64, f64)>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = simulate(&cfg.params, &grid, cfg.seed, i, Measure::RiskNeutral);
            let beta_t = path.bond()[path.len() - 1];
            strategies
                .iter()
                .map(|s| {
                    let y = ledger::portfolio_value(&s.build(cfg, &path)?, &path)?;
                    Ok((y.values()[0], y.last() / beta_t))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let tol = cfg.tolerances;
    let rows = strategies
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let y0 = per_path[0][j].0;
            let discounted: Vec<f64> = per_path.iter().map(|p| p[j].1).collect();
            let (mean, se) = mean_stderr(&discounted);
            let holds = (mean - y0).abs() <= tol.mc_band * se + tol.abs_floor;
            ResultRow {
                name: s.label(),
                param: y0,
                statistic: mean,
                stderr: se,
                control: s.is_control(),
                verdict: RowVerdict::judge(s.is_control(), holds),
            }
        })
        .collect();
    Ok(ExperimentResult::new("martingale", rows))
}

/// RMS terminal hedging error `Y_T - payoff` per rebalance count and the
/// fitted log-log slope against the count.
pub fn hedging_convergence(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let option = cfg.require_hedge()?;
    if cfg.refinement_factors.len() < 3 {
        return Err(invalid("hedging convergence needs at least 3 refinement levels to fit a slope"));
    }
    let vol = cfg.hedge_vol();
    let per_path: Vec<Vec<f64>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            cfg.path_ladder(i)?
                .iter()
                .map(|path| {
                    let hedge = delta_hedge(&option, path, vol)?;
                    let y = ledger::portfolio_value(&hedge, path)?;
                    Ok(y.last() - option.payoff(path.stock()[path.len() - 1]))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let tol = cfg.tolerances;
    let mut rows = Vec::new();
    let mut rms_all = Vec::new();
    for (level, &steps) in cfg.levels().iter().enumerate() {
        let squares: Vec<f64> = per_path.iter().map(|p| p[level] * p[level]).collect();
        let (m2, se_m2) = mean_stderr(&squares);
        let rms = m2.sqrt();
        let se = if rms > 0.0 { se_m2 / (2.0 * rms) } else { 0.0 };
        rms_all.push(rms);
        rows.push(ResultRow {
            name: "rms_hedge_error".into(),
            param: steps as f64,
            statistic: rms,
            stderr: se,
            control: false,
            verdict: RowVerdict::Pass,
        });
    }

    // Perfect replication at every level leaves nothing to fit.
    let (slope, se, holds) = if rms_all.iter().all(|&r| r <= tol.abs_floor) {
        (0.0, 0.0, true)
    } else if rms_all.iter().any(|&r| r <= 0.0) {
        (f64::NAN, 0.0, false)
    } else {
        let xs: Vec<f64> = cfg.levels().iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = rms_all.iter().map(|r| r.ln()).collect();
        let (slope, se) = fit_slope(&xs, &ys);
        (slope, se, slope >= tol.slope_min && slope <= tol.slope_max)
    };
    rows.push(ResultRow {
        name: "fitted_slope".into(),
        param: rms_all.len() as f64,
        statistic: slope,
        stderr: se,
        control: false,
        verdict: RowVerdict::judge(false, holds),
    });
    Ok(ExperimentResult::new("hedging_convergence", rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(sigma: f64) -> ExperimentConfig {
        ExperimentConfig {
            params: GbmParams::new(100.0, 0.05, sigma, 0.05).unwrap(),
            base_steps: 8,
            refinement_factors: vec![1, 2, 4],
            n_paths: 50,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        let mut c = small(0.2);
        c.refinement_factors = vec![4, 4];
        assert!(c.validate().is_err());
        c.refinement_factors = vec![0, 2];
        assert!(c.validate().is_err());
        c.refinement_factors = vec![1, 2];
        c.n_paths = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn missing_hedge_is_rejected() {
        let mut c = small(0.2);
        c.hedge = None;
        assert!(defect_refinement_study(&c).is_err());
        assert!(hedging_convergence(&c).is_err());
    }

    #[test]
    fn too_few_levels_for_slope() {
        let mut c = small(0.2);
        c.refinement_factors = vec![1, 2];
        assert!(hedging_convergence(&c).is_err());
    }

    #[test]
    fn empty_strategy_list_is_rejected() {
        assert!(martingale_test(&small(0.2), &[]).is_err());
    }

    #[test]
    fn zero_vol_defect_study_has_no_defects() {
        let mut c = small(0.0);
        c.params.s0 = 120.0;
        let r = defect_refinement_study(&c).unwrap();
        assert!(r.rows.iter().all(|row| row.statistic <= 1e-12), "{r:?}");
        assert!(r.subjects_pass());
        assert_eq!(r.verdict, Verdict::Fail, "controls cannot break without rebalancing");
    }

    #[test]
    fn zero_vol_martingale_is_exact() {
        let mut c = small(0.0);
        c.params.mu = c.params.r;
        let r = martingale_test(&c, &StrategySpec::standard_set(&c)).unwrap();
        for row in &r.rows {
            if row.control {
                assert_eq!(row.verdict, RowVerdict::ExpectedFail);
            } else {
                assert_eq!(row.stderr, 0.0);
                assert!((row.statistic - row.param).abs() < 1e-9, "{row:?}");
                assert_eq!(row.verdict, RowVerdict::Pass);
            }
        }
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn zero_vol_hedge_replicates() {
        let mut c = small(0.0);
        c.params.s0 = 130.0;
        let r = hedging_convergence(&c).unwrap();
        assert!(r.rows.iter().all(|row| row.statistic.abs() < 1e-9));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let xs: Vec<f64> = [4.0f64, 16.0, 64.0, 256.0].iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (s, se) = fit_slope(&xs, &ys);
        assert!((s + 0.5).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn mean_stderr_small_cases() {
        assert_eq!(mean_stderr(&[3.0]), (3.0, 0.0));
        let (m, se) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rows_carry_reproducible_verdicts() {
        let c = small(0.2);
        let r = martingale_test(&c, &StrategySpec::standard_set(&c)).unwrap();
        let tol = c.tolerances;
        for row in &r.rows {
            let holds = (row.statistic - row.param).abs() <= tol.mc_band * row.stderr + tol.abs_floor;
            assert_eq!(row.verdict, RowVerdict::judge(row.control, holds));
        }
    }

    #[test]
    fn csv_has_expected_header() {
        let r = defect_refinement_study(&small(0.2)).unwrap();
        let csv = r.to_csv_string();
        assert!(csv.starts_with("name,param,statistic,stderr,verdict\n"));
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
    }
}
