//! Predictable holdings schedules.
//!
//! Entry `k` of a schedule is the position held over `[t_k, t_{k+1})`, chosen
//! after the rebalance at `t_k` from path values at indices `<= k` only. The
//! final entry has no interval after it and repeats the penultimate one.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::calculus::SampledSeries;
use crate::error::{invalid, Error, Result};
use crate::ledger;
use crate::paths::{MarketPath, TimeGrid};

/// Stock units `a` and bond units `b` per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldingsSchedule {
    grid: TimeGrid,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl HoldingsSchedule {
    pub fn new(grid: TimeGrid, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != grid.len() || b.len() != grid.len() {
            return Err(invalid(format!(
                "holdings lengths ({}, {}) must equal grid length {}",
                a.len(),
                b.len(),
                grid.len()
            )));
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(invalid("holdings must be finite"));
        }
        Ok(Self { grid, a, b })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn stock_units(&self) -> &[f64] {
        &self.a
    }

    pub fn bond_units(&self) -> &[f64] {
        &self.b
    }

    pub fn stock_series(&self) -> SampledSeries {
        SampledSeries::new(self.grid.clone(), self.a.clone()).expect("length checked")
    }

    pub fn bond_series(&self) -> SampledSeries {
        SampledSeries::new(self.grid.clone(), self.b.clone()).expect("length checked")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuropeanCall {
    pub strike: f64,
    pub expiry: f64,
}

impl EuropeanCall {
    pub fn new(strike: f64, expiry: f64) -> Result<Self> {
        if !(strike.is_finite() && strike > 0.0) {
            return Err(invalid(format!("strike must be > 0, got {strike}")));
        }
        if !(expiry.is_finite() && expiry > 0.0) {
            return Err(invalid(format!("expiry must be > 0, got {expiry}")));
        }
        Ok(Self { strike, expiry })
    }

    pub fn payoff(&self, s: f64) -> f64 {
        (s - self.strike).max(0.0)
    }
}

pub fn buy_and_hold(grid: &TimeGrid, a0: f64, b0: f64) -> HoldingsSchedule {
    HoldingsSchedule {
        grid: grid.clone(),
        a: vec![a0; grid.len()],
        b: vec![b0; grid.len()],
    }
}

/// Keeps a fixed fraction `weight` of current wealth in the stock, starting
/// from `initial_wealth`. Self-financing by construction.
pub fn constant_mix(path: &MarketPath, weight: f64, initial_wealth: f64) -> Result<HoldingsSchedule> {
    if !weight.is_finite() || !initial_wealth.is_finite() {
        return Err(invalid("constant-mix weight and wealth must be finite"));
    }
    let (s, beta) = (path.stock(), path.bond());
    let n = path.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    a.push(weight * initial_wealth / s[0]);
    b.push((1.0 - weight) * initial_wealth / beta[0]);
    for k in 1..n - 1 {
        let wealth = a[k - 1] * s[k] + b[k - 1] * beta[k];
        a.push(weight * wealth / s[k]);
        b.push((1.0 - weight) * wealth / beta[k]);
    }
    if n >= 2 {
        a.push(a[n - 2]);
        b.push(b[n - 2]);
    }
    HoldingsSchedule::new(path.grid().clone(), a, b)
}

/// Standard normal CDF via `erfc`.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

fn check_inputs(s: f64, k: f64, vol: f64, tau: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(invalid(format!("spot must be > 0, got {s}")));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(invalid(format!("strike must be > 0, got {k}")));
    }
    if !(vol.is_finite() && vol >= 0.0) {
        return Err(invalid(format!("volatility must be >= 0, got {vol}")));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(invalid(format!("time to expiry must be >= 0, got {tau}")));
    }
    Ok(())
}

fn d1(s: f64, k: f64, vol: f64, rate: f64, tau: f64) -> f64 {
    let sd = vol * tau.sqrt();
    ((s / k).ln() + (rate + 0.5 * vol * vol) * tau) / sd
}

/// Black-Scholes European call value.
pub fn bs_price(s: f64, k: f64, vol: f64, rate: f64, tau: f64) -> Result<f64> {
    check_inputs(s, k, vol, tau)?;
    if tau == 0.0 {
        return Ok((s - k).max(0.0));
    }
    let discounted = k * (-rate * tau).exp();
    if vol == 0.0 {
        return Ok((s - discounted).max(0.0));
    }
    let d1 = d1(s, k, vol, rate, tau);
    let d2 = d1 - vol * tau.sqrt();
    Ok(s * norm_cdf(d1) - discounted * norm_cdf(d2))
}

/// Black-Scholes call delta `N(d1)`.
///
/// With zero volatility the delta is the step in forward moneyness, and
/// exactly at the forward it takes the `vol -> 0` limit of 1/2. At expiry
/// with `s == k` the delta is undefined.
pub fn bs_delta(s: f64, k: f64, vol: f64, rate: f64, tau: f64) -> Result<f64> {
    check_inputs(s, k, vol, tau)?;
    if tau == 0.0 {
        return if s > k {
            Ok(1.0)
        } else if s < k {
            Ok(0.0)
        } else {
            Err(Error::DegenerateInput(format!(
                "delta undefined at expiry with spot == strike == {k}"
            )))
        };
    }
    if vol == 0.0 {
        let moneyness = (s / k).ln() + rate * tau;
        return Ok(if moneyness > 0.0 {
            1.0
        } else if moneyness < 0.0 {
            0.0
        } else {
            0.5
        });
    }
    Ok(norm_cdf(d1(s, k, vol, rate, tau)))
}

fn check_expiry(option: &EuropeanCall, grid: &TimeGrid) -> Result<()> {
    let horizon = grid.horizon();
    if (option.expiry - horizon).abs() > 1e-12 * horizon {
        return Err(invalid(format!(
            "option expiry {} must equal grid horizon {horizon}",
            option.expiry
        )));
    }
    Ok(())
}

/// Stock leg of a delta hedge: `a_k = delta(S_k, T - t_k)` for `k < N`.
pub fn hedge_ratios(option: &EuropeanCall, path: &MarketPath, vol: f64) -> Result<SampledSeries> {
    check_expiry(option, path.grid())?;
    let t = path.grid().times();
    let s = path.stock();
    let n = path.len();
    let mut a = Vec::with_capacity(n);
    for k in 0..n - 1 {
        a.push(bs_delta(s[k], option.strike, vol, path.rate(), option.expiry - t[k])?);
    }
    a.push(a[n - 2]);
    SampledSeries::new(path.grid().clone(), a)
}

/// Self-financing delta hedge of `option` started from its Black-Scholes value.
pub fn delta_hedge(option: &EuropeanCall, path: &MarketPath, vol: f64) -> Result<HoldingsSchedule> {
    let a = hedge_ratios(option, path, vol)?;
    let y0 = bs_price(path.stock()[0], option.strike, vol, path.rate(), option.expiry)?;
    ledger::enforce_self_financing(&a, path, y0)
}

/// Self-financing strategy holding `levels[i]` shares while the current price
/// lies in band `i` of the sorted `thresholds`.
pub fn band_rule(
    path: &MarketPath,
    thresholds: &[f64],
    levels: &[f64],
    initial_wealth: f64,
) -> Result<HoldingsSchedule> {
    if levels.len() != thresholds.len() + 1 {
        return Err(invalid("band rule needs one more level than thresholds"));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("band thresholds must be sorted"));
    }
    let s = path.stock();
    let n = s.len();
    let mut a: Vec<f64> = s[..n - 1]
        .iter()
        .map(|&x| levels[thresholds.partition_point(|&t| t <= x)])
        .collect();
    a.push(a[n - 2]);
    let a = SampledSeries::new(path.grid().clone(), a)?;
    ledger::enforce_self_financing(&a, path, initial_wealth)
}

/// Ways to break a schedule's self-financing property.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BreakMode {
    /// Bond position stays at `b_0` while the stock position still moves.
    FrozenBond,
    /// `amount` of outside cash is parked in the bond at rebalance `at_index`
    /// and kept to the end.
    CashInjection { amount: f64, at_index: usize },
}

/// Negative control derived from `base`.
pub fn broken_strategy(
    base: &HoldingsSchedule,
    path: &MarketPath,
    mode: BreakMode,
) -> Result<HoldingsSchedule> {
    base.grid.ensure_same(path.grid(), "broken_strategy")?;
    let mut b = base.b.clone();
    match mode {
        BreakMode::FrozenBond => b.fill(base.b[0]),
        BreakMode::CashInjection { amount, at_index } => {
            if at_index == 0 || at_index >= b.len() {
                return Err(invalid(format!(
                    "cash injection index {at_index} outside rebalance range 1..={}",
                    b.len() - 1
                )));
            }
            let units = amount / path.bond()[at_index];
            for x in &mut b[at_index..] {
                *x += units;
            }
        }
    }
    HoldingsSchedule::new(base.grid.clone(), base.a.clone(), b)
}
