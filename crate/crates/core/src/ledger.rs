//! Discrete-time portfolio accounting.
//!
//! Timing: entry `k` of a schedule is held over `[t_k, t_{k+1})`, and the
//! rebalance from `(a_k, b_k)` to `(a_{k+1}, b_{k+1})` settles at the new
//! prices `S_{k+1}`, `beta_{k+1}`. Under this convention the change in value
//! over one step splits exactly as
//!
//! ```text
//! dY_k = a_k dS_k + b_k dbeta_k                     (gain)
//!      + S_k da_k + da_k dS_k + beta_k db_k + db_k dbeta_k   (defect)
//! ```
//!
//! so the self-financing defect `D_k = Y_k - Y_0 - G_k` is the running sum of
//! the four rebalancing terms, with no remainder.

use std::io::Write;

use crate::calculus::SampledSeries;
use crate::error::{Error, Result};
use crate::format::num;
use crate::paths::{MarketPath, TimeGrid};
use crate::strategies::HoldingsSchedule;
use crate::sum::{self, CompensatedSum};

/// The four rebalancing terms of one step, in currency.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepTerms {
    /// `S_k * da_k`
    pub stock_trade: f64,
    /// `da_k * dS_k`
    pub stock_cross: f64,
    /// `beta_k * db_k`
    pub bond_trade: f64,
    /// `db_k * dbeta_k`
    pub bond_cross: f64,
}

impl StepTerms {
    pub fn total(&self) -> f64 {
        sum::sum([self.stock_trade, self.stock_cross, self.bond_trade, self.bond_cross])
    }
}

/// Cumulative series of the four rebalancing terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTerms {
    pub stock_trade: SampledSeries,
    pub stock_cross: SampledSeries,
    pub bond_trade: SampledSeries,
    pub bond_cross: SampledSeries,
}

impl ExpansionTerms {
    /// Pointwise sum of the four cumulative series.
    pub fn total(&self) -> Vec<f64> {
        (0..self.stock_trade.values().len())
            .map(|k| {
                sum::sum([
                    self.stock_trade.values()[k],
                    self.stock_cross.values()[k],
                    self.bond_trade.values()[k],
                    self.bond_cross.values()[k],
                ])
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerReport {
    grid: TimeGrid,
    stock: Vec<f64>,
    bond: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    value: Vec<f64>,
    gain: Vec<f64>,
    defect: Vec<f64>,
    step_terms: Vec<StepTerms>,
}

impl LedgerReport {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `Y_k = a_k S_k + b_k beta_k`.
    pub fn value(&self) -> &[f64] {
        &self.value
    }

    /// `G_k`, the left-point gain.
    pub fn gain(&self) -> &[f64] {
        &self.gain
    }

    /// `D_k = Y_k - Y_0 - G_k`.
    pub fn defect(&self) -> &[f64] {
        &self.defect
    }

    /// One entry per step.
    pub fn step_terms(&self) -> &[StepTerms] {
        &self.step_terms
    }

    pub fn max_abs_defect(&self) -> f64 {
        self.defect.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn terminal_value(&self) -> f64 {
        self.value[self.value.len() - 1]
    }

    /// Cumulative step terms, as four series.
    pub fn expansion_terms(&self) -> ExpansionTerms {
        let col = |f: fn(&StepTerms) -> f64| {
            let steps: Vec<f64> = self.step_terms.iter().map(f).collect();
            SampledSeries::new(self.grid.clone(), sum::cumulative(&steps)).expect("grid length")
        };
        ExpansionTerms {
            stock_trade: col(|t| t.stock_trade),
            stock_cross: col(|t| t.stock_cross),
            bond_trade: col(|t| t.bond_trade),
            bond_cross: col(|t| t.bond_cross),
        }
    }

    /// Largest `|D_k - sum of cumulative step terms at k|`.
    pub fn product_rule_gap(&self) -> f64 {
        self.expansion_terms()
            .total()
            .iter()
            .zip(&self.defect)
            .fold(0.0, |m, (t, d)| m.max((t - d).abs()))
    }

    /// One row per grid point with columns
    /// `index,t,S,beta,a,b,Y,G,D,term_Sda,term_dadS,term_bdb,term_dbdbeta`,
    /// term columns cumulative.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,t,S,beta,a,b,Y,G,D,term_Sda,term_dadS,term_bdb,term_dbdbeta")?;
        let terms = self.expansion_terms();
        let t = self.grid.times();
        for (k, &tk) in t.iter().enumerate() {
            writeln!(
                out,
                "{k},{},{},{},{},{},{},{},{},{},{},{},{}",
                num(tk),
                num(self.stock[k]),
                num(self.bond[k]),
                num(self.a[k]),
                num(self.b[k]),
                num(self.value[k]),
                num(self.gain[k]),
                num(self.defect[k]),
                num(terms.stock_trade.values()[k]),
                num(terms.stock_cross.values()[k]),
                num(terms.bond_trade.values()[k]),
                num(terms.bond_cross.values()[k]),
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

fn check(h: &HoldingsSchedule, m: &MarketPath) -> Result<()> {
    h.grid().ensure_same(m.grid(), "holdings vs market path")
}

fn values(h: &HoldingsSchedule, m: &MarketPath) -> Vec<f64> {
    let (a, b) = (h.stock_units(), h.bond_units());
    let (s, beta) = (m.stock(), m.bond());
    (0..s.len()).map(|k| a[k] * s[k] + b[k] * beta[k]).collect()
}

fn gains(h: &HoldingsSchedule, m: &MarketPath) -> Vec<f64> {
    let (a, b) = (h.stock_units(), h.bond_units());
    let (s, beta) = (m.stock(), m.bond());
    let mut acc = CompensatedSum::new();
    let mut out = Vec::with_capacity(s.len());
    out.push(0.0);
    for k in 0..s.len() - 1 {
        acc += a[k] * (s[k + 1] - s[k]);
        acc += b[k] * (beta[k + 1] - beta[k]);
        out.push(acc.value());
    }
    out
}

/// `Y_k = a_k S_k + b_k beta_k`.
pub fn portfolio_value(h: &HoldingsSchedule, m: &MarketPath) -> Result<SampledSeries> {
    check(h, m)?;
    SampledSeries::new(m.grid().clone(), values(h, m))
}

/// `G_k = sum_{j<k} a_j dS_j + b_j dbeta_j`.
pub fn gain_process(h: &HoldingsSchedule, m: &MarketPath) -> Result<SampledSeries> {
    check(h, m)?;
    SampledSeries::new(m.grid().clone(), gains(h, m))
}

/// Full ledger: value, gain, defect and per-step rebalancing terms.
pub fn self_financing_defect(h: &HoldingsSchedule, m: &MarketPath) -> Result<LedgerReport> {
    check(h, m)?;
    let value = values(h, m);
    let gain = gains(h, m);
    let y0 = value[0];
    let defect = value
        .iter()
        .zip(&gain)
        .map(|(y, g)| sum::sum([*y, -y0, -*g]))
        .collect();
    let (a, b) = (h.stock_units(), h.bond_units());
    let (s, beta) = (m.stock(), m.bond());
    let step_terms = (0..s.len() - 1)
        .map(|k| {
            let da = a[k + 1] - a[k];
            let db = b[k + 1] - b[k];
            StepTerms {
                stock_trade: s[k] * da,
                stock_cross: da * (s[k + 1] - s[k]),
                bond_trade: beta[k] * db,
                bond_cross: db * (beta[k + 1] - beta[k]),
            }
        })
        .collect();
    Ok(LedgerReport {
        grid: m.grid().clone(),
        stock: s.to_vec(),
        bond: beta.to_vec(),
        a: a.to_vec(),
        b: b.to_vec(),
        value,
        gain,
        defect,
        step_terms,
    })
}

/// Cumulative `S da`, `da dS`, `beta db`, `db dbeta` series.
pub fn ito_expansion_terms(h: &HoldingsSchedule, m: &MarketPath) -> Result<ExpansionTerms> {
    Ok(self_financing_defect(h, m)?.expansion_terms())
}

/// Completes a stock schedule with the bond holdings that make it
/// self-financing from initial wealth `y0`.
///
/// `b_0 = (y0 - a_0 S_0) / beta_0`, and each rebalance moves exactly the
/// value of the stock trade into or out of the bond:
/// `b_{k+1} = b_k + (a_k - a_{k+1}) S_{k+1} / beta_{k+1}`.
pub fn enforce_self_financing(a: &SampledSeries, m: &MarketPath, y0: f64) -> Result<HoldingsSchedule> {
    a.grid().ensure_same(m.grid(), "stock holdings vs market path")?;
    if !y0.is_finite() {
        return Err(Error::InvalidArgument(format!("initial wealth must be finite, got {y0}")));
    }
    let (s, beta) = (m.stock(), m.bond());
    let a = a.values();
    let mut acc = CompensatedSum::from((y0 - a[0] * s[0]) / beta[0]);
    let mut b = Vec::with_capacity(a.len());
    b.push(acc.value());
    for k in 0..a.len() - 1 {
        acc += (a[k] - a[k + 1]) * s[k + 1] / beta[k + 1];
        b.push(acc.value());
    }
    HoldingsSchedule::new(m.grid().clone(), a.to_vec(), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::ito_integral;
    use crate::paths::{simulate, uniform_grid, GbmParams, Measure};
    use crate::strategies::{broken_strategy, buy_and_hold, delta_hedge, BreakMode, EuropeanCall};

    fn hand_path() -> MarketPath {
        let g = TimeGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        MarketPath::from_prices(g, vec![100.0, 110.0, 105.0], vec![1.0; 3], 0.0).unwrap()
    }

    fn sched(m: &MarketPath, a: &[f64], b: &[f64]) -> HoldingsSchedule {
        HoldingsSchedule::new(m.grid().clone(), a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn value_examples() {
        let m = hand_path();
        let zero = portfolio_value(&sched(&m, &[0.0; 3], &[0.0; 3]), &m).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let stock = portfolio_value(&sched(&m, &[1.0; 3], &[0.0; 3]), &m).unwrap();
        assert_eq!(stock.values(), m.stock());
        let g = uniform_grid(1.0, 2).unwrap();
        let flat = MarketPath::from_prices(g, vec![50.0; 3], vec![1.0; 3], 0.0).unwrap();
        let mixed = portfolio_value(&sched(&flat, &[2.0; 3], &[3.0; 3]), &flat).unwrap();
        assert_eq!(mixed.values(), &[103.0; 3]);
    }

    #[test]
    fn gain_examples() {
        let m = hand_path();
        let g = gain_process(&sched(&m, &[1.0; 3], &[0.0; 3]), &m).unwrap();
        assert_eq!(g.values(), &[0.0, 10.0, 5.0]);
        let bond_only = gain_process(&sched(&m, &[0.0; 3], &[1.0; 3]), &m).unwrap();
        assert!(bond_only.values().iter().all(|&v| v == 0.0));
        let left = gain_process(&sched(&m, &[1.0, 2.0, 2.0], &[0.0; 3]), &m).unwrap();
        assert_eq!(left.values(), &[0.0, 10.0, 0.0]);
    }

    #[test]
    fn grid_mismatch_errors() {
        let m = hand_path();
        let other = buy_and_hold(&uniform_grid(1.0, 3).unwrap(), 1.0, 0.0);
        assert!(portfolio_value(&other, &m).is_err());
        assert!(gain_process(&other, &m).is_err());
        assert!(self_financing_defect(&other, &m).is_err());
        assert!(ito_expansion_terms(&other, &m).is_err());
    }

    /// Brute-force ledger: Y and G enumerated directly from the definitions.
    fn brute_defect(a: &[f64], b: &[f64], s: &[f64], beta: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = (0..s.len()).map(|k| a[k] * s[k] + b[k] * beta[k]).collect();
        (0..s.len())
            .map(|k| {
                let g: f64 = (0..k)
                    .map(|j| a[j] * (s[j + 1] - s[j]) + b[j] * (beta[j + 1] - beta[j]))
                    .sum();
                y[k] - y[0] - g
            })
            .collect()
    }

    #[test]
    fn unfunded_stock_purchase_hand_ledger() {
        let m = hand_path();
        let (a, b) = ([1.0, 2.0, 2.0], [0.0; 3]);
        let oracle = brute_defect(&a, &b, m.stock(), m.bond());
        assert_eq!(oracle, vec![0.0, 110.0, 110.0]);
        let rep = self_financing_defect(&sched(&m, &a, &b), &m).unwrap();
        assert_eq!(rep.defect(), oracle.as_slice());
        assert_eq!(rep.value(), &[100.0, 220.0, 210.0]);
        assert_eq!(rep.step_terms()[0].stock_trade, 100.0);
        assert_eq!(rep.step_terms()[0].stock_cross, 10.0);
        assert_eq!(rep.step_terms()[1], StepTerms::default());
    }

    #[test]
    fn cash_injection_hand_ledger() {
        let m = hand_path();
        let bh = buy_and_hold(m.grid(), 1.0, 0.0);
        let inj = broken_strategy(&bh, &m, BreakMode::CashInjection { amount: 10.0, at_index: 1 }).unwrap();
        let rep = self_financing_defect(&inj, &m).unwrap();
        assert_eq!(rep.defect(), &[0.0, 10.0, 10.0]);
    }

    #[test]
    fn buy_and_hold_has_no_defect() {
        let p = GbmParams::default();
        let m = simulate(&p, &uniform_grid(1.0, 100).unwrap(), 4, 0, Measure::Physical);
        let rep = self_financing_defect(&buy_and_hold(m.grid(), 1.5, -20.0), &m).unwrap();
        assert!(rep.defect().iter().all(|&d| d.abs() <= 1e-12));
        assert!(rep.step_terms().iter().all(|t| *t == StepTerms::default()));
    }

    #[test]
    fn enforce_hand_ledger() {
        let m = hand_path();
        let a = SampledSeries::new(m.grid().clone(), vec![1.0, 2.0, 2.0]).unwrap();
        let h = enforce_self_financing(&a, &m, 100.0).unwrap();
        assert_eq!(h.bond_units(), &[0.0, -110.0, -110.0]);
        let rep = self_financing_defect(&h, &m).unwrap();
        assert_eq!(rep.terminal_value(), 100.0);
        assert!(rep.defect().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn enforce_constant_and_fully_invested() {
        let p = GbmParams::default();
        let m = simulate(&p, &uniform_grid(1.0, 20).unwrap(), 2, 0, Measure::Physical);
        let a = SampledSeries::constant(m.grid(), 0.7);
        let h = enforce_self_financing(&a, &m, 250.0).unwrap();
        let b0 = (250.0 - 0.7 * m.stock()[0]) / m.bond()[0];
        assert!(h.bond_units().iter().all(|&b| b == b0));
        let full = enforce_self_financing(&a, &m, 0.7 * m.stock()[0]).unwrap();
        assert_eq!(full.bond_units()[0], 0.0);
    }

    #[test]
    fn gain_matches_two_ito_integrals() {
        let p = GbmParams::default();
        let m = simulate(&p, &uniform_grid(1.0, 300).unwrap(), 6, 0, Measure::Physical);
        let call = EuropeanCall::new(100.0, 1.0).unwrap();
        let h = delta_hedge(&call, &m, 0.2).unwrap();
        let s = SampledSeries::new(m.grid().clone(), m.stock().to_vec()).unwrap();
        let beta = SampledSeries::new(m.grid().clone(), m.bond().to_vec()).unwrap();
        let via_calculus = ito_integral(&h.stock_series(), &s)
            .unwrap()
            .axpy(1.0, &ito_integral(&h.bond_series(), &beta).unwrap())
            .unwrap();
        let direct = gain_process(&h, &m).unwrap();
        for (x, y) in direct.values().iter().zip(via_calculus.values()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn frozen_bond_hedge_defect_matches_hand_formula() {
        let p = GbmParams::new(100.0, 0.0, 0.2, 0.0).unwrap();
        let m = simulate(&p, &uniform_grid(1.0, 3).unwrap(), 12, 0, Measure::Physical);
        let call = EuropeanCall::new(100.0, 1.0).unwrap();
        let h = delta_hedge(&call, &m, 0.2).unwrap();
        let frozen = broken_strategy(&h, &m, BreakMode::FrozenBond).unwrap();
        let rep = self_financing_defect(&frozen, &m).unwrap();
        let a = frozen.stock_units();
        let mut expect = 0.0;
        for k in 0..3 {
            expect += m.stock()[k + 1] * (a[k + 1] - a[k]);
            assert!((rep.defect()[k + 1] - expect).abs() < 1e-12);
        }
        assert!(rep.max_abs_defect() > 0.0);
        assert!(rep.product_rule_gap() < 1e-12);
    }

    #[test]
    fn two_point_grid_is_trivially_self_financing() {
        let g = uniform_grid(1.0, 1).unwrap();
        let m = MarketPath::from_prices(g, vec![100.0, 90.0], vec![1.0, 1.05], 0.05).unwrap();
        let a = SampledSeries::constant(m.grid(), 0.4);
        let h = enforce_self_financing(&a, &m, 100.0).unwrap();
        let rep = self_financing_defect(&h, &m).unwrap();
        assert_eq!(rep.step_terms().len(), 1);
        assert!(rep.max_abs_defect() <= 1e-12);
    }

    #[test]
    fn csv_layout() {
        let m = hand_path();
        let rep = self_financing_defect(&sched(&m, &[1.0, 2.0, 2.0], &[0.0; 3]), &m).unwrap();
        let text = rep.to_csv_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "index,t,S,beta,a,b,Y,G,D,term_Sda,term_dadS,term_bdb,term_dbdbeta");
        assert!(lines[2].starts_with("1,5.0000000000000000e-1,1.1000000000000000e2,"));
        assert!(lines[3].contains(",1.1000000000000000e2,1.0000000000000000e2,1.0000000000000000e1,"));
    }
}
