// Negative controls: a hedge whose bond leg never moves and a portfolio that
// receives outside cash. Both show up as a nonzero self-financing defect.
//
// ```bash
// cargo run -p selffin --example broken_strategies
// ```

use selffin::calculus::SampledSeries;
use selffin::ledger::{enforce_self_financing, self_financing_defect};
use selffin::paths::{simulate, uniform_grid, GbmParams, MarketPath, Measure, TimeGrid};
use selffin::strategies::{broken_strategy, buy_and_hold, delta_hedge, BreakMode, EuropeanCall};

fn main() -> selffin::Result<()> {
    // Three-point hand ledger: buy a second share at t_1 without paying for it.
    let grid = TimeGrid::new(vec![0.0, 0.5, 1.0])?;
    let hand = MarketPath::from_prices(grid.clone(), vec![100.0, 110.0, 105.0], vec![1.0; 3], 0.0)?;
    let a = SampledSeries::new(grid.clone(), vec![1.0, 2.0, 2.0])?;
    let funded = enforce_self_financing(&a, &hand, 100.0)?;
    let unfunded = broken_strategy(&funded, &hand, BreakMode::FrozenBond)?;
    println!("funded bond units   {:?}", funded.bond_units());
    println!("funded defect       {:?}", self_financing_defect(&funded, &hand)?.defect());
    println!("unfunded defect     {:?}", self_financing_defect(&unfunded, &hand)?.defect());

    let injected = broken_strategy(
        &buy_and_hold(&grid, 1.0, 0.0),
        &hand,
        BreakMode::CashInjection { amount: 10.0, at_index: 1 },
    )?;
    println!("cash-injection defect {:?}", self_financing_defect(&injected, &hand)?.defect());

    // Same story on a simulated delta hedge.
    let params = GbmParams::new(100.0, 0.05, 0.2, 0.05)?;
    let path = simulate(&params, &uniform_grid(1.0, 64)?, 11, 0, Measure::Physical);
    let call = EuropeanCall::new(100.0, 1.0)?;
    let hedge = delta_hedge(&call, &path, 0.2)?;
    let frozen = broken_strategy(&hedge, &path, BreakMode::FrozenBond)?;
    println!(
        "delta hedge max |D| {:.3e}, frozen-bond max |D| {:.4}",
        self_financing_defect(&hedge, &path)?.max_abs_defect(),
        self_financing_defect(&frozen, &path)?.max_abs_defect()
    );
    Ok(())
}
