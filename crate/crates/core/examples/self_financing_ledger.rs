// Ledger of a self-financing delta hedge: value, gain, defect and the four
// rebalancing terms, which are individually large but sum to zero.
//
// ```bash
// cargo run -p selffin --example self_financing_ledger
// ```

use selffin::ledger::self_financing_defect;
use selffin::paths::{simulate, uniform_grid, GbmParams, Measure};
use selffin::strategies::{delta_hedge, EuropeanCall};

fn main() -> selffin::Result<()> {
    let params = GbmParams::new(100.0, 0.05, 0.2, 0.0)?;
    let grid = uniform_grid(1.0, 252)?;
    let path = simulate(&params, &grid, 2024, 0, Measure::Physical);
    let call = EuropeanCall::new(100.0, 1.0)?;
    let hedge = delta_hedge(&call, &path, 0.2)?;
    let report = self_financing_defect(&hedge, &path)?;
    let terms = report.expansion_terms();

    println!("initial value Y_0       {:>12.6}", report.value()[0]);
    println!("terminal value Y_T      {:>12.6}", report.terminal_value());
    println!("gain G_T                {:>12.6}", report.gain()[grid.steps()]);
    println!("option payoff           {:>12.6}", call.payoff(path.stock()[grid.steps()]));
    println!("max |D|                 {:>12.3e}", report.max_abs_defect());
    println!("sum S da                {:>12.6}", terms.stock_trade.last());
    println!("sum da dS               {:>12.6}", terms.stock_cross.last());
    println!("sum beta db             {:>12.6}", terms.bond_trade.last());
    println!("sum db dbeta            {:>12.6}", terms.bond_cross.last());
    println!("four-term total         {:>12.3e}", terms.total()[grid.steps()]);

    let csv = report.to_csv_string();
    println!("\nfirst ledger rows:");
    for line in csv.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
