// Risk-neutral test: every self-financing portfolio's discounted terminal
// value averages to its initial value; injecting cash breaks that.
//
// ```bash
// cargo run --release -p selffin --example martingale
// ```

use selffin::experiments::{martingale_test, ExperimentConfig, StrategySpec};

fn main() -> selffin::Result<()> {
    let cfg = ExperimentConfig {
        n_paths: 20_000,
        ..ExperimentConfig::default()
    };
    let mut strategies = StrategySpec::standard_set(&cfg);
    strategies.push(StrategySpec::PriceBands {
        thresholds: vec![90.0, 110.0],
        levels: vec![1.5, 0.5, -0.5],
        initial_wealth: 50.0,
    });
    let result = martingale_test(&cfg, &strategies)?;
    println!("{:<30} {:>10} {:>12} {:>9} {:>16}", "strategy", "Y_0", "E[Y_T/B_T]", "stderr", "verdict");
    for row in &result.rows {
        println!(
            "{:<30} {:>10.4} {:>12.4} {:>9.4} {:>16}",
            row.name,
            row.param,
            row.statistic,
            row.stderr,
            row.verdict.as_str()
        );
    }
    println!("{}", result.summary());
    Ok(())
}
