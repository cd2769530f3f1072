// RMS hedging error of a discretely rebalanced delta hedge against the
// number of rebalances, with the fitted log-log slope.
//
// ```bash
// cargo run --release -p selffin --example hedging_convergence
// ```

use selffin::experiments::{hedging_convergence, ExperimentConfig};
use selffin::paths::GbmParams;
use selffin::strategies::EuropeanCall;

fn main() -> selffin::Result<()> {
    let cfg = ExperimentConfig {
        params: GbmParams::new(100.0, 0.05, 0.2, 0.0)?,
        base_steps: 4,
        refinement_factors: vec![1, 4, 16, 64],
        n_paths: 2_000,
        hedge: Some(EuropeanCall::new(100.0, 1.0)?),
        ..ExperimentConfig::default()
    };
    let result = hedging_convergence(&cfg)?;
    for row in &result.rows {
        println!("{:<16} {:>6} {:>10.5} ± {:.5}", row.name, row.param, row.statistic, row.stderr);
    }
    println!("{}", result.summary());
    Ok(())
}
