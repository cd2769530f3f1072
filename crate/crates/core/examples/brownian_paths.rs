// Grids, Brownian increments, GBM paths and Brownian-bridge refinement.
//
// ```bash
// cargo run -p selffin --example brownian_paths
// ```

use selffin::paths::{generate_brownian, gbm_path, refine, uniform_grid, GbmParams, Measure};

fn main() -> selffin::Result<()> {
    let grid = uniform_grid(1.0, 8)?;
    let params = GbmParams::new(100.0, 0.08, 0.25, 0.03)?;
    let w = generate_brownian(&grid, 42, 0);
    let physical = gbm_path(&params, &w, Measure::Physical);
    let risk_neutral = gbm_path(&params, &w, Measure::RiskNeutral);

    println!("{:>6} {:>12} {:>12} {:>10}", "t", "S (P)", "S (Q)", "beta");
    for k in 0..grid.len() {
        println!(
            "{:>6.3} {:>12.6} {:>12.6} {:>10.6}",
            grid.times()[k],
            physical.stock()[k],
            risk_neutral.stock()[k],
            physical.bond()[k]
        );
    }

    // Same Brownian motion on a 4x finer grid: coarse instants agree.
    let fine_w = refine(&w, 4)?;
    let fine = gbm_path(&params, &fine_w, Measure::Physical);
    let worst = (0..grid.len())
        .map(|k| (fine.stock()[4 * k] / physical.stock()[k] - 1.0).abs())
        .fold(0.0, f64::max);
    println!(
        "refined to {} steps; max relative gap at shared instants {worst:.2e}",
        fine_w.grid().steps()
    );
    Ok(())
}
