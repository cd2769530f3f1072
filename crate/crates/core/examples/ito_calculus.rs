// Left-point Ito integrals, quadratic variation and the Ito-Doblin residual.
//
// ```bash
// cargo run -p selffin --example ito_calculus
// ```

use selffin::calculus::{ito_doblin_residual, ito_integral, quadratic_covariation, ClosureFunction, SampledSeries};
use selffin::paths::{generate_brownian, gbm_path, refinement_ladder, uniform_grid, GbmParams, Measure};

fn main() -> selffin::Result<()> {
    let params = GbmParams::new(100.0, 0.05, 0.2, 0.05)?;
    let base = generate_brownian(&uniform_grid(1.0, 64)?, 7, 0);
    let log = ClosureFunction::new(|_, s| s.ln(), |_, _| 0.0, |_, s| 1.0 / s, |_, s| -1.0 / (s * s));
    let square = ClosureFunction::new(|_, s| s * s, |_, _| 0.0, |_, s| 2.0 * s, |_, _| 2.0);

    println!("{:>6} {:>14} {:>14} {:>14} {:>14}", "N", "[S,S]_T", "int S dS", "resid log", "resid s^2");
    for w in refinement_ladder(&base, &[1, 4, 16, 64])? {
        let path = gbm_path(&params, &w, Measure::Physical);
        let s = SampledSeries::new(path.grid().clone(), path.stock().to_vec())?;
        let qv = quadratic_covariation(&s, &s)?.last();
        let int = ito_integral(&s, &s)?.last();
        println!(
            "{:>6} {:>14.6} {:>14.6} {:>14.3e} {:>14.3e}",
            path.grid().steps(),
            qv,
            int,
            ito_doblin_residual(&log, &path),
            ito_doblin_residual(&square, &path)
        );
    }
    Ok(())
}
