// Max self-financing defect of enforced delta hedges and their frozen-bond
// controls as the grid is refined.
//
// ```bash
// cargo run --release -p selffin --example defect_refinement
// ```

use selffin::experiments::{defect_refinement_study, ExperimentConfig};

fn main() -> selffin::Result<()> {
    let cfg = ExperimentConfig {
        n_paths: 500,
        ..ExperimentConfig::default()
    };
    let result = defect_refinement_study(&cfg)?;
    print!("{}", result.to_csv_string());
    println!("{}", result.summary());
    Ok(())
}
