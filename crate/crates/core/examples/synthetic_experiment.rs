//! Complex and Complex+wd on a synthetic corpus, in both scenarios, with
//! 10-fold cross-validation; prints the F1 table.

use std::time::Instant;

use prelearn::corpus::Scenario;
use prelearn::eval::{render_table, run_experiment, EvalMode, ExperimentConfig, System};
use prelearn::synthetic::{generate, SyntheticConfig};

fn main() -> prelearn::Result<()> {
    let data = generate(&SyntheticConfig::default())?;
    let mut reports = Vec::new();
    for scenario in [Scenario::InDomain, Scenario::CrossDomain] {
        for system in [System::Complex, System::ComplexWd] {
            let config = ExperimentConfig::new(system, scenario)
                .with_seed(7)
                .with_mode(EvalMode::CrossValidation { k: 10 });
            let t = Instant::now();
            reports.push(run_experiment(&config, &data.resources)?);
            eprintln!("{system} {scenario}: {:.1?}", t.elapsed());
        }
    }
    print!("{}", render_table(&reports));
    Ok(())
}
