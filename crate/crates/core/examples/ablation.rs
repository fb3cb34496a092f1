//! The feature ablation grid over both scenarios on a synthetic corpus.

use prelearn::eval::{ablation_grid, render_table, report_csv_string, run_ablation, EvalMode};
use prelearn::synthetic::{generate, SyntheticConfig};

fn main() -> prelearn::Result<()> {
    let data = generate(&SyntheticConfig::default())?;
    let configs: Vec<_> = ablation_grid(EvalMode::CrossValidation { k: 5 }, 11, None)
        .into_iter()
        .map(|mut c| {
            c.forest.n_trees = 100;
            c
        })
        .collect();
    let reports = run_ablation(&configs, &data.resources)?;
    print!("{}", render_table(&reports));
    let csv = report_csv_string(&reports)?;
    println!("\n{} CSV rows", csv.lines().count() - 1);
    Ok(())
}
