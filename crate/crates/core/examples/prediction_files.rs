//! Scoring externally produced predictions, such as those of a fine-tuned
//! language model, through the shared `concept_a,concept_b,pred_label` files.

use prelearn::corpus::Domain;
use prelearn::eval::{load_predictions, score_predictions, write_predictions, PredictionRow};
use prelearn::synthetic::{generate, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&SyntheticConfig::default())?;
    let gold = &data.resources.corpus.domain(Domain::Precalculus)?.test;
    // a classifier that gets every fifth pair wrong
    let rows: Vec<PredictionRow> = gold
        .iter()
        .enumerate()
        .map(|(i, p)| PredictionRow {
            concept_a: p.a.clone(),
            concept_b: p.b.clone(),
            pred_label: if i % 5 == 0 { 1 - p.label } else { p.label },
        })
        .collect();

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("precalculus.csv");
    write_predictions(&path, &rows)?;
    let loaded = load_predictions(&path)?;
    let m = score_predictions(&loaded, gold)?;
    println!(
        "{} pairs: F1 {:.3}, macro F1 {:.3}, accuracy {:.3}",
        m.support, m.f1_pos, m.f1_macro, m.accuracy
    );

    let partial = &loaded[..loaded.len() - 1];
    match score_predictions(partial, gold) {
        Ok(_) => println!("unexpected success"),
        Err(e) => println!("incomplete file rejected: {e}"),
    }
    Ok(())
}
