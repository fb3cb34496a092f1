//! Stratified k-fold cross-validation of a forest on an imbalanced toy set.

use prelearn::corpus::stratified_kfold;
use prelearn::eval::{cross_validate, ForestLearner};
use prelearn::forest::ForestParams;
use prelearn::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> prelearn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<[f64; 4]> = (0..250).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
    let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] - r[2] > 0.6)).collect();
    let x = Matrix::from_rows(&rows)?;

    let folds = stratified_kfold(&y, 5, 3)?;
    for (i, f) in folds.iter().enumerate() {
        let pos = f.iter().filter(|&&r| y[r] == 1).count();
        println!("fold {i}: {} rows, {pos} positive", f.len());
    }

    let learner = ForestLearner::new(ForestParams {
        n_trees: 150,
        ..ForestParams::with_seed(3)
    });
    let outcome = cross_validate(&x, &y, 5, 3, &learner)?;
    for (i, f1) in outcome.fold_f1().iter().enumerate() {
        println!("fold {i} F1 {f1:.3}");
    }
    println!(
        "mean F1 {:.3}, macro F1 {:.3}, accuracy {:.3}",
        outcome.mean.f1_pos, outcome.mean.f1_macro, outcome.mean.accuracy
    );
    Ok(())
}
