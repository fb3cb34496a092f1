//! Train a random forest with a fitted normalizer, save it as text, reload
//! it and check the predictions survive the round trip.

use prelearn::eval::ForestLearner;
use prelearn::forest::{ForestParams, TrainedModel};
use prelearn::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<[f64; 3]> = (0..300)
        .map(|_| [rng.random_range(0.0..10.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..1e4)])
        .collect();
    let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + 3.0 * r[1] > 5.0)).collect();
    let x = Matrix::from_rows(&rows)?;

    let learner = ForestLearner::new(ForestParams {
        n_trees: 200,
        ..ForestParams::with_seed(42)
    });
    let names = vec!["size".to_string(), "tilt".to_string(), "noise".to_string()];
    let model = learner.fit(&x, &y, "toy/3", names)?;
    let depth = model.forest.trees().iter().map(|t| t.depth()).max().unwrap_or(0);
    println!("{} trees, max depth {depth}", model.forest.trees().len());

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("forest.txt");
    model.save(&path)?;
    let loaded = TrainedModel::load(&path)?;
    let before = model.predict_batch(&x)?;
    let after = loaded.predict_batch(&x)?;
    let correct = before.iter().zip(&y).filter(|(p, &t)| p.label == t).count();
    println!("training accuracy {:.3}", correct as f64 / y.len() as f64);
    println!("predictions identical after reload: {}", before == after);
    for probe in [[8.0, 0.5, 10.0], [1.0, -0.5, 10.0]] {
        let p = loaded.predict(&probe)?;
        println!("{probe:?} -> label {} ({:.2} of trees)", p.label, p.vote_fraction);
    }
    Ok(())
}
