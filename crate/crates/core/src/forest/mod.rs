//! Random forest of CART trees: bootstrap samples, a random feature subset
//! at each node and Gini splits.
//!
//! Defaults follow the classical reference implementation: 500 trees,
//! `mtry = floor(sqrt(p))`, terminal node size 1 and bootstrap samples of
//! size `n` drawn with replacement. Each tree draws from its own ChaCha
//! stream derived from the master seed and the tree index, so results do not
//! depend on thread scheduling. Row order is part of the input: permuting
//! rows changes the bootstrap draws.

mod model;
mod split;
mod tree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use model::{TrainedModel, MODEL_MAGIC};
pub use split::{gini_split, midpoint, Split};
pub use tree::{Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per node; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    /// Draw `n` rows with replacement per tree; otherwise every tree sees
    /// all rows once.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            mtry: None,
            min_node_size: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn with_seed(seed: u64) -> Self {
        ForestParams {
            seed,
            ..Self::default()
        }
    }

    pub fn resolved_mtry(&self, n_features: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| ((n_features as f64).sqrt().floor() as usize).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: u8,
    /// Share of trees voting positive.
    pub vote_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    n_features: usize,
}

impl Forest {
    pub fn from_trees(trees: Vec<Tree>, n_features: usize) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        Ok(Forest { trees, n_features })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Majority vote; an exact tie is negative.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let positive = self.trees.iter().filter(|t| t.vote(x) == 1).count();
        Ok(Prediction {
            label: u8::from(2 * positive > self.trees.len()),
            vote_fraction: positive as f64 / self.trees.len() as f64,
        })
    }

    pub fn predict_batch(&self, x: &Matrix) -> Result<Vec<Prediction>> {
        x.iter_rows().map(|row| self.predict(row)).collect()
    }
}

fn check_training_data(x: &Matrix, y: &[u8], params: &ForestParams) -> Result<usize> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if let Some(bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::Config(format!("label {bad} is not binary")));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::SingleClass);
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("training matrix contains non-finite values".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::Config("n_trees must be at least 1".into()));
    }
    let mtry = params.resolved_mtry(x.cols());
    if mtry == 0 || mtry > x.cols() {
        return Err(Error::Config(format!("mtry {mtry} outside 1..={}", x.cols())));
    }
    Ok(mtry)
}

/// RNG for tree `index`: the master seed on its own ChaCha stream.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn train_forest(x: &Matrix, y: &[u8], params: &ForestParams) -> Result<Forest> {
    let mtry = check_training_data(x, y, params)?;
    let grow = tree::GrowParams {
        mtry,
        min_node_size: params.min_node_size.max(1),
    };
    let n = x.rows();
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(params.seed, t);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            Tree::grow(x, y, rows, &grow, &mut rng)
        })
        .collect();
    Forest::from_trees(trees, x.cols())
}
