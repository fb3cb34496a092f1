use super::metrics::Metrics;
use crate::corpus::stratified_kfold;
use crate::error::{Error, Result};
use crate::features::Normalizer;
use crate::forest::{train_forest, ForestParams, TrainedModel};
use crate::matrix::Matrix;

/// Anything that can be trained on one matrix and label another.
pub trait Learner: Sync {
    fn fit_predict(&self, train_x: &Matrix, train_y: &[u8], test_x: &Matrix) -> Result<Vec<u8>>;
}

/// Z-scores features with statistics of the training rows, then fits a forest.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForestLearner {
    pub params: ForestParams,
}

impl ForestLearner {
    pub fn new(params: ForestParams) -> Self {
        ForestLearner { params }
    }

    pub fn fit(&self, train_x: &Matrix, train_y: &[u8], layout_id: &str, names: Vec<String>) -> Result<TrainedModel> {
        let normalizer = Normalizer::fit(train_x)?;
        let forest = train_forest(&normalizer.transform(train_x)?, train_y, &self.params)?;
        TrainedModel::new(layout_id.to_string(), names, normalizer, forest)
    }
}

impl Learner for ForestLearner {
    fn fit_predict(&self, train_x: &Matrix, train_y: &[u8], test_x: &Matrix) -> Result<Vec<u8>> {
        let names = (0..train_x.cols()).map(|j| format!("f{j}")).collect();
        let model = self.fit(train_x, train_y, "", names)?;
        Ok(model.predict_batch(test_x)?.into_iter().map(|p| p.label).collect())
    }
}

/// Rows that are always in the training set, whatever the fold.
#[derive(Clone, Copy)]
pub struct FixedTrain<'a> {
    pub x: &'a Matrix,
    pub y: &'a [u8],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub folds: Vec<Metrics>,
    /// Field-wise mean over folds.
    pub mean: Metrics,
    /// Held-out prediction for every row of the evaluated matrix.
    pub predictions: Vec<u8>,
}

impl CvOutcome {
    pub fn fold_f1(&self) -> Vec<f64> {
        self.folds.iter().map(|m| m.f1_pos).collect()
    }
}

fn stack(parts: &[(&Matrix, &[usize])]) -> Matrix {
    let cols = parts.iter().map(|(m, _)| m.cols()).next().unwrap_or(0);
    let mut data = Vec::new();
    let mut rows = 0;
    for (m, idx) in parts {
        for &i in *idx {
            data.extend_from_slice(m.row(i));
            rows += 1;
        }
    }
    Matrix::from_vec(rows, cols, data).expect("row widths agree")
}

fn check_folds(folds: &[Vec<usize>], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in folds.iter().flatten() {
        if i >= n || seen[i] {
            return Err(Error::Config(format!("fold index {i} is out of range or repeated")));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Config("folds do not cover every row".into()));
    }
    Ok(())
}

/// Scores each fold of `(x, y)` with a model trained on `fixed` plus, when
/// `train_on_other_folds` holds, the remaining folds. Without other folds in
/// training the model is the same for every fold, so it is fitted once.
pub fn cross_validate_folds(
    x: &Matrix,
    y: &[u8],
    folds: &[Vec<usize>],
    fixed: Option<FixedTrain<'_>>,
    train_on_other_folds: bool,
    learner: &dyn Learner,
) -> Result<CvOutcome> {
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch(x.rows(), y.len()));
    }
    if let Some(f) = fixed {
        if f.x.cols() != x.cols() {
            return Err(Error::DimensionMismatch {
                expected: x.cols(),
                actual: f.x.cols(),
            });
        }
    }
    check_folds(folds, x.rows())?;
    let fixed_idx: Vec<usize> = fixed.map_or_else(Vec::new, |f| (0..f.x.rows()).collect());
    let mut predictions = vec![0u8; x.rows()];

    if train_on_other_folds {
        for (k, test) in folds.iter().enumerate() {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            let mut parts = vec![(x, train.as_slice())];
            let mut train_y: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            if let Some(f) = fixed {
                parts.push((f.x, fixed_idx.as_slice()));
                train_y.extend_from_slice(f.y);
            }
            let preds = learner.fit_predict(&stack(&parts), &train_y, &x.select_rows(test))?;
            for (&i, p) in test.iter().zip(preds) {
                predictions[i] = p;
            }
        }
    } else {
        let f = fixed.ok_or_else(|| Error::Config("no training rows outside the evaluated folds".into()))?;
        let preds = learner.fit_predict(f.x, f.y, x)?;
        if preds.len() != x.rows() {
            return Err(Error::LengthMismatch(preds.len(), x.rows()));
        }
        predictions = preds;
    }

    let folds_metrics = folds
        .iter()
        .map(|test| {
            let p: Vec<u8> = test.iter().map(|&i| predictions[i]).collect();
            let g: Vec<u8> = test.iter().map(|&i| y[i]).collect();
            Metrics::compute(&p, &g)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = Metrics::mean(&folds_metrics).ok_or_else(|| Error::Config("no folds".into()))?;
    Ok(CvOutcome {
        folds: folds_metrics,
        mean,
        predictions,
    })
}

/// Stratified `k`-fold cross-validation on a single matrix.
pub fn cross_validate(x: &Matrix, y: &[u8], k: usize, seed: u64, learner: &dyn Learner) -> Result<CvOutcome> {
    let folds = stratified_kfold(y, k, seed)?;
    cross_validate_folds(x, y, &folds, None, true, learner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::HashSet;
    use std::sync::Mutex;

    /// Column 0 carries the gold label so a stub can cheat on purpose.
    fn labeled_matrix(n: usize) -> (Matrix, Vec<u8>) {
        let y: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let rows: Vec<Vec<f64>> = y.iter().enumerate().map(|(i, &l)| vec![f64::from(l), i as f64]).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    struct Gold;
    impl Learner for Gold {
        fn fit_predict(&self, _: &Matrix, _: &[u8], test_x: &Matrix) -> Result<Vec<u8>> {
            Ok(test_x.iter_rows().map(|r| r[0] as u8).collect())
        }
    }

    struct AlwaysNegative;
    impl Learner for AlwaysNegative {
        fn fit_predict(&self, _: &Matrix, _: &[u8], test_x: &Matrix) -> Result<Vec<u8>> {
            Ok(vec![0; test_x.rows()])
        }
    }

    /// Records the row ids (column 1) seen in training and testing.
    #[derive(Default)]
    struct Recorder {
        calls: Mutex<Vec<(HashSet<u64>, HashSet<u64>)>>,
    }
    impl Learner for Recorder {
        fn fit_predict(&self, train_x: &Matrix, _: &[u8], test_x: &Matrix) -> Result<Vec<u8>> {
            let ids = |m: &Matrix| m.iter_rows().map(|r| r[1] as u64).collect::<HashSet<_>>();
            self.calls.lock().unwrap().push((ids(train_x), ids(test_x)));
            Ok(vec![0; test_x.rows()])
        }
    }

    #[test]
    fn gold_stub_scores_one_and_negative_stub_zero() {
        let (x, y) = labeled_matrix(60);
        let gold = cross_validate(&x, &y, 10, 1, &Gold).unwrap();
        assert_eq!(gold.folds.len(), 10);
        assert!(gold.fold_f1().iter().all(|&f| f == 1.0));
        assert_eq!(gold.predictions, y);
        let neg = cross_validate(&x, &y, 10, 1, &AlwaysNegative).unwrap();
        assert!(neg.fold_f1().iter().all(|&f| f == 0.0));
    }

    #[test]
    fn test_rows_never_reach_training() {
        let (x, y) = labeled_matrix(50);
        let rec = Recorder::default();
        let folds = stratified_kfold(&y, 5, 2).unwrap();
        // fixed rows get ids beyond the evaluated matrix
        let fixed_rows: Vec<Vec<f64>> = (0..6).map(|i| vec![f64::from(i % 2), 1000.0 + f64::from(i)]).collect();
        let fx = Matrix::from_rows(&fixed_rows).unwrap();
        let fy: Vec<u8> = (0..6).map(|i| i % 2).collect();
        cross_validate_folds(&x, &y, &folds, Some(FixedTrain { x: &fx, y: &fy }), true, &rec).unwrap();
        let calls = rec.calls.into_inner().unwrap();
        assert_eq!(calls.len(), 5);
        for (train, test) in &calls {
            assert!(train.is_disjoint(test));
            assert_eq!(train.len() + test.len(), 56);
            assert!((1000..1006).all(|id| train.contains(&id)));
        }
    }

    #[test]
    fn fixed_only_training_fits_once() {
        let (x, y) = labeled_matrix(40);
        let rec = Recorder::default();
        let folds = stratified_kfold(&y, 4, 0).unwrap();
        let fx = Matrix::from_rows(&[[0.0, 500.0], [1.0, 501.0]]).unwrap();
        cross_validate_folds(&x, &y, &folds, Some(FixedTrain { x: &fx, y: &[0, 1] }), false, &rec).unwrap();
        let calls = rec.calls.into_inner().unwrap();
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].0, HashSet::from([500, 501]));
    }

    #[test]
    fn normalizer_is_fitted_on_training_rows_only() {
        let train = Matrix::from_rows(&[[0.0], [2.0], [4.0], [6.0]]).unwrap();
        let model = ForestLearner::new(ForestParams { n_trees: 3, ..ForestParams::default() })
            .fit(&train, &[0, 0, 1, 1], "t/1", vec!["x".into()])
            .unwrap();
        assert_eq!(model.normalizer.mean, vec![3.0]);
    }

    #[test]
    fn separable_set_scores_high() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let label = u8::from(i % 2 == 0);
            // margin of 1.0 between the classes along the first axis
            let base = if label == 1 { 0.5 } else { -0.5 };
            let offset: f64 = rng.random_range(0.0..2.0);
            rows.push(vec![base + offset.copysign(base), rng.random_range(-2.0..2.0)]);
            y.push(label);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let learner = ForestLearner::new(ForestParams { n_trees: 100, seed: 1, ..ForestParams::default() });
        let cv = cross_validate(&x, &y, 10, 3, &learner).unwrap();
        assert!(cv.mean.f1_pos >= 0.95, "mean F1 {}", cv.mean.f1_pos);
    }

    #[test]
    fn bad_folds_are_rejected() {
        let (x, y) = labeled_matrix(6);
        assert!(cross_validate_folds(&x, &y, &[vec![0, 1, 2], vec![3, 4]], None, true, &Gold).is_err());
        assert!(cross_validate_folds(&x, &y, &[vec![0, 1, 2], vec![2, 3, 4, 5]], None, true, &Gold).is_err());
    }
}
