//! Exhaustive Gini split search.
//!
//! For a node with class counts `c`, minimizing the weighted child impurity
//! is the same as maximizing `S_l / n_l + S_r / n_r` with `S = c0² + c1²`.
//! Candidates are compared as exact integer fractions, so ties are real ties
//! and resolve to the lowest feature index, then the lowest threshold.

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Parent Gini minus the size-weighted child Gini.
    pub impurity_decrease: f64,
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi`.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn beats(self, other: Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

fn sum_sq(c: [u64; 2]) -> u128 {
    u128::from(c[0]) * u128::from(c[0]) + u128::from(c[1]) * u128::from(c[1])
}

/// Reusable buffers for repeated searches during tree growth.
#[derive(Default)]
pub(crate) struct SplitFinder {
    scratch: Vec<(f64, u8)>,
}

impl SplitFinder {
    /// `features` must be ascending for the tie-break to hold.
    pub(crate) fn best(&mut self, x: &Matrix, y: &[u8], rows: &[usize], features: &[usize]) -> Option<Split> {
        let n = rows.len() as u64;
        if n < 2 {
            return None;
        }
        let mut total = [0u64; 2];
        for &r in rows {
            total[y[r] as usize] += 1;
        }
        if total[0] == 0 || total[1] == 0 {
            return None;
        }
        let parent = Score {
            num: sum_sq(total),
            den: u128::from(n),
        };
        let mut best = parent;
        let mut found: Option<(usize, f64)> = None;

        for &f in features {
            self.scratch.clear();
            self.scratch.extend(rows.iter().map(|&r| (x.get(r, f), y[r])));
            self.scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0u64; 2];
            for i in 0..self.scratch.len() - 1 {
                left[self.scratch[i].1 as usize] += 1;
                let (here, next) = (self.scratch[i].0, self.scratch[i + 1].0);
                if here == next {
                    continue;
                }
                let n_l = (i + 1) as u64;
                let n_r = n - n_l;
                let right = [total[0] - left[0], total[1] - left[1]];
                let score = Score {
                    num: sum_sq(left) * u128::from(n_r) + sum_sq(right) * u128::from(n_l),
                    den: u128::from(n_l) * u128::from(n_r),
                };
                if score.beats(best) {
                    best = score;
                    found = Some((f, midpoint(here, next)));
                }
            }
        }

        found.map(|(feature, threshold)| {
            let nf = n as f64;
            let child = best.num as f64 / best.den as f64;
            let parent = parent.num as f64 / (nf * nf);
            Split {
                feature,
                threshold,
                impurity_decrease: child / nf - parent,
            }
        })
    }
}

/// Best axis-aligned split of `rows` over `features`, or `None` when no
/// threshold lowers the Gini impurity (pure node, or all values identical).
pub fn gini_split(x: &Matrix, y: &[u8], rows: &[usize], features: &[usize]) -> Option<Split> {
    let mut features = features.to_vec();
    features.sort_unstable();
    features.dedup();
    SplitFinder::default().best(x, y, rows, &features)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_single_feature() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let y = [0, 0, 1, 1];
        let s = gini_split(&x, &y, &[0, 1, 2, 3], &[0]).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 1.5);
        // parent gini 0.5, children pure
        assert!((s.impurity_decrease - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pure_or_constant_nodes_have_no_split() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        assert!(gini_split(&x, &[1, 1, 1], &[0, 1, 2], &[0]).is_none());
        let x = Matrix::from_rows(&[[5.0], [5.0], [5.0]]).unwrap();
        assert!(gini_split(&x, &[0, 1, 1], &[0, 1, 2], &[0]).is_none());
    }

    #[test]
    fn picks_the_informative_feature() {
        // feature 0 is noise, feature 1 separates
        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let s = gini_split(&x, &[0, 0, 1, 1], &[0, 1, 2, 3], &[0, 1]).unwrap();
        assert_eq!(s.feature, 1);
        assert_eq!(s.threshold, 0.5);
    }

    #[test]
    fn ties_go_to_lowest_feature_then_threshold() {
        // both features separate perfectly
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let s = gini_split(&x, &[0, 1], &[0, 1], &[1, 0]).unwrap();
        assert_eq!(s.feature, 0);
        // labels 0,1,0 over values 0,1,2: thresholds 0.5 and 1.5 tie
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let s = gini_split(&x, &[0, 1, 0], &[0, 1, 2], &[0]).unwrap();
        assert_eq!(s.threshold, 0.5);
    }

    #[test]
    fn duplicated_rows_count_with_weight() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        // row 2 drawn three times: splitting it off is best
        let s = gini_split(&x, &[0, 0, 1], &[0, 1, 2, 2, 2], &[0]).unwrap();
        assert_eq!(s.threshold, 1.5);
    }

    #[test]
    fn midpoint_stays_below_upper_value() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert_eq!(midpoint(a, b), a);
        assert_eq!(midpoint(-1.0, 3.0), 1.0);
    }
}
