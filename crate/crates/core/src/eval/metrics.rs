use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts with respect to one positive label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn check_lengths(preds: &[u8], gold: &[u8]) -> Result<()> {
    if preds.len() != gold.len() {
        return Err(Error::LengthMismatch(preds.len(), gold.len()));
    }
    if preds.is_empty() {
        return Err(Error::Config("cannot score an empty prediction set".into()));
    }
    Ok(())
}

impl Confusion {
    pub fn from_labels(preds: &[u8], gold: &[u8], positive: u8) -> Result<Self> {
        check_lengths(preds, gold)?;
        let mut c = Confusion::default();
        for (&p, &g) in preds.iter().zip(gold) {
            match (p == positive, g == positive) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// 0 with no positive predictions.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 0 with no positive gold labels.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `2PR / (P + R)`, written as `2TP / (2TP + FP + FN)`; 0 when undefined.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// F1 of `positive`; 0 when precision and recall are both 0.
pub fn binary_f1(preds: &[u8], gold: &[u8], positive: u8) -> Result<f64> {
    Ok(Confusion::from_labels(preds, gold, positive)?.f1())
}

/// Unweighted mean of the F1 of both classes.
pub fn macro_f1(preds: &[u8], gold: &[u8]) -> Result<f64> {
    Ok((binary_f1(preds, gold, 1)? + binary_f1(preds, gold, 0)?) / 2.0)
}

pub fn accuracy(preds: &[u8], gold: &[u8]) -> Result<f64> {
    Ok(Confusion::from_labels(preds, gold, 1)?.accuracy())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub f1_pos: f64,
    pub f1_macro: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
}

impl Metrics {
    pub fn compute(preds: &[u8], gold: &[u8]) -> Result<Self> {
        let pos = Confusion::from_labels(preds, gold, 1)?;
        let neg = Confusion::from_labels(preds, gold, 0)?;
        Ok(Metrics {
            f1_pos: pos.f1(),
            f1_macro: (pos.f1() + neg.f1()) / 2.0,
            accuracy: pos.accuracy(),
            precision: pos.precision(),
            recall: pos.recall(),
            support: pos.total(),
        })
    }

    /// Field-wise arithmetic mean; supports add up.
    pub fn mean(items: &[Metrics]) -> Option<Metrics> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let avg = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        Some(Metrics {
            f1_pos: avg(|m| m.f1_pos),
            f1_macro: avg(|m| m.f1_macro),
            accuracy: avg(|m| m.accuracy),
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
            support: items.iter().map(|m| m.support).sum(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert_eq!(binary_f1(&[1, 0, 1, 0], &[1, 0, 1, 0], 1).unwrap(), 1.0);
        // TP=2 FP=1 FN=1
        let f1 = binary_f1(&[1, 1, 1, 0, 0], &[1, 1, 0, 1, 0], 1).unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(binary_f1(&[0, 0, 0], &[1, 0, 1], 1).unwrap(), 0.0);
        assert_eq!(binary_f1(&[0, 0], &[0, 0], 1).unwrap(), 0.0);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(binary_f1(&[1], &[1, 0], 1), Err(Error::LengthMismatch(1, 2))));
        assert!(binary_f1(&[], &[], 1).is_err());
    }

    #[test]
    fn macro_averages_both_classes() {
        // positive F1 2/3, negative: TP=1 FP=1 FN=1 → 1/2
        let m = Metrics::compute(&[1, 1, 1, 0, 0], &[1, 1, 0, 1, 0]).unwrap();
        assert!((m.f1_macro - (2.0 / 3.0 + 0.5) / 2.0).abs() < 1e-15);
        assert_eq!(m.accuracy, 0.6);
        assert_eq!(m.support, 5);
    }

    proptest! {
        #[test]
        fn metrics_lie_in_unit_interval(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..60)) {
            let (p, g): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let m = Metrics::compute(&p, &g).unwrap();
            for v in [m.f1_pos, m.f1_macro, m.accuracy, m.precision, m.recall] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            // harmonic mean lies between precision and recall
            if m.precision + m.recall > 0.0 {
                let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                prop_assert!((h - m.f1_pos).abs() < 1e-12);
            }
        }
    }
}
