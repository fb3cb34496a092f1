//! Prediction files shared by every system:
//! `concept_a,concept_b,pred_label` with labels 0 or 1.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use crate::corpus::LabeledPair;
use crate::error::{Error, Result};

pub const PREDICTION_HEADER: [&str; 3] = ["concept_a", "concept_b", "pred_label"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub concept_a: String,
    pub concept_b: String,
    pub pred_label: u8,
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, 1, format!("{other:?}")),
        })?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != PREDICTION_HEADER {
        return Err(Error::parse(
            path,
            1,
            format!("expected header `{}`, found `{}`", PREDICTION_HEADER.join(","), header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    let mut seen = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if rec.len() != 3 {
            return Err(Error::parse(path, line, format!("expected 3 fields, found {}", rec.len())));
        }
        let pred_label = match rec[2].trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(Error::parse(path, line, format!("pred_label must be 0 or 1, found `{other}`"))),
        };
        let key = (rec[0].trim().to_string(), rec[1].trim().to_string());
        if let Some(first) = seen.insert(key.clone(), line) {
            return Err(Error::parse(path, line, format!("pair ({}, {}) already predicted on line {first}", key.0, key.1)));
        }
        rows.push(PredictionRow {
            concept_a: key.0,
            concept_b: key.1,
            pred_label,
        });
    }
    Ok(rows)
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(PREDICTION_HEADER)?;
    for r in rows {
        wtr.write_record([r.concept_a.as_str(), r.concept_b.as_str(), &r.pred_label.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Aligns predictions to `gold` by `(concept_a, concept_b)` and scores them.
/// Every gold pair must be predicted and no other pair may appear.
pub fn score_predictions(rows: &[PredictionRow], gold: &[LabeledPair]) -> Result<Metrics> {
    let by_pair: HashMap<(&str, &str), u8> = rows
        .iter()
        .map(|r| ((r.concept_a.as_str(), r.concept_b.as_str()), r.pred_label))
        .collect();
    let mut preds = Vec::with_capacity(gold.len());
    let mut missing = Vec::new();
    for g in gold {
        match by_pair.get(&(g.a.as_str(), g.b.as_str())) {
            Some(&p) => preds.push(p),
            None => missing.push(format!("({},{})", g.a, g.b)),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    if by_pair.len() != gold.len() {
        return Err(Error::Config(format!(
            "{} predictions for {} evaluation pairs",
            by_pair.len(),
            gold.len()
        )));
    }
    let labels: Vec<u8> = gold.iter().map(|g| g.label).collect();
    Metrics::compute(&preds, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Domain;

    fn gold() -> Vec<LabeledPair> {
        [("a", "b", 1), ("b", "c", 0), ("c", "a", 1)]
            .into_iter()
            .map(|(a, b, label)| LabeledPair {
                a: a.into(),
                b: b.into(),
                label,
                domain: Domain::Physics,
            })
            .collect()
    }

    #[test]
    fn round_trip_and_identity_scoring() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let rows: Vec<PredictionRow> = gold()
            .iter()
            .rev()
            .map(|g| PredictionRow {
                concept_a: g.a.clone(),
                concept_b: g.b.clone(),
                pred_label: g.label,
            })
            .collect();
        write_predictions(&path, &rows).unwrap();
        let back = load_predictions(&path).unwrap();
        assert_eq!(back, rows);
        assert_eq!(score_predictions(&back, &gold()).unwrap().f1_pos, 1.0);
    }

    #[test]
    fn schema_violations() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        for bad in [
            "concept_a,concept_b,label\na,b,1\n",
            "concept_a,concept_b,pred_label\na,b,2\n",
            "concept_a,concept_b,pred_label\na,b,1\na,b,0\n",
        ] {
            std::fs::write(&path, bad).unwrap();
            assert!(matches!(load_predictions(&path), Err(Error::Parse { .. })), "{bad}");
        }
    }

    #[test]
    fn alignment_errors() {
        let partial = vec![PredictionRow {
            concept_a: "a".into(),
            concept_b: "b".into(),
            pred_label: 1,
        }];
        assert!(matches!(score_predictions(&partial, &gold()), Err(Error::MissingPredictions(m)) if m.len() == 2));
        let mut extra: Vec<PredictionRow> = gold()
            .iter()
            .map(|g| PredictionRow {
                concept_a: g.a.clone(),
                concept_b: g.b.clone(),
                pred_label: 0,
            })
            .collect();
        extra.push(PredictionRow {
            concept_a: "x".into(),
            concept_b: "y".into(),
            pred_label: 0,
        });
        assert!(score_predictions(&extra, &gold()).is_err());
    }
}
