use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Summary of the per-word AoA values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexiconStats {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    pub q1: f64,
    pub q3: f64,
}

impl LexiconStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// Tukey fences `(Q1 - 1.5 IQR, Q3 + 1.5 IQR)`.
    pub fn fences(&self) -> (f64, f64) {
        (self.q1 - 1.5 * self.iqr(), self.q3 + 1.5 * self.iqr())
    }

    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        LexiconStats {
            mean,
            sd: var.sqrt(),
            q1: quantile(&sorted, 0.25),
            q3: quantile(&sorted, 0.75),
        }
    }
}

/// Linear-interpolation quantile of sorted data (`h = (n - 1) p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Age-of-acquisition norms with one averaged value per word.
#[derive(Debug, Clone)]
pub struct AoaLexicon {
    entries: HashMap<String, f64>,
    stats: LexiconStats,
}

impl AoaLexicon {
    /// Averages repeated words. Words are lowercased.
    pub fn from_ratings<S: AsRef<str>>(ratings: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let mut sums: HashMap<String, (f64, usize)> = HashMap::new();
        for (row, (word, value)) in ratings.into_iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("rating {} has non-positive AoA {value}", row + 1)));
            }
            let slot = sums.entry(word.as_ref().trim().to_lowercase()).or_insert((0.0, 0));
            slot.0 += value;
            slot.1 += 1;
        }
        if sums.is_empty() {
            return Err(Error::MissingResource("AoA lexicon has no entries".into()));
        }
        let entries: HashMap<String, f64> = sums.into_iter().map(|(w, (s, n))| (w, s / n as f64)).collect();
        let values: Vec<f64> = entries.values().copied().collect();
        let stats = LexiconStats::of(&values);
        Ok(AoaLexicon { entries, stats })
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stats(&self) -> &LexiconStats {
        &self.stats
    }

    /// Clips `value` into the Tukey fences of the lexicon distribution.
    pub fn clip(&self, value: f64) -> f64 {
        let (lo, hi) = self.stats.fences();
        value.clamp(lo, hi)
    }
}

/// Reads `word<TAB>aoa` rows; a word may appear on several rows.
/// An optional `word<TAB>aoa` header is skipped.
pub fn load_aoa_lexicon(path: &Path) -> Result<AoaLexicon> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ratings = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(word), Some(value)) = (fields.next(), fields.next()) else {
            return Err(Error::parse(path, lineno, "expected `word<TAB>aoa`"));
        };
        if lineno == 1 && word.eq_ignore_ascii_case("word") {
            continue;
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("non-numeric AoA value `{value}`")))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::parse(path, lineno, format!("non-positive AoA value {value}")));
        }
        ratings.push((word.to_string(), value));
    }
    AoaLexicon::from_ratings(ratings)
}

/// Geometric-mean AoA of a description and the number of matched tokens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaScore {
    pub geometric_mean: f64,
    pub matches: usize,
}

/// Geometric mean of the fence-clipped AoA values of every token found in
/// the lexicon. Each occurrence counts. No match yields the lexicon mean.
pub fn concept_aoa<S: AsRef<str>>(tokens: &[S], lexicon: &AoaLexicon) -> AoaScore {
    let mut log_sum = 0.0;
    let mut matches = 0;
    for token in tokens {
        if let Some(v) = lexicon.get(token.as_ref()) {
            log_sum += lexicon.clip(v).ln();
            matches += 1;
        }
    }
    if matches == 0 {
        return AoaScore {
            geometric_mean: lexicon.stats().mean,
            matches: 0,
        };
    }
    AoaScore {
        geometric_mean: (log_sum / matches as f64).exp(),
        matches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::io::Write;

    fn lexicon(rows: &[(&str, f64)]) -> AoaLexicon {
        AoaLexicon::from_ratings(rows.iter().copied()).unwrap()
    }

    #[test]
    fn duplicates_are_averaged() {
        let lex = lexicon(&[("cane", 3.0), ("cane", 5.0), ("gatto", 2.0)]);
        assert_eq!(lex.get("cane"), Some(4.0));
        assert_eq!(lex.len(), 2);
    }

    #[test]
    fn global_stats_on_small_fixture() {
        // values {2,4,4,6}: mean 4, sd sqrt(2); h = 0.75 -> 2 + 0.75*2, h = 2.25 -> 4 + 0.25*2
        let lex = lexicon(&[("a", 2.0), ("b", 4.0), ("c", 4.0), ("d", 6.0)]);
        let s = lex.stats();
        assert_relative_eq!(s.mean, 4.0);
        assert_relative_eq!(s.sd, 2f64.sqrt());
        assert_relative_eq!(s.q1, 3.5);
        assert_relative_eq!(s.q3, 4.5);
        assert_eq!(s.fences(), (2.0, 6.0));
    }

    #[test]
    fn geometric_mean_without_clipping() {
        let lex = lexicon(&[("a", 4.0), ("b", 9.0), ("c", 5.0), ("d", 6.0)]);
        let score = concept_aoa(&["a", "x", "b"], &lex);
        assert_eq!(score.matches, 2);
        assert_relative_eq!(score.geometric_mean, 6.0, epsilon = 1e-12);
        let single = concept_aoa(&["c"], &lex);
        assert_relative_eq!(single.geometric_mean, 5.0, epsilon = 1e-12);
        assert_eq!(single.matches, 1);
    }

    #[test]
    fn no_match_imputes_mean() {
        let lex = lexicon(&[("a", 2.0), ("b", 4.0)]);
        let empty: [&str; 0] = [];
        assert_eq!(concept_aoa(&empty, &lex), AoaScore { geometric_mean: 3.0, matches: 0 });
        assert_eq!(concept_aoa(&["zzz"], &lex).matches, 0);
    }

    #[test]
    fn outlier_replaced_by_fence() {
        // values 2,3,3,4,4,5,20: Q1 = 3, Q3 = 4.5, upper fence 6.75
        let lex = lexicon(&[
            ("a", 2.0),
            ("b", 3.0),
            ("c", 3.0),
            ("d", 4.0),
            ("e", 4.0),
            ("f", 5.0),
            ("g", 20.0),
        ]);
        let (_, upper) = lex.stats().fences();
        assert_relative_eq!(upper, 6.75);
        let score = concept_aoa(&["b", "g"], &lex);
        // independent clip-then-GM: sqrt(3 * 6.75)
        assert_relative_eq!(score.geometric_mean, (3.0f64 * 6.75).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn loader_reports_bad_rows() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "word\taoa\ncane\t3\ncane\t5\ngatto\tx\n").unwrap();
        match load_aoa_lexicon(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "cane\t3\ngatto\t-1\n").unwrap();
        assert!(matches!(load_aoa_lexicon(f.path()), Err(Error::Parse { line: 2, .. })));
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "Cane\t3\ncane\t5\ncasa\t2.5\n").unwrap();
        let lex = load_aoa_lexicon(f.path()).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.get("cane"), Some(4.0));
    }

    proptest! {
        #[test]
        fn score_stays_within_fences(values in proptest::collection::vec(0.5f64..30.0, 4..40), picks in proptest::collection::vec(0usize..40, 1..20)) {
            let rows: Vec<(String, f64)> = values.iter().enumerate().map(|(i, &v)| (format!("w{i}"), v)).collect();
            let lex = AoaLexicon::from_ratings(rows.iter().map(|(w, v)| (w.as_str(), *v))).unwrap();
            let tokens: Vec<String> = picks.iter().map(|i| format!("w{}", i % values.len())).collect();
            let score = concept_aoa(&tokens, &lex);
            let (lo, hi) = lex.stats().fences();
            prop_assert!(score.geometric_mean >= lo.max(0.0) - 1e-9 && score.geometric_mean <= hi + 1e-9);
            let max_clipped = tokens.iter().map(|t| lex.clip(lex.get(t).unwrap())).fold(f64::MIN, f64::max);
            prop_assert!(score.geometric_mean <= max_clipped * (1.0 + 1e-12));
        }

        #[test]
        fn geometric_mean_scales(values in proptest::collection::vec(1.0f64..10.0, 1..10), c in 0.1f64..10.0) {
            let gm = |xs: &[f64]| (xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64).exp();
            // a lexicon wide enough that nothing is clipped
            let mut rows: Vec<(String, f64)> = values.iter().enumerate().map(|(i, &v)| (format!("w{i}"), v)).collect();
            rows.extend(values.iter().enumerate().map(|(i, &v)| (format!("s{i}"), v * c)));
            // log-spread fillers over 1e-3..1e5 keep the fences far outside 0.1..100
            rows.extend((0..100).map(|i| (format!("f{i}"), 10f64.powf(-3.0 + 8.0 * i as f64 / 99.0))));
            let lex = AoaLexicon::from_ratings(rows.iter().map(|(w, v)| (w.as_str(), *v))).unwrap();
            let (lo, hi) = lex.stats().fences();
            prop_assert!(lo < 0.1 && hi > 100.0);
            let base: Vec<String> = (0..values.len()).map(|i| format!("w{i}")).collect();
            let scaled: Vec<String> = (0..values.len()).map(|i| format!("s{i}")).collect();
            let a = concept_aoa(&base, &lex).geometric_mean;
            let b = concept_aoa(&scaled, &lex).geometric_mean;
            prop_assert!((b - c * a).abs() <= 1e-9 * b.abs().max(1.0));
            prop_assert!((a - gm(&values)).abs() <= 1e-9 * a);
        }
    }
}
