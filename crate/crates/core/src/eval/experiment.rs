use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cv::{cross_validate_folds, FixedTrain, ForestLearner, Learner};
use super::metrics::Metrics;
use super::predictions::{load_predictions, score_predictions, PredictionRow};
use super::report::{DomainResult, EvalReport};
use crate::corpus::{
    make_training_split, stratified_holdout, stratified_kfold, Corpus, Domain, InDomainTraining, LabeledPair, Scenario,
};
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureDeps, FeatureExtractor};
use crate::forest::ForestParams;
use crate::lexres::{AoaLexicon, ConceptMapping, PageviewTable};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum System {
    Complex,
    ComplexWd,
    /// Scored from prediction files written by the fine-tuning component.
    ItalianBert,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Complex => "Complex",
            System::ComplexWd => "Complex+wd",
            System::ItalianBert => "Italian-BERT",
        }
    }

    /// Feature families of the forest systems.
    pub fn default_features(self) -> Option<FeatureConfig> {
        match self {
            System::Complex => Some(FeatureConfig::complex()),
            System::ComplexWd => Some(FeatureConfig::complex_wd()),
            System::ItalianBert => None,
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().replace('_', "-").as_str() {
            "complex" => Ok(System::Complex),
            "complex+wd" | "complex-wd" | "complexwd" => Ok(System::ComplexWd),
            "italian-bert" | "bert" => Ok(System::ItalianBert),
            _ => Err(Error::Config(format!("unknown system `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalMode {
    /// Train on the scenario's training split, score the target test set.
    TestSet,
    /// Stratified folds over the target domain's training pairs.
    CrossValidation { k: usize },
    /// One stratified holdout of the target domain's training pairs.
    Holdout { fraction: f64 },
}

impl EvalMode {
    pub fn name(&self) -> String {
        match self {
            EvalMode::TestSet => "test".into(),
            EvalMode::CrossValidation { k } => format!("{k}-fold"),
            EvalMode::Holdout { fraction } => format!("holdout-{fraction}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub system: System,
    /// Overrides the system's feature families (ablation rows).
    pub features: Option<FeatureConfig>,
    pub domains: Vec<Domain>,
    /// Drives fold assignment and, mixed with the domain, each forest.
    pub seed: u64,
    pub mode: EvalMode,
    /// Its `seed` field is ignored in favor of the per-cell seed.
    pub forest: ForestParams,
    pub in_domain: InDomainTraining,
    /// Directory of `<domain slug>.csv` prediction files for Italian-BERT.
    pub predictions_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(system: System, scenario: Scenario) -> Self {
        ExperimentConfig {
            scenario,
            system,
            features: None,
            domains: Domain::ALL.to_vec(),
            seed: 0,
            mode: EvalMode::TestSet,
            forest: ForestParams::default(),
            in_domain: InDomainTraining::Union,
            predictions_dir: None,
        }
    }

    pub fn with_features(mut self, features: FeatureConfig) -> Self {
        self.features = Some(features);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: EvalMode) -> Self {
        self.mode = mode;
        self
    }

    /// Effective features; cross-domain drops the domain one-hot.
    pub fn feature_config(&self) -> Option<FeatureConfig> {
        if self.system == System::ItalianBert {
            return None;
        }
        self.features
            .or(self.system.default_features())
            .map(|f| f.for_scenario(self.scenario))
    }

    /// Feature-set label for reports.
    pub fn label(&self) -> String {
        self.feature_config().map_or_else(|| self.system.name().to_string(), |f| f.name())
    }

    /// SHA-256 over the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Checks domains and resources without assembling anything.
    pub fn check(&self, resources: &Resources) -> Result<()> {
        check_domains(self)?;
        for &d in &self.domains {
            resources.corpus.domain(d)?;
        }
        match self.feature_config() {
            Some(features) => resources.deps()?.check(&features),
            None => {
                let dir = self
                    .predictions_dir
                    .as_ref()
                    .ok_or_else(|| Error::MissingResource("Italian-BERT prediction directory".into()))?;
                for &d in &self.domains {
                    let path = dir.join(format!("{}.csv", d.slug()));
                    if !path.exists() {
                        return Err(Error::MissingResource(format!("prediction file {}", path.display())));
                    }
                }
                Ok(())
            }
        }
    }

    /// Forest seed for one domain cell.
    pub fn cell_seed(&self, domain: Domain) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(domain.index() as u64 + 1)
    }
}

/// Everything an experiment reads, already loaded.
#[derive(Debug, Clone)]
pub struct Resources {
    pub corpus: Corpus,
    /// Needed by every forest run; prediction scoring does without.
    pub lexicon: Option<AoaLexicon>,
    pub pageviews: Option<PageviewTable>,
    pub mapping: Option<ConceptMapping>,
    pub wd: Option<EmbeddingStore>,
    pub wp: Option<EmbeddingStore>,
    /// Input name to SHA-256 of the file it came from.
    pub checksums: BTreeMap<String, String>,
}

impl Resources {
    pub fn new(corpus: Corpus, lexicon: Option<AoaLexicon>) -> Self {
        Resources {
            corpus,
            lexicon,
            pageviews: None,
            mapping: None,
            wd: None,
            wp: None,
            checksums: BTreeMap::new(),
        }
    }

    pub fn deps(&self) -> Result<FeatureDeps<'_>> {
        let lexicon = self
            .lexicon
            .as_ref()
            .ok_or_else(|| Error::MissingResource("AoA lexicon".into()))?;
        Ok(FeatureDeps {
            registry: &self.corpus.registry,
            lexicon,
            pageviews: self.pageviews.as_ref(),
            mapping: self.mapping.as_ref(),
            wd: self.wd.as_ref(),
            wp: self.wp.as_ref(),
        })
    }

    pub fn record_checksum(&mut self, name: &str, path: &Path) -> Result<()> {
        self.checksums.insert(name.to_string(), file_sha256(path)?);
        Ok(())
    }
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Fails if a cross-domain training set holds any target-domain pair.
pub fn audit_training(train: &[LabeledPair], scenario: Scenario, target: Domain) -> Result<()> {
    let leaked = train.iter().filter(|p| p.domain == target).count();
    if scenario == Scenario::CrossDomain && leaked > 0 {
        return Err(Error::Config(format!(
            "cross-domain training for {target} contains {leaked} target-domain pairs"
        )));
    }
    Ok(())
}

/// One domain's work, fully prepared before any training starts.
enum Cell {
    Fit {
        train: Vec<LabeledPair>,
        eval: Vec<LabeledPair>,
    },
    Folds {
        target: Vec<LabeledPair>,
        folds: Vec<Vec<usize>>,
        fixed: Vec<LabeledPair>,
        train_on_other_folds: bool,
    },
}

fn other_domains(corpus: &Corpus, config: &ExperimentConfig, target: Domain) -> Result<Vec<LabeledPair>> {
    let mut out = Vec::new();
    if config.scenario == Scenario::InDomain && config.in_domain == InDomainTraining::TargetOnly {
        return Ok(out);
    }
    for d in Domain::ALL {
        if d != target {
            out.extend(corpus.domain(d)?.train.iter().cloned());
        }
    }
    Ok(out)
}

fn eval_pairs_for_bert(corpus: &Corpus, config: &ExperimentConfig, target: Domain) -> Result<Vec<LabeledPair>> {
    let pairs = corpus.domain(target)?;
    match config.mode {
        EvalMode::TestSet => Ok(pairs.test.clone()),
        EvalMode::Holdout { fraction } => {
            let (_, holdout) = stratified_holdout(&pairs.train, fraction, config.seed)?;
            Ok(holdout.iter().map(|&i| pairs.train[i].clone()).collect())
        }
        EvalMode::CrossValidation { .. } => Err(Error::Config(
            "Italian-BERT predictions are scored on a test set or a holdout, not folds".into(),
        )),
    }
}

fn plan_cell(corpus: &Corpus, config: &ExperimentConfig, target: Domain) -> Result<Cell> {
    let cell = match config.mode {
        EvalMode::TestSet => {
            let split = make_training_split(corpus, config.scenario, target, config.in_domain)?;
            Cell::Fit {
                train: split.train,
                eval: split.eval,
            }
        }
        EvalMode::Holdout { fraction } => {
            let pairs = &corpus.domain(target)?.train;
            let (train_idx, holdout) = stratified_holdout(pairs, fraction, config.seed)?;
            let mut train = other_domains(corpus, config, target)?;
            if config.scenario == Scenario::InDomain {
                train.extend(train_idx.iter().map(|&i| pairs[i].clone()));
            }
            Cell::Fit {
                train,
                eval: holdout.iter().map(|&i| pairs[i].clone()).collect(),
            }
        }
        EvalMode::CrossValidation { k } => {
            let target_pairs = corpus.domain(target)?.train.clone();
            let folds = stratified_kfold(&target_pairs, k, config.seed)?;
            Cell::Folds {
                target: target_pairs,
                folds,
                fixed: other_domains(corpus, config, target)?,
                train_on_other_folds: config.scenario == Scenario::InDomain,
            }
        }
    };
    match &cell {
        Cell::Fit { train, eval } => {
            audit_training(train, config.scenario, target)?;
            if eval.is_empty() {
                return Err(Error::Config(format!("no evaluation pairs for {target}")));
            }
            if train.is_empty() {
                return Err(Error::Config(format!("no training pairs for {target}")));
            }
        }
        Cell::Folds { fixed, .. } => audit_training(fixed, config.scenario, target)?,
    }
    Ok(cell)
}

fn check_domains(config: &ExperimentConfig) -> Result<()> {
    if config.domains.is_empty() {
        return Err(Error::Config("no target domains selected".into()));
    }
    let mut seen = config.domains.clone();
    seen.sort();
    seen.dedup();
    if seen.len() != config.domains.len() {
        return Err(Error::Config("a target domain is listed twice".into()));
    }
    Ok(())
}

fn prediction_rows(pairs: &[LabeledPair], preds: &[u8]) -> Vec<PredictionRow> {
    pairs
        .iter()
        .zip(preds)
        .map(|(p, &l)| PredictionRow {
            concept_a: p.a.clone(),
            concept_b: p.b.clone(),
            pred_label: l,
        })
        .collect()
}

fn run_bert(config: &ExperimentConfig, resources: &Resources) -> Result<Vec<DomainResult>> {
    let dir = config
        .predictions_dir
        .as_ref()
        .ok_or_else(|| Error::MissingResource("Italian-BERT prediction directory".into()))?;
    let mut work = Vec::new();
    for &d in &config.domains {
        let gold = eval_pairs_for_bert(&resources.corpus, config, d)?;
        let path = dir.join(format!("{}.csv", d.slug()));
        if !path.exists() {
            return Err(Error::MissingResource(format!("prediction file {}", path.display())));
        }
        work.push((d, gold, path));
    }
    work.into_iter()
        .map(|(domain, gold, path)| {
            let rows = load_predictions(&path)?;
            let metrics = score_predictions(&rows, &gold)?;
            Ok(DomainResult {
                domain,
                metrics,
                folds: Vec::new(),
                predictions: rows,
            })
        })
        .collect()
}

struct Prepared {
    domain: Domain,
    cell: Cell,
    /// Feature rows aligned with the cell's pair lists.
    mats: Vec<Matrix>,
}

fn assemble(extractor: &FeatureExtractor<'_>, pairs: &[LabeledPair], width: usize) -> Result<Matrix> {
    if pairs.is_empty() {
        return Ok(Matrix::zeros(0, width));
    }
    Ok(extractor.assemble_batch(pairs)?.matrix)
}

fn labels(pairs: &[LabeledPair]) -> Vec<u8> {
    pairs.iter().map(|p| p.label).collect()
}

/// Runs one experiment over `config.domains` with the forest learner.
pub fn run_experiment(config: &ExperimentConfig, resources: &Resources) -> Result<EvalReport> {
    run_experiment_with(config, resources, &|seed| {
        Box::new(ForestLearner::new(ForestParams { seed, ..config.forest }))
    })
}

/// Like [`run_experiment`] with a caller-chosen learner per cell seed.
/// All resources are checked, splits planned and features assembled before
/// the first model is trained.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    resources: &Resources,
    make_learner: &dyn Fn(u64) -> Box<dyn Learner>,
) -> Result<EvalReport> {
    config.check(resources)?;
    let rows = match config.feature_config() {
        None => run_bert(config, resources)?,
        Some(features) => {
            let extractor = FeatureExtractor::new(features, resources.deps()?)?;
            let width = features.len();
            let mut prepared = Vec::new();
            for &domain in &config.domains {
                let cell = plan_cell(&resources.corpus, config, domain)?;
                let mats = match &cell {
                    Cell::Fit { train, eval } => {
                        vec![assemble(&extractor, train, width)?, assemble(&extractor, eval, width)?]
                    }
                    Cell::Folds { target, fixed, .. } => {
                        vec![assemble(&extractor, target, width)?, assemble(&extractor, fixed, width)?]
                    }
                };
                prepared.push(Prepared { domain, cell, mats });
            }
            let mut rows = Vec::new();
            for p in prepared {
                let learner = make_learner(config.cell_seed(p.domain));
                rows.push(train_cell(p, learner.as_ref())?);
            }
            rows
        }
    };
    Ok(EvalReport {
        scenario: config.scenario,
        system: config.system,
        features: config.label(),
        mode: config.mode.name(),
        seed: config.seed,
        rows,
        config_hash: config.config_hash(),
        checksums: resources.checksums.clone(),
    })
}

fn train_cell(p: Prepared, learner: &dyn Learner) -> Result<DomainResult> {
    let domain = p.domain;
    match p.cell {
        Cell::Fit { train, eval } => {
            let preds = learner.fit_predict(&p.mats[0], &labels(&train), &p.mats[1])?;
            let metrics = Metrics::compute(&preds, &labels(&eval))?;
            Ok(DomainResult {
                domain,
                metrics,
                folds: Vec::new(),
                predictions: prediction_rows(&eval, &preds),
            })
        }
        Cell::Folds {
            target,
            folds,
            fixed,
            train_on_other_folds,
        } => {
            let fixed_y = labels(&fixed);
            let fixed_train = (!fixed.is_empty()).then_some(FixedTrain {
                x: &p.mats[1],
                y: &fixed_y,
            });
            let cv = cross_validate_folds(
                &p.mats[0],
                &labels(&target),
                &folds,
                fixed_train,
                train_on_other_folds,
                learner,
            )?;
            Ok(DomainResult {
                domain,
                metrics: cv.mean,
                predictions: prediction_rows(&target, &cv.predictions),
                folds: cv.folds,
            })
        }
    }
}

/// Checks every configuration, then runs each in turn; the first failure
/// aborts the grid.
pub fn run_ablation(configs: &[ExperimentConfig], resources: &Resources) -> Result<Vec<EvalReport>> {
    for c in configs {
        c.check(resources)?;
    }
    configs.iter().map(|c| run_experiment(c, resources)).collect()
}

/// The ablation grid: for each scenario the raw rows (complexity,
/// wp_embedding, optionally Italian-BERT) then the structured ones
/// (complexity +page_view, wd_embedding, wd+wp_embedding,
/// complexity +page_view +wd_embedding).
pub fn ablation_grid(mode: EvalMode, seed: u64, bert_predictions: Option<&Path>) -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for scenario in [Scenario::InDomain, Scenario::CrossDomain] {
        let forest = |f: FeatureConfig| {
            ExperimentConfig::new(System::Complex, scenario)
                .with_features(f)
                .with_seed(seed)
                .with_mode(mode)
        };
        out.push(forest(FeatureConfig::complexity_only()));
        out.push(forest(FeatureConfig::wp_only()));
        if let Some(dir) = bert_predictions {
            let mut bert = ExperimentConfig::new(System::ItalianBert, scenario)
                .with_seed(seed)
                .with_mode(mode);
            bert.predictions_dir = Some(dir.to_path_buf());
            out.push(bert);
        }
        out.push(forest(FeatureConfig::complex()));
        out.push(forest(FeatureConfig::wd_only()));
        out.push(forest(FeatureConfig::wd_wp()));
        out.push(
            ExperimentConfig::new(System::ComplexWd, scenario)
                .with_seed(seed)
                .with_mode(mode),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_names_round_trip() {
        for s in [System::Complex, System::ComplexWd, System::ItalianBert] {
            assert_eq!(s.name().parse::<System>().unwrap(), s);
        }
        assert!("svm".parse::<System>().is_err());
    }

    #[test]
    fn cross_domain_drops_the_onehot() {
        let c = ExperimentConfig::new(System::Complex, Scenario::CrossDomain);
        assert!(!c.feature_config().unwrap().domain_onehot);
        let c = ExperimentConfig::new(System::ComplexWd, Scenario::InDomain);
        assert!(c.feature_config().unwrap().domain_onehot);
        assert!(ExperimentConfig::new(System::ItalianBert, Scenario::InDomain).feature_config().is_none());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::new(System::Complex, Scenario::InDomain).with_seed(7);
        assert_eq!(a.config_hash(), a.clone().config_hash());
        assert_eq!(a.config_hash().len(), 64);
        assert_ne!(a.config_hash(), a.clone().with_seed(8).config_hash());
    }

    #[test]
    fn grid_shape() {
        let grid = ablation_grid(EvalMode::CrossValidation { k: 10 }, 0, None);
        assert_eq!(grid.len(), 12);
        let with_bert = ablation_grid(EvalMode::Holdout { fraction: 0.3 }, 0, Some(Path::new("p")));
        assert_eq!(with_bert.len(), 14);
        assert_eq!(grid[2].label(), "complexity +page_view");
        assert_eq!(grid[4].label(), "wd+wp_embedding");
    }

    #[test]
    fn audit_catches_leaks() {
        let p = LabeledPair {
            a: "x".into(),
            b: "y".into(),
            label: 1,
            domain: Domain::Physics,
        };
        assert!(audit_training(std::slice::from_ref(&p), Scenario::CrossDomain, Domain::Physics).is_err());
        assert!(audit_training(std::slice::from_ref(&p), Scenario::InDomain, Domain::Physics).is_ok());
        assert!(audit_training(&[p], Scenario::CrossDomain, Domain::Geometry).is_ok());
    }
}
