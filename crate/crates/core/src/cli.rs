//! Command-line front end.
//!
//! Every subcommand accepts `--config <file.toml>` whose keys mirror the long
//! flag names (with underscores); flags given on the command line win.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Deserialize;

use crate::corpus::{make_training_split, Corpus, Domain, InDomainTraining, LabeledPair, Scenario};
use crate::embeddings::{load_graph_embeddings, load_title_embeddings};
use crate::error::{Error, Result};
use crate::eval::{
    ablation_grid, file_sha256, render_table, run_ablation, run_experiment, write_predictions, write_report_csv,
    EvalMode, EvalReport, ExperimentConfig, ForestLearner, Resources, RunManifest, System,
};
use crate::features::{FeatureConfig, FeatureExtractor};
use crate::forest::ForestParams;
use crate::lexres::{
    load_aoa_lexicon, load_concept_mapping, ConceptMapping, PageviewCache, PageviewClient, PageviewTable,
    PageviewWindow, SparqlClient,
};

#[derive(Parser, Debug)]
#[command(
    name = "prelearn",
    version,
    about = "Prerequisite-relation classification between Wikipedia concepts",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fill the pageview cache for every concept title.
    FetchPageviews(Opts),
    /// Resolve concept titles to Wikidata items.
    FetchMapping(Opts),
    /// Cut pretrained embedding files down to the corpus vocabulary.
    SliceEmbeddings(Opts),
    /// Write the assembled feature matrix as CSV.
    Features(Opts),
    /// Train a forest on one training split and save it.
    Train(Opts),
    /// Score one system in one scenario over the four domains.
    Evaluate(Opts),
    /// Run the feature ablation grid.
    Ablate(Opts),
}

/// Flags shared by all subcommands; each reads the ones it needs.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Opts {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Dataset directory (pages.tsv and <domain>/train.csv, test.csv).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Age-of-acquisition lexicon (word<TAB>value).
    #[arg(long)]
    aoa: Option<PathBuf>,
    /// Pageview cache (JSON).
    #[arg(long)]
    pageviews: Option<PathBuf>,
    /// Concept mapping (concept_id<TAB>title<TAB>qid).
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Wikidata entity vectors (TSV).
    #[arg(long)]
    wd: Option<PathBuf>,
    /// Wikipedia title vectors (word2vec text).
    #[arg(long)]
    wp: Option<PathBuf>,
    /// Full Wikidata vector file to slice.
    #[arg(long)]
    wd_source: Option<PathBuf>,
    /// Full Wikipedia vector file to slice.
    #[arg(long)]
    wp_source: Option<PathBuf>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long)]
    out: Option<PathBuf>,
    /// complex, complex+wd or italian-bert.
    #[arg(long)]
    system: Option<String>,
    /// Feature preset overriding the system's: complexity, complex,
    /// complex+wd, wd, wp or wd+wp.
    #[arg(long)]
    features: Option<String>,
    /// in-domain or cross-domain.
    #[arg(long)]
    scenario: Option<String>,
    /// Target domains, comma separated (default: all four).
    #[arg(long, value_delimiter = ',')]
    domain: Option<Vec<String>>,
    /// test, cv or holdout.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    holdout_fraction: Option<f64>,
    /// In-domain training set: union (all domains) or target-only.
    #[arg(long)]
    in_domain_training: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    mtry: Option<usize>,
    /// Directory of <domain>.csv prediction files for Italian-BERT.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// First day of the pageview window (YYYYMMDD).
    #[arg(long)]
    start: Option<String>,
    /// Last day of the pageview window (YYYYMMDD).
    #[arg(long)]
    end: Option<String>,
    /// Parallel pageview requests.
    #[arg(long)]
    concurrency: Option<usize>,
    /// Never touch the network; cache misses are errors.
    #[arg(long)]
    offline: bool,
}

macro_rules! prefer_flags {
    ($flags:ident, $file:ident; $($field:ident),*) => {
        Opts {
            config: $flags.config,
            offline: $flags.offline || $file.offline,
            $($field: $flags.$field.or($file.$field),)*
        }
    };
}

impl Opts {
    fn resolve(self) -> Result<Opts> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let file: Opts = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let flags = self;
        Ok(prefer_flags!(flags, file;
            data, aoa, pageviews, mapping, wd, wp, wd_source, wp_source, out, system, features, scenario,
            domain, mode, folds, holdout_fraction, in_domain_training, seed, trees, mtry, predictions,
            start, end, concurrency))
    }

    fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("--{flag} is required")))
    }

    fn scenario(&self) -> Result<Scenario> {
        self.scenario.as_deref().map_or(Ok(Scenario::InDomain), str::parse)
    }

    fn system(&self) -> Result<System> {
        self.system.as_deref().map_or(Ok(System::Complex), str::parse)
    }

    fn domains(&self) -> Result<Vec<Domain>> {
        match &self.domain {
            None => Ok(Domain::ALL.to_vec()),
            Some(list) => list.iter().map(|d| d.parse()).collect(),
        }
    }

    fn window(&self) -> Result<PageviewWindow> {
        let default = PageviewWindow::default();
        PageviewWindow::new(
            self.start.as_deref().unwrap_or(&default.start),
            self.end.as_deref().unwrap_or(&default.end),
        )
    }

    fn mode(&self, default: &str) -> Result<EvalMode> {
        match self.mode.as_deref().unwrap_or(default) {
            "test" => Ok(EvalMode::TestSet),
            "cv" => Ok(EvalMode::CrossValidation {
                k: self.folds.unwrap_or(10),
            }),
            "holdout" => Ok(EvalMode::Holdout {
                fraction: self.holdout_fraction.unwrap_or(0.3),
            }),
            other => Err(Error::Config(format!("unknown mode `{other}` (test, cv, holdout)"))),
        }
    }

    fn feature_override(&self) -> Result<Option<FeatureConfig>> {
        let Some(name) = self.features.as_deref() else {
            return Ok(None);
        };
        let preset = match name.trim().to_lowercase().replace('_', "-").as_str() {
            "complexity" => FeatureConfig::complexity_only(),
            "complex" | "complexity+page-view" => FeatureConfig::complex(),
            "complex+wd" | "complex-wd" => FeatureConfig::complex_wd(),
            "wd" => FeatureConfig::wd_only(),
            "wp" => FeatureConfig::wp_only(),
            "wd+wp" => FeatureConfig::wd_wp(),
            other => return Err(Error::Config(format!("unknown feature preset `{other}`"))),
        };
        Ok(Some(preset))
    }

    fn forest(&self) -> ForestParams {
        let defaults = ForestParams::default();
        ForestParams {
            n_trees: self.trees.unwrap_or(defaults.n_trees),
            mtry: self.mtry.or(defaults.mtry),
            ..defaults
        }
    }

    fn experiment(&self, default_mode: &str) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::new(self.system()?, self.scenario()?)
            .with_seed(self.seed.unwrap_or(0))
            .with_mode(self.mode(default_mode)?);
        config.features = self.feature_override()?;
        config.domains = self.domains()?;
        config.forest = self.forest();
        config.in_domain = match self.in_domain_training.as_deref() {
            None | Some("union") => InDomainTraining::Union,
            Some("target-only") | Some("target_only") => InDomainTraining::TargetOnly,
            Some(other) => return Err(Error::Config(format!("unknown in-domain training `{other}`"))),
        };
        config.predictions_dir = self.predictions.clone();
        Ok(config)
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
/// Returns 0 on success, 1 on a runtime failure and 2 on a usage error.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let command_line = argv.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>().join(" ");
    match dispatch(cli.command, &command_line) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, command_line: &str) -> Result<String> {
    match command {
        Command::FetchPageviews(o) => fetch_pageviews(&o.resolve()?),
        Command::FetchMapping(o) => fetch_mapping(&o.resolve()?),
        Command::SliceEmbeddings(o) => slice_embeddings(&o.resolve()?),
        Command::Features(o) => features(&o.resolve()?),
        Command::Train(o) => train(&o.resolve()?, command_line),
        Command::Evaluate(o) => evaluate(&o.resolve()?, command_line),
        Command::Ablate(o) => ablate(&o.resolve()?, command_line),
    }
}

fn load_corpus(o: &Opts, checksums: &mut BTreeMap<String, String>) -> Result<Corpus> {
    let dir = Opts::require(&o.data, "data")?;
    let corpus = Corpus::load_dir(dir)?;
    checksums.insert("pages.tsv".into(), file_sha256(&dir.join("pages.tsv"))?);
    for d in Domain::ALL {
        for part in ["train", "test"] {
            let path = dir.join(d.slug()).join(format!("{part}.csv"));
            if path.exists() {
                checksums.insert(format!("{}/{part}.csv", d.slug()), file_sha256(&path)?);
            }
        }
    }
    Ok(corpus)
}

fn pageview_table(o: &Opts, titles: Vec<&str>) -> Result<(PageviewTable, usize)> {
    let cache_path = Opts::require(&o.pageviews, "pageviews")?;
    let mut cache = PageviewCache::load_or_default(cache_path)?;
    let before = cache.len();
    let window = o.window()?;
    let client = if o.offline {
        None
    } else {
        Some(PageviewClient::from_env()?)
    };
    let table = PageviewTable::build(
        titles,
        &window,
        &mut cache,
        client.as_ref().map(|c| (c, o.concurrency.unwrap_or(4))),
    )?;
    let fetched = cache.len().saturating_sub(before);
    if fetched > 0 {
        cache.save(cache_path)?;
    }
    Ok((table, fetched))
}

fn wp_keys(corpus: &Corpus, mapping: Option<&ConceptMapping>) -> HashSet<String> {
    corpus
        .registry
        .iter()
        .map(|c| {
            mapping
                .and_then(|m| m.get(&c.id))
                .map_or_else(|| c.title.clone(), |e| e.title.clone())
        })
        .collect()
}

fn wd_keys(mapping: &ConceptMapping) -> HashSet<String> {
    mapping.iter().filter_map(|(_, e)| e.qid.clone()).collect()
}

/// Loads what the given feature configurations need, recording checksums.
fn load_resources(o: &Opts, features: &[FeatureConfig]) -> Result<Resources> {
    let mut checksums = BTreeMap::new();
    let corpus = load_corpus(o, &mut checksums)?;
    let need = |f: fn(&FeatureConfig) -> bool| features.iter().any(f);
    let lexicon = match &o.aoa {
        Some(path) => {
            checksums.insert("aoa".into(), file_sha256(path)?);
            Some(load_aoa_lexicon(path)?)
        }
        None if !features.is_empty() => return Err(Error::MissingResource("AoA lexicon (--aoa)".into())),
        None => None,
    };
    let mut resources = Resources::new(corpus, lexicon);
    if need(|f| f.page_view) {
        let titles = resources.corpus.registry.iter().map(|c| c.title.as_str()).collect();
        let (table, fetched) = pageview_table(o, titles)?;
        info!("pageviews: {} titles, {fetched} fetched", table.len());
        resources.pageviews = Some(table);
        if let Some(p) = &o.pageviews {
            checksums.insert("pageviews".into(), file_sha256(p)?);
        }
    }
    if let Some(path) = &o.mapping {
        checksums.insert("mapping".into(), file_sha256(path)?);
        resources.mapping = Some(load_concept_mapping(path)?);
    }
    if need(|f| f.wd_embedding) {
        let mapping = resources
            .mapping
            .as_ref()
            .ok_or_else(|| Error::MissingResource("concept → Wikidata mapping (--mapping)".into()))?;
        let path = Opts::require(&o.wd, "wd")?;
        let dim = features.iter().find(|f| f.wd_embedding).map_or(0, |f| f.wd_dim);
        checksums.insert("wd".into(), file_sha256(path)?);
        resources.wd = Some(load_graph_embeddings(path, Some(&wd_keys(mapping)), dim)?);
    }
    if need(|f| f.wp_embedding) {
        let path = Opts::require(&o.wp, "wp")?;
        let dim = features.iter().find(|f| f.wp_embedding).map_or(0, |f| f.wp_dim);
        let keys = wp_keys(&resources.corpus, resources.mapping.as_ref());
        checksums.insert("wp".into(), file_sha256(path)?);
        resources.wp = Some(load_title_embeddings(path, Some(&keys), dim)?);
    }
    resources.checksums = checksums;
    Ok(resources)
}

fn fetch_pageviews(o: &Opts) -> Result<String> {
    let corpus = load_corpus(o, &mut BTreeMap::new())?;
    let titles = corpus.registry.iter().map(|c| c.title.as_str()).collect();
    let (table, fetched) = pageview_table(o, titles)?;
    let path = Opts::require(&o.pageviews, "pageviews")?;
    Ok(format!(
        "pageviews for {} titles in {} ({fetched} fetched)",
        table.len(),
        path.display()
    ))
}

fn fetch_mapping(o: &Opts) -> Result<String> {
    if o.offline {
        return Err(Error::Config("fetch-mapping queries Wikidata and cannot run with --offline".into()));
    }
    let corpus = load_corpus(o, &mut BTreeMap::new())?;
    let out = Opts::require(&o.out, "out")?;
    let mapping = SparqlClient::from_env()?.fetch_mapping(corpus.registry.iter().map(|c| (c.id.as_str(), c.title.as_str())))?;
    mapping.write_tsv(out)?;
    Ok(format!(
        "mapped {} concepts ({} without a Wikidata item) to {}",
        mapping.len(),
        mapping.missing_qids().len(),
        out.display()
    ))
}

fn slice_embeddings(o: &Opts) -> Result<String> {
    let corpus = load_corpus(o, &mut BTreeMap::new())?;
    let out = Opts::require(&o.out, "out")?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mapping = o.mapping.as_deref().map(load_concept_mapping).transpose()?;
    let mut parts = Vec::new();
    if let Some(src) = &o.wd_source {
        let mapping = mapping
            .as_ref()
            .ok_or_else(|| Error::MissingResource("concept → Wikidata mapping (--mapping)".into()))?;
        let keys = wd_keys(mapping);
        let store = load_graph_embeddings(src, Some(&keys), crate::embeddings::GRAPH_DIM)?;
        let path = out.join("wikidata.tsv");
        store.write_tsv(&path)?;
        parts.push(format!("{}/{} Wikidata vectors to {}", store.len(), keys.len(), path.display()));
    }
    if let Some(src) = &o.wp_source {
        let keys = wp_keys(&corpus, mapping.as_ref());
        let store = load_title_embeddings(src, Some(&keys), crate::embeddings::TITLE_DIM)?;
        let path = out.join("wikipedia.txt");
        store.write_text(&path)?;
        parts.push(format!("{}/{} title vectors to {}", store.len(), keys.len(), path.display()));
    }
    if parts.is_empty() {
        return Err(Error::Config("nothing to slice: pass --wd-source and/or --wp-source".into()));
    }
    Ok(format!("sliced {}", parts.join("; ")))
}

fn forest_features(config: &ExperimentConfig) -> Result<FeatureConfig> {
    config
        .feature_config()
        .ok_or_else(|| Error::Config("Italian-BERT has no feature matrix; use the fine-tuning component".into()))
}

fn features(o: &Opts) -> Result<String> {
    let config = o.experiment("test")?;
    let features = forest_features(&config)?;
    let resources = load_resources(o, &[features])?;
    let out = Opts::require(&o.out, "out")?;
    let mut pairs: Vec<LabeledPair> = Vec::new();
    for d in &config.domains {
        let dp = resources.corpus.domain(*d)?;
        pairs.extend(dp.train.iter().chain(&dp.test).cloned());
    }
    let matrix = FeatureExtractor::new(features, resources.deps()?)?.assemble_batch(&pairs)?;
    matrix.write_csv(out)?;
    Ok(format!(
        "wrote {} rows x {} features ({}) to {}",
        matrix.matrix.rows(),
        matrix.matrix.cols(),
        matrix.layout_id,
        out.display()
    ))
}

fn train(o: &Opts, command_line: &str) -> Result<String> {
    let config = o.experiment("test")?;
    let features = forest_features(&config)?;
    let target = match (config.scenario, config.domains.as_slice()) {
        (_, [one]) => *one,
        (Scenario::InDomain, _) if config.in_domain == InDomainTraining::Union => Domain::DataMining,
        _ => return Err(Error::Config("pass exactly one --domain for this training split".into())),
    };
    let resources = load_resources(o, &[features])?;
    config.check(&resources)?;
    let out = Opts::require(&o.out, "out")?;
    let split = make_training_split(&resources.corpus, config.scenario, target, config.in_domain)?;
    let matrix = FeatureExtractor::new(features, resources.deps()?)?.assemble_batch(&split.train)?;
    let learner = ForestLearner::new(ForestParams {
        seed: config.cell_seed(target),
        ..config.forest
    });
    let model = learner.fit(&matrix.matrix, &matrix.labels, &matrix.layout_id, matrix.layout.clone())?;
    model.save(out)?;
    let manifest_path = out.with_extension("manifest.json");
    RunManifest::new(command_line, std::slice::from_ref(&config), &resources.checksums).write(&manifest_path)?;
    Ok(format!(
        "trained {} trees on {} pairs ({}) -> {}",
        model.forest.trees().len(),
        split.train.len(),
        matrix.layout_id,
        out.display()
    ))
}

fn write_outputs(out: &Path, stem: &str, reports: &[EvalReport], manifest: &RunManifest) -> Result<PathBuf> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let csv = out.join(format!("{stem}.csv"));
    write_report_csv(&csv, reports)?;
    let txt = out.join(format!("{stem}.txt"));
    std::fs::write(&txt, render_table(reports)).map_err(|e| Error::io(&txt, e))?;
    manifest.write(&out.join("manifest.json"))?;
    Ok(csv)
}

fn evaluate(o: &Opts, command_line: &str) -> Result<String> {
    let config = o.experiment("test")?;
    let features: Vec<FeatureConfig> = config.feature_config().into_iter().collect();
    let resources = load_resources(o, &features)?;
    let out = Opts::require(&o.out, "out")?;
    let report = run_experiment(&config, &resources)?;
    let manifest = RunManifest::new(command_line, std::slice::from_ref(&config), &resources.checksums);
    let csv = write_outputs(out, "report", std::slice::from_ref(&report), &manifest)?;
    if config.system != System::ItalianBert {
        let dir = out.join("predictions");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for row in &report.rows {
            write_predictions(&dir.join(format!("{}.csv", row.domain.slug())), &row.predictions)?;
        }
    }
    let avg = report.average().map_or(0.0, |m| m.f1_pos);
    Ok(format!(
        "{} {} ({}): AVG F1 {avg:.3} over {} domains -> {}",
        config.system,
        config.scenario,
        config.mode.name(),
        report.rows.len(),
        csv.display()
    ))
}

fn ablate(o: &Opts, command_line: &str) -> Result<String> {
    let mode = o.mode("cv")?;
    let seed = o.seed.unwrap_or(0);
    let domains = o.domains()?;
    let forest = o.forest();
    let configs: Vec<ExperimentConfig> = ablation_grid(mode, seed, o.predictions.as_deref())
        .into_iter()
        .map(|mut c| {
            c.domains = domains.clone();
            c.forest = forest;
            c
        })
        .collect();
    let features: Vec<FeatureConfig> = configs.iter().filter_map(ExperimentConfig::feature_config).collect();
    let resources = load_resources(o, &features)?;
    let out = Opts::require(&o.out, "out")?;
    let reports = run_ablation(&configs, &resources)?;
    let manifest = RunManifest::new(command_line, &configs, &resources.checksums);
    let csv = write_outputs(out, "ablation", &reports, &manifest)?;
    Ok(format!("ablation: {} runs ({}) -> {}", reports.len(), mode.name(), csv.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 3\ntrees = 50\nscenario = \"cross-domain\"\noffline = true\n").unwrap();
        let flags = Opts {
            config: Some(path),
            seed: Some(9),
            ..Opts::default()
        };
        let o = flags.resolve().unwrap();
        assert_eq!(o.seed, Some(9));
        assert_eq!(o.trees, Some(50));
        assert!(o.offline);
        assert_eq!(o.scenario().unwrap(), Scenario::CrossDomain);
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "sed = 3\n").unwrap();
        assert!(Opts {
            config: Some(path),
            ..Opts::default()
        }
        .resolve()
        .is_err());
    }

    #[test]
    fn modes_and_presets() {
        let o = Opts {
            mode: Some("cv".into()),
            folds: Some(5),
            features: Some("wd+wp".into()),
            ..Opts::default()
        };
        assert_eq!(o.mode("test").unwrap(), EvalMode::CrossValidation { k: 5 });
        assert_eq!(o.feature_override().unwrap(), Some(FeatureConfig::wd_wp()));
        assert_eq!(Opts::default().mode("holdout").unwrap(), EvalMode::Holdout { fraction: 0.3 });
        assert!(Opts {
            mode: Some("loo".into()),
            ..Opts::default()
        }
        .mode("test")
        .is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_command(["prelearn"]), 2);
        assert_eq!(run_command(["prelearn", "evaluate", "--bogus"]), 2);
        assert_eq!(run_command(["prelearn", "nonsense"]), 2);
    }
}
