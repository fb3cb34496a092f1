//! Concepts, labeled pairs and the train/eval splits built from them.
//!
//! A [`LabeledPair`] `(a, b)` is positive when `b` is a prerequisite of `a`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Domain {
    DataMining,
    Geometry,
    Physics,
    Precalculus,
}

impl Domain {
    /// Canonical order, also the one-hot slot order.
    pub const ALL: [Domain; 4] = [
        Domain::DataMining,
        Domain::Geometry,
        Domain::Physics,
        Domain::Precalculus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Directory/file-name form, e.g. `data_mining`.
    pub fn slug(self) -> &'static str {
        match self {
            Domain::DataMining => "data_mining",
            Domain::Geometry => "geometry",
            Domain::Physics => "physics",
            Domain::Precalculus => "precalculus",
        }
    }

    /// Report column label.
    pub fn short(self) -> &'static str {
        match self {
            Domain::DataMining => "DM",
            Domain::Geometry => "Geo",
            Domain::Physics => "Phy",
            Domain::Precalculus => "Prec",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .collect::<String>()
            .to_lowercase();
        match key.as_str() {
            "datamining" | "dm" => Ok(Domain::DataMining),
            "geometry" | "geo" => Ok(Domain::Geometry),
            "physics" | "phy" => Ok(Domain::Physics),
            "precalculus" | "prec" => Ok(Domain::Precalculus),
            _ => Err(Error::UnknownDomain(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub title: String,
    pub domain: Domain,
    pub description: String,
}

/// Concepts keyed by id, in file order.
#[derive(Debug, Clone, Default)]
pub struct ConceptRegistry {
    concepts: Vec<Concept>,
    index: HashMap<String, usize>,
}

impl ConceptRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, concept: Concept) -> Result<()> {
        if self.index.contains_key(&concept.id) {
            return Err(Error::DuplicateId(concept.id));
        }
        self.index.insert(concept.id.clone(), self.concepts.len());
        self.concepts.push(concept);
        Ok(())
    }

    pub fn from_concepts(concepts: impl IntoIterator<Item = Concept>) -> Result<Self> {
        let mut registry = Self::new();
        for c in concepts {
            registry.insert(c)?;
        }
        Ok(registry)
    }

    pub fn get(&self, id: &str) -> Option<&Concept> {
        self.index.get(id).map(|&i| &self.concepts[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.iter()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    /// Fails with every id referenced by `pairs` that is not registered.
    pub fn check_pairs<'a>(&self, pairs: impl IntoIterator<Item = &'a LabeledPair>) -> Result<()> {
        let mut missing: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        for pair in pairs {
            for id in [&pair.a, &pair.b] {
                if !self.index.contains_key(id) && seen.insert(id.clone()) {
                    missing.push(id.clone());
                }
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingIds(missing))
        }
    }

    /// Writes the registry in the pages TSV format, header included.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut buf = String::from("concept_id\ttitle\tdomain\tdescription\n");
        for c in &self.concepts {
            buf.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                c.id,
                escape_field(&c.title),
                c.domain.slug(),
                escape_field(&c.description)
            ));
        }
        out.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Reads `concept_id<TAB>title<TAB>domain<TAB>description`. A leading header
/// row is skipped; `\n` escapes in descriptions are expanded.
pub fn load_concept_pages(path: &Path) -> Result<ConceptRegistry> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut registry = ConceptRegistry::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || (lineno == 1 && line.starts_with("concept_id\t")) {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(path, lineno, format!("expected 4 tab-separated fields, found {}", fields.len())));
        }
        let domain = fields[2]
            .parse::<Domain>()
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let description = unescape_field(fields[3]);
        if description.trim().is_empty() {
            return Err(Error::parse(path, lineno, format!("empty description for `{}`", fields[0])));
        }
        registry.insert(Concept {
            id: fields[0].to_string(),
            title: unescape_field(fields[1]),
            domain,
            description,
        })?;
    }
    Ok(registry)
}

pub trait Labeled {
    fn label(&self) -> u8;
}

impl Labeled for u8 {
    fn label(&self) -> u8 {
        *self
    }
}

impl Labeled for bool {
    fn label(&self) -> u8 {
        u8::from(*self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub a: String,
    pub b: String,
    pub label: u8,
    pub domain: Domain,
}

impl Labeled for LabeledPair {
    fn label(&self) -> u8 {
        self.label
    }
}

/// Number of pairs and the fraction labeled positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    pub count: usize,
    pub positives: usize,
}

impl PairStats {
    pub fn of<T: Labeled>(items: &[T]) -> Self {
        PairStats {
            count: items.len(),
            positives: items.iter().filter(|p| p.label() == 1).count(),
        }
    }

    /// `None` for an empty set.
    pub fn positive_fraction(&self) -> Option<f64> {
        (self.count > 0).then(|| self.positives as f64 / self.count as f64)
    }
}

/// Reads a `concept_a,concept_b,label` CSV into pairs of `domain`.
pub fn load_pairs(path: &Path, domain: Domain) -> Result<Vec<LabeledPair>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_pairs(file, path, domain)
}

fn read_pairs<R: std::io::Read>(reader: R, path: &Path, domain: Domain) -> Result<Vec<LabeledPair>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "concept_a" || &headers[1] != "concept_b" || &headers[2] != "label" {
        return Err(Error::parse(path, 1, "expected header `concept_a,concept_b,label`"));
    }
    let mut pairs = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(Error::parse(path, line, format!("expected 3 fields, found {}", record.len())));
        }
        let label = match &record[2] {
            "0" => 0,
            "1" => 1,
            other => return Err(Error::parse(path, line, format!("unknown label `{other}`"))),
        };
        let (a, b) = (record[0].to_string(), record[1].to_string());
        if a.is_empty() || b.is_empty() {
            return Err(Error::parse(path, line, "empty concept id"));
        }
        if a == b {
            return Err(Error::parse(path, line, format!("pair relates `{a}` to itself")));
        }
        pairs.push(LabeledPair { a, b, label, domain });
    }
    Ok(pairs)
}

pub fn write_pairs(path: &Path, pairs: &[LabeledPair]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["concept_a", "concept_b", "label"])?;
    for p in pairs {
        wtr.write_record([p.a.as_str(), p.b.as_str(), if p.label == 1 { "1" } else { "0" }])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Default)]
pub struct DomainPairs {
    pub train: Vec<LabeledPair>,
    /// Held-out evaluation pairs; may be empty when only training data exists.
    pub test: Vec<LabeledPair>,
}

/// Concept pages plus per-domain labeled pairs.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub registry: ConceptRegistry,
    pub domains: BTreeMap<Domain, DomainPairs>,
}

impl Corpus {
    /// Loads `pages.tsv` and `<slug>/train.csv` (and `<slug>/test.csv` when
    /// present) for every domain under `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let registry = load_concept_pages(&dir.join("pages.tsv"))?;
        let mut domains = BTreeMap::new();
        for domain in Domain::ALL {
            let base = dir.join(domain.slug());
            let train = load_pairs(&base.join("train.csv"), domain)?;
            let test_path = base.join("test.csv");
            let test = if test_path.exists() {
                load_pairs(&test_path, domain)?
            } else {
                Vec::new()
            };
            domains.insert(domain, DomainPairs { train, test });
        }
        let corpus = Corpus { registry, domains };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.registry.write_tsv(&dir.join("pages.tsv"))?;
        for (domain, pairs) in &self.domains {
            let base = dir.join(domain.slug());
            std::fs::create_dir_all(&base).map_err(|e| Error::io(&base, e))?;
            write_pairs(&base.join("train.csv"), &pairs.train)?;
            if !pairs.test.is_empty() {
                write_pairs(&base.join("test.csv"), &pairs.test)?;
            }
        }
        Ok(())
    }

    /// Every referenced concept id resolves.
    pub fn validate(&self) -> Result<()> {
        self.registry
            .check_pairs(self.domains.values().flat_map(|d| d.train.iter().chain(&d.test)))
    }

    pub fn domain(&self, domain: Domain) -> Result<&DomainPairs> {
        self.domains.get(&domain).ok_or(Error::MissingDomain(domain))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    InDomain,
    CrossDomain,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::InDomain => "in-domain",
            Scenario::CrossDomain => "cross-domain",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().replace('_', "-").as_str() {
            "in-domain" | "in" | "indomain" => Ok(Scenario::InDomain),
            "cross-domain" | "cross" | "crossdomain" => Ok(Scenario::CrossDomain),
            _ => Err(Error::Config(format!("unknown scenario `{s}`"))),
        }
    }
}

/// How the in-domain training set is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum InDomainTraining {
    /// Training pairs of all four domains.
    #[default]
    Union,
    /// Only the target domain's training pairs.
    TargetOnly,
}

#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<LabeledPair>,
    pub eval: Vec<LabeledPair>,
    pub scenario: Scenario,
    pub target_domain: Domain,
}

impl DatasetSplit {
    /// Number of training pairs drawn from the target domain.
    pub fn target_pairs_in_train(&self) -> usize {
        self.train.iter().filter(|p| p.domain == self.target_domain).count()
    }

    /// Fails if a cross-domain split leaks target-domain training pairs.
    pub fn audit(&self) -> Result<()> {
        let leaked = self.target_pairs_in_train();
        if self.scenario == Scenario::CrossDomain && leaked > 0 {
            return Err(Error::Config(format!(
                "cross-domain split for {} contains {leaked} target-domain training pairs",
                self.target_domain
            )));
        }
        Ok(())
    }
}

/// Training pairs for `scenario`, evaluated on the target domain's test pairs.
pub fn make_training_split(
    corpus: &Corpus,
    scenario: Scenario,
    target: Domain,
    in_domain: InDomainTraining,
) -> Result<DatasetSplit> {
    let target_pairs = corpus.domain(target)?;
    let mut train = Vec::new();
    for domain in Domain::ALL {
        let include = match scenario {
            Scenario::CrossDomain => domain != target,
            Scenario::InDomain => match in_domain {
                InDomainTraining::Union => true,
                InDomainTraining::TargetOnly => domain == target,
            },
        };
        if include {
            train.extend(corpus.domain(domain)?.train.iter().cloned());
        }
    }
    let split = DatasetSplit {
        train,
        eval: target_pairs.test.clone(),
        scenario,
        target_domain: target,
    };
    split.audit()?;
    Ok(split)
}

fn check_class_sizes<T: Labeled>(items: &[T], k: usize) -> Result<[Vec<usize>; 2]> {
    let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, item) in items.iter().enumerate() {
        let label = item.label();
        if label > 1 {
            return Err(Error::Config(format!("label {label} is not binary")));
        }
        classes[label as usize].push(i);
    }
    for (label, members) in classes.iter().enumerate() {
        if members.len() < k {
            return Err(Error::TooFewMembers {
                label: label as u8,
                count: members.len(),
                k,
            });
        }
    }
    Ok(classes)
}

/// Splits item indices into `k` folds with per-class proportions preserved.
///
/// Each class is shuffled with a seeded RNG and dealt round-robin; the dealing
/// cursor carries over from one class to the next so fold sizes differ by at
/// most one. Indices within each fold are ascending.
pub fn stratified_kfold<T: Labeled>(items: &[T], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    let classes = check_class_sizes(items, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut cursor = 0;
    // minority-first dealing keeps each class's spread independent of the other's size
    let order = if classes[1].len() <= classes[0].len() { [1, 0] } else { [0, 1] };
    for label in order {
        let mut members = classes[label].clone();
        members.shuffle(&mut rng);
        for idx in members {
            folds[cursor].push(idx);
            cursor = (cursor + 1) % k;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Per-class holdout of `round(fraction * class_size)` items.
/// Returns `(train, holdout)` index lists, both ascending.
pub fn stratified_holdout<T: Labeled>(items: &[T], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("holdout fraction must be in (0, 1), got {fraction}")));
    }
    let classes = check_class_sizes(items, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut holdout) = (Vec::new(), Vec::new());
    for mut members in classes {
        members.shuffle(&mut rng);
        let n_holdout = (fraction * members.len() as f64).round() as usize;
        let n_holdout = n_holdout.clamp(1, members.len() - 1);
        holdout.extend_from_slice(&members[..n_holdout]);
        train.extend_from_slice(&members[n_holdout..]);
    }
    train.sort_unstable();
    holdout.sort_unstable();
    Ok((train, holdout))
}
