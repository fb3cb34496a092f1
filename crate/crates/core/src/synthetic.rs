//! Seeded synthetic corpora with a planted prerequisite signal.
//!
//! Each domain holds concepts on a small number of difficulty levels. A
//! harder concept has longer descriptions, more formulas, later-acquired
//! words, fewer page views and embeddings shifted along a level axis.
//! Positive pairs `(a, b)` have `b` on a lower level than `a`, and `a`'s
//! description names `b` unless the pair is one of the flipped ones; the
//! flip rate is set so that the "b named in a" indicator correlates with the
//! label at the requested strength.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Concept, ConceptRegistry, Corpus, Domain, DomainPairs, LabeledPair};
use crate::embeddings::{EmbeddingStore, GRAPH_DIM, TITLE_DIM};
use crate::error::{Error, Result};
use crate::eval::Resources;
use crate::lexres::{AoaLexicon, ConceptMapping, PageviewCache, PageviewSeries, PageviewTable, PageviewWindow};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub concepts_per_domain: usize,
    pub train_pairs_per_domain: usize,
    pub test_pairs_per_domain: usize,
    /// Target correlation between the planted mention and the label.
    pub correlation: f64,
    pub positive_fraction: f64,
    pub levels: usize,
    pub wd_dim: usize,
    pub wp_dim: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            concepts_per_domain: 40,
            train_pairs_per_domain: 100,
            test_pairs_per_domain: 40,
            correlation: 0.9,
            positive_fraction: 0.5,
            levels: 5,
            wd_dim: GRAPH_DIM,
            wp_dim: TITLE_DIM,
            seed: 0,
        }
    }
}

/// Generated resources plus the raw material needed to write them out.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub resources: Resources,
    pub aoa_ratings: Vec<(String, f64)>,
    pub pageview_cache: PageviewCache,
    /// Difficulty level per concept id.
    pub levels: BTreeMap<String, usize>,
}

/// Where [`SyntheticCorpus::write`] put each file.
#[derive(Debug, Clone)]
pub struct SyntheticPaths {
    pub dataset: PathBuf,
    pub aoa: PathBuf,
    pub pageviews: PathBuf,
    pub mapping: PathBuf,
    pub wd: PathBuf,
    pub wp: PathBuf,
}

const CONSONANTS: &[u8] = b"bcdfglmnprstv";
const VOWELS: &[u8] = b"aeiou";
const TIERS: usize = 3;
const WORDS_PER_TIER: usize = 30;

fn syllables<R: Rng>(rng: &mut R, n: usize) -> String {
    let mut s = String::with_capacity(2 * n);
    for _ in 0..n {
        s.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
        s.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
    }
    s
}

/// Distinct pseudo-words of `n` syllables not already in `taken`.
fn fresh_words<R: Rng>(rng: &mut R, n: usize, count: usize, taken: &mut HashSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = syllables(rng, n);
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Irwin-Hall approximation is plenty for fixtures
    (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0
}

struct Draft {
    concept: Concept,
    level: usize,
    mentions: BTreeSet<usize>,
}

fn check(config: &SyntheticConfig) -> Result<()> {
    let bad = |m: &str| Err(Error::Config(format!("synthetic corpus: {m}")));
    if config.levels < 2 {
        return bad("need at least two levels");
    }
    if config.concepts_per_domain < 2 * config.levels {
        return bad("need at least two concepts per level");
    }
    if !(0.0..=1.0).contains(&config.correlation) {
        return bad("correlation must lie in [0, 1]");
    }
    if !(config.positive_fraction > 0.0 && config.positive_fraction < 1.0) {
        return bad("positive fraction must lie in (0, 1)");
    }
    let n = config.concepts_per_domain;
    if config.train_pairs_per_domain + config.test_pairs_per_domain > n * (n - 1) / 4 {
        return bad("too many pairs for the number of concepts");
    }
    Ok(())
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    check(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut taken = HashSet::new();

    let tiers: Vec<Vec<String>> = (0..TIERS).map(|_| fresh_words(&mut rng, 2, WORDS_PER_TIER, &mut taken)).collect();
    let mut aoa_ratings = Vec::new();
    for (t, words) in tiers.iter().enumerate() {
        for w in words {
            aoa_ratings.push((w.clone(), 4.0 + 3.0 * t as f64 + 0.5 * gaussian(&mut rng)));
        }
    }
    // a few late outliers exercise the fences
    aoa_ratings.push((tiers[TIERS - 1][0].clone(), 30.0));

    let top = (config.levels - 1) as f64;
    let mut drafts: Vec<Draft> = Vec::new();
    let mut domain_pairs: BTreeMap<Domain, Vec<(usize, usize, u8)>> = BTreeMap::new();
    for domain in Domain::ALL {
        let names = fresh_words(&mut rng, 3, config.concepts_per_domain, &mut taken);
        let base = drafts.len();
        for (i, name) in names.into_iter().enumerate() {
            drafts.push(Draft {
                concept: Concept {
                    id: format!("{}{:03}", domain.short().to_lowercase(), i),
                    title: format!("Concetto {name}"),
                    domain,
                    description: String::new(),
                },
                level: i % config.levels,
                mentions: BTreeSet::new(),
            });
        }
        let members: Vec<usize> = (base..drafts.len()).collect();
        domain_pairs.insert(domain, sample_pairs(&mut rng, &drafts, &members, config)?);
    }

    // plant mentions: label XOR flip, with a fixed number of flips per domain
    let flip_rate = (1.0 - config.correlation) / 2.0;
    for pairs in domain_pairs.values() {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.shuffle(&mut rng);
        let flips: HashSet<usize> = order[..(flip_rate * pairs.len() as f64).round() as usize].iter().copied().collect();
        for (k, &(a, b, label)) in pairs.iter().enumerate() {
            if (label == 1) != flips.contains(&k) {
                drafts[a].mentions.insert(b);
            }
        }
    }

    let titles: Vec<String> = drafts.iter().map(|d| d.concept.title.clone()).collect();
    for d in &mut drafts {
        let hard_share = d.level as f64 / top;
        let n_words = 6 + 5 * d.level + rng.random_range(0..3);
        let mut words: Vec<String> = (0..n_words)
            .map(|_| {
                let u: f64 = rng.random();
                let tier = if u < 0.7 * hard_share {
                    2
                } else if u < 0.7 * hard_share + 0.3 {
                    1
                } else {
                    0
                };
                tiers[tier][rng.random_range(0..WORDS_PER_TIER)].clone()
            })
            .collect();
        words.extend((0..d.level).map(|k| format!("formula_{k}")));
        words.shuffle(&mut rng);
        let mut text = format!("{} è {}.", d.concept.title, words.join(" "));
        for &m in &d.mentions {
            text.push_str(&format!(" Si veda {}.", titles[m]));
        }
        d.concept.description = text;
    }

    let window = PageviewWindow::default();
    let mut cache = PageviewCache::new();
    let mut mapping = ConceptMapping::new();
    let mut wd = EmbeddingStore::new(config.wd_dim);
    let mut wp = EmbeddingStore::new(config.wp_dim);
    let level_axis = |dim: usize, j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 } / (dim as f64).sqrt();
    for (i, d) in drafts.iter().enumerate() {
        let base = 4000.0 * (-0.7 * d.level as f64).exp();
        let daily = ["20190901", "20200101", "20200831"]
            .into_iter()
            .map(|day| (day.to_string(), (base * (1.0 + 0.2 * gaussian(&mut rng))).max(1.0) as u64))
            .collect();
        cache.insert(PageviewSeries {
            title: d.concept.title.clone(),
            window: window.clone(),
            daily,
        });
        // every 37th concept has no Wikidata item
        let qid = (i % 37 != 36).then(|| format!("Q{}", 1000 + i));
        mapping.insert(&d.concept.id, &d.concept.title, qid.as_deref())?;
        let lv = d.level as f64 / top - 0.5;
        let dom = d.concept.domain.index() as f64;
        if let Some(q) = &qid {
            let v = (0..config.wd_dim)
                .map(|j| (3.0 * lv * level_axis(config.wd_dim, j) + 0.05 * dom + 0.3 * gaussian(&mut rng)) as f32)
                .collect();
            wd.insert(q, v)?;
        }
        let v = (0..config.wp_dim)
            .map(|j| (2.0 * lv * level_axis(config.wp_dim, j) + 0.4 * gaussian(&mut rng)) as f32)
            .collect();
        wp.insert(&d.concept.title, v)?;
    }

    let registry = ConceptRegistry::from_concepts(drafts.iter().map(|d| d.concept.clone()))?;
    let mut domains = BTreeMap::new();
    for (domain, pairs) in domain_pairs {
        let mut labeled: Vec<LabeledPair> = pairs
            .iter()
            .map(|&(a, b, label)| LabeledPair {
                a: drafts[a].concept.id.clone(),
                b: drafts[b].concept.id.clone(),
                label,
                domain,
            })
            .collect();
        let test = labeled.split_off(config.train_pairs_per_domain);
        domains.insert(domain, DomainPairs { train: labeled, test });
    }
    let corpus = Corpus { registry, domains };
    corpus.validate()?;

    let lexicon = AoaLexicon::from_ratings(aoa_ratings.iter().map(|(w, v)| (w.as_str(), *v)))?;
    let pageviews = PageviewTable::build(titles.iter().map(String::as_str), &window, &mut cache, None)?;
    let mut resources = Resources::new(corpus, Some(lexicon));
    resources.pageviews = Some(pageviews);
    resources.mapping = Some(mapping);
    resources.wd = Some(wd);
    resources.wp = Some(wp);
    Ok(SyntheticCorpus {
        resources,
        aoa_ratings,
        pageview_cache: cache,
        levels: drafts.iter().map(|d| (d.concept.id.clone(), d.level)).collect(),
    })
}

/// Distinct ordered pairs; train and test are drawn together and split
/// afterwards, each part keeping the positive fraction.
fn sample_pairs<R: Rng>(
    rng: &mut R,
    drafts: &[Draft],
    members: &[usize],
    config: &SyntheticConfig,
) -> Result<Vec<(usize, usize, u8)>> {
    let mut seen = HashSet::new();
    let mut draw = |rng: &mut R, n: usize, positive: bool| {
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n {
            attempts += 1;
            if attempts > 1000 * (n + 1) {
                return Err(Error::Config("synthetic corpus: could not draw enough distinct pairs".into()));
            }
            let a = members[rng.random_range(0..members.len())];
            let b = members[rng.random_range(0..members.len())];
            let (la, lb) = (drafts[a].level, drafts[b].level);
            let ok = a != b
                && if positive {
                    lb < la
                } else {
                    // mostly non-decreasing levels, some arbitrary
                    lb >= la || rng.random::<f64>() < 0.3
                };
            if ok && seen.insert((a, b)) {
                out.push((a, b, u8::from(positive)));
            }
        }
        Ok(out)
    };
    let mut parts = Vec::new();
    for n in [config.train_pairs_per_domain, config.test_pairs_per_domain] {
        let pos = (config.positive_fraction * n as f64).round() as usize;
        let mut part = draw(rng, pos, true)?;
        part.extend(draw(rng, n - pos, false)?);
        part.shuffle(rng);
        parts.extend(part);
    }
    Ok(parts)
}

impl SyntheticCorpus {
    /// Writes the dataset directory and every resource file under `dir`.
    pub fn write(&self, dir: &Path) -> Result<SyntheticPaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = SyntheticPaths {
            dataset: dir.join("dataset"),
            aoa: dir.join("aoa.tsv"),
            pageviews: dir.join("pageviews.json"),
            mapping: dir.join("mapping.tsv"),
            wd: dir.join("wikidata.tsv"),
            wp: dir.join("wikipedia.txt"),
        };
        let r = &self.resources;
        r.corpus.write_dir(&paths.dataset)?;
        let mut aoa = String::from("word\taoa\n");
        for (w, v) in &self.aoa_ratings {
            aoa.push_str(&format!("{w}\t{v}\n"));
        }
        std::fs::write(&paths.aoa, aoa).map_err(|e| Error::io(&paths.aoa, e))?;
        self.pageview_cache.save(&paths.pageviews)?;
        let missing = |what: &str| Error::MissingResource(what.to_string());
        r.mapping.as_ref().ok_or_else(|| missing("mapping"))?.write_tsv(&paths.mapping)?;
        r.wd.as_ref().ok_or_else(|| missing("wd"))?.write_tsv(&paths.wd)?;
        r.wp.as_ref().ok_or_else(|| missing("wp"))?.write_text(&paths.wp)?;
        Ok(paths)
    }
}
