//! Per-pair feature vectors.
//!
//! Layout, in order:
//!
//! | block | slots |
//! |---|---|
//! | concept A complexity | `aoa_gm, aoa_matches, related_aoa_mean, related_count, desc_words, formula_count[, page_view]` |
//! | concept B complexity | same as A |
//! | concept-to-concept | `a_in_b, b_in_a` |
//! | domain one-hot | `DM, Geo, Phy, Prec` (in-domain only) |
//! | Wikidata vectors | `A[200] ++ B[200]` |
//! | Wikipedia title vectors | `A[100] ++ B[100]` |

mod normalize;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Concept, ConceptRegistry, Domain, LabeledPair, Scenario};
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::lexres::{concept_aoa, AoaLexicon, AoaScore, ConceptMapping, PageviewTable};
use crate::matrix::Matrix;
use crate::textprep::{contains_substring, count_formula_tokens, preprocess, tokenize, NormalizedText};

pub use normalize::Normalizer;

const COMPLEXITY_SLOTS: [&str; 6] = [
    "aoa_gm",
    "aoa_matches",
    "related_aoa_mean",
    "related_count",
    "desc_words",
    "formula_count",
];
const DOMAIN_SLOTS: [&str; 4] = ["domain_dm", "domain_geo", "domain_phy", "domain_prec"];

/// Which feature families are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Per-concept complexity slots plus the two substring slots.
    pub complexity: bool,
    pub page_view: bool,
    pub domain_onehot: bool,
    pub wd_embedding: bool,
    pub wp_embedding: bool,
    pub wd_dim: usize,
    pub wp_dim: usize,
}

impl FeatureConfig {
    const EMPTY: FeatureConfig = FeatureConfig {
        complexity: false,
        page_view: false,
        domain_onehot: false,
        wd_embedding: false,
        wp_embedding: false,
        wd_dim: crate::embeddings::GRAPH_DIM,
        wp_dim: crate::embeddings::TITLE_DIM,
    };

    /// Complexity, page views, substrings and the domain one-hot.
    pub fn complex() -> Self {
        FeatureConfig {
            complexity: true,
            page_view: true,
            domain_onehot: true,
            ..Self::EMPTY
        }
    }

    /// [`FeatureConfig::complex`] plus the Wikidata vectors of both concepts.
    pub fn complex_wd() -> Self {
        FeatureConfig {
            wd_embedding: true,
            ..Self::complex()
        }
    }

    /// Complexity without page views.
    pub fn complexity_only() -> Self {
        FeatureConfig {
            complexity: true,
            domain_onehot: true,
            ..Self::EMPTY
        }
    }

    pub fn wd_only() -> Self {
        FeatureConfig {
            wd_embedding: true,
            ..Self::EMPTY
        }
    }

    pub fn wp_only() -> Self {
        FeatureConfig {
            wp_embedding: true,
            ..Self::EMPTY
        }
    }

    pub fn wd_wp() -> Self {
        FeatureConfig {
            wd_embedding: true,
            wp_embedding: true,
            ..Self::EMPTY
        }
    }

    /// Cross-domain runs never carry the domain one-hot.
    pub fn for_scenario(mut self, scenario: Scenario) -> Self {
        if scenario == Scenario::CrossDomain {
            self.domain_onehot = false;
        }
        self
    }

    /// Ablation-table label, e.g. `complexity +page_view +wd_embedding`.
    pub fn name(&self) -> String {
        let mut parts = Vec::new();
        if self.complexity {
            parts.push("complexity");
        }
        if self.page_view {
            parts.push("page_view");
        }
        match (self.wd_embedding, self.wp_embedding) {
            (true, true) => parts.push("wd+wp_embedding"),
            (true, false) => parts.push("wd_embedding"),
            (false, true) => parts.push("wp_embedding"),
            (false, false) => {}
        }
        parts.join(" +")
    }

    /// Stable identifier of the slot layout.
    pub fn layout_id(&self) -> String {
        let mut id = self.name().replace(' ', "");
        if self.domain_onehot {
            id.push_str("+domain");
        }
        format!("{id}/{}", self.len())
    }

    pub fn per_concept_complexity(&self) -> usize {
        if self.complexity {
            COMPLEXITY_SLOTS.len() + usize::from(self.page_view)
        } else {
            usize::from(self.page_view)
        }
    }

    pub fn len(&self) -> usize {
        2 * self.per_concept_complexity()
            + if self.complexity { 2 } else { 0 }
            + if self.domain_onehot { DOMAIN_SLOTS.len() } else { 0 }
            + if self.wd_embedding { 2 * self.wd_dim } else { 0 }
            + if self.wp_embedding { 2 * self.wp_dim } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slot names in layout order.
    pub fn layout(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.len());
        for side in ["a", "b"] {
            if self.complexity {
                names.extend(COMPLEXITY_SLOTS.iter().map(|s| format!("{side}_{s}")));
            }
            if self.page_view {
                names.push(format!("{side}_page_view"));
            }
        }
        if self.complexity {
            names.push("a_in_b".into());
            names.push("b_in_a".into());
        }
        if self.domain_onehot {
            names.extend(DOMAIN_SLOTS.iter().map(|s| s.to_string()));
        }
        if self.wd_embedding {
            for side in ["a", "b"] {
                names.extend((0..self.wd_dim).map(|i| format!("{side}_wd_{i}")));
            }
        }
        if self.wp_embedding {
            for side in ["a", "b"] {
                names.extend((0..self.wp_dim).map(|i| format!("{side}_wp_{i}")));
            }
        }
        names
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Resources feature assembly reads from.
#[derive(Clone, Copy)]
pub struct FeatureDeps<'a> {
    pub registry: &'a ConceptRegistry,
    pub lexicon: &'a AoaLexicon,
    pub pageviews: Option<&'a PageviewTable>,
    pub mapping: Option<&'a ConceptMapping>,
    pub wd: Option<&'a EmbeddingStore>,
    pub wp: Option<&'a EmbeddingStore>,
}

impl<'a> FeatureDeps<'a> {
    pub fn new(registry: &'a ConceptRegistry, lexicon: &'a AoaLexicon) -> Self {
        FeatureDeps {
            registry,
            lexicon,
            pageviews: None,
            mapping: None,
            wd: None,
            wp: None,
        }
    }

    /// Fails naming the first resource `config` needs but is absent.
    pub fn check(&self, config: &FeatureConfig) -> Result<()> {
        if config.page_view && self.pageviews.is_none() {
            return Err(Error::MissingResource("pageview statistics".into()));
        }
        if config.wd_embedding {
            if self.mapping.is_none() {
                return Err(Error::MissingResource("concept → Wikidata mapping".into()));
            }
            match self.wd {
                None => return Err(Error::MissingResource("Wikidata embeddings".into())),
                Some(s) if s.dim() != config.wd_dim => {
                    return Err(Error::DimensionMismatch {
                        expected: config.wd_dim,
                        actual: s.dim(),
                    })
                }
                _ => {}
            }
        }
        if config.wp_embedding {
            match self.wp {
                None => return Err(Error::MissingResource("Wikipedia title embeddings".into())),
                Some(s) if s.dim() != config.wp_dim => {
                    return Err(Error::DimensionMismatch {
                        expected: config.wp_dim,
                        actual: s.dim(),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Mean AoA of the concepts mentioned in a description, and their number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelatedStats {
    pub mean_aoa: f64,
    pub count: usize,
}

/// Normalized text and the per-concept features derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptProfile {
    pub title: NormalizedText,
    pub description: NormalizedText,
    pub aoa: AoaScore,
    pub related: RelatedStats,
    pub word_count: usize,
    pub formula_count: usize,
}

struct TextStats {
    title: NormalizedText,
    description: NormalizedText,
    aoa: AoaScore,
    word_count: usize,
    formula_count: usize,
}

fn text_stats(concept: &Concept, lexicon: &AoaLexicon) -> TextStats {
    let description = preprocess(&concept.description);
    let tokens = tokenize(&description);
    let aoa = concept_aoa(&tokens, lexicon);
    let word_count = tokens.len();
    let formula_count = count_formula_tokens(&tokens);
    TextStats {
        title: preprocess(&concept.title),
        description,
        aoa,
        word_count,
        formula_count,
    }
}

fn related_from(stats: &[TextStats], index: usize, lexicon: &AoaLexicon) -> RelatedStats {
    let me = &stats[index];
    let mut sum = 0.0;
    let mut count = 0;
    for (j, other) in stats.iter().enumerate() {
        if j != index && contains_substring(&other.title, &me.description) {
            sum += other.aoa.geometric_mean;
            count += 1;
        }
    }
    if count == 0 {
        RelatedStats {
            mean_aoa: lexicon.stats().mean,
            count: 0,
        }
    } else {
        RelatedStats {
            mean_aoa: sum / count as f64,
            count,
        }
    }
}

/// Related concepts are the other registry concepts whose normalized title
/// occurs in this concept's normalized description. Their AoA is each one's
/// own description AoA. None related → (lexicon mean, 0).
pub fn related_concept_stats(concept: &Concept, registry: &ConceptRegistry, lexicon: &AoaLexicon) -> RelatedStats {
    let mut stats: Vec<TextStats> = Vec::with_capacity(registry.len() + 1);
    stats.push(text_stats(concept, lexicon));
    stats.extend(registry.iter().filter(|c| c.id != concept.id).map(|c| text_stats(c, lexicon)));
    related_from(&stats, 0, lexicon)
}

/// Profiles of every registry concept, in registry order.
pub fn build_profiles(registry: &ConceptRegistry, lexicon: &AoaLexicon) -> Vec<ConceptProfile> {
    let stats: Vec<TextStats> = registry.iter().map(|c| text_stats(c, lexicon)).collect();
    let related: Vec<RelatedStats> = (0..stats.len()).map(|i| related_from(&stats, i, lexicon)).collect();
    stats
        .into_iter()
        .zip(related)
        .map(|(s, related)| ConceptProfile {
            title: s.title,
            description: s.description,
            aoa: s.aoa,
            related,
            word_count: s.word_count,
            formula_count: s.formula_count,
        })
        .collect()
}

fn page_view_of(concept: &Concept, pageviews: Option<&PageviewTable>) -> Result<f64> {
    let table = pageviews.ok_or_else(|| Error::MissingResource("pageview statistics".into()))?;
    table
        .get(&concept.title)
        .ok_or_else(|| Error::OfflineMiss(concept.title.clone()))
}

fn complexity_slots(profile: &ConceptProfile, page_view: Option<f64>) -> Vec<f64> {
    let mut v = vec![
        profile.aoa.geometric_mean,
        profile.aoa.matches as f64,
        profile.related.mean_aoa,
        profile.related.count as f64,
        profile.word_count as f64,
        profile.formula_count as f64,
    ];
    v.extend(page_view);
    v
}

/// `[aoa_gm, aoa_matches, related_aoa_mean, related_count, desc_words,
/// formula_count, page_view]`; the last slot only with `include_page_view`.
pub fn complexity_vector(concept: &Concept, deps: &FeatureDeps<'_>, include_page_view: bool) -> Result<Vec<f64>> {
    let stats = text_stats(concept, deps.lexicon);
    let related = related_concept_stats(concept, deps.registry, deps.lexicon);
    let profile = ConceptProfile {
        title: stats.title,
        description: stats.description,
        aoa: stats.aoa,
        related,
        word_count: stats.word_count,
        formula_count: stats.formula_count,
    };
    let pv = if include_page_view {
        Some(page_view_of(concept, deps.pageviews)?)
    } else {
        None
    };
    Ok(complexity_slots(&profile, pv))
}

fn mentions(x_title: &NormalizedText, y_title: &NormalizedText, y_description: &NormalizedText) -> bool {
    contains_substring(x_title, y_title) || contains_substring(x_title, y_description)
}

fn domain_onehot(domain: Domain) -> [f64; 4] {
    let mut v = [0.0; 4];
    v[domain.index()] = 1.0;
    v
}

fn resolve<'r>(registry: &'r ConceptRegistry, id: &str) -> Result<&'r Concept> {
    registry.get(id).ok_or_else(|| Error::MissingIds(vec![id.to_string()]))
}

/// `[a_in_b, b_in_a]` then the pair-domain one-hot when requested. `x_in_y`
/// holds when x's title occurs in y's title or description.
pub fn pair_feature_vector(pair: &LabeledPair, registry: &ConceptRegistry, include_domain_onehot: bool) -> Result<Vec<f64>> {
    let a = resolve(registry, &pair.a)?;
    let b = resolve(registry, &pair.b)?;
    let (ta, da) = (preprocess(&a.title), preprocess(&a.description));
    let (tb, db) = (preprocess(&b.title), preprocess(&b.description));
    let mut v = vec![
        f64::from(u8::from(mentions(&ta, &tb, &db))),
        f64::from(u8::from(mentions(&tb, &ta, &da))),
    ];
    if include_domain_onehot {
        v.extend(domain_onehot(pair.domain));
    }
    Ok(v)
}

/// One assembled vector and the layout it follows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout_id: String,
}

/// Convenience single-pair assembly. Batch work should go through
/// [`FeatureExtractor`], which computes concept profiles once.
pub fn assemble_features(pair: &LabeledPair, config: &FeatureConfig, deps: &FeatureDeps<'_>) -> Result<FeatureVector> {
    let extractor = FeatureExtractor::new(*config, *deps)?;
    Ok(FeatureVector {
        values: extractor.assemble(pair)?,
        layout_id: config.layout_id(),
    })
}

/// Assembles vectors for many pairs against one registry.
pub struct FeatureExtractor<'a> {
    config: FeatureConfig,
    deps: FeatureDeps<'a>,
    profiles: Vec<ConceptProfile>,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(config: FeatureConfig, deps: FeatureDeps<'a>) -> Result<Self> {
        deps.check(&config)?;
        let profiles = if config.complexity {
            build_profiles(deps.registry, deps.lexicon)
        } else {
            Vec::new()
        };
        Ok(FeatureExtractor { config, deps, profiles })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn profile(&self, id: &str) -> Option<&ConceptProfile> {
        self.deps.registry.position(id).and_then(|i| self.profiles.get(i))
    }

    fn concept(&self, id: &str) -> Result<(usize, &'a Concept)> {
        let idx = self
            .deps
            .registry
            .position(id)
            .ok_or_else(|| Error::MissingIds(vec![id.to_string()]))?;
        Ok((idx, &self.deps.registry.concepts()[idx]))
    }

    fn wd_vector(&self, concept: &Concept, out: &mut Vec<f64>) {
        let (Some(store), Some(mapping)) = (self.deps.wd, self.deps.mapping) else {
            return;
        };
        let qid = mapping.qid(&concept.id).unwrap_or("");
        out.extend(store.lookup(qid).iter().map(|&v| f64::from(v)));
    }

    fn wp_vector(&self, concept: &Concept, out: &mut Vec<f64>) {
        let Some(store) = self.deps.wp else {
            return;
        };
        let title = self
            .deps
            .mapping
            .and_then(|m| m.get(&concept.id))
            .map_or(concept.title.as_str(), |e| e.title.as_str());
        out.extend(store.lookup_title(title).iter().map(|&v| f64::from(v)));
    }

    pub fn assemble(&self, pair: &LabeledPair) -> Result<Vec<f64>> {
        let cfg = &self.config;
        let (ia, a) = self.concept(&pair.a)?;
        let (ib, b) = self.concept(&pair.b)?;
        let mut v = Vec::with_capacity(cfg.len());
        for (idx, concept) in [(ia, a), (ib, b)] {
            let pv = if cfg.page_view {
                Some(page_view_of(concept, self.deps.pageviews)?)
            } else {
                None
            };
            if cfg.complexity {
                v.extend(complexity_slots(&self.profiles[idx], pv));
            } else {
                v.extend(pv);
            }
        }
        if cfg.complexity {
            let (pa, pb) = (&self.profiles[ia], &self.profiles[ib]);
            v.push(f64::from(u8::from(mentions(&pa.title, &pb.title, &pb.description))));
            v.push(f64::from(u8::from(mentions(&pb.title, &pa.title, &pa.description))));
        }
        if cfg.domain_onehot {
            v.extend(domain_onehot(pair.domain));
        }
        if cfg.wd_embedding {
            self.wd_vector(a, &mut v);
            self.wd_vector(b, &mut v);
        }
        if cfg.wp_embedding {
            self.wp_vector(a, &mut v);
            self.wp_vector(b, &mut v);
        }
        debug_assert_eq!(v.len(), cfg.len());
        Ok(v)
    }

    /// Assembles every pair; checks the fixed length and finiteness.
    pub fn assemble_batch(&self, pairs: &[LabeledPair]) -> Result<FeatureMatrix> {
        let width = self.config.len();
        let mut data = Vec::with_capacity(pairs.len() * width);
        for pair in pairs {
            let v = self.assemble(pair)?;
            if v.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    actual: v.len(),
                });
            }
            if let Some(j) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::Config(format!(
                    "non-finite value in slot {j} for pair ({}, {})",
                    pair.a, pair.b
                )));
            }
            data.extend(v);
        }
        Ok(FeatureMatrix {
            layout: self.config.layout(),
            layout_id: self.config.layout_id(),
            matrix: Matrix::from_vec(pairs.len(), width, data)?,
            pairs: pairs.iter().map(|p| (p.a.clone(), p.b.clone())).collect(),
            labels: pairs.iter().map(|p| p.label).collect(),
        })
    }
}

/// Assembled rows with their slot names and source pairs.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub layout: Vec<String>,
    pub layout_id: String,
    pub matrix: Matrix,
    pub pairs: Vec<(String, String)>,
    pub labels: Vec<u8>,
}

impl FeatureMatrix {
    /// `concept_a,concept_b,label,<slot>...`
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        let mut header = vec!["concept_a".to_string(), "concept_b".into(), "label".into()];
        header.extend(self.layout.iter().cloned());
        wtr.write_record(&header)?;
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            let mut rec = vec![a.clone(), b.clone(), self.labels[i].to_string()];
            rec.extend(self.matrix.row(i).iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Concept;
    use crate::lexres::PageviewTable;

    fn concept(id: &str, title: &str, domain: Domain, description: &str) -> Concept {
        Concept {
            id: id.into(),
            title: title.into(),
            domain,
            description: description.into(),
        }
    }

    fn fixture() -> (ConceptRegistry, AoaLexicon, PageviewTable) {
        let registry = ConceptRegistry::from_concepts([
            concept("c1", "Seno", Domain::Geometry, "Il seno è una funzione. formula_1"),
            concept("c2", "Coseno", Domain::Geometry, "Il coseno di un angolo e il seno."),
            concept("c3", "Teorema del seno", Domain::Geometry, "Il teorema lega seno e coseno: formula_2, formula_3."),
            concept("c4", "Angolo", Domain::Geometry, "Parte di piano."),
            concept("c5", "Forza", Domain::Physics, "Grandezza vettoriale che causa accelerazione."),
            concept("c6", "Vuoto", Domain::Physics, "x"),
        ])
        .unwrap();
        let lexicon = AoaLexicon::from_ratings([
            ("il", 3.0),
            ("funzione", 9.0),
            ("angolo", 7.0),
            ("piano", 5.0),
            ("parte", 4.0),
            ("teorema", 11.0),
            ("e", 2.5),
            ("di", 3.0),
            ("un", 2.0),
            ("forza", 6.0),
        ])
        .unwrap();
        let mut pv = PageviewTable::new();
        for (t, v) in [("Seno", 120.0), ("Coseno", 80.0), ("Teorema del seno", 15.5), ("Angolo", 60.0), ("Forza", 200.0), ("Vuoto", 1.0)] {
            pv.insert(t, v);
        }
        (registry, lexicon, pv)
    }

    #[test]
    fn layout_lengths() {
        let cases = [
            (FeatureConfig::complex(), Scenario::InDomain, 20),
            (FeatureConfig::complex(), Scenario::CrossDomain, 16),
            (FeatureConfig::complex_wd(), Scenario::InDomain, 420),
            (FeatureConfig::complex_wd(), Scenario::CrossDomain, 416),
            (FeatureConfig::complexity_only(), Scenario::InDomain, 18),
            (FeatureConfig::wd_wp(), Scenario::InDomain, 600),
        ];
        for (cfg, scenario, len) in cases {
            let cfg = cfg.for_scenario(scenario);
            assert_eq!(cfg.len(), len, "{}", cfg.layout_id());
            assert_eq!(cfg.layout().len(), len);
        }
        assert_eq!(FeatureConfig::complex_wd().name(), "complexity +page_view +wd_embedding");
        assert_eq!(&FeatureConfig::complex().layout()[13..16], &["b_page_view", "a_in_b", "b_in_a"]);
    }

    #[test]
    fn related_concepts_by_title_substring() {
        let (registry, lexicon, _) = fixture();
        let c3 = registry.get("c3").unwrap();
        let related = related_concept_stats(c3, &registry, &lexicon);
        // "seno" and "coseno" both occur in c3's description
        assert_eq!(related.count, 2);
        let aoa_of = |id: &str| {
            let desc = preprocess(&registry.get(id).unwrap().description);
            concept_aoa(&tokenize(&desc), &lexicon)
        };
        let (seno, coseno) = (aoa_of("c1"), aoa_of("c2"));
        assert!((related.mean_aoa - (seno.geometric_mean + coseno.geometric_mean) / 2.0).abs() < 1e-12);

        let c5 = registry.get("c5").unwrap();
        let none = related_concept_stats(c5, &registry, &lexicon);
        assert_eq!(none, RelatedStats { mean_aoa: lexicon.stats().mean, count: 0 });
    }

    #[test]
    fn related_stats_match_two_pass_brute_force() {
        let (registry, lexicon, _) = fixture();
        let profiles = build_profiles(&registry, &lexicon);
        for (i, c) in registry.iter().enumerate() {
            let desc = c.description.to_lowercase();
            let mut vals = Vec::new();
            for other in registry.iter().filter(|o| o.id != c.id) {
                if desc.contains(&other.title.to_lowercase()) {
                    let toks: Vec<String> = other
                        .description
                        .to_lowercase()
                        .split_whitespace()
                        .map(|t| t.trim_matches(|ch: char| !ch.is_alphanumeric() && ch != '_').to_string())
                        .collect();
                    let hits: Vec<f64> = toks.iter().filter_map(|t| lexicon.get(t)).map(|v| lexicon.clip(v)).collect();
                    vals.push(if hits.is_empty() {
                        lexicon.stats().mean
                    } else {
                        (hits.iter().map(|v| v.ln()).sum::<f64>() / hits.len() as f64).exp()
                    });
                }
            }
            let expected = if vals.is_empty() { lexicon.stats().mean } else { vals.iter().sum::<f64>() / vals.len() as f64 };
            assert_eq!(profiles[i].related.count, vals.len(), "{}", c.id);
            assert!((profiles[i].related.mean_aoa - expected).abs() < 1e-12, "{}", c.id);
            assert_eq!(related_concept_stats(c, &registry, &lexicon), profiles[i].related);
        }
    }

    #[test]
    fn complexity_vector_composes_operations() {
        let (registry, lexicon, pv) = fixture();
        let mut deps = FeatureDeps::new(&registry, &lexicon);
        deps.pageviews = Some(&pv);
        let c3 = registry.get("c3").unwrap();
        let v = complexity_vector(c3, &deps, true).unwrap();
        let desc = preprocess(&c3.description);
        let toks = tokenize(&desc);
        let aoa = concept_aoa(&toks, &lexicon);
        let related = related_concept_stats(c3, &registry, &lexicon);
        assert_eq!(
            v,
            vec![
                aoa.geometric_mean,
                aoa.matches as f64,
                related.mean_aoa,
                related.count as f64,
                toks.len() as f64,
                count_formula_tokens(&toks) as f64,
                15.5
            ]
        );
        assert_eq!(complexity_vector(c3, &deps, false).unwrap().len(), 6);
    }

    #[test]
    fn degenerate_and_identical_descriptions() {
        let (_, lexicon, _) = fixture();
        let registry = ConceptRegistry::from_concepts([
            concept("x", "Alfa", Domain::Physics, "  "),
            concept("y", "Beta", Domain::Physics, "il piano"),
            concept("z", "Gamma", Domain::Physics, "il piano"),
        ])
        .unwrap();
        let deps = FeatureDeps::new(&registry, &lexicon);
        let v = complexity_vector(registry.get("x").unwrap(), &deps, false).unwrap();
        let mean = lexicon.stats().mean;
        assert_eq!(v, vec![mean, 0.0, mean, 0.0, 0.0, 0.0]);
        assert_eq!(
            complexity_vector(registry.get("y").unwrap(), &deps, false).unwrap(),
            complexity_vector(registry.get("z").unwrap(), &deps, false).unwrap()
        );
        match complexity_vector(registry.get("y").unwrap(), &deps, true) {
            Err(Error::MissingResource(_)) => {}
            other => panic!("unexpected {other:?}"),
        }
        let empty = PageviewTable::new();
        let mut deps = deps;
        deps.pageviews = Some(&empty);
        match complexity_vector(registry.get("y").unwrap(), &deps, true) {
            Err(Error::OfflineMiss(t)) => assert_eq!(t, "Beta"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pair_features() {
        let (registry, ..) = fixture();
        let pair = |a: &str, b: &str, domain| LabeledPair { a: a.into(), b: b.into(), label: 1, domain };
        // "seno" occurs in the title "teorema del seno"
        assert_eq!(pair_feature_vector(&pair("c1", "c3", Domain::Geometry), &registry, false).unwrap()[0], 1.0);
        assert_eq!(pair_feature_vector(&pair("c4", "c5", Domain::Physics), &registry, false).unwrap(), vec![0.0, 0.0]);
        let v = pair_feature_vector(&pair("c4", "c5", Domain::Geometry), &registry, true).unwrap();
        assert_eq!(&v[2..], &[0.0, 1.0, 0.0, 0.0]);
        assert!(pair_feature_vector(&pair("c4", "nope", Domain::Geometry), &registry, true).is_err());
    }

    #[test]
    fn extractor_matches_single_pair_operations() {
        let (registry, lexicon, pv) = fixture();
        let mut deps = FeatureDeps::new(&registry, &lexicon);
        deps.pageviews = Some(&pv);
        let cfg = FeatureConfig::complex();
        let pair = LabeledPair { a: "c3".into(), b: "c1".into(), label: 1, domain: Domain::Geometry };
        let fv = assemble_features(&pair, &cfg, &deps).unwrap();
        let mut expected = complexity_vector(registry.get("c3").unwrap(), &deps, true).unwrap();
        expected.extend(complexity_vector(registry.get("c1").unwrap(), &deps, true).unwrap());
        expected.extend(pair_feature_vector(&pair, &registry, true).unwrap());
        assert_eq!(fv.values, expected);
        assert_eq!(fv.values.len(), 20);
        assert_eq!(fv.layout_id, cfg.layout_id());
    }

    #[test]
    fn embeddings_appended_with_zero_for_missing_qids() {
        let (registry, lexicon, pv) = fixture();
        let mut mapping = ConceptMapping::new();
        mapping.insert("c1", "Seno", Some("Q1")).unwrap();
        mapping.insert("c2", "Coseno", None).unwrap();
        let mut wd = EmbeddingStore::new(200);
        wd.insert("Q1", vec![0.5; 200]).unwrap();
        let mut deps = FeatureDeps::new(&registry, &lexicon);
        deps.pageviews = Some(&pv);
        assert!(matches!(
            FeatureExtractor::new(FeatureConfig::complex_wd(), deps),
            Err(Error::MissingResource(_))
        ));
        deps.mapping = Some(&mapping);
        deps.wd = Some(&wd);
        let ex = FeatureExtractor::new(FeatureConfig::complex_wd().for_scenario(Scenario::CrossDomain), deps).unwrap();
        let pairs = vec![LabeledPair { a: "c1".into(), b: "c2".into(), label: 0, domain: Domain::Geometry }];
        let fm = ex.assemble_batch(&pairs).unwrap();
        assert_eq!(fm.matrix.cols(), 416);
        let row = fm.matrix.row(0);
        assert!(row[16..216].iter().all(|&v| v == 0.5));
        assert!(row[216..].iter().all(|&v| v == 0.0));
        let f = tempfile::NamedTempFile::new().unwrap();
        fm.write_csv(f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert!(text.starts_with("concept_a,concept_b,label,a_aoa_gm,"));
        assert_eq!(text.lines().next().unwrap().split(',').count(), 419);
    }
}
