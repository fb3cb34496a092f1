//! External lexical and structured resources: age-of-acquisition norms,
//! Wikipedia pageview statistics and the concept → (title, Wikidata id) map.

mod aoa;
mod mapping;
mod pageviews;

pub use aoa::{concept_aoa, load_aoa_lexicon, quantile, AoaLexicon, AoaScore, LexiconStats};
pub use mapping::{load_concept_mapping, ConceptMapping, MappingEntry, SparqlClient, DEFAULT_SPARQL_ENDPOINT, SPARQL_ENDPOINT_ENV};
pub use pageviews::{
    average_daily_views, PageviewCache, PageviewClient, PageviewSeries, PageviewSource, PageviewTable, PageviewWindow,
    RetryPolicy, DEFAULT_PAGEVIEWS_API, PAGEVIEWS_API_ENV,
};
