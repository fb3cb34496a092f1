//! Concept id → (Wikipedia title, Wikidata QID), optionally resolved
//! through a SPARQL endpoint.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const SPARQL_ENDPOINT_ENV: &str = "PRELEARN_SPARQL_ENDPOINT";
pub const DEFAULT_SPARQL_ENDPOINT: &str = "https://query.wikidata.org/sparql";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingEntry {
    pub title: String,
    /// `None` when no Wikidata item is known for the title.
    pub qid: Option<String>,
}

fn is_qid(s: &str) -> bool {
    s.len() > 1 && s.starts_with('Q') && s[1..].bytes().all(|b| b.is_ascii_digit())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptMapping {
    entries: BTreeMap<String, MappingEntry>,
}

impl ConceptMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, concept_id: &str, title: &str, qid: Option<&str>) -> Result<()> {
        if let Some(q) = qid {
            if !is_qid(q) {
                return Err(Error::Config(format!("malformed Wikidata id `{q}` for `{concept_id}`")));
            }
        }
        self.entries.insert(
            concept_id.to_string(),
            MappingEntry {
                title: title.to_string(),
                qid: qid.map(str::to_string),
            },
        );
        Ok(())
    }

    pub fn get(&self, concept_id: &str) -> Option<&MappingEntry> {
        self.entries.get(concept_id)
    }

    pub fn qid(&self, concept_id: &str) -> Option<&str> {
        self.entries.get(concept_id)?.qid.as_deref()
    }

    /// Listed concepts without a QID.
    pub fn missing_qids(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(_, e)| e.qid.is_none())
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn resolvable(&self) -> usize {
        self.entries.values().filter(|e| e.qid.is_some()).count()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &MappingEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("concept_id\ttitle\tqid\n");
        for (id, e) in &self.entries {
            out.push_str(&format!("{id}\t{}\t{}\n", e.title, e.qid.as_deref().unwrap_or("")));
        }
        File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// Reads `concept_id<TAB>title<TAB>qid`; the qid column may be empty.
pub fn load_concept_mapping(path: &Path) -> Result<ConceptMapping> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut mapping = ConceptMapping::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || (lineno == 1 && line.starts_with("concept_id\t")) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::parse(path, lineno, "expected `concept_id<TAB>title<TAB>qid`"));
        }
        let qid = fields.get(2).map(|q| q.trim()).filter(|q| !q.is_empty());
        mapping
            .insert(fields[0], fields[1], qid)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
    }
    Ok(mapping)
}

#[derive(Deserialize)]
struct SparqlResponse {
    results: SparqlResults,
}

#[derive(Deserialize)]
struct SparqlResults {
    bindings: Vec<BTreeMap<String, SparqlValue>>,
}

#[derive(Deserialize)]
struct SparqlValue {
    value: String,
}

/// Looks up Wikidata items for Italian Wikipedia article titles.
pub struct SparqlClient {
    http: reqwest::blocking::Client,
    endpoint: String,
    site: String,
    lang: String,
    batch_size: usize,
}

impl SparqlClient {
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var(SPARQL_ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_SPARQL_ENDPOINT.to_string());
        Self::new(&endpoint)
    }

    pub fn new(endpoint: &str) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .user_agent(concat!("prelearn/", env!("CARGO_PKG_VERSION"), " (research tooling)"))
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Http {
                target: endpoint.to_string(),
                message: e.to_string(),
            })?;
        Ok(SparqlClient {
            http,
            endpoint: endpoint.to_string(),
            site: "https://it.wikipedia.org/".into(),
            lang: "it".into(),
            batch_size: 50,
        })
    }

    pub fn query_for(&self, titles: &[&str]) -> String {
        let values: Vec<String> = titles
            .iter()
            .map(|t| {
                let t = t.replace('_', " ").replace('\\', "\\\\").replace('"', "\\\"");
                format!("\"{t}\"@{}", self.lang)
            })
            .collect();
        format!(
            "PREFIX schema: <http://schema.org/>\n\
             SELECT ?title ?item WHERE {{\n  VALUES ?title {{ {} }}\n  \
             ?article schema:name ?title ;\n           schema:isPartOf <{}> ;\n           schema:about ?item .\n}}",
            values.join(" "),
            self.site
        )
    }

    /// Title → QID for every title the endpoint knows.
    pub fn lookup_titles(&self, titles: &[&str]) -> Result<BTreeMap<String, String>> {
        let mut found = BTreeMap::new();
        for chunk in titles.chunks(self.batch_size.max(1)) {
            let query = self.query_for(chunk);
            let resp = self
                .http
                .post(&self.endpoint)
                .header(reqwest::header::ACCEPT, "application/sparql-results+json")
                .form(&[("query", query.as_str())])
                .send()
                .and_then(|r| r.error_for_status())
                .map_err(|e| Error::Http {
                    target: self.endpoint.clone(),
                    message: e.to_string(),
                })?;
            let body: SparqlResponse = resp.json().map_err(|e| Error::Http {
                target: self.endpoint.clone(),
                message: e.to_string(),
            })?;
            for row in body.results.bindings {
                let (Some(title), Some(item)) = (row.get("title"), row.get("item")) else {
                    continue;
                };
                let qid = item.value.rsplit('/').next().unwrap_or_default();
                if is_qid(qid) {
                    found.insert(title.value.clone(), qid.to_string());
                }
            }
        }
        Ok(found)
    }

    /// Mapping for `(concept_id, title)` pairs; unknown titles get no QID.
    pub fn fetch_mapping<'a>(&self, concepts: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<ConceptMapping> {
        let concepts: Vec<(&str, &str)> = concepts.into_iter().collect();
        let titles: Vec<&str> = concepts.iter().map(|(_, t)| *t).collect();
        let found = self.lookup_titles(&titles)?;
        let mut mapping = ConceptMapping::new();
        for (id, title) in concepts {
            let qid = found.get(&title.replace('_', " ")).map(String::as_str);
            mapping.insert(id, title, qid)?;
        }
        Ok(mapping)
    }
}
