//! Pretrained entity vectors: Wikipedia-title vectors (word2vec text format)
//! and Wikidata-entity vectors (TSV).
//!
//! Stores are filtered to the experiment vocabulary at load time. Unknown
//! keys map to the zero vector and are counted.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

pub const TITLE_DIM: usize = 100;
pub const GRAPH_DIM: usize = 200;

const ENTITY_PREFIX: &str = "ENTITY/";

#[derive(Debug)]
pub struct EmbeddingStore {
    dim: usize,
    table: HashMap<String, Vec<f32>>,
    folded: HashMap<String, String>,
    zero: Vec<f32>,
    lookups: AtomicU64,
    misses: AtomicU64,
}

impl Clone for EmbeddingStore {
    fn clone(&self) -> Self {
        EmbeddingStore {
            dim: self.dim,
            table: self.table.clone(),
            folded: self.folded.clone(),
            zero: self.zero.clone(),
            lookups: AtomicU64::new(self.lookups.load(Ordering::Relaxed)),
            misses: AtomicU64::new(self.misses.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for EmbeddingStore {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.table == other.table
    }
}

fn fold(key: &str) -> String {
    key.replace('_', " ").to_lowercase()
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        EmbeddingStore {
            dim,
            table: HashMap::new(),
            folded: HashMap::new(),
            zero: vec![0.0; dim],
            lookups: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// Fails on a wrong vector length or a repeated key.
    pub fn insert(&mut self, key: &str, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if self.table.contains_key(key) {
            return Err(Error::Config(format!("duplicate embedding key `{key}`")));
        }
        let folded = fold(key);
        match self.folded.get(&folded) {
            Some(existing) if existing.as_str() <= key => {}
            _ => {
                self.folded.insert(folded, key.to_string());
            }
        }
        self.table.insert(key.to_string(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    fn record(&self, hit: bool) {
        self.lookups.fetch_add(1, Ordering::Relaxed);
        if !hit {
            self.misses.fetch_add(1, Ordering::Relaxed);
        }
    }

    /// Exact-key lookup; the zero vector when absent.
    pub fn lookup(&self, key: &str) -> &[f32] {
        let found = self.table.get(key);
        self.record(found.is_some());
        found.map_or(&self.zero, Vec::as_slice)
    }

    fn find_title(&self, title: &str) -> Option<&Vec<f32>> {
        self.table
            .get(title)
            .or_else(|| self.table.get(&title.replace(' ', "_")))
            .or_else(|| self.table.get(&title.replace('_', " ")))
            .or_else(|| self.folded.get(&fold(title)).and_then(|k| self.table.get(k)))
    }

    /// Tries the exact title, then the space/underscore variant, then the
    /// case-folded form.
    pub fn lookup_title(&self, title: &str) -> &[f32] {
        let found = self.find_title(title);
        self.record(found.is_some());
        found.map_or(&self.zero, Vec::as_slice)
    }

    pub fn contains_title(&self, title: &str) -> bool {
        self.find_title(title).is_some()
    }

    /// `(lookups, misses)` since load.
    pub fn oov_stats(&self) -> (u64, u64) {
        (self.lookups.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    fn sorted_keys(&self) -> Vec<&String> {
        let mut keys: Vec<&String> = self.table.keys().collect();
        keys.sort();
        keys
    }

    /// `<key><TAB>v1<TAB>...`, keys sorted.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        for key in self.sorted_keys() {
            let mut line = key.clone();
            for v in &self.table[key] {
                line.push('\t');
                line.push_str(&v.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// word2vec text format: `<count> <dim>` header, then space-separated rows.
    pub fn write_text(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        let mut buf = format!("{} {}\n", self.len(), self.dim);
        for key in self.sorted_keys() {
            buf.push_str(&key.replace(' ', "_"));
            for v in &self.table[key] {
                buf.push(' ');
                buf.push_str(&v.to_string());
            }
            buf.push('\n');
        }
        out.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }
}

fn parse_floats<'a>(parts: impl Iterator<Item = &'a str>, path: &Path, lineno: usize) -> Result<Vec<f32>> {
    parts
        .map(|p| {
            p.parse::<f32>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, lineno, format!("invalid vector component `{p}`")))
        })
        .collect()
}

/// Loads word2vec-style text vectors, keeping keys whose folded form matches
/// a folded title in `filter` (all keys when `None`). `ENTITY/` prefixes are
/// stripped; entity rows win over plain word rows with the same title.
pub fn load_title_embeddings(path: &Path, filter: Option<&HashSet<String>>, dim: usize) -> Result<EmbeddingStore> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing `<count> <dim>` header"))?
        .map_err(|e| Error::io(path, e))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::parse(path, 1, "malformed header")))
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(Error::parse(path, 1, "expected `<count> <dim>` header"));
    }
    if dims[1] != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: dims[1],
        });
    }
    let wanted: Option<HashSet<String>> = filter.map(|f| f.iter().map(|t| fold(t)).collect());

    let mut entities: HashMap<String, Vec<f32>> = HashMap::new();
    let mut words: HashMap<String, Vec<f32>> = HashMap::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() < dim + 1 {
            return Err(Error::parse(path, lineno, format!("expected a key and {dim} components, found {} fields", parts.len())));
        }
        let key = parts[..parts.len() - dim].join(" ");
        let (key, is_entity) = match key.strip_prefix(ENTITY_PREFIX) {
            Some(k) => (k.to_string(), true),
            None => (key, false),
        };
        if let Some(w) = &wanted {
            if !w.contains(&fold(&key)) {
                continue;
            }
        }
        let vector = parse_floats(parts[parts.len() - dim..].iter().copied(), path, lineno)?;
        let target = if is_entity { &mut entities } else { &mut words };
        if target.insert(key.clone(), vector).is_some() {
            return Err(Error::parse(path, lineno, format!("duplicate key `{key}`")));
        }
    }
    let mut store = EmbeddingStore::new(dim);
    for (key, v) in entities {
        words.remove(&key);
        store.insert(&key, v)?;
    }
    for (key, v) in words {
        store.insert(&key, v)?;
    }
    Ok(store)
}

/// Bare QID from keys like `<http://www.wikidata.org/entity/Q42>`.
pub fn normalize_entity_key(raw: &str) -> Option<String> {
    let key = raw.trim().trim_start_matches('<').trim_end_matches('>');
    let tail = key.rsplit('/').next()?;
    let ok = tail.len() > 1 && tail.starts_with('Q') && tail[1..].bytes().all(|b| b.is_ascii_digit());
    ok.then(|| tail.to_string())
}

/// Loads `<entity><TAB>v1..vdim` rows keyed by bare QID, keeping only
/// `filter` when given. Non-item keys (properties, literals) are skipped.
pub fn load_graph_embeddings(path: &Path, filter: Option<&HashSet<String>>, dim: usize) -> Result<EmbeddingStore> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut store = EmbeddingStore::new(dim);
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            continue;
        }
        let arity = line.split('\t').count();
        if lineno == 1 && arity == 2 && line.split('\t').all(|t| t.trim().parse::<u64>().is_ok()) {
            let declared: usize = line.split('\t').nth(1).unwrap_or_default().trim().parse().unwrap_or(0);
            if declared != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: declared,
                });
            }
            continue;
        }
        if arity != dim + 1 {
            return Err(Error::parse(path, lineno, format!("expected {} fields, found {arity}", dim + 1)));
        }
        let mut parts = line.split('\t');
        let raw_key = parts.next().unwrap_or_default();
        let Some(qid) = normalize_entity_key(raw_key) else {
            continue;
        };
        if filter.is_some_and(|f| !f.contains(&qid)) {
            continue;
        }
        let vector = parse_floats(parts, path, lineno)?;
        store
            .insert(&qid, vector)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
    }
    Ok(store)
}

/// `lookup(a) ++ lookup(b)` widened to `f64`.
pub fn pair_embedding(store: &EmbeddingStore, a: &str, b: &str) -> Vec<f64> {
    store
        .lookup(a)
        .iter()
        .chain(store.lookup(b))
        .map(|&v| f64::from(v))
        .collect()
}
