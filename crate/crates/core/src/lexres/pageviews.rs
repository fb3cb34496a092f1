//! Daily pageview counts from the Wikimedia REST API, with a JSON cache.
//!
//! The API reports per-day pageviews (agent class `user`), which is the
//! closest public quantity to daily unique visits.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAGEVIEWS_API_ENV: &str = "PRELEARN_PAGEVIEWS_API";
pub const DEFAULT_PAGEVIEWS_API: &str = "https://wikimedia.org/api/rest_v1";

const USER_AGENT: &str = concat!("prelearn/", env!("CARGO_PKG_VERSION"), " (research tooling)");

/// Inclusive `YYYYMMDD` date range.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PageviewWindow {
    pub start: String,
    pub end: String,
}

fn is_date(s: &str) -> bool {
    s.len() == 8 && s.bytes().all(|b| b.is_ascii_digit())
}

impl PageviewWindow {
    pub fn new(start: &str, end: &str) -> Result<Self> {
        if !is_date(start) || !is_date(end) {
            return Err(Error::Config(format!("window dates must be YYYYMMDD, got {start}..{end}")));
        }
        if start > end {
            return Err(Error::Config(format!("window start {start} is after end {end}")));
        }
        Ok(PageviewWindow {
            start: start.to_string(),
            end: end.to_string(),
        })
    }

    pub fn contains(&self, date: &str) -> bool {
        is_date(date) && self.start.as_str() <= date && date <= self.end.as_str()
    }
}

impl Default for PageviewWindow {
    /// The year preceding September 2020.
    fn default() -> Self {
        PageviewWindow {
            start: "20190901".into(),
            end: "20200831".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageviewSeries {
    pub title: String,
    pub window: PageviewWindow,
    /// `YYYYMMDD` → views.
    pub daily: BTreeMap<String, u64>,
}

impl PageviewSeries {
    /// Mean over the returned days; a series without days averages to 0.
    pub fn average(&self) -> f64 {
        if self.daily.is_empty() {
            return 0.0;
        }
        self.daily.values().map(|&v| v as f64).sum::<f64>() / self.daily.len() as f64
    }

    fn check_window(&self) -> Result<()> {
        match self.daily.keys().find(|d| !self.window.contains(d)) {
            Some(d) => Err(Error::Config(format!(
                "pageviews for `{}` contain {d} outside {}..{}",
                self.title, self.window.start, self.window.end
            ))),
            None => Ok(()),
        }
    }
}

pub trait PageviewSource {
    fn series(&self, title: &str, window: &PageviewWindow) -> Result<PageviewSeries>;
}

pub fn average_daily_views(title: &str, window: &PageviewWindow, source: &dyn PageviewSource) -> Result<f64> {
    Ok(source.series(title, window)?.average())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheEntry {
    window: [String; 2],
    daily: BTreeMap<String, u64>,
}

/// `{ "<title>": { "window": [start, end], "daily": { "YYYYMMDD": n } } }`
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PageviewCache {
    entries: BTreeMap<String, CacheEntry>,
}

impl PageviewCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cache: PageviewCache = serde_json::from_str(&text)?;
        for (title, entry) in &cache.entries {
            let window = PageviewWindow::new(&entry.window[0], &entry.window[1])?;
            PageviewSeries {
                title: title.clone(),
                window,
                daily: entry.daily.clone(),
            }
            .check_window()?;
        }
        Ok(cache)
    }

    /// Empty cache when `path` does not exist.
    pub fn load_or_default(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::new())
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn insert(&mut self, series: PageviewSeries) {
        self.entries.insert(
            series.title,
            CacheEntry {
                window: [series.window.start, series.window.end],
                daily: series.daily,
            },
        );
    }

    /// Cached series for `title`, only if it was fetched for `window`.
    pub fn get(&self, title: &str, window: &PageviewWindow) -> Option<PageviewSeries> {
        let entry = self.entries.get(title)?;
        if entry.window[0] != window.start || entry.window[1] != window.end {
            return None;
        }
        Some(PageviewSeries {
            title: title.to_string(),
            window: window.clone(),
            daily: entry.daily.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl PageviewSource for PageviewCache {
    fn series(&self, title: &str, window: &PageviewWindow) -> Result<PageviewSeries> {
        self.get(title, window).ok_or_else(|| Error::OfflineMiss(title.to_string()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

#[derive(Deserialize)]
struct ApiResponse {
    items: Vec<ApiItem>,
}

#[derive(Deserialize)]
struct ApiItem {
    timestamp: String,
    views: u64,
}

// path-segment encoding; `/` in titles must be escaped
const TITLE_ENCODE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'_').remove(b'-').remove(b'.').remove(b'~');

/// Blocking client for the per-article daily pageviews endpoint.
pub struct PageviewClient {
    http: reqwest::blocking::Client,
    base_url: String,
    project: String,
    retry: RetryPolicy,
}

impl PageviewClient {
    /// Base URL from `PRELEARN_PAGEVIEWS_API`, else the public endpoint.
    pub fn from_env() -> Result<Self> {
        let base = std::env::var(PAGEVIEWS_API_ENV).unwrap_or_else(|_| DEFAULT_PAGEVIEWS_API.to_string());
        Self::new(&base)
    }

    pub fn new(base_url: &str) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .user_agent(USER_AGENT)
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| Error::Http {
                target: base_url.to_string(),
                message: e.to_string(),
            })?;
        Ok(PageviewClient {
            http,
            base_url: base_url.trim_end_matches('/').to_string(),
            project: "it.wikipedia".into(),
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_project(mut self, project: &str) -> Self {
        self.project = project.to_string();
        self
    }

    pub fn url(&self, title: &str, window: &PageviewWindow) -> String {
        let article = title.trim().replace(' ', "_");
        format!(
            "{}/metrics/pageviews/per-article/{}/all-access/user/{}/daily/{}/{}",
            self.base_url,
            self.project,
            utf8_percent_encode(&article, TITLE_ENCODE),
            window.start,
            window.end
        )
    }

    fn fetch_once(&self, url: &str) -> std::result::Result<Option<ApiResponse>, (bool, String)> {
        let resp = self.http.get(url).send().map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        if status == reqwest::StatusCode::NOT_FOUND {
            return Ok(None);
        }
        if !status.is_success() {
            let retryable = status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS;
            return Err((retryable, format!("status {status}")));
        }
        resp.json::<ApiResponse>().map(Some).map_err(|e| (false, e.to_string()))
    }

    /// A 404 means the article has no recorded views in the window.
    pub fn fetch(&self, title: &str, window: &PageviewWindow) -> Result<PageviewSeries> {
        let url = self.url(title, window);
        let mut attempt = 0;
        let response = loop {
            match self.fetch_once(&url) {
                Ok(r) => break r,
                Err((retryable, message)) => {
                    if !retryable || attempt >= self.retry.max_retries {
                        return Err(Error::Http {
                            target: title.to_string(),
                            message,
                        });
                    }
                    let delay = self.retry.base_delay * 2u32.pow(attempt);
                    warn!("pageviews for `{title}`: {message}; retrying in {delay:?}");
                    thread::sleep(delay);
                    attempt += 1;
                }
            }
        };
        let mut daily = BTreeMap::new();
        for item in response.map(|r| r.items).unwrap_or_default() {
            let date = item.timestamp.get(..8).unwrap_or_default().to_string();
            if window.contains(&date) {
                *daily.entry(date).or_insert(0) += item.views;
            }
        }
        debug!("fetched {} days for `{title}`", daily.len());
        Ok(PageviewSeries {
            title: title.to_string(),
            window: window.clone(),
            daily,
        })
    }

    /// Fetches several titles with at most `concurrency` requests in flight.
    /// Results keep the order of `titles`.
    pub fn fetch_many(&self, titles: &[String], window: &PageviewWindow, concurrency: usize) -> Vec<Result<PageviewSeries>> {
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<PageviewSeries>>>> = Mutex::new((0..titles.len()).map(|_| None).collect());
        thread::scope(|s| {
            for _ in 0..concurrency.clamp(1, titles.len().max(1)) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= titles.len() {
                        break;
                    }
                    let r = self.fetch(&titles[i], window);
                    results.lock().unwrap()[i] = Some(r);
                });
            }
        });
        results
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|r| r.expect("every title is fetched"))
            .collect()
    }
}

impl PageviewSource for PageviewClient {
    fn series(&self, title: &str, window: &PageviewWindow) -> Result<PageviewSeries> {
        self.fetch(title, window)
    }
}

/// Average daily views per article title.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PageviewTable {
    averages: HashMap<String, f64>,
}

impl PageviewTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, title: &str, average: f64) {
        self.averages.insert(title.to_string(), average);
    }

    pub fn get(&self, title: &str) -> Option<f64> {
        self.averages.get(title).copied()
    }

    pub fn len(&self) -> usize {
        self.averages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.averages.is_empty()
    }

    /// Resolves every title from `cache`, fetching misses with `client` and
    /// storing them back. Without a client the first miss is an error.
    pub fn build<'a>(
        titles: impl IntoIterator<Item = &'a str>,
        window: &PageviewWindow,
        cache: &mut PageviewCache,
        client: Option<(&PageviewClient, usize)>,
    ) -> Result<Self> {
        let mut titles: Vec<&str> = titles.into_iter().collect();
        let mut seen = std::collections::HashSet::new();
        titles.retain(|t| seen.insert(*t));
        let missing: Vec<String> = titles
            .iter()
            .filter(|t| cache.get(t, window).is_none())
            .map(|t| t.to_string())
            .collect();
        if let Some(first) = missing.first() {
            let Some((client, concurrency)) = client else {
                return Err(Error::OfflineMiss(first.clone()));
            };
            for result in client.fetch_many(&missing, window, concurrency) {
                cache.insert(result?);
            }
        }
        let mut table = PageviewTable::new();
        for title in titles {
            table.insert(title, cache.series(title, window)?.average());
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(days: &[(&str, u64)]) -> PageviewSeries {
        PageviewSeries {
            title: "Seno".into(),
            window: PageviewWindow::new("20200101", "20201231").unwrap(),
            daily: days.iter().map(|(d, v)| (d.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn averages() {
        assert_eq!(series(&[("20200101", 10), ("20200102", 20), ("20200103", 30)]).average(), 20.0);
        assert_eq!(series(&[("20200101", 7)]).average(), 7.0);
        assert_eq!(series(&[]).average(), 0.0);
    }

    #[test]
    fn window_validation() {
        assert!(PageviewWindow::new("2020011", "20201231").is_err());
        assert!(PageviewWindow::new("20201231", "20200101").is_err());
        let w = PageviewWindow::default();
        assert!(w.contains("20200229") && !w.contains("20200901"));
    }

    #[test]
    fn cache_round_trip_and_offline_miss() {
        let s = series(&[("20200101", 10), ("20200102", 20)]);
        let mut cache = PageviewCache::new();
        cache.insert(s.clone());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        cache.save(&path).unwrap();
        let loaded = PageviewCache::load(&path).unwrap();
        assert_eq!(loaded.series("Seno", &s.window).unwrap(), s);
        assert_eq!(average_daily_views("Seno", &s.window, &loaded).unwrap(), 15.0);
        match loaded.series("Coseno", &s.window) {
            Err(Error::OfflineMiss(t)) => assert_eq!(t, "Coseno"),
            other => panic!("unexpected {other:?}"),
        }
        // a different window is a miss
        assert!(loaded.get("Seno", &PageviewWindow::default()).is_none());
    }

    #[test]
    fn cache_rejects_days_outside_window() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        fs::write(&path, r#"{"Seno": {"window": ["20200101", "20200131"], "daily": {"20200301": 4}}}"#).unwrap();
        assert!(PageviewCache::load(&path).is_err());
    }

    #[test]
    fn table_from_cache_names_first_missing_title() {
        let w = PageviewWindow::default();
        let mut cache = PageviewCache::new();
        cache.insert(PageviewSeries {
            title: "Seno".into(),
            window: w.clone(),
            daily: [("20200101".to_string(), 4)].into(),
        });
        let table = PageviewTable::build(["Seno", "Seno"], &w, &mut cache, None).unwrap();
        assert_eq!(table.get("Seno"), Some(4.0));
        match PageviewTable::build(["Seno", "Tangente", "Coseno"], &w, &mut cache, None) {
            Err(Error::OfflineMiss(t)) => assert_eq!(t, "Tangente"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn url_encodes_titles() {
        let client = PageviewClient::new("http://localhost:1/api/").unwrap();
        let url = client.url("Teorema di Pitagora", &PageviewWindow::default());
        assert_eq!(
            url,
            "http://localhost:1/api/metrics/pageviews/per-article/it.wikipedia/all-access/user/Teorema_di_Pitagora/daily/20190901/20200831"
        );
        assert!(client.url("AC/DC", &PageviewWindow::default()).contains("AC%2FDC"));
        assert!(client.url("Città", &PageviewWindow::default()).contains("Citt%C3%A0"));
    }
}
