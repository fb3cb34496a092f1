//! Pageview averages served from an on-disk cache, with the REST URL a live
//! fetch would use. Runs offline.

use std::collections::BTreeMap;

use prelearn::lexres::{PageviewCache, PageviewClient, PageviewSeries, PageviewTable, PageviewWindow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let window = PageviewWindow::default();
    let mut cache = PageviewCache::new();
    for (title, views) in [("Teorema di Pitagora", [120, 140, 95]), ("Ipotenusa", [30, 22, 41])] {
        let daily: BTreeMap<String, u64> = ["20191001", "20191002", "20191003"]
            .iter()
            .zip(views)
            .map(|(d, v)| (d.to_string(), v))
            .collect();
        cache.insert(PageviewSeries {
            title: title.into(),
            window: window.clone(),
            daily,
        });
    }
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("pageviews.json");
    cache.save(&path)?;

    let mut reloaded = PageviewCache::load(&path)?;
    let table = PageviewTable::build(["Teorema di Pitagora", "Ipotenusa"], &window, &mut reloaded, None)?;
    for title in ["Teorema di Pitagora", "Ipotenusa"] {
        println!("{title}: {:.2} views/day", table.get(title).unwrap_or(0.0));
    }
    match PageviewTable::build(["Cateto"], &window, &mut reloaded, None) {
        Ok(_) => println!("unexpected cache hit"),
        Err(e) => println!("offline miss: {e}"),
    }
    let client = PageviewClient::new("https://wikimedia.org/api/rest_v1")?;
    println!("live fetch would request {}", client.url("Teorema di Pitagora", &window));
    Ok(())
}
