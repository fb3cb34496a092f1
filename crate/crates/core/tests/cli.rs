mod common;

use std::path::Path;
use std::process::{Command, Output};

use prelearn::corpus::Domain;
use prelearn::eval::REPORT_HEADER;
use prelearn::forest::TrainedModel;
use prelearn::synthetic::{generate, SyntheticConfig, SyntheticPaths};
use tempfile::TempDir;

fn corpus(dir: &Path) -> SyntheticPaths {
    let config = SyntheticConfig {
        concepts_per_domain: 24,
        train_pairs_per_domain: 50,
        test_pairs_per_domain: 24,
        seed: 3,
        ..SyntheticConfig::default()
    };
    generate(&config).unwrap().write(dir).unwrap()
}

fn prelearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prelearn"))
        .args(args)
        .env("PRELEARN_PAGEVIEWS_API", "http://127.0.0.1:9")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn evaluate(paths: &SyntheticPaths, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "evaluate",
        "--data",
        s(&paths.dataset),
        "--aoa",
        s(&paths.aoa),
        "--pageviews",
        s(&paths.pageviews),
        "--offline",
        "--out",
        s(out),
    ];
    args.extend_from_slice(extra);
    prelearn(&args)
}

#[test]
fn evaluate_writes_report_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let paths = corpus(&tmp.path().join("data"));
    let flags = ["--system", "complex", "--scenario", "in-domain", "--seed", "7", "--trees", "50"];
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&evaluate(&paths, &a, &flags));
    ok(&evaluate(&paths, &b, &flags));

    let csv = std::fs::read_to_string(a.join("report.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(b.join("report.csv")).unwrap());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], REPORT_HEADER.join(","));
    assert_eq!(lines.len(), 6);
    let f1 = |line: &str| line.split(',').nth(4).unwrap().parse::<f64>().unwrap();
    let mean = lines[1..5].iter().map(|l| f1(l)).sum::<f64>() / 4.0;
    assert!(lines[5].contains(",AVG,"));
    assert!((f1(lines[5]) - mean).abs() < 1e-5);
    for name in ["report.txt", "manifest.json"] {
        assert!(a.join(name).exists(), "{name}");
    }
    for d in Domain::ALL {
        assert!(a.join("predictions").join(format!("{}.csv", d.slug())).exists());
    }
}

#[test]
fn italian_bert_scores_prediction_files() {
    let tmp = TempDir::new().unwrap();
    let paths = corpus(&tmp.path().join("data"));
    let forest = tmp.path().join("forest");
    ok(&evaluate(&paths, &forest, &["--system", "complex", "--trees", "30"]));

    let bert = tmp.path().join("bert");
    let preds = forest.join("predictions");
    let out = prelearn(&[
        "evaluate",
        "--system",
        "italian-bert",
        "--data",
        s(&paths.dataset),
        "--predictions",
        s(&preds),
        "--out",
        s(&bert),
    ]);
    ok(&out);
    // same predictions, same scores: only the system column differs
    let strip = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(1);
                f.remove(1);
                f.join(",")
            })
            .collect()
    };
    assert_eq!(strip(&forest.join("report.csv")), strip(&bert.join("report.csv")));
}

#[test]
fn offline_cache_miss_names_the_title() {
    let tmp = TempDir::new().unwrap();
    let paths = corpus(&tmp.path().join("data"));
    let cold = tmp.path().join("cold.json");
    let out = prelearn(&[
        "evaluate",
        "--data",
        s(&paths.dataset),
        "--aoa",
        s(&paths.aoa),
        "--pageviews",
        s(&cold),
        "--offline",
        "--out",
        s(&tmp.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Concetto "), "{stderr}");
    assert!(!cold.exists());
}

#[test]
fn usage_errors_exit_two() {
    let out = prelearn(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(prelearn(&["evaluate", "--bogus"]).status.code(), Some(2));
}

#[test]
fn train_saves_a_loadable_model() {
    let tmp = TempDir::new().unwrap();
    let paths = corpus(&tmp.path().join("data"));
    let model = tmp.path().join("model.txt");
    let out = prelearn(&[
        "train",
        "--system",
        "complex+wd",
        "--scenario",
        "cross-domain",
        "--domain",
        "geometry",
        "--data",
        s(&paths.dataset),
        "--aoa",
        s(&paths.aoa),
        "--pageviews",
        s(&paths.pageviews),
        "--mapping",
        s(&paths.mapping),
        "--wd",
        s(&paths.wd),
        "--offline",
        "--trees",
        "20",
        "--out",
        s(&model),
    ]);
    ok(&out);
    let loaded = TrainedModel::load(&model).unwrap();
    assert_eq!(loaded.forest.trees().len(), 20);
    assert_eq!(loaded.feature_names.len(), 416);
    assert!(tmp.path().join("model.manifest.json").exists());
}

#[test]
fn features_csv_has_one_column_per_feature() {
    let tmp = TempDir::new().unwrap();
    let paths = corpus(&tmp.path().join("data"));
    let csv = tmp.path().join("features.csv");
    ok(&prelearn(&[
        "features",
        "--data",
        s(&paths.dataset),
        "--aoa",
        s(&paths.aoa),
        "--pageviews",
        s(&paths.pageviews),
        "--offline",
        "--domain",
        "physics",
        "--out",
        s(&csv),
    ]));
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let width = reader.headers().unwrap().len();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 74);
    assert!(rows.iter().all(|r| r.len() == width));
    // 20 features plus the pair and label columns
    assert_eq!(width, 23);
}

#[test]
fn ablate_runs_the_whole_grid() {
    let tmp = TempDir::new().unwrap();
    let paths = corpus(&tmp.path().join("data"));
    let out = tmp.path().join("ablation");
    let run = prelearn(&[
        "ablate",
        "--mode",
        "cv",
        "--folds",
        "3",
        "--trees",
        "10",
        "--data",
        s(&paths.dataset),
        "--aoa",
        s(&paths.aoa),
        "--pageviews",
        s(&paths.pageviews),
        "--mapping",
        s(&paths.mapping),
        "--wd",
        s(&paths.wd),
        "--wp",
        s(&paths.wp),
        "--offline",
        "--out",
        s(&out),
    ]);
    ok(&run);
    assert!(String::from_utf8_lossy(&run.stdout).contains("12 runs"));
    let csv = std::fs::read_to_string(out.join("ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12 * 5);
    assert!(out.join("ablation.txt").exists());
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = TempDir::new().unwrap();
    let paths = corpus(&tmp.path().join("data"));
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "data = {:?}\naoa = {:?}\npageviews = {:?}\noffline = true\nscenario = \"cross-domain\"\ntrees = 15\nseed = 4\n",
            s(&paths.dataset),
            s(&paths.aoa),
            s(&paths.pageviews)
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let run = prelearn(&["evaluate", "--config", s(&config), "--out", s(&out)]);
    ok(&run);
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.starts_with("cross-domain,") && l.ends_with(",4")), "{csv}");
}

#[test]
fn fetch_pageviews_fills_the_cache() {
    let tmp = TempDir::new().unwrap();
    let paths = corpus(&tmp.path().join("data"));
    let server = common::StubServer::start(|_| (200, common::pageview_body("x", &[("20200101", 5)])));
    let cache = tmp.path().join("cache.json");
    let out = Command::new(env!("CARGO_BIN_EXE_prelearn"))
        .args(["fetch-pageviews", "--data", s(&paths.dataset), "--pageviews", s(&cache)])
        .env("PRELEARN_PAGEVIEWS_API", &server.base_url)
        .output()
        .unwrap();
    ok(&out);
    let n = server.requests().len();
    assert_eq!(n, 4 * 24);
    // second run is served entirely from the cache
    let again = Command::new(env!("CARGO_BIN_EXE_prelearn"))
        .args(["fetch-pageviews", "--offline", "--data", s(&paths.dataset), "--pageviews", s(&cache)])
        .output()
        .unwrap();
    ok(&again);
    assert_eq!(server.requests().len(), n);
}
