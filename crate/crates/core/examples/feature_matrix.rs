//! Assemble the Complex and Complex+wd feature matrices for one domain and
//! write one of them as CSV.

use prelearn::corpus::{Domain, Scenario};
use prelearn::features::{FeatureConfig, FeatureExtractor};
use prelearn::synthetic::{generate, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&SyntheticConfig::default())?;
    let pairs = &data.resources.corpus.domain(Domain::Geometry)?.train;
    for config in [FeatureConfig::complex(), FeatureConfig::complex_wd()] {
        for scenario in [Scenario::InDomain, Scenario::CrossDomain] {
            let fc = config.for_scenario(scenario);
            let m = FeatureExtractor::new(fc, data.resources.deps()?)?.assemble_batch(pairs)?;
            println!("{scenario:<13} {:<40} {} x {}", m.layout_id, m.matrix.rows(), m.matrix.cols());
        }
    }

    let extractor = FeatureExtractor::new(FeatureConfig::complex(), data.resources.deps()?)?;
    let m = extractor.assemble_batch(pairs)?;
    for (name, value) in m.layout.iter().zip(m.matrix.row(0)) {
        println!("  {name:<22} {value:.4}");
    }
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("geometry.csv");
    m.write_csv(&path)?;
    let bytes = std::fs::metadata(&path)?.len();
    println!("wrote {} ({bytes} bytes)", path.display());
    Ok(())
}
