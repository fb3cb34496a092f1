//! Age-of-acquisition scores: lexicon statistics, outlier fences and the
//! per-concept complexity profile computed from a description.

use prelearn::features::FeatureExtractor;
use prelearn::features::FeatureConfig;
use prelearn::lexres::{concept_aoa, AoaLexicon};
use prelearn::synthetic::{generate, SyntheticConfig};
use prelearn::textprep::{preprocess, tokenize};

fn main() -> prelearn::Result<()> {
    let lexicon = AoaLexicon::from_ratings([
        ("casa", 2.1),
        ("numero", 4.0),
        ("lato", 5.5),
        ("angolo", 6.2),
        ("triangolo", 6.8),
        ("ipotenusa", 11.9),
        ("teorema", 12.5),
        ("isomorfismo", 19.0),
    ])?;
    let stats = lexicon.stats();
    let (lo, hi) = stats.fences();
    println!("lexicon: {} words, mean {:.2}, fences [{lo:.2}, {hi:.2}]", lexicon.len(), stats.mean);

    let text = preprocess("Il teorema lega l'ipotenusa ai due lati di un triangolo, e ogni lato è un numero");
    let tokens = tokenize(&text);
    let score = concept_aoa(&tokens, &lexicon);
    println!("description AoA {:.3} from {} matched tokens", score.geometric_mean, score.matches);

    let data = generate(&SyntheticConfig::default())?;
    let extractor = FeatureExtractor::new(FeatureConfig::complex(), data.resources.deps()?)?;
    let concept = data.resources.corpus.registry.concepts()[0].clone();
    if let Some(p) = extractor.profile(&concept.id) {
        println!(
            "{} ({}): aoa {:.2}, {} words, {} formulas, {} related concepts with mean aoa {:.2}",
            concept.title, concept.id, p.aoa.geometric_mean, p.word_count, p.formula_count, p.related.count, p.related.mean_aoa
        );
    }
    Ok(())
}
