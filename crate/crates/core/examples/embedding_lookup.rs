//! Loading Wikidata and Wikipedia vectors restricted to a vocabulary, and
//! zero-vector fallback for concepts with no vector.

use std::collections::HashSet;

use prelearn::embeddings::{load_graph_embeddings, load_title_embeddings, pair_embedding};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let wd = dir.path().join("wikidata.tsv");
    std::fs::write(
        &wd,
        "<http://www.wikidata.org/entity/Q11518>\t0.1\t0.2\t0.3\n\
         <http://www.wikidata.org/entity/Q19821>\t0.4\t0.5\t0.6\n\
         <http://www.wikidata.org/entity/P31>\t9\t9\t9\n\
         <http://www.wikidata.org/entity/Q5>\t1\t1\t1\n",
    )
    ?;
    let wanted: HashSet<String> = ["Q11518", "Q19821"].iter().map(|s| s.to_string()).collect();
    let graph = load_graph_embeddings(&wd, Some(&wanted), 3)?;
    println!("kept {} of 4 Wikidata rows", graph.len());
    println!("Q11518 ++ Q19821 = {:?}", pair_embedding(&graph, "Q11518", "Q19821"));
    println!("unknown item -> {:?}", graph.lookup("Q999"));

    let wp = dir.path().join("wikipedia.txt");
    std::fs::write(&wp, "2 2\nENTITY/Teorema_di_Pitagora 0.5 -0.5\nipotenusa 0.25 0.75\n")
        ?;
    let titles = load_title_embeddings(&wp, None, 2)?;
    for title in ["Teorema di Pitagora", "Ipotenusa", "Cateto"] {
        println!("{title}: {:?} (known: {})", titles.lookup_title(title), titles.contains_title(title));
    }
    let (hits, misses) = titles.oov_stats();
    println!("lookups: {hits} hits, {misses} misses");
    Ok(())
}
