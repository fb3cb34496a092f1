//! Normalization, tokenization, formula detection and title containment on
//! Italian Wikipedia snippets.

use prelearn::textprep::{contains_substring, count_formula_tokens, is_formula_token, preprocess, tokenize};

fn main() {
    let raw = "Il Teorema di Pitagora afferma che, in un triangolo rettangolo, formula_1 e quindi formula_2. L'ipotenusa è il lato più lungo.";
    let text = preprocess(raw);
    let tokens = tokenize(&text);
    println!("normalized: {}", text.as_str());
    println!("tokens ({}): {tokens:?}", tokens.len());
    let formulas: Vec<&&str> = tokens.iter().filter(|t| is_formula_token(t)).collect();
    println!("formula tokens ({}): {formulas:?}", count_formula_tokens(&tokens));

    for (a, b) in [("Triangolo", "Triangolo rettangolo"), ("Teorema di Pitagora", "Ipotenusa")] {
        let (na, nb) = (preprocess(a), preprocess(b));
        println!(
            "{a:?} in {b:?}: {}   {b:?} in {a:?}: {}",
            contains_substring(&na, &nb),
            contains_substring(&nb, &na)
        );
    }
}
