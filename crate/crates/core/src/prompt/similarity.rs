//! Bag-of-tokens cosine similarity and demonstration-example ordering.

use std::collections::HashMap;

use super::{Example, ExampleOrder};

/// Cosine similarity over lowercase alphanumeric token counts.
///
/// Tokens are maximal runs of ASCII alphanumerics; everything else is a
/// separator. An empty token vector on either side yields 0.
pub fn cosine_similarity(a: &str, b: &str) -> f64 {
    let va = token_counts(a);
    let vb = token_counts(b);
    if va.is_empty() || vb.is_empty() {
        return 0.0;
    }
    let dot: f64 = va
        .iter()
        .filter_map(|(tok, &ca)| vb.get(tok).map(|&cb| (ca * cb) as f64))
        .sum();
    let norm = |v: &HashMap<String, u64>| {
        v.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
    };
    dot / (norm(&va) * norm(&vb))
}

fn token_counts(text: &str) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for token in text
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        *counts.entry(token.to_ascii_lowercase()).or_insert(0) += 1;
    }
    counts
}

/// Order demonstration examples against the prompt's input text.
///
/// `Fixed` keeps template order. `SimilarFirst` sorts by descending
/// similarity (the most similar example ends up farthest from the input
/// block); `DissimilarFirst` sorts ascending (the most similar example is
/// adjacent to the input block). Ties keep template order.
pub fn order_examples(
    examples: &[Example],
    input_text: &str,
    policy: ExampleOrder,
) -> Vec<Example> {
    match policy {
        ExampleOrder::Fixed => examples.to_vec(),
        ExampleOrder::SimilarFirst | ExampleOrder::DissimilarFirst => {
            let mut scored: Vec<(usize, f64, &Example)> = examples
                .iter()
                .enumerate()
                .map(|(i, ex)| (i, cosine_similarity(&ex.input, input_text), ex))
                .collect();
            // Stable sort preserves template order among equal scores.
            match policy {
                ExampleOrder::SimilarFirst => {
                    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
                }
                ExampleOrder::DissimilarFirst => {
                    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
                }
                ExampleOrder::Fixed => unreachable!(),
            }
            scored.into_iter().map(|(_, _, ex)| ex.clone()).collect()
        }
    }
}
