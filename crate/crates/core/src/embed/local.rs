use super::EmbeddingVector;
use crate::util::{fnv1a64, splitmix64};

/// Deterministic hashing embedder.
///
/// Lowercases and splits on non-alphanumeric characters; every token maps to
/// a seeded pseudo-random ±1 pattern of length `dimension`. Patterns are
/// summed and the result L2-normalised. Text without tokens embeds to zero.
pub fn local_embed(text: &str, dimension: usize, seed: u64) -> EmbeddingVector {
    assert!(dimension >= 1, "dimension must be positive");
    let mut acc = vec![0i64; dimension];
    let mut any = false;
    for token in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        any = true;
        let token = token.to_lowercase();
        let mut state = fnv1a64(token.as_bytes()) ^ seed.rotate_left(17);
        let mut bits = 0u64;
        for (i, slot) in acc.iter_mut().enumerate() {
            if i % 64 == 0 {
                bits = splitmix64(&mut state);
            }
            *slot += if bits & 1 == 1 { 1 } else { -1 };
            bits >>= 1;
        }
    }
    if !any {
        return EmbeddingVector::new(vec![0.0; dimension]).expect("finite");
    }
    let norm = acc.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
    let values = if norm == 0.0 { vec![0.0; dimension] } else { acc.iter().map(|&v| v as f64 / norm).collect() };
    EmbeddingVector::new(values).expect("finite")
}
