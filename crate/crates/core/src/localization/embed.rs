use super::{LocalizationError, SemanticSignature};

pub const DEFAULT_DIMENSION: usize = 256;
pub const DEFAULT_SEED: u64 = 0x5eed_7070;

/// Maps signatures to fixed-length vectors. Implementations must be
/// deterministic and return an all-zero vector for the empty signature.
pub trait EmbeddingProvider: Send + Sync {
    /// Identifies the model and its dimension; maps built with one
    /// provider refuse queries from another.
    fn provider_id(&self) -> String;
    fn dimension(&self) -> usize;
    fn embed(&self, sig: &SemanticSignature) -> Result<Vec<f32>, LocalizationError>;
}

/// Hashed bag of tokens. Each lowercase alphanumeric token adds one count
/// to a bucket chosen by seeded FNV-1a; each whole entry adds one more, so
/// recombining the same words into different labels still moves the vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedBagOfTokens {
    pub dimension: usize,
    pub seed: u64,
}

impl Default for HashedBagOfTokens {
    fn default() -> Self {
        Self { dimension: DEFAULT_DIMENSION, seed: DEFAULT_SEED }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes().iter().chain(bytes) {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl HashedBagOfTokens {
    pub fn new(dimension: usize, seed: u64) -> Result<Self, LocalizationError> {
        if dimension == 0 {
            return Err(LocalizationError::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { dimension, seed })
    }

    pub fn bucket(&self, feature: &str) -> usize {
        (fnv1a(self.seed, feature.as_bytes()) % self.dimension as u64) as usize
    }

    /// Hash features of a signature: word tokens, then "=entry" features.
    pub fn features(sig: &SemanticSignature) -> Vec<String> {
        let mut out = Vec::new();
        for e in &sig.entries {
            out.extend(e.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase));
        }
        out.extend(sig.entries.iter().map(|e| format!("={e}")));
        out
    }
}

impl EmbeddingProvider for HashedBagOfTokens {
    fn provider_id(&self) -> String {
        format!("hashed-bag-of-tokens/d{}/seed{:x}", self.dimension, self.seed)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, sig: &SemanticSignature) -> Result<Vec<f32>, LocalizationError> {
        let mut counts = vec![0f64; self.dimension];
        for f in Self::features(sig) {
            counts[self.bucket(&f)] += 1.0;
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(vec![0.0; self.dimension]);
        }
        Ok(counts.iter().map(|c| (c / norm) as f32).collect())
    }
}

/// Cosine similarity, or `None` if either side is the zero sentinel.
pub fn cosine(a: &[f32], b: &[f32]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (*x as f64, *y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    if a == b {
        return Some(1.0);
    }
    Some((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localization::build_signature;
    use crate::ingest::ProductLabel;

    fn sig(pairs: &[(&str, &str)]) -> SemanticSignature {
        let ls: Vec<ProductLabel> = pairs.iter().map(|(b, c)| ProductLabel::new("", b, "", c)).collect();
        build_signature(&ls)
    }

    #[test]
    fn identical_signatures_identical_vectors() {
        let p = HashedBagOfTokens::default();
        let a = p.embed(&sig(&[("Swad", "Lentils")])).unwrap();
        let b = p.embed(&sig(&[("swad", "lentils"), ("SWAD", "LENTILS")])).unwrap();
        assert_eq!(a, b);
        assert_eq!(cosine(&a, &b), Some(1.0));
        let n: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum();
        assert!((n - 1.0).abs() < 1e-6);
    }

    #[test]
    fn disjoint_tokens_are_orthogonal() {
        let p = HashedBagOfTokens::default();
        let s1 = sig(&[("Swad", "Lentils")]);
        let s2 = sig(&[("Laxmi", "Flour")]);
        // the fixture must not collide for the oracle to hold
        let b1: Vec<usize> = HashedBagOfTokens::features(&s1).iter().map(|f| p.bucket(f)).collect();
        let b2: Vec<usize> = HashedBagOfTokens::features(&s2).iter().map(|f| p.bucket(f)).collect();
        assert!(b1.iter().all(|b| !b2.contains(b)), "{b1:?} {b2:?}");
        let c = cosine(&p.embed(&s1).unwrap(), &p.embed(&s2).unwrap()).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn shared_vocabulary_raises_similarity() {
        let p = HashedBagOfTokens::default();
        let base = p.embed(&sig(&[("Swad", "Lentils"), ("Laxmi", "Flour")])).unwrap();
        let near = p.embed(&sig(&[("Swad", "Lentils"), ("Deep", "Snacks")])).unwrap();
        let far = p.embed(&sig(&[("Haldiram", "Sweets"), ("Deep", "Snacks")])).unwrap();
        assert!(cosine(&base, &near).unwrap() > cosine(&base, &far).unwrap());
    }

    #[test]
    fn recombined_words_differ() {
        let p = HashedBagOfTokens::default();
        let a = p.embed(&sig(&[("Swad", "Lentils"), ("Laxmi", "Flour")])).unwrap();
        let b = p.embed(&sig(&[("Swad", "Flour"), ("Laxmi", "Lentils")])).unwrap();
        assert!(cosine(&a, &b).unwrap() < 1.0);
    }

    #[test]
    fn empty_is_sentinel() {
        let p = HashedBagOfTokens::default();
        let z = p.embed(&SemanticSignature::default()).unwrap();
        assert_eq!(z.len(), DEFAULT_DIMENSION);
        assert!(z.iter().all(|x| *x == 0.0));
        assert_eq!(cosine(&z, &z), None);
        assert!(HashedBagOfTokens::new(0, 1).is_err());
    }

    #[test]
    fn provider_id_encodes_dimension_and_seed() {
        let a = HashedBagOfTokens::new(128, 1).unwrap().provider_id();
        let b = HashedBagOfTokens::new(256, 1).unwrap().provider_id();
        let c = HashedBagOfTokens::new(256, 2).unwrap().provider_id();
        assert!(a != b && b != c);
    }
}
