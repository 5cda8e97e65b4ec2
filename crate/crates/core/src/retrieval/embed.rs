//! Embedding providers: a deterministic local hashing embedder and a remote
//! embedding endpoint.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::RetrievalError;

/// Bucket count of the local hashing embedder.
pub const LOCAL_HASH_DIMS: usize = 256;

/// A dense embedding. The scalar type is generic; vectors produced by the
/// local embedder are L2-normalized (or all-zero for empty text).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector<F> {
    values: Vec<F>,
}

impl<F: Float> EmbeddingVector<F> {
    pub fn new(values: Vec<F>) -> Self {
        Self { values }
    }

    pub fn zeros(dims: usize) -> Self {
        Self {
            values: vec![F::zero(); dims],
        }
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn l2_norm(&self) -> F {
        self.values
            .iter()
            .fold(F::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    /// Cosine similarity; zero whenever either vector has zero norm.
    pub fn cosine(&self, other: &Self) -> F {
        let dot = self
            .values
            .iter()
            .zip(&other.values)
            .fold(F::zero(), |acc, (&a, &b)| acc + a * b);
        let na = self.l2_norm();
        let nb = other.l2_norm();
        if na.is_zero() || nb.is_zero() {
            F::zero()
        } else {
            dot / (na * nb)
        }
    }
}

/// Which embedder backs the vector store.
#[derive(Debug, Clone)]
pub enum EmbeddingProvider {
    /// Deterministic offline embedder: lowercase, split on non-alphanumerics,
    /// hash each token into [`LOCAL_HASH_DIMS`] buckets, count, L2-normalize.
    LocalHash,
    Remote(RemoteEmbedder),
}

impl EmbeddingProvider {
    pub fn tag(&self) -> &str {
        match self {
            EmbeddingProvider::LocalHash => "local-hash",
            EmbeddingProvider::Remote(r) => &r.model,
        }
    }
}

/// Embed one text with the given provider.
pub fn embed<F: Float>(
    text: &str,
    provider: &EmbeddingProvider,
) -> Result<EmbeddingVector<F>, RetrievalError> {
    match provider {
        EmbeddingProvider::LocalHash => Ok(LocalHashEmbedder::embed(text)),
        EmbeddingProvider::Remote(remote) => {
            let raw = remote.embed_one(text)?;
            Ok(EmbeddingVector::new(
                raw.into_iter()
                    .map(|v| F::from(v).unwrap_or_else(F::zero))
                    .collect(),
            ))
        }
    }
}

/// Token-hashing embedder. Tokens are hashed with FNV-1a so vectors are
/// stable across runs, platforms, and toolchain versions.
pub struct LocalHashEmbedder;

impl LocalHashEmbedder {
    pub fn embed<F: Float>(text: &str) -> EmbeddingVector<F> {
        let mut counts = [0u64; LOCAL_HASH_DIMS];
        let lowered = text.to_lowercase();
        for token in lowered.split(|c: char| !c.is_alphanumeric()) {
            if token.is_empty() {
                continue;
            }
            let bucket = (fnv1a64(token.as_bytes()) % LOCAL_HASH_DIMS as u64) as usize;
            counts[bucket] += 1;
        }
        let mut vector = EmbeddingVector::new(
            counts
                .iter()
                .map(|&c| F::from(c).unwrap_or_else(F::zero))
                .collect(),
        );
        let norm = vector.l2_norm();
        if !norm.is_zero() {
            for v in &mut vector.values {
                *v = *v / norm;
            }
        }
        vector
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Remote embedding endpoint: POST `{input: [text], model}` and read
/// `{data: [{embedding: [...]}]}`. Bearer-token auth comes from the named
/// environment variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteEmbedder {
    pub base_url: String,
    pub model: String,
    pub auth_env_var: String,
    #[serde(default = "default_timeout_s")]
    pub request_timeout_s: u64,
}

fn default_timeout_s() -> u64 {
    60
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    input: Vec<&'a str>,
    model: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedDatum>,
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f64>,
}

impl RemoteEmbedder {
    fn embed_one(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let token = std::env::var(&self.auth_env_var)
            .map_err(|_| RetrievalError::AuthMissing(self.auth_env_var.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(self.request_timeout_s))
            .build()
            .map_err(|e| RetrievalError::ProviderUnreachable(e.to_string()))?;
        let response = client
            .post(&self.base_url)
            .bearer_auth(token)
            .json(&EmbedRequest {
                input: vec![text],
                model: &self.model,
            })
            .send()
            .map_err(|e| RetrievalError::ProviderUnreachable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(RetrievalError::ProviderUnreachable(format!(
                "endpoint returned {}",
                response.status()
            )));
        }
        let parsed: EmbedResponse = response
            .json()
            .map_err(|e| RetrievalError::ProviderUnreachable(e.to_string()))?;
        parsed
            .data
            .into_iter()
            .next()
            .map(|d| d.embedding)
            .ok_or_else(|| {
                RetrievalError::ProviderUnreachable("empty embedding response".to_string())
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_tokens_normalize_to_the_same_vector() {
        let a = LocalHashEmbedder::embed::<f64>("abc abc");
        let b = LocalHashEmbedder::embed::<f64>("abc");
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn empty_text_is_the_zero_vector() {
        let v = LocalHashEmbedder::embed::<f64>("");
        assert_eq!(v.dims(), LOCAL_HASH_DIMS);
        assert!(v.is_zero());
        // punctuation-only text has no tokens either
        assert!(LocalHashEmbedder::embed::<f64>(" ... !! ").is_zero());
    }

    #[test]
    fn nonempty_text_has_unit_norm() {
        let v = LocalHashEmbedder::embed::<f64>("the delete clause deallocates device memory");
        assert!((v.l2_norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn word_order_does_not_matter() {
        let a = LocalHashEmbedder::embed::<f64>("gang worker vector");
        let b = LocalHashEmbedder::embed::<f64>("vector gang worker");
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn case_and_separators_fold_together() {
        let a = LocalHashEmbedder::embed::<f64>("Num_Gangs");
        let b = LocalHashEmbedder::embed::<f64>("num gangs");
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn works_at_f32_precision_too() {
        let v = LocalHashEmbedder::embed::<f32>("kernels construct");
        assert!((v.l2_norm() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn auth_missing_is_reported_before_any_network_call() {
        let remote = RemoteEmbedder {
            base_url: "http://127.0.0.1:1/v1/embeddings".to_string(),
            model: "test-embedder".to_string(),
            auth_env_var: "SUITEGEN_TEST_UNSET_EMBED_VAR".to_string(),
            request_timeout_s: 1,
        };
        std::env::remove_var("SUITEGEN_TEST_UNSET_EMBED_VAR");
        let err = embed::<f64>("hi", &EmbeddingProvider::Remote(remote)).unwrap_err();
        assert!(matches!(err, RetrievalError::AuthMissing(_)));
    }
}
