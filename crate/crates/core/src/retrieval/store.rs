//! Exact-scan vector store. The corpus is a few hundred chunks, so a full
//! cosine scan is both fast and simple; no approximate indexing.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, RetrievalError};

/// Embeddings keyed by chunk id. All vectors share the same dimension count.
#[derive(Debug, Clone)]
pub struct VectorStore<F> {
    entries: Vec<(usize, EmbeddingVector<F>)>,
    provider_tag: String,
}

/// One persisted store entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreRecord<F> {
    pub id: usize,
    pub span: (usize, usize),
    pub vector: Vec<F>,
    pub text_digest: String,
}

/// A scored store entry, before chunk text is joined in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored<F> {
    pub chunk_id: usize,
    pub score: F,
}

impl<F: Float> VectorStore<F> {
    pub fn new(provider_tag: &str) -> Self {
        Self {
            entries: Vec::new(),
            provider_tag: provider_tag.to_string(),
        }
    }

    pub fn provider_tag(&self) -> &str {
        &self.provider_tag
    }

    pub fn push(
        &mut self,
        chunk_id: usize,
        vector: EmbeddingVector<F>,
    ) -> Result<(), RetrievalError> {
        if let Some(dims) = self.dims() {
            if vector.dims() != dims {
                return Err(RetrievalError::DimsMismatch {
                    store_dims: dims,
                    query_dims: vector.dims(),
                });
            }
        }
        if self.entries.iter().any(|(id, _)| *id == chunk_id) {
            return Err(RetrievalError::CorruptDb(format!(
                "duplicate chunk id {chunk_id}"
            )));
        }
        self.entries.push((chunk_id, vector));
        Ok(())
    }

    pub fn dims(&self) -> Option<usize> {
        self.entries.first().map(|(_, v)| v.dims())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &EmbeddingVector<F>)> {
        self.entries.iter().map(|(id, v)| (*id, v))
    }
}

/// Score every entry against the query by cosine similarity and return the
/// best `min(k, |store|)` results, ordered by score descending with ties
/// broken by chunk id ascending. A zero query or zero entry scores 0.
pub fn similarity_search<F: Float>(
    store: &VectorStore<F>,
    query: &EmbeddingVector<F>,
    k: usize,
) -> Result<Vec<Scored<F>>, RetrievalError> {
    if let Some(dims) = store.dims() {
        if query.dims() != dims {
            return Err(RetrievalError::DimsMismatch {
                store_dims: dims,
                query_dims: query.dims(),
            });
        }
    }
    let mut scored: Vec<Scored<F>> = store
        .entries
        .iter()
        .map(|(id, v)| Scored {
            chunk_id: *id,
            score: v.cosine(query),
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.chunk_id.cmp(&b.chunk_id))
    });
    scored.truncate(k);
    Ok(scored)
}
