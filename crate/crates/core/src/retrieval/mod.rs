//! Retrieval-augmented context: chunk the specification, embed chunks, and
//! answer top-k cosine-similarity queries.
//!
//! All vector math is generic over the scalar type through
//! [`num_traits::Float`], so stores can be built in `f32` or `f64`. The
//! pipeline uses the crate-level [`crate::Scalar`] alias.

mod chunk;
mod embed;
mod store;

pub use chunk::{chunk_text, Chunk};
pub use embed::{
    embed, EmbeddingProvider, EmbeddingVector, LocalHashEmbedder, RemoteEmbedder, LOCAL_HASH_DIMS,
};
pub use store::{similarity_search, Scored, StoreRecord, VectorStore};

use std::path::Path;

use num_traits::Float;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SpecIndex;
use crate::prompt::FeatureSpec;
use crate::util::{read_jsonl, sha256_hex, write_jsonl};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("invalid chunking parameters: {0}")]
    InvalidParams(String),
    #[error("embedding dimensions mismatch: store has {store_dims}, query has {query_dims}")]
    DimsMismatch {
        store_dims: usize,
        query_dims: usize,
    },
    #[error("embedding provider unreachable: {0}")]
    ProviderUnreachable(String),
    #[error("unknown section key: {0}")]
    UnknownKey(String),
    #[error("auth variable {0} is not set")]
    AuthMissing(String),
    #[error("retrieval database is inconsistent: {0}")]
    CorruptDb(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One search result with the chunk text joined in. Results are ordered by
/// score descending, ties broken by chunk id ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalResult<F> {
    pub chunk_id: usize,
    pub score: F,
    pub text: String,
}

/// How context is retrieved for a RAG prompt: exact section lookup through
/// the spec index, or chunk similarity search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RagMode {
    Manual,
    Similarity,
}

/// Where a piece of retrieved context came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProvenanceRef {
    Chunk(usize),
    Section(String),
}

/// Context assembled for one prompt, with provenance for every piece.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievedContext {
    pub text: String,
    pub provenance: Vec<ProvenanceRef>,
    /// Set when similarity mode ran against an empty store.
    pub empty_store: bool,
}

/// Chunks plus their embeddings, persisted as a pair of JSON-lines files
/// with a small metadata sidecar.
#[derive(Debug, Clone)]
pub struct RetrievalDb<F> {
    pub chunks: Vec<Chunk>,
    pub store: VectorStore<F>,
    pub meta: DbMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DbMeta {
    pub provider_tag: String,
    pub chunk_size: usize,
    pub overlap: usize,
    pub dims: usize,
    pub source_digest: String,
}

impl<F: Float> RetrievalDb<F> {
    /// Chunk and embed the source text with the given provider.
    pub fn build(
        source_text: &str,
        chunk_size: usize,
        overlap: usize,
        provider: &EmbeddingProvider,
    ) -> Result<Self, RetrievalError> {
        let chunks = chunk_text(source_text, chunk_size, overlap)?;
        let mut store = VectorStore::new(provider.tag());
        for chunk in &chunks {
            let vector = embed::<F>(&chunk.text, provider)?;
            store.push(chunk.id, vector)?;
        }
        let dims = store.dims().unwrap_or(0);
        Ok(Self {
            chunks,
            store,
            meta: DbMeta {
                provider_tag: provider.tag().to_string(),
                chunk_size,
                overlap,
                dims,
                source_digest: sha256_hex(source_text.as_bytes()),
            },
        })
    }

    /// Top-k search with chunk texts joined in.
    pub fn search(
        &self,
        query: &EmbeddingVector<F>,
        k: usize,
    ) -> Result<Vec<RetrievalResult<F>>, RetrievalError> {
        let scored = similarity_search(&self.store, query, k)?;
        Ok(scored
            .into_iter()
            .map(|s| RetrievalResult {
                chunk_id: s.chunk_id,
                score: s.score,
                text: self.chunks[s.chunk_id].text.clone(),
            })
            .collect())
    }
}

impl<F: Float + Serialize + DeserializeOwned> RetrievalDb<F> {
    pub fn save(&self, dir: &Path) -> Result<(), RetrievalError> {
        std::fs::create_dir_all(dir)?;
        write_jsonl(&dir.join("chunks.jsonl"), &self.chunks)?;
        let records: Vec<StoreRecord<F>> = self
            .store
            .entries()
            .map(|(id, v)| StoreRecord {
                id,
                span: self.chunks[id].span,
                vector: v.values().to_vec(),
                text_digest: sha256_hex(self.chunks[id].text.as_bytes()),
            })
            .collect();
        write_jsonl(&dir.join("store.jsonl"), &records)?;
        let meta = serde_json::to_vec_pretty(&self.meta)
            .map_err(|e| RetrievalError::CorruptDb(e.to_string()))?;
        std::fs::write(dir.join("meta.json"), meta)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, RetrievalError> {
        let chunks: Vec<Chunk> = read_jsonl(&dir.join("chunks.jsonl"))?;
        let records: Vec<StoreRecord<F>> = read_jsonl(&dir.join("store.jsonl"))?;
        let meta: DbMeta = serde_json::from_slice(&std::fs::read(dir.join("meta.json"))?)
            .map_err(|e| RetrievalError::CorruptDb(e.to_string()))?;
        if chunks.len() != records.len() {
            return Err(RetrievalError::CorruptDb(format!(
                "{} chunks but {} store records",
                chunks.len(),
                records.len()
            )));
        }
        let mut store = VectorStore::new(&meta.provider_tag);
        for (chunk, record) in chunks.iter().zip(&records) {
            if chunk.id != record.id {
                return Err(RetrievalError::CorruptDb(format!(
                    "chunk {} does not match store record {}",
                    chunk.id, record.id
                )));
            }
            store.push(record.id, EmbeddingVector::new(record.vector.clone()))?;
        }
        Ok(Self {
            chunks,
            store,
            meta,
        })
    }
}

/// Assemble the context block for one feature. Manual mode returns the exact
/// section body; similarity mode embeds the feature's prompt stem, searches,
/// and concatenates the top-k chunk texts separated by blank lines.
pub fn retrieve_context<F: Float>(
    index: &SpecIndex,
    db: &RetrievalDb<F>,
    provider: &EmbeddingProvider,
    feature: &FeatureSpec,
    mode: RagMode,
    k: usize,
) -> Result<RetrievedContext, RetrievalError> {
    match mode {
        RagMode::Manual => {
            let section = crate::corpus::lookup_section(index, &feature.section_key)
                .map_err(|_| RetrievalError::UnknownKey(feature.section_key.clone()))?;
            Ok(RetrievedContext {
                text: section.body.clone(),
                provenance: vec![ProvenanceRef::Section(section.key.clone())],
                empty_store: false,
            })
        }
        RagMode::Similarity => {
            if db.store.is_empty() {
                return Ok(RetrievedContext {
                    text: String::new(),
                    provenance: Vec::new(),
                    empty_store: true,
                });
            }
            let query = embed::<F>(&feature.prompt_stem(), provider)?;
            let hits = db.search(&query, k)?;
            let text = hits
                .iter()
                .map(|h| h.text.as_str())
                .collect::<Vec<_>>()
                .join("\n\n");
            Ok(RetrievedContext {
                text,
                provenance: hits
                    .into_iter()
                    .map(|h| ProvenanceRef::Chunk(h.chunk_id))
                    .collect(),
                empty_store: false,
            })
        }
    }
}
