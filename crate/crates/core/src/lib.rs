//! Build, run, and score compiler validation testsuites for directive-based
//! programming models (OpenACC-style) using LLM chat-completion endpoints.
//!
//! The pipeline stages map onto the modules of this crate:
//!
//! 1. [`corpus`] — ingest a ToC-structured specification text into a keyed
//!    section index (the "spec JSON").
//! 2. [`retrieval`] — chunk the specification, embed the chunks, and answer
//!    top-k cosine-similarity queries for retrieval-augmented prompts.
//! 3. [`prompt`] — enumerate features from the ToC, expand compute-construct
//!    permutations, and render the five prompt methods.
//! 4. [`gateway`] — send prompts to a chat-completion endpoint (or a
//!    deterministic replay store) and persist raw responses.
//! 5. [`extract`] — cut a compilable test out of raw model output, or label
//!    the output a parsing error.
//! 6. [`harness`] — compile and execute extracted tests under a compiler
//!    profile and classify each into parse/compile/runtime/pass.
//! 7. [`finetune`] — build prompt/completion fine-tuning datasets from a
//!    manually written testsuite.
//! 8. [`analytics`] — aggregate evaluation ledgers into report tables and
//!    summarize manual annotations.
//! 9. [`plan`] / [`pipeline`] — run-plan configuration, validation, and the
//!    end-to-end orchestrator behind the `suitegen run` subcommand.
//!
//! Vector math in [`retrieval`] is generic over the scalar type via
//! `num_traits::Float`; the [`Scalar`] alias fixes the precision used by the
//! pipeline itself.

pub mod analytics;
pub mod corpus;
pub mod extract;
pub mod finetune;
pub mod gateway;
pub mod harness;
pub mod lang;
pub mod pipeline;
pub mod plan;
pub mod prompt;
pub mod retrieval;
pub mod util;

/// Scalar type used for embeddings and similarity scores throughout the
/// pipeline. The retrieval math itself is generic; this alias pins the
/// precision of persisted stores.
pub type Scalar = f64;

/// Embedding vector at the pipeline's default precision.
pub type Embedding = retrieval::EmbeddingVector<Scalar>;

/// Vector store at the pipeline's default precision.
pub type Store = retrieval::VectorStore<Scalar>;

pub use lang::Language;
