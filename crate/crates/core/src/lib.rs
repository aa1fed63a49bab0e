//! # sprint
//!
//! Question-conditioned attention-head pruning.
//!
//! Pruning a single attention head can turn a wrong answer into a right
//! one, and which head helps depends on the question. This crate learns,
//! from a binary outcome matrix (question x pruned head), an embedding per
//! head and a linear encoder for questions so that the heads whose pruning
//! solves a question sit close to it. At inference the nearest `N` heads
//! become `N` candidate model variants, scored with Pass@N.
//!
//! | module          | what it holds |
//! |-----------------|---------------|
//! | [`attention`]   | multi-head attention with head pruning, two equivalent implementations |
//! | [`outcomes`]    | outcome CSV, head catalog, agreement similarity, gain statistics |
//! | [`features`]    | precomputed question feature vectors (JSONL) |
//! | [`trainer`]     | contrastive objective, analytic gradients, optimizers, training loop |
//! | [`model_file`]  | `SPRINTM1` model container |
//! | [`selector`]    | nearest-embedding head ranking |
//! | [`eval`]        | Pass@N, greedy head pool, policy evaluation |
//! | [`synth`]       | clustered synthetic data with a known answer |
//! | [`cli`]         | the `sprint` command line |
//!
//! The `examples/` directory has one runnable program per capability.

pub mod attention;
pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod manifest;
pub mod model_file;
pub mod outcomes;
pub mod seed;
pub mod selector;
pub mod synth;
pub mod trainer;

pub use error::{Result, SprintError};
pub use eval::{evaluate, greedy_head_ranking, pass_at_n, DrawMode, EvalReport, GreedyRule, Policy};
pub use features::QuestionFeatures;
pub use model_file::{load_model, save_model};
pub use outcomes::{gain_stats, load_outcomes, partition_sets, similarity, GroupBy, HeadCatalog, OutcomeMatrix};
pub use selector::{select, select_top_n, SelectionResult};
pub use synth::{generate_synthetic, SynthSpec, SyntheticData};
pub use trainer::{train, OptimizerKind, TrainConfig, TrainedModel};
