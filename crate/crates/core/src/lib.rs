//! Knowledge graph embedding on the n-dimensional torus (TorusE) together
//! with the TransE baseline it is compared against.
//!
//! The crate covers the whole pipeline: torus geometry ([`torus_math`]),
//! dataset loading and Bern negative sampling ([`kg_data`]), embedding
//! tables and scoring ([`model`]), margin-loss SGD ([`trainer`]), raw and
//! filtered link-prediction metrics ([`evaluator`]), the binary model format
//! ([`persist`]) and epoch timing ([`bench`]).

pub mod bench;
pub mod error;
pub mod evaluator;
pub mod kg_data;
pub mod model;
pub mod persist;
pub mod synthetic;
pub mod torus_math;
pub mod trainer;

pub use error::{Error, Result};
pub use evaluator::{evaluate, RankReport, RankResult};
pub use kg_data::{BernStats, Dataset, Position, Triple, Vocabulary};
pub use model::{EmbeddingModel, ModelKind, Scoring, TransENorm};
pub use torus_math::{ScoreKind, TorusPoint, WrappedDiff};
pub use trainer::{train, EpochStats, TrainConfig};
