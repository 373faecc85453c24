//! Coreference data tooling for multiparty dialogue.
//!
//! Covers the path from source-language annotations to target-language
//! training data: document model and cluster building ([`model`]),
//! corpus formats ([`ingest`]), projection through word alignments and human
//! corrections ([`projection`]), merging of double annotation ([`merge`]),
//! scoring ([`metrics`]), baselines and transforms ([`analysis`]) and the
//! mention/antecedent training objective ([`loss`]).
//!
//! Metrics and loss are generic over the scalar type; the aliases below fix
//! the common choices.

pub mod analysis;
pub mod ingest;
pub mod loss;
pub mod merge;
pub mod metrics;
pub mod model;
pub mod num;
pub mod projection;
pub mod table;
pub mod unionfind;

pub use num_rational::Rational64;

/// Metric score in `f64`.
pub type Score = metrics::MetricScore<f64>;
/// Metric score in exact rationals.
pub type ExactScore = metrics::MetricScore<Rational64>;
/// Full evaluation bundle in `f64`.
pub type Evaluation = metrics::Evaluation<f64>;
/// Full evaluation bundle in exact rationals.
pub type ExactEvaluation = metrics::Evaluation<Rational64>;
/// Loss settings in `f64`.
pub type LossConfig = loss::LossConfig<f64>;
/// Loss settings in `f32`.
pub type LossConfig32 = loss::LossConfig<f32>;
